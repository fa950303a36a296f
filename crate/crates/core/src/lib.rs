//! Discretization of continuous feature sequences into token streams.
//!
//! The crate provides Lloyd K-means, product quantization (contiguous
//! sub-vectors) and random product quantization (randomly sampled, possibly
//! overlapping sub-vectors), the token post-processing used for single-stream
//! units (deduplication and pair merging), binary containers for features and
//! models, and Monte-Carlo checks of the RPQ error analysis.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the on-disk
//! formats store `f32`. Type aliases for both precisions are exported below.

pub mod error;
pub mod features;
pub mod kmeans;
pub mod quantizer;
pub mod scalar;
pub mod synth;
pub mod theory;
pub mod tokens;

pub use error::{Error, Result};
pub use features::{read_features, write_features};
pub use kmeans::{assign, assign_batch, inertia, train_kmeans, InitMethod, KmeansConfig, KmeansFitReport};
pub use quantizer::{
    encode, encode_batch, load_model, make_layout_contiguous, make_layout_random, project,
    quantization_error, reconstruct, save_model, train_quantizer, LayoutKind, Method,
    QuantizerConfig, SubspaceLayout,
};
pub use scalar::Scalar;
pub use synth::{generate_synthetic, SynthSpec};
pub use tokens::{apply_merges, dedup, stream_stats, train_merges, FrameCode, MergeTable, TokenStream};

pub type FeatureMatrix<T = f32> = features::FeatureMatrix<T>;
pub type Codebook<T = f32> = kmeans::Codebook<T>;
pub type QuantizerModel<T = f32> = quantizer::QuantizerModel<T>;

pub type FeatureMatrix32 = FeatureMatrix<f32>;
pub type FeatureMatrix64 = FeatureMatrix<f64>;
pub type Codebook32 = Codebook<f32>;
pub type Codebook64 = Codebook<f64>;
pub type QuantizerModel32 = QuantizerModel<f32>;
pub type QuantizerModel64 = QuantizerModel<f64>;
