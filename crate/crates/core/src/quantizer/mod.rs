//! K-means, product (PQ) and random product (RPQ) quantizers.
//!
//! A [`QuantizerModel`] pairs a [`SubspaceLayout`] with one K-means codebook
//! per sub-vector. Each frame encodes to `M` tokens; reconstruction averages,
//! per dimension, the centroid components of every sub-vector that contains
//! that dimension.

mod layout;
mod model;
mod persist;

pub use layout::{
    make_layout_contiguous, make_layout_random, project, sub_dim_for_alpha, LayoutKind,
    SubspaceLayout,
};
pub use model::{
    encode, encode_batch, quantization_error, reconstruct, train_quantizer, Method,
    QuantizerConfig, QuantizerModel, TrainMeta,
};
pub use persist::{
    load_model, load_model_from, model_file_len, save_model, save_model_to, MODEL_HEADER_LEN,
    MODEL_MAGIC, MODEL_VERSION,
};
