use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::kmeans::{train_kmeans, Codebook, InitMethod, KmeansConfig, DEFAULT_CLUSTERS};
use crate::scalar::{squared_distance, Scalar};
use crate::tokens::{FrameCode, TokenStream};

use super::layout::{make_layout_contiguous, make_layout_random, LayoutKind, SubspaceLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Kmeans,
    Pq,
    Rpq,
}

impl Method {
    pub fn code(self) -> u8 {
        match self {
            Method::Kmeans => 0,
            Method::Pq => 1,
            Method::Rpq => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Method::Kmeans),
            1 => Ok(Method::Pq),
            2 => Ok(Method::Rpq),
            other => Err(Error::Format(format!("unknown quantizer kind {other}"))),
        }
    }

    /// Initialization used when none is requested: random for RPQ so the
    /// sub-quantizers diverge, k-means++ otherwise.
    pub fn default_init(self) -> InitMethod {
        match self {
            Method::Rpq => InitMethod::Random,
            Method::Kmeans | Method::Pq => InitMethod::KmeansPlusPlus,
        }
    }

    fn check_layout(self, layout: &SubspaceLayout) -> Result<()> {
        let ok = match self {
            Method::Kmeans => layout.kind() == LayoutKind::Contiguous && layout.n_subspaces() == 1,
            Method::Pq => layout.kind() == LayoutKind::Contiguous,
            Method::Rpq => layout.kind() == LayoutKind::Random,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invariant(format!(
                "{self} cannot use a {:?} layout with {} sub-vectors",
                layout.kind(),
                layout.n_subspaces()
            )))
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Kmeans => "kmeans",
            Method::Pq => "pq",
            Method::Rpq => "rpq",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(Method::Kmeans),
            "pq" => Ok(Method::Pq),
            "rpq" => Ok(Method::Rpq),
            other => Err(Error::Parameter(format!("unknown method {other:?}"))),
        }
    }
}

/// Provenance of a trained model. Only `seed` survives persistence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainMeta {
    pub seed: u64,
    pub init: Option<InitMethod>,
    pub data_fingerprint: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerModel<T> {
    method: Method,
    layout: SubspaceLayout,
    codebooks: Vec<Codebook<T>>,
    k_star: usize,
    train_meta: TrainMeta,
    dim_means: Vec<T>,
    coverage: Vec<u32>,
}

impl<T: Scalar> QuantizerModel<T> {
    pub fn from_parts(
        method: Method,
        layout: SubspaceLayout,
        codebooks: Vec<Codebook<T>>,
        dim_means: Vec<T>,
        train_meta: TrainMeta,
    ) -> Result<Self> {
        method.check_layout(&layout)?;
        if codebooks.len() != layout.n_subspaces() {
            return Err(Error::Invariant(format!(
                "{} codebooks for {} sub-vectors",
                codebooks.len(),
                layout.n_subspaces()
            )));
        }
        let k_star = codebooks[0].n_centroids();
        for (m, cb) in codebooks.iter().enumerate() {
            if cb.dim() != layout.sub_dim() || cb.n_centroids() != k_star {
                return Err(Error::Invariant(format!(
                    "codebook {m} is {}x{}, expected {k_star}x{}",
                    cb.n_centroids(),
                    cb.dim(),
                    layout.sub_dim()
                )));
            }
        }
        if dim_means.len() != layout.total_dim() || dim_means.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invariant(format!(
                "dimension means must be {} finite values",
                layout.total_dim()
            )));
        }
        let coverage = layout.coverage();
        Ok(Self { method, layout, codebooks, k_star, train_meta, dim_means, coverage })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn layout(&self) -> &SubspaceLayout {
        &self.layout
    }

    pub fn codebooks(&self) -> &[Codebook<T>] {
        &self.codebooks
    }

    pub fn k_star(&self) -> usize {
        self.k_star
    }

    pub fn train_meta(&self) -> &TrainMeta {
        &self.train_meta
    }

    pub fn dim_means(&self) -> &[T] {
        &self.dim_means
    }

    pub fn total_dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn n_subspaces(&self) -> usize {
        self.layout.n_subspaces()
    }

    /// Number of distinct reconstructions the model can express, `k*^M`.
    pub fn effective_codebook_size(&self) -> BigUint {
        BigUint::from(self.k_star).pow(self.n_subspaces() as u32)
    }

    /// Centroid scalars actually held: `M * k* * d`.
    pub fn stored_centroid_scalars(&self) -> usize {
        self.codebooks.iter().map(|c| c.as_slice().len()).sum()
    }

    pub fn cast<U: Scalar>(&self) -> QuantizerModel<U> {
        QuantizerModel {
            method: self.method,
            layout: self.layout.clone(),
            codebooks: self
                .codebooks
                .iter()
                .map(|cb| {
                    let values = cb.as_slice().iter().map(|v| U::narrow(v.widen())).collect();
                    Codebook::new(cb.n_centroids(), cb.dim(), values).expect("same shape")
                })
                .collect(),
            k_star: self.k_star,
            train_meta: self.train_meta.clone(),
            dim_means: self.dim_means.iter().map(|v| U::narrow(v.widen())).collect(),
            coverage: self.coverage.clone(),
        }
    }

    fn encode_unchecked(&self, x: &[T], out: &mut Vec<u32>) {
        let mut sub = Vec::with_capacity(self.layout.sub_dim());
        for (set, cb) in self.layout.index_sets().zip(&self.codebooks) {
            sub.clear();
            sub.extend(set.iter().map(|&i| x[i]));
            out.push(cb.nearest(&sub).0 as u32);
        }
    }

    fn reconstruct_unchecked(&self, code: &[u32]) -> Vec<T> {
        let mut acc = vec![0.0f64; self.total_dim()];
        for ((set, cb), &tok) in self.layout.index_sets().zip(&self.codebooks).zip(code) {
            for (&i, c) in set.iter().zip(cb.centroid(tok as usize)) {
                acc[i] += c.widen();
            }
        }
        acc.iter()
            .zip(&self.coverage)
            .zip(&self.dim_means)
            .map(|((&a, &n), &mean)| if n == 0 { mean } else { T::narrow(a / f64::from(n)) })
            .collect()
    }

    fn check_input_dim(&self, got: usize) -> Result<()> {
        if got != self.total_dim() {
            return Err(Error::Shape(format!(
                "input dimension {got} does not match model dimension {}",
                self.total_dim()
            )));
        }
        Ok(())
    }
}

/// Trains one K-means codebook per sub-vector of `layout`. Sub-vector `m`
/// uses seed `kcfg.seed ^ m`; `kcfg.n_centroids` is overridden by `k_star`.
///
/// The method is inferred from the layout: random layouts are RPQ, a single
/// contiguous sub-vector is plain K-means, anything else is PQ.
pub fn train_quantizer<T: Scalar>(
    data: &FeatureMatrix<T>,
    layout: &SubspaceLayout,
    k_star: usize,
    kcfg: &KmeansConfig,
) -> Result<QuantizerModel<T>> {
    let method = match (layout.kind(), layout.n_subspaces()) {
        (LayoutKind::Random, _) => Method::Rpq,
        (LayoutKind::Contiguous, 1) => Method::Kmeans,
        (LayoutKind::Contiguous, _) => Method::Pq,
    };
    train_with_method(data, method, layout, k_star, kcfg)
}

fn train_with_method<T: Scalar>(
    data: &FeatureMatrix<T>,
    method: Method,
    layout: &SubspaceLayout,
    k_star: usize,
    kcfg: &KmeansConfig,
) -> Result<QuantizerModel<T>> {
    if data.dim() != layout.total_dim() {
        return Err(Error::Shape(format!(
            "data dimension {} does not match layout dimension {}",
            data.dim(),
            layout.total_dim()
        )));
    }
    if data.n_frames() < k_star {
        return Err(Error::Training(format!(
            "{} frames are not enough for {k_star} centroids",
            data.n_frames()
        )));
    }
    method.check_layout(layout)?;

    let codebooks = (0..layout.n_subspaces())
        .into_par_iter()
        .map(|m| {
            let cfg = KmeansConfig {
                n_centroids: k_star,
                seed: kcfg.seed ^ m as u64,
                ..kcfg.clone()
            };
            let sub = if layout.n_subspaces() == 1 && layout.kind() == LayoutKind::Contiguous {
                None
            } else {
                Some(data.select_columns(layout.index_set(m))?)
            };
            let (cb, _) = train_kmeans(sub.as_ref().unwrap_or(data), &cfg)?;
            Ok(cb)
        })
        .collect::<Result<Vec<_>>>()?;

    let dim_means = data.column_means().into_iter().map(T::narrow).collect();
    let meta = TrainMeta {
        seed: kcfg.seed,
        init: Some(kcfg.init),
        data_fingerprint: Some(fingerprint(data)),
    };
    QuantizerModel::from_parts(method, layout.clone(), codebooks, dim_means, meta)
}

fn fingerprint<T: Scalar>(data: &FeatureMatrix<T>) -> u64 {
    let mut h = Sha256::new();
    h.update((data.n_frames() as u64).to_le_bytes());
    h.update((data.dim() as u64).to_le_bytes());
    for v in data.as_slice() {
        h.update(v.widen().to_bits().to_le_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

pub fn encode<T: Scalar>(x: &[T], model: &QuantizerModel<T>) -> Result<FrameCode> {
    model.check_input_dim(x.len())?;
    let mut out = Vec::with_capacity(model.n_subspaces());
    model.encode_unchecked(x, &mut out);
    Ok(FrameCode(out))
}

/// Encodes every frame; the stream keeps one `M`-tuple per input frame.
pub fn encode_batch<T: Scalar>(
    m: &FeatureMatrix<T>,
    model: &QuantizerModel<T>,
    utterance_id: &str,
) -> Result<TokenStream> {
    model.check_input_dim(m.dim())?;
    let tokens: Vec<u32> = if m.is_empty() {
        Vec::new()
    } else {
        m.as_slice()
            .par_chunks_exact(m.dim())
            .flat_map_iter(|row| {
                let mut out = Vec::with_capacity(model.n_subspaces());
                model.encode_unchecked(row, &mut out);
                out
            })
            .collect()
    };
    TokenStream::new(utterance_id, model.n_subspaces(), tokens)
}

pub fn reconstruct<T: Scalar>(code: &FrameCode, model: &QuantizerModel<T>) -> Result<Vec<T>> {
    if code.len() != model.n_subspaces() {
        return Err(Error::Code(format!(
            "{} tokens for a model with {} sub-vectors",
            code.len(),
            model.n_subspaces()
        )));
    }
    if let Some((m, &tok)) = code
        .tokens()
        .iter()
        .enumerate()
        .find(|(_, &t)| t as usize >= model.k_star())
    {
        return Err(Error::Code(format!(
            "token {tok} in sub-vector {m} outside codebook of {}",
            model.k_star()
        )));
    }
    Ok(model.reconstruct_unchecked(code.tokens()))
}

/// Mean squared reconstruction error per frame; zero for an empty matrix.
pub fn quantization_error<T: Scalar>(data: &FeatureMatrix<T>, model: &QuantizerModel<T>) -> Result<f64> {
    model.check_input_dim(data.dim())?;
    if data.is_empty() {
        return Ok(0.0);
    }
    let per_frame: Vec<f64> = data
        .as_slice()
        .par_chunks_exact(data.dim())
        .map(|row| {
            let mut code = Vec::with_capacity(model.n_subspaces());
            model.encode_unchecked(row, &mut code);
            squared_distance(row, &model.reconstruct_unchecked(&code))
        })
        .collect();
    Ok(per_frame.iter().sum::<f64>() / data.n_frames() as f64)
}

/// Hyper-parameters for building a model from scratch.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerConfig {
    pub method: Method,
    pub n_subspaces: usize,
    pub k_star: usize,
    /// Sampling ratio; required for RPQ and ignored otherwise.
    pub alpha: Option<f64>,
    pub seed: u64,
    /// Falls back to [`Method::default_init`].
    pub init: Option<InitMethod>,
    pub max_iters: usize,
    pub rel_tol: f64,
}

impl QuantizerConfig {
    pub fn kmeans(k: usize) -> Self {
        Self { method: Method::Kmeans, n_subspaces: 1, k_star: k, ..Self::default() }
    }

    pub fn pq(n_subspaces: usize, k_star: usize) -> Self {
        Self { method: Method::Pq, n_subspaces, k_star, ..Self::default() }
    }

    pub fn rpq(n_subspaces: usize, alpha: f64, k_star: usize) -> Self {
        Self { method: Method::Rpq, n_subspaces, k_star, alpha: Some(alpha), ..Self::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_init(mut self, init: InitMethod) -> Self {
        self.init = Some(init);
        self
    }

    pub fn init(&self) -> InitMethod {
        self.init.unwrap_or_else(|| self.method.default_init())
    }

    pub fn kmeans_config(&self) -> KmeansConfig {
        KmeansConfig {
            n_centroids: self.k_star,
            init: self.init(),
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            seed: self.seed,
        }
    }

    /// Layout for `total_dim`-dimensional input. RPQ layouts are sampled
    /// from the same seed as the sub-quantizers.
    pub fn layout(&self, total_dim: usize) -> Result<SubspaceLayout> {
        match self.method {
            Method::Kmeans => {
                if self.n_subspaces != 1 {
                    return Err(Error::Parameter("kmeans uses exactly one sub-vector".into()));
                }
                make_layout_contiguous(total_dim, 1)
            }
            Method::Pq => make_layout_contiguous(total_dim, self.n_subspaces),
            Method::Rpq => {
                let alpha = self
                    .alpha
                    .ok_or_else(|| Error::Parameter("rpq requires alpha".into()))?;
                make_layout_random(total_dim, self.n_subspaces, alpha, self.seed)
            }
        }
    }

    pub fn fit<T: Scalar>(&self, data: &FeatureMatrix<T>) -> Result<QuantizerModel<T>> {
        let layout = self.layout(data.dim())?;
        train_with_method(data, self.method, &layout, self.k_star, &self.kmeans_config())
    }
}

impl Default for QuantizerConfig {
    fn default() -> Self {
        let k = KmeansConfig::default();
        Self {
            method: Method::Pq,
            n_subspaces: 1,
            k_star: DEFAULT_CLUSTERS,
            alpha: None,
            seed: 0,
            init: None,
            max_iters: k.max_iters,
            rel_tol: k.rel_tol,
        }
    }
}
