//! Measurements on real (or synthetic) feature matrices.

use crate::error::Result;
use crate::features::FeatureMatrix;
use crate::kmeans::{train_kmeans, InitMethod, KmeansConfig};
use crate::quantizer::{make_layout_random, quantization_error, QuantizerConfig};
use crate::scalar::Scalar;

/// Sampling ratios evaluated for RPQ with `M = 32`.
pub const PAPER_ALPHAS: [f64; 9] = [0.0625, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0];

/// Relative slack allowed when comparing RPQ against a single K-means.
pub const BOUND_SLACK: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRun {
    pub seed: u64,
    pub kmeans_error: f64,
    pub rpq_error: f64,
}

impl BoundRun {
    pub fn holds(&self) -> bool {
        self.rpq_error <= self.kmeans_error * (1.0 + BOUND_SLACK)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheckReport {
    pub n_subspaces: usize,
    pub alpha: f64,
    pub k_star: usize,
    pub runs: Vec<BoundRun>,
}

impl BoundCheckReport {
    pub fn passed(&self) -> bool {
        !self.runs.is_empty() && self.runs.iter().all(BoundRun::holds)
    }
}

/// Trains, per seed, a single full-dimension K-means and an RPQ model with the
/// same `k_star`, and measures both in the full reconstruction space. Both use
/// random initialization, so the layout is the only difference between them.
pub fn end_to_end_bound_check<T: Scalar>(
    data: &FeatureMatrix<T>,
    n_subspaces: usize,
    alpha: f64,
    k_star: usize,
    seeds: &[u64],
) -> Result<BoundCheckReport> {
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let kmeans = QuantizerConfig::kmeans(k_star)
            .with_init(InitMethod::Random)
            .with_seed(seed)
            .fit(data)?;
        let rpq = QuantizerConfig::rpq(n_subspaces, alpha, k_star)
            .with_seed(seed)
            .fit(data)?;
        runs.push(BoundRun {
            seed,
            kmeans_error: quantization_error(data, &kmeans)?,
            rpq_error: quantization_error(data, &rpq)?,
        });
    }
    Ok(BoundCheckReport { n_subspaces, alpha, k_star, runs })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub alpha: f64,
    pub sub_dim: usize,
    pub rpq_error: f64,
}

/// RPQ quantization error for each sampling ratio, at fixed `M`, `k_star`, seed.
pub fn alpha_sweep<T: Scalar>(
    data: &FeatureMatrix<T>,
    n_subspaces: usize,
    alphas: &[f64],
    k_star: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    alphas
        .iter()
        .map(|&alpha| {
            let model = QuantizerConfig::rpq(n_subspaces, alpha, k_star)
                .with_seed(seed)
                .fit(data)?;
            Ok(SweepPoint {
                alpha,
                sub_dim: model.layout().sub_dim(),
                rpq_error: quantization_error(data, &model)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlReport {
    pub alpha: f64,
    /// Sampled dimensions, ascending.
    pub dims: Vec<usize>,
    /// Mean squared error per frame inside the sampled sub-space.
    pub subspace_error: f64,
    /// Mean squared error per frame over all `D` dimensions, with the
    /// unsampled ones reconstructed by their training mean.
    pub full_error: f64,
}

impl ControlReport {
    pub fn subspace_error_per_dim(&self) -> f64 {
        self.subspace_error / self.dims.len() as f64
    }
}

/// One K-means on a single random `alpha D`-dimension subset of the input.
pub fn single_kmeans_control<T: Scalar>(
    data: &FeatureMatrix<T>,
    alpha: f64,
    k_star: usize,
    seed: u64,
) -> Result<ControlReport> {
    let layout = make_layout_random(data.dim(), 1, alpha, seed)?;
    let mut dims = layout.index_set(0).to_vec();
    dims.sort_unstable();
    let sub = data.select_columns(&dims)?;
    let cfg = KmeansConfig::new(k_star)
        .with_init(InitMethod::Random)
        .with_seed(seed);
    let (_, report) = train_kmeans(&sub, &cfg)?;
    let n = data.n_frames() as f64;
    let subspace_error = report.final_inertia / n;

    let means = data.column_means();
    let mut sampled = vec![false; data.dim()];
    dims.iter().for_each(|&i| sampled[i] = true);
    let mut residual = 0.0;
    for row in data.rows() {
        for (i, v) in row.iter().enumerate() {
            if !sampled[i] {
                // Matches the reconstruction fallback, which stores means in T.
                let d = v.widen() - T::narrow(means[i]).widen();
                residual += d * d;
            }
        }
    }
    Ok(ControlReport {
        alpha,
        dims,
        subspace_error,
        full_error: subspace_error + residual / n,
    })
}
