use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::{predicted_error_factor, predicted_rho};

/// Trials are split into fixed-size chunks, each with its own ChaCha stream,
/// so results do not depend on how many workers run them.
const CHUNK: usize = 1 << 15;

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

fn chunks(n: usize) -> impl IndexedParallelIterator<Item = (usize, usize)> {
    let n_chunks = n.div_ceil(CHUNK);
    (0..n_chunks)
        .into_par_iter()
        .map(move |c| (c, CHUNK.min(n - c * CHUNK)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryParams {
    pub n_subspaces: usize,
    pub rho: f64,
    /// Per-dimension centroid variance.
    pub sigma2: f64,
    pub n_trials: usize,
    pub seed: u64,
    /// True coordinate `z`; the error does not depend on it.
    pub center: f64,
}

impl TheoryParams {
    pub fn new(n_subspaces: usize, rho: f64, sigma2: f64, n_trials: usize, seed: u64) -> Self {
        Self { n_subspaces, rho, sigma2, n_trials, seed, center: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// Mean of `(z - z_hat)^2` over trials.
    pub empirical_error: f64,
    /// `predicted_error_factor(M, rho) * sigma^2`.
    pub predicted_error: f64,
    /// `(z - mean(z_hat))^2`.
    pub bias2: f64,
    /// Population variance of `z_hat` over trials.
    pub variance: f64,
    pub rel_gap: f64,
    pub n_trials: usize,
}

impl ErrorReport {
    /// Squared standard error of the mean of `z_hat`.
    pub fn sem2(&self) -> f64 {
        self.variance / self.n_trials as f64
    }
}

/// Samples equicorrelated centroids `c_m = z + sigma (sqrt(rho) g + sqrt(1 - rho) e_m)`
/// and measures the error of their average.
pub fn centroid_model_mc(p: &TheoryParams) -> Result<ErrorReport> {
    if p.n_subspaces == 0 {
        return Err(Error::Parameter("need at least one sub-quantizer".into()));
    }
    if !(0.0..=1.0).contains(&p.rho) {
        return Err(Error::Parameter(format!("rho {} outside [0, 1]", p.rho)));
    }
    if !(p.sigma2 > 0.0 && p.sigma2.is_finite()) {
        return Err(Error::Parameter(format!("sigma^2 {} must be positive", p.sigma2)));
    }
    if p.n_trials == 0 {
        return Err(Error::Parameter("need at least one trial".into()));
    }
    let sigma = p.sigma2.sqrt();
    let shared = p.rho.sqrt();
    let own = (1.0 - p.rho).sqrt();
    let m = p.n_subspaces;

    let partials: Vec<(f64, f64)> = chunks(p.n_trials)
        .map(|(c, len)| {
            let mut rng = chunk_rng(p.seed, c);
            let (mut sum_dev, mut sum_sq) = (0.0, 0.0);
            for _ in 0..len {
                let g: f64 = rng.sample(StandardNormal);
                let mut total = 0.0;
                for _ in 0..m {
                    let e: f64 = rng.sample(StandardNormal);
                    total += p.center + sigma * (shared * g + own * e);
                }
                let dev = total / m as f64 - p.center;
                sum_dev += dev;
                sum_sq += dev * dev;
            }
            (sum_dev, sum_sq)
        })
        .collect();
    let (sum_dev, sum_sq) = partials
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));

    let n = p.n_trials as f64;
    let empirical_error = sum_sq / n;
    let mean_dev = sum_dev / n;
    let bias2 = mean_dev * mean_dev;
    let variance = (empirical_error - bias2).max(0.0);
    let predicted_error = predicted_error_factor(m, p.rho) * p.sigma2;
    Ok(ErrorReport {
        empirical_error,
        predicted_error,
        bias2,
        variance,
        rel_gap: (empirical_error - predicted_error).abs() / predicted_error,
        n_trials: p.n_trials,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapStats {
    pub mean_overlap: f64,
    /// Exact empirical mean of `|S1 ∩ S2| / |S1 ∪ S2|`.
    pub mean_jaccard: f64,
    /// `d^2 / D`.
    pub predicted_overlap: f64,
    /// `alpha / (2 - alpha)` with `alpha = d / D`; a ratio of expectations.
    pub predicted_jaccard: f64,
}

/// Draws `n_draws` independent pairs of `d`-subsets of `0..D`.
pub fn overlap_expectation_mc(total_dim: usize, sub_dim: usize, n_draws: usize, seed: u64) -> Result<OverlapStats> {
    if sub_dim == 0 || sub_dim > total_dim {
        return Err(Error::Parameter(format!(
            "subset size {sub_dim} must be in 1..={total_dim}"
        )));
    }
    if n_draws == 0 {
        return Err(Error::Parameter("need at least one draw".into()));
    }
    let partials: Vec<(u64, f64)> = chunks(n_draws)
        .map(|(c, len)| {
            let mut rng = chunk_rng(seed, c);
            let mut stamp = vec![0u32; total_dim];
            let (mut overlap, mut jaccard) = (0u64, 0.0f64);
            for draw in 1..=len as u32 {
                for i in index::sample(&mut rng, total_dim, sub_dim) {
                    stamp[i] = draw;
                }
                let common = index::sample(&mut rng, total_dim, sub_dim)
                    .iter()
                    .filter(|&i| stamp[i] == draw)
                    .count();
                overlap += common as u64;
                jaccard += common as f64 / (2 * sub_dim - common) as f64;
            }
            (overlap, jaccard)
        })
        .collect();
    let (overlap, jaccard) = partials
        .iter()
        .fold((0u64, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let n = n_draws as f64;
    let alpha = sub_dim as f64 / total_dim as f64;
    Ok(OverlapStats {
        mean_overlap: overlap as f64 / n,
        mean_jaccard: jaccard / n,
        predicted_overlap: (sub_dim * sub_dim) as f64 / total_dim as f64,
        predicted_jaccard: predicted_rho(alpha),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_errors() {
        assert!(centroid_model_mc(&TheoryParams::new(2, 1.5, 1.0, 10, 0)).is_err());
        assert!(centroid_model_mc(&TheoryParams::new(2, -0.1, 1.0, 10, 0)).is_err());
        assert!(centroid_model_mc(&TheoryParams::new(2, 0.5, 0.0, 10, 0)).is_err());
        assert!(centroid_model_mc(&TheoryParams::new(0, 0.5, 1.0, 10, 0)).is_err());
        assert!(centroid_model_mc(&TheoryParams::new(2, 0.5, 1.0, 0, 0)).is_err());
        assert!(overlap_expectation_mc(4, 5, 10, 0).is_err());
    }

    #[test]
    fn single_quantizer_error_is_sigma2() {
        let r = centroid_model_mc(&TheoryParams::new(1, 0.4, 2.0, 1_000_000, 3)).unwrap();
        assert_eq!(r.predicted_error, 2.0);
        assert!(r.rel_gap < 0.02, "{r:?}");
    }

    #[test]
    fn fully_correlated_centroids_do_not_average_out() {
        let r = centroid_model_mc(&TheoryParams::new(16, 1.0, 1.0, 200_000, 4)).unwrap();
        assert!(r.rel_gap < 0.02, "{r:?}");
    }

    #[test]
    fn eight_quarter_correlated() {
        let r = centroid_model_mc(&TheoryParams::new(8, 0.25, 1.0, 1_000_000, 5)).unwrap();
        assert_eq!(r.predicted_error, 0.34375);
        assert!(r.rel_gap < 0.02, "{r:?}");
    }

    #[test]
    fn decomposition_adds_up() {
        let p = TheoryParams { center: 3.5, ..TheoryParams::new(4, 0.3, 1.5, 50_000, 8) };
        let r = centroid_model_mc(&p).unwrap();
        assert!((r.bias2 + r.variance - r.empirical_error).abs() < 1e-12);
    }

    #[test]
    fn deterministic_per_seed() {
        let p = TheoryParams::new(3, 0.2, 1.0, 100_000, 9);
        assert_eq!(centroid_model_mc(&p).unwrap(), centroid_model_mc(&p).unwrap());
        let a = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        assert_eq!(a.install(|| centroid_model_mc(&p)).unwrap(), centroid_model_mc(&p).unwrap());
    }

    #[test]
    fn full_subsets_overlap_exactly() {
        let s = overlap_expectation_mc(12, 12, 500, 1).unwrap();
        assert_eq!(s.mean_overlap, 12.0);
        assert_eq!(s.mean_jaccard, 1.0);
    }

    #[test]
    fn sixteen_choose_four_overlap() {
        let s = overlap_expectation_mc(16, 4, 100_000, 2).unwrap();
        assert_eq!(s.predicted_overlap, 1.0);
        assert!((s.mean_overlap - 1.0).abs() < 0.05, "{s:?}");
    }

    #[test]
    fn jaccard_at_one_eighth() {
        let s = overlap_expectation_mc(1024, 128, 10_000, 3).unwrap();
        assert!((s.predicted_jaccard - 0.0667).abs() < 5e-5);
        assert!((s.mean_jaccard - 0.0667).abs() < 0.003, "{s:?}");
    }
}
