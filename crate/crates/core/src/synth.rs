//! Seeded Gaussian-mixture corpora with pairwise-correlated dimensions.
//!
//! Dimensions are grouped into consecutive pairs `(2j, 2j + 1)`. Within a pair
//! the total (mixture) correlation equals [`SynthSpec::correlation`]; dimensions
//! in different pairs are uncorrelated. Mode means are uniform-weight and are
//! orthogonalized across modes so that their scatter does not leak spurious
//! correlation into the mixture.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub dim: usize,
    pub n_frames: usize,
    pub n_modes: usize,
    /// Target correlation between the two dimensions of each pair.
    pub correlation: f64,
    /// Standard deviation of the mode means along every dimension; the
    /// within-mode noise has unit variance.
    pub mode_spread: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub const DEFAULT_MODE_SPREAD: f64 = 1.0;

    pub fn new(dim: usize, n_frames: usize, n_modes: usize, correlation: f64, seed: u64) -> Self {
        Self {
            dim,
            n_frames,
            n_modes,
            correlation,
            mode_spread: Self::DEFAULT_MODE_SPREAD,
            seed,
        }
    }

    pub fn with_mode_spread(mut self, spread: f64) -> Self {
        self.mode_spread = spread;
        self
    }

    /// Dimension pairs whose correlation is controlled by `correlation`.
    pub fn designated_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.dim / 2).map(|j| (2 * j, 2 * j + 1)).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Parameter("synthetic dimension must be at least 1".into()));
        }
        if self.n_modes == 0 {
            return Err(Error::Parameter("need at least one mixture mode".into()));
        }
        if !(0.0..=1.0).contains(&self.correlation) {
            return Err(Error::Parameter(format!(
                "correlation {} outside [0, 1]",
                self.correlation
            )));
        }
        if !(self.mode_spread.is_finite() && self.mode_spread >= 0.0) {
            return Err(Error::Parameter(format!("mode spread {} invalid", self.mode_spread)));
        }
        Ok(())
    }
}

/// Draws the corpus described by `spec`. Pure function of `spec`.
pub fn generate_synthetic<T: Scalar>(spec: &SynthSpec) -> Result<FeatureMatrix<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let means = mode_means(spec, &mut rng);

    let mut modes: Vec<usize> = (0..spec.n_frames).map(|t| t % spec.n_modes).collect();
    modes.shuffle(&mut rng);

    let c = spec.correlation;
    let c_perp = (1.0 - c * c).sqrt();
    let mut data = Vec::with_capacity(spec.n_frames * spec.dim);
    let mut y = vec![0.0f64; spec.dim];
    for &mode in &modes {
        let mean = &means[mode * spec.dim..(mode + 1) * spec.dim];
        for (yi, mi) in y.iter_mut().zip(mean) {
            let z: f64 = rng.sample(StandardNormal);
            *yi = mi + z;
        }
        for j in 0..spec.dim {
            let v = if j % 2 == 1 { c * y[j - 1] + c_perp * y[j] } else { y[j] };
            data.push(T::narrow(v));
        }
    }
    FeatureMatrix::new(spec.n_frames, spec.dim, data)
}

/// Mode-mean table (`n_modes x dim`, row-major). Each column is centered over
/// modes with population variance `mode_spread^2`. Columns are orthogonal to
/// all earlier columns while the `n_modes - 1` dimensional centered space has
/// room, and always orthogonal to their pair partner when `n_modes >= 3`.
fn mode_means(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (k, dim) = (spec.n_modes, spec.dim);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(dim);
    if k == 1 || spec.mode_spread == 0.0 {
        return vec![0.0; k * dim];
    }
    for j in 0..dim {
        let against: Vec<usize> = if j < k - 1 {
            (0..j).collect()
        } else if j % 2 == 1 && k >= 3 {
            vec![j - 1]
        } else {
            Vec::new()
        };
        let col = loop {
            let mut col: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
            let mean = col.iter().sum::<f64>() / k as f64;
            col.iter_mut().for_each(|v| *v -= mean);
            for &i in &against {
                let prev = &columns[i];
                let proj = dot(&col, prev) / dot(prev, prev);
                col.iter_mut().zip(prev).for_each(|(v, p)| *v -= proj * p);
            }
            let norm2 = dot(&col, &col);
            if norm2 > 1e-12 {
                let scale = spec.mode_spread * (k as f64 / norm2).sqrt();
                col.iter_mut().for_each(|v| *v *= scale);
                break col;
            }
        };
        columns.push(col);
    }
    let mut means = vec![0.0; k * dim];
    for (j, col) in columns.iter().enumerate() {
        for (mode, v) in col.iter().enumerate() {
            means[mode * dim + j] = *v;
        }
    }
    means
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_matrix() {
        let spec = SynthSpec::new(6, 500, 4, 0.3, 7);
        let a: FeatureMatrix<f32> = generate_synthetic(&spec).unwrap();
        let b: FeatureMatrix<f32> = generate_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        let c: FeatureMatrix<f32> =
            generate_synthetic(&SynthSpec { seed: 8, ..spec.clone() }).unwrap();
        assert_ne!(a, c);
        assert_eq!((a.n_frames(), a.dim()), (500, 6));
    }

    #[test]
    fn rejects_bad_spec() {
        assert!(generate_synthetic::<f64>(&SynthSpec::new(4, 10, 2, 1.5, 0)).is_err());
        assert!(generate_synthetic::<f64>(&SynthSpec::new(4, 10, 0, 0.5, 0)).is_err());
        assert!(generate_synthetic::<f64>(&SynthSpec::new(0, 10, 1, 0.5, 0)).is_err());
    }

    #[test]
    fn mode_means_are_centered_with_target_spread() {
        let spec = SynthSpec::new(10, 0, 5, 0.0, 3).with_mode_spread(2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let means = mode_means(&spec, &mut rng);
        for j in 0..spec.dim {
            let col: Vec<f64> = (0..5).map(|m| means[m * 10 + j]).collect();
            let mean = col.iter().sum::<f64>() / 5.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 4.0).abs() < 1e-9);
        }
    }
}
