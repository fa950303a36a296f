//! Lloyd's K-means with k-means++ or random initialization.
//!
//! Distances are accumulated in `f64` whatever the storage scalar is, and
//! every reduction runs in frame order, so a fit is bit-reproducible for a
//! given `(data, config)` independent of the rayon pool size.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::scalar::{squared_distance, Scalar};

/// Codebook size of the single-stream baseline discretizer.
pub const DEFAULT_CLUSTERS: usize = 2000;
pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitMethod {
    KmeansPlusPlus,
    Random,
}

impl fmt::Display for InitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMethod::KmeansPlusPlus => "kmeanspp",
            InitMethod::Random => "random",
        })
    }
}

impl FromStr for InitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeanspp" | "kmeans++" => Ok(InitMethod::KmeansPlusPlus),
            "random" => Ok(InitMethod::Random),
            other => Err(Error::Parameter(format!("unknown init method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansConfig {
    pub n_centroids: usize,
    pub init: InitMethod,
    pub max_iters: usize,
    /// Stop once the relative inertia improvement of an iteration drops below this.
    pub rel_tol: f64,
    pub seed: u64,
}

impl KmeansConfig {
    pub fn new(n_centroids: usize) -> Self {
        Self { n_centroids, ..Self::default() }
    }

    pub fn with_init(mut self, init: InitMethod) -> Self {
        self.init = init;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_centroids == 0 {
            return Err(Error::Parameter("n_centroids must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Parameter("max_iters must be at least 1".into()));
        }
        if !(self.rel_tol >= 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::Parameter(format!("rel_tol {} invalid", self.rel_tol)));
        }
        Ok(())
    }
}

impl Default for KmeansConfig {
    fn default() -> Self {
        Self {
            n_centroids: DEFAULT_CLUSTERS,
            init: InitMethod::KmeansPlusPlus,
            max_iters: DEFAULT_MAX_ITERS,
            rel_tol: DEFAULT_REL_TOL,
            seed: 0,
        }
    }
}

/// `n_centroids x dim` centroid table, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook<T> {
    n_centroids: usize,
    dim: usize,
    centroids: Vec<T>,
}

impl<T: Scalar> Codebook<T> {
    pub fn new(n_centroids: usize, dim: usize, centroids: Vec<T>) -> Result<Self> {
        if n_centroids == 0 || dim == 0 {
            return Err(Error::Shape(format!(
                "codebook needs at least one centroid of dimension >= 1, got {n_centroids}x{dim}"
            )));
        }
        if centroids.len() != n_centroids * dim {
            return Err(Error::Shape(format!(
                "{} centroid values for a {n_centroids}x{dim} codebook",
                centroids.len()
            )));
        }
        if centroids.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("codebook contains a non-finite value".into()));
        }
        Ok(Self { n_centroids, dim, centroids })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let m = FeatureMatrix::from_rows(rows)?;
        Self::new(m.n_frames(), m.dim(), m.into_vec())
    }

    /// Index and squared distance of the nearest centroid; lowest index wins ties.
    #[inline]
    pub(crate) fn nearest(&self, x: &[T]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (u, c) in self.centroids.chunks_exact(self.dim).enumerate() {
            let d = squared_distance(x, c);
            if d < best.1 {
                best = (u, d);
            }
        }
        best
    }
}

impl<T> Codebook<T> {
    pub fn n_centroids(&self) -> usize {
        self.n_centroids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centroid(&self, u: usize) -> &[T] {
        &self.centroids[u * self.dim..(u + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.centroids
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansFitReport {
    pub final_inertia: f64,
    /// Number of accepted Lloyd updates after initialization.
    pub iterations_run: usize,
    /// Inertia of the initial centroids followed by one entry per accepted update.
    pub inertia_history: Vec<f64>,
}

/// Nearest-centroid token for one vector.
pub fn assign<T: Scalar>(x: &[T], cb: &Codebook<T>) -> Result<u32> {
    check_dim(x.len(), cb.dim())?;
    Ok(cb.nearest(x).0 as u32)
}

pub fn assign_batch<T: Scalar>(m: &FeatureMatrix<T>, cb: &Codebook<T>) -> Result<Vec<u32>> {
    check_dim(m.dim(), cb.dim())?;
    Ok(nearest_all(m, cb).into_iter().map(|(u, _)| u as u32).collect())
}

/// Sum over frames of the squared distance to the assigned centroid.
pub fn inertia<T: Scalar>(m: &FeatureMatrix<T>, cb: &Codebook<T>) -> Result<f64> {
    check_dim(m.dim(), cb.dim())?;
    Ok(nearest_all(m, cb).iter().map(|&(_, d)| d).sum())
}

fn check_dim(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Shape(format!(
            "vector dimension {got} does not match codebook dimension {want}"
        )));
    }
    Ok(())
}

fn nearest_all<T: Scalar>(m: &FeatureMatrix<T>, cb: &Codebook<T>) -> Vec<(usize, f64)> {
    if m.is_empty() {
        return Vec::new();
    }
    m.as_slice()
        .par_chunks_exact(m.dim())
        .map(|row| cb.nearest(row))
        .collect()
}

pub fn train_kmeans<T: Scalar>(
    data: &FeatureMatrix<T>,
    cfg: &KmeansConfig,
) -> Result<(Codebook<T>, KmeansFitReport)> {
    cfg.validate()?;
    let k = cfg.n_centroids;
    if data.n_frames() < k {
        return Err(Error::InsufficientData(format!(
            "{} frames cannot seed {k} centroids",
            data.n_frames()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds = match cfg.init {
        InitMethod::KmeansPlusPlus => kmeanspp_indices(data, k, &mut rng),
        InitMethod::Random => index::sample(&mut rng, data.n_frames(), k).into_vec(),
    };
    let mut centroids = Vec::with_capacity(k * data.dim());
    for &i in &seeds {
        centroids.extend_from_slice(data.row(i));
    }
    let mut codebook = Codebook::new(k, data.dim(), centroids)?;

    let mut assignment = nearest_all(data, &codebook);
    let mut current = total(&assignment);
    let mut history = vec![current];

    for _ in 0..cfg.max_iters {
        let candidate = lloyd_update(data, &codebook, &assignment);
        let next_assignment = nearest_all(data, &candidate);
        let next = total(&next_assignment);
        // Rounding the means back into T can, in rare near-converged cases,
        // nudge the objective up; treat that as convergence.
        if next > current {
            break;
        }
        let improvement = if current > 0.0 { (current - next) / current } else { 0.0 };
        codebook = candidate;
        assignment = next_assignment;
        current = next;
        history.push(current);
        if improvement < cfg.rel_tol || current == 0.0 {
            break;
        }
    }

    let report = KmeansFitReport {
        final_inertia: current,
        iterations_run: history.len() - 1,
        inertia_history: history,
    };
    Ok((codebook, report))
}

fn total(assignment: &[(usize, f64)]) -> f64 {
    assignment.iter().map(|&(_, d)| d).sum()
}

/// Recomputes every centroid as the mean of its members. A cluster left empty
/// is reseeded at the frame currently farthest from its own centroid.
fn lloyd_update<T: Scalar>(
    data: &FeatureMatrix<T>,
    codebook: &Codebook<T>,
    assignment: &[(usize, f64)],
) -> Codebook<T> {
    let (k, dim) = (codebook.n_centroids(), codebook.dim());
    let mut sums = vec![0.0f64; k * dim];
    let mut counts = vec![0usize; k];
    for (row, &(u, _)) in data.rows().zip(assignment) {
        counts[u] += 1;
        for (s, v) in sums[u * dim..(u + 1) * dim].iter_mut().zip(row) {
            *s += v.widen();
        }
    }

    let mut centroids = Vec::with_capacity(k * dim);
    let mut distances: Option<Vec<f64>> = None;
    for u in 0..k {
        if counts[u] > 0 {
            let n = counts[u] as f64;
            centroids.extend(sums[u * dim..(u + 1) * dim].iter().map(|s| T::narrow(s / n)));
        } else {
            let distances =
                distances.get_or_insert_with(|| assignment.iter().map(|&(_, d)| d).collect());
            let far = argmax(distances);
            distances[far] = 0.0;
            centroids.extend_from_slice(data.row(far));
        }
    }
    Codebook { n_centroids: k, dim, centroids }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// D^2 seeding. A frame identical to an already chosen seed has zero weight,
/// so no frame is picked twice unless the data has fewer than `k` distinct rows.
fn kmeanspp_indices<T: Scalar>(data: &FeatureMatrix<T>, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = data.n_frames();
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    let first = rng.random_range(0..n);
    chosen.push(first);
    taken[first] = true;

    let mut weights: Vec<f64> = data
        .as_slice()
        .par_chunks_exact(data.dim())
        .map(|row| squared_distance(row, data.row(first)))
        .collect();

    while chosen.len() < k {
        let sum: f64 = weights.iter().sum();
        let next = if sum > 0.0 {
            let target = rng.random::<f64>() * sum;
            let mut acc = 0.0;
            let mut pick = None;
            let mut last_positive = 0;
            for (i, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    last_positive = i;
                    acc += w;
                    if acc > target {
                        pick = Some(i);
                        break;
                    }
                }
            }
            pick.unwrap_or(last_positive)
        } else {
            // Fewer distinct rows than centroids: fall back to an unused frame.
            let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        taken[next] = true;
        let seed_row = data.row(next);
        weights
            .par_iter_mut()
            .zip(data.as_slice().par_chunks_exact(data.dim()))
            .for_each(|(w, row)| {
                let d = squared_distance(row, seed_row);
                if d < *w {
                    *w = d;
                }
            });
    }
    chosen
}
