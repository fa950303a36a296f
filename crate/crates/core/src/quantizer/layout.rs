use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayoutKind {
    /// `M` equal, non-overlapping slices of consecutive dimensions.
    Contiguous,
    /// `M` independently sampled dimension subsets; subsets may overlap.
    Random,
}

/// Which input dimensions feed each of the `M` sub-quantizers.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceLayout {
    kind: LayoutKind,
    total_dim: usize,
    n_subspaces: usize,
    sub_dim: usize,
    /// `n_subspaces x sub_dim`, row-major.
    indices: Vec<usize>,
    alpha: f32,
    seed: u64,
}

/// Sub-vector length for a sampling ratio: `floor(alpha * D)`, at least 1.
pub fn sub_dim_for_alpha(total_dim: usize, alpha: f64) -> usize {
    // The small bias keeps exact products such as 0.29 * 100 from flooring to 28.
    let d = (alpha * total_dim as f64 + 1e-9).floor() as usize;
    d.clamp(1, total_dim.max(1))
}

pub fn make_layout_contiguous(total_dim: usize, n_subspaces: usize) -> Result<SubspaceLayout> {
    if n_subspaces == 0 || total_dim == 0 {
        return Err(Error::Layout(format!(
            "cannot split {total_dim} dimensions into {n_subspaces} sub-vectors"
        )));
    }
    if total_dim % n_subspaces != 0 {
        return Err(Error::Layout(format!(
            "dimension {total_dim} is not divisible by {n_subspaces} sub-vectors"
        )));
    }
    Ok(SubspaceLayout {
        kind: LayoutKind::Contiguous,
        total_dim,
        n_subspaces,
        sub_dim: total_dim / n_subspaces,
        indices: (0..total_dim).collect(),
        alpha: 0.0,
        seed: 0,
    })
}

/// Samples `M` subsets of `floor(alpha * D)` dimensions. Each subset is drawn
/// without replacement and kept in sampling order; subsets are independent.
pub fn make_layout_random(
    total_dim: usize,
    n_subspaces: usize,
    alpha: f64,
    seed: u64,
) -> Result<SubspaceLayout> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!("alpha {alpha} outside (0, 1]")));
    }
    if n_subspaces == 0 || total_dim == 0 {
        return Err(Error::Layout(format!(
            "cannot sample {n_subspaces} sub-vectors from {total_dim} dimensions"
        )));
    }
    let sub_dim = sub_dim_for_alpha(total_dim, alpha);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = Vec::with_capacity(n_subspaces * sub_dim);
    for _ in 0..n_subspaces {
        indices.extend(index::sample(&mut rng, total_dim, sub_dim).iter());
    }
    Ok(SubspaceLayout {
        kind: LayoutKind::Random,
        total_dim,
        n_subspaces,
        sub_dim,
        indices,
        alpha: alpha as f32,
        seed,
    })
}

impl SubspaceLayout {
    /// Rebuilds a layout from stored parts, checking every invariant.
    pub fn from_parts(
        kind: LayoutKind,
        total_dim: usize,
        n_subspaces: usize,
        sub_dim: usize,
        indices: Vec<usize>,
        alpha: f32,
        seed: u64,
    ) -> Result<Self> {
        if total_dim == 0 || n_subspaces == 0 || sub_dim == 0 {
            return Err(Error::Layout(format!(
                "degenerate layout D={total_dim} M={n_subspaces} d={sub_dim}"
            )));
        }
        if indices.len() != n_subspaces * sub_dim {
            return Err(Error::Layout(format!(
                "{} indices for {n_subspaces} sub-vectors of length {sub_dim}",
                indices.len()
            )));
        }
        match kind {
            LayoutKind::Contiguous => {
                let expected = make_layout_contiguous(total_dim, n_subspaces)?;
                if expected.sub_dim != sub_dim || expected.indices != indices {
                    return Err(Error::Layout("contiguous index table out of order".into()));
                }
                if alpha != 0.0 {
                    return Err(Error::Layout("contiguous layout carries an alpha".into()));
                }
                Ok(expected)
            }
            LayoutKind::Random => {
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(Error::Layout(format!("alpha {alpha} outside (0, 1]")));
                }
                if sub_dim > total_dim {
                    return Err(Error::Layout(format!(
                        "sub-vector length {sub_dim} exceeds dimension {total_dim}"
                    )));
                }
                let mut seen = vec![usize::MAX; total_dim];
                for (m, set) in indices.chunks_exact(sub_dim).enumerate() {
                    for &i in set {
                        if i >= total_dim {
                            return Err(Error::Layout(format!(
                                "index {i} out of range in sub-vector {m}"
                            )));
                        }
                        if seen[i] == m {
                            return Err(Error::Layout(format!(
                                "index {i} repeated in sub-vector {m}"
                            )));
                        }
                        seen[i] = m;
                    }
                }
                Ok(Self { kind, total_dim, n_subspaces, sub_dim, indices, alpha, seed })
            }
        }
    }

    pub fn kind(&self) -> LayoutKind {
        self.kind
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn n_subspaces(&self) -> usize {
        self.n_subspaces
    }

    pub fn sub_dim(&self) -> usize {
        self.sub_dim
    }

    /// Sampling ratio; zero for contiguous layouts.
    pub fn alpha(&self) -> f32 {
        self.alpha
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index_set(&self, m: usize) -> &[usize] {
        &self.indices[m * self.sub_dim..(m + 1) * self.sub_dim]
    }

    pub fn index_sets(&self) -> std::slice::ChunksExact<'_, usize> {
        self.indices.chunks_exact(self.sub_dim)
    }

    pub(crate) fn flat_indices(&self) -> &[usize] {
        &self.indices
    }

    /// How many sub-vectors include each dimension.
    pub fn coverage(&self) -> Vec<u32> {
        let mut cov = vec![0u32; self.total_dim];
        for &i in &self.indices {
            cov[i] += 1;
        }
        cov
    }
}

/// Gathers sub-vector `m` of `x`, in the layout's stored index order.
pub fn project<T: Copy>(x: &[T], layout: &SubspaceLayout, m: usize) -> Result<Vec<T>> {
    if x.len() != layout.total_dim() {
        return Err(Error::Shape(format!(
            "vector of length {} for a {}-dimensional layout",
            x.len(),
            layout.total_dim()
        )));
    }
    if m >= layout.n_subspaces() {
        return Err(Error::Shape(format!(
            "sub-vector {m} requested from a layout with {}",
            layout.n_subspaces()
        )));
    }
    Ok(layout.index_set(m).iter().map(|&i| x[i]).collect())
}
