//! Monte-Carlo checks of the RPQ error analysis.
//!
//! Under the local model, each of the `M` sub-quantizers yields a centroid
//! value `c_m ~ N(z, sigma^2)` with pairwise correlation `rho`. Averaging them
//! gives an unbiased estimate of `z` whose squared error is
//! `(1/M + (1 - 1/M) rho) sigma^2`, i.e. that factor times the single-K-means
//! error. `rho` itself is approximated by the expected Jaccard similarity of
//! two random `alpha D`-subsets, `alpha / (2 - alpha)`.

mod empirical;
mod montecarlo;
mod verify;

pub use empirical::{
    alpha_sweep, end_to_end_bound_check, single_kmeans_control, BoundCheckReport, BoundRun,
    ControlReport, SweepPoint, BOUND_SLACK, PAPER_ALPHAS,
};
pub use montecarlo::{
    centroid_model_mc, overlap_expectation_mc, ErrorReport, OverlapStats, TheoryParams,
};
pub use verify::{
    alpha_sweep_csv, reference_corpus_spec, run_checks, run_end_to_end_checks, sweep_csv, Check,
    EndToEndOutcome, GridPoint, VerifyConfig, VerifyOutcome, E2E_ALPHA, E2E_CLUSTERS,
    E2E_SUBSPACES, LAW_TOL, OVERLAP_TOL,
};

/// Error of an `M`-way RPQ average relative to a single K-means quantizer.
pub fn predicted_error_factor(n_subspaces: usize, rho: f64) -> f64 {
    let inv = 1.0 / n_subspaces as f64;
    inv + (1.0 - inv) * rho
}

/// Sub-quantizer correlation implied by a dimension sampling ratio.
pub fn predicted_rho(alpha: f64) -> f64 {
    alpha / (2.0 - alpha)
}
