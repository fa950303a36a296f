//! The line-oriented report behind `rpq verify-theory`.

use std::fmt;

use crate::error::Result;

use super::empirical::{alpha_sweep, end_to_end_bound_check, SweepPoint, BOUND_SLACK, PAPER_ALPHAS};
use super::montecarlo::{centroid_model_mc, overlap_expectation_mc, ErrorReport, TheoryParams};
use super::predicted_error_factor;
use crate::features::FeatureMatrix;
use crate::quantizer::sub_dim_for_alpha;
use crate::synth::{generate_synthetic, SynthSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub n_trials: usize,
    pub overlap_draws: usize,
    pub jaccard_draws: usize,
    pub seed: u64,
    pub subspace_grid: Vec<usize>,
    pub rho_grid: Vec<f64>,
    pub jaccard_alphas: Vec<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            n_trials: 1_000_000,
            overlap_draws: 100_000,
            jaccard_draws: 10_000,
            seed: 1,
            subspace_grid: vec![1, 2, 4, 8, 16, 32],
            rho_grid: vec![0.0, 0.1, 0.25, 0.5, 1.0],
            jaccard_alphas: vec![0.0625, 0.125, 0.25, 0.5],
        }
    }
}

/// Relative tolerance of the error law and of the interval endpoints.
pub const LAW_TOL: f64 = 0.02;
/// Relative tolerance of the overlap and Jaccard expectations.
pub const OVERLAP_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub empirical: f64,
    pub predicted: f64,
    pub rel_gap: f64,
    pub tol: f64,
    passed: bool,
}

impl Check {
    /// Two-sided: `|empirical - predicted| / predicted < tol`.
    pub fn new(name: String, empirical: f64, predicted: f64, tol: f64) -> Self {
        let rel_gap = if predicted == 0.0 {
            empirical.abs()
        } else {
            (empirical - predicted).abs() / predicted.abs()
        };
        Self { name, empirical, predicted, rel_gap, tol, passed: rel_gap < tol }
    }

    /// One-sided: `empirical <= predicted * (1 + tol)`. `rel_gap` is the
    /// signed relative excess over `predicted`.
    pub fn at_most(name: String, empirical: f64, predicted: f64, tol: f64) -> Self {
        let rel_gap = (empirical - predicted) / predicted.abs();
        Self { name, empirical, predicted, rel_gap, tol, passed: empirical <= predicted * (1.0 + tol) }
    }

    /// Strict: `empirical < predicted`.
    pub fn below(name: String, empirical: f64, predicted: f64) -> Self {
        let rel_gap = (empirical - predicted) / predicted.abs();
        Self { name, empirical, predicted, rel_gap, tol: 0.0, passed: empirical < predicted }
    }

    pub fn passed(&self) -> bool {
        self.passed
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} empirical={:.6} predicted={:.6} rel_gap={:.6} tol={}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.empirical,
            self.predicted,
            self.rel_gap,
            self.tol
        )
    }
}

#[derive(Debug, Clone)]
pub struct GridPoint {
    pub n_subspaces: usize,
    pub rho: f64,
    pub report: ErrorReport,
}

pub struct VerifyOutcome {
    pub checks: Vec<Check>,
    pub grid: Vec<GridPoint>,
}

impl VerifyOutcome {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

/// Runs the error-law grid (with its corollary interval), the overlap
/// expectation and the Jaccard approximation. Each grid point gets its own
/// seed derived from `cfg.seed` and its position.
pub fn run_checks(cfg: &VerifyConfig) -> Result<VerifyOutcome> {
    let sigma2 = 1.0;
    let mut checks = Vec::new();
    let mut grid = Vec::new();
    let mut bounds = Vec::new();
    for (i, &m) in cfg.subspace_grid.iter().enumerate() {
        for (j, &rho) in cfg.rho_grid.iter().enumerate() {
            let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add((i * 64 + j) as u64);
            let report = centroid_model_mc(&TheoryParams::new(m, rho, sigma2, cfg.n_trials, seed))?;
            checks.push(Check::new(
                format!("error-law/M={m}/rho={rho}"),
                report.empirical_error,
                report.predicted_error,
                LAW_TOL,
            ));
            // Nearest admissible value in [rho sigma^2, sigma^2].
            let lower = rho * sigma2;
            let nearest = report.empirical_error.clamp(lower, sigma2);
            bounds.push(Check::new(
                format!("error-bounds/M={m}/rho={rho}"),
                report.empirical_error,
                nearest,
                LAW_TOL,
            ));
            grid.push(GridPoint { n_subspaces: m, rho, report });
        }
    }
    checks.extend(bounds);

    let overlap = overlap_expectation_mc(16, 4, cfg.overlap_draws, cfg.seed)?;
    checks.push(Check::new(
        "overlap/D=16/d=4".into(),
        overlap.mean_overlap,
        overlap.predicted_overlap,
        OVERLAP_TOL,
    ));
    for (i, &alpha) in cfg.jaccard_alphas.iter().enumerate() {
        let d = sub_dim_for_alpha(1024, alpha);
        let stats = overlap_expectation_mc(1024, d, cfg.jaccard_draws, cfg.seed.wrapping_add(1 + i as u64))?;
        checks.push(Check::new(
            format!("jaccard/D=1024/alpha={alpha}"),
            stats.mean_jaccard,
            stats.predicted_jaccard,
            OVERLAP_TOL,
        ));
    }
    debug_assert!(grid
        .iter()
        .all(|g| g.report.predicted_error == predicted_error_factor(g.n_subspaces, g.rho)));
    Ok(VerifyOutcome { checks, grid })
}

/// CSV dump of the error-law grid.
pub fn sweep_csv(grid: &[GridPoint]) -> String {
    let mut out = String::from("M,rho,empirical,predicted,bias2,variance,rel_gap\n");
    for g in grid {
        let r = &g.report;
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            g.n_subspaces, g.rho, r.empirical_error, r.predicted_error, r.bias2, r.variance, r.rel_gap
        ));
    }
    out
}

/// Reference corpus for the end-to-end checks: 50k frames, 64 dimensions,
/// 8 mixture modes.
pub fn reference_corpus_spec(seed: u64) -> SynthSpec {
    SynthSpec::new(64, 50_000, 8, 0.3, seed)
}

pub const E2E_SUBSPACES: usize = 8;
pub const E2E_ALPHA: f64 = 0.25;
pub const E2E_CLUSTERS: usize = 64;

pub struct EndToEndOutcome {
    pub checks: Vec<Check>,
    pub sweep: Vec<SweepPoint>,
}

/// RPQ against a single K-means on the reference corpus for three seeds,
/// then an alpha sweep whose minimum must fall below `alpha = 1`.
pub fn run_end_to_end_checks(seed: u64) -> Result<EndToEndOutcome> {
    let data: FeatureMatrix<f32> = generate_synthetic(&reference_corpus_spec(seed))?;
    let seeds = [seed, seed.wrapping_add(1), seed.wrapping_add(2)];
    let bound = end_to_end_bound_check(&data, E2E_SUBSPACES, E2E_ALPHA, E2E_CLUSTERS, &seeds)?;
    let mut checks: Vec<Check> = bound
        .runs
        .iter()
        .map(|r| {
            Check::at_most(
                format!("rpq-bound/M={E2E_SUBSPACES}/alpha={E2E_ALPHA}/seed={}", r.seed),
                r.rpq_error,
                r.kmeans_error,
                BOUND_SLACK,
            )
        })
        .collect();

    let sweep = alpha_sweep(&data, E2E_SUBSPACES, &PAPER_ALPHAS, E2E_CLUSTERS, seed)?;
    let at_full = sweep.last().map(|p| p.rpq_error).unwrap_or(f64::NAN);
    let best_partial = sweep
        .iter()
        .filter(|p| p.alpha < 1.0)
        .map(|p| p.rpq_error)
        .fold(f64::INFINITY, f64::min);
    checks.push(Check::below(
        format!("alpha-sweep-min-below-full/M={E2E_SUBSPACES}"),
        best_partial,
        at_full,
    ));
    Ok(EndToEndOutcome { checks, sweep })
}

pub fn alpha_sweep_csv(sweep: &[SweepPoint]) -> String {
    let mut out = String::from("alpha,sub_dim,rpq_error\n");
    for p in sweep {
        out.push_str(&format!("{},{},{}\n", p.alpha, p.sub_dim, p.rpq_error));
    }
    out
}
