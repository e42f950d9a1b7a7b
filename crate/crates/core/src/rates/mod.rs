//! Curvature at the fixed point, predicted and measured rates.

pub mod curvature;
pub mod empirical;
pub mod reparam;
pub mod report;
pub mod sweep;
pub mod transforms;

pub use curvature::{
    curvature_at, curvature_fd, direction_basis, theoretical_rates, CurvatureFrame,
    CurvatureSource, FdSpec,
};
pub use empirical::{decay_estimate, empirical_rate, q_gap_rate, DecayEstimate, RateWindow};
pub use reparam::{reparam_invariance_check, Reparametrization};
pub use report::{verdicts, RateReport, Verdict, VerdictOptions};
pub use sweep::{population_rate, sample_rate_sweep, summarize, SweepModel, SweepRow, SweepSummary};
pub use transforms::{
    accelerate, accelerate_at, alpha_transform, estimate_theta_star, mirror_prox_spectrum_map, optimal_alpha,
    prox_identity_deviation, ProxPrediction,
};
