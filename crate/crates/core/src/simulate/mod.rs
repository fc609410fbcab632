//! Seeded Monte Carlo engines, cross-checked against the exact laws.

pub mod crp;
pub mod estimate;
pub mod forest;
pub mod rng;
pub mod sibuya;
pub mod stats;

pub use crp::{crp_chain, CrpTrajectory};
pub use estimate::{
    estimate_kn_limit, estimate_stable_limit, forest_run, leaf_statistics, progeny_run, Bin,
    ForestRun, LaplaceEstimate, LaplaceReport, LeafSummary, MomentEstimate, MomentReport,
    ProgenyRun, ProgenySampler,
};
pub use forest::{
    grow_forest, grow_forest_with, sample_kn, Attachment, ForestState, Roles, TransitionAudit,
};
pub use rng::{RngStream, SimRng};
pub use sibuya::{
    sample_bgw_progeny, sample_sibuya, sample_sibuya_sequential, BgwSampler, Progeny,
    SibuyaSampler, DEFAULT_CAP,
};
pub use stats::{binomial_z, chi_square_gof, chi_square_two_sample, ChiSquareReport};
