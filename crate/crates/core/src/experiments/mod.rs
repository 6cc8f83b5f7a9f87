//! Seeded Monte-Carlo runs and the statistical test battery.

pub mod analysis;
pub mod config;
pub mod summary;
pub mod trial;

pub use analysis::{
    busemann_symmetry_test, coordinate_change_test, distance_moment_scaling_test, estimate_kappa, kappa_sample,
    nongood_mass_test, ratio_convergence_test, ratio_level, weyl_exactness_test, KappaEstimate, RatioLevel, RatioReport,
};
pub use config::{Measurements, TrialConfig};
pub use summary::{summarize, ExperimentSummary};
pub use trial::{analyze_field, run_trial, Experiment, TrialResult};
