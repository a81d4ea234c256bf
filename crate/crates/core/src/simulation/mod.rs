//! The simulation design with three latent groups, its lagged-treatment
//! variant and a Monte Carlo engine.

mod dgp;
mod output;
mod study;

pub use dgp::{
    profile_curve, simulate_dgp, simulate_dgp_lagged, simulate_stream, DgpSpec, SimDraw, DEFAULT_SIGMA,
};
pub use output::{bic_figure_csv, coef_figure_csv, profile_figure_csv, replications_csv};
pub use study::{
    aggregate, identified_profiles, matched_profile_rmse, run_monte_carlo, BicPoint, BicStudy, Estimate, Estimator,
    EstimatorSummary, ReplicationRecord, SimStudyResult, StudyConfig, MEMBERSHIP_RULE,
};
