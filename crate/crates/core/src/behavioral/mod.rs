//! Two-group model of risky choices and latent mental health with
//! quasi-hyperbolic discounting, solved by backward induction for
//! sophisticated agents.
//!
//! The diagnosis threshold `κ` maps latent health to observed diagnosis
//! rates; no equation of the model defines it, so the threshold reading is
//! a reconstruction and reports carry [`KAPPA_INTERPRETATION`].

mod params;
mod simulate;
mod solver;
mod spline;

pub use params::{abortion_prob, flow_utility, mh_transition, BehavioralParams, PARAM_NAMES, UTILITY_FLOOR};
pub use simulate::{
    diagnosis_rates, model_moments, no_bias_counterfactual, simulate_trajectories, simulate_with_shocks, solve_model,
    solve_model_with, ModelConfig, ModelDraws, ModelSolution, MomentRule, Shocks, Trajectories,
};
pub use solver::{
    build_grid, solve_policy, solve_policy_with, Grid, PolicySolution, SolverConfig, SolverDraws, TerminalCheck,
    POLICY_AGES,
};
pub use spline::MonotoneSpline;

pub const KAPPA_INTERPRETATION: &str = "kappa read as a latent diagnosis threshold (reconstruction)";
