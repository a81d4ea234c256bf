//! Pooled OLS, the within estimator, grouped fixed effects, group-count
//! selection and post-estimation diagnostics.

mod bic;
mod flow;
mod gfe;
mod linear;
mod profile;

pub use bic::{bic, bic_penalty, scan_groups, select_groups, BicRecord, BicScan, BicVariant};
pub use flow::{cross_tab, group_flow, FlowTable};
pub use gfe::{assign_groups, default_restarts, gfe_fit, GfeFit, GfeOptions, GfeProblem, RestartDiagnostics, WarmStart};
pub use linear::{fe_fit, fe_fit_design, matrix_from_columns, ols_fit, LinearFit};
pub use profile::{profile_regression, PROFILE_REGRESSOR};
