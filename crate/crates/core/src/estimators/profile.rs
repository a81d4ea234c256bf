use super::gfe::GfeFit;
use super::linear::{fe_fit, ols_fit, LinearFit};
use crate::error::{Error, Result};
use crate::panel::{build_design, DesignSpec, PanelDataset};

pub const PROFILE_REGRESSOR: &str = "profile";

/// Regress a behavior column on the unit's assigned profile `α̂_{ĝ_i t}`
/// plus the covariates of `covariates`, pooled with an intercept or with
/// unit fixed effects.
pub fn profile_regression(
    panel: &PanelDataset,
    behavior: &str,
    fit: &GfeFit,
    covariates: &DesignSpec,
    with_unit_fe: bool,
) -> Result<LinearFit> {
    let (_, t) = panel.require_balanced("profile regression")?;
    if panel.unit_ids() != fit.unit_ids || fit.profiles.first().map_or(0, Vec::len) != t {
        return Err(Error::Precondition("fit and behavior panel do not share the unit × period grid".into()));
    }
    let values = panel
        .column(behavior)
        .ok_or_else(|| Error::Schema(format!("unknown behavior column `{behavior}`")))?;
    let outcome_name = panel.outcome_name().to_string();
    let work = panel
        .clone()
        .with_column(&outcome_name, values)?
        .add_covariate(PROFILE_REGRESSOR, fit.assigned_profile_values())?;

    let mut regressors = vec![PROFILE_REGRESSOR.to_string()];
    regressors.extend(covariates.regressors.iter().cloned());
    let spec = DesignSpec {
        regressors,
        intercept: !with_unit_fe,
        absorbing_outcome: false,
        ..covariates.clone()
    };
    if with_unit_fe {
        fe_fit(&work, &spec).map_err(|e| match e {
            Error::NoWithinVariation { column } if column == PROFILE_REGRESSOR => Error::SingularDesign {
                columns: vec!["unit effects".into(), column],
            },
            other => other,
        })
    } else {
        ols_fit(&build_design(&work, &spec)?)
    }
}
