use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{check_full_rank, least_squares};
use crate::panel::{build_design, clustered_covariance, ClusteredCov, Design, DesignSpec, PanelDataset};

/// Least-squares fit with cluster-robust covariance.
#[derive(Debug, Clone, Serialize)]
pub struct LinearFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    #[serde(skip)]
    pub residuals: Vec<f64>,
    pub covariance: ClusteredCov,
    /// Mean squared residual.
    pub objective: f64,
    pub n_obs: usize,
}

impl LinearFit {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.std_errors[i])
    }

    pub(crate) fn assemble(
        names: Vec<String>,
        coefficients: Vec<f64>,
        residuals: Vec<f64>,
        covariance: ClusteredCov,
    ) -> Self {
        let n_obs = residuals.len();
        let objective = residuals.iter().map(|r| r * r).sum::<f64>() / n_obs as f64;
        LinearFit {
            names,
            std_errors: covariance.std_errors(),
            coefficients,
            residuals,
            covariance,
            objective,
            n_obs,
        }
    }
}

/// Pooled least squares of `design.y` on `design.x`, standard errors
/// clustered on `design.clusters`.
///
/// Exactly collinear columns are an error; nothing is dropped silently.
pub fn ols_fit(design: &Design) -> Result<LinearFit> {
    check_full_rank(&design.x, &design.names)?;
    let beta = if design.x.ncols() == 0 {
        DVector::zeros(0)
    } else {
        least_squares(&design.x, &design.y)
    };
    let resid = &design.y - &design.x * &beta;
    let cov = clustered_covariance(&resid, &design.x, &design.clusters, &design.names)?;
    Ok(LinearFit::assemble(
        design.names.clone(),
        beta.iter().copied().collect(),
        resid.iter().copied().collect(),
        cov,
    ))
}

/// Unit-demean every column of a balanced design, rejecting regressors that
/// are constant within every unit.
pub(crate) fn within_design(design: &Design) -> Result<Design> {
    let t = design.n_periods;
    if t == 0 || design.n_obs() != design.n_units * t {
        return Err(Error::Precondition("within transformation requires a balanced design".into()));
    }
    let mut x = design.x.clone();
    for (j, name) in design.names.iter().enumerate() {
        let mut col: Vec<f64> = x.column(j).iter().copied().collect();
        let scale = col.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        crate::panel::demean_in_blocks(&mut col, t);
        if col.iter().all(|v| v.abs() <= 1e-12 * scale) {
            return Err(Error::NoWithinVariation { column: name.clone() });
        }
        x.set_column(j, &DVector::from_vec(col));
    }
    let mut y: Vec<f64> = design.y.iter().copied().collect();
    crate::panel::demean_in_blocks(&mut y, t);
    Ok(Design {
        x,
        y: DVector::from_vec(y),
        ..design.clone()
    })
}

/// Fixed-effects (within) estimator: OLS on unit-demeaned data.
///
/// Any intercept requested by `spec` is ignored, as it is absorbed by the
/// unit effects.
pub fn fe_fit(panel: &PanelDataset, spec: &DesignSpec) -> Result<LinearFit> {
    let spec = DesignSpec {
        intercept: false,
        ..spec.clone()
    };
    let design = build_design(panel, &spec)?;
    fe_fit_design(&design)
}

pub fn fe_fit_design(design: &Design) -> Result<LinearFit> {
    ols_fit(&within_design(design)?)
}

/// Regressor matrix from column slices, for callers holding raw data.
pub fn matrix_from_columns(columns: &[Vec<f64>]) -> DMatrix<f64> {
    let rows = columns.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows, columns.len(), |r, c| columns[c][r])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(x: &[Vec<f64>], y: &[f64]) -> Design {
        let names = (0..x.len()).map(|i| format!("x{i}")).collect();
        Design::from_parts(
            matrix_from_columns(x),
            DVector::from_column_slice(y),
            names,
            (0..y.len()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn exact_linear_relation() {
        let x = vec![1., 2., 3., 4.];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let fit = ols_fit(&design(&[x], &y)).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-14);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-13));
    }

    #[test]
    fn orthogonal_outcome_gives_zero_slope() {
        let x = vec![-1., 0., 1., 0.];
        let y = vec![1., 5., 1., -7.];
        let fit = ols_fit(&design(&[vec![1.0; 4], x], &y)).unwrap();
        assert!(fit.coefficients[1].abs() < 1e-12);
    }

    #[test]
    fn five_point_hand_solution() {
        // x = 1..5, y = (2, 3, 5, 4, 6):
        // slope = Sxy/Sxx = 9/10, intercept = 4 - 0.9*3 = 1.3
        let x = vec![1., 2., 3., 4., 5.];
        let y = vec![2., 3., 5., 4., 6.];
        let fit = ols_fit(&design(&[vec![1.0; 5], x], &y)).unwrap();
        assert!((fit.coefficients[0] - 1.3).abs() < 1e-12);
        assert!((fit.coefficients[1] - 0.9).abs() < 1e-12);
        let ssr: f64 = fit.residuals.iter().map(|r| r * r).sum();
        assert!((fit.objective - ssr / 5.0).abs() < 1e-15);
    }

    #[test]
    fn collinear_design_is_an_error() {
        let x = vec![1., 2., 3.];
        let x2: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        assert!(matches!(
            ols_fit(&design(&[x, x2], &[1., 2., 2.])),
            Err(Error::SingularDesign { .. })
        ));
    }

    #[test]
    fn constant_within_unit_outcome_gives_zero_fe() {
        let p = PanelDataset::from_dense(
            3,
            3,
            vec![1., 1., 1., 5., 5., 5., -2., -2., -2.],
            vec![0., 1., 0., 1., 1., 0., 0., 0., 1.],
            vec![],
            vec![],
        )
        .unwrap();
        let fit = fe_fit(&p, &DesignSpec::new(["treatment"])).unwrap();
        assert!(fit.coefficients[0].abs() < 1e-14);
    }

    #[test]
    fn unit_constant_regressor_is_rejected() {
        let p = PanelDataset::from_dense(2, 2, vec![1., 2., 3., 5.], vec![0., 1., 1., 0.], vec!["z".into()], vec![vec![3., 3., 4., 4.]]).unwrap();
        match fe_fit(&p, &DesignSpec::new(["treatment", "z"])) {
            Err(Error::NoWithinVariation { column }) => assert_eq!(column, "z"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
