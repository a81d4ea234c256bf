use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dataset::{PanelDataset, CENSOR_PERIOD, CENSOR_VALUE};
use crate::error::{Error, Result};

pub const INTERCEPT: &str = "(intercept)";

/// Which regressors enter a model, in order.
///
/// Each entry in `regressors` is a term: a column name, a period dummy
/// `period=<p>`, or an interaction of those joined by `:` (for example
/// `abortion:period=17`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DesignSpec {
    pub regressors: Vec<String>,
    /// Append the two censor indicators after the named regressors. Flags
    /// that are identically zero are skipped.
    pub include_censor_flags: bool,
    pub intercept: bool,
    /// Replace the outcome by its absorbing (cumulative) version first.
    pub absorbing_outcome: bool,
}

impl Default for DesignSpec {
    fn default() -> Self {
        DesignSpec {
            regressors: Vec::new(),
            include_censor_flags: true,
            intercept: false,
            absorbing_outcome: false,
        }
    }
}

impl DesignSpec {
    pub fn new<S: Into<String>>(regressors: impl IntoIterator<Item = S>) -> Self {
        DesignSpec {
            regressors: regressors.into_iter().map(Into::into).collect(),
            ..DesignSpec::default()
        }
    }

    pub fn without_censor_flags(mut self) -> Self {
        self.include_censor_flags = false;
        self
    }

    pub fn with_intercept(mut self) -> Self {
        self.intercept = true;
        self
    }
}

/// Regressor matrix and outcome for a balanced panel, rows in
/// `(unit, period)` order.
#[derive(Debug, Clone)]
pub struct Design {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub names: Vec<String>,
    pub treatment_index: Option<usize>,
    /// 0-based cluster (unit) index per row.
    pub clusters: Vec<usize>,
    pub unit_ids: Vec<i64>,
    pub n_units: usize,
    pub n_periods: usize,
}

impl Design {
    /// Wrap raw arrays, e.g. for cross-sectional regressions. Each row is
    /// treated as its own period of the cluster it belongs to.
    pub fn from_parts(x: DMatrix<f64>, y: DVector<f64>, names: Vec<String>, clusters: Vec<usize>) -> Result<Self> {
        if x.nrows() != y.len() || clusters.len() != y.len() || names.len() != x.ncols() {
            return Err(Error::Precondition("design parts are not conformable".into()));
        }
        let n_units = clusters.iter().copied().max().map_or(0, |m| m + 1);
        Ok(Design {
            x,
            y,
            names,
            treatment_index: None,
            clusters,
            unit_ids: (1..=n_units as i64).collect(),
            n_units,
            n_periods: 0,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn n_regressors(&self) -> usize {
        self.x.ncols()
    }
}

enum Factor {
    Column(Vec<f64>),
    PeriodDummy(i64),
}

fn resolve_factor(panel: &PanelDataset, token: &str) -> Result<Factor> {
    let token = token.trim();
    if let Some(p) = token.strip_prefix("period=") {
        let p: i64 = p
            .trim()
            .parse()
            .map_err(|_| Error::Schema(format!("bad period dummy `{token}`")))?;
        return Ok(Factor::PeriodDummy(p));
    }
    panel
        .column(token)
        .map(Factor::Column)
        .ok_or_else(|| Error::Schema(format!("regressor `{token}` does not resolve to a column")))
}

fn term_values(panel: &PanelDataset, term: &str) -> Result<Vec<f64>> {
    let mut values = vec![1.0; panel.n_rows()];
    for token in term.split(':') {
        match resolve_factor(panel, token)? {
            Factor::Column(c) => values.iter_mut().zip(c).for_each(|(v, c)| *v *= c),
            Factor::PeriodDummy(p) => values
                .iter_mut()
                .zip(panel.periods())
                .for_each(|(v, &q)| *v *= f64::from(u8::from(q == p))),
        }
    }
    Ok(values)
}

/// Construct the regressor matrix and outcome vector named by `spec`.
///
/// Rank is not checked here.
pub fn build_design(panel: &PanelDataset, spec: &DesignSpec) -> Result<Design> {
    let (n, t) = panel.require_balanced("design construction")?;
    let mut names: Vec<String> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();

    let treat = panel.treatment_name();
    let treat_count = spec.regressors.iter().filter(|r| r.trim() == treat).count();
    if treat_count > 1 {
        return Err(Error::Schema(format!("treatment `{treat}` listed {treat_count} times")));
    }

    if spec.intercept {
        names.push(INTERCEPT.to_string());
        columns.push(vec![1.0; panel.n_rows()]);
    }
    for term in &spec.regressors {
        let name = term.trim().to_string();
        if names.contains(&name) {
            return Err(Error::Schema(format!("regressor `{name}` listed twice")));
        }
        columns.push(term_values(panel, &name)?);
        names.push(name);
    }
    if spec.include_censor_flags {
        for flag in [CENSOR_PERIOD, CENSOR_VALUE] {
            if names.iter().any(|n| n == flag) {
                continue;
            }
            let values = panel.column(flag).expect("censor flags always exist");
            if values.iter().any(|&v| v != 0.0) {
                names.push(flag.to_string());
                columns.push(values);
            }
        }
    }

    let rows = panel.n_rows();
    let x = DMatrix::from_fn(rows, columns.len(), |r, c| columns[c][r]);
    let y = if spec.absorbing_outcome {
        DVector::from_vec(panel.absorb_outcome()?.outcome().to_vec())
    } else {
        DVector::from_column_slice(panel.outcome())
    };
    let treatment_index = names.iter().position(|n| n == treat);
    Ok(Design {
        x,
        y,
        names,
        treatment_index,
        clusters: panel.unit_index(),
        unit_ids: panel.unit_ids(),
        n_units: n,
        n_periods: t,
    })
}
