use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Name under which the missing-period flag is addressable as a column.
pub const CENSOR_PERIOD: &str = "censor_period";
/// Name under which the missing-value flag is addressable as a column.
pub const CENSOR_VALUE: &str = "censor_value";

/// One observation before it is placed in a [`PanelDataset`]. Missing cells
/// are `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    pub unit: i64,
    pub period: i64,
    pub outcome: f64,
    pub treatment: f64,
    pub covariates: Vec<f64>,
}

impl PanelRow {
    pub fn new(unit: i64, period: i64, outcome: f64, treatment: f64, covariates: Vec<f64>) -> Self {
        PanelRow {
            unit,
            period,
            outcome,
            treatment,
            covariates,
        }
    }
}

/// Long-format panel, rows sorted by `(unit, period)`.
///
/// Missing cells are stored as `NaN` until [`balance_panel`](super::balance_panel)
/// replaces them with zeros and raises the censor flags. Columns are stored
/// separately so that transformations can rewrite one column at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    pub(crate) outcome_name: String,
    pub(crate) treatment_name: String,
    pub(crate) covariate_names: Vec<String>,
    pub(crate) unit: Vec<i64>,
    pub(crate) period: Vec<i64>,
    pub(crate) outcome: Vec<f64>,
    pub(crate) treatment: Vec<f64>,
    pub(crate) covariates: Vec<Vec<f64>>,
    pub(crate) censor_period: Vec<u8>,
    pub(crate) censor_value: Vec<u8>,
}

impl PanelDataset {
    /// Assemble a panel from rows. Rows are sorted; duplicate keys are
    /// rejected. Censor flags start at zero.
    pub fn from_rows(
        outcome_name: impl Into<String>,
        treatment_name: impl Into<String>,
        covariate_names: Vec<String>,
        mut rows: Vec<PanelRow>,
    ) -> Result<Self> {
        let k = covariate_names.len();
        rows.sort_by_key(|r| (r.unit, r.period));
        for w in rows.windows(2) {
            if w[0].unit == w[1].unit && w[0].period == w[1].period {
                return Err(Error::DuplicateKey {
                    unit: w[0].unit,
                    period: w[0].period,
                    line: 0,
                });
            }
        }
        let mut covariates = vec![Vec::with_capacity(rows.len()); k];
        let mut unit = Vec::with_capacity(rows.len());
        let mut period = Vec::with_capacity(rows.len());
        let mut outcome = Vec::with_capacity(rows.len());
        let mut treatment = Vec::with_capacity(rows.len());
        for r in rows {
            if r.covariates.len() != k {
                return Err(Error::Schema(format!(
                    "row ({}, {}) has {} covariates, expected {k}",
                    r.unit,
                    r.period,
                    r.covariates.len()
                )));
            }
            unit.push(r.unit);
            period.push(r.period);
            outcome.push(r.outcome);
            treatment.push(r.treatment);
            for (c, v) in covariates.iter_mut().zip(r.covariates) {
                c.push(v);
            }
        }
        let n = unit.len();
        let names_unique: BTreeSet<&String> = covariate_names.iter().collect();
        if names_unique.len() != k {
            return Err(Error::Schema("duplicate covariate names".into()));
        }
        Ok(PanelDataset {
            outcome_name: outcome_name.into(),
            treatment_name: treatment_name.into(),
            covariate_names,
            unit,
            period,
            outcome,
            treatment,
            covariates,
            censor_period: vec![0; n],
            censor_value: vec![0; n],
        })
    }

    /// Build a balanced panel directly from dense `n_units × n_periods`
    /// arrays (row-major, unit-major). Units are numbered `1..=n`, periods
    /// `1..=t`.
    pub fn from_dense(
        n_units: usize,
        n_periods: usize,
        outcome: Vec<f64>,
        treatment: Vec<f64>,
        covariate_names: Vec<String>,
        covariates: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let rows = n_units * n_periods;
        if outcome.len() != rows || treatment.len() != rows || covariates.iter().any(|c| c.len() != rows) {
            return Err(Error::Schema("dense arrays do not match n_units × n_periods".into()));
        }
        if covariates.len() != covariate_names.len() {
            return Err(Error::Schema("covariate names and columns differ in count".into()));
        }
        let unit = (0..rows).map(|r| (r / n_periods) as i64 + 1).collect();
        let period = (0..rows).map(|r| (r % n_periods) as i64 + 1).collect();
        Ok(PanelDataset {
            outcome_name: "outcome".into(),
            treatment_name: "treatment".into(),
            covariate_names,
            unit,
            period,
            outcome,
            treatment,
            covariates,
            censor_period: vec![0; rows],
            censor_value: vec![0; rows],
        })
    }

    pub fn n_rows(&self) -> usize {
        self.unit.len()
    }

    /// Distinct unit ids in ascending order.
    pub fn unit_ids(&self) -> Vec<i64> {
        let mut ids = self.unit.clone();
        ids.dedup();
        ids
    }

    pub fn n_units(&self) -> usize {
        self.unit_ids().len()
    }

    /// `(min, max)` period over all rows.
    pub fn period_range(&self) -> Option<(i64, i64)> {
        let min = self.period.iter().copied().min()?;
        let max = self.period.iter().copied().max()?;
        Some((min, max))
    }

    /// Length of the contiguous period range spanned by the data.
    pub fn n_periods(&self) -> usize {
        self.period_range()
            .map(|(lo, hi)| (hi - lo + 1) as usize)
            .unwrap_or(0)
    }

    pub fn outcome_name(&self) -> &str {
        &self.outcome_name
    }

    pub fn treatment_name(&self) -> &str {
        &self.treatment_name
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn units(&self) -> &[i64] {
        &self.unit
    }

    pub fn periods(&self) -> &[i64] {
        &self.period
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn treatment(&self) -> &[f64] {
        &self.treatment
    }

    pub fn censor_period(&self) -> &[u8] {
        &self.censor_period
    }

    pub fn censor_value(&self) -> &[u8] {
        &self.censor_value
    }

    pub fn covariate(&self, name: &str) -> Option<&[f64]> {
        self.covariate_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.covariates[i].as_slice())
    }

    /// Values of any named column: outcome, treatment, a covariate or one of
    /// the censor flags.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        if name == self.outcome_name {
            Some(self.outcome.clone())
        } else if name == self.treatment_name {
            Some(self.treatment.clone())
        } else if let Some(c) = self.covariate(name) {
            Some(c.to_vec())
        } else if name == CENSOR_PERIOD {
            Some(self.censor_period.iter().map(|&f| f as f64).collect())
        } else if name == CENSOR_VALUE {
            Some(self.censor_value.iter().map(|&f| f as f64).collect())
        } else {
            None
        }
    }

    pub(crate) fn column_mut(&mut self, name: &str) -> Option<&mut Vec<f64>> {
        if name == self.outcome_name {
            Some(&mut self.outcome)
        } else if name == self.treatment_name {
            Some(&mut self.treatment)
        } else {
            let i = self.covariate_names.iter().position(|n| n == name)?;
            Some(&mut self.covariates[i])
        }
    }

    /// Replace a data column (outcome, treatment or covariate) wholesale.
    pub fn with_column(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.n_rows() {
            return Err(Error::Schema(format!("column `{name}` has wrong length")));
        }
        let slot = self
            .column_mut(name)
            .ok_or_else(|| Error::Schema(format!("unknown column `{name}`")))?;
        *slot = values;
        Ok(self)
    }

    /// Append a covariate column.
    pub fn add_covariate(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.len() != self.n_rows() {
            return Err(Error::Schema(format!("column `{name}` has wrong length")));
        }
        if self.column(&name).is_some() {
            return Err(Error::Schema(format!("column `{name}` already exists")));
        }
        self.covariate_names.push(name);
        self.covariates.push(values);
        Ok(self)
    }

    fn data_columns(&self) -> impl Iterator<Item = &Vec<f64>> {
        std::iter::once(&self.outcome)
            .chain(std::iter::once(&self.treatment))
            .chain(self.covariates.iter())
    }

    /// Balanced: one row for every unit on the full contiguous period grid,
    /// and no missing or non-finite cells.
    pub fn is_balanced(&self) -> bool {
        let n = self.n_units();
        let t = self.n_periods();
        if n == 0 || self.n_rows() != n * t {
            return false;
        }
        let (lo, _) = self.period_range().unwrap();
        let grid_ok = self
            .period
            .iter()
            .enumerate()
            .all(|(r, &p)| p == lo + (r % t) as i64);
        grid_ok && self.data_columns().all(|c| c.iter().all(|v| v.is_finite()))
    }

    pub(crate) fn require_balanced(&self, what: &str) -> Result<(usize, usize)> {
        if !self.is_balanced() {
            return Err(Error::Precondition(format!("{what} requires a balanced panel")));
        }
        Ok((self.n_units(), self.n_periods()))
    }

    /// Cluster index (0-based unit position) for each row.
    pub fn unit_index(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n_rows());
        let mut idx = 0usize;
        for r in 0..self.n_rows() {
            if r > 0 && self.unit[r] != self.unit[r - 1] {
                idx += 1;
            }
            out.push(idx);
        }
        out
    }
}
