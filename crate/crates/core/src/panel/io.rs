use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{PanelDataset, PanelRow};
use crate::error::{Error, Result};

/// Maps file header names onto panel roles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PanelSchema {
    pub unit: String,
    pub period: String,
    pub outcome: String,
    pub treatment: String,
    pub covariates: Vec<String>,
}

impl Default for PanelSchema {
    fn default() -> Self {
        PanelSchema {
            unit: "unit".into(),
            period: "period".into(),
            outcome: "outcome".into(),
            treatment: "treatment".into(),
            covariates: Vec::new(),
        }
    }
}

/// Read a comma-separated panel file. The result is generally unbalanced;
/// empty cells and `NA` are kept as missing (`NaN`).
pub fn load_panel(path: impl AsRef<Path>, schema: &PanelSchema) -> Result<PanelDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_panel_from_reader(file, schema)
}

pub fn load_panel_from_reader<R: Read>(reader: R, schema: &PanelSchema) -> Result<PanelDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "missing header row".into(),
        });
    }
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column `{name}` not found in header")))
    };
    let unit_col = find(&schema.unit)?;
    let period_col = find(&schema.period)?;
    let outcome_col = find(&schema.outcome)?;
    let treatment_col = find(&schema.treatment)?;
    let cov_cols = schema
        .covariates
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let unit = parse_int(&rec[unit_col], line, &schema.unit)?;
        let period = parse_int(&rec[period_col], line, &schema.period)?;
        if !seen.insert((unit, period)) {
            return Err(Error::DuplicateKey { unit, period, line });
        }
        let outcome = parse_cell(&rec[outcome_col], line, &schema.outcome)?;
        let treatment = parse_cell(&rec[treatment_col], line, &schema.treatment)?;
        if treatment.is_finite() && treatment != 0.0 && treatment != 1.0 {
            return Err(Error::Parse {
                line,
                message: format!("treatment `{}` must be 0 or 1", &rec[treatment_col]),
            });
        }
        let covariates = cov_cols
            .iter()
            .zip(&schema.covariates)
            .map(|(&c, name)| parse_cell(&rec[c], line, name))
            .collect::<Result<Vec<_>>>()?;
        rows.push(PanelRow::new(unit, period, outcome, treatment, covariates));
    }
    PanelDataset::from_rows(
        schema.outcome.clone(),
        schema.treatment.clone(),
        schema.covariates.clone(),
        rows,
    )
}

fn parse_int(s: &str, line: u64, col: &str) -> Result<i64> {
    s.parse::<i64>().map_err(|_| Error::Parse {
        line,
        message: format!("column `{col}`: `{s}` is not an integer"),
    })
}

fn parse_cell(s: &str, line: u64, col: &str) -> Result<f64> {
    if s.is_empty() || s == "NA" {
        return Ok(f64::NAN);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            line,
            message: format!("column `{col}`: `{s}` is not a finite number"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> PanelSchema {
        PanelSchema {
            outcome: "m".into(),
            treatment: "a".into(),
            covariates: vec!["x".into()],
            ..PanelSchema::default()
        }
    }

    #[test]
    fn reads_unbalanced_file() {
        let data = "unit,period,m,a,x\n1,1,0,0,1.5\n1,2,1,1,2.5\n2,1,0,0,3\n";
        let p = load_panel_from_reader(data.as_bytes(), &schema()).unwrap();
        assert_eq!(p.n_units(), 2);
        assert_eq!(p.n_periods(), 2);
        assert_eq!(p.n_rows(), 3);
        // the missing cell is (2, 2): one short of the 2×2 grid
        assert_eq!(p.n_units() * p.n_periods() - p.n_rows(), 1);
        assert!(!p.is_balanced());
    }

    #[test]
    fn duplicate_key_reports_line() {
        let data = "unit,period,m,a,x\n1,1,0,0,1\n1,1,0,0,2\n";
        match load_panel_from_reader(data.as_bytes(), &schema()) {
            Err(Error::DuplicateKey { unit: 1, period: 1, line }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn na_and_empty_are_missing_not_zero() {
        let data = "unit,period,m,a,x\n1,1,NA,0,\n1,2,1,1,2\n";
        let p = load_panel_from_reader(data.as_bytes(), &schema()).unwrap();
        let expected_m = [f64::NAN, 1.0];
        let expected_x = [f64::NAN, 2.0];
        for (got, want) in p.outcome().iter().zip(expected_m) {
            assert!(got.is_nan() == want.is_nan() && (want.is_nan() || *got == want));
        }
        for (got, want) in p.covariate("x").unwrap().iter().zip(expected_x) {
            assert!(got.is_nan() == want.is_nan() && (want.is_nan() || *got == want));
        }
    }

    #[test]
    fn malformed_row_reports_line() {
        let data = "unit,period,m,a,x\n1,1,0,0,1\n1,x,0,0,1\n";
        match load_panel_from_reader(data.as_bytes(), &schema()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_schema_column() {
        let data = "unit,period,m,a\n1,1,0,0\n";
        assert!(matches!(
            load_panel_from_reader(data.as_bytes(), &schema()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn quoted_fields_follow_rfc4180() {
        let data = "unit,period,m,a,x\n\"1\",\"1\",\"0.5\",0,\"1\"\n";
        let p = load_panel_from_reader(data.as_bytes(), &schema()).unwrap();
        assert_eq!(p.outcome(), &[0.5]);
    }
}
