use std::collections::BTreeMap;

use super::study::{identified_profiles, matched_profile_rmse, SimStudyResult};
use crate::error::{Error, Result};

fn write_rows<I, R>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io {
        path: "<memory>".into(),
        source: e.into(),
    };
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io {
        path: "<memory>".into(),
        source: e.into_error(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per replication and estimator.
pub fn replications_csv(study: &SimStudyResult) -> Result<String> {
    let mut rows = Vec::new();
    for r in &study.records {
        let common = |est: String, xi: String, se: String| {
            vec![
                r.replication.to_string(),
                est,
                xi,
                se,
                opt(r.bic_standard),
                opt(r.bic_steep),
                opt(r.profile_rmse),
                r.error.clone().unwrap_or_default(),
            ]
        };
        if r.estimates.is_empty() {
            rows.push(common(String::new(), String::new(), String::new()));
        }
        for e in &r.estimates {
            rows.push(common(e.estimator.to_string(), e.xi.to_string(), e.se.to_string()));
        }
    }
    write_rows(
        &["replication", "estimator", "xi", "se", "bic_standard", "bic_steep", "profile_rmse", "error"],
        rows,
    )
}

/// Mean estimate per estimator with a 95% band from the mean analytical
/// standard error.
pub fn coef_figure_csv(study: &SimStudyResult) -> Result<String> {
    let z = 1.959_963_984_540_054;
    write_rows(
        &["estimator", "mean", "mc_se", "mean_se", "ci_lower", "ci_upper"],
        study.summaries.iter().map(|s| {
            vec![
                s.estimator.to_string(),
                s.mean.to_string(),
                s.mc_se.to_string(),
                s.mean_se.to_string(),
                (s.mean - z * s.mean_se).to_string(),
                (s.mean + z * s.mean_se).to_string(),
            ]
        }),
    )
}

/// Mean criterion value per `G` across replications.
pub fn bic_figure_csv(study: &SimStudyResult) -> Result<String> {
    let mut acc: BTreeMap<usize, (f64, f64, usize)> = BTreeMap::new();
    for r in study.records.iter().filter(|r| r.error.is_none()) {
        for p in &r.bic_curve {
            let e = acc.entry(p.groups).or_insert((0.0, 0.0, 0));
            e.0 += p.standard;
            e.1 += p.steep;
            e.2 += 1;
        }
    }
    write_rows(
        &["groups", "bic_standard", "bic_steep", "replications"],
        acc.into_iter().map(|(g, (a, b, c))| {
            vec![g.to_string(), (a / c as f64).to_string(), (b / c as f64).to_string(), c.to_string()]
        }),
    )
}

/// True (time-demeaned) and estimated profiles of the first replication,
/// estimated groups matched to true ones when the counts agree.
pub fn profile_figure_csv(study: &SimStudyResult) -> Result<String> {
    let truth = identified_profiles(&study.true_profiles);
    let mut rows = Vec::new();
    for (g, p) in truth.iter().enumerate() {
        for (s, v) in p.iter().enumerate() {
            rows.push(vec!["true".into(), (g + 1).to_string(), (s + 1).to_string(), v.to_string()]);
        }
    }
    if let Some(est) = study.records.first().and_then(|r| r.profiles.as_ref()) {
        let order: Vec<usize> = if est.len() == truth.len() {
            matched_profile_rmse(est, &truth)?.1
        } else {
            (0..est.len()).collect()
        };
        for (g, &k) in order.iter().enumerate() {
            for (s, v) in est[k].iter().enumerate() {
                rows.push(vec!["estimated".into(), (g + 1).to_string(), (s + 1).to_string(), v.to_string()]);
            }
        }
    }
    write_rows(&["kind", "group", "period", "value"], rows)
}
