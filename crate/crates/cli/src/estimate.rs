use std::collections::BTreeMap;

use gfe_core::estimators::{
    fe_fit, gfe_fit, group_flow, ols_fit, profile_regression, select_groups, BicScan, GfeFit, LinearFit,
};
use gfe_core::panel::{balance_panel, build_design, load_panel, DesignSpec, PanelDataset};
use gfe_core::simulation::Estimator;
use serde::Serialize;

use crate::config::EstimateConfig;
use crate::error::CliError;
use crate::output::{table, OutputDir};
use crate::svg::{Chart, Series};

#[derive(Serialize)]
struct Coefficient<'a> {
    term: &'a str,
    estimate: f64,
    std_error: f64,
}

fn coefficients(fit: &LinearFit) -> Vec<Coefficient<'_>> {
    fit.names
        .iter()
        .zip(&fit.coefficients)
        .zip(&fit.std_errors)
        .map(|((term, &estimate), &std_error)| Coefficient {
            term,
            estimate,
            std_error,
        })
        .collect()
}

#[derive(Serialize)]
struct LinearReport<'a> {
    estimator: String,
    coefficients: Vec<Coefficient<'a>>,
    objective: f64,
    n_obs: usize,
    n_clusters: usize,
}

#[derive(Serialize)]
struct GfeReport<'a> {
    estimator: String,
    groups: usize,
    coefficients: Vec<Coefficient<'a>>,
    objective: f64,
    group_sizes: Vec<usize>,
    /// Group profiles by period, in the reported label order.
    profiles: &'a [Vec<f64>],
    presentation_profiles: &'a [Vec<f64>],
    periods: &'a [i64],
    restarts: usize,
    best_restart_objective: f64,
    converged: bool,
    iterations: usize,
    demeaned: bool,
}

fn linear_report(e: Estimator, fit: &LinearFit) -> LinearReport<'_> {
    LinearReport {
        estimator: e.to_string(),
        coefficients: coefficients(fit),
        objective: fit.objective,
        n_obs: fit.n_obs,
        n_clusters: fit.covariance.n_clusters,
    }
}

fn coef_rows(e: &str, fit: &LinearFit, rows: &mut Vec<Vec<String>>) {
    for c in coefficients(fit) {
        rows.push(vec![e.to_string(), c.term.to_string(), c.estimate.to_string(), c.std_error.to_string()]);
    }
}

/// Load, optionally balance, then run every requested estimator.
pub fn run(cfg: &EstimateConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let panel = prepared_panel(cfg)?;
    let (lo, hi) = panel.period_range().unwrap_or((0, -1));
    let periods: Vec<i64> = (lo..=hi).collect();
    log::info!("panel: {} units × {} periods", panel.n_units(), panel.n_periods());

    let base = DesignSpec {
        intercept: false,
        ..cfg.model.clone()
    };
    let mut opts = cfg.gfe.clone();
    opts.seed = cfg.seed.unwrap_or(opts.seed);

    let mut coef = Vec::new();
    for &e in &cfg.estimators {
        let fit = match e {
            Estimator::Ols => ols_fit(&build_design(&panel, &base.clone().with_intercept())?)?,
            Estimator::Fe => fe_fit(&panel, &base)?,
            Estimator::Gfe(_) => continue,
        };
        coef_rows(&e.to_string(), &fit, &mut coef);
        out.json(&format!("{e}.json"), &linear_report(e, &fit))?;
    }

    let mut fits: BTreeMap<usize, GfeFit> = BTreeMap::new();
    let mut scan: Option<BicScan> = None;
    if let Some(r) = &cfg.groups {
        let s = select_groups(&panel, &base, r.min..=r.max, r.g_max.unwrap_or(r.max), &opts)?;
        for g in r.min..=r.max {
            if let Some(f) = s.fit(g) {
                fits.insert(g, f.clone());
            }
        }
        scan = Some(s);
    }
    let mut wanted: Vec<usize> = cfg
        .estimators
        .iter()
        .filter_map(|e| match e {
            Estimator::Gfe(g) => Some(*g),
            _ => None,
        })
        .collect();
    wanted.extend(cfg.profile_groups);
    wanted.extend(cfg.profile_regression.as_ref().map(|p| p.groups));
    for g in wanted {
        if let std::collections::btree_map::Entry::Vacant(v) = fits.entry(g) {
            v.insert(gfe_fit(&panel, &base, g, &opts)?);
        }
    }

    for (g, fit) in &fits {
        let name = Estimator::Gfe(*g).to_string();
        coef_rows(&name, &fit.fit, &mut coef);
        let report = GfeReport {
            estimator: name.clone(),
            groups: *g,
            coefficients: coefficients(&fit.fit),
            objective: fit.objective(),
            group_sizes: fit.group_sizes(),
            profiles: &fit.profiles,
            presentation_profiles: &fit.presentation_profiles,
            periods: &periods,
            restarts: fit.restarts.len(),
            best_restart_objective: fit.restarts.iter().map(|r| r.objective).fold(f64::INFINITY, f64::min),
            converged: fit.converged,
            iterations: fit.iterations,
            demeaned: fit.demeaned,
        };
        out.json(&format!("{name}.json"), &report)?;
        let rows = fit
            .unit_ids
            .iter()
            .zip(&fit.assignment)
            .map(|(u, a)| vec![u.to_string(), (a + 1).to_string()]);
        out.csv(&format!("{name}_groups.csv"), &table(&["unit", "group"], rows)?)?;
    }
    if !coef.is_empty() {
        out.csv("coefficients.csv", &table(&["estimator", "term", "estimate", "std_error"], coef)?)?;
    }

    if let Some(s) = &scan {
        write_scan(s, out)?;
    }
    let profile_g = cfg
        .profile_groups
        .or_else(|| scan.as_ref().map(|s| s.argmin_steep))
        .or_else(|| fits.keys().next_back().copied());
    if let Some(fit) = profile_g.and_then(|g| fits.get(&g)) {
        write_profiles(fit, &periods, out)?;
    }
    if fits.len() >= 2 {
        let ordered: Vec<GfeFit> = fits.values().cloned().collect();
        let mut rows = Vec::new();
        for tab in group_flow(&ordered)? {
            for (a, row) in tab.counts.iter().enumerate() {
                for (b, n) in row.iter().enumerate() {
                    rows.push(vec![
                        tab.from_groups.to_string(),
                        tab.to_groups.to_string(),
                        (a + 1).to_string(),
                        (b + 1).to_string(),
                        n.to_string(),
                    ]);
                }
            }
        }
        out.csv(
            "group_flow.csv",
            &table(&["from_groups", "to_groups", "from_group", "to_group", "units"], rows)?,
        )?;
    }

    if let Some(p) = &cfg.profile_regression {
        let fit = &fits[&p.groups];
        let covs = DesignSpec::new(p.covariates.clone());
        let reg = profile_regression(&panel, &p.behavior, fit, &covs, p.unit_fe)?;
        out.json(
            "profile_regression.json",
            &LinearReport {
                estimator: format!("profile regression on {}", p.behavior),
                coefficients: coefficients(&reg),
                objective: reg.objective,
                n_obs: reg.n_obs,
                n_clusters: reg.covariance.n_clusters,
            },
        )?;
    }
    Ok(())
}

fn write_scan(s: &BicScan, out: &mut OutputDir) -> Result<(), CliError> {
    out.json("bic_scan.json", s)?;
    let rows = s.records.iter().map(|r| {
        vec![
            r.groups.to_string(),
            r.objective.to_string(),
            r.penalty_standard.to_string(),
            r.bic_standard.to_string(),
            r.penalty_steep.to_string(),
            r.bic_steep.to_string(),
        ]
    });
    out.csv(
        "bic_scan.csv",
        &table(
            &["groups", "objective", "penalty_standard", "bic_standard", "penalty_steep", "bic_steep"],
            rows,
        )?,
    )?;
    let chart = Chart {
        title: "Information criterion by number of groups".into(),
        x_label: "groups".into(),
        y_label: "criterion".into(),
        series: vec![
            Series::line("standard", s.records.iter().map(|r| (r.groups as f64, r.bic_standard)).collect()),
            Series::line("steep", s.records.iter().map(|r| (r.groups as f64, r.bic_steep)).collect()),
        ],
        ..Chart::default()
    };
    out.svg("bic_scan.svg", &chart.render())
}

fn write_profiles(fit: &GfeFit, periods: &[i64], out: &mut OutputDir) -> Result<(), CliError> {
    let sizes = fit.group_sizes();
    let mut rows = Vec::new();
    for (g, (p, q)) in fit.profiles.iter().zip(&fit.presentation_profiles).enumerate() {
        for (s, (a, b)) in p.iter().zip(q).enumerate() {
            rows.push(vec![
                (g + 1).to_string(),
                periods.get(s).map_or_else(|| (s + 1).to_string(), |p| p.to_string()),
                a.to_string(),
                b.to_string(),
                sizes[g].to_string(),
            ]);
        }
    }
    out.csv(
        "profiles.csv",
        &table(&["group", "period", "profile", "presentation_profile", "units"], rows)?,
    )?;
    let chart = Chart {
        title: format!("Group profiles, G = {}", fit.groups),
        x_label: "period".into(),
        y_label: "group effect".into(),
        series: fit
            .presentation_profiles
            .iter()
            .enumerate()
            .map(|(g, p)| {
                let pts = p.iter().enumerate().map(|(s, v)| (periods.get(s).map_or(s as f64, |&x| x as f64), *v));
                Series::line(format!("group {} (n={})", g + 1, sizes[g]), pts.collect())
            })
            .collect(),
        ..Chart::default()
    };
    out.svg("profiles.svg", &chart.render())
}

fn prepared_panel(cfg: &EstimateConfig) -> Result<PanelDataset, CliError> {
    let raw = load_panel(&cfg.panel, &cfg.schema)?;
    Ok(if cfg.balance { balance_panel(&raw)? } else { raw })
}
