use gfe_core::simulation::{
    bic_figure_csv, coef_figure_csv, identified_profiles, profile_figure_csv, replications_csv, run_monte_carlo,
    SimStudyResult,
};

use crate::config::SimulateConfig;
use crate::error::CliError;
use crate::output::{table, OutputDir};
use crate::svg::{Chart, Series};

pub fn run(cfg: &SimulateConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let mut study = cfg.study.clone();
    if let Some(seed) = cfg.seed {
        study.dgp.seed = seed;
        study.gfe.seed = seed;
    }
    log::info!(
        "simulating {} replications at N = {}, T = {}",
        study.replications,
        study.dgp.n,
        study.dgp.t
    );
    let result = run_monte_carlo(&study)?;
    if result.failed > 0 {
        log::warn!("{} of {} replications failed", result.failed, study.replications);
    }

    out.json("study.json", &result)?;
    out.csv("replications.csv", &replications_csv(&result)?)?;
    let rows = result.summaries.iter().map(|s| {
        vec![
            s.estimator.to_string(),
            s.replications.to_string(),
            s.mean.to_string(),
            s.sd.to_string(),
            s.mc_se.to_string(),
            s.bias.to_string(),
            s.mean_se.to_string(),
            s.coverage.to_string(),
        ]
    });
    out.csv(
        "summary.csv",
        &table(
            &["estimator", "replications", "mean", "sd", "mc_se", "bias", "mean_se", "coverage"],
            rows,
        )?,
    )?;
    out.csv("sim_coef.csv", &coef_figure_csv(&result)?)?;
    out.svg("sim_coef.svg", &coef_chart(&result).render())?;
    if study.bic.is_some() {
        out.csv("sim_bic.csv", &bic_figure_csv(&result)?)?;
        out.svg("sim_bic.svg", &bic_chart(&result).render())?;
        let counts: Vec<Vec<String>> = result
            .bic_standard_counts
            .keys()
            .chain(result.bic_steep_counts.keys())
            .copied()
            .collect::<std::collections::BTreeSet<usize>>()
            .into_iter()
            .map(|g| {
                vec![
                    g.to_string(),
                    result.bic_standard_counts.get(&g).copied().unwrap_or(0).to_string(),
                    result.bic_steep_counts.get(&g).copied().unwrap_or(0).to_string(),
                ]
            })
            .collect();
        out.csv(
            "sim_bic_selection.csv",
            &table(&["groups", "standard", "steep"], counts)?,
        )?;
    }
    if study.keep_profiles && study.profile_groups.is_some() {
        out.csv("sim_profiles.csv", &profile_figure_csv(&result)?)?;
        out.svg("sim_profiles.svg", &profile_chart(&result).render())?;
    }
    Ok(())
}

fn coef_chart(r: &SimStudyResult) -> Chart {
    let z = 1.959_963_984_540_054;
    let pts = r.summaries.iter().enumerate().map(|(k, s)| (k as f64, s.mean)).collect();
    let whiskers = r.summaries.iter().map(|s| (s.mean - z * s.mean_se, s.mean + z * s.mean_se)).collect();
    Chart {
        title: "Mean estimate by estimator".into(),
        x_label: "estimator".into(),
        y_label: "estimated coefficient".into(),
        x_categories: r.summaries.iter().enumerate().map(|(k, s)| (k as f64, s.estimator.to_string())).collect(),
        series: vec![Series::points("mean ± 1.96 se", pts, Some(whiskers))],
        reference: Some(r.config.dgp.xi),
    }
}

fn bic_chart(r: &SimStudyResult) -> Chart {
    let mut standard = std::collections::BTreeMap::<usize, (f64, usize)>::new();
    let mut steep = std::collections::BTreeMap::<usize, (f64, usize)>::new();
    for rec in r.records.iter().filter(|x| x.error.is_none()) {
        for p in &rec.bic_curve {
            let a = standard.entry(p.groups).or_default();
            a.0 += p.standard;
            a.1 += 1;
            let b = steep.entry(p.groups).or_default();
            b.0 += p.steep;
            b.1 += 1;
        }
    }
    let mean = |m: std::collections::BTreeMap<usize, (f64, usize)>| {
        m.into_iter().map(|(g, (s, n))| (g as f64, s / n as f64)).collect()
    };
    Chart {
        title: "Mean information criterion".into(),
        x_label: "groups".into(),
        y_label: "criterion".into(),
        series: vec![Series::line("standard", mean(standard)), Series::line("steep", mean(steep))],
        ..Chart::default()
    }
}

fn profile_chart(r: &SimStudyResult) -> Chart {
    let mut series: Vec<Series> = identified_profiles(&r.true_profiles)
        .iter()
        .enumerate()
        .map(|(g, p)| Series::line(format!("true {}", g + 1), p.iter().enumerate().map(|(s, v)| ((s + 1) as f64, *v)).collect()))
        .collect();
    if let Some(est) = r.records.first().and_then(|x| x.profiles.as_ref()) {
        for (g, p) in est.iter().enumerate() {
            series.push(Series::points(
                format!("estimated {}", g + 1),
                p.iter().enumerate().map(|(s, v)| ((s + 1) as f64, *v)).collect(),
                None,
            ));
        }
    }
    Chart {
        title: "True and estimated profiles (replication 1)".into(),
        x_label: "period".into(),
        y_label: "demeaned group effect".into(),
        series,
        ..Chart::default()
    }
}
