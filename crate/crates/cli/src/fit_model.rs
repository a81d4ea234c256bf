use gfe_core::behavioral::{no_bias_counterfactual, solve_model, BehavioralParams, MomentRule, KAPPA_INTERPRETATION};
use gfe_core::smm::{fit_smm, MomentTarget, SmmFit};
use serde::Serialize;

use crate::config::FitModelConfig;
use crate::error::CliError;
use crate::output::{table, OutputDir};
use crate::svg::{Chart, Series};

const GROUPS: [&str; 2] = ["low_risk", "high_risk"];
/// Age at the first model period.
const FIRST_AGE: usize = 16;

#[derive(Serialize)]
struct FitReport<'a> {
    params: &'a BehavioralParams,
    objective: f64,
    free: &'a [String],
    evaluations: usize,
    failures: usize,
    anneal_best: f64,
    anneal_evaluations: usize,
    anneal_outer_loops: usize,
    anneal_final_temperature: f64,
    nelder_mead_best: f64,
    nelder_mead_evaluations: usize,
    nelder_mead_converged: bool,
    target_source: &'a str,
    moment_rule: MomentRule,
    kappa_interpretation: &'static str,
    counterfactual_rule: &'static str,
}

pub fn run(cfg: &FitModelConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let mut smm = cfg.smm.clone();
    smm.seed = cfg.seed.unwrap_or(smm.seed);
    let target = match (&cfg.targets, &cfg.self_target) {
        (Some(path), _) => MomentTarget::load(path)?,
        (None, Some(p)) => MomentTarget::new(solve_model(p, &smm.model)?.moments, "self-generated")?,
        (None, None) => return Err(CliError::config("no targets")),
    };
    let fit = fit_smm(&target, &smm)?;
    log::info!("fit objective {:e} after {} evaluations", fit.objective, fit.evaluations);

    out.json("params.json", &fit.params)?;
    out.json(
        "fit.json",
        &FitReport {
            params: &fit.params,
            objective: fit.objective,
            free: &fit.free,
            evaluations: fit.evaluations,
            failures: fit.failures,
            anneal_best: fit.anneal.best_value,
            anneal_evaluations: fit.anneal.evaluations,
            anneal_outer_loops: fit.anneal.outer_loops,
            anneal_final_temperature: fit.anneal.final_temperature,
            nelder_mead_best: fit.nelder_mead.best_value,
            nelder_mead_evaluations: fit.nelder_mead.evaluations,
            nelder_mead_converged: fit.nelder_mead.converged,
            target_source: &target.source,
            moment_rule: smm.model.rule,
            kappa_interpretation: KAPPA_INTERPRETATION,
            counterfactual_rule: "high-risk group re-solved with beta2 set to the fitted beta1, all else fixed",
        },
    )?;
    write_moments(&fit, &target, out)?;
    write_traces(&fit, out)?;
    if cfg.counterfactual {
        let cf = solve_model(&no_bias_counterfactual(&fit.params), &smm.model)?;
        let rows = (0..target.ages()).map(|t| {
            vec![
                (t + 1).to_string(),
                (t + FIRST_AGE).to_string(),
                fit.moments[0][t].to_string(),
                fit.moments[1][t].to_string(),
                cf.moments[1][t].to_string(),
            ]
        });
        out.csv(
            "counterfactual.csv",
            &table(&["age_index", "age", "low_risk", "high_risk", "high_risk_no_bias"], rows)?,
        )?;
        let line = |name: &str, v: &[f64]| Series::line(name, v.iter().enumerate().map(|(t, y)| ((t + 1) as f64, *y)).collect());
        let chart = Chart {
            title: "Simulated diagnosis rates with the no-bias counterfactual".into(),
            x_label: "age index".into(),
            y_label: "share diagnosed".into(),
            series: vec![
                line("low risk", &fit.moments[0]),
                line("high risk", &fit.moments[1]),
                line("high risk, no bias", &cf.moments[1]),
            ],
            ..Chart::default()
        };
        out.svg("counterfactual.svg", &chart.render())?;
    }
    Ok(())
}

fn write_moments(fit: &SmmFit, target: &MomentTarget, out: &mut OutputDir) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for (g, name) in GROUPS.iter().enumerate() {
        for t in 0..target.ages() {
            rows.push(vec![
                name.to_string(),
                (t + 1).to_string(),
                (t + FIRST_AGE).to_string(),
                target.rates[g][t].to_string(),
                fit.moments[g][t].to_string(),
            ]);
        }
    }
    out.csv("moments.csv", &table(&["group", "age_index", "age", "target", "simulated"], rows)?)?;
    let pts = |v: &[f64]| v.iter().enumerate().map(|(t, y)| ((t + 1) as f64, *y)).collect::<Vec<_>>();
    let chart = Chart {
        title: "Target and simulated diagnosis rates".into(),
        x_label: "age index".into(),
        y_label: "share diagnosed".into(),
        series: vec![
            Series::points("low risk, target", pts(&target.rates[0]), None),
            Series::points("high risk, target", pts(&target.rates[1]), None),
            Series::line("low risk, model", pts(&fit.moments[0])),
            Series::line("high risk, model", pts(&fit.moments[1])),
        ],
        ..Chart::default()
    };
    out.svg("moments.svg", &chart.render())
}

fn write_traces(fit: &SmmFit, out: &mut OutputDir) -> Result<(), CliError> {
    let rows = fit.anneal.trace.iter().map(|p| {
        vec![
            p.evaluation.to_string(),
            p.temperature.to_string(),
            p.value.to_string(),
            p.best.to_string(),
            u8::from(p.accepted).to_string(),
        ]
    });
    out.csv(
        "anneal_trace.csv",
        &table(&["evaluation", "temperature", "value", "best", "accepted"], rows)?,
    )?;
    let rows = fit
        .nelder_mead
        .trace
        .iter()
        .enumerate()
        .map(|(k, v)| vec![k.to_string(), v.to_string()]);
    out.csv("nelder_mead_trace.csv", &table(&["iteration", "best"], rows)?)
}
