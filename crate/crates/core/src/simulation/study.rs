use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dgp::{simulate_stream, DgpSpec, SimDraw};
use crate::error::{Error, Result};
use crate::estimators::{fe_fit, ols_fit, scan_groups, GfeFit, GfeOptions, GfeProblem, LinearFit, WarmStart};
use crate::panel::{build_design, DesignSpec};

/// One entry of the estimator menu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Estimator {
    Ols,
    Fe,
    Gfe(usize),
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimator::Ols => f.write_str("ols"),
            Estimator::Fe => f.write_str("fe"),
            Estimator::Gfe(g) => write!(f, "gfe{g}"),
        }
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ols" => Ok(Estimator::Ols),
            "fe" => Ok(Estimator::Fe),
            _ => s
                .strip_prefix("gfe")
                .and_then(|g| g.parse().ok())
                .filter(|&g: &usize| g >= 1)
                .map(Estimator::Gfe)
                .ok_or_else(|| Error::Spec(format!("unknown estimator `{s}` (use ols, fe or gfe<G>)"))),
        }
    }
}

impl Serialize for Estimator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Estimator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicStudy {
    pub g_min: usize,
    pub g_max_scan: usize,
    /// Group count whose fit supplies `σ̂²`.
    pub g_max: usize,
}

impl Default for BicStudy {
    fn default() -> Self {
        BicStudy {
            g_min: 1,
            g_max_scan: 10,
            g_max: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub dgp: DgpSpec,
    pub replications: usize,
    pub estimators: Vec<Estimator>,
    pub bic: Option<BicStudy>,
    pub gfe: GfeOptions,
    /// Record the permutation-matched profile RMSE of the fit at this `G`.
    pub profile_groups: Option<usize>,
    /// Keep the estimated profiles of replication 0 for plotting.
    pub keep_profiles: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            dgp: DgpSpec::default(),
            replications: 50,
            estimators: vec![
                Estimator::Ols,
                Estimator::Fe,
                Estimator::Gfe(2),
                Estimator::Gfe(3),
                Estimator::Gfe(4),
                Estimator::Gfe(5),
            ],
            bic: None,
            gfe: GfeOptions::default(),
            profile_groups: Some(3),
            keep_profiles: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub estimator: Estimator,
    pub xi: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BicPoint {
    pub groups: usize,
    pub standard: f64,
    pub steep: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub estimates: Vec<Estimate>,
    pub bic_standard: Option<usize>,
    pub bic_steep: Option<usize>,
    pub bic_curve: Vec<BicPoint>,
    pub profile_rmse: Option<f64>,
    pub treatment_profile_corr: f64,
    /// Estimated `G × T` profiles at `profile_groups`, canonical order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profiles: Option<Vec<Vec<f64>>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorSummary {
    pub estimator: Estimator,
    pub replications: usize,
    pub mean: f64,
    pub sd: f64,
    /// `sd / √R`.
    pub mc_se: f64,
    pub bias: f64,
    pub mean_se: f64,
    /// Share of nominal 95% intervals that contain the true `ξ`.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimStudyResult {
    pub config: StudyConfig,
    pub records: Vec<ReplicationRecord>,
    pub failed: usize,
    pub summaries: Vec<EstimatorSummary>,
    /// Selection counts per `G`.
    pub bic_standard_counts: BTreeMap<usize, usize>,
    pub bic_steep_counts: BTreeMap<usize, usize>,
    pub mean_profile_rmse: Option<f64>,
    pub true_profiles: Vec<Vec<f64>>,
    /// How true group membership is tied to `α_i`.
    pub membership_rule: &'static str,
}

impl SimStudyResult {
    pub fn summary(&self, e: Estimator) -> Option<&EstimatorSummary> {
        self.summaries.iter().find(|s| s.estimator == e)
    }

    pub fn modal(counts: &BTreeMap<usize, usize>) -> Option<usize> {
        // lowest G wins ties
        counts
            .iter()
            .fold(None::<(usize, usize)>, |best, (&g, &c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((g, c)),
            })
            .map(|(g, _)| g)
    }
}

pub const MEMBERSHIP_RULE: &str = "alpha_i quantile thresholds at cumulative shares";

/// Mean squared gap between `est` and `truth` rows, minimized over all row
/// permutations of `est`; returns the root and the best permutation.
pub fn matched_profile_rmse(est: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<(f64, Vec<usize>)> {
    let g = truth.len();
    if est.len() != g || g == 0 || g > 8 {
        return Err(Error::Precondition(format!(
            "profile matching needs equal group counts in 1..=8 (got {} and {g})",
            est.len()
        )));
    }
    let t = truth[0].len();
    let cost = |perm: &[usize]| -> f64 {
        let mut s = 0.0;
        for (k, &p) in perm.iter().enumerate() {
            for q in 0..t {
                s += (est[p][q] - truth[k][q]).powi(2);
            }
        }
        s / (g * t) as f64
    };
    let mut perm: Vec<usize> = (0..g).collect();
    let mut best = (cost(&perm), perm.clone());
    // Heap's algorithm
    let mut c = vec![0usize; g];
    let mut i = 0;
    while i < g {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let v = cost(&perm);
            if v < best.0 {
                best = (v, perm.clone());
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok((best.0.sqrt(), best.1))
}

/// True profiles demeaned over time within each group, the level that a
/// unit-demeaned fit identifies.
pub fn identified_profiles(truth: &[Vec<f64>]) -> Vec<Vec<f64>> {
    truth
        .iter()
        .map(|p| {
            let m = p.iter().sum::<f64>() / p.len() as f64;
            p.iter().map(|v| v - m).collect()
        })
        .collect()
}

fn linear_estimate(e: Estimator, fit: &LinearFit) -> Result<Estimate> {
    let xi = fit
        .coefficient("treatment")
        .ok_or_else(|| Error::Precondition("treatment missing from fit".into()))?;
    Ok(Estimate {
        estimator: e,
        xi,
        se: fit.std_error("treatment").unwrap_or(f64::NAN),
    })
}

fn replicate(cfg: &StudyConfig, r: usize) -> Result<ReplicationRecord> {
    let draw: SimDraw = simulate_stream(&cfg.dgp, r as u64 + 1)?;
    let panel = &draw.panel;
    let spec = DesignSpec::new(["treatment"]);
    let opts = GfeOptions {
        seed: cfg.gfe.seed.wrapping_add(r as u64),
        ..cfg.gfe.clone()
    };
    let design = build_design(panel, &spec)?;
    let problem = GfeProblem::from_design(&design, opts.demean)?;

    let mut fits: BTreeMap<usize, GfeFit> = BTreeMap::new();
    let mut record = ReplicationRecord {
        replication: r,
        estimates: Vec::new(),
        bic_standard: None,
        bic_steep: None,
        bic_curve: Vec::new(),
        profile_rmse: None,
        treatment_profile_corr: draw.profile_treatment_correlation(),
        profiles: None,
        error: None,
    };
    if let Some(b) = &cfg.bic {
        let gs: Vec<usize> = (b.g_min..=b.g_max_scan).collect();
        let scan = scan_groups(&problem, &gs, b.g_max, &opts)?;
        record.bic_standard = Some(scan.argmin_standard);
        record.bic_steep = Some(scan.argmin_steep);
        record.bic_curve = scan
            .records
            .iter()
            .map(|x| BicPoint {
                groups: x.groups,
                standard: x.bic_standard,
                steep: x.bic_steep,
            })
            .collect();
        for f in scan.fits {
            fits.insert(f.groups, f);
        }
    }
    let mut wanted: Vec<usize> = cfg
        .estimators
        .iter()
        .filter_map(|e| match e {
            Estimator::Gfe(g) => Some(*g),
            _ => None,
        })
        .chain(cfg.profile_groups)
        .collect();
    wanted.sort_unstable();
    wanted.dedup();
    for g in wanted {
        if fits.contains_key(&g) {
            continue;
        }
        let warm: Vec<WarmStart> = fits.get(&(g.wrapping_sub(1))).map(|f| problem.split_start(f)).into_iter().collect();
        let f = problem.fit(g, &opts, &warm)?;
        fits.insert(g, f);
    }

    for &e in &cfg.estimators {
        let est = match e {
            Estimator::Ols => linear_estimate(e, &ols_fit(&build_design(panel, &spec.clone().with_intercept())?)?)?,
            Estimator::Fe => linear_estimate(e, &fe_fit(panel, &spec)?)?,
            Estimator::Gfe(g) => linear_estimate(e, &fits[&g].fit)?,
        };
        record.estimates.push(est);
    }
    if let Some(g) = cfg.profile_groups {
        if g == draw.profiles.len() {
            let fit = &fits[&g];
            let truth = identified_profiles(&draw.profiles);
            record.profile_rmse = Some(matched_profile_rmse(&fit.profiles, &truth)?.0);
        }
        if cfg.keep_profiles && r == 0 {
            record.profiles = Some(fits[&g].profiles.clone());
        }
    }
    Ok(record)
}

fn summarize(cfg: &StudyConfig, records: &[ReplicationRecord]) -> Vec<EstimatorSummary> {
    let ok: Vec<&ReplicationRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    cfg.estimators
        .iter()
        .map(|&e| {
            let vals: Vec<&Estimate> = ok.iter().filter_map(|r| r.estimates.iter().find(|x| x.estimator == e)).collect();
            let n = vals.len() as f64;
            let mean = vals.iter().map(|x| x.xi).sum::<f64>() / n;
            let sd = if vals.len() > 1 {
                (vals.iter().map(|x| (x.xi - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                f64::NAN
            };
            let covered = vals.iter().filter(|x| (x.xi - cfg.dgp.xi).abs() <= 1.959_963_984_540_054 * x.se).count();
            EstimatorSummary {
                estimator: e,
                replications: vals.len(),
                mean,
                sd,
                mc_se: sd / n.sqrt(),
                bias: mean - cfg.dgp.xi,
                mean_se: vals.iter().map(|x| x.se).sum::<f64>() / n,
                coverage: covered as f64 / n,
            }
        })
        .collect()
}

/// Aggregate stored replication records.
pub fn aggregate(config: StudyConfig, records: Vec<ReplicationRecord>) -> SimStudyResult {
    let summaries = summarize(&config, &records);
    let ok = || records.iter().filter(|r| r.error.is_none());
    let mut std_counts = BTreeMap::new();
    let mut steep_counts = BTreeMap::new();
    for r in ok() {
        if let Some(g) = r.bic_standard {
            *std_counts.entry(g).or_insert(0) += 1;
        }
        if let Some(g) = r.bic_steep {
            *steep_counts.entry(g).or_insert(0) += 1;
        }
    }
    let rmses: Vec<f64> = ok().filter_map(|r| r.profile_rmse).collect();
    SimStudyResult {
        failed: records.len() - ok().count(),
        summaries,
        bic_standard_counts: std_counts,
        bic_steep_counts: steep_counts,
        mean_profile_rmse: (!rmses.is_empty()).then(|| rmses.iter().sum::<f64>() / rmses.len() as f64),
        true_profiles: config.dgp.true_profiles(),
        membership_rule: MEMBERSHIP_RULE,
        config,
        records,
    }
}

/// Run the study. Replications execute in parallel, each on its own RNG
/// stream, so results do not depend on the thread count.
pub fn run_monte_carlo(config: &StudyConfig) -> Result<SimStudyResult> {
    if config.replications == 0 {
        return Err(Error::Precondition("at least one replication is required".into()));
    }
    config.dgp.validate()?;
    let records: Vec<ReplicationRecord> = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            replicate(config, r).unwrap_or_else(|e| {
                log::warn!("replication {r} failed: {e}");
                ReplicationRecord {
                    replication: r,
                    estimates: Vec::new(),
                    bic_standard: None,
                    bic_steep: None,
                    bic_curve: Vec::new(),
                    profile_rmse: None,
                    treatment_profile_corr: f64::NAN,
                    profiles: None,
                    error: Some(e.to_string()),
                }
            })
        })
        .collect();
    Ok(aggregate(config.clone(), records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimator_names_round_trip() {
        for e in [Estimator::Ols, Estimator::Fe, Estimator::Gfe(4)] {
            assert_eq!(e.to_string().parse::<Estimator>().unwrap(), e);
        }
        assert!("gfe0".parse::<Estimator>().is_err());
        assert!("iv".parse::<Estimator>().is_err());
    }

    #[test]
    fn matching_finds_the_permutation() {
        let truth = vec![vec![0.0, 1.0], vec![2.0, 2.0], vec![-1.0, 5.0]];
        let est = vec![truth[2].clone(), truth[0].clone(), truth[1].clone()];
        let (rmse, perm) = matched_profile_rmse(&est, &truth).unwrap();
        assert_eq!(rmse, 0.0);
        assert_eq!(perm, vec![1, 2, 0]);
    }

    #[test]
    fn modal_prefers_lowest_on_ties() {
        let c: BTreeMap<usize, usize> = [(2, 3), (3, 3), (4, 1)].into_iter().collect();
        assert_eq!(SimStudyResult::modal(&c), Some(2));
    }
}
