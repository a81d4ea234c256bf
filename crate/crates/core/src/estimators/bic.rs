use serde::{Deserialize, Serialize};

use super::gfe::{GfeFit, GfeOptions, GfeProblem, WarmStart};
use crate::error::{Error, Result};
use crate::panel::{build_design, DesignSpec, PanelDataset};

/// Penalty shape of the information criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BicVariant {
    /// `σ̂² (GT + N + K)/(NT) · ln(NT)`
    Standard,
    /// `σ̂² G(T + N - G + K)/(NT) · ln(NT)`
    Steep,
}

pub fn bic_penalty(n: usize, t: usize, k: usize, g: usize, sigma2: f64, variant: BicVariant) -> Result<f64> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Domain(format!("error variance must be positive, got {sigma2}")));
    }
    let (n, t, k, g) = (n as f64, t as f64, k as f64, g as f64);
    let nt = n * t;
    let params = match variant {
        BicVariant::Standard => g * t + n + k,
        BicVariant::Steep => g * (t + n - g + k),
    };
    Ok(sigma2 * params / nt * nt.ln())
}

/// Objective plus penalty.
pub fn bic(objective: f64, n: usize, t: usize, k: usize, g: usize, sigma2: f64, variant: BicVariant) -> Result<f64> {
    Ok(objective + bic_penalty(n, t, k, g, sigma2, variant)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BicRecord {
    pub groups: usize,
    pub objective: f64,
    pub penalty_standard: f64,
    pub bic_standard: f64,
    pub penalty_steep: f64,
    pub bic_steep: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BicScan {
    pub records: Vec<BicRecord>,
    /// Mean squared residual of the `G_max` fit.
    pub sigma2: f64,
    pub g_max: usize,
    pub n_units: usize,
    pub n_periods: usize,
    pub n_regressors: usize,
    pub argmin_standard: usize,
    pub argmin_steep: usize,
    #[serde(skip)]
    pub fits: Vec<GfeFit>,
}

impl BicScan {
    pub fn fit(&self, g: usize) -> Option<&GfeFit> {
        self.fits.iter().find(|f| f.groups == g)
    }

    pub fn argmin(&self, variant: BicVariant) -> usize {
        match variant {
            BicVariant::Standard => self.argmin_standard,
            BicVariant::Steep => self.argmin_steep,
        }
    }
}

/// Lowest-`G` argmin of a criterion column.
fn argmin_by(records: &[BicRecord], f: impl Fn(&BicRecord) -> f64) -> usize {
    records
        .iter()
        .fold(None::<&BicRecord>, |best, r| match best {
            Some(b) if f(b) <= f(r) => Some(b),
            _ => Some(r),
        })
        .map_or(0, |r| r.groups)
}

/// Fit each `G` in `groups` (ascending, each warm-started from the previous
/// fit so objectives are nested) plus `G_max` for the error variance, and
/// score both criteria.
pub fn scan_groups(problem: &GfeProblem, groups: &[usize], g_max: usize, opts: &GfeOptions) -> Result<BicScan> {
    let mut gs: Vec<usize> = groups.to_vec();
    gs.sort_unstable();
    gs.dedup();
    let top = *gs.last().ok_or_else(|| Error::Precondition("empty group range".into()))?;
    if g_max < top {
        return Err(Error::Precondition(format!("G_max = {g_max} is below the largest scanned G = {top}")));
    }

    let mut fits: Vec<GfeFit> = Vec::with_capacity(gs.len());
    for &g in &gs {
        let warm: Vec<WarmStart> = match fits.last() {
            Some(prev) if prev.groups + 1 == g => vec![problem.split_start(prev)],
            _ => Vec::new(),
        };
        fits.push(problem.fit(g, opts, &warm)?);
    }
    let sigma2 = if g_max == top {
        fits.last().unwrap().objective()
    } else {
        let mut prev = fits.last().unwrap().clone();
        while prev.groups + 1 < g_max {
            let warm = problem.split_start(&prev);
            prev = problem.fit(prev.groups + 1, opts, &[warm])?;
        }
        let warm = problem.split_start(&prev);
        problem.fit(g_max, opts, &[warm])?.objective()
    };

    let (n, t, k) = (problem.n_units(), problem.n_periods(), problem.n_regressors());
    let records = fits
        .iter()
        .map(|f| {
            let obj = f.objective();
            let ps = bic_penalty(n, t, k, f.groups, sigma2, BicVariant::Standard)?;
            let pq = bic_penalty(n, t, k, f.groups, sigma2, BicVariant::Steep)?;
            Ok(BicRecord {
                groups: f.groups,
                objective: obj,
                penalty_standard: ps,
                bic_standard: obj + ps,
                penalty_steep: pq,
                bic_steep: obj + pq,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BicScan {
        argmin_standard: argmin_by(&records, |r| r.bic_standard),
        argmin_steep: argmin_by(&records, |r| r.bic_steep),
        records,
        sigma2,
        g_max,
        n_units: n,
        n_periods: t,
        n_regressors: k,
        fits,
    })
}

/// Information-criterion scan over `groups` for a panel.
pub fn select_groups(
    panel: &PanelDataset,
    spec: &DesignSpec,
    groups: std::ops::RangeInclusive<usize>,
    g_max: usize,
    opts: &GfeOptions,
) -> Result<BicScan> {
    let spec = DesignSpec {
        intercept: false,
        ..spec.clone()
    };
    let design = build_design(panel, &spec)?;
    let problem = GfeProblem::from_design(&design, opts.demean)?;
    let gs: Vec<usize> = groups.collect();
    scan_groups(&problem, &gs, g_max, opts)
}
