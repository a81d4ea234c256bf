//! Simulated method of moments for the two-group behavioral model:
//! simulated annealing for the global search, then Nelder-Mead.

mod optim;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use optim::{
    nelder_mead, simulated_annealing, AnnealConfig, AnnealResult, NelderMeadConfig, NelderMeadResult, TracePoint,
};

use crate::behavioral::{
    solve_model_with, BehavioralParams, ModelConfig, ModelDraws, KAPPA_INTERPRETATION, PARAM_NAMES,
};
use crate::error::{Error, Result};

/// Diagnosis rates per 100 read off the published low/high-risk data
/// trajectories for ages 16 to 23, expressed as shares. Approximate: read
/// from the figure, not from the underlying data.
pub const DIGITIZED_TARGET: [[f64; 8]; 2] = [
    [0.010, 0.018, 0.026, 0.034, 0.042, 0.049, 0.057, 0.064],
    [0.003, 0.010, 0.020, 0.036, 0.045, 0.056, 0.066, 0.076],
];

/// Group × age target rates with optional weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTarget {
    pub rates: Vec<Vec<f64>>,
    pub weights: Option<Vec<Vec<f64>>>,
    pub source: String,
}

impl MomentTarget {
    pub fn new(rates: Vec<Vec<f64>>, source: impl Into<String>) -> Result<Self> {
        let t = MomentTarget {
            rates,
            weights: None,
            source: source.into(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn digitized() -> Self {
        MomentTarget {
            rates: DIGITIZED_TARGET.iter().map(|r| r.to_vec()).collect(),
            weights: None,
            source: "digitized figure (approximate)".into(),
        }
    }

    pub fn with_weights(mut self, weights: Vec<Vec<f64>>) -> Result<Self> {
        self.weights = Some(weights);
        self.validate()?;
        Ok(self)
    }

    pub fn ages(&self) -> usize {
        self.rates.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rates.len() != 2 || self.rates[0].is_empty() || self.rates[1].len() != self.rates[0].len() {
            return Err(Error::Schema("targets must be 2 groups × the same positive number of ages".into()));
        }
        if self.rates.iter().flatten().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::Domain("target rates must lie in [0, 1]".into()));
        }
        if let Some(w) = &self.weights {
            if w.len() != 2 || w.iter().any(|r| r.len() != self.ages()) {
                return Err(Error::Schema("weights must match the target shape".into()));
            }
            if w.iter().flatten().any(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(Error::Domain("weights must be positive".into()));
            }
        }
        Ok(())
    }

    /// Two comma-separated rows of rates; `#` starts a comment line.
    pub fn from_reader<R: std::io::Read>(reader: R, source: impl Into<String>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rates = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse {
                line: e.position().map_or(i as u64 + 1, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = rec.position().map_or(i as u64 + 1, |p| p.line());
            let row = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|e| Error::Parse {
                        line,
                        message: format!("`{f}`: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rates.push(row);
        }
        Self::new(rates, source)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file, path.display().to_string())
    }

    pub fn to_csv(&self) -> String {
        self.rates
            .iter()
            .map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    }

    /// Weighted mean of squared gaps.
    pub fn distance(&self, moments: &[Vec<f64>]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for g in 0..2 {
            for t in 0..self.ages() {
                let w = self.weights.as_ref().map_or(1.0, |w| w[g][t]);
                let m = moments.get(g).and_then(|r| r.get(t)).copied().unwrap_or(f64::NAN);
                num += w * (m - self.rates[g][t]).powi(2);
                den += w;
            }
        }
        num / den
    }
}

/// Default search box for each parameter (`σ_η` stays fixed unless freed).
pub fn default_bounds(name: &str) -> Option<(f64, f64)> {
    Some(match name {
        "beta1" | "beta2" => (1e-3, 1.5),
        "delta" => (0.501, 1.0),
        "a" => (1e-3, 1.999),
        "b" => (0.0, 2.0),
        "c" => (-0.5, 0.5),
        "psi" => (0.0, 0.999),
        "sigma_eps" => (1e-3, 3.0),
        "zeta" => (0.0, 2.0),
        "kappa" => (0.0, 10.0),
        "sigma_eta" => (1e-3, 10.0),
        _ => return None,
    })
}

pub const DEFAULT_FREE: [&str; 10] = ["beta1", "beta2", "delta", "a", "b", "c", "psi", "zeta", "sigma_eps", "kappa"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FreeParam {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

impl Default for FreeParam {
    fn default() -> Self {
        FreeParam {
            name: String::new(),
            lower: f64::NAN,
            upper: f64::NAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmmConfig {
    pub model: ModelConfig,
    pub free: Vec<FreeParam>,
    /// Starting point; fixed parameters keep these values.
    pub start: BehavioralParams,
    pub anneal: AnnealConfig,
    pub nelder_mead: NelderMeadConfig,
    pub seed: u64,
}

impl Default for SmmConfig {
    fn default() -> Self {
        let mut model = ModelConfig::default();
        model.solver.terminal_check = false;
        SmmConfig {
            model,
            free: Self::free_with_defaults(&DEFAULT_FREE).expect("known names"),
            start: BehavioralParams::default(),
            anneal: AnnealConfig::default(),
            nelder_mead: NelderMeadConfig::default(),
            seed: 0,
        }
    }
}

impl SmmConfig {
    pub fn free_with_defaults(names: &[&str]) -> Result<Vec<FreeParam>> {
        names
            .iter()
            .map(|n| {
                let (lower, upper) =
                    default_bounds(n).ok_or_else(|| Error::Spec(format!("unknown parameter `{n}`")))?;
                Ok(FreeParam {
                    name: n.to_string(),
                    lower,
                    upper,
                })
            })
            .collect()
    }

    fn indices(&self) -> Result<Vec<usize>> {
        if self.free.is_empty() {
            return Err(Error::Spec("at least one parameter must be free".into()));
        }
        let mut seen = Vec::new();
        for p in &self.free {
            let i = BehavioralParams::index_of(&p.name)
                .ok_or_else(|| Error::Spec(format!("unknown parameter `{}`", p.name)))?;
            if seen.contains(&i) {
                return Err(Error::Spec(format!("parameter `{}` listed twice", p.name)));
            }
            if !(p.lower.is_finite() && p.upper.is_finite() && p.lower <= p.upper) {
                return Err(Error::Spec(format!("bounds of `{}` must be finite and ordered", p.name)));
            }
            seen.push(i);
        }
        Ok(seen)
    }
}

/// The SMM objective under common random numbers: draws are created once
/// and reused for every candidate.
pub struct SmmObjective<'a> {
    target: &'a MomentTarget,
    cfg: &'a SmmConfig,
    draws: ModelDraws,
    idx: Vec<usize>,
    pub failures: usize,
    pub evaluations: usize,
}

impl<'a> SmmObjective<'a> {
    pub fn new(target: &'a MomentTarget, cfg: &'a SmmConfig) -> Result<Self> {
        target.validate()?;
        if target.ages() != cfg.model.ages {
            return Err(Error::Spec(format!(
                "target covers {} ages but the model simulates {}",
                target.ages(),
                cfg.model.ages
            )));
        }
        Ok(SmmObjective {
            target,
            cfg,
            draws: ModelDraws::new(&cfg.model),
            idx: cfg.indices()?,
            failures: 0,
            evaluations: 0,
        })
    }

    pub fn params_at(&self, x: &[f64]) -> BehavioralParams {
        let mut v = self.cfg.start.to_vec();
        for (k, &i) in self.idx.iter().enumerate() {
            v[i] = x[k];
        }
        BehavioralParams::from_slice(&v).expect("eleven values")
    }

    pub fn free_values(&self, p: &BehavioralParams) -> Vec<f64> {
        let v = p.to_vec();
        self.idx.iter().map(|&i| v[i]).collect()
    }

    /// Objective at full parameters; solver failures give `+∞`.
    pub fn eval_params(&mut self, p: &BehavioralParams) -> f64 {
        self.evaluations += 1;
        match solve_model_with(p, &self.cfg.model, &self.draws) {
            Ok(sol) => self.target.distance(&sol.moments),
            Err(e) => {
                self.failures += 1;
                log::debug!("objective failure at {p:?}: {e}");
                f64::INFINITY
            }
        }
    }

    pub fn eval(&mut self, x: &[f64]) -> f64 {
        let p = self.params_at(x);
        self.eval_params(&p)
    }

    pub fn moments(&self, p: &BehavioralParams) -> Result<Vec<Vec<f64>>> {
        Ok(solve_model_with(p, &self.cfg.model, &self.draws)?.moments)
    }
}

/// Objective value of a full parameter vector.
pub fn smm_objective(p: &BehavioralParams, target: &MomentTarget, cfg: &SmmConfig) -> Result<f64> {
    let mut obj = SmmObjective::new(target, cfg)?;
    Ok(obj.eval_params(p))
}

#[derive(Debug, Clone, Serialize)]
pub struct SmmFit {
    pub params: BehavioralParams,
    pub objective: f64,
    pub free: Vec<String>,
    pub anneal: AnnealResult,
    pub nelder_mead: NelderMeadResult,
    pub moments: Vec<Vec<f64>>,
    pub target: MomentTarget,
    pub failures: usize,
    pub evaluations: usize,
    pub kappa_interpretation: &'static str,
}

/// Annealing from `cfg.start`, then Nelder-Mead from the annealing optimum.
pub fn fit_smm(target: &MomentTarget, cfg: &SmmConfig) -> Result<SmmFit> {
    let mut obj = SmmObjective::new(target, cfg)?;
    let lower: Vec<f64> = cfg.free.iter().map(|p| p.lower).collect();
    let upper: Vec<f64> = cfg.free.iter().map(|p| p.upper).collect();
    let start = obj.free_values(&cfg.start);
    for (k, p) in cfg.free.iter().enumerate() {
        if !(p.lower..=p.upper).contains(&start[k]) {
            return Err(Error::Spec(format!("start value of `{}` lies outside its bounds", p.name)));
        }
    }
    let sa = simulated_annealing(|x| obj.eval(x), &start, &lower, &upper, &cfg.anneal, cfg.seed)?;
    let nm = nelder_mead(|x| obj.eval(x), &sa.best, &lower, &upper, &cfg.nelder_mead)?;
    let (x, value) = if nm.best_value <= sa.best_value {
        (nm.best.clone(), nm.best_value)
    } else {
        (sa.best.clone(), sa.best_value)
    };
    let params = obj.params_at(&x);
    let moments = obj.moments(&params)?;
    Ok(SmmFit {
        params,
        objective: value,
        free: cfg.free.iter().map(|p| p.name.clone()).collect(),
        anneal: sa,
        nelder_mead: nm,
        moments,
        target: target.clone(),
        failures: obj.failures,
        evaluations: obj.evaluations,
        kappa_interpretation: KAPPA_INTERPRETATION,
    })
}

/// Names accepted in a free-parameter list.
pub fn parameter_names() -> &'static [&'static str] {
    &PARAM_NAMES
}
