use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::PanelDataset;

/// True group profile `g ∈ {1, 2, 3}` at (real) period `t`.
pub fn profile_curve(g: usize, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("profile period must be non-negative, got {t}")));
    }
    match g {
        1 => Ok(t * 0.002),
        2 => Ok((t / 10.0).sqrt().exp() - 1.0),
        3 => Ok((t / 10.0).powf(1.2).exp() - 1.0),
        _ => Err(Error::Domain(format!("profile group must be 1, 2 or 3, got {g}"))),
    }
}

/// Generator configuration. Group `g` (1-based) gets share `shares[g-1]`
/// and treatment probability `probabilities[g-1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DgpSpec {
    pub n: usize,
    pub t: usize,
    /// Contemporaneous treatment effect.
    pub xi: f64,
    pub shares: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub sigma: f64,
    pub alpha_sd: f64,
    /// Coefficients on `A_{i,t-1}, A_{i,t-2}, ...`.
    pub lags: Vec<f64>,
    pub seed: u64,
}

pub const DEFAULT_SIGMA: f64 = 0.1;

impl Default for DgpSpec {
    fn default() -> Self {
        DgpSpec {
            n: 1_000,
            t: 10,
            xi: 0.0,
            shares: vec![0.70, 0.20, 0.10],
            probabilities: vec![0.0, 0.1, 0.3],
            sigma: DEFAULT_SIGMA,
            alpha_sd: 1.0,
            lags: Vec::new(),
            seed: 0,
        }
    }
}

impl DgpSpec {
    pub fn with_n(n: usize) -> Self {
        DgpSpec {
            n,
            ..Self::default()
        }
    }

    /// Contemporaneous effect 0.2 and five lags of 0.1.
    pub fn lag_experiment(n: usize) -> Self {
        DgpSpec {
            n,
            xi: 0.2,
            lags: vec![0.1; 5],
            ..Self::default()
        }
    }

    pub fn groups(&self) -> usize {
        self.shares.len()
    }

    /// Units per group, from rounding `N · share`.
    pub fn group_counts(&self) -> Result<Vec<usize>> {
        let counts: Vec<usize> = self.shares.iter().map(|s| (self.n as f64 * s).round() as usize).collect();
        if counts.iter().sum::<usize>() != self.n || counts.contains(&0) {
            return Err(Error::Spec(format!(
                "N = {} does not split into positive group counts (got {counts:?})",
                self.n
            )));
        }
        Ok(counts)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::Spec("T must be positive".into()));
        }
        if !(1..=3).contains(&self.shares.len()) || self.shares.len() != self.probabilities.len() {
            return Err(Error::Spec("shares and probabilities must list the same 1 to 3 groups".into()));
        }
        if (self.shares.iter().sum::<f64>() - 1.0).abs() > 1e-9 || self.shares.iter().any(|s| *s < 0.0) {
            return Err(Error::Spec("group shares must be non-negative and sum to 1".into()));
        }
        if self.probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Spec("treatment probabilities must lie in [0, 1]".into()));
        }
        if !(self.sigma >= 0.0) || !(self.alpha_sd >= 0.0) {
            return Err(Error::Spec("standard deviations must be non-negative".into()));
        }
        if self.lags.len() >= self.t {
            return Err(Error::Spec(format!("{} lags need more than {} periods", self.lags.len(), self.t)));
        }
        self.group_counts().map(|_| ())
    }

    /// True profiles on `t = 1..T`, one row per group.
    pub fn true_profiles(&self) -> Vec<Vec<f64>> {
        (1..=self.groups())
            .map(|g| (1..=self.t).map(|s| profile_curve(g, s as f64).unwrap()).collect())
            .collect()
    }
}

/// One simulated panel with its generating components.
#[derive(Debug, Clone)]
pub struct SimDraw {
    pub panel: PanelDataset,
    /// 0-based true group per unit.
    pub labels: Vec<usize>,
    /// `G × T` true profiles on `t = 1..T`.
    pub profiles: Vec<Vec<f64>>,
    pub alpha_i: Vec<f64>,
    pub noise: Vec<f64>,
    pub xi: f64,
    pub lags: Vec<f64>,
}

impl SimDraw {
    /// Rebuild the outcome from the stored components.
    pub fn reconstruct_outcome(&self) -> Vec<f64> {
        let t = self.profiles[0].len();
        let a = self.panel.treatment();
        (0..a.len())
            .map(|r| {
                let (i, s) = (r / t, r % t);
                let lagged: f64 = self
                    .lags
                    .iter()
                    .enumerate()
                    .filter(|(l, _)| s > *l)
                    .map(|(l, c)| c * a[r - l - 1])
                    .sum();
                self.xi * a[r] + lagged + self.profiles[self.labels[i]][s] + self.alpha_i[i] + self.noise[r]
            })
            .collect()
    }

    /// Each cell's true profile value `α_{g_i}(t)`.
    pub fn assigned_profiles(&self) -> Vec<f64> {
        let t = self.profiles[0].len();
        self.labels.iter().flat_map(|&g| self.profiles[g].iter().copied()).take(self.labels.len() * t).collect()
    }

    /// Pearson correlation of `α_{g_i}(t)` with `A_it` over all cells.
    pub fn profile_treatment_correlation(&self) -> f64 {
        pearson(&self.assigned_profiles(), self.panel.treatment())
    }
}

pub(crate) fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

/// Draw a panel on RNG stream 0 of `spec.seed`.
pub fn simulate_dgp(spec: &DgpSpec) -> Result<SimDraw> {
    simulate_stream(spec, 0)
}

/// Draw with lagged treatment effects; requires a non-empty lag vector.
pub fn simulate_dgp_lagged(spec: &DgpSpec) -> Result<SimDraw> {
    if spec.lags.is_empty() {
        return Err(Error::Spec("lagged design needs at least one lag coefficient".into()));
    }
    simulate_stream(spec, 0)
}

/// Draw on an explicit stream of `spec.seed`. Units are ordered by `α_i`
/// rank only through their labels; unit ids follow draw order.
pub fn simulate_stream(spec: &DgpSpec, stream: u64) -> Result<SimDraw> {
    spec.validate()?;
    let (n, t) = (spec.n, spec.t);
    let counts = spec.group_counts()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(stream);

    let alpha_dist = Normal::new(0.0, spec.alpha_sd).map_err(|e| Error::Spec(e.to_string()))?;
    let alpha_i: Vec<f64> = (0..n).map(|_| alpha_dist.sample(&mut rng)).collect();

    // lowest α_i ranks fill group 1, and so on up
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| alpha_i[a].total_cmp(&alpha_i[b]).then(a.cmp(&b)));
    let mut labels = vec![0usize; n];
    let mut pos = 0;
    for (g, &c) in counts.iter().enumerate() {
        for &i in &order[pos..pos + c] {
            labels[i] = g;
        }
        pos += c;
    }

    let treatment: Vec<f64> = (0..n * t)
        .map(|r| f64::from(u8::from(rng.random_bool(spec.probabilities[labels[r / t]]))))
        .collect();
    let noise_dist = Normal::new(0.0, spec.sigma).map_err(|e| Error::Spec(e.to_string()))?;
    let noise: Vec<f64> = (0..n * t).map(|_| noise_dist.sample(&mut rng)).collect();

    let mut draw = SimDraw {
        panel: PanelDataset::from_dense(n, t, vec![0.0; n * t], treatment, vec![], vec![])?,
        labels,
        profiles: spec.true_profiles(),
        alpha_i,
        noise,
        xi: spec.xi,
        lags: spec.lags.clone(),
    };
    let outcome = draw.reconstruct_outcome();
    draw.panel = draw.panel.with_column("outcome", outcome)?;
    Ok(draw)
}
