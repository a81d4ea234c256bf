use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Utility floor used for `ρ = 0` when the CRRA exponent is negative.
pub const UTILITY_FLOOR: f64 = -1e10;

/// Preference, dynamics and link parameters of the two-group model. Group 1
/// (low risk) discounts with `beta1`, group 2 (high risk) with `beta2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehavioralParams {
    pub beta1: f64,
    pub beta2: f64,
    pub delta: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub psi: f64,
    pub zeta: f64,
    pub sigma_eps: f64,
    #[serde(default = "default_sigma_eta")]
    pub sigma_eta: f64,
    pub kappa: f64,
}

fn default_sigma_eta() -> f64 {
    1.0
}

impl Default for BehavioralParams {
    /// The published point estimates, with `σ_η = 1`.
    fn default() -> Self {
        BehavioralParams {
            beta1: 1.021,
            beta2: 0.598,
            delta: 0.925,
            a: 0.864,
            b: 0.186,
            c: 0.058,
            psi: 0.962,
            zeta: 0.447,
            sigma_eps: 0.613,
            sigma_eta: 1.0,
            kappa: 2.543,
        }
    }
}

/// Index of a parameter in [`BehavioralParams::to_vec`] order.
pub const PARAM_NAMES: [&str; 11] = [
    "beta1", "beta2", "delta", "a", "b", "c", "psi", "zeta", "sigma_eps", "sigma_eta", "kappa",
];

impl BehavioralParams {
    pub fn beta(&self, group: usize) -> f64 {
        if group == 0 {
            self.beta1
        } else {
            self.beta2
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.to_vec();
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("parameter {} is not finite", PARAM_NAMES[i])));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::Domain(format!("delta must lie in (0, 1], got {}", self.delta)));
        }
        if !(self.beta1 > 0.0 && self.beta2 > 0.0) {
            return Err(Error::Domain("present-bias factors must be positive".into()));
        }
        if self.sigma_eps < 0.0 {
            return Err(Error::Domain("sigma_eps must be non-negative".into()));
        }
        if !(self.sigma_eta > 0.0) {
            return Err(Error::Domain("sigma_eta must be positive".into()));
        }
        Ok(())
    }

    pub fn to_vec(&self) -> [f64; 11] {
        [
            self.beta1,
            self.beta2,
            self.delta,
            self.a,
            self.b,
            self.c,
            self.psi,
            self.zeta,
            self.sigma_eps,
            self.sigma_eta,
            self.kappa,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        let v: [f64; 11] = v
            .try_into()
            .map_err(|_| Error::Domain(format!("expected 11 parameter values, got {}", v.len())))?;
        Ok(BehavioralParams {
            beta1: v[0],
            beta2: v[1],
            delta: v[2],
            a: v[3],
            b: v[4],
            c: v[5],
            psi: v[6],
            zeta: v[7],
            sigma_eps: v[8],
            sigma_eta: v[9],
            kappa: v[10],
        })
    }

    pub fn index_of(name: &str) -> Option<usize> {
        PARAM_NAMES.iter().position(|n| *n == name)
    }
}

/// `sgn(e)·ρ^e − b M²` with `e = 1 − a − cM`.
pub fn flow_utility(rho: f64, m: f64, p: &BehavioralParams) -> f64 {
    let e = 1.0 - p.a - p.c * m;
    let crra = if e == 0.0 {
        0.0
    } else if rho == 0.0 {
        if e > 0.0 {
            0.0
        } else {
            return UTILITY_FLOOR - p.b * m * m;
        }
    } else {
        e.signum() * rho.powf(e)
    };
    crra - p.b * m * m
}

/// `ψM + ζρ + ε`.
pub fn mh_transition(m: f64, rho: f64, eps: f64, p: &BehavioralParams) -> f64 {
    p.psi * m + p.zeta * rho + eps
}

/// `Pr(ρ + η > 0)` with `η ~ N(0, σ_η²)`.
pub fn abortion_prob(rho: f64, p: &BehavioralParams) -> f64 {
    Normal::standard().cdf(rho / p.sigma_eta)
}
