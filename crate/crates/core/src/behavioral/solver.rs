use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::{flow_utility, BehavioralParams};
use super::spline::MonotoneSpline;
use crate::error::{Error, Result};

/// Ages compared by the terminal-condition diagnostic.
pub const POLICY_AGES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub grid_points: usize,
    /// Size of the choice lattice `{0, 1/(L-1), ..., 1}`.
    pub rho_levels: usize,
    /// Horizon at which `F ≡ 0` is imposed.
    pub t_solve: usize,
    /// Shock draws per conditional expectation.
    pub draws: usize,
    /// Paths per extreme policy used for the grid bounds.
    pub bound_paths: usize,
    /// Periods simulated for the grid bounds, fixed so that solves with
    /// different `t_solve` share one grid.
    pub bound_horizon: usize,
    pub m0: f64,
    pub seed: u64,
    /// Re-solve at `terminal_alt` and compare the first ages' policies.
    pub terminal_check: bool,
    pub terminal_alt: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid_points: 200,
            rho_levels: 21,
            t_solve: 100,
            draws: 1_000,
            bound_paths: 1_000,
            bound_horizon: 100,
            m0: 0.0,
            seed: 0,
            terminal_check: true,
            terminal_alt: 200,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 3 || self.rho_levels < 2 || self.draws == 0 || self.bound_paths == 0 {
            return Err(Error::Domain("solver needs ≥ 3 grid points, ≥ 2 choices and positive draw counts".into()));
        }
        if self.t_solve < 2 || self.bound_horizon == 0 {
            return Err(Error::Domain("solver horizon must be at least 2".into()));
        }
        Ok(())
    }

    pub fn rho_lattice(&self) -> Vec<f64> {
        let d = (self.rho_levels - 1) as f64;
        (0..self.rho_levels).map(|k| k as f64 / d).collect()
    }
}

/// Standard-normal draws shared by every solve with one configuration.
#[derive(Debug, Clone)]
pub struct SolverDraws {
    bound: Vec<f64>,
    expectation: Vec<f64>,
    horizon: usize,
}

impl SolverDraws {
    pub fn new(cfg: &SolverConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1);
        let bound = (0..cfg.bound_paths * cfg.bound_horizon).map(|_| StandardNormal.sample(&mut rng)).collect();
        rng.set_stream(2);
        let expectation = (0..cfg.draws).map(|_| StandardNormal.sample(&mut rng)).collect();
        SolverDraws {
            bound,
            expectation,
            horizon: cfg.bound_horizon,
        }
    }
}

/// Equidistant mental-health grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub lo: f64,
    pub step: f64,
    pub points: usize,
}

impl Grid {
    pub fn hi(&self) -> f64 {
        self.lo + self.step * (self.points - 1) as f64
    }

    pub fn levels(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.lo + self.step * j as f64).collect()
    }

    /// Nearest node, and whether `m` lies outside the covered range.
    pub fn nearest(&self, m: f64) -> (usize, bool) {
        let u = ((m - self.lo) / self.step).round();
        let last = (self.points - 1) as f64;
        let outside = !(-0.5..=last + 0.5).contains(&((m - self.lo) / self.step));
        (u.clamp(0.0, last) as usize, outside)
    }
}

/// Grid bounds from simulating the two extreme policies `ρ ≡ 0` and
/// `ρ ≡ 1` and taking the overall min and max.
pub fn build_grid(p: &BehavioralParams, cfg: &SolverConfig, draws: &SolverDraws) -> Grid {
    let (mut lo, mut hi) = (cfg.m0, cfg.m0);
    for rho in [0.0, 1.0] {
        for path in draws.bound.chunks(draws.horizon) {
            let mut m = cfg.m0;
            for z in path {
                m = p.psi * m + p.zeta * rho + p.sigma_eps * z;
                lo = lo.min(m);
                hi = hi.max(m);
            }
        }
    }
    if hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    Grid {
        lo,
        step: (hi - lo) / (cfg.grid_points - 1) as f64,
        points: cfg.grid_points,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TerminalCheck {
    pub t_solve: usize,
    pub t_alt: usize,
    pub ages: usize,
    /// Grid nodes (over all compared ages) where the choices differ.
    pub differing: usize,
    pub identical: bool,
}

/// Decision rules and continuation values of one group's agent.
#[derive(Debug, Clone, Serialize)]
pub struct PolicySolution {
    pub beta: f64,
    pub grid: Grid,
    pub rho_lattice: Vec<f64>,
    /// `choice[t-1][j]` indexes the lattice choice at age `t`, grid node `j`.
    pub choice: Vec<Vec<u16>>,
    /// `values[t-1][j] = F_t(M_j)` for `t = 1..t_solve` (the last is 0).
    pub values: Vec<Vec<f64>>,
    pub t_solve: usize,
    pub terminal: Option<TerminalCheck>,
}

impl PolicySolution {
    pub fn rho(&self, age: usize, node: usize) -> f64 {
        self.rho_lattice[self.choice[age - 1][node] as usize]
    }

    pub fn rho_row(&self, age: usize) -> Vec<f64> {
        self.choice[age - 1].iter().map(|&c| self.rho_lattice[c as usize]).collect()
    }

    pub fn value_spline(&self, age: usize) -> MonotoneSpline {
        MonotoneSpline::new(self.grid.lo, self.grid.step, self.values[age - 1].clone())
    }
}

/// Backward induction for a sophisticated agent with present bias `beta`.
pub fn solve_policy(p: &BehavioralParams, beta: f64, cfg: &SolverConfig) -> Result<PolicySolution> {
    let draws = SolverDraws::new(cfg);
    solve_policy_with(p, beta, cfg, &draws)
}

pub fn solve_policy_with(p: &BehavioralParams, beta: f64, cfg: &SolverConfig, draws: &SolverDraws) -> Result<PolicySolution> {
    cfg.validate()?;
    p.validate()?;
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    let grid = build_grid(p, cfg, draws);
    let mut sol = backward(p, beta, cfg, &grid, draws, cfg.t_solve)?;
    if cfg.terminal_check && cfg.terminal_alt != cfg.t_solve {
        let alt = backward(p, beta, cfg, &grid, draws, cfg.terminal_alt)?;
        let ages = POLICY_AGES.min(cfg.t_solve - 1).min(cfg.terminal_alt - 1);
        let differing = (0..ages)
            .map(|t| sol.choice[t].iter().zip(&alt.choice[t]).filter(|(a, b)| a != b).count())
            .sum();
        sol.terminal = Some(TerminalCheck {
            t_solve: cfg.t_solve,
            t_alt: cfg.terminal_alt,
            ages,
            differing,
            identical: differing == 0,
        });
    }
    Ok(sol)
}

fn backward(
    p: &BehavioralParams,
    beta: f64,
    cfg: &SolverConfig,
    grid: &Grid,
    draws: &SolverDraws,
    t_solve: usize,
) -> Result<PolicySolution> {
    let lattice = cfg.rho_lattice();
    let levels = grid.levels();
    let eps: Vec<f64> = draws.expectation.iter().map(|z| p.sigma_eps * z).collect();
    let inv_k = 1.0 / eps.len() as f64;
    let n = grid.points;

    let mut values = vec![vec![0.0; n]; t_solve];
    let mut choice = vec![vec![0u16; n]; t_solve];
    for t in (0..t_solve - 1).rev() {
        let spline = MonotoneSpline::new(grid.lo, grid.step, values[t + 1].clone());
        let rows: Vec<(u16, f64)> = levels
            .par_iter()
            .map(|&m| {
                let mut best: Option<(u16, f64, f64)> = None;
                for (r, &rho) in lattice.iter().enumerate() {
                    let u = flow_utility(rho, m, p);
                    let base = p.psi * m + p.zeta * rho;
                    let ev = eps.iter().map(|e| spline.eval(base + e)).sum::<f64>() * inv_k;
                    let score = u + beta * p.delta * ev;
                    if score.is_finite() && best.is_none_or(|b| score > b.1) {
                        best = Some((r as u16, score, u + p.delta * ev));
                    }
                }
                best.map(|(r, _, f)| (r, f)).ok_or(m)
            })
            .collect::<std::result::Result<_, f64>>()
            .map_err(|m| Error::Solver(format!("no finite utility at grid point M = {m} (age {})", t + 1)))?;
        for (j, (r, f)) in rows.into_iter().enumerate() {
            if !f.is_finite() {
                return Err(Error::Solver(format!("non-finite continuation value at M = {} (age {})", levels[j], t + 1)));
            }
            choice[t][j] = r;
            values[t][j] = f;
        }
    }
    // the terminal age has no continuation
    let last = t_solve - 1;
    for (j, &m) in levels.iter().enumerate() {
        let (r, _) = lattice
            .iter()
            .enumerate()
            .map(|(r, &rho)| (r, flow_utility(rho, m, p)))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        choice[last][j] = r as u16;
    }
    Ok(PolicySolution {
        beta,
        grid: grid.clone(),
        rho_lattice: lattice,
        choice,
        values,
        t_solve,
        terminal: None,
    })
}
