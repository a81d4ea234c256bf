//! Grouped fixed-effects estimator with time-varying group profiles.
//!
//! The objective `Σ_i Σ_t (y_it - x_it'θ - α_{g_i t})²` is minimized by
//! alternating an assignment step (each unit to its nearest profile) and a
//! joint least-squares update of `θ` and the `G × T` profile matrix given
//! the assignment. The update uses the Frisch-Waugh-Lovell form: `θ` comes
//! from regressing group-period-demeaned `y` on group-period-demeaned `x`,
//! and the profiles are the group-period cell means of `y - xθ`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linear::{within_design, LinearFit};
use crate::error::{Error, Result};
use crate::linalg::solve_normal;
use crate::panel::{build_design, clustered_covariance, Design, DesignSpec, PanelDataset};

/// Restart budget used when `GfeOptions::restarts` is unset.
pub fn default_restarts(n_units: usize) -> usize {
    if n_units <= 2_000 {
        100
    } else {
        25
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GfeOptions {
    /// Independent random initializations; `None` picks
    /// [`default_restarts`] from the unit count.
    pub restarts: Option<usize>,
    pub max_iter: usize,
    pub tol: f64,
    /// Remove unit means before estimation (individual fixed effects).
    pub demean: bool,
    pub seed: u64,
    /// After the restarts, try single-unit label moves with an exact refit
    /// until none improves. `None` enables it for at most
    /// [`LOCAL_SEARCH_MAX_UNITS`] units.
    pub local_search: Option<bool>,
}

pub const LOCAL_SEARCH_MAX_UNITS: usize = 200;

impl Default for GfeOptions {
    fn default() -> Self {
        GfeOptions {
            restarts: None,
            max_iter: 1_000,
            tol: 1e-10,
            demean: true,
            seed: 0,
            local_search: None,
        }
    }
}

impl GfeOptions {
    pub fn with_seed(seed: u64) -> Self {
        GfeOptions {
            seed,
            ..Self::default()
        }
    }

    pub fn restarts(mut self, r: usize) -> Self {
        self.restarts = Some(r);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartDiagnostics {
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective never increased between iterations.
    pub monotone: bool,
    /// Started from a supplied solution rather than random units.
    pub warm: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GfeFit {
    pub groups: usize,
    pub fit: LinearFit,
    /// 0-based group label per unit, in the order of `unit_ids`.
    pub assignment: Vec<usize>,
    pub unit_ids: Vec<i64>,
    /// Estimated `G × T` profiles, ordered so the last-period value is
    /// non-decreasing in the group index.
    pub profiles: Vec<Vec<f64>>,
    /// Profiles with the grand mean of the unit means added back (equal to
    /// `profiles` for non-demeaned fits).
    pub presentation_profiles: Vec<Vec<f64>>,
    pub restarts: Vec<RestartDiagnostics>,
    pub converged: bool,
    pub iterations: usize,
    pub demeaned: bool,
    pub options: GfeOptions,
}

impl GfeFit {
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.groups];
        for &g in &self.assignment {
            sizes[g] += 1;
        }
        sizes
    }

    pub fn objective(&self) -> f64 {
        self.fit.objective
    }

    /// `α̂_{ĝ_i t}` for every row, unit-major.
    pub fn assigned_profile_values(&self) -> Vec<f64> {
        self.assignment
            .iter()
            .flat_map(|&g| self.profiles[g].iter().copied())
            .collect()
    }
}

/// Assign each unit's `T`-vector (rows of `residuals`, unit-major) to the
/// nearest profile in squared distance. Ties go to the lowest group index.
pub fn assign_groups(residuals: &[f64], profiles: &[Vec<f64>]) -> Vec<usize> {
    let t = profiles.first().map_or(0, Vec::len);
    let flat: Vec<f64> = profiles.iter().flatten().copied().collect();
    assign_flat(residuals, &flat, t, profiles.len()).0
}

fn assign_flat(resid: &[f64], profiles: &[f64], t: usize, g: usize) -> (Vec<usize>, Vec<f64>) {
    let n = if t == 0 { 0 } else { resid.len() / t };
    let mut labels = Vec::with_capacity(n);
    let mut dists = Vec::with_capacity(n);
    for r in resid.chunks_exact(t) {
        let mut best = (0usize, f64::INFINITY);
        for (gi, a) in profiles.chunks_exact(t).enumerate().take(g) {
            let d: f64 = r.iter().zip(a).map(|(u, v)| (u - v) * (u - v)).sum();
            if d < best.1 {
                best = (gi, d);
            }
        }
        labels.push(best.0);
        dists.push(best.1);
    }
    (labels, dists)
}

/// Dense estimation problem: outcome and regressors on an `N × T` grid.
#[derive(Debug, Clone)]
pub struct GfeProblem {
    n: usize,
    t: usize,
    k: usize,
    y: Vec<f64>,
    /// Row-major `(N·T) × K`.
    x: Vec<f64>,
    names: Vec<String>,
    unit_ids: Vec<i64>,
    demeaned: bool,
    unit_mean_y: Vec<f64>,
    unit_mean_x: Vec<f64>,
}

impl GfeProblem {
    /// Prepare a design for estimation; with `demean` the unit means are
    /// removed first (regressors without within variation are rejected).
    pub fn from_design(design: &Design, demean: bool) -> Result<Self> {
        let (n, t) = (design.n_units, design.n_periods);
        if t == 0 || design.n_obs() != n * t {
            return Err(Error::Precondition("grouped fixed effects require a balanced panel".into()));
        }
        let k = design.n_regressors();
        let unit_mean = |col: &[f64]| -> Vec<f64> {
            col.chunks_exact(t).map(|b| b.iter().sum::<f64>() / t as f64).collect()
        };
        let unit_mean_y = unit_mean(design.y.as_slice());
        let mut unit_mean_x = vec![0.0; n * k];
        for j in 0..k {
            let col: Vec<f64> = design.x.column(j).iter().copied().collect();
            for (i, m) in unit_mean(&col).into_iter().enumerate() {
                unit_mean_x[i * k + j] = m;
            }
        }
        let work = if demean { within_design(design)? } else { design.clone() };
        let mut x = vec![0.0; n * t * k];
        for r in 0..n * t {
            for j in 0..k {
                x[r * k + j] = work.x[(r, j)];
            }
        }
        Ok(GfeProblem {
            n,
            t,
            k,
            y: work.y.iter().copied().collect(),
            x,
            names: design.names.clone(),
            unit_ids: design.unit_ids.clone(),
            demeaned: demean,
            unit_mean_y,
            unit_mean_x,
        })
    }

    pub fn n_units(&self) -> usize {
        self.n
    }

    pub fn n_periods(&self) -> usize {
        self.t
    }

    pub fn n_regressors(&self) -> usize {
        self.k
    }

    /// Working outcome (demeaned when the problem is).
    pub fn outcome(&self) -> &[f64] {
        &self.y
    }

    /// Working regressors, row-major `(N·T) × K`.
    pub fn regressors(&self) -> &[f64] {
        &self.x
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn is_demeaned(&self) -> bool {
        self.demeaned
    }

    /// `y - xθ`, unit-major.
    pub fn residuals(&self, theta: &[f64]) -> Vec<f64> {
        let k = self.k;
        self.y
            .iter()
            .enumerate()
            .map(|(r, &y)| y - (0..k).map(|j| self.x[r * k + j] * theta[j]).sum::<f64>())
            .collect()
    }

    /// Pooled least squares of the working outcome on the working
    /// regressors (the within estimator when demeaned).
    pub fn pooled_theta(&self) -> Vec<f64> {
        let k = self.k;
        if k == 0 {
            return Vec::new();
        }
        let mut xtx = DMatrix::<f64>::zeros(k, k);
        let mut xty = DVector::<f64>::zeros(k);
        for r in 0..self.n * self.t {
            let row = &self.x[r * k..(r + 1) * k];
            for a in 0..k {
                xty[a] += row[a] * self.y[r];
                for b in 0..k {
                    xtx[(a, b)] += row[a] * row[b];
                }
            }
        }
        solve_normal(&xtx, &xty).iter().copied().collect()
    }

    /// Least-squares `θ` and profiles for a fixed assignment, with the
    /// resulting mean squared residual.
    pub fn update(&self, labels: &[usize], g: usize) -> (Vec<f64>, Vec<f64>, f64) {
        let (n, t, k) = (self.n, self.t, self.k);
        let mut counts = vec![0usize; g];
        let mut ybar = vec![0.0; g * t];
        let mut xbar = vec![0.0; g * t * k];
        for i in 0..n {
            let gi = labels[i];
            counts[gi] += 1;
            for s in 0..t {
                let r = i * t + s;
                ybar[gi * t + s] += self.y[r];
                for j in 0..k {
                    xbar[(gi * t + s) * k + j] += self.x[r * k + j];
                }
            }
        }
        for gi in 0..g {
            let c = counts[gi].max(1) as f64;
            for s in 0..t {
                ybar[gi * t + s] /= c;
                for j in 0..k {
                    xbar[(gi * t + s) * k + j] /= c;
                }
            }
        }
        let mut theta = vec![0.0; k];
        if k > 0 {
            let mut xtx = DMatrix::<f64>::zeros(k, k);
            let mut xty = DVector::<f64>::zeros(k);
            let mut dx = vec![0.0; k];
            for i in 0..n {
                let gi = labels[i];
                for s in 0..t {
                    let r = i * t + s;
                    let cell = gi * t + s;
                    let dy = self.y[r] - ybar[cell];
                    for j in 0..k {
                        dx[j] = self.x[r * k + j] - xbar[cell * k + j];
                    }
                    for a in 0..k {
                        xty[a] += dx[a] * dy;
                        for b in a..k {
                            xtx[(a, b)] += dx[a] * dx[b];
                        }
                    }
                }
            }
            for a in 0..k {
                for b in 0..a {
                    xtx[(a, b)] = xtx[(b, a)];
                }
            }
            theta = solve_normal(&xtx, &xty).iter().copied().collect();
        }
        let mut alpha = vec![0.0; g * t];
        for cell in 0..g * t {
            alpha[cell] = ybar[cell] - (0..k).map(|j| xbar[cell * k + j] * theta[j]).sum::<f64>();
        }
        let obj = self.objective(&theta, &alpha, labels);
        (theta, alpha, obj)
    }

    /// Mean squared residual of `(θ, α, labels)`.
    pub fn objective(&self, theta: &[f64], alpha: &[f64], labels: &[usize]) -> f64 {
        let (t, k) = (self.t, self.k);
        let mut ssr = 0.0;
        for (i, &gi) in labels.iter().enumerate() {
            for s in 0..t {
                let r = i * t + s;
                let fitted: f64 = (0..k).map(|j| self.x[r * k + j] * theta[j]).sum::<f64>() + alpha[gi * t + s];
                let e = self.y[r] - fitted;
                ssr += e * e;
            }
        }
        ssr / (self.n * t) as f64
    }

    fn run(&self, g: usize, theta0: Vec<f64>, alpha0: Vec<f64>, opts: &GfeOptions) -> Run {
        let (n, t) = (self.n, self.t);
        let mut theta = theta0;
        let mut alpha = alpha0;
        let mut labels: Option<Vec<usize>> = None;
        let mut prev = f64::INFINITY;
        let mut objective = f64::INFINITY;
        let mut monotone = true;
        let mut converged = false;
        let mut iterations = 0;
        let mut stopped_on_tol = false;

        while iterations < opts.max_iter {
            iterations += 1;
            let resid = self.residuals(&theta);
            let (mut next, dists) = assign_flat(&resid, &alpha, t, g);
            repair_empty(&mut next, &dists, g);
            if labels.as_ref() == Some(&next) {
                converged = true;
                break;
            }
            let (th, al, obj) = self.update(&next, g);
            labels = Some(next);
            theta = th;
            alpha = al;
            objective = obj;
            if obj > prev + 1e-12 * prev.abs().max(1.0) {
                monotone = false;
            }
            if prev - obj < opts.tol {
                converged = true;
                stopped_on_tol = true;
                break;
            }
            prev = obj;
        }
        let mut labels = labels.unwrap_or_else(|| vec![0; n]);
        if stopped_on_tol {
            // keep labels consistent with the final (θ, α)
            let resid = self.residuals(&theta);
            let (fresh, _) = assign_flat(&resid, &alpha, t, g);
            if fresh != labels && no_empty(&fresh, g) {
                let obj = self.objective(&theta, &alpha, &fresh);
                if obj <= objective {
                    labels = fresh;
                    objective = obj;
                }
            }
        }
        Run {
            labels,
            theta,
            alpha,
            objective,
            iterations,
            converged,
            monotone,
        }
    }

    /// Single-unit moves with exact refits, followed by a fresh alternation
    /// from the improved solution. Never returns a worse run.
    fn local_search(&self, g: usize, start: Run, opts: &GfeOptions) -> Run {
        let mut labels = start.labels.clone();
        let mut best = start.objective;
        let mut counts = vec![0usize; g];
        for &l in &labels {
            counts[l] += 1;
        }
        let mut moved = false;
        loop {
            let mut improved = false;
            for i in 0..self.n {
                let from = labels[i];
                if counts[from] == 1 {
                    continue;
                }
                for to in (0..g).filter(|&h| h != from) {
                    labels[i] = to;
                    let (_, _, obj) = self.update(&labels, g);
                    if obj < best - 1e-13 * best.abs().max(1e-300) {
                        best = obj;
                        counts[from] -= 1;
                        counts[to] += 1;
                        improved = true;
                        moved = true;
                        break;
                    }
                    labels[i] = from;
                }
            }
            if !improved {
                break;
            }
        }
        if !moved {
            return start;
        }
        let (theta, alpha, _) = self.update(&labels, g);
        let mut run = self.run(g, theta, alpha, opts);
        if run.objective > best {
            let (theta, alpha, objective) = self.update(&labels, g);
            run = Run {
                labels,
                theta,
                alpha,
                objective,
                ..run
            };
        }
        run.iterations += start.iterations;
        run.monotone &= start.monotone;
        run
    }

    /// Restart `stream`: `G` distinct units' residual paths as profiles.
    /// Stream 0 keeps the pooled `θ`; later streams perturb it by one
    /// outcome-to-regressor scale unit per coordinate.
    fn random_start(&self, g: usize, theta0: &[f64], seed: u64, stream: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let picks = rand::seq::index::sample(&mut rng, self.n, g);
        let mut theta = theta0.to_vec();
        if stream > 0 {
            let sd = |v: &mut dyn Iterator<Item = f64>| {
                let (mut s1, mut s2, mut c) = (0.0, 0.0, 0.0);
                for e in v {
                    s1 += e;
                    s2 += e * e;
                    c += 1.0;
                }
                (s2 / c - (s1 / c).powi(2)).max(0.0).sqrt()
            };
            let sy = sd(&mut self.y.iter().copied());
            for (j, th) in theta.iter_mut().enumerate() {
                let sx = sd(&mut self.x.iter().skip(j).step_by(self.k).copied());
                let scale = if sx > 0.0 && sy > 0.0 { sy / sx } else { 1.0 };
                *th += scale * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let resid = self.residuals(&theta);
        let mut alpha = Vec::with_capacity(g * self.t);
        for i in picks.iter() {
            alpha.extend_from_slice(&resid[i * self.t..(i + 1) * self.t]);
        }
        (theta, alpha)
    }

    /// Initial solution for `G + 1` groups from a `G`-group fit: the old
    /// profiles plus the residual path of the worst-fitted unit.
    pub fn split_start(&self, fit: &GfeFit) -> WarmStart {
        let t = self.t;
        let theta = fit.fit.coefficients.clone();
        let resid = self.residuals(&theta);
        let flat: Vec<f64> = fit.profiles.iter().flatten().copied().collect();
        let mut worst = (0usize, -1.0f64);
        for (i, &gi) in fit.assignment.iter().enumerate() {
            let d: f64 = (0..t)
                .map(|s| (resid[i * t + s] - flat[gi * t + s]).powi(2))
                .sum();
            if d > worst.1 {
                worst = (i, d);
            }
        }
        let mut profiles = fit.profiles.clone();
        profiles.push(resid[worst.0 * t..(worst.0 + 1) * t].to_vec());
        WarmStart { theta, profiles }
    }

    /// Fit with the configured random restarts plus any warm starts.
    pub fn fit(&self, g: usize, opts: &GfeOptions, warm: &[WarmStart]) -> Result<GfeFit> {
        if g == 0 || g > self.n {
            return Err(Error::Precondition(format!("group count {g} must lie in 1..={}", self.n)));
        }
        let restarts = opts.restarts.unwrap_or_else(|| default_restarts(self.n));
        let theta0 = self.pooled_theta();
        let mut runs: Vec<(Run, bool)> = (0..restarts)
            .into_par_iter()
            .map(|r| {
                let (th0, alpha0) = self.random_start(g, &theta0, opts.seed, r as u64);
                (self.run(g, th0, alpha0, opts), false)
            })
            .collect();
        for w in warm {
            if w.profiles.len() != g || w.profiles.iter().any(|p| p.len() != self.t) || w.theta.len() != self.k {
                return Err(Error::Precondition("warm start does not match the problem".into()));
            }
            let alpha0 = w.profiles.iter().flatten().copied().collect();
            runs.push((self.run(g, w.theta.clone(), alpha0, opts), true));
        }
        if runs.is_empty() {
            return Err(Error::Precondition("no restarts requested".into()));
        }
        let best = runs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .0.objective.total_cmp(&b.1 .0.objective).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
            .unwrap();
        let diagnostics = runs
            .iter()
            .map(|(run, warm)| RestartDiagnostics {
                objective: run.objective,
                iterations: run.iterations,
                converged: run.converged,
                monotone: run.monotone,
                warm: *warm,
            })
            .collect();
        let (mut run, _) = runs.swap_remove(best);
        let local_search = opts.local_search.unwrap_or(self.n <= LOCAL_SEARCH_MAX_UNITS);
        if local_search && g > 1 {
            run = self.local_search(g, run, opts);
        }
        let resolved = GfeOptions {
            restarts: Some(restarts),
            local_search: Some(local_search),
            ..opts.clone()
        };
        self.finish(g, run, diagnostics, resolved)
    }

    fn finish(&self, g: usize, run: Run, restarts: Vec<RestartDiagnostics>, options: GfeOptions) -> Result<GfeFit> {
        let (n, t, k) = (self.n, self.t, self.k);
        // canonical order: ascending last-period value, then earlier periods
        let mut order: Vec<usize> = (0..g).collect();
        order.sort_by(|&a, &b| {
            let pa = &run.alpha[a * t..(a + 1) * t];
            let pb = &run.alpha[b * t..(b + 1) * t];
            pa.iter()
                .rev()
                .zip(pb.iter().rev())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut relabel = vec![0; g];
        for (new, &old) in order.iter().enumerate() {
            relabel[old] = new;
        }
        let assignment: Vec<usize> = run.labels.iter().map(|&l| relabel[l]).collect();
        let profiles: Vec<Vec<f64>> = order
            .iter()
            .map(|&old| run.alpha[old * t..(old + 1) * t].to_vec())
            .collect();
        let flat: Vec<f64> = profiles.iter().flatten().copied().collect();

        let resid_base = self.residuals(&run.theta);
        let residuals: Vec<f64> = (0..n * t)
            .map(|r| resid_base[r] - flat[assignment[r / t] * t + r % t])
            .collect();

        // regressors net of group-period cell means (profiles partialled out)
        let mut counts = vec![0usize; g];
        let mut xbar = vec![0.0; g * t * k];
        for i in 0..n {
            let gi = assignment[i];
            counts[gi] += 1;
            for s in 0..t {
                for j in 0..k {
                    xbar[(gi * t + s) * k + j] += self.x[(i * t + s) * k + j];
                }
            }
        }
        for (cell, chunk) in xbar.chunks_mut(k.max(1)).enumerate().take(g * t) {
            let c = counts[cell / t].max(1) as f64;
            chunk.iter_mut().for_each(|v| *v /= c);
        }
        let xt = DMatrix::from_fn(n * t, k, |r, j| {
            self.x[r * k + j] - xbar[(assignment[r / t] * t + r % t) * k + j]
        });
        let clusters: Vec<usize> = (0..n * t).map(|r| r / t).collect();
        let cov = clustered_covariance(&DVector::from_column_slice(&residuals), &xt, &clusters, &self.names)?;

        let offset = if self.demeaned {
            let level: f64 = (0..n)
                .map(|i| {
                    self.unit_mean_y[i]
                        - (0..k).map(|j| self.unit_mean_x[i * k + j] * run.theta[j]).sum::<f64>()
                })
                .sum::<f64>()
                / n as f64;
            level
        } else {
            0.0
        };
        let presentation_profiles = profiles
            .iter()
            .map(|p| p.iter().map(|v| v + offset).collect())
            .collect();

        let mut fit = LinearFit::assemble(self.names.clone(), run.theta, residuals, cov);
        fit.objective = run.objective;
        Ok(GfeFit {
            groups: g,
            fit,
            assignment,
            unit_ids: self.unit_ids.clone(),
            profiles,
            presentation_profiles,
            restarts,
            converged: run.converged,
            iterations: run.iterations,
            demeaned: self.demeaned,
            options,
        })
    }
}

/// A supplied initial `(θ, α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub theta: Vec<f64>,
    pub profiles: Vec<Vec<f64>>,
}

struct Run {
    labels: Vec<usize>,
    theta: Vec<f64>,
    alpha: Vec<f64>,
    objective: f64,
    iterations: usize,
    converged: bool,
    monotone: bool,
}

fn no_empty(labels: &[usize], g: usize) -> bool {
    let mut seen = vec![false; g];
    labels.iter().for_each(|&l| seen[l] = true);
    seen.into_iter().all(|s| s)
}

/// Give every empty group the worst-fitted unit of a group that can spare it.
fn repair_empty(labels: &mut [usize], dists: &[f64], g: usize) {
    let mut sizes = vec![0usize; g];
    labels.iter().for_each(|&l| sizes[l] += 1);
    let mut taken = vec![false; labels.len()];
    for empty in 0..g {
        if sizes[empty] > 0 {
            continue;
        }
        let donor = (0..labels.len())
            .filter(|&i| !taken[i] && sizes[labels[i]] > 1)
            .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
        if let Some(i) = donor {
            sizes[labels[i]] -= 1;
            labels[i] = empty;
            sizes[empty] = 1;
            taken[i] = true;
        }
    }
}

/// Grouped fixed-effects fit of `panel` with `g` groups.
pub fn gfe_fit(panel: &PanelDataset, spec: &DesignSpec, g: usize, opts: &GfeOptions) -> Result<GfeFit> {
    let spec = DesignSpec {
        intercept: false,
        ..spec.clone()
    };
    let design = build_design(panel, &spec)?;
    GfeProblem::from_design(&design, opts.demean)?.fit(g, opts, &[])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_match_gets_its_row() {
        let profiles = vec![vec![0., 0.], vec![1., 2.], vec![5., 5.]];
        assert_eq!(assign_groups(&[1., 2.], &profiles), vec![1]);
    }

    #[test]
    fn equidistant_goes_to_lowest_index() {
        let profiles = vec![vec![0., 0.], vec![2., 0.]];
        assert_eq!(assign_groups(&[1., 0.], &profiles), vec![0]);
    }

    #[test]
    fn repair_moves_worst_unit() {
        let mut labels = vec![0, 0, 0];
        repair_empty(&mut labels, &[0.1, 5.0, 0.2], 2);
        assert_eq!(labels, vec![0, 1, 0]);
    }

    #[test]
    fn rejects_too_many_groups() {
        let p = PanelDataset::from_dense(2, 2, vec![0.; 4], vec![0., 1., 1., 0.], vec![], vec![]).unwrap();
        assert!(matches!(
            gfe_fit(&p, &DesignSpec::new(["treatment"]), 3, &GfeOptions::default()),
            Err(Error::Precondition(_))
        ));
    }
}
