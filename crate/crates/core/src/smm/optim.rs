use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealConfig {
    pub initial_temperature: f64,
    pub reduction: f64,
    /// Candidate moves per free parameter at each temperature.
    pub inner_loops: usize,
    pub min_temperature: f64,
    /// Stop once the value at the end of this many consecutive outer loops
    /// stays within `stagnation_tol` of itself and of the best value.
    pub stagnation: usize,
    pub stagnation_tol: f64,
    /// Hard cap on objective evaluations (`None` for no cap).
    pub max_evaluations: Option<usize>,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            initial_temperature: 1_000.0,
            reduction: 0.8,
            inner_loops: 200,
            min_temperature: 1e-6,
            stagnation: 5,
            stagnation_tol: 1e-12,
            max_evaluations: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub evaluation: usize,
    pub temperature: f64,
    pub value: f64,
    pub best: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnealResult {
    pub best: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    pub outer_loops: usize,
    pub final_temperature: f64,
    pub trace: Vec<TracePoint>,
}

fn check_bounds(x: &[f64], lower: &[f64], upper: &[f64]) -> Result<()> {
    if x.is_empty() || x.len() != lower.len() || x.len() != upper.len() {
        return Err(Error::Optimizer("point and bounds must have the same positive length".into()));
    }
    for i in 0..x.len() {
        if !(lower[i].is_finite() && upper[i].is_finite() && lower[i] <= upper[i]) {
            return Err(Error::Optimizer(format!("invalid bounds for coordinate {i}")));
        }
        if !(lower[i]..=upper[i]).contains(&x[i]) {
            return Err(Error::Optimizer(format!("start coordinate {i} = {} lies outside its bounds", x[i])));
        }
    }
    Ok(())
}

/// Simulated annealing with coordinate-wise uniform moves inside adaptive
/// step lengths and Metropolis acceptance. Non-finite objective values are
/// rejected moves.
pub fn simulated_annealing<F>(mut f: F, start: &[f64], lower: &[f64], upper: &[f64], cfg: &AnnealConfig, seed: u64) -> Result<AnnealResult>
where
    F: FnMut(&[f64]) -> f64,
{
    check_bounds(start, lower, upper)?;
    if !(cfg.reduction > 0.0 && cfg.reduction < 1.0) || !(cfg.initial_temperature > 0.0) || cfg.inner_loops == 0 {
        return Err(Error::Optimizer("annealing schedule needs T₀ > 0, reduction in (0, 1) and inner loops ≥ 1".into()));
    }
    let n = start.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = start.to_vec();
    let mut fx = f(&x);
    let mut best = x.clone();
    let mut best_value = if fx.is_finite() { fx } else { f64::INFINITY };
    let mut step: Vec<f64> = (0..n).map(|i| (upper[i] - lower[i]) / 2.0).collect();
    let mut temperature = cfg.initial_temperature;
    let mut trace = vec![TracePoint {
        evaluation: 0,
        temperature,
        value: fx,
        best: best_value,
        accepted: true,
    }];
    let mut evaluations = 1;
    let mut ends: Vec<f64> = Vec::new();
    let mut outer = 0;
    let cap = cfg.max_evaluations.unwrap_or(usize::MAX);

    'outer: while temperature >= cfg.min_temperature {
        outer += 1;
        let mut accepted = vec![0usize; n];
        for _ in 0..cfg.inner_loops {
            for i in 0..n {
                if evaluations >= cap {
                    break 'outer;
                }
                let mut cand = x.clone();
                let mut xi = x[i] + rng.random_range(-1.0..=1.0) * step[i];
                if xi < lower[i] || xi > upper[i] {
                    xi = if upper[i] > lower[i] { rng.random_range(lower[i]..=upper[i]) } else { lower[i] };
                }
                cand[i] = xi;
                let fc = f(&cand);
                evaluations += 1;
                let take = fc.is_finite()
                    && (!fx.is_finite() || fc <= fx || rng.random::<f64>() < (-(fc - fx) / temperature).exp());
                if take {
                    x = cand;
                    fx = fc;
                    accepted[i] += 1;
                    if fc < best_value {
                        best_value = fc;
                        best = x.clone();
                    }
                }
                trace.push(TracePoint {
                    evaluation: evaluations - 1,
                    temperature,
                    value: fc,
                    best: best_value,
                    accepted: take,
                });
            }
        }
        // step adjustment toward a 40-60% acceptance ratio
        for i in 0..n {
            let ratio = accepted[i] as f64 / cfg.inner_loops as f64;
            if ratio > 0.6 {
                step[i] *= 1.0 + 2.0 * (ratio - 0.6) / 0.4;
            } else if ratio < 0.4 {
                step[i] /= 1.0 + 2.0 * (0.4 - ratio) / 0.4;
            }
            step[i] = step[i].min(upper[i] - lower[i]);
        }
        ends.push(fx);
        log::info!("anneal: T={temperature:.3e} current={fx:.6e} best={best_value:.6e} evals={evaluations}");
        if cfg.stagnation > 0 && ends.len() >= cfg.stagnation {
            let recent = &ends[ends.len() - cfg.stagnation..];
            if recent.iter().all(|v| (v - fx).abs() <= cfg.stagnation_tol && (v - best_value).abs() <= cfg.stagnation_tol) {
                break;
            }
        }
        // each temperature restarts from the best point so far
        x = best.clone();
        fx = best_value;
        temperature *= cfg.reduction;
    }
    Ok(AnnealResult {
        best,
        best_value,
        evaluations,
        outer_loops: outer,
        final_temperature: temperature,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NelderMeadConfig {
    /// Stop once every vertex is within this distance of the best one.
    pub tolerance: f64,
    pub max_evaluations: usize,
    /// Initial edge length as a fraction of each coordinate's range.
    pub initial_step: f64,
    /// Weight of the squared distance outside the bounds.
    pub penalty: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        NelderMeadConfig {
            tolerance: 1e-8,
            max_evaluations: 2_000,
            initial_step: 0.05,
            penalty: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NelderMeadResult {
    pub best: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Best value after each iteration.
    pub trace: Vec<f64>,
}

/// Nelder-Mead with reflection 1, expansion 2, contraction 0.5 and shrink
/// 0.5. Points outside the box are scored at their clamped image plus a
/// quadratic penalty; the returned point is always inside the box.
pub fn nelder_mead<F>(mut f: F, start: &[f64], lower: &[f64], upper: &[f64], cfg: &NelderMeadConfig) -> Result<NelderMeadResult>
where
    F: FnMut(&[f64]) -> f64,
{
    check_bounds(start, lower, upper)?;
    let n = start.len();
    let mut evaluations = 0;
    let mut score = |x: &[f64], evaluations: &mut usize| -> f64 {
        let clamped: Vec<f64> = (0..n).map(|i| x[i].clamp(lower[i], upper[i])).collect();
        let dist2: f64 = (0..n).map(|i| (x[i] - clamped[i]).powi(2)).sum();
        *evaluations += 1;
        let v = f(&clamped);
        if v.is_finite() {
            v + cfg.penalty * dist2
        } else {
            f64::INFINITY
        }
    };

    let build = |scale: f64| -> Vec<Vec<f64>> {
        let mut s = vec![start.to_vec()];
        for i in 0..n {
            let range = upper[i] - lower[i];
            let mut h = scale * if range > 0.0 { range } else { 1.0 + start[i].abs() };
            // step inward when the start sits on the upper bound
            if start[i] + h > upper[i] && range > 0.0 {
                h = -h;
            }
            let mut v = start.to_vec();
            v[i] += h;
            s.push(v);
        }
        s
    };
    let degenerate = |s: &[Vec<f64>]| (1..=n).any(|i| (0..n).all(|j| (s[i][j] - s[0][j]).abs() < 1e-15));
    let mut simplex = build(cfg.initial_step);
    if degenerate(&simplex) {
        simplex = build(1e-3);
        if degenerate(&simplex) {
            return Err(Error::Optimizer("initial simplex is degenerate".into()));
        }
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| score(v, &mut evaluations)).collect();
    let start_value = values[0];
    let mut trace = Vec::new();
    let mut converged = false;

    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        simplex = order.iter().map(|&k| simplex[k].clone()).collect();
        values = order.iter().map(|&k| values[k]).collect();
        trace.push(values[0]);
        let diameter = simplex[1..]
            .iter()
            .map(|v| (0..n).map(|j| (v[j] - simplex[0][j]).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        if diameter < cfg.tolerance {
            converged = true;
            break;
        }
        if evaluations >= cfg.max_evaluations {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (worst[j] - centroid[j])).collect() };

        let xr = along(-1.0);
        let fr = score(&xr, &mut evaluations);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = score(&xe, &mut evaluations);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(-0.5);
            let fc = score(&xc, &mut evaluations);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = score(&xc, &mut evaluations);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for k in 1..=n {
            simplex[k] = (0..n).map(|j| simplex[0][j] + 0.5 * (simplex[k][j] - simplex[0][j])).collect();
            values[k] = score(&simplex[k], &mut evaluations);
        }
    }

    let (mut best, mut best_value) = (simplex[0].clone(), values[0]);
    if !(best_value < start_value) {
        best = start.to_vec();
        best_value = start_value;
    }
    for i in 0..n {
        best[i] = best[i].clamp(lower[i], upper[i]);
    }
    Ok(NelderMeadResult {
        best,
        best_value,
        evaluations,
        converged,
        trace,
    })
}
