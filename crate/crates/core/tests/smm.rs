use gfe_core::behavioral::*;
use gfe_core::smm::*;

fn quick_config() -> SmmConfig {
    let mut cfg = SmmConfig::default();
    cfg.model.solver.grid_points = 40;
    cfg.model.solver.draws = 50;
    cfg.model.solver.t_solve = 30;
    cfg.model.solver.bound_paths = 200;
    cfg.model.paths = 2_000;
    cfg.anneal.inner_loops = 10;
    cfg.anneal.initial_temperature = 1e-3;
    cfg.nelder_mead.max_evaluations = 200;
    cfg
}

#[test]
fn own_moments_give_zero_objective() {
    let cfg = quick_config();
    let p = BehavioralParams::default();
    let sol = solve_model(&p, &cfg.model).unwrap();
    let target = MomentTarget::new(sol.moments, "self").unwrap();
    assert_eq!(smm_objective(&p, &target, &cfg).unwrap(), 0.0);
}

#[test]
fn one_cell_perturbation_is_a_sixteenth_of_its_square() {
    let cfg = quick_config();
    let p = BehavioralParams::default();
    let mut rates = solve_model(&p, &cfg.model).unwrap().moments;
    rates[0][3] += 0.01;
    let target = MomentTarget::new(rates, "perturbed").unwrap();
    let v = smm_objective(&p, &target, &cfg).unwrap();
    assert!((v - 0.0001 / 16.0).abs() < 1e-15, "{v}");
}

#[test]
fn objective_is_deterministic_and_failures_are_infinite() {
    let cfg = quick_config();
    let target = MomentTarget::digitized();
    let mut obj = SmmObjective::new(&target, &cfg).unwrap();
    let p = BehavioralParams::default();
    let a = obj.eval_params(&p);
    let b = obj.eval_params(&p);
    assert_eq!(a.to_bits(), b.to_bits());
    let bad = BehavioralParams { delta: 1.5, ..p };
    assert_eq!(obj.eval_params(&bad), f64::INFINITY);
    assert_eq!(obj.failures, 1);
    assert_eq!(obj.evaluations, 3);
}

#[test]
fn published_estimates_beat_exponential_discounting_on_digitized_target() {
    let mut cfg = quick_config();
    cfg.model.paths = 10_000;
    let target = MomentTarget::digitized();
    let published = BehavioralParams::default();
    let flat = BehavioralParams { beta1: 1.0, beta2: 1.0, ..published };
    let a = smm_objective(&published, &target, &cfg).unwrap();
    let b = smm_objective(&flat, &target, &cfg).unwrap();
    assert!(a < b, "published {a} vs no bias {b}");
}

#[test]
fn round_trip_reaches_tiny_objective() {
    let mut cfg = quick_config();
    let truth = BehavioralParams { beta1: 1.0, beta2: 0.6, delta: 0.92, ..BehavioralParams::default() };
    let target = MomentTarget::new(solve_model(&truth, &cfg.model).unwrap().moments, "self").unwrap();
    cfg.free = SmmConfig::free_with_defaults(&["beta1", "beta2", "delta"]).unwrap();
    let fit = fit_smm(&target, &cfg).unwrap();
    assert!(fit.objective < 1e-6, "{}", fit.objective);
    assert!(fit.objective <= fit.anneal.best_value);
    assert!(fit.nelder_mead.best_value <= fit.anneal.best_value);
    assert!(fit.anneal.trace.windows(2).all(|w| w[1].best <= w[0].best));
    assert_eq!(fit.free, ["beta1", "beta2", "delta"]);
    assert_eq!(fit.params.a, truth.a);
    let again = fit_smm(&target, &cfg).unwrap();
    assert_eq!(fit.anneal.trace, again.anneal.trace);
    assert_eq!(fit.params, again.params);
}

#[test]
fn zero_target_pushes_threshold_out_of_reach() {
    let mut cfg = quick_config();
    cfg.free = SmmConfig::free_with_defaults(&["kappa"]).unwrap();
    let target = MomentTarget::new(vec![vec![0.0; 8]; 2], "zeros").unwrap();
    let fit = fit_smm(&target, &cfg).unwrap();
    assert_eq!(fit.objective, 0.0);
    assert!(fit.moments.iter().flatten().all(|&m| m == 0.0));
    assert!(fit.params.kappa > BehavioralParams::default().kappa);
}

#[test]
fn mismatched_target_is_rejected() {
    let cfg = quick_config();
    let short = MomentTarget::new(vec![vec![0.1; 5]; 2], "short").unwrap();
    assert!(SmmObjective::new(&short, &cfg).is_err());
    assert!(MomentTarget::new(vec![vec![1.5; 8]; 2], "bad").is_err());
    assert!(MomentTarget::digitized().with_weights(vec![vec![0.0; 8]; 2]).is_err());
    let mut cfg = quick_config();
    cfg.free[0].lower = 1.2;
    assert!(fit_smm(&MomentTarget::digitized(), &cfg).is_err());
}

#[test]
fn weights_reweight_the_mean() {
    let t = MomentTarget::digitized()
        .with_weights(vec![vec![1.0; 8], vec![3.0; 8]])
        .unwrap();
    let mut m = t.rates.clone();
    m[1][0] += 0.1;
    assert!((t.distance(&m) - 3.0 * 0.01 / 32.0).abs() < 1e-15);
}
