use gfe_core::behavioral::*;
use proptest::prelude::*;

fn small_solver() -> SolverConfig {
    SolverConfig {
        grid_points: 80,
        draws: 200,
        bound_paths: 200,
        t_solve: 60,
        terminal_check: false,
        ..SolverConfig::default()
    }
}

fn baseline() -> BehavioralParams {
    BehavioralParams::default()
}

#[test]
fn costless_health_makes_full_risk_dominant() {
    let p = BehavioralParams { b: 0.0, c: 0.0, ..baseline() };
    for beta in [0.3, 0.598, 1.0, 1.4] {
        let sol = solve_policy(&p, beta, &small_solver()).unwrap();
        for age in 1..sol.t_solve {
            assert!(sol.rho_row(age).iter().all(|&r| r == 1.0), "beta {beta} age {age}");
        }
    }
}

#[test]
fn exponential_discounting_gives_stationary_early_policy() {
    let cfg = SolverConfig {
        grid_points: 120,
        draws: 300,
        t_solve: 100,
        ..small_solver()
    };
    let p = BehavioralParams { beta1: 1.0, beta2: 1.0, ..baseline() };
    let sol = solve_policy(&p, 1.0, &cfg).unwrap();
    let nine = &sol.choice[8];
    for age in 1..=8 {
        assert_eq!(&sol.choice[age - 1], nine, "age {age}");
    }
}

#[test]
fn early_policy_ignores_terminal_horizon() {
    let cfg = SolverConfig {
        grid_points: 120,
        draws: 300,
        t_solve: 100,
        terminal_check: true,
        terminal_alt: 200,
        ..small_solver()
    };
    for beta in [baseline().beta1, baseline().beta2] {
        let sol = solve_policy(&baseline(), beta, &cfg).unwrap();
        let check = sol.terminal.unwrap();
        assert_eq!(check.ages, 8);
        assert!(check.identical, "beta {beta}: {} cells differ", check.differing);
    }
}

#[test]
fn no_shock_paths_coincide() {
    let p = BehavioralParams { sigma_eps: 0.0, ..baseline() };
    let sol = solve_policy(&p, p.beta2, &small_solver()).unwrap();
    let tr = simulate_trajectories(&sol, &p, 50, 0.0, 3);
    for i in 1..tr.paths {
        assert_eq!(tr.path(i), tr.path(0));
    }
}

#[test]
fn policy_lattice_and_finite_values() {
    let cfg = small_solver();
    let p = baseline();
    let sol = solve_policy(&p, p.beta2, &cfg).unwrap();
    let lattice = cfg.rho_lattice();
    assert_eq!(lattice.len(), 21);
    for (k, r) in lattice.iter().enumerate() {
        assert!((r - 0.05 * k as f64).abs() < 1e-12);
    }
    let m_max = sol.grid.lo.abs().max(sol.grid.hi().abs());
    let floor = (UTILITY_FLOOR - p.b * (2.0 * m_max).powi(2)) / (1.0 - p.delta);
    for row in &sol.values {
        assert!(row.iter().all(|f| f.is_finite() && *f >= floor));
    }
    let levels = sol.grid.levels();
    assert!(levels.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(levels.len(), cfg.grid_points);
}

#[test]
fn present_bias_raises_mean_health_risk() {
    let mut cfg = ModelConfig {
        solver: small_solver(),
        paths: 10_000,
        ..ModelConfig::default()
    };
    cfg.solver.t_solve = 60;
    cfg.rule = MomentRule::RunningMax;
    let p = BehavioralParams { beta1: 1.0, beta2: 0.6, ..baseline() };
    let sol = solve_model(&p, &cfg).unwrap();
    let gap = sol.mean_m[1][7] - sol.mean_m[0][7];
    assert!(gap >= 0.0, "gap {gap}");
    for g in 0..2 {
        assert!(sol.moments[g].windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn counterfactual_matches_low_risk_group() {
    let cfg = ModelConfig {
        solver: small_solver(),
        paths: 2_000,
        ..ModelConfig::default()
    };
    let p = baseline();
    let cf = no_bias_counterfactual(&p);
    assert_eq!(cf.beta2, p.beta1);
    let sol = solve_model(&cf, &cfg).unwrap();
    assert_eq!(sol.moments[0], sol.moments[1]);
}

#[test]
fn moments_limits_of_threshold() {
    let cfg = ModelConfig {
        solver: small_solver(),
        paths: 500,
        ..ModelConfig::default()
    };
    let hi = solve_model(&BehavioralParams { kappa: 1e9, ..baseline() }, &cfg).unwrap();
    assert!(hi.moments.iter().flatten().all(|&m| m == 0.0));
    let lo = solve_model(&BehavioralParams { kappa: -1e9, ..baseline() }, &cfg).unwrap();
    assert!(lo.moments.iter().flatten().all(|&m| m == 1.0));
}

#[test]
fn solver_is_deterministic() {
    let cfg = ModelConfig {
        solver: small_solver(),
        paths: 1_000,
        ..ModelConfig::default()
    };
    let a = solve_model(&baseline(), &cfg).unwrap();
    let b = solve_model(&baseline(), &cfg).unwrap();
    assert_eq!(a.moments, b.moments);
    assert_eq!(a.policies[1].choice, b.policies[1].choice);
}

#[test]
fn invalid_configs_are_rejected() {
    let p = baseline();
    assert!(solve_policy(&p, 0.0, &small_solver()).is_err());
    let bad = BehavioralParams { delta: 1.2, ..p };
    assert!(solve_policy(&bad, 1.0, &small_solver()).is_err());
    let cfg = SolverConfig { grid_points: 1, ..small_solver() };
    assert!(solve_policy(&p, 1.0, &cfg).is_err());
    let mc = ModelConfig { ages: 200, solver: small_solver(), ..ModelConfig::default() };
    assert!(solve_model(&p, &mc).is_err());
}

#[test]
fn utility_examples() {
    let p = baseline();
    assert_eq!(flow_utility(0.0, 0.0, &p), 0.0);
    assert!((flow_utility(1.0, 0.0, &p) - 1.0).abs() < 1e-15);
    let oracle = 0.5f64.powf(1.0 - 0.864 - 0.058 * 2.0) - 0.186 * 4.0;
    assert!((flow_utility(0.5, 2.0, &p) - oracle).abs() < 1e-12);
    assert!((flow_utility(0.5, 2.0, &p) - 0.24224).abs() < 1e-4);
    assert!((mh_transition(0.0, 1.0, 0.0, &p) - 0.447).abs() < 1e-15);
    let fixed = p.zeta / (1.0 - p.psi);
    assert!((mh_transition(fixed, 1.0, 0.0, &p) - fixed).abs() < 1e-12);
    assert!((fixed - 11.763).abs() < 1e-3);
    assert_eq!(abortion_prob(0.0, &p), 0.5);
    assert!((abortion_prob(1.0, &p) - 0.841_344_746).abs() < 1e-8);
}

proptest! {
    #[test]
    fn spline_preserves_monotone_knots(
        x0 in -5.0f64..5.0,
        h in 0.01f64..2.0,
        steps in prop::collection::vec(0.0f64..3.0, 2..20),
        increasing in any::<bool>(),
        probes in prop::collection::vec(0.0f64..1.0, 1..30),
    ) {
        let mut y = vec![0.0];
        for s in &steps {
            let last = *y.last().unwrap();
            y.push(if increasing { last + s } else { last - s });
        }
        let n = y.len();
        let spline = MonotoneSpline::new(x0, h, y);
        let mut xs: Vec<f64> = probes.iter().map(|u| x0 + u * h * (n - 1) as f64).collect();
        xs.sort_by(f64::total_cmp);
        let vals: Vec<f64> = xs.iter().map(|&x| spline.eval(x)).collect();
        for w in vals.windows(2) {
            if increasing {
                prop_assert!(w[1] >= w[0] - 1e-12);
            } else {
                prop_assert!(w[1] <= w[0] + 1e-12);
            }
        }
    }

    #[test]
    fn utility_monotone_in_risk(m in -20.0f64..20.0, a in 0.0f64..2.0, c in -0.5f64..0.5) {
        let p = BehavioralParams { a, c, ..BehavioralParams::default() };
        let e = 1.0 - a - c * m;
        prop_assume!(e.abs() > 1e-6);
        let u: Vec<f64> = (1..=20).map(|k| flow_utility(0.05 * k as f64, m, &p)).collect();
        // sgn(e)·ρ^e rises in ρ on both sides of e = 0
        for w in u.windows(2) {
            prop_assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn transition_is_linear(
        m1 in -10.0f64..10.0, m2 in -10.0f64..10.0,
        r1 in 0.0f64..1.0, r2 in 0.0f64..1.0,
        e1 in -3.0f64..3.0, e2 in -3.0f64..3.0,
    ) {
        let p = BehavioralParams::default();
        let lhs = mh_transition(m1 + m2, r1 + r2, e1 + e2, &p);
        let rhs = mh_transition(m1, r1, e1, &p) + mh_transition(m2, r2, e2, &p);
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn running_max_rates_never_fall(
        m in prop::collection::vec(-3.0f64..3.0, 8 * 30),
        kappa in -2.0f64..2.0,
    ) {
        let tr = Trajectories { paths: 30, ages: 8, rho: vec![0.0; m.len()], m, clipped: 0 };
        let rates = diagnosis_rates(&tr, kappa, MomentRule::RunningMax);
        prop_assert!(rates.windows(2).all(|w| w[1] >= w[0]));
        let per = diagnosis_rates(&tr, kappa, MomentRule::PerPeriod);
        prop_assert!(per.iter().zip(&rates).all(|(p, r)| p <= r));
    }

    #[test]
    fn abortion_prob_monotone(r1 in -5.0f64..5.0, d in 0.001f64..5.0) {
        let p = BehavioralParams::default();
        prop_assert!(abortion_prob(r1 + d, &p) >= abortion_prob(r1, &p));
    }
}
