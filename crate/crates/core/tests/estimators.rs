use gfe_core::estimators::{
    assign_groups, fe_fit, gfe_fit, group_flow, ols_fit, select_groups, BicVariant, GfeOptions, GfeProblem,
};
use gfe_core::panel::{build_design, DesignSpec, PanelDataset};
use gfe_core::Error;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn dense(n: usize, t: usize, y: Vec<f64>, x: Vec<f64>) -> PanelDataset {
    PanelDataset::from_dense(n, t, y, x, vec![], vec![]).unwrap()
}

fn spec() -> DesignSpec {
    DesignSpec::new(["treatment"])
}

/// Plain normal-equations SSR for a dense regressor matrix.
fn oracle_ssr(x: &DMatrix<f64>, y: &DVector<f64>) -> (DVector<f64>, f64) {
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    let beta = xtx.svd(true, true).solve(&xty, 1e-12).unwrap();
    let r = y - x * &beta;
    (beta, r.norm_squared())
}

#[test]
fn fe_matches_dummy_variable_regression() {
    let (n, t) = (3, 3);
    let y = vec![1.0, 2.5, 2.0, 0.3, 0.1, 1.7, 4.0, 3.2, 5.5];
    let x = vec![0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0];
    let fe = fe_fit(&dense(n, t, y.clone(), x.clone()), &spec()).unwrap();

    let mut m = DMatrix::zeros(n * t, 1 + n);
    for r in 0..n * t {
        m[(r, 0)] = x[r];
        m[(r, 1 + r / t)] = 1.0;
    }
    let (beta, _) = oracle_ssr(&m, &DVector::from_vec(y));
    assert!((fe.coefficients[0] - beta[0]).abs() < 1e-10);
}

#[test]
fn fe_invariant_to_unit_level_shift() {
    let (n, t) = (4, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let y: Vec<f64> = (0..n * t).map(|_| rng.sample(StandardNormal)).collect();
    let x: Vec<f64> = (0..n * t).map(|_| rng.random_range(0.0..1.0)).collect();
    let a = fe_fit(&dense(n, t, y.clone(), x.clone()), &spec()).unwrap();
    let shifted: Vec<f64> = y.iter().enumerate().map(|(r, v)| if r / t == 2 { v + 7.5 } else { *v }).collect();
    let b = fe_fit(&dense(n, t, shifted, x), &spec()).unwrap();
    assert!((a.coefficients[0] - b.coefficients[0]).abs() < 1e-10);
}

#[test]
fn residuals_and_objective_are_consistent() {
    let (n, t) = (6, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let y: Vec<f64> = (0..n * t).map(|_| rng.sample(StandardNormal)).collect();
    let x: Vec<f64> = (0..n * t).map(|_| rng.sample(StandardNormal)).collect();
    let p = dense(n, t, y, x);
    let d = build_design(&p, &spec().with_intercept()).unwrap();
    let f = ols_fit(&d).unwrap();
    let fitted = &d.x * DVector::from_column_slice(f.coefficients.as_slice());
    for r in 0..n * t {
        assert!((d.y[r] - fitted[r] - f.residuals[r]).abs() < 1e-10);
    }
    let msr = f.residuals.iter().map(|e| e * e).sum::<f64>() / (n * t) as f64;
    assert!((f.objective - msr).abs() < 1e-12);
}

#[test]
fn assign_groups_matches_brute_force_scan() {
    let (n, t, g) = (10, 4, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let resid: Vec<f64> = (0..n * t).map(|_| rng.sample(StandardNormal)).collect();
    let profiles: Vec<Vec<f64>> = (0..g).map(|_| (0..t).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let got = assign_groups(&resid, &profiles);
    for i in 0..n {
        let d: Vec<f64> = profiles
            .iter()
            .map(|p| (0..t).map(|s| (resid[i * t + s] - p[s]).powi(2)).sum())
            .collect();
        let best = (0..g).min_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap()).unwrap();
        assert_eq!(got[i], best);
    }
}

#[test]
fn noiseless_two_profiles_recovered_exactly() {
    let (n, t) = (12, 5);
    let lo = [0.0, 0.1, 0.2, 0.3, 0.4];
    let hi = [0.0, 0.5, 1.2, 2.0, 3.1];
    let truth: Vec<usize> = (0..n).map(|i| usize::from(i % 3 == 0)).collect();
    let mut y = Vec::new();
    for i in 0..n {
        let prof = if truth[i] == 1 { &hi } else { &lo };
        y.extend(prof.iter().map(|v| v + i as f64 * 0.37));
    }
    let x = vec![0.0; n * t];
    let p = dense(n, t, y, x);
    let fit = gfe_fit(&p, &DesignSpec::new(Vec::<String>::new()), 2, &GfeOptions::with_seed(1).restarts(10)).unwrap();
    assert!(fit.objective() < 1e-20);
    // canonical order puts the steeper profile last
    assert_eq!(fit.assignment, truth);
    for s in 0..t {
        let gap = fit.profiles[1][s] - fit.profiles[0][s];
        let want = (hi[s] - lo[s]) - (0..t).map(|q| hi[q] - lo[q]).sum::<f64>() / t as f64;
        assert!((gap - want).abs() < 1e-10);
    }
}

/// Exhaustive enumeration of every label vector with a closed-form refit of
/// `θ` and the group × period cells on unit-demeaned data.
fn exhaustive_gfe(n: usize, t: usize, y: &[f64], x: &[f64]) -> f64 {
    let demean = |v: &[f64]| -> Vec<f64> {
        v.chunks(t)
            .flat_map(|c| {
                let m = c.iter().sum::<f64>() / t as f64;
                c.iter().map(move |e| e - m)
            })
            .collect()
    };
    let (yd, xd) = (demean(y), demean(x));
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        let mut m = DMatrix::zeros(n * t, 1 + 2 * t);
        for r in 0..n * t {
            let gi = ((mask >> (r / t)) & 1) as usize;
            m[(r, 0)] = xd[r];
            m[(r, 1 + gi * t + r % t)] = 1.0;
        }
        let (_, ssr) = oracle_ssr(&m, &DVector::from_column_slice(&yd));
        best = best.min(ssr / (n * t) as f64);
    }
    best
}

#[test]
fn gfe_reaches_exhaustive_global_optimum() {
    let (n, t) = (8, 3);
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let y: Vec<f64> = (0..n * t).map(|_| rng.sample(StandardNormal)).collect();
        let x: Vec<f64> = (0..n * t).map(|_| rng.sample(StandardNormal)).collect();
        let oracle = exhaustive_gfe(n, t, &y, &x);
        let fit = gfe_fit(&dense(n, t, y, x), &spec(), 2, &GfeOptions::with_seed(seed)).unwrap();
        assert!(
            (fit.objective() - oracle).abs() < 1e-10,
            "seed {seed}: gfe {} vs oracle {oracle}",
            fit.objective()
        );
    }
}

#[test]
fn one_group_demeaned_equals_fixed_effects() {
    let (n, t) = (30, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let y: Vec<f64> = (0..n * t).map(|_| rng.sample(StandardNormal)).collect();
    let x: Vec<f64> = (0..n * t).map(|_| f64::from(rng.random_bool(0.3))).collect();
    let z: Vec<f64> = (0..n * t).map(|_| rng.sample(StandardNormal)).collect();
    let p = PanelDataset::from_dense(n, t, y, x, vec!["z".into()], vec![z]).unwrap();
    let s = DesignSpec::new(["treatment", "z"]);
    // period effects are part of the one-group profile
    let mut fe_spec = s.clone();
    fe_spec.regressors.extend((2..=t).map(|p| format!("period={p}")));
    let fe = fe_fit(&p, &fe_spec).unwrap();
    let g1 = gfe_fit(&p, &s, 1, &GfeOptions::with_seed(0).restarts(3)).unwrap();
    for k in 0..2 {
        assert!((g1.fit.coefficients[k] - fe.coefficients[k]).abs() < 1e-10);
    }
}

#[test]
fn each_label_is_self_consistent() {
    let (n, t) = (40, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let y: Vec<f64> = (0..n * t).map(|r| rng.sample::<f64, _>(StandardNormal) + ((r / t) % 3) as f64 * (r % t) as f64).collect();
    let x: Vec<f64> = (0..n * t).map(|_| rng.sample(StandardNormal)).collect();
    let p = dense(n, t, y, x);
    let fit = gfe_fit(&p, &spec(), 3, &GfeOptions::with_seed(4).restarts(8)).unwrap();
    let d = build_design(&p, &spec()).unwrap();
    let prob = GfeProblem::from_design(&d, true).unwrap();
    let resid = prob.residuals(fit.fit.coefficients.as_slice());
    assert_eq!(assign_groups(&resid, &fit.profiles), fit.assignment);
    assert!(fit.group_sizes().iter().all(|&c| c > 0));
    let last: Vec<f64> = fit.profiles.iter().map(|p| p[t - 1]).collect();
    assert!(last.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn seeded_fits_are_identical() {
    let (n, t) = (25, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let y: Vec<f64> = (0..n * t).map(|_| rng.sample(StandardNormal)).collect();
    let x: Vec<f64> = (0..n * t).map(|_| rng.sample(StandardNormal)).collect();
    let p = dense(n, t, y, x);
    let o = GfeOptions::with_seed(77).restarts(6);
    let a = gfe_fit(&p, &spec(), 3, &o).unwrap();
    let b = gfe_fit(&p, &spec(), 3, &o).unwrap();
    assert_eq!(a.assignment, b.assignment);
    assert_eq!(a.fit.coefficients.as_slice(), b.fit.coefficients.as_slice());
    assert_eq!(a.objective().to_bits(), b.objective().to_bits());
}

#[test]
fn scan_is_nested_and_scored() {
    let (n, t) = (60, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let y: Vec<f64> = (0..n * t).map(|r| 0.3 * rng.sample::<f64, _>(StandardNormal) + ((r / t) % 3) as f64 * (r % t) as f64 * 0.5).collect();
    let x: Vec<f64> = (0..n * t).map(|_| rng.sample(StandardNormal)).collect();
    let p = dense(n, t, y, x);
    let scan = select_groups(&p, &spec(), 1..=4, 6, &GfeOptions::with_seed(1).restarts(5)).unwrap();
    for w in scan.records.windows(2) {
        assert!(w[1].objective <= w[0].objective + 1e-12);
    }
    for r in &scan.records {
        assert_eq!(r.bic_standard, r.objective + r.penalty_standard);
        assert_eq!(r.bic_steep, r.objective + r.penalty_steep);
    }
    assert_eq!(scan.argmin(BicVariant::Steep), 3);
    let flows = group_flow(&scan.fits).unwrap();
    assert_eq!(flows.len(), 3);
    assert!(flows.iter().all(|f| f.total() == n));
}

#[test]
fn scan_rejects_small_g_max() {
    let p = dense(4, 2, vec![0.0, 1.0, 2.0, 0.5, 1.0, 1.0, 3.0, 0.0], vec![0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
    let err = select_groups(&p, &spec(), 1..=3, 2, &GfeOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
}

#[test]
fn group_flow_rejects_different_units() {
    let a = gfe_fit(&dense(3, 2, vec![0.0, 1.0, 2.0, 0.5, 1.0, 1.0], vec![0.0, 1.0, 1.0, 0.0, 0.0, 1.0]), &spec(), 1, &GfeOptions::default()).unwrap();
    let b = gfe_fit(
        &dense(4, 2, vec![0.0, 1.0, 2.0, 0.5, 1.0, 1.0, 3.0, 0.0], vec![0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0]),
        &spec(),
        2,
        &GfeOptions::default(),
    )
    .unwrap();
    assert!(matches!(group_flow(&[a, b]), Err(Error::Precondition(_))));
}
