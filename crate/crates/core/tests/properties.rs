use gfe_core::estimators::{gfe_fit, select_groups, BicVariant, GfeOptions};
use gfe_core::panel::{
    balance_panel, clustered_covariance, make_absorbing, within_transform, DesignSpec, PanelDataset, PanelRow,
};
use gfe_core::smm::{nelder_mead, NelderMeadConfig};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn ragged() -> impl Strategy<Value = PanelDataset> {
    prop::collection::btree_map((1i64..6, 1i64..6), (prop::bool::ANY, -3.0f64..3.0, prop::bool::ANY), 1..25).prop_map(
        |cells| {
            let rows = cells
                .into_iter()
                .map(|((unit, period), (a, x, missing))| PanelRow {
                    unit,
                    period,
                    outcome: if missing { f64::NAN } else { x },
                    treatment: f64::from(u8::from(a)),
                    covariates: vec![if missing { x } else { f64::NAN }],
                })
                .collect();
            PanelDataset::from_rows("m", "a", vec!["z".into()], rows).unwrap()
        },
    )
}

fn dense(n: usize, t: usize, y: Vec<f64>, x: Vec<f64>) -> PanelDataset {
    PanelDataset::from_dense(n, t, y, x, vec![], vec![]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn balancing_is_idempotent(p in ragged()) {
        let once = balance_panel(&p).unwrap();
        prop_assert!(once.is_balanced());
        prop_assert_eq!(&balance_panel(&once).unwrap(), &once);
    }

    #[test]
    fn absorbing_is_idempotent_and_monotone(s in prop::collection::vec(prop::sample::select(vec![0.0, 1.0]), 1..20)) {
        let a = make_absorbing(&s).unwrap();
        prop_assert!(a.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(a.iter().zip(&s).all(|(o, i)| o >= i));
        prop_assert_eq!(make_absorbing(&a).unwrap(), a);
    }

    #[test]
    fn within_annihilates_unit_constants(n in 2usize..6, t in 2usize..6, levels in prop::collection::vec(-50.0f64..50.0, 6)) {
        let col: Vec<f64> = (0..n * t).map(|r| levels[r / t]).collect();
        let p = PanelDataset::from_dense(n, t, vec![0.0; n * t], vec![0.0; n * t], vec!["c".into()], vec![col]).unwrap();
        let w = within_transform(&p, &["c"]).unwrap();
        prop_assert!(w.covariate("c").unwrap().iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn covariance_ignores_cluster_order_and_names(
        data in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, 0usize..4), 12..30),
        shift in 1usize..50,
    ) {
        let n = data.len();
        let x = DMatrix::from_fn(n, 2, |r, c| if c == 0 { 1.0 } else { data[r].0 });
        let u = DVector::from_iterator(n, data.iter().map(|d| d.1));
        let ids: Vec<usize> = data.iter().map(|d| d.2).collect();
        prop_assume!(ids.iter().collect::<std::collections::BTreeSet<_>>().len() >= 2);
        let names = vec!["one".to_string(), "x".to_string()];
        let base = clustered_covariance(&u, &x, &ids, &names);
        prop_assume!(base.is_ok());
        let base = base.unwrap().rows();
        // sort rows by cluster and relabel clusters
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&r| (ids[r], std::cmp::Reverse(r)));
        let xp = DMatrix::from_fn(n, 2, |r, c| x[(order[r], c)]);
        let up = DVector::from_iterator(n, order.iter().map(|&r| u[r]));
        let idp: Vec<usize> = order.iter().map(|&r| ids[r] * 7 + shift).collect();
        let moved = clustered_covariance(&up, &xp, &idp, &names).unwrap().rows();
        for (a, b) in base.iter().flatten().zip(moved.iter().flatten()) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gfe_is_invariant_to_unit_order(
        n in 4usize..8,
        cells in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 24),
        seed in 0u64..1000,
    ) {
        let t = 3;
        let y: Vec<f64> = cells.iter().take(n * t).map(|c| c.0).collect();
        let x: Vec<f64> = cells.iter().take(n * t).map(|c| c.1).collect();
        let rev = |v: &[f64]| -> Vec<f64> { v.chunks(t).rev().flatten().copied().collect() };
        let opts = GfeOptions::with_seed(seed).restarts(60);
        let spec = DesignSpec::new(["treatment"]);
        let a = gfe_fit(&dense(n, t, y.clone(), x.clone()), &spec, 2, &opts).unwrap();
        let b = gfe_fit(&dense(n, t, rev(&y), rev(&x)), &spec, 2, &opts).unwrap();
        prop_assert!((a.objective() - b.objective()).abs() <= 1e-10);
        prop_assert!((a.fit.coefficients[0] - b.fit.coefficients[0]).abs() <= 1e-8);
        prop_assert!(a.restarts.iter().chain(&b.restarts).all(|r| r.monotone));
    }

    #[test]
    fn bic_argmin_is_scale_invariant(
        cells in prop::collection::vec((-1.0f64..1.0, 0.0f64..1.0, 0usize..3), 60),
        c in 0.1f64..20.0,
        seed in 0u64..1000,
    ) {
        let (n, t) = (12, 5);
        let y: Vec<f64> = (0..n * t).map(|r| cells[r].0 + cells[r / t].2 as f64 * (r % t) as f64 * 0.5).collect();
        let x: Vec<f64> = (0..n * t).map(|r| f64::from(u8::from(cells[r].1 > 0.6))).collect();
        let spec = DesignSpec::new(["treatment"]);
        let opts = GfeOptions::with_seed(seed).restarts(20);
        let scaled: Vec<f64> = y.iter().map(|v| v * c).collect();
        let a = select_groups(&dense(n, t, y, x.clone()), &spec, 1..=4, 4, &opts).unwrap();
        let b = select_groups(&dense(n, t, scaled, x), &spec, 1..=4, 4, &opts).unwrap();
        for v in [BicVariant::Standard, BicVariant::Steep] {
            prop_assert_eq!(a.argmin(v), b.argmin(v));
        }
        for (ra, rb) in a.records.iter().zip(&b.records) {
            prop_assert!((rb.objective - c * c * ra.objective).abs() <= 1e-9 * (1.0 + rb.objective));
        }
    }

    #[test]
    fn nelder_mead_never_ends_above_its_start(x0 in -3.0f64..3.0, y0 in -3.0f64..3.0) {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let start = [x0, y0];
        let r = nelder_mead(f, &start, &[-5.0, -5.0], &[5.0, 5.0], &NelderMeadConfig::default()).unwrap();
        prop_assert!(r.best_value <= f(&start));
        prop_assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }
}
