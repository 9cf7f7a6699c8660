use fuzzy_bns::fuzzy::FuzzyEnsemble;
use fuzzy_bns::{RiskAttitude, Tfn};
use proptest::prelude::*;

fn tfn() -> impl Strategy<Value = Tfn> {
    (-100.0..100.0f64, 0.0..50.0f64, 0.0..50.0f64).prop_map(|(m, ls, rs)| Tfn::new(m - ls, m, m + rs).unwrap())
}

fn ordered(a: &Tfn) -> bool {
    a.l() <= a.m() && a.m() <= a.u()
}

fn eta(x: f64) -> RiskAttitude {
    RiskAttitude::new(x).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn operations_stay_ordered(a in tfn(), b in tfn(), g in -10.0..10.0f64) {
        prop_assert!(ordered(&(a + b)));
        prop_assert!(ordered(&(a - b)));
        prop_assert!(ordered(&a.scale(g)));
        if a.l() > 0.0 || a.u() < 0.0 {
            if g != 0.0 {
                prop_assert!(ordered(&a.reciprocal_scale(g).unwrap()));
            }
        } else {
            prop_assert!(a.reciprocal_scale(1.0).is_err());
        }
    }

    #[test]
    fn crisp_inputs_follow_real_arithmetic(x in -100.0..100.0f64, y in -100.0..100.0f64, g in -10.0..10.0f64, e in 0.0..=1.0f64) {
        let (a, b) = (Tfn::crisp(x), Tfn::crisp(y));
        prop_assert_eq!(a + b, Tfn::crisp(x + y));
        prop_assert_eq!(a - b, Tfn::crisp(x - y));
        prop_assert_eq!(a.sub_componentwise(&b).unwrap(), Tfn::crisp(x - y));
        prop_assert_eq!(a.scale(g), Tfn::crisp(g * x));
        if x != 0.0 && g != 0.0 {
            prop_assert_eq!(a.reciprocal_scale(g).unwrap(), Tfn::crisp(g / x));
        }
        prop_assert!((a.expectation(eta(e)) - x).abs() <= 1e-15 * x.abs().max(1.0));
    }

    #[test]
    fn cuts_shrink_with_alpha(a in tfn(), p in 0.0..=1.0f64, q in 0.0..=1.0f64) {
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let outer = a.alpha_cut(lo).unwrap();
        let inner = a.alpha_cut(hi).unwrap();
        prop_assert!(inner.is_subset_of(&outer));
        prop_assert!(inner.contains(a.m()));
    }

    #[test]
    fn expectation_is_affine_in_eta(a in tfn(), e in 0.0..=1.0f64) {
        let e0 = a.expectation(eta(0.0));
        let slope = (a.u() - a.l()) / 2.0;
        let tol = 1e-12 * (a.l().abs() + a.m().abs() + a.u().abs()).max(1.0);
        prop_assert!((a.expectation(eta(e)) - (e0 + e * slope)).abs() <= tol);
        prop_assert!((a.expectation(RiskAttitude::NEUTRAL) - (a.l() + 2.0 * a.m() + a.u()) / 4.0).abs() <= tol);
    }

    #[test]
    fn membership_and_cuts_agree(a in tfn()) {
        let scale = a.u().abs().max(a.l().abs()).max(1.0);
        for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let cut = a.alpha_cut(alpha).unwrap();
            for i in 0..=40 {
                let x = a.l() + (a.u() - a.l()) * i as f64 / 40.0;
                if (x - cut.lo).abs() < 1e-9 * scale || (x - cut.hi).abs() < 1e-9 * scale {
                    continue;
                }
                prop_assert_eq!(a.membership(x) >= alpha, cut.contains(x), "alpha {} x {}", alpha, x);
            }
        }
    }

    #[test]
    fn crisp_ensemble_variance_is_sample_variance(xs in prop::collection::vec(-10.0..10.0f64, 2..60)) {
        let ens = FuzzyEnsemble::new(xs.iter().map(|&x| Tfn::crisp(x)).collect());
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let classical = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        prop_assert!((ens.variance().unwrap() - classical).abs() <= 1e-12 * classical.max(1.0));
    }

    #[test]
    fn doubling_quadruples_variance(xs in prop::collection::vec(tfn(), 2..40)) {
        let ens = FuzzyEnsemble::new(xs.clone());
        let doubled = FuzzyEnsemble::new(xs.iter().map(|&a| a + a).collect());
        let v = ens.variance().unwrap();
        prop_assert!((doubled.variance().unwrap() - 4.0 * v).abs() <= 1e-9 * v.max(1.0));
    }
}
