use std::sync::OnceLock;

use fracspec::forward::{solve_forward, Endpoint, ForwardOptions};
use fracspec::fraccalc::{rl_integral, FractionalOrder, Signal};
use fracspec::harness::{distinguishability, HarnessConfig};
use fracspec::mlf::mittag_leffler;
use fracspec::special::gamma;
use fracspec::sturm::{eigen_solve, Potential, SpectralData};
use proptest::prelude::*;

fn spectrum() -> &'static SpectralData<f64> {
    static S: OnceLock<SpectralData<f64>> = OnceLock::new();
    S.get_or_init(|| eigen_solve(&Potential::from_fn(128, |x: f64| -(1.0 + x * x)).unwrap(), 24, 2).unwrap())
}

fn order(a: f64) -> FractionalOrder<f64> {
    FractionalOrder::new(a).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn forward_is_linear(alpha in 0.1f64..0.9, a in -2.0f64..2.0, b in -2.0f64..2.0, c in -3.0f64..3.0) {
        let g1 = Signal::from_fn(1.0_f64, 80, |t| a * t + b * t * t).unwrap();
        let g2 = Signal::from_fn(1.0_f64, 80, |t| (3.0 * t).sin()).unwrap();
        let sum = g1.axpy(c, &g2).unwrap();
        let opts = ForwardOptions::default();
        let s = spectrum();
        let u1 = solve_forward(s, order(alpha), &g1, &opts).unwrap();
        let u2 = solve_forward(s, order(alpha), &g2, &opts).unwrap();
        let us = solve_forward(s, order(alpha), &sum, &opts).unwrap();
        let scale = u1.max_abs() + c.abs() * u2.max_abs() + 1e-300;
        for j in (0..=s.cells()).step_by(16) {
            for k in 0..=80 {
                let lin = u1.value(j, k) + c * u2.value(j, k);
                prop_assert!((us.value(j, k) - lin).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn rl_integral_preserves_sign(alpha in 0.05f64..1.0, seed in prop::collection::vec(0.0f64..5.0, 60)) {
        let g = Signal::new(seed, 0.02).unwrap();
        let out = rl_integral(&g, order(alpha.min(0.999)));
        prop_assert!(out.values().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn rl_semigroup(a in 0.05f64..0.5, b in 0.05f64..0.5, w in 0.5f64..6.0, shift in -1.0f64..1.0) {
        let g = Signal::from_fn(1.0_f64, 1000, |t| (w * t).sin() + shift * t * t).unwrap();
        let lhs = rl_integral(&rl_integral(&g, order(b)), order(a));
        let rhs = rl_integral(&g, FractionalOrder::with_classical(a + b).unwrap());
        let err = lhs.axpy(-1.0, &rhs).unwrap().max_abs();
        prop_assert!(err <= 1e-3 * g.max_abs(), "err {}", err);
    }

    #[test]
    fn mittag_leffler_monotone_and_bounded(alpha in 0.05f64..0.99, lambda in 0.01f64..1e4) {
        let mut prev = f64::INFINITY;
        for i in 0..60 {
            let t = 10f64.powf(-4.0 + 0.15 * i as f64);
            let e = mittag_leffler(alpha, 1.0, -lambda * t.powf(alpha)).unwrap();
            prop_assert!(e <= prev + 1e-13, "increase at t = {}", t);
            prop_assert!(e.abs() <= 1.0 + 1e-9);
            prev = e;
        }
    }

    #[test]
    fn mittag_leffler_long_time(alpha in 0.1f64..0.9, y in 1e3f64..1e8) {
        let e = mittag_leffler(alpha, 1.0, -y).unwrap();
        prop_assert!((e * gamma(1.0 - alpha) * y - 1.0).abs() <= 0.05);
    }

    #[test]
    fn derivative_identity(alpha in 0.1f64..0.95, lambda in 0.5f64..200.0, s in 0.01f64..10.0) {
        let e = |s: f64| mittag_leffler(alpha, 1.0, -lambda * s.powf(alpha)).unwrap();
        let h = 1e-4 * s;
        let fd = -(e(s + h) - e(s - h)) / (2.0 * h);
        let exact = lambda * s.powf(alpha - 1.0) * mittag_leffler(alpha, alpha, -lambda * s.powf(alpha)).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-5 * exact.abs() + 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn eigenpairs_orthogonal_and_weyl(a in 0.1f64..3.0, b in 0.0f64..3.0, c in 0.0f64..2.0) {
        let p = Potential::from_fn(160, |x: f64| -(a + b * x + c * (5.0 * x).sin().abs())).unwrap();
        let s = eigen_solve(&p, 12, 2).unwrap();
        prop_assert!(s.diagnostics.orthogonality <= 1e-8);
        prop_assert!(s.diagnostics.min_raw_boundary >= 1e-3);
        prop_assert!(s.lambdas[0] > 0.0);
        prop_assert!(s.lambdas.windows(2).all(|w| w[1] > w[0]));
        let mean = -p.mean();
        let pi = std::f64::consts::PI;
        for (n, l) in s.lambdas.iter().enumerate() {
            let dev = (l - (n as f64 * pi).powi(2) - mean).abs();
            prop_assert!(dev <= a + b + c, "mode {} deviates by {}", n + 1, dev);
        }
    }

    #[test]
    fn distinguishability_is_symmetric(alpha in 0.2f64..0.8, beta in 0.2f64..0.8, pv in 0.3f64..2.0, qv in 0.3f64..2.0) {
        let cfg = HarnessConfig { cells: 40, modes: 10, refine: 2, ..HarnessConfig::default() };
        let g = Signal::from_fn(1.0_f64, 40, |t| t * t).unwrap();
        let p = Potential::constant(-pv, 40).unwrap();
        let q = Potential::constant(-qv, 40).unwrap();
        for e in [Endpoint::Zero, Endpoint::One] {
            let ab = distinguishability(&p, alpha, &q, beta, &g, e, &cfg).unwrap();
            let ba = distinguishability(&q, beta, &p, alpha, &g, e, &cfg).unwrap();
            prop_assert!((ab.gap - ba.gap).abs() <= 1e-12);
            prop_assert_eq!(ab.verdict, ba.verdict);
        }
    }
}
