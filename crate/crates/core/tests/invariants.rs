use fracspec::forward::{kernel, solve_forward, Endpoint, ForwardOptions};
use fracspec::fraccalc::{caputo_l1, rl_integral, FractionalOrder, Signal};
use fracspec::harness::{distinguishability, HarnessConfig};
use fracspec::inverse::{estimate_order, OrderOptions, ResolventModel};
use fracspec::oracle::solve_l1;
use fracspec::special::gamma;
use fracspec::sturm::{eigen_solve, eigen_solve_on, Potential};

fn order(a: f64) -> FractionalOrder<f64> {
    FractionalOrder::new(a).unwrap()
}

#[test]
fn doubling_modes_stays_within_tail_estimate() {
    let p = Potential::from_fn(256, |x: f64| -(1.0 + x)).unwrap();
    let g = Signal::from_fn(1.0_f64, 200, |t| t * t).unwrap();
    let opts = ForwardOptions::default();
    let coarse = solve_forward(&eigen_solve(&p, 32, 2).unwrap(), order(0.5), &g, &opts).unwrap();
    let fine = solve_forward(&eigen_solve(&p, 64, 2).unwrap(), order(0.5), &g, &opts).unwrap();
    for e in [Endpoint::Zero, Endpoint::One] {
        let change = coarse.trace(e).axpy(-1.0, &fine.trace(e)).unwrap().max_abs() / g.max_abs();
        assert!(
            change <= coarse.tail_estimate,
            "{e:?}: {change} vs {}",
            coarse.tail_estimate
        );
    }
}

#[test]
fn caputo_round_trip_converges() {
    let errs: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|m| {
            let g = Signal::from_fn(1.0_f64, *m, |t| t * t + (2.0 * t).sin()).unwrap();
            let back = rl_integral(&caputo_l1(&g, order(0.6)), order(0.6));
            back.axpy(-1.0, &g).unwrap().max_abs() / g.max_abs()
        })
        .collect();
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 0.9, "{errs:?}");
    }
}

#[test]
fn oracle_mass_follows_flux_history() {
    // input switched off after t = 0.5; ∫u dx from both solvers must agree
    let p = Potential::constant(-1.0_f64, 100).unwrap();
    let g = Signal::from_fn(1.0_f64, 400, |t| if t <= 0.5 { (t * (0.5 - t)) * 16.0 } else { 0.0 }).unwrap();
    let u = solve_forward(
        &eigen_solve_on(&p, 100, 64, 3).unwrap(),
        order(0.5),
        &g,
        &ForwardOptions::default(),
    )
    .unwrap()
    .spatial_mean();
    let v = solve_l1(&p, order(0.5), &g, 100).unwrap().spatial_mean();
    let rel = v.relative_l2(&u).unwrap();
    assert!(rel <= 0.02, "{rel}");
}

#[test]
fn separation_grows_with_order_gap() {
    let cfg = HarnessConfig {
        cells: 100,
        modes: 32,
        refine: 2,
        ..HarnessConfig::default()
    };
    let p = Potential::constant(-1.0, 100).unwrap();
    let g = Signal::from_fn(1.0_f64, 200, |t| t * t).unwrap();
    let gaps: Vec<f64> = [0.05, 0.1, 0.2]
        .iter()
        .map(|d| {
            distinguishability(&p, 0.5 - d / 2.0, &p, 0.5 + d / 2.0, &g, Endpoint::One, &cfg)
                .unwrap()
                .gap
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] >= w[0]), "{gaps:?}");
}

#[test]
fn asymptotic_coefficient_matches_model() {
    let model = ResolventModel::new(vec![1.5_f64, 12.0, 40.0], vec![0.7, 0.2, 0.05]).unwrap();
    for alpha in [0.3, 0.5, 0.7] {
        let times: Vec<f64> = (0..80).map(|i| 10f64.powf(2.0 + 10.0 * i as f64 / 79.0)).collect();
        let k: Vec<f64> = times.iter().map(|t| model.kernel_at(alpha, *t).unwrap()).collect();
        let limit: f64 = model.weights.iter().sum();
        let est = estimate_order(&times, &k, Some(limit), &OrderOptions::default()).unwrap();
        let expected: f64 = model
            .lambdas
            .iter()
            .zip(&model.weights)
            .map(|(l, w)| w / l)
            .sum::<f64>()
            / gamma(1.0 - alpha);
        assert!(
            (est.coefficient / expected - 1.0).abs() <= 0.1,
            "alpha {alpha}: {} vs {expected}",
            est.coefficient
        );
    }
}

#[test]
fn kernel_is_monotone_at_the_input_end() {
    let s = eigen_solve(&Potential::constant(-2.0_f64, 128).unwrap(), 32, 2).unwrap();
    let times: Vec<f64> = (0..60).map(|i| 10f64.powf(-4.0 + 0.15 * i as f64)).collect();
    let k = kernel(&s, order(0.4), &times, &[1.0], &ForwardOptions::default()).unwrap();
    assert!(k.values[0].windows(2).all(|w| w[1] >= w[0]));
    assert!(k.values[0].iter().all(|v| *v <= k.limit[0] + 1e-12));
}
