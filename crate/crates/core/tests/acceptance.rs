//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use fracspec::forward::{kernel, solve_forward, verify_duhamel, Endpoint, ForwardOptions, TailMode};
use fracspec::fraccalc::{FractionalOrder, Signal};
use fracspec::harness::{distinguishability, unique_continuation, HarnessConfig, HarnessVerdict, Regularization};
use fracspec::inverse::{
    estimate_order, extract_spectral, recover_potential, residue_at, support_infimum, titchmarsh_check, Basis,
    ExtractOptions, OrderOptions, PotentialOptions, SpectralTarget, Verdict,
};
use fracspec::mlf::{mittag_leffler, ml_kernel_integral, ml_laplace};
use fracspec::oracle::solve_l1;
use fracspec::quad::integrate;
use fracspec::sturm::{eigen_solve, eigen_solve_on, Potential};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn order(a: f64) -> FractionalOrder<f64> {
    FractionalOrder::new(a).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sloped_potential(cells: usize) -> Potential<f64> {
    Potential::from_fn(cells, |x: f64| -(1.0 + x)).unwrap()
}

fn mlf_exactness() -> Check {
    let mut worst_exp = 0.0f64;
    for x in [0.1, 1.0, 5.0, 20.0, 50.0] {
        worst_exp = worst_exp.max(rel(mittag_leffler(1.0, 1.0, -x).unwrap(), (-x).exp()));
    }
    // e^{x²} erfc(x) from a 40-digit evaluation
    let erfc = [
        (0.5, 0.615_690_344_192_925_9),
        (1.0, 0.427_583_576_155_807),
        (2.0, 0.255_395_676_310_505_75),
        (3.0, 0.179_001_151_181_389_96),
    ];
    let mut worst_half = 0.0f64;
    for (x, v) in erfc {
        worst_half = worst_half.max(rel(mittag_leffler(0.5, 1.0, -x).unwrap(), v));
    }
    verdict(
        worst_exp <= 1e-12 && worst_half <= 1e-8,
        format!("E_(1,1) rel err {worst_exp:.2e}, E_(1/2,1) rel err {worst_half:.2e}"),
    )
}

const ALPHAS: [f64; 3] = [0.3, 0.5, 0.8];
const LAMBDAS: [f64; 3] = [1.0, 10.0, 100.0];

fn derivative_identity() -> Check {
    let mut worst = 0.0f64;
    for a in ALPHAS {
        for l in LAMBDAS {
            for s in [0.01, 0.1, 0.5, 1.0, 3.0, 10.0] {
                // s = t - ξ, so d/dξ = -d/ds
                let e = |s: f64| mittag_leffler(a, 1.0, -l * s.powf(a)).unwrap();
                let h = 1e-4 * s;
                let d_xi = -(e(s + h) - e(s - h)) / (2.0 * h);
                let exact = l * s.powf(a - 1.0) * mittag_leffler(a, a, -l * s.powf(a)).unwrap();
                worst = worst.max(rel(d_xi, exact));
            }
        }
    }
    verdict(
        worst <= 1e-5,
        format!("max rel err {worst:.2e} over 9 (alpha, lambda) pairs"),
    )
}

fn integral_identity() -> Check {
    let mut worst = 0.0f64;
    for a in ALPHAS {
        for l in LAMBDAS {
            for t in [0.1_f64, 1.0, 10.0] {
                // s = u^{1/a} removes the s^{a-1} endpoint singularity
                let f = |u: f64| mittag_leffler(a, a, -l * u).unwrap() / a;
                let q = integrate(f, &[0.0, t.powf(a)], 1e-15, 1e-13, 2000).value;
                worst = worst.max(rel(ml_kernel_integral(a, l, t).unwrap(), q));
            }
        }
    }
    verdict(worst <= 1e-7, format!("max rel err {worst:.2e} at t in {{0.1, 1, 10}}"))
}

fn laplace_pair() -> Check {
    let (a, l, z) = (0.4, 2.0, 3.0);
    let p = 1.0 / a;
    // t = u^{1/a}; the integrand beyond t = 200 is below e^{-600}
    let f = |u: f64| {
        let t = u.powf(p);
        (-z * t).exp() * mittag_leffler(a, 1.0, -l * t.powf(a)).unwrap() * p * u.powf(p - 1.0)
    };
    let top = 200f64.powf(a);
    let pts: Vec<f64> = (0..=40).map(|i| top * i as f64 / 40.0).collect();
    let q = integrate(f, &pts, 1e-14, 1e-12, 4000).value;
    let exact = ml_laplace(a, l, z).unwrap();
    let e = rel(q, exact);
    verdict(
        e <= 1e-4,
        format!("numeric {q:.10} vs closed form {exact:.10}, rel err {e:.2e}"),
    )
}

fn eigensolver() -> Check {
    let s = eigen_solve(&Potential::constant(-1.0, 200).unwrap(), 10, 3).map_err(|e| e.to_string())?;
    let mut lam = 0.0f64;
    let mut rho = 0.0f64;
    for n in 0..10 {
        let exact = (n as f64 * PI).powi(2) + 1.0;
        lam = lam.max(rel(s.lambdas[n], exact));
        let r = if n == 0 { 1.0 } else { 0.5 };
        rho = rho.max((s.norming[n] - r).abs());
    }
    let orth = s.diagnostics.orthogonality;
    verdict(
        lam <= 1e-6 && rho <= 1e-6 && orth <= 1e-8,
        format!("lambda rel err {lam:.2e}, rho err {rho:.2e}, orthogonality {orth:.2e}"),
    )
}

fn cross_mismatch(cells: usize, steps: usize, modes: usize) -> Result<[f64; 2], String> {
    let p = sloped_potential(cells);
    let g = Signal::from_fn(1.0_f64, steps, |t| t * t).unwrap();
    let spec = eigen_solve_on(&p, cells, modes, 3).map_err(|e| e.to_string())?;
    let u = solve_forward(&spec, order(0.5), &g, &ForwardOptions::default()).map_err(|e| e.to_string())?;
    let v = solve_l1(&p, order(0.5), &g, cells).map_err(|e| e.to_string())?;
    let mut out = [0.0; 2];
    for (i, e) in [Endpoint::Zero, Endpoint::One].into_iter().enumerate() {
        out[i] = u.trace(e).relative_l2(&v.trace(e)).map_err(|e| e.to_string())?;
    }
    Ok(out)
}

fn forward_cross_validation() -> Check {
    let base = cross_mismatch(200, 400, 64)?;
    let fine = cross_mismatch(400, 800, 128)?;
    let ok = (0..2).all(|i| base[i] <= 0.02 && fine[i] <= 0.5 * base[i]);
    verdict(
        ok,
        format!(
            "mismatch x=0: {:.2e} -> {:.2e}, x=1: {:.2e} -> {:.2e}",
            base[0], fine[0], base[1], fine[1]
        ),
    )
}

fn duhamel() -> Check {
    let p = sloped_potential(200);
    let g = Signal::from_fn(1.0_f64, 400, |t| t * t).unwrap();
    let opts = ForwardOptions::default();
    let spec = eigen_solve_on(&p, 200, 64, 3).map_err(|e| e.to_string())?;
    let u = solve_forward(&spec, order(0.5), &g, &opts).map_err(|e| e.to_string())?;
    let k = kernel(&spec, order(0.5), &g.times(), &[0.0, 1.0], &opts).map_err(|e| e.to_string())?;
    let r = verify_duhamel(&u, &k, &g).map_err(|e| e.to_string())?;
    verdict(
        r.residual <= 1e-3,
        format!(
            "residual x=0: {:.2e}, x=1: {:.2e}",
            r.per_endpoint[0], r.per_endpoint[1]
        ),
    )
}

fn kernel_limit() -> Check {
    let spec = eigen_solve_on(&Potential::constant(-1.0, 200).unwrap(), 200, 64, 3).map_err(|e| e.to_string())?;
    let k = kernel(&spec, order(0.5), &[1e6], &[0.0, 1.0], &ForwardOptions::default()).map_err(|e| e.to_string())?;
    let e0 = rel(k.values[0][0], 1.0 / 1f64.sinh());
    let e1 = rel(k.values[1][0], 1f64.cosh() / 1f64.sinh());
    verdict(
        e0 <= 1e-3 && e1 <= 1e-3,
        format!(
            "K(1,1e6) = {:.6} (rel err {e1:.2e}), K(0,1e6) = {:.6} (rel err {e0:.2e})",
            k.values[1][0], k.values[0][0]
        ),
    )
}

fn order_recovery() -> Check {
    let spec = eigen_solve_on(&Potential::constant(-1.0, 200).unwrap(), 200, 64, 3).map_err(|e| e.to_string())?;
    let times = logspace(2.0, 12.0, 100);
    let mut parts = Vec::new();
    let mut ok = true;
    for a in [0.3, 0.4, 0.5, 0.7] {
        let k = kernel(&spec, order(a), &times, &[1.0], &ForwardOptions::default()).map_err(|e| e.to_string())?;
        let est = estimate_order(&times, &k.values[0], Some(k.limit[0]), &OrderOptions::default())
            .map_err(|e| e.to_string())?;
        ok &= (est.alpha - a).abs() <= 0.01;
        parts.push(format!("{a} -> {:.5}", est.alpha));
    }
    verdict(ok, parts.join(", "))
}

fn spectral_extraction() -> Check {
    let spec = eigen_solve_on(&Potential::constant(-1.0, 200).unwrap(), 200, 64, 3)
        .map_err(|e| e.to_string())?
        .truncated(2);
    let opts = ForwardOptions {
        tail: TailMode::Truncate,
        ..ForwardOptions::default()
    };
    let times = logspace(-4.0, 4.0, 160);
    let k = kernel(&spec, order(0.5), &times, &[1.0], &opts).map_err(|e| e.to_string())?;
    let fit = extract_spectral(&times, &k.values[0], 0.5, 2, &ExtractOptions::default()).map_err(|e| e.to_string())?;
    let m = fit.model.ok_or("degenerate fit")?;
    let l1 = rel(m.lambdas[0], 1.0);
    let l2 = rel(m.lambdas[1], PI * PI + 1.0);
    let w1 = rel(m.weights[0], 1.0);
    let mut res = 0.0f64;
    let gap = m.lambdas[1] - m.lambdas[0];
    for i in 0..2 {
        let radius = (0.25 * gap).min(0.5 * m.lambdas[i]);
        let r = residue_at(&m, i + 1, radius).map_err(|e| e.to_string())?;
        res = res.max((r.re - m.weights[i]).abs());
    }
    verdict(
        l1 <= 0.01 && l2 <= 0.01 && w1 <= 0.02 && res <= 1e-6,
        format!(
            "lambda = ({:.6}, {:.6}), w_1 = {:.6}, residue mismatch {res:.2e}",
            m.lambdas[0], m.lambdas[1], m.weights[0]
        ),
    )
}

fn potential_recovery() -> Check {
    let p = Potential::piecewise(&[-0.5, -1.5], 200).unwrap();
    let target = SpectralTarget::from_spectral(&eigen_solve_on(&p, 200, 5, 3).map_err(|e| e.to_string())?);
    let opts: PotentialOptions<f64> = PotentialOptions {
        cells: 200,
        refine: 3,
        ..PotentialOptions::default()
    };
    let fit = recover_potential(&target, Basis::PiecewiseConstant { pieces: 2 }, &opts).map_err(|e| e.to_string())?;
    let c = &fit.coefficients;
    let close = (c[0] + 0.5).abs() <= 0.05 && (c[1] + 1.5).abs() <= 0.05;
    let monotone = fit.history.windows(2).all(|w| w[1] <= w[0]);
    verdict(
        close && monotone,
        format!(
            "pieces ({:.6}, {:.6}), {} accepted steps, monotone {monotone}",
            c[0],
            c[1],
            fit.history.len()
        ),
    )
}

fn distinguishability_harness() -> Check {
    let cfg = HarnessConfig::default();
    let g = Signal::from_fn(1.0_f64, 400, |t| t * t).unwrap();
    let p = Potential::constant(-1.0, 200).unwrap();
    let run = |p: &Potential<f64>, a: f64, q: &Potential<f64>, b: f64| {
        distinguishability(p, a, q, b, &g, Endpoint::One, &cfg).map_err(|e| e.to_string())
    };
    let same = run(&p, 0.5, &p, 0.5)?;
    let orders = run(&p, 0.4, &p, 0.6)?;
    let pa = Potential::constant(-0.5, 200).unwrap();
    let pb = Potential::constant(-1.5, 200).unwrap();
    let pots = run(&pa, 0.5, &pb, 0.5)?;
    let consistent = |r: &fracspec::harness::ExperimentReport<f64>| r.endpoints[0].verdict == r.endpoints[1].verdict;
    let apart = |r: &fracspec::harness::ExperimentReport<f64>| {
        r.endpoints
            .iter()
            .all(|e| e.gap > 5.0 * e.tolerance && e.verdict == HarnessVerdict::Distinct)
    };
    let ok = same.endpoints.iter().all(|e| e.gap <= e.tolerance)
        && apart(&orders)
        && apart(&pots)
        && consistent(&same)
        && consistent(&orders)
        && consistent(&pots);
    verdict(
        ok,
        format!(
            "identical gap {:.1e}; orders gap/tol {:.0}x; potentials gap/tol {:.0}x",
            same.gap,
            orders.gap / orders.tolerance,
            pots.gap / pots.tolerance
        ),
    )
}

fn continuation_harness() -> Check {
    let cfg = HarnessConfig::default();
    let p = sloped_potential(200);
    let zero = Signal::zeros(400, 1.0 / 400.0).unwrap();
    let z = unique_continuation(&p, 0.5, &zero, Regularization::LCurve, &cfg).map_err(|e| e.to_string())?;
    let g = Signal::from_fn(1.0_f64, 400, |t| t * t).unwrap();
    let r = unique_continuation(&p, 0.5, &g, Regularization::LCurve, &cfg).map_err(|e| e.to_string())?;
    let dec = r.deconvolution.as_ref().ok_or("no deconvolution probe")?;
    verdict(
        z.field_max <= 1e-14 && r.trace_norms[0] > 0.0 && dec.relative_error <= 0.05,
        format!(
            "zero input field max {:.1e}; ratio {:.4}; deconvolution error {:.2e}",
            z.field_max, r.ratio, dec.relative_error
        ),
    )
}

fn titchmarsh_split() -> Check {
    let steps = 200;
    let dt = 1.0 / steps as f64;
    let k = Signal::from_fn(1.0_f64, steps, |t| (t - 0.3).max(0.0)).unwrap();
    let g = Signal::from_fn(1.0_f64, steps, |t| (t - 0.8).max(0.0)).unwrap();
    let r = titchmarsh_check(&k, &g, 1e-10).map_err(|e| e.to_string())?;
    let t1 = support_infimum(&k, 1e-6);
    let t2 = support_infimum(&g, 1e-6);
    let bump = Signal::from_fn(1.0_f64, steps, |t| (-(t - 0.2).powi(2) / 0.002).exp()).unwrap();
    let nv = titchmarsh_check(&bump, &bump, 1e-10).map_err(|e| e.to_string())?;
    verdict(
        r.verdict == Verdict::Vanishing && t1 + t2 >= 1.0 - 2.0 * dt && nv.verdict == Verdict::NonVanishing,
        format!(
            "t1 = {t1:.3}, t2 = {t2:.3}, non-vanishing case flagged {}",
            nv.verdict == Verdict::NonVanishing
        ),
    )
}

const SOLVE_CONFIG: &str = r#"{
  "problem": {
    "potential": { "kind": "polynomial", "coefficients": [-1.0, -1.0] },
    "alpha": 0.5,
    "g": { "kind": "power", "exponent": 2.0 },
    "T": 1.0, "J": 200, "M": 400, "N": 64
  },
  "seed": 0
}"#;

fn cli_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("solve.json");
    std::fs::write(&cfg, SOLVE_CONFIG).map_err(|e| e.to_string())?;
    let mut bodies = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_fracspec"))
            .args(["solve", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        let mut files = Vec::new();
        for name in ["trace_x0.csv", "trace_x1.csv", "field.csv", "spectra.csv"] {
            files.push(std::fs::read(out.join(name)).map_err(|e| e.to_string())?);
        }
        bodies.push(files);
    }
    let bytes: usize = bodies[0].iter().map(Vec::len).sum();
    verdict(
        bodies[0] == bodies[1],
        format!("{bytes} CSV bytes compared across two runs"),
    )
}

fn main() {
    let criteria: [Criterion; 15] = [
        ("Mittag-Leffler exactness", mlf_exactness),
        ("derivative identity", derivative_identity),
        ("integral identity", integral_identity),
        ("Laplace pair", laplace_pair),
        ("eigensolver", eigensolver),
        ("forward cross-validation", forward_cross_validation),
        ("Duhamel identity", duhamel),
        ("kernel limit", kernel_limit),
        ("order recovery", order_recovery),
        ("spectral extraction", spectral_extraction),
        ("potential recovery", potential_recovery),
        ("distinguishability harness", distinguishability_harness),
        ("unique continuation harness", continuation_harness),
        ("support split", titchmarsh_split),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{tag} criterion {:>2} {name}: {detail} [{:.2}s]",
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
