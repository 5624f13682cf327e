//! Scripted experiments: distinguishability of `(p, α)` pairs from one
//! boundary trace, and unique continuation from Cauchy data at x = 0.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forward::{kernel, solve_forward, Endpoint, ForwardOptions, SolutionField};
use crate::fraccalc::{halpha_check, FractionalOrder, Signal};
use crate::inverse::{estimate_order, titchmarsh_check, OrderOptions, TitchmarshReport};
use crate::linalg::Dense;
use crate::oracle::solve_l1;
use crate::quad;
use crate::scalar::Real;
use crate::sturm::{eigen_solve_on, Potential, SpectralData};

/// Discretisation shared by both problems of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct HarnessConfig<T> {
    /// Space cells of the oracle and of the reported field.
    pub cells: usize,
    pub modes: usize,
    pub refine: usize,
    /// Gap factor above the tolerance budget that counts as distinct.
    pub distinct_factor: T,
    /// Separations below which two inputs are declared the same.
    pub alpha_separation: T,
    pub potential_separation: T,
    pub forward: ForwardOptions<T>,
}

impl<T: Real> Default for HarnessConfig<T> {
    fn default() -> Self {
        Self {
            cells: 200,
            modes: 64,
            refine: 3,
            distinct_factor: T::lit(5.0),
            alpha_separation: T::lit(1e-6),
            potential_separation: T::lit(1e-6),
            forward: ForwardOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HarnessVerdict {
    Distinct,
    IndistinctAtTolerance,
    /// The gap lies between the tolerance and the distinct threshold.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MatchingReport<T> {
    pub lambda_differences: Vec<T>,
    pub norming_differences: Vec<T>,
    pub max_lambda_difference: T,
    pub max_norming_difference: T,
}

/// Per-endpoint measurements of a distinguishability run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EndpointGap<T> {
    pub endpoint: Endpoint,
    /// Relative L² distance between the two spectral traces.
    pub gap: T,
    /// Spectral-vs-oracle mismatch of each problem, summed.
    pub tolerance: T,
    pub verdict: HarnessVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ExperimentReport<T> {
    pub inputs_digest: String,
    pub endpoint: Endpoint,
    pub gap: T,
    pub tolerance: T,
    pub verdict: HarnessVerdict,
    /// Whether the verdict matches what the declared separations predict.
    pub expectation_met: bool,
    pub endpoints: [EndpointGap<T>; 2],
    /// Orders recovered from each problem's kernel (`None` if the fit failed).
    pub order_estimates: [Option<T>; 2],
    pub spectral: MatchingReport<T>,
    pub runtime_seconds: f64,
}

#[derive(Serialize)]
struct Inputs<'a, T: Real> {
    p: &'a [T],
    alpha: T,
    q: &'a [T],
    beta: T,
    g: &'a [T],
    dt: T,
    endpoint: Endpoint,
    config: &'a HarnessConfig<T>,
}

pub(crate) fn digest<S: Serialize>(value: &S) -> String {
    let bytes = serde_json::to_vec(value).expect("inputs serialise");
    hex::encode(Sha256::digest(bytes))
}

struct Run<T> {
    spec: SpectralData<T>,
    field: SolutionField<T>,
    mismatch: [T; 2],
}

fn run_problem<T: Real>(p: &Potential<T>, alpha: T, g: &Signal<T>, cfg: &HarnessConfig<T>) -> Result<Run<T>> {
    let order = FractionalOrder::with_classical(alpha)?;
    let spec = eigen_solve_on(p, cfg.cells, cfg.modes, cfg.refine)?;
    let field = solve_forward(&spec, order, g, &cfg.forward)?;
    let oracle = solve_l1(p, order, g, cfg.cells)?;
    let mut mismatch = [T::zero(); 2];
    for (i, e) in [Endpoint::Zero, Endpoint::One].into_iter().enumerate() {
        mismatch[i] = oracle.trace(e).relative_l2(&field.trace(e))?;
    }
    Ok(Run { spec, field, mismatch })
}

fn symmetric_gap<T: Real>(a: &Signal<T>, b: &Signal<T>) -> Result<T> {
    let diff = a.axpy(-T::one(), b)?.l2_norm();
    let mean = (a.l2_norm() + b.l2_norm()) * T::lit(0.5);
    Ok(if mean == T::zero() { T::zero() } else { diff / mean })
}

fn classify<T: Real>(gap: T, tol: T, factor: T) -> HarnessVerdict {
    if gap > factor * tol {
        HarnessVerdict::Distinct
    } else if gap <= tol {
        HarnessVerdict::IndistinctAtTolerance
    } else {
        HarnessVerdict::Degenerate
    }
}

fn order_from_kernel<T: Real>(spec: &SpectralData<T>, alpha: T, opts: &ForwardOptions<T>) -> Option<T> {
    let order = FractionalOrder::with_classical(alpha).ok()?;
    if order.is_classical() {
        return None;
    }
    let times: Vec<T> = (0..100)
        .map(|i| T::lit(10.0).powf(T::lit(2.0) + T::lit(10.0) * T::from_usize_lossy(i) / T::lit(99.0)))
        .collect();
    let k = kernel(spec, order, &times, &[T::one()], opts).ok()?;
    estimate_order(&times, &k.values[0], Some(k.limit[0]), &OrderOptions::default())
        .ok()
        .map(|e| e.alpha)
}

fn check_input<T: Real>(g: &Signal<T>, alpha: T) -> Result<()> {
    if g.is_zero() {
        return Err(Error::Hypothesis("boundary input g vanishes identically".into()));
    }
    let diag = halpha_check(g, FractionalOrder::with_classical(alpha)?);
    if !diag.passed {
        return Err(Error::Hypothesis(format!(
            "g(0) = {} violates the compatibility condition for order {alpha}",
            diag.initial_value
        )));
    }
    Ok(())
}

/// Solves the problems for `(p, α)` and `(q, β)` with the same input and
/// compares their traces.
pub fn distinguishability<T: Real>(
    p: &Potential<T>,
    alpha: T,
    q: &Potential<T>,
    beta: T,
    g: &Signal<T>,
    endpoint: Endpoint,
    cfg: &HarnessConfig<T>,
) -> Result<ExperimentReport<T>> {
    let start = Instant::now();
    check_input(g, alpha.max(beta))?;
    let inputs_digest = digest(&Inputs {
        p: p.samples(),
        alpha,
        q: q.samples(),
        beta,
        g: g.values(),
        dt: g.dt(),
        endpoint,
        config: cfg,
    });
    let (a, b) = rayon::join(|| run_problem(p, alpha, g, cfg), || run_problem(q, beta, g, cfg));
    let (a, b) = (a?, b?);

    let mut endpoints = Vec::with_capacity(2);
    for (i, e) in [Endpoint::Zero, Endpoint::One].into_iter().enumerate() {
        let gap = symmetric_gap(&a.field.trace(e), &b.field.trace(e))?;
        let tolerance = a.mismatch[i] + b.mismatch[i];
        endpoints.push(EndpointGap {
            endpoint: e,
            gap,
            tolerance,
            verdict: classify(gap, tolerance, cfg.distinct_factor),
        });
    }
    let endpoints: [EndpointGap<T>; 2] = endpoints.try_into().expect("two endpoints");
    let chosen = endpoints[match endpoint {
        Endpoint::Zero => 0,
        Endpoint::One => 1,
    }]
    .clone();

    let grid = p.resample(cfg.cells)?;
    let grid_q = q.resample(cfg.cells)?;
    let dp = grid
        .samples()
        .iter()
        .zip(grid_q.samples())
        .fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()));
    let separated = (alpha - beta).abs() > cfg.alpha_separation || dp > cfg.potential_separation;
    let expectation_met = if separated {
        chosen.verdict == HarnessVerdict::Distinct
    } else {
        chosen.verdict == HarnessVerdict::IndistinctAtTolerance
    };

    Ok(ExperimentReport {
        inputs_digest,
        endpoint,
        gap: chosen.gap,
        tolerance: chosen.tolerance,
        verdict: chosen.verdict,
        expectation_met,
        order_estimates: [
            order_from_kernel(&a.spec, alpha, &cfg.forward),
            order_from_kernel(&b.spec, beta, &cfg.forward),
        ],
        spectral: eigenvalue_matching(&a.spec, &b.spec)?,
        endpoints,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Differences `|λ_n - μ_n|` and `|ρ_n - σ_n|`.
pub fn eigenvalue_matching<T: Real>(p: &SpectralData<T>, q: &SpectralData<T>) -> Result<MatchingReport<T>> {
    if p.modes() != q.modes() {
        return Err(Error::Validation(format!(
            "spectra have {} and {} modes",
            p.modes(),
            q.modes()
        )));
    }
    let dl: Vec<T> = p.lambdas.iter().zip(&q.lambdas).map(|(a, b)| (*a - *b).abs()).collect();
    let dr: Vec<T> = p.norming.iter().zip(&q.norming).map(|(a, b)| (*a - *b).abs()).collect();
    Ok(MatchingReport {
        max_lambda_difference: dl.iter().fold(T::zero(), |m, v| m.max(*v)),
        max_norming_difference: dr.iter().fold(T::zero(), |m, v| m.max(*v)),
        lambda_differences: dl,
        norming_differences: dr,
    })
}

/// Regularisation for the deconvolution probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", rename_all = "snake_case")]
pub enum Regularization<T> {
    /// Corner of the L-curve over a logarithmic weight scan.
    LCurve,
    Fixed(T),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DeconvolutionReport<T> {
    pub weight: T,
    pub estimate: Vec<T>,
    /// Relative L² error of the estimate against the true input on `[0.1T, T]`.
    pub relative_error: T,
    pub residual_norm: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ContinuationReport<T> {
    pub inputs_digest: String,
    pub input_vanishes: bool,
    /// `max |u|` over the whole field.
    pub field_max: T,
    pub trace_norms: [T; 2],
    /// `‖u(0,·)‖ / ‖u(1,·)‖`; 0 when the input vanishes.
    pub ratio: T,
    /// Whether the run agrees with unique continuation: either the input
    /// vanishes and so does u, or the Cauchy data at x = 0 is non-zero.
    pub consistent: bool,
    pub titchmarsh: TitchmarshReport<T>,
    pub deconvolution: Option<DeconvolutionReport<T>>,
    pub runtime_seconds: f64,
}

/// Floor below which a field counts as identically zero.
pub const ZERO_FIELD_FLOOR: f64 = 1e-14;

/// Relative threshold for a vanishing convolution in the support check.
pub const CONVOLUTION_TOL: f64 = 1e-10;

/// Runs one forward problem and checks the consequences of unique continuation.
pub fn unique_continuation<T: Real>(
    p: &Potential<T>,
    alpha: T,
    g: &Signal<T>,
    reg: Regularization<T>,
    cfg: &HarnessConfig<T>,
) -> Result<ContinuationReport<T>> {
    let start = Instant::now();
    let order = FractionalOrder::with_classical(alpha)?;
    let inputs_digest = digest(&(p.samples(), alpha, g.values(), g.dt(), cfg));
    let spec = eigen_solve_on(p, cfg.cells, cfg.modes, cfg.refine)?;
    let field = solve_forward(&spec, order, g, &cfg.forward)?;
    let u0 = field.trace(Endpoint::Zero);
    let u1 = field.trace(Endpoint::One);
    let field_max = field.max_abs();
    let kt = kernel(&spec, order, &g.times(), &[T::zero()], &cfg.forward)?;
    let k0 = kt.slice(0)?;
    let titchmarsh = titchmarsh_check(&k0, g, T::lit(CONVOLUTION_TOL))?;

    let input_vanishes = g.is_zero();
    let trace_norms = [u0.l2_norm(), u1.l2_norm()];
    let (ratio, consistent, deconvolution) = if input_vanishes {
        (T::zero(), field_max <= T::lit(ZERO_FIELD_FLOOR), None)
    } else {
        let ratio = if trace_norms[1] > T::zero() {
            trace_norms[0] / trace_norms[1]
        } else {
            T::zero()
        };
        let data = quad::cumulative_trapezoid(u0.values(), u0.dt());
        let probe = deconvolve(&k0, &data, g, reg)?;
        (ratio, ratio > T::zero(), Some(probe))
    };
    Ok(ContinuationReport {
        inputs_digest,
        input_vanishes,
        field_max,
        trace_norms,
        ratio,
        consistent,
        titchmarsh,
        deconvolution,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Trapezoid matrix of `g ↦ k * g` on the grid of `k`.
fn convolution_matrix<T: Real>(k: &Signal<T>) -> Vec<Vec<T>> {
    let n = k.values().len();
    let kv = k.values();
    let half = T::lit(0.5);
    (0..n)
        .map(|row| {
            let mut r = vec![T::zero(); n];
            if row > 0 {
                r[0] = half * kv[row] * k.dt();
                for i in 1..row {
                    r[i] = kv[row - i] * k.dt();
                }
                r[row] = half * kv[0] * k.dt();
            }
            r
        })
        .collect()
}

fn tikhonov<T: Real>(ata: &Dense<T>, atd: &[T], ltl: &Dense<T>, weight: T) -> Result<Vec<T>> {
    let mut m = ata.clone();
    for (v, l) in m.data.iter_mut().zip(&ltl.data) {
        *v = *v + weight * *l;
    }
    // the identity term keeps the matrix definite for tiny weights
    let eps = T::epsilon() * ata.data.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    for i in 0..m.n {
        let v = m.get(i, i) + eps;
        m.set(i, i, v);
    }
    m.cholesky_solve(atd)
}

/// Tikhonov solution of the first-kind Volterra equation `k * ĝ = data` with a
/// second-difference penalty; the error is measured against `truth` on `[0.1T, T]`.
pub fn deconvolve<T: Real>(
    k: &Signal<T>,
    data: &[T],
    truth: &Signal<T>,
    reg: Regularization<T>,
) -> Result<DeconvolutionReport<T>> {
    let a = convolution_matrix(k);
    let n = a.len();
    if data.len() != n || !truth.same_grid(k) {
        return Err(Error::Validation("deconvolution operands on different grids".into()));
    }
    let mut ata = Dense::zeros(n);
    let mut atd = vec![T::zero(); n];
    for (row, d) in a.iter().zip(data) {
        let nz: Vec<usize> = (0..n).filter(|&i| row[i] != T::zero()).collect();
        for &i in &nz {
            atd[i] = atd[i] + row[i] * *d;
            for &j in &nz {
                let v = ata.get(i, j) + row[i] * row[j];
                ata.set(i, j, v);
            }
        }
    }
    let mut ltl = Dense::zeros(n);
    for r in 0..n.saturating_sub(2) {
        let c = [T::one(), -T::lit(2.0), T::one()];
        for a_ in 0..3 {
            for b_ in 0..3 {
                let v = ltl.get(r + a_, r + b_) + c[a_] * c[b_];
                ltl.set(r + a_, r + b_, v);
            }
        }
    }
    let scale = (0..n).fold(T::zero(), |m, i| m.max(ata.get(i, i)));
    let residual_norm = |x: &[T]| -> T {
        a.iter()
            .zip(data)
            .map(|(row, d)| {
                let r = row.iter().zip(x).map(|(p, q)| *p * *q).sum::<T>() - *d;
                r * r
            })
            .sum::<T>()
            .sqrt()
    };
    let seminorm = |x: &[T]| -> T {
        x.windows(3)
            .map(|w| {
                let v = w[0] - T::lit(2.0) * w[1] + w[2];
                v * v
            })
            .sum::<T>()
            .sqrt()
    };

    let (weight, estimate) = match reg {
        Regularization::Fixed(w) => (w, tikhonov(&ata, &atd, &ltl, w)?),
        Regularization::LCurve => {
            let mut pts = Vec::new();
            for e in 0..=40 {
                let w = scale * T::lit(10.0).powf(-T::lit(16.0) + T::lit(0.3) * T::from_usize_lossy(e));
                let x = tikhonov(&ata, &atd, &ltl, w)?;
                let (rn, sn) = (residual_norm(&x), seminorm(&x));
                let tiny = T::min_positive_value();
                pts.push((w, rn.max(tiny).ln(), sn.max(tiny).ln(), x));
            }
            let mut best = pts.len() / 2;
            let mut best_curv = T::neg_infinity();
            for i in 1..pts.len() - 1 {
                let curv = menger(
                    (pts[i - 1].1, pts[i - 1].2),
                    (pts[i].1, pts[i].2),
                    (pts[i + 1].1, pts[i + 1].2),
                );
                if curv > best_curv {
                    best_curv = curv;
                    best = i;
                }
            }
            let chosen = pts.swap_remove(best);
            (chosen.0, chosen.3)
        }
    };

    let t_lo = truth.horizon() * T::lit(0.1);
    let (mut num, mut den) = (T::zero(), T::zero());
    for (kidx, (e, g)) in estimate.iter().zip(truth.values()).enumerate() {
        if truth.time(kidx) >= t_lo - T::lit(1e-12) {
            num = num + (*e - *g) * (*e - *g);
            den = den + *g * *g;
        }
    }
    Ok(DeconvolutionReport {
        weight,
        relative_error: if den > T::zero() {
            (num / den).sqrt()
        } else {
            num.sqrt()
        },
        residual_norm: residual_norm(&estimate),
        estimate,
    })
}

/// Signed Menger curvature of three points (positive for a convex corner).
fn menger<T: Real>(a: (T, T), b: (T, T), c: (T, T)) -> T {
    let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    let d = |p: (T, T), q: (T, T)| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
    let den = d(a, b) * d(b, c) * d(a, c);
    if den == T::zero() {
        T::zero()
    } else {
        T::lit(2.0) * cross / den
    }
}
