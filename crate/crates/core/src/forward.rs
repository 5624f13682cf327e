//! Spectral representation of the forward problem and the boundary kernel.
//!
//! Mode `n` contributes `φ_n(x)/ρ_n · ∫_0^t k_n(t-s) g(s) ds` with
//! `k_n(s) = s^{α-1} E_{α,α}(-λ_n s^α)`. The convolution uses product
//! integration: g is linear on each cell and the kernel moments over a cell
//! come from the closed-form first and second antiderivatives of `k_n`.
//!
//! The modes beyond N are not dropped silently. Their sum is approximated by
//! the quasi-static response `tail(x)·g(t)`, where `tail` is evaluated from the
//! Weyl asymptotics of the spectrum (cosine eigenfunctions, `ρ = 1/2`,
//! `λ ≈ ((n-1)π)² + c` with c read off the last computed eigenvalue).

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fraccalc::{convolve, FractionalOrder, Signal, COMPAT_TOL};
use crate::mlf::{ml_kernel_double_integral, ml_kernel_integral};
use crate::quad;
use crate::scalar::Real;
use crate::sturm::SpectralData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMode {
    /// Plain truncation after N modes.
    Truncate,
    /// Add the quasi-static response of the omitted modes.
    QuasiStatic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ForwardOptions<T> {
    pub tail: TailMode,
    /// A truncation warning is raised when the tail estimate at x = 1 exceeds this.
    pub tail_tol: T,
}

impl<T: Real> Default for ForwardOptions<T> {
    fn default() -> Self {
        Self {
            tail: TailMode::QuasiStatic,
            tail_tol: T::lit(1e-2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Endpoint {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
}

impl Endpoint {
    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(Self::Zero),
            1 => Ok(Self::One),
            _ => Err(Error::Parameter(format!("endpoint must be 0 or 1, got {i}"))),
        }
    }

    pub fn position<T: Real>(self) -> T {
        match self {
            Self::Zero => T::zero(),
            Self::One => T::one(),
        }
    }
}

/// `u(x_j, t_k)`, stored one time series per grid node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SolutionField<T> {
    pub grid: Vec<T>,
    pub dt: T,
    pub values: Vec<Vec<T>>,
    /// Size of the omitted-mode contribution at x = 1 per unit input.
    pub tail_estimate: T,
    pub truncation_warning: bool,
}

impl<T: Real> SolutionField<T> {
    pub fn cells(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn steps(&self) -> usize {
        self.values[0].len() - 1
    }

    pub fn times(&self) -> Vec<T> {
        (0..=self.steps()).map(|k| self.dt * T::from_usize_lossy(k)).collect()
    }

    #[inline]
    pub fn value(&self, j: usize, k: usize) -> T {
        self.values[j][k]
    }

    pub fn trace(&self, endpoint: Endpoint) -> Signal<T> {
        let row = match endpoint {
            Endpoint::Zero => &self.values[0],
            Endpoint::One => &self.values[self.cells()],
        };
        Signal::new(row.clone(), self.dt).expect("field rows are valid signals")
    }

    /// Keeps every `stride`-th grid node.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        if stride == 0 || !self.cells().is_multiple_of(stride) {
            return Err(Error::Parameter(format!(
                "stride {stride} does not divide {} cells",
                self.cells()
            )));
        }
        Ok(Self {
            grid: self.grid.iter().step_by(stride).copied().collect(),
            dt: self.dt,
            values: self.values.iter().step_by(stride).cloned().collect(),
            tail_estimate: self.tail_estimate,
            truncation_warning: self.truncation_warning,
        })
    }

    /// One-sided second-order `∂_x u` at an endpoint, as a time series.
    pub fn flux(&self, endpoint: Endpoint) -> Signal<T> {
        let j = self.cells();
        let h = self.grid[1] - self.grid[0];
        let two_h = h + h;
        let (three, four) = (T::lit(3.0), T::lit(4.0));
        let vals = (0..=self.steps())
            .map(|k| match endpoint {
                Endpoint::Zero => (-three * self.values[0][k] + four * self.values[1][k] - self.values[2][k]) / two_h,
                Endpoint::One => {
                    (three * self.values[j][k] - four * self.values[j - 1][k] + self.values[j - 2][k]) / two_h
                }
            })
            .collect();
        Signal::new(vals, self.dt).expect("finite field")
    }

    /// `∫_0^1 u(x, t_k) dx` by Simpson's rule.
    pub fn spatial_mean(&self) -> Signal<T> {
        let h = self.grid[1] - self.grid[0];
        let vals = (0..=self.steps())
            .map(|k| {
                let col: Vec<T> = self.values.iter().map(|r| r[k]).collect();
                quad::simpson(&col, h)
            })
            .collect();
        Signal::new(vals, self.dt).expect("finite field")
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .flat_map(|r| r.iter())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// `K(x, t)` at selected grid nodes, plus the `t → ∞` limit at each of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct KernelTable<T> {
    pub xs: Vec<T>,
    pub times: Vec<T>,
    /// `values[i][k] = K(xs[i], times[k])`.
    pub values: Vec<Vec<T>>,
    pub limit: Vec<T>,
    pub tail_estimate: T,
    pub truncation_warning: bool,
}

impl<T: Real> KernelTable<T> {
    /// The slice `K(xs[i], ·)` as a signal; requires a uniform time grid from 0.
    pub fn slice(&self, i: usize) -> Result<Signal<T>> {
        let dt = uniform_step(&self.times)?;
        Signal::new(self.values[i].clone(), dt)
    }

    pub fn index_of(&self, x: T) -> Option<usize> {
        self.xs.iter().position(|v| (*v - x).abs() <= T::lit(1e-12))
    }
}

fn uniform_step<T: Real>(times: &[T]) -> Result<T> {
    if times.len() < 2 || times[0] != T::zero() {
        return Err(Error::Validation(
            "time grid must start at 0 with two or more samples".into(),
        ));
    }
    let dt = times[1];
    let tol = T::lit(1e-9) * dt * T::from_usize_lossy(times.len());
    for (k, t) in times.iter().enumerate() {
        if (*t - dt * T::from_usize_lossy(k)).abs() > tol {
            return Err(Error::Validation("time grid is not uniform".into()));
        }
    }
    Ok(dt)
}

/// Weyl-asymptotic estimate of `Σ_{n>N} φ_n(x) / (λ_n ρ_n)`.
pub fn tail_profile<T: Real>(spec: &SpectralData<T>, x: T) -> T {
    let n = spec.modes();
    let pi = T::PI();
    let last = T::from_usize_lossy(n - 1) * pi;
    let c = (spec.lambdas[n - 1] - last * last).max(T::lit(1e-6));
    let a = c.sqrt();
    let one = T::one();
    // cosh(a x) / (a sinh a) without overflow
    let full = ((a * (x - one)).exp() + (-a * (x + one)).exp()) / (a * (one - (-(a + a)).exp()));
    let mut partial = one / c;
    for k in 1..n {
        let kp = T::from_usize_lossy(k) * pi;
        let sign = if k % 2 == 0 { one } else { -one };
        partial = partial + T::lit(2.0) * sign * (kp * x).cos() / (kp * kp + c);
    }
    full - partial
}

fn check_compatibility<T: Real>(alpha: FractionalOrder<T>, g: &Signal<T>) -> Result<()> {
    let g0 = g.values()[0];
    if alpha.value() >= T::lit(0.5) && g0.abs() > T::lit(COMPAT_TOL) {
        return Err(Error::Compatibility(format!(
            "g(0) = {g0} must vanish for alpha = {} >= 1/2",
            alpha.value()
        )));
    }
    Ok(())
}

/// Product-integration weights `(w0_m, w1_m)` such that
/// `(k * g)(t_k) = Σ_{m<k} w0_m g_{k-m} + w1_m g_{k-m-1}` for piecewise-linear g.
pub fn mode_weights<T: Real>(alpha: T, lambda: T, dt: T, steps: usize) -> Result<(Vec<T>, Vec<T>)> {
    let f1 = (0..=steps)
        .map(|m| ml_kernel_integral(alpha, lambda, dt * T::from_usize_lossy(m)))
        .collect::<Result<Vec<_>>>()?;
    let f2 = (0..=steps)
        .map(|m| ml_kernel_double_integral(alpha, lambda, dt * T::from_usize_lossy(m)))
        .collect::<Result<Vec<_>>>()?;
    let mut w0 = Vec::with_capacity(steps);
    let mut w1 = Vec::with_capacity(steps);
    for m in 0..steps {
        let a = f1[m + 1] - f1[m];
        let b = (dt * f1[m + 1] - (f2[m + 1] - f2[m])) / dt;
        w0.push(a - b);
        w1.push(b);
    }
    Ok((w0, w1))
}

/// `∫_0^{t_k} s^{α-1} E_{α,α}(-λ s^α) g(t_k - s) ds` for every grid time.
pub fn mode_response<T: Real>(alpha: T, lambda: T, g: &Signal<T>) -> Result<Vec<T>> {
    let steps = g.steps();
    let (w0, w1) = mode_weights(alpha, lambda, g.dt(), steps)?;
    let gv = g.values();
    Ok((0..=steps)
        .map(|k| {
            let mut s = T::zero();
            for m in 0..k {
                s = s + w0[m] * gv[k - m] + w1[m] * gv[k - m - 1];
            }
            s
        })
        .collect())
}

fn tail_state<T: Real>(spec: &SpectralData<T>, opts: &ForwardOptions<T>) -> (Vec<T>, T, bool) {
    let estimate = tail_profile(spec, T::one());
    let warn_flag = estimate.abs() > opts.tail_tol;
    if warn_flag {
        warn!(
            "mode truncation at N = {} leaves an estimated tail of {estimate}",
            spec.modes()
        );
    }
    let profile = match opts.tail {
        TailMode::Truncate => vec![T::zero(); spec.grid.len()],
        TailMode::QuasiStatic => spec.grid.iter().map(|x| tail_profile(spec, *x)).collect(),
    };
    (profile, estimate, warn_flag)
}

/// Solution of the Neumann problem with zero initial state and flux `g` at
/// x = 1, on the spectral data's grid.
pub fn solve_forward<T: Real>(
    spec: &SpectralData<T>,
    alpha: FractionalOrder<T>,
    g: &Signal<T>,
    opts: &ForwardOptions<T>,
) -> Result<SolutionField<T>> {
    spec.validate()?;
    check_compatibility(alpha, g)?;
    let a = alpha.value();
    let responses = (0..spec.modes())
        .into_par_iter()
        .map(|n| mode_response(a, spec.lambdas[n], g))
        .collect::<Result<Vec<_>>>()?;
    let (tail, tail_estimate, truncation_warning) = tail_state(spec, opts);
    let gv = g.values();
    let values = (0..spec.grid.len())
        .into_par_iter()
        .map(|j| {
            let mut row: Vec<T> = gv.iter().map(|v| tail[j] * *v).collect();
            for (n, resp) in responses.iter().enumerate() {
                let c = spec.phi(n, j) / spec.norming[n];
                for (r, v) in row.iter_mut().zip(resp) {
                    *r = *r + c * *v;
                }
            }
            row
        })
        .collect::<Vec<_>>();
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite value in the forward solution".into()));
    }
    Ok(SolutionField {
        grid: spec.grid.clone(),
        dt: g.dt(),
        values,
        tail_estimate,
        truncation_warning,
    })
}

fn grid_index<T: Real>(grid: &[T], x: T) -> Result<usize> {
    let cells = grid.len() - 1;
    let s = x * T::from_usize_lossy(cells);
    let j = s.round().to_usize().unwrap_or(usize::MAX);
    if j > cells || (s - T::from_usize_lossy(j)).abs() > T::lit(1e-9) {
        return Err(Error::Validation(format!("x = {x} is not a grid node")));
    }
    Ok(j)
}

/// `K(x, t) = Σ_n φ_n(x) (1 - E_{α,1}(-λ_n t^α)) / (λ_n ρ_n)` at grid nodes `xs`.
pub fn kernel<T: Real>(
    spec: &SpectralData<T>,
    alpha: FractionalOrder<T>,
    times: &[T],
    xs: &[T],
    opts: &ForwardOptions<T>,
) -> Result<KernelTable<T>> {
    spec.validate()?;
    if times.iter().any(|t| !(*t >= T::zero())) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Validation("kernel times must be non-negative and sorted".into()));
    }
    let idx = xs
        .iter()
        .map(|x| grid_index(&spec.grid, *x))
        .collect::<Result<Vec<_>>>()?;
    let a = alpha.value();
    let integrals = (0..spec.modes())
        .into_par_iter()
        .map(|n| {
            times
                .iter()
                .map(|t| ml_kernel_integral(a, spec.lambdas[n], *t))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let (tail, tail_estimate, truncation_warning) = tail_state(spec, opts);
    let mut values = Vec::with_capacity(xs.len());
    let mut limit = Vec::with_capacity(xs.len());
    for &j in &idx {
        let mut row: Vec<T> = times
            .iter()
            .map(|t| if *t > T::zero() { tail[j] } else { T::zero() })
            .collect();
        let mut lim = tail[j];
        for (n, ints) in integrals.iter().enumerate() {
            let c = spec.phi(n, j) / spec.norming[n];
            for (r, v) in row.iter_mut().zip(ints) {
                *r = *r + c * *v;
            }
            lim = lim + c / spec.lambdas[n];
        }
        values.push(row);
        limit.push(lim);
    }
    Ok(KernelTable {
        xs: idx.iter().map(|j| spec.grid[*j]).collect(),
        times: times.to_vec(),
        values,
        limit,
        tail_estimate,
        truncation_warning,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DuhamelReport<T> {
    /// Worst relative residual over both endpoints.
    pub residual: T,
    /// Residual at x = 0 and x = 1.
    pub per_endpoint: [T; 2],
}

/// Trapezoid `K * g` with the panel at the kernel origin replaced by the exact
/// integral of a local power law `K(s) ≈ K(h) (s/h)^β` against linear `g`.
/// K(1, ·) grows like `t^{α/2}`, which limits plain trapezoid to `O(h^{1+α/2})`.
fn kernel_convolve<T: Real>(k: &Signal<T>, g: &Signal<T>) -> Result<Signal<T>> {
    let plain = convolve(k, g)?;
    let (kv, gv) = (k.values(), g.values());
    if kv.len() < 3 || kv[0] != T::zero() || !(kv[1] > T::zero()) {
        return Ok(plain);
    }
    let beta = (kv[2] / kv[1]).log2();
    // β ≥ 1 means the origin is not singular and plain trapezoid is already second order
    if !(beta > T::zero() && beta < T::one()) {
        return Ok(plain);
    }
    let h = k.dt();
    let half = T::lit(0.5);
    let mut out = plain.into_values();
    for n in 1..out.len() {
        let trap = half * h * kv[1] * gv[n - 1];
        let exact = h * kv[1] * (gv[n] / (T::one() + beta) + (gv[n - 1] - gv[n]) / (T::lit(2.0) + beta));
        out[n] = out[n] - trap + exact;
    }
    Signal::new(out, h)
}

/// Compares `∫_0^ξ u(x, t) dt` with `(K(x, ·) * g)(ξ)` at x = 0 and x = 1.
pub fn verify_duhamel<T: Real>(u: &SolutionField<T>, k: &KernelTable<T>, g: &Signal<T>) -> Result<DuhamelReport<T>> {
    if u.steps() != g.steps() || (u.dt - g.dt()).abs() > T::lit(1e-12) * g.dt() {
        return Err(Error::Validation("solution and input grids differ".into()));
    }
    if k.times.len() != g.values().len() || (uniform_step(&k.times)? - g.dt()).abs() > T::lit(1e-12) * g.dt() {
        return Err(Error::Validation("kernel and input grids differ".into()));
    }
    let mut per = [T::zero(); 2];
    for (slot, endpoint) in [Endpoint::Zero, Endpoint::One].into_iter().enumerate() {
        let i = k
            .index_of(endpoint.position())
            .ok_or_else(|| Error::Validation("kernel table lacks an endpoint".into()))?;
        let lhs = quad::cumulative_trapezoid(u.trace(endpoint).values(), u.dt);
        let rhs = kernel_convolve(&k.slice(i)?, g)?;
        let scale = lhs.iter().fold(T::zero(), |m, v| m.max(v.abs())) + T::min_positive_value().sqrt();
        per[slot] = lhs
            .iter()
            .zip(rhs.values())
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
            / scale;
    }
    Ok(DuhamelReport {
        residual: per[0].max(per[1]),
        per_endpoint: per,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlf::mittag_leffler;
    use crate::sturm::{eigen_solve, neumann_steady, Potential};
    use approx::assert_relative_eq;

    fn order(a: f64) -> FractionalOrder<f64> {
        FractionalOrder::with_classical(a).unwrap()
    }

    #[test]
    fn single_mode_ramp_response() {
        // ∫_0^t k(s)(t - s) ds = ∫_0^t F1(s) ds = t^{α+1} E_{α,α+2}(-λ t^α)
        let (alpha, lambda) = (0.6_f64, 2.5_f64);
        let g = Signal::from_fn(1.0, 50, |t| t).unwrap();
        let c = mode_response(alpha, lambda, &g).unwrap();
        for (k, t) in g.times().iter().enumerate() {
            let exact = t.powf(alpha + 1.0) * mittag_leffler(alpha, alpha + 2.0, -lambda * t.powf(alpha)).unwrap();
            assert!((c[k] - exact).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn tail_profile_constant_potential() {
        let p = Potential::constant(-1.0_f64, 80).unwrap();
        let s = eigen_solve(&p, 8, 3).unwrap();
        let w = neumann_steady(&p, 3).unwrap();
        let partial = s.steady_partial_sum();
        for (j, x) in s.grid.iter().enumerate() {
            assert!((tail_profile(&s, *x) - (w[j] - partial[j])).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_input_and_compatibility() {
        let p = Potential::constant(-1.0_f64, 40).unwrap();
        let s = eigen_solve(&p, 4, 2).unwrap();
        let g = Signal::zeros(20, 0.05).unwrap();
        let u = solve_forward(&s, order(0.5), &g, &ForwardOptions::default()).unwrap();
        assert_eq!(u.max_abs(), 0.0);
        let bad = Signal::from_fn(1.0, 20, |t| 1.0 + t).unwrap();
        assert!(matches!(
            solve_forward(&s, order(0.7), &bad, &ForwardOptions::default()),
            Err(Error::Compatibility(_))
        ));
        assert!(solve_forward(&s, order(0.3), &bad, &ForwardOptions::default()).is_ok());
    }

    #[test]
    fn kernel_limits_and_start() {
        let p = Potential::constant(-1.0_f64, 256).unwrap();
        let s = eigen_solve(&p, 64, 2).unwrap();
        let kt = kernel(&s, order(0.5), &[0.0, 1e6], &[0.0, 1.0], &ForwardOptions::default()).unwrap();
        assert_eq!(kt.values[0][0], 0.0);
        assert_eq!(kt.values[1][0], 0.0);
        let coth = 1.0_f64.cosh() / 1.0_f64.sinh();
        assert_relative_eq!(kt.values[1][1], coth, max_relative = 1e-3);
        assert_relative_eq!(kt.values[0][1], 1.0 / 1.0_f64.sinh(), max_relative = 1e-3);
        assert_relative_eq!(kt.limit[1], coth, max_relative = 1e-6);
    }

    #[test]
    fn single_mode_kernel_closed_form() {
        let p = Potential::constant(-3.0_f64, 16).unwrap();
        let s = eigen_solve(&p, 1, 2).unwrap();
        let opts = ForwardOptions {
            tail: TailMode::Truncate,
            ..Default::default()
        };
        let kt = kernel(&s, order(0.5), &[0.5, 2.0], &[1.0], &opts).unwrap();
        for (t, v) in [0.5_f64, 2.0].iter().zip(&kt.values[0]) {
            let exact = (1.0 - mittag_leffler(0.5, 1.0, -3.0 * t.sqrt()).unwrap()) / 3.0;
            assert_relative_eq!(*v, exact, max_relative = 1e-10);
        }
    }

    #[test]
    fn duhamel_on_constant_potential() {
        let p = Potential::constant(-1.0_f64, 256).unwrap();
        let s = eigen_solve(&p, 64, 2).unwrap();
        let g = Signal::from_fn(1.0, 400, |t| t * t).unwrap();
        let opts = ForwardOptions::default();
        let u = solve_forward(&s, order(0.5), &g, &opts).unwrap();
        let kt = kernel(&s, order(0.5), &g.times(), &[0.0, 1.0], &opts).unwrap();
        let r = verify_duhamel(&u, &kt, &g).unwrap();
        assert!(r.residual < 1e-3, "{r:?}");
        let z = Signal::zeros(400, 1.0 / 400.0).unwrap();
        let u0 = solve_forward(&s, order(0.5), &z, &opts).unwrap();
        assert_eq!(verify_duhamel(&u0, &kt, &z).unwrap().residual, 0.0);
    }

    #[test]
    fn power_law_origin_convolution() {
        let k = Signal::from_fn(1.0_f64, 100, |t| t.powf(0.25)).unwrap();
        let g = Signal::from_fn(1.0_f64, 100, |_| 1.0).unwrap();
        let exact = 1.0 / 1.25;
        let plain = (convolve(&k, &g).unwrap().values()[100] - exact).abs();
        let fixed = (kernel_convolve(&k, &g).unwrap().values()[100] - exact).abs();
        assert!(fixed < 0.1 * plain, "plain {plain}, corrected {fixed}");
    }

    #[test]
    fn duhamel_heat_limit() {
        let p = Potential::constant(-1.0_f64, 256).unwrap();
        let s = eigen_solve(&p, 64, 2).unwrap();
        let g = Signal::from_fn(1.0, 400, |t| t * t).unwrap();
        let opts = ForwardOptions::default();
        let u = solve_forward(&s, order(1.0), &g, &opts).unwrap();
        let kt = kernel(&s, order(1.0), &g.times(), &[0.0, 1.0], &opts).unwrap();
        assert!(verify_duhamel(&u, &kt, &g).unwrap().residual < 1e-3);
    }

    #[test]
    fn flux_boundary_conditions() {
        let p = Potential::constant(-1.0_f64, 256).unwrap();
        let s = eigen_solve(&p, 64, 2).unwrap();
        let g = Signal::from_fn(1.0, 100, |t| t * t).unwrap();
        let u = solve_forward(&s, order(0.5), &g, &ForwardOptions::default()).unwrap();
        let f1 = u.flux(Endpoint::One);
        let f0 = u.flux(Endpoint::Zero);
        let err1 = f1.axpy(-1.0, &g).unwrap().max_abs() / g.max_abs();
        assert!(err1 < 0.05, "flux at 1 off by {err1}");
        assert!(f0.max_abs() / g.max_abs() < 0.05);
    }
}
