//! Discrete fractional calculus on uniform time grids.
//!
//! The Riemann–Liouville integral uses product-trapezoid weights (exact for
//! piecewise-linear data); the Caputo derivative uses the L1 scheme. Since
//! membership in the fractional Sobolev class cannot be decided from samples,
//! [`halpha_check`] reports its two testable shadows: the compatibility
//! condition `g(0) = 0` and the round-trip residual of `J^α ∘ ∂^α`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::scalar::Real;
use crate::special::gamma;

/// Uniformly sampled time series, `values[k] = g(k dt)` for `k = 0..=M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Signal<T> {
    values: Vec<T>,
    dt: T,
}

impl<T: Real> Signal<T> {
    pub fn new(values: Vec<T>, dt: T) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Validation(format!(
                "signal needs at least two samples, got {}",
                values.len()
            )));
        }
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::Validation(format!("time step must be positive, got {dt}")));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite sample at index {k}")));
        }
        Ok(Self { values, dt })
    }

    /// Samples `f` at `t_k = k T / steps`, `k = 0..=steps`.
    pub fn from_fn(horizon: T, steps: usize, f: impl Fn(T) -> T) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Validation("signal needs at least one step".into()));
        }
        let dt = horizon / T::from_usize_lossy(steps);
        Self::new((0..=steps).map(|k| f(dt * T::from_usize_lossy(k))).collect(), dt)
    }

    pub fn zeros(steps: usize, dt: T) -> Result<Self> {
        Self::new(vec![T::zero(); steps + 1], dt)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// Number of steps `M` (one less than the sample count).
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn horizon(&self) -> T {
        self.dt * T::from_usize_lossy(self.steps())
    }

    pub fn time(&self, k: usize) -> T {
        self.dt * T::from_usize_lossy(k)
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.values.len()).map(|k| self.time(k)).collect()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Trapezoid approximation of the L²(0,T) norm.
    pub fn l2_norm(&self) -> T {
        let sq: Vec<T> = self.values.iter().map(|v| *v * *v).collect();
        quad::trapezoid(&sq, self.dt).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == T::zero())
    }

    /// Shares the grid of `other` (same step and length).
    pub fn same_grid(&self, other: &Self) -> bool {
        self.values.len() == other.values.len()
            && (self.dt - other.dt).abs() <= T::lit(1e-12) * self.dt.abs().max(other.dt.abs())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            dt: self.dt,
        }
    }

    /// `self + c * other` on a shared grid.
    pub fn axpy(&self, c: T, other: &Self) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::Validation("signals live on different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| *a + c * *b)
            .collect();
        Ok(Self { values, dt: self.dt })
    }

    /// Every `stride`-th sample; `stride` must divide the step count.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        if stride == 0 || !self.steps().is_multiple_of(stride) {
            return Err(Error::Parameter(format!(
                "stride {stride} does not divide {} steps",
                self.steps()
            )));
        }
        Ok(Self {
            values: self.values.iter().step_by(stride).copied().collect(),
            dt: self.dt * T::from_usize_lossy(stride),
        })
    }

    /// `‖self - other‖ / ‖other‖` in discrete L²; 0 when both vanish.
    pub fn relative_l2(&self, other: &Self) -> Result<T> {
        let diff = self.axpy(-T::one(), other)?;
        let den = other.l2_norm();
        if den == T::zero() {
            return Ok(if diff.l2_norm() == T::zero() {
                T::zero()
            } else {
                T::infinity()
            });
        }
        Ok(diff.l2_norm() / den)
    }
}

/// Fractional order α. Strictly inside (0, 1) unless built with
/// [`FractionalOrder::with_classical`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FractionalOrder<T>(T);

impl<T: Real> FractionalOrder<T> {
    pub fn new(alpha: T) -> Result<Self> {
        if alpha > T::zero() && alpha < T::one() {
            Ok(Self(alpha))
        } else {
            Err(Error::Parameter(format!("order must lie in (0, 1), got {alpha}")))
        }
    }

    /// Admits α = 1, the classical limit, for operations that document it.
    pub fn with_classical(alpha: T) -> Result<Self> {
        if alpha == T::one() {
            Ok(Self(alpha))
        } else {
            Self::new(alpha)
        }
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    pub fn is_classical(self) -> bool {
        self.0 == T::one()
    }
}

/// `J^α g` on the grid of `g`, product-trapezoid rule. Accepts α = 1 (plain
/// trapezoid integration).
pub fn rl_integral<T: Real>(g: &Signal<T>, alpha: FractionalOrder<T>) -> Signal<T> {
    let a = alpha.value();
    let m = g.steps();
    let ap1 = a + T::one();
    let pow = |x: usize| T::from_usize_lossy(x).powf(ap1);
    // interior weights depend only on the lag
    let interior: Vec<T> = (0..=m)
        .map(|l| {
            if l == 0 {
                T::zero()
            } else {
                pow(l + 1) + pow(l - 1) - T::lit(2.0) * pow(l)
            }
        })
        .collect();
    let scale = g.dt().powf(a) * gamma(a + T::lit(2.0)).recip();
    let gv = g.values();
    let mut out = vec![T::zero(); m + 1];
    for k in 1..=m {
        let kf = T::from_usize_lossy(k);
        let first = pow(k - 1) - (kf - a - T::one()) * kf.powf(a);
        let mut s = first * gv[0] + gv[k];
        for j in 1..k {
            s = s + interior[k - j] * gv[j];
        }
        out[k] = scale * s;
    }
    Signal {
        values: out,
        dt: g.dt(),
    }
}

/// L1 discretisation of the Caputo derivative; at α = 1 this is the backward
/// difference.
pub fn caputo_l1<T: Real>(g: &Signal<T>, alpha: FractionalOrder<T>) -> Signal<T> {
    let a = alpha.value();
    let m = g.steps();
    let one_m = T::one() - a;
    let b: Vec<T> = (0..m)
        .map(|j| {
            if j == 0 {
                T::one()
            } else {
                T::from_usize_lossy(j + 1).powf(one_m) - T::from_usize_lossy(j).powf(one_m)
            }
        })
        .collect();
    let scale = g.dt().powf(-a) * gamma(T::lit(2.0) - a).recip();
    let gv = g.values();
    let diffs: Vec<T> = gv.windows(2).map(|w| w[1] - w[0]).collect();
    let mut out = vec![T::zero(); m + 1];
    for k in 1..=m {
        let mut s = T::zero();
        for j in 0..k {
            s = s + b[j] * diffs[k - j - 1];
        }
        out[k] = scale * s;
    }
    Signal {
        values: out,
        dt: g.dt(),
    }
}

/// Outcome of [`halpha_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct HalphaDiagnostics<T> {
    pub initial_value: T,
    /// `|g(0)|` within tolerance of zero.
    pub initial_ok: bool,
    /// The condition is binding (α ≥ 1/2) rather than advisory.
    pub required: bool,
    pub passed: bool,
    /// `‖J^α(∂^α_{L1} g) − g‖_∞ / ‖g‖_∞`, zero for the zero signal.
    pub residual: T,
}

/// Absolute tolerance on `g(0)`, scaled by `max(1, ‖g‖_∞)`.
pub const COMPAT_TOL: f64 = 1e-12;

pub fn halpha_check<T: Real>(g: &Signal<T>, alpha: FractionalOrder<T>) -> HalphaDiagnostics<T> {
    let g0 = g.values()[0];
    let norm = g.max_abs();
    let initial_ok = g0.abs() <= T::lit(COMPAT_TOL) * norm.max(T::one());
    let required = alpha.value() >= T::lit(0.5);
    let residual = if norm == T::zero() {
        T::zero()
    } else {
        let back = rl_integral(&caputo_l1(g, alpha), alpha);
        back.values()
            .iter()
            .zip(g.values())
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
            / norm
    };
    HalphaDiagnostics {
        initial_value: g0,
        initial_ok,
        required,
        passed: initial_ok || !required,
        residual,
    }
}

/// Trapezoid approximation of `(k * g)(t_n) = ∫_0^{t_n} k(t_n - s) g(s) ds`.
pub fn convolve<T: Real>(k: &Signal<T>, g: &Signal<T>) -> Result<Signal<T>> {
    if !k.same_grid(g) {
        return Err(Error::Validation("convolution operands on different grids".into()));
    }
    let (kv, gv) = (k.values(), g.values());
    let half = T::lit(0.5);
    let out = (0..kv.len())
        .map(|n| {
            if n == 0 {
                return T::zero();
            }
            let mut s = half * (kv[n] * gv[0] + kv[0] * gv[n]);
            for j in 1..n {
                s = s + kv[n - j] * gv[j];
            }
            s * k.dt()
        })
        .collect();
    Signal::new(out, k.dt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn order(a: f64) -> FractionalOrder<f64> {
        FractionalOrder::with_classical(a).unwrap()
    }

    #[test]
    fn signal_validation() {
        assert!(Signal::new(vec![0.0_f64], 0.1).is_err());
        assert!(Signal::new(vec![0.0_f64, 1.0], 0.0).is_err());
        assert!(Signal::new(vec![0.0_f64, f64::NAN], 0.1).is_err());
        assert!(FractionalOrder::new(1.0_f64).is_err());
        assert!(FractionalOrder::with_classical(1.0_f64).is_ok());
        assert!(FractionalOrder::new(0.0_f64).is_err());
    }

    #[test]
    fn integral_of_zero_and_classical_limit() {
        let z = Signal::zeros(10, 0.1_f64).unwrap();
        assert!(rl_integral(&z, order(0.4)).is_zero());
        let one = Signal::from_fn(1.0_f64, 50, |_| 1.0).unwrap();
        let j1 = rl_integral(&one, order(1.0));
        for (k, v) in j1.values().iter().enumerate() {
            assert!((v - one.time(k)).abs() <= 1e-12);
        }
    }

    #[test]
    fn integral_of_linear_is_exact() {
        // product trapezoid is exact on piecewise-linear data
        let g = Signal::from_fn(1.0_f64, 1000, |t| t).unwrap();
        let j = rl_integral(&g, order(0.5));
        assert_relative_eq!(j.values()[1000], 1.0 / gamma(2.5), max_relative = 1e-9);
    }

    #[test]
    fn caputo_of_linear() {
        let g = Signal::from_fn(1.0_f64, 2000, |t| t).unwrap();
        let d = caputo_l1(&g, order(0.5));
        assert_relative_eq!(d.values()[2000], 1.0 / gamma(1.5), max_relative = 2e-3);
        assert!(caputo_l1(&Signal::zeros(20, 0.05_f64).unwrap(), order(0.5)).is_zero());
    }

    #[test]
    fn caputo_classical_limit_is_backward_difference() {
        let m = 400;
        let g = Signal::from_fn(1.0_f64, m, |t| t * t).unwrap();
        let d = caputo_l1(&g, order(1.0));
        let dt = g.dt();
        for k in 1..=m {
            let t = g.time(k);
            assert!((d.values()[k] - 2.0 * t).abs() <= 1.01 * dt);
        }
    }

    #[test]
    fn halpha_examples() {
        let a = FractionalOrder::new(0.7_f64).unwrap();
        let sq = Signal::from_fn(1.0_f64, 1000, |t| t * t).unwrap();
        let d = halpha_check(&sq, a);
        assert!(d.passed && d.required);
        assert!(d.residual <= 1e-2, "residual {}", d.residual);

        let one = Signal::from_fn(1.0_f64, 1000, |_| 1.0).unwrap();
        assert!(!halpha_check(&one, a).passed);

        let z = halpha_check(&Signal::zeros(100, 0.01_f64).unwrap(), a);
        assert!(z.passed);
        assert_eq!(z.residual, 0.0);

        // advisory below one half
        let low = FractionalOrder::new(0.3_f64).unwrap();
        let d = halpha_check(&one, low);
        assert!(d.passed && !d.initial_ok && !d.required);
    }

    #[test]
    fn trapezoid_convolution_of_constants() {
        let one = Signal::from_fn(2.0_f64, 40, |_| 1.0).unwrap();
        let c = convolve(&one, &one).unwrap();
        for (k, v) in c.values().iter().enumerate() {
            assert_relative_eq!(*v, one.time(k), max_relative = 1e-12, epsilon = 1e-15);
        }
    }
}
