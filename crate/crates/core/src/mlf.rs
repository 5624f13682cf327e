//! Two-parameter Mittag-Leffler function on the negative real axis.
//!
//! `E_{a,b}(z) = Σ_k z^k / Γ(a k + b)`. Three evaluation routes are combined:
//!
//! * the Taylor series (compensated) for `|z| ≤ r_switch`, accepted only when
//!   the cancellation factor `Σ|term| / |sum|` is small;
//! * the asymptotic expansion `-Σ_{k≥1} z^{-k} / Γ(b - a k)` for `z ≤ -z_big`,
//!   accepted only when it converges to machine precision;
//! * otherwise, inversion of the Laplace transform `s^{a-b} / (s^a - z)` along a
//!   Hankel path made of a unit circle around the origin and both banks of the
//!   negative real axis, integrated by adaptive Gauss–Kronrod.
//!
//! For `0 < a < 1` the transform has no poles on the principal sheet, so the
//! Hankel path is valid for every `b > 0`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::quad;
use crate::scalar::{CompensatedSum, Real};
use crate::special::{ln_gamma, rgamma};

/// Route-switching thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlConfig<T> {
    /// Largest `|z|` for which the Taylor series is attempted.
    pub r_switch: T,
    /// Smallest `-z` for which the asymptotic expansion is attempted.
    pub z_big: T,
}

impl<T: Real> Default for MlConfig<T> {
    fn default() -> Self {
        Self {
            r_switch: T::lit(5.0),
            z_big: T::lit(50.0),
        }
    }
}

/// A validated evaluation request for `E_{gamma1, gamma2}(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlQuery<T> {
    pub gamma1: T,
    pub gamma2: T,
    pub z: T,
}

impl<T: Real> MlQuery<T> {
    pub fn new(gamma1: T, gamma2: T, z: T) -> Result<Self> {
        if !(gamma1 > T::zero()) || !(gamma2 > T::zero()) || !gamma1.is_finite() || !gamma2.is_finite() {
            return Err(Error::Parameter(format!(
                "Mittag-Leffler parameters must be positive, got ({gamma1}, {gamma2})"
            )));
        }
        if !z.is_finite() {
            return Err(Error::Domain(format!("non-finite argument {z}")));
        }
        if gamma1 < T::one() && z > T::zero() {
            return Err(Error::Domain(format!(
                "z = {z} > 0 with gamma1 = {gamma1} < 1 is outside the supported range"
            )));
        }
        Ok(Self { gamma1, gamma2, z })
    }
}

/// Which route produced a value; exposed for diagnostics and tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlRoute {
    Exact,
    Series,
    Asymptotic,
    Hankel,
    Recurrence,
}

pub fn ml_eval<T: Real>(q: &MlQuery<T>) -> Result<T> {
    ml_eval_with(q, &MlConfig::default()).map(|(v, _)| v)
}

/// Evaluates the query with explicit thresholds, reporting the route taken.
pub fn ml_eval_with<T: Real>(q: &MlQuery<T>, cfg: &MlConfig<T>) -> Result<(T, MlRoute)> {
    let (a, b, z) = (q.gamma1, q.gamma2, q.z);
    if a == T::one() && b == T::one() {
        return Ok((z.exp(), MlRoute::Exact));
    }
    if z == T::zero() {
        return Ok((rgamma(b), MlRoute::Exact));
    }
    if a >= T::one() {
        return classical(a, b, z, cfg);
    }
    if z.abs() <= cfg.r_switch {
        if let Some(v) = series(a, b, z) {
            return Ok((v, MlRoute::Series));
        }
    }
    if -z >= cfg.z_big {
        if let Some(v) = asymptotic(a, b, z) {
            return Ok((v, MlRoute::Asymptotic));
        }
    }
    Ok((hankel(a, b, -z), MlRoute::Hankel))
}

/// Convenience wrapper: validates and evaluates with default thresholds.
pub fn mittag_leffler<T: Real>(gamma1: T, gamma2: T, z: T) -> Result<T> {
    ml_eval(&MlQuery::new(gamma1, gamma2, z)?)
}

/// `∫_0^t s^{a-1} E_{a,a}(-λ s^a) ds = (1 - E_{a,1}(-λ t^a)) / λ`.
///
/// For `λ t^a ≤ 1` the equivalent form `t^a E_{a,a+1}(-λ t^a)` is used to avoid
/// cancellation in `1 - E`.
pub fn ml_kernel_integral<T: Real>(alpha: T, lambda: T, t: T) -> Result<T> {
    check_order(alpha)?;
    if !(lambda > T::zero()) {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    if !(t >= T::zero()) {
        return Err(Error::Parameter(format!("t must be non-negative, got {t}")));
    }
    if t == T::zero() {
        return Ok(T::zero());
    }
    let ta = t.powf(alpha);
    let y = lambda * ta;
    if !y.is_finite() {
        return Ok(T::one() / lambda);
    }
    if y <= T::one() {
        Ok(ta * mittag_leffler(alpha, alpha + T::one(), -y)?)
    } else {
        Ok((T::one() - mittag_leffler(alpha, T::one(), -y)?) / lambda)
    }
}

/// `∫_0^t ∫_0^τ s^{a-1} E_{a,a}(-λ s^a) ds dτ = t^{a+1} E_{a,a+2}(-λ t^a)`.
pub fn ml_kernel_double_integral<T: Real>(alpha: T, lambda: T, t: T) -> Result<T> {
    check_order(alpha)?;
    if !(lambda > T::zero()) {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    if t == T::zero() {
        return Ok(T::zero());
    }
    let ta = t.powf(alpha);
    Ok(ta * t * mittag_leffler(alpha, alpha + T::lit(2.0), -lambda * ta)?)
}

/// Laplace transform of `t ↦ E_{a,1}(-λ t^a)` at real `ζ > 0`.
pub fn ml_laplace<T: Real>(alpha: T, lambda: T, zeta: T) -> Result<T> {
    check_order(alpha)?;
    if !(lambda > T::zero()) || !(zeta > T::zero()) {
        return Err(Error::Parameter(format!(
            "lambda and zeta must be positive, got ({lambda}, {zeta})"
        )));
    }
    Ok(zeta.powf(alpha - T::one()) / (zeta.powf(alpha) + lambda))
}

pub(crate) fn check_order<T: Real>(alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha <= T::one() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("order must lie in (0, 1], got {alpha}")))
    }
}

fn series_term<T: Real>(a: T, b: T, z: T, k: usize) -> T {
    let arg = a * T::from_usize_lossy(k) + b;
    let kf = T::from_usize_lossy(k);
    let log_mag = kf * z.abs().ln();
    let mag = if arg < T::lit(160.0) && log_mag < T::lit(600.0) {
        z.abs().powi(k as i32) * rgamma(arg)
    } else {
        (log_mag - ln_gamma(arg)).exp()
    };
    if z < T::zero() && k % 2 == 1 {
        -mag
    } else {
        mag
    }
}

/// Taylor series; `None` when cancellation would cost more than ~3 digits.
fn series<T: Real>(a: T, b: T, z: T) -> Option<T> {
    let mut sum = CompensatedSum::new();
    let mut abs_sum = T::zero();
    let mut small_run = 0;
    for k in 0..4000 {
        let t = series_term(a, b, z, k);
        if !t.is_finite() {
            return None;
        }
        sum.add(t);
        abs_sum = abs_sum + t.abs();
        if t.abs() <= T::lit(0.25) * T::epsilon() * sum.value().abs() {
            small_run += 1;
            if small_run >= 3 {
                let s = sum.value();
                return (abs_sum <= T::lit(1e3) * s.abs()).then_some(s);
            }
        } else {
            small_run = 0;
        }
    }
    None
}

/// Asymptotic expansion for large negative z; `None` unless it converges.
fn asymptotic<T: Real>(a: T, b: T, z: T) -> Option<T> {
    let mut sum = CompensatedSum::new();
    let mut last = T::infinity();
    let mut zero_run = 0;
    let inv = T::one() / z;
    let mut pow = T::one();
    let max_zero_run = (T::lit(3.0) / a).ceil().to_usize().unwrap_or(100) + 3;
    for k in 1..400 {
        pow = pow * inv;
        let r = rgamma(b - a * T::from_usize_lossy(k));
        if r == T::zero() {
            zero_run += 1;
            if zero_run > max_zero_run {
                return Some(sum.value());
            }
            continue;
        }
        zero_run = 0;
        let t = -pow * r;
        if !t.is_finite() || t.abs() > last {
            return None;
        }
        sum.add(t);
        last = t.abs();
        if t.abs() <= T::lit(0.25) * T::epsilon() * sum.value().abs() {
            return Some(sum.value());
        }
    }
    None
}

/// Hankel-path inversion of `s^{a-b}/(s^a + x)` for `x = -z > 0`, `0 < a < 1`.
fn hankel<T: Real>(a: T, b: T, x: T) -> T {
    let pi = T::PI();
    let radius = T::one();
    let sin_b = (pi * b).sin();
    let sin_ab = (pi * (a - b)).sin();
    let (cos_a, sin_a) = ((pi * a).cos(), (pi * a).sin());
    let ray = |r: T| {
        let ra = r.powf(a);
        let re = ra * cos_a + x;
        let im = ra * sin_a;
        (-r).exp() * r.powf(a - b) * (ra * sin_b - x * sin_ab) / (re * re + im * im)
    };
    let circle = |theta: T| {
        let s = Complex::from_polar(radius, theta);
        let num = Complex::from_polar(radius.powf(T::one() + a - b), (T::one() + a - b) * theta);
        let den = Complex::from_polar(radius.powf(a), a * theta) + Complex::new(x, T::zero());
        (s.exp() * num / den).re
    };
    let r_max = radius + T::lit(60.0);
    let mut pts = vec![radius];
    let peak = x.powf(T::one() / a);
    if peak > radius && peak < r_max {
        pts.push(peak);
    }
    pts.push(r_max);
    let tol = T::epsilon() * T::lit(16.0);
    let tiny = T::min_positive_value().sqrt();
    let rays = quad::integrate(ray, &pts, tiny, tol, 2000).value;
    let arc = quad::integrate(circle, &[T::zero(), pi / T::lit(2.0), pi], tiny, tol, 2000).value;
    (rays + arc) / pi
}

/// Routes for `a ≥ 1`: exact recurrences for `a = 1` and integer `b`,
/// otherwise the guarded series or asymptotic expansion.
fn classical<T: Real>(a: T, b: T, z: T, cfg: &MlConfig<T>) -> Result<(T, MlRoute)> {
    let integer_b = b.fract() == T::zero() && b >= T::lit(2.0) && b <= T::lit(64.0);
    if a == T::one() && integer_b && z.abs() > T::one() {
        // E_{1,2}(z) = expm1(z)/z, E_{1,m+1}(z) = (E_{1,m}(z) - 1/Γ(m)) / z
        let m = b.to_usize().unwrap_or(2);
        let mut e = z.exp_m1() / z;
        for j in 2..m {
            e = (e - rgamma(T::from_usize_lossy(j))) / z;
        }
        return Ok((e, MlRoute::Recurrence));
    }
    if z.abs() <= cfg.r_switch || z > T::zero() || a > T::one() {
        if let Some(v) = series(a, b, z) {
            return Ok((v, MlRoute::Series));
        }
    }
    if -z >= cfg.z_big {
        if let Some(v) = asymptotic(a, b, z) {
            return Ok((v, MlRoute::Asymptotic));
        }
    }
    Err(Error::Domain(format!(
        "E_{{{a},{b}}}({z}) is outside the supported evaluation range"
    )))
}
