use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OrderOptions<T> {
    /// Fraction of the samples, counted from the end, used in the slope fit.
    pub window: T,
    pub min_points: usize,
}

impl<T: Real> Default for OrderOptions<T> {
    fn default() -> Self {
        Self {
            window: T::lit(0.5),
            min_points: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OrderEstimate<T> {
    pub alpha: T,
    /// Standard error of the fitted slope.
    pub uncertainty: T,
    /// `C` in `limit - K(t) ≈ C t^{-α}`.
    pub coefficient: T,
    pub limit: T,
    pub limit_estimated: bool,
    /// First time used in the fit and the number of points.
    pub window_start: T,
    pub points: usize,
    pub rms_log_residual: T,
}

struct LineFit<T> {
    slope: T,
    intercept: T,
    slope_se: T,
    rms: T,
}

fn fit_line<T: Real>(x: &[T], y: &[T]) -> LineFit<T> {
    let n = T::from_usize_lossy(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let sxx: T = x.iter().map(|v| (*v - mx) * (*v - mx)).sum();
    let sxy: T = x.iter().zip(y).map(|(a, b)| (*a - mx) * (*b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: T = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = *b - intercept - slope * *a;
            r * r
        })
        .sum();
    let dof = (n - T::lit(2.0)).max(T::one());
    LineFit {
        slope,
        intercept,
        slope_se: (ss / dof / sxx).sqrt(),
        rms: (ss / n).sqrt(),
    }
}

/// Residual of the best `L - C t^{-α}` fit for fixed α (linear in L and C).
fn profile_fit<T: Real>(t: &[T], k: &[T], alpha: T) -> (T, T, T) {
    let x: Vec<T> = t.iter().map(|v| v.powf(-alpha)).collect();
    let f = fit_line(&x, k);
    let ss: T = x
        .iter()
        .zip(k)
        .map(|(a, b)| {
            let r = *b - f.intercept - f.slope * *a;
            r * r
        })
        .sum();
    (ss, f.intercept, -f.slope)
}

/// Golden-section minimisation on `[lo, hi]`.
fn golden<T: Real>(mut lo: T, mut hi: T, iters: usize, mut f: impl FnMut(T) -> T) -> T {
    let r = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..iters {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
    }
    (lo + hi) / T::lit(2.0)
}

/// Order α from the algebraic approach `K(1, t) → limit` at large t:
/// `limit - K(1, t) ≈ C t^{-α}`. Without a supplied limit, `limit`, `C` and `α`
/// are fitted jointly on the window.
pub fn estimate_order<T: Real>(
    times: &[T],
    values: &[T],
    limit: Option<T>,
    opts: &OrderOptions<T>,
) -> Result<OrderEstimate<T>> {
    if times.len() != values.len() {
        return Err(Error::Validation("times and values differ in length".into()));
    }
    if times.iter().any(|t| !(*t > T::zero())) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Validation("times must be positive and increasing".into()));
    }
    let n = times.len();
    let take = (opts.window * T::from_usize_lossy(n))
        .ceil()
        .to_usize()
        .unwrap_or(n)
        .clamp(1, n);
    let take = take.max(opts.min_points.min(n));
    let mut start = n - take;

    let (limit, estimated) = match limit {
        Some(l) => (l, false),
        None => {
            if take < opts.min_points.max(4) {
                return Err(Error::NoDecay(format!("only {take} points in the fit window")));
            }
            let (t, k) = (&times[start..], &values[start..]);
            let a = golden(T::lit(0.005), T::lit(0.995), 80, |a| profile_fit(t, k, a).0);
            (profile_fit(t, k, a).1, true)
        }
    };

    // trailing run of positive deficits inside the window
    if let Some(last_bad) = (start..n).rev().find(|&i| !(limit - values[i] > T::zero())) {
        start = last_bad + 1;
    }
    let points = n - start;
    if points < opts.min_points.max(2) {
        return Err(Error::NoDecay(format!(
            "{points} positive deficit samples in the window, need {}",
            opts.min_points
        )));
    }
    let x: Vec<T> = times[start..].iter().map(|t| t.ln()).collect();
    let y: Vec<T> = values[start..].iter().map(|v| (limit - *v).ln()).collect();
    let f = fit_line(&x, &y);
    let alpha = -f.slope;
    if !(alpha > T::lit(1e-3)) || !(alpha < T::lit(1.5)) {
        return Err(Error::NoDecay(format!(
            "deficit slope {} gives no usable order",
            f.slope
        )));
    }
    Ok(OrderEstimate {
        alpha,
        uncertainty: f.slope_se,
        coefficient: f.intercept.exp(),
        limit,
        limit_estimated: estimated,
        window_start: times[start],
        points,
        rms_log_residual: f.rms,
    })
}

/// Refines an order estimate by minimising `Σ (model(α)_i - values_i)²` over
/// α in `[lo, hi]`, where `model` maps an order to predicted samples.
pub fn refine_order<T: Real>(values: &[T], lo: T, hi: T, model: impl Fn(T) -> Result<Vec<T>>) -> Result<T> {
    if !(lo > T::zero() && hi <= T::one() && lo < hi) {
        return Err(Error::Parameter(format!("invalid order bracket [{lo}, {hi}]")));
    }
    let mut failure = None;
    let a = golden(lo, hi, 60, |a| match model(a) {
        Ok(m) => m.iter().zip(values).map(|(p, v)| (*p - *v) * (*p - *v)).sum(),
        Err(e) => {
            failure = Some(e);
            T::infinity()
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(a),
    }
}
