use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fraccalc::{convolve, Signal};
use crate::scalar::Real;

/// Default relative level below which a sample counts as zero.
pub const SUPPORT_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SupportSplit<T> {
    pub t1: T,
    pub t2: T,
    pub threshold: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Vanishing,
    NonVanishing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TitchmarshReport<T> {
    pub split: SupportSplit<T>,
    pub verdict: Verdict,
    /// `‖k * g‖_∞ / (T ‖k‖_∞ ‖g‖_∞)`.
    pub relative_convolution: T,
    /// For a vanishing convolution: whether `t1 + t2 ≥ T - 2 dt` holds.
    pub consistent: bool,
}

/// Last grid time before `|h|` first exceeds `threshold · ‖h‖_∞` on two
/// consecutive samples; the horizon if that never happens.
pub fn support_infimum<T: Real>(h: &Signal<T>, threshold: T) -> T {
    let level = threshold * h.max_abs();
    let v = h.values();
    if h.max_abs() == T::zero() {
        return h.horizon();
    }
    for k in 0..v.len() - 1 {
        if v[k].abs() > level && v[k + 1].abs() > level {
            return h.time(k.saturating_sub(1));
        }
    }
    h.horizon()
}

/// Checks the discrete form of the Titchmarsh convolution theorem on `(0, T)`.
pub fn titchmarsh_check<T: Real>(k: &Signal<T>, g: &Signal<T>, conv_tol: T) -> Result<TitchmarshReport<T>> {
    let threshold = T::lit(SUPPORT_THRESHOLD);
    let conv = convolve(k, g)?;
    let scale = k.horizon() * k.max_abs() * g.max_abs();
    let rel = if scale == T::zero() {
        T::zero()
    } else {
        conv.max_abs() / scale
    };
    let split = SupportSplit {
        t1: support_infimum(k, threshold),
        t2: support_infimum(g, threshold),
        threshold,
    };
    let verdict = if rel <= conv_tol {
        Verdict::Vanishing
    } else {
        Verdict::NonVanishing
    };
    let consistent = match verdict {
        Verdict::Vanishing => split.t1 + split.t2 >= k.horizon() - T::lit(2.0) * k.dt(),
        Verdict::NonVanishing => true,
    };
    Ok(TitchmarshReport {
        split,
        verdict,
        relative_convolution: rel,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infimum_examples() {
        let z = Signal::zeros(100, 0.01_f64).unwrap();
        assert_eq!(support_infimum(&z, 1e-6), 1.0);
        let h = Signal::from_fn(1.0_f64, 100, |t| (t - 0.3).max(0.0)).unwrap();
        assert!((support_infimum(&h, 1e-6) - 0.3).abs() <= 0.01 + 1e-12);
        let ramp = Signal::from_fn(1.0_f64, 200, |t| if t < 0.2 { 1e-12 } else { t - 0.2 + 1e-12 }).unwrap();
        assert!((support_infimum(&ramp, 1e-6) - 0.2).abs() <= 0.005 + 1e-12);
    }

    #[test]
    fn constructed_supports() {
        let k = Signal::from_fn(1.0_f64, 200, |t| (t - 0.3).max(0.0)).unwrap();
        let g = Signal::from_fn(1.0_f64, 200, |t| (t - 0.8).max(0.0).powi(2)).unwrap();
        let r = titchmarsh_check(&k, &g, 1e-10).unwrap();
        assert_eq!(r.verdict, Verdict::Vanishing);
        assert!(r.consistent);
        assert!(r.split.t1 + r.split.t2 >= 1.0 - 0.01);

        let bump = Signal::from_fn(1.0_f64, 200, |t| (-(t - 0.1).powi(2) / 0.001).exp()).unwrap();
        let r = titchmarsh_check(&bump, &bump, 1e-10).unwrap();
        assert_eq!(r.verdict, Verdict::NonVanishing);

        let zero = Signal::zeros(200, 0.005_f64).unwrap();
        let r = titchmarsh_check(&k, &zero, 1e-10).unwrap();
        assert_eq!(r.verdict, Verdict::Vanishing);
        assert_eq!(r.split.t2, 1.0);
        assert!(r.consistent);
    }
}
