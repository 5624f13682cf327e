//! Gamma function family on the real line (Lanczos, g = 7, n = 9).

use crate::scalar::Real;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Distance below which an argument is treated as a pole of Γ.
pub const POLE_TOL: f64 = 1e-12;

/// sin(πx) with argument reduction, exact zeros at the integers.
pub fn sin_pi<T: Real>(x: T) -> T {
    let n = x.round();
    let r = x - n;
    let s = (T::PI() * r).sin();
    let odd = (n / T::lit(2.0)).fract() != T::zero();
    if odd {
        -s
    } else {
        s
    }
}

/// Returns `true` when `x` is within [`POLE_TOL`] of 0, -1, -2, ...
pub fn is_gamma_pole<T: Real>(x: T) -> bool {
    x <= T::lit(POLE_TOL) && (x - x.round()).abs() <= T::lit(POLE_TOL)
}

fn lanczos_sum<T: Real>(xm1: T) -> T {
    let mut a = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a = a + T::lit(c) / (xm1 + T::from_usize_lossy(i));
    }
    a
}

/// Γ(x) for real x away from the poles.
pub fn gamma<T: Real>(x: T) -> T {
    if x < T::lit(0.5) {
        if is_gamma_pole(x) {
            return T::nan();
        }
        return T::PI() / (sin_pi(x) * gamma(T::one() - x));
    }
    if x > T::lit(171.0) {
        return T::infinity();
    }
    let xm1 = x - T::one();
    let t = xm1 + T::lit(LANCZOS_G + 0.5);
    // split the power to delay overflow near the top of the range
    let half = t.powf((xm1 + T::lit(0.5)) / T::lit(2.0));
    (T::TAU()).sqrt() * half * (half * (-t).exp()) * lanczos_sum(xm1)
}

/// ln|Γ(x)|.
pub fn ln_gamma<T: Real>(x: T) -> T {
    if x < T::lit(0.5) {
        if is_gamma_pole(x) {
            return T::infinity();
        }
        return (T::PI() / sin_pi(x).abs()).ln() - ln_gamma(T::one() - x);
    }
    let xm1 = x - T::one();
    let t = xm1 + T::lit(LANCZOS_G + 0.5);
    T::lit(0.5) * T::TAU().ln() + (xm1 + T::lit(0.5)) * t.ln() - t + lanczos_sum(xm1).ln()
}

/// 1/Γ(x), entire; exactly zero at (and within [`POLE_TOL`] of) the poles of Γ.
pub fn rgamma<T: Real>(x: T) -> T {
    if is_gamma_pole(x) {
        return T::zero();
    }
    if x > T::lit(170.0) {
        return (-ln_gamma(x)).exp();
    }
    if x < T::lit(-170.0) {
        // reflection: 1/Γ(x) = sin(πx) Γ(1-x) / π, and Γ(1-x) overflows here
        let s = sin_pi(x);
        return s.signum() * (s.abs().ln() + ln_gamma(T::one() - x) - T::PI().ln()).exp();
    }
    T::one() / gamma(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_known_values() {
        assert_relative_eq!(gamma(0.5_f64), std::f64::consts::PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma(5.0_f64), 24.0, max_relative = 1e-14);
        assert_relative_eq!(gamma(1.5_f64), 0.886_226_925_452_758, max_relative = 1e-14);
        // Γ(-0.5) = -2√π
        assert_relative_eq!(
            gamma(-0.5_f64),
            -2.0 * std::f64::consts::PI.sqrt(),
            max_relative = 1e-14
        );
        assert_relative_eq!(gamma(0.3_f64), 2.991_568_987_687_590_6, max_relative = 1e-14);
    }

    #[test]
    fn reciprocal_gamma_vanishes_at_poles() {
        assert_eq!(rgamma(0.0_f64), 0.0);
        assert_eq!(rgamma(-3.0_f64), 0.0);
        assert_eq!(rgamma(-2.0 + 1e-13_f64), 0.0);
        assert!(rgamma(-2.0 + 1e-6_f64).abs() > 0.0);
    }

    #[test]
    fn ln_gamma_large_argument() {
        // ln Γ(200) = ln(199!)
        let exact: f64 = (1..200).map(|k| (k as f64).ln()).sum();
        assert_relative_eq!(ln_gamma(200.0_f64), exact, max_relative = 1e-13);
        assert_relative_eq!(rgamma(200.0_f64), (-exact).exp(), max_relative = 1e-11);
    }

    #[test]
    fn sin_pi_exact_at_integers() {
        assert_eq!(sin_pi(3.0_f64), 0.0);
        assert_relative_eq!(sin_pi(2.5_f64), 1.0);
        assert_relative_eq!(sin_pi(-0.5_f64), -1.0);
    }

    #[test]
    fn gamma_works_in_single_precision() {
        assert_relative_eq!(gamma(4.0_f32), 6.0, max_relative = 1e-5);
    }
}
