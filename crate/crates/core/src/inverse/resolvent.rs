use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlf::ml_kernel_integral;
use crate::scalar::Real;
use crate::sturm::SpectralData;

/// Distance below which an evaluation point counts as sitting on a pole.
pub const POLE_TOL: f64 = 1e-9;

/// Default node count of the circle quadrature.
pub const CONTOUR_NODES: usize = 128;

/// Finite sum `Σ w_n / (η + λ_n)` with `w_n = 1/(λ_n ρ_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ResolventModel<T> {
    pub lambdas: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> ResolventModel<T> {
    pub fn new(lambdas: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if lambdas.is_empty() || lambdas.len() != weights.len() {
            return Err(Error::Validation("model needs matching, non-empty term lists".into()));
        }
        if !(lambdas[0] > T::zero()) || lambdas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Validation("model poles must be positive and increasing".into()));
        }
        if weights.iter().any(|w| !(*w > T::zero()) || !w.is_finite()) {
            return Err(Error::Validation("model weights must be positive".into()));
        }
        Ok(Self { lambdas, weights })
    }

    pub fn from_spectral(spec: &SpectralData<T>) -> Result<Self> {
        Self::new(spec.lambdas.clone(), spec.weights())
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// `Σ w_n`, the `t → ∞` limit of the modelled kernel.
    pub fn total_weight(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// Norming constants `ρ_n = 1/(λ_n w_n)`.
    pub fn norming(&self) -> Vec<T> {
        self.lambdas
            .iter()
            .zip(&self.weights)
            .map(|(l, w)| (*l * *w).recip())
            .collect()
    }

    /// `Σ w_n (1 - E_{α,1}(-λ_n t^α))`, the kernel at x = 1 this model describes.
    pub fn kernel_at(&self, alpha: T, t: T) -> Result<T> {
        let mut s = T::zero();
        for (l, w) in self.lambdas.iter().zip(&self.weights) {
            s = s + *w * *l * ml_kernel_integral(alpha, *l, t)?;
        }
        Ok(s)
    }
}

pub fn resolvent_eval<T: Real>(model: &ResolventModel<T>, eta: T) -> Result<T> {
    let mut s = T::zero();
    for (l, w) in model.lambdas.iter().zip(&model.weights) {
        let d = eta + *l;
        if d.abs() <= T::lit(POLE_TOL) {
            return Err(Error::PoleProximity {
                pole: (-*l).to_f64_lossy(),
                distance: d.abs().to_f64_lossy(),
            });
        }
        s = s + *w / d;
    }
    Ok(s)
}

pub fn resolvent_eval_complex<T: Real>(model: &ResolventModel<T>, z: Complex<T>) -> Result<Complex<T>> {
    let mut s = Complex::new(T::zero(), T::zero());
    for (l, w) in model.lambdas.iter().zip(&model.weights) {
        let d = z + *l;
        if d.norm() <= T::lit(POLE_TOL) {
            return Err(Error::PoleProximity {
                pole: (-*l).to_f64_lossy(),
                distance: d.norm().to_f64_lossy(),
            });
        }
        s = s + Complex::new(*w, T::zero()) / d;
    }
    Ok(s)
}

/// `(2πi)⁻¹ ∮ R(η) dη` over the circle `|η - center| = radius`, by the
/// trapezoid rule on `nodes` equispaced points.
pub fn contour_integral<T: Real>(model: &ResolventModel<T>, center: T, radius: T, nodes: usize) -> Result<Complex<T>> {
    if !(radius > T::zero()) || nodes < 8 {
        return Err(Error::Validation(
            "contour needs a positive radius and at least 8 nodes".into(),
        ));
    }
    for l in &model.lambdas {
        if ((-*l - center).abs() - radius).abs() <= T::lit(POLE_TOL) {
            return Err(Error::Validation(format!("pole {} lies on the contour", -*l)));
        }
    }
    let k = T::from_usize_lossy(nodes);
    let mut s = Complex::new(T::zero(), T::zero());
    for j in 0..nodes {
        let theta = T::TAU() * T::from_usize_lossy(j) / k;
        let e = Complex::new(theta.cos(), theta.sin());
        let z = Complex::new(center, T::zero()) + e * radius;
        s = s + resolvent_eval_complex(model, z)? * e * radius;
    }
    Ok(s / k)
}

/// Residue of the model at `-λ_m` (`m` is 1-based) from a circle of `radius`.
pub fn residue_at<T: Real>(model: &ResolventModel<T>, m: usize, radius: T) -> Result<Complex<T>> {
    if m == 0 || m > model.len() {
        return Err(Error::Parameter(format!("mode index {m} outside 1..={}", model.len())));
    }
    let i = m - 1;
    let half = T::lit(0.5);
    let mut gap = T::infinity();
    if i > 0 {
        gap = gap.min(model.lambdas[i] - model.lambdas[i - 1]);
    }
    if i + 1 < model.len() {
        gap = gap.min(model.lambdas[i + 1] - model.lambdas[i]);
    }
    if !(radius > T::zero()) || radius >= half * gap {
        return Err(Error::Validation(format!(
            "radius {radius} must be positive and below half the pole gap {}",
            half * gap
        )));
    }
    contour_integral(model, -model.lambdas[i], radius, CONTOUR_NODES)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> ResolventModel<f64> {
        ResolventModel::new(vec![1.0, 4.0], vec![1.0, 0.5]).unwrap()
    }

    #[test]
    fn evaluation() {
        let one = ResolventModel::new(vec![1.0_f64], vec![1.0]).unwrap();
        assert_eq!(resolvent_eval(&one, 1.0).unwrap(), 0.5);
        assert_eq!(resolvent_eval(&two(), 0.0).unwrap(), 1.125);
        let big = resolvent_eval(&two(), 1e6).unwrap();
        assert!((big * 1e6 / 1.5 - 1.0).abs() < 1e-5);
        assert!(matches!(
            resolvent_eval(&two(), -4.0 + 1e-12),
            Err(Error::PoleProximity { .. })
        ));
    }

    #[test]
    fn residues() {
        let one = ResolventModel::new(vec![1.0_f64], vec![1.0]).unwrap();
        assert!((residue_at(&one, 1, 0.5).unwrap().re - 1.0).abs() < 1e-10);
        let r = residue_at(&two(), 2, 1.0).unwrap();
        assert!((r.re - 0.5).abs() < 1e-8 && r.im.abs() < 1e-8);
        assert!((residue_at(&two(), 1, 1.2).unwrap().re - 1.0).abs() < 1e-8);
        let empty = contour_integral(&two(), -10.0, 1.0, CONTOUR_NODES).unwrap();
        assert!(empty.norm() < 1e-10);
        assert!(residue_at(&two(), 1, 2.0).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(ResolventModel::new(vec![2.0_f64, 1.0], vec![1.0, 1.0]).is_err());
        assert!(ResolventModel::new(vec![1.0_f64], vec![0.0]).is_err());
    }
}
