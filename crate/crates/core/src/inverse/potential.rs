use serde::{Deserialize, Serialize};

use super::resolvent::ResolventModel;
use crate::error::{Error, Result};
use crate::optim::{levenberg_marquardt, LmOptions};
use crate::scalar::Real;
use crate::sturm::{eigen_solve, piece_index, Potential, SpectralData};

/// Parametrisation of the unknown potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Basis {
    /// Equal-width pieces, one coefficient each.
    PiecewiseConstant { pieces: usize },
    /// `Σ_{i≤degree} c_i x^i`.
    Polynomial { degree: usize },
}

impl Basis {
    pub fn dim(self) -> usize {
        match self {
            Self::PiecewiseConstant { pieces } => pieces,
            Self::Polynomial { degree } => degree + 1,
        }
    }

    pub fn eval<T: Real>(self, c: &[T], x: T) -> T {
        match self {
            Self::PiecewiseConstant { pieces } => c[piece_index(x, pieces)],
            Self::Polynomial { .. } => c.iter().rev().fold(T::zero(), |acc, ci| acc * x + *ci),
        }
    }

    /// Moves `c` into the set where the potential is non-positive and not
    /// identically zero on `cells` grid nodes.
    fn project<T: Real>(self, c: &mut [T], cells: usize) {
        let floor = T::lit(1e-10);
        match self {
            Self::PiecewiseConstant { .. } => {
                for v in c.iter_mut() {
                    *v = v.min(T::zero());
                }
                if c.iter().all(|v| *v > -floor) {
                    c.iter_mut().for_each(|v| *v = -floor);
                }
            }
            Self::Polynomial { .. } => {
                let h = T::one() / T::from_usize_lossy(cells);
                let top = (0..=cells)
                    .map(|i| self.eval(c, h * T::from_usize_lossy(i)))
                    .fold(T::neg_infinity(), |m, v| m.max(v));
                if top > -floor {
                    c[0] = c[0] - top - floor;
                }
            }
        }
    }
}

/// Eigenvalues and norming constants to match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SpectralTarget<T> {
    pub lambdas: Vec<T>,
    pub norming: Vec<T>,
}

impl<T: Real> SpectralTarget<T> {
    pub fn from_spectral(spec: &SpectralData<T>) -> Self {
        Self {
            lambdas: spec.lambdas.clone(),
            norming: spec.norming.clone(),
        }
    }

    pub fn from_model(model: &ResolventModel<T>) -> Self {
        Self {
            lambdas: model.lambdas.clone(),
            norming: model.norming(),
        }
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PotentialOptions<T> {
    /// Grid of the trial potentials.
    pub cells: usize,
    pub refine: usize,
    /// Weight of the first-difference penalty on the coefficients.
    pub reg: T,
    /// Fits with a final objective above this are flagged non-converged.
    pub tol: T,
    pub fd_step: T,
    pub lm: LmOptions<T>,
}

impl<T: Real> Default for PotentialOptions<T> {
    fn default() -> Self {
        Self {
            cells: 200,
            refine: 2,
            reg: T::zero(),
            tol: T::lit(1e-8),
            fd_step: T::lit(1e-6),
            lm: LmOptions {
                max_iter: 100,
                rel_decrease: T::lit(1e-12),
                ..LmOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PotentialFit<T> {
    pub potential: Potential<T>,
    pub basis: Basis,
    pub coefficients: Vec<T>,
    /// `Σ (Δλ/λ)² + (Δρ/ρ)² + reg ‖Dc‖²` at the returned point.
    pub objective: T,
    /// Objective after every accepted iteration.
    pub history: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// Per-mode relative residuals `(Δλ/λ, Δρ/ρ)`.
    pub residuals: Vec<(T, T)>,
}

struct Setup<'a, T> {
    target: &'a SpectralTarget<T>,
    basis: Basis,
    opts: &'a PotentialOptions<T>,
}

impl<'a, T: Real> Setup<'a, T> {
    fn potential(&self, c: &[T]) -> Result<Potential<T>> {
        Potential::from_fn(self.opts.cells, |x| self.basis.eval(c, x))
    }

    fn residual(&self, c: &[T]) -> Result<Vec<T>> {
        let spec = eigen_solve(&self.potential(c)?, self.target.len(), self.opts.refine)?;
        let mut r = Vec::with_capacity(2 * self.target.len() + c.len());
        for n in 0..self.target.len() {
            r.push((spec.lambdas[n] - self.target.lambdas[n]) / self.target.lambdas[n]);
            r.push((spec.norming[n] - self.target.norming[n]) / self.target.norming[n]);
        }
        let s = self.opts.reg.sqrt();
        for w in c.windows(2) {
            r.push(s * (w[1] - w[0]));
        }
        Ok(r)
    }

    fn jacobian(&self, c: &[T], r: &[T]) -> Result<Vec<Vec<T>>> {
        let mut cols = Vec::with_capacity(c.len());
        for i in 0..c.len() {
            let h = self.opts.fd_step * c[i].abs().max(T::one());
            let mut cp = c.to_vec();
            cp[i] = cp[i] + h;
            let mut probe = cp.clone();
            self.basis.project(&mut probe, self.opts.cells);
            let (point, step) = if probe == cp {
                (cp, h)
            } else {
                let mut cm = c.to_vec();
                cm[i] = cm[i] - h;
                (cm, -h)
            };
            let rp = self.residual(&point)?;
            cols.push(rp.iter().zip(r).map(|(a, b)| (*a - *b) / step).collect::<Vec<_>>());
        }
        Ok((0..r.len()).map(|k| cols.iter().map(|col| col[k]).collect()).collect())
    }
}

/// Spectral-matching reconstruction of a non-positive potential.
pub fn recover_potential<T: Real>(
    target: &SpectralTarget<T>,
    basis: Basis,
    opts: &PotentialOptions<T>,
) -> Result<PotentialFit<T>> {
    if target.len() < 2 || target.norming.len() != target.len() {
        return Err(Error::Parameter("need at least two target eigenpairs".into()));
    }
    if basis.dim() == 0 || basis.dim() > 2 * target.len() {
        return Err(Error::Parameter(format!(
            "{} basis coefficients exceed the {} data values",
            basis.dim(),
            2 * target.len()
        )));
    }
    if target.lambdas.iter().chain(&target.norming).any(|v| !(*v > T::zero())) {
        return Err(Error::Validation(
            "target eigenvalues and norming constants must be positive".into(),
        ));
    }
    let setup = Setup { target, basis, opts };

    // constant start from the Weyl shift λ_n - ((n-1)π)²
    let mut shifts: Vec<T> = target
        .lambdas
        .iter()
        .enumerate()
        .map(|(i, l)| *l - (T::from_usize_lossy(i) * T::PI()).powi(2))
        .collect();
    shifts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mean = shifts[shifts.len() / 2].max(T::lit(1e-3));
    let mut c0 = vec![T::zero(); basis.dim()];
    match basis {
        Basis::PiecewiseConstant { .. } => c0.iter_mut().for_each(|v| *v = -mean),
        Basis::Polynomial { .. } => c0[0] = -mean,
    }

    let out = levenberg_marquardt(
        c0,
        |c| setup.residual(c),
        |c, r| setup.jacobian(c, r),
        |c| basis.project(c, opts.cells),
        &opts.lm,
    )?;
    let residual = setup.residual(&out.x)?;
    let objective = residual.iter().map(|v| *v * *v).sum::<T>();
    let residuals = residual.chunks(2).take(target.len()).map(|p| (p[0], p[1])).collect();
    Ok(PotentialFit {
        potential: setup.potential(&out.x)?,
        basis,
        coefficients: out.x,
        objective,
        history: out.history.iter().map(|c| *c * T::lit(2.0)).collect(),
        iterations: out.iterations,
        converged: objective <= opts.tol,
        residuals,
    })
}
