//! Tridiagonal and small dense linear algebra.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Solves a general tridiagonal system with partial pivoting.
///
/// `sub[i]` couples row `i + 1` to column `i`; `sup[i]` couples row `i` to
/// column `i + 1`.
pub fn solve_tridiagonal<T: Real>(sub: &[T], diag: &[T], sup: &[T], rhs: &[T]) -> Result<Vec<T>> {
    gtsv(sub, diag, sup, rhs, false)
}

fn gtsv<T: Real>(sub: &[T], diag: &[T], sup: &[T], rhs: &[T], guard_pivots: bool) -> Result<Vec<T>> {
    let n = diag.len();
    if rhs.len() != n || (n > 0 && (sub.len() != n - 1 || sup.len() != n - 1)) {
        return Err(Error::Validation("tridiagonal band lengths inconsistent".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut dl = sub.to_vec();
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    let mut b = rhs.to_vec();
    let scale = d
        .iter()
        .chain(dl.iter())
        .chain(du.iter())
        .fold(T::zero(), |m, v| m.max(v.abs()));
    let tiny = T::epsilon() * scale.max(T::min_positive_value());
    let pivot = |v: T| -> Result<T> {
        if v != T::zero() && v.abs() > T::min_positive_value() {
            Ok(v)
        } else if guard_pivots {
            Ok(tiny)
        } else {
            Err(Error::Numeric("singular tridiagonal system".into()))
        }
    };
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            d[i] = pivot(d[i])?;
            let fact = dl[i] / d[i];
            d[i + 1] = d[i + 1] - fact * du[i];
            b[i + 1] = b[i + 1] - fact * b[i];
            dl[i] = T::zero();
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                dl[i] = du[i + 1];
                du[i + 1] = -fact * dl[i];
            } else {
                dl[i] = T::zero();
            }
            du[i] = temp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - fact * b[i + 1];
        }
    }
    d[n - 1] = pivot(d[n - 1])?;
    b[n - 1] = b[n - 1] / d[n - 1];
    if n > 1 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - dl[i] * b[i + 2]) / d[i];
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite tridiagonal solution".into()));
    }
    Ok(b)
}

/// Symmetric tridiagonal matrix stored by its diagonal and off-diagonal.
#[derive(Debug, Clone)]
pub struct SymTridiagonal<T> {
    pub diag: Vec<T>,
    pub off: Vec<T>,
}

impl<T: Real> SymTridiagonal<T> {
    pub fn new(diag: Vec<T>, off: Vec<T>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::Validation("symmetric tridiagonal shape".into()));
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: T) -> usize {
        let tiny = T::min_positive_value().sqrt();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < T::zero() {
            count += 1;
        }
        for i in 1..self.dim() {
            if q == T::zero() {
                q = tiny;
            }
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (T, T) {
        let n = self.dim();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { T::zero() };
            let right = if i + 1 < n { self.off[i].abs() } else { T::zero() };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> Result<T> {
        if k >= self.dim() {
            return Err(Error::Parameter(format!(
                "eigenvalue index {k} >= dimension {}",
                self.dim()
            )));
        }
        let (mut lo, mut hi) = self.gershgorin();
        let pad = (hi - lo).abs() * T::epsilon() + T::min_positive_value();
        lo = lo - pad;
        hi = hi + pad;
        for _ in 0..400 {
            let mid = (lo + hi) / T::lit(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= T::lit(2.0) * T::epsilon() * lo.abs().max(hi.abs()) {
                break;
            }
        }
        Ok((lo + hi) / T::lit(2.0))
    }

    /// Unit eigenvector for an (accurately known) eigenvalue by inverse iteration.
    pub fn eigenvector(&self, lambda: T) -> Result<Vec<T>> {
        let n = self.dim();
        let scale = self.diag.iter().fold(T::one(), |m, v| m.max(v.abs()));
        let shift = lambda + T::lit(4.0) * T::epsilon() * scale;
        let diag: Vec<T> = self.diag.iter().map(|&d| d - shift).collect();
        let mut v: Vec<T> = (0..n)
            .map(|i| T::one() + T::lit(0.1) * T::from_usize_lossy(i % 7) / T::lit(7.0))
            .collect();
        normalize(&mut v);
        for _ in 0..3 {
            let mut w = gtsv(&self.off, &diag, &self.off, &v, true)?;
            normalize(&mut w);
            v = w;
        }
        Ok(v)
    }
}

fn normalize<T: Real>(v: &mut [T]) {
    let norm = v.iter().map(|x| *x * *x).sum::<T>().sqrt();
    if norm > T::zero() {
        v.iter_mut().for_each(|x| *x = *x / norm);
    }
}

/// Dense row-major square matrix helper for the small systems in the fitters.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    /// Solves `A x = b` for symmetric positive definite `A` via Cholesky.
    pub fn cholesky_solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            let mut s = self.get(j, j);
            for k in 0..j {
                s = s - l[j * n + k] * l[j * n + k];
            }
            if !(s > T::zero()) {
                return Err(Error::Numeric("matrix not positive definite".into()));
            }
            let ljj = s.sqrt();
            l[j * n + j] = ljj;
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / ljj;
            }
        }
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] = y[i] - l[i * n + k] * y[k];
            }
            y[i] = y[i] / l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] = y[i] - l[k * n + i] * y[k];
            }
            y[i] = y[i] / l[i * n + i];
        }
        Ok(y)
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<T> {
        let n = self.n;
        let mut a = self.data.clone();
        for _sweep in 0..100 {
            let off: T = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i * n + j] * a[i * n + j])
                .sum();
            let diag: T = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum();
            if off <= T::epsilon() * T::epsilon() * diag {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[p * n + q];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<T> = (0..n).map(|i| a[i * n + i]).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }
}
