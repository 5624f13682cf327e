//! Projected Levenberg–Marquardt for the small least-squares fits.

use crate::error::Result;
use crate::linalg::Dense;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct LmOptions<T> {
    pub max_iter: usize,
    /// Stop once an accepted step lowers the cost by less than this fraction.
    pub rel_decrease: T,
    /// Stop once the cost falls below this value.
    pub abs_cost: T,
    pub initial_damping: T,
}

impl<T: Real> Default for LmOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 200,
            rel_decrease: T::lit(1e-14),
            abs_cost: T::lit(1e-30),
            initial_damping: T::lit(1e-3),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome<T> {
    pub x: Vec<T>,
    pub cost: T,
    /// Cost after every accepted iteration, starting with the initial point.
    pub history: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// `JᵀJ` at the final point.
    pub normal_matrix: Dense<T>,
}

fn cost<T: Real>(r: &[T]) -> T {
    r.iter().map(|v| *v * *v).sum::<T>() * T::lit(0.5)
}

/// Minimises `½‖r(x)‖²`. `jacobian(x, r)` returns rows `∂r_i/∂x`. `project`
/// maps trial points back into the feasible set. Trial points where
/// `residual` fails are treated as rejected steps.
pub fn levenberg_marquardt<T: Real>(
    x0: Vec<T>,
    mut residual: impl FnMut(&[T]) -> Result<Vec<T>>,
    mut jacobian: impl FnMut(&[T], &[T]) -> Result<Vec<Vec<T>>>,
    project: impl Fn(&mut [T]),
    opts: &LmOptions<T>,
) -> Result<LmOutcome<T>> {
    let n = x0.len();
    let mut x = x0;
    project(&mut x);
    let mut r = residual(&x)?;
    let mut c = cost(&r);
    let mut history = vec![c];
    let mut mu = opts.initial_damping;
    let mut converged = false;
    let mut iterations = 0;
    let mut jtj = Dense::zeros(n);
    'outer: while iterations < opts.max_iter {
        iterations += 1;
        if c <= opts.abs_cost {
            converged = true;
            break;
        }
        let jac = jacobian(&x, &r)?;
        jtj = Dense::zeros(n);
        let mut grad = vec![T::zero(); n];
        for (row, ri) in jac.iter().zip(&r) {
            for a in 0..n {
                grad[a] = grad[a] + row[a] * *ri;
                for b in 0..=a {
                    let v = jtj.get(a, b) + row[a] * row[b];
                    jtj.set(a, b, v);
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                let v = jtj.get(a, b);
                jtj.set(b, a, v);
            }
        }
        let scale = (0..n).fold(T::zero(), |m, a| m.max(jtj.get(a, a)));
        if scale == T::zero() {
            converged = true;
            break;
        }
        loop {
            let mut damped = jtj.clone();
            for a in 0..n {
                let d = jtj.get(a, a).max(T::epsilon() * scale);
                damped.set(a, a, jtj.get(a, a) + mu * d);
            }
            let rhs: Vec<T> = grad.iter().map(|g| -*g).collect();
            let step = match damped.cholesky_solve(&rhs) {
                Ok(s) => s,
                Err(_) => {
                    mu = mu * T::lit(10.0);
                    if mu > T::lit(1e16) {
                        break 'outer;
                    }
                    continue;
                }
            };
            let mut trial: Vec<T> = x.iter().zip(&step).map(|(a, b)| *a + *b).collect();
            project(&mut trial);
            let moved = trial
                .iter()
                .zip(&x)
                .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs() / (T::one() + b.abs())));
            if moved <= T::epsilon() * T::lit(4.0) {
                converged = true;
                break 'outer;
            }
            if let Ok(tr) = residual(&trial) {
                let tc = cost(&tr);
                if tc.is_finite() && tc < c {
                    let decrease = (c - tc) / c;
                    x = trial;
                    r = tr;
                    c = tc;
                    history.push(c);
                    mu = (mu * T::lit(0.3)).max(T::lit(1e-15));
                    if decrease < opts.rel_decrease {
                        converged = true;
                        break 'outer;
                    }
                    break;
                }
            }
            mu = mu * T::lit(10.0);
            if mu > T::lit(1e16) {
                converged = true;
                break 'outer;
            }
        }
    }
    Ok(LmOutcome {
        x,
        cost: c,
        history,
        iterations,
        converged,
        normal_matrix: jtj,
    })
}
