//! Implicit L1 finite-difference solver, independent of the spectral path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{Endpoint, SolutionField};
use crate::fraccalc::{FractionalOrder, Signal, COMPAT_TOL};
use crate::linalg::solve_tridiagonal;
use crate::scalar::Real;
use crate::special::gamma;
use crate::sturm::Potential;

/// Solves `∂^α u = u_xx + p u`, `u_x(0,t) = 0`, `u_x(1,t) = g(t)`, `u(·,0) = 0`
/// on `cells` uniform cells with the time grid of `g`.
pub fn solve_l1<T: Real>(
    p: &Potential<T>,
    alpha: FractionalOrder<T>,
    g: &Signal<T>,
    cells: usize,
) -> Result<SolutionField<T>> {
    if cells < 2 {
        return Err(Error::Parameter(format!("need at least 2 cells, got {cells}")));
    }
    let a = alpha.value();
    let g0 = g.values()[0];
    if a >= T::lit(0.5) && g0.abs() > T::lit(COMPAT_TOL) {
        return Err(Error::Compatibility(format!("g(0) = {g0} must vanish for alpha = {a}")));
    }
    let n = cells + 1;
    let h = T::one() / T::from_usize_lossy(cells);
    let h2 = h * h;
    let two = T::lit(2.0);
    let dt = g.dt();
    let steps = g.steps();
    let one_minus = T::one() - a;
    let c = dt.powf(-a) / gamma(T::lit(2.0) - a);
    let b: Vec<T> = (0..steps)
        .map(|j| {
            if j == 0 {
                T::one()
            } else {
                let jf = T::from_usize_lossy(j);
                (jf + T::one()).powf(one_minus) - jf.powf(one_minus)
            }
        })
        .collect();

    let grid: Vec<T> = (0..n).map(|i| h * T::from_usize_lossy(i)).collect();
    let diag: Vec<T> = grid.iter().map(|x| c + two / h2 - p.at(*x)).collect();
    let mut sub = vec![-T::one() / h2; cells];
    let mut sup = vec![-T::one() / h2; cells];
    sup[0] = -two / h2;
    sub[cells - 1] = -two / h2;

    // increments[i] = u^{i+1} - u^i
    let mut increments: Vec<Vec<T>> = Vec::with_capacity(steps);
    let mut levels: Vec<Vec<T>> = Vec::with_capacity(steps + 1);
    levels.push(vec![T::zero(); n]);
    let gv = g.values();
    for k in 1..=steps {
        let prev = &levels[k - 1];
        let mut rhs: Vec<T> = prev.iter().map(|v| c * *v).collect();
        for j in 1..k {
            let d = &increments[k - 1 - j];
            let w = c * b[j];
            for (r, v) in rhs.iter_mut().zip(d) {
                *r = *r - w * *v;
            }
        }
        rhs[cells] = rhs[cells] + two * gv[k] / h;
        let next = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
        increments.push(next.iter().zip(prev).map(|(a, b)| *a - *b).collect());
        levels.push(next);
    }
    let values = (0..n).map(|i| levels.iter().map(|l| l[i]).collect()).collect();
    Ok(SolutionField {
        grid,
        dt,
        values,
        tail_estimate: T::zero(),
        truncation_warning: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ConvergenceReport<T> {
    /// Successive self-differences of the x = 1 trace under time refinement.
    pub temporal_differences: Vec<T>,
    pub temporal_order: T,
    /// Successive self-differences under space refinement at the finest time grid.
    pub spatial_differences: Vec<T>,
    pub spatial_order: T,
}

fn observed_order<T: Real>(diffs: &[T]) -> T {
    let n = diffs.len();
    (diffs[n - 2] / diffs[n - 1]).ln() / T::LN_2()
}

/// Self-convergence rates of [`solve_l1`]. `g` is given on the finest time grid;
/// coarser time levels subsample it. Space levels start from `cells`.
pub fn convergence_study<T: Real>(
    p: &Potential<T>,
    alpha: FractionalOrder<T>,
    g: &Signal<T>,
    cells: usize,
    levels: usize,
) -> Result<ConvergenceReport<T>> {
    if levels < 3 {
        return Err(Error::Parameter(format!("need at least 3 levels, got {levels}")));
    }
    let coarse_stride = 1usize << (levels - 1);
    let coarse_steps = g.steps() / coarse_stride;
    if coarse_steps == 0 || !g.steps().is_multiple_of(coarse_stride) {
        return Err(Error::Parameter("time steps must be divisible by 2^(levels-1)".into()));
    }

    let mut traces = Vec::with_capacity(levels);
    for l in 0..levels {
        let gl = g.subsample(coarse_stride >> l)?;
        let u = solve_l1(p, alpha, &gl, cells)?;
        traces.push(u.trace(Endpoint::One).subsample(1 << l)?);
    }
    let temporal_differences = traces
        .windows(2)
        .map(|w| w[1].axpy(-T::one(), &w[0]).map(|d| d.l2_norm()))
        .collect::<Result<Vec<_>>>()?;

    let mut traces = Vec::with_capacity(levels);
    for l in 0..levels {
        let u = solve_l1(p, alpha, g, cells << l)?;
        traces.push(u.trace(Endpoint::One));
    }
    let spatial_differences = traces
        .windows(2)
        .map(|w| w[1].axpy(-T::one(), &w[0]).map(|d| d.l2_norm()))
        .collect::<Result<Vec<_>>>()?;

    Ok(ConvergenceReport {
        temporal_order: observed_order(&temporal_differences),
        temporal_differences,
        spatial_order: observed_order(&spatial_differences),
        spatial_differences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(a: f64) -> FractionalOrder<f64> {
        FractionalOrder::with_classical(a).unwrap()
    }

    #[test]
    fn zero_input_zero_state() {
        let p = Potential::constant(-1.0_f64, 10).unwrap();
        let g = Signal::zeros(20, 0.05).unwrap();
        assert_eq!(solve_l1(&p, order(0.5), &g, 20).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn heat_limit_monotone_trace() {
        let p = Potential::constant(-1e-8_f64, 10).unwrap();
        let g = Signal::from_fn(1.0, 100, |t| 2.0 * t).unwrap();
        let u = solve_l1(&p, order(1.0), &g, 40).unwrap();
        let tr = u.trace(Endpoint::One);
        assert!(tr.values().windows(2).all(|w| w[1] >= w[0]));
        // backward Euler mass balance: ∫u(t_k) = Σ_{i≤k} g_i dt when p ≈ 0
        let mass = u.spatial_mean();
        let expected: f64 = g.values()[1..].iter().sum::<f64>() * g.dt();
        assert!((mass.values()[100] - expected).abs() < 1e-3, "{}", mass.values()[100]);
    }

    #[test]
    fn self_convergence_rates() {
        let p = Potential::from_fn(8, |x: f64| -(1.0 + x)).unwrap();
        let g = Signal::from_fn(1.0, 256, |t| t * t).unwrap();
        let r = convergence_study(&p, order(0.5), &g, 10, 3).unwrap();
        assert!(r.temporal_order >= 0.8, "{r:?}");
        assert!((1.7..=2.3).contains(&r.spatial_order), "{r:?}");
    }
}
