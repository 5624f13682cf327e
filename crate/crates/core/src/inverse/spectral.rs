use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::resolvent::ResolventModel;
use crate::error::{Error, Result};
use crate::mlf::{mittag_leffler, ml_kernel_integral};
use crate::optim::{levenberg_marquardt, LmOptions};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct ExtractOptions<T> {
    pub lm: LmOptions<T>,
    /// Seed for the jittered restarts that follow the deterministic ones.
    pub seed: u64,
    pub random_starts: usize,
    /// Fitted poles closer than this ratio count as collapsed.
    pub min_ratio: T,
    /// Weights below this fraction of the total count as vanished.
    pub min_weight_fraction: T,
}

impl<T: Real> Default for ExtractOptions<T> {
    fn default() -> Self {
        Self {
            lm: LmOptions {
                max_iter: 300,
                ..LmOptions::default()
            },
            seed: 0,
            random_starts: 4,
            min_ratio: T::lit(1.01),
            min_weight_fraction: T::lit(1e-8),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SpectralFit<T> {
    /// `None` when the data carries no signal.
    pub model: Option<ResolventModel<T>>,
    pub degenerate: bool,
    pub modes_requested: usize,
    pub modes_used: usize,
    /// RMS of the residual relative to `max |K|`.
    pub rms_residual: T,
    /// Condition number of `JᵀJ` in log-parameters at the optimum.
    pub condition: T,
    /// Smallest ratio `λ_{n+1}/λ_n` among the fitted poles.
    pub min_separation: T,
}

struct Problem<'a, T> {
    times: &'a [T],
    values: &'a [T],
    alpha: T,
    scale: T,
}

impl<'a, T: Real> Problem<'a, T> {
    fn split(x: &[T]) -> (Vec<T>, Vec<T>) {
        let n = x.len() / 2;
        (
            x[..n].iter().map(|v| v.exp()).collect(),
            x[n..].iter().map(|v| v.exp()).collect(),
        )
    }

    fn residual(&self, x: &[T]) -> Result<Vec<T>> {
        let (lam, w) = Self::split(x);
        self.times
            .iter()
            .zip(self.values)
            .map(|(t, k)| {
                let mut s = T::zero();
                for (l, wn) in lam.iter().zip(&w) {
                    s = s + *wn * *l * ml_kernel_integral(self.alpha, *l, *t)?;
                }
                Ok((s - *k) / self.scale)
            })
            .collect()
    }

    fn jacobian(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        let (lam, w) = Self::split(x);
        let n = lam.len();
        self.times
            .iter()
            .map(|t| {
                let ta = t.powf(self.alpha);
                let mut row = vec![T::zero(); 2 * n];
                for i in 0..n {
                    let rise = lam[i] * ml_kernel_integral(self.alpha, lam[i], *t)?;
                    let slope = if *t == T::zero() {
                        T::zero()
                    } else {
                        ta * mittag_leffler(self.alpha, self.alpha, -lam[i] * ta)? / self.alpha
                    };
                    row[i] = w[i] * lam[i] * slope / self.scale;
                    row[n + i] = w[i] * rise / self.scale;
                }
                Ok(row)
            })
            .collect()
    }
}

fn starts<T: Real>(times: &[T], values: &[T], alpha: T, n: usize, opts: &ExtractOptions<T>) -> Vec<Vec<T>> {
    // poles spread over the rates the sampled times can resolve
    let t_lo = times.iter().copied().find(|t| *t > T::zero()).unwrap_or(T::one());
    let t_hi = *times.last().expect("non-empty");
    let hi = (T::one() / t_lo).powf(alpha).ln();
    let lo = (T::one() / t_hi).powf(alpha).ln();
    let kmax = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let w0 = (kmax / T::from_usize_lossy(n)).ln();
    let mut out = Vec::new();
    for shift in [T::lit(0.25), T::lit(0.5), T::lit(0.75)] {
        for spread in [T::lit(0.25), T::lit(0.5)] {
            let mut x = Vec::with_capacity(2 * n);
            for i in 0..n {
                let frac = if n == 1 {
                    shift
                } else {
                    shift - spread / T::lit(2.0) + spread * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1)
                };
                x.push(lo + (hi - lo) * frac);
            }
            x.extend(std::iter::repeat_n(w0, n));
            out.push(x);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_starts {
        let mut x: Vec<T> = (0..n)
            .map(|_| lo + (hi - lo) * T::lit(rng.gen_range(0.05..0.95)))
            .collect();
        x.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        x.extend((0..n).map(|_| w0 + T::lit(rng.gen_range(-1.0..1.0))));
        out.push(x);
    }
    out
}

fn condition<T: Real>(m: &crate::linalg::Dense<T>) -> T {
    let ev = m.symmetric_eigenvalues();
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if lo > T::zero() {
        hi / lo
    } else {
        T::infinity()
    }
}

/// Fits `K(1, t) ≈ Σ_{n≤N} w_n (1 - E_{α,1}(-λ_n t^α))` by least squares over
/// positive, ordered `(λ_n, w_n)`. Collapsing or vanishing terms trigger a
/// retry with one mode fewer.
pub fn extract_spectral<T: Real>(
    times: &[T],
    values: &[T],
    alpha: T,
    modes: usize,
    opts: &ExtractOptions<T>,
) -> Result<SpectralFit<T>> {
    if times.len() != values.len() || times.is_empty() {
        return Err(Error::Validation(
            "times and values must be non-empty and equal in length".into(),
        ));
    }
    if modes == 0 || 2 * modes > times.len() {
        return Err(Error::Parameter(format!(
            "cannot fit {modes} modes to {} samples",
            times.len()
        )));
    }
    if times.iter().any(|t| !(*t >= T::zero())) {
        return Err(Error::Validation("times must be non-negative".into()));
    }
    let scale = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return Ok(SpectralFit {
            model: None,
            degenerate: true,
            modes_requested: modes,
            modes_used: 0,
            rms_residual: T::zero(),
            condition: T::infinity(),
            min_separation: T::infinity(),
        });
    }
    let problem = Problem {
        times,
        values,
        alpha,
        scale,
    };
    let mut n = modes;
    loop {
        let mut best: Option<crate::optim::LmOutcome<T>> = None;
        for x0 in starts(times, values, alpha, n, opts) {
            let out = levenberg_marquardt(
                x0,
                |x| problem.residual(x),
                |x, _| problem.jacobian(x),
                |x| {
                    for v in x.iter_mut() {
                        *v = v.max(T::lit(-700.0)).min(T::lit(700.0));
                    }
                },
                &opts.lm,
            );
            if let Ok(out) = out {
                if best.as_ref().is_none_or(|b| out.cost < b.cost) {
                    best = Some(out);
                }
            }
        }
        let best = best.ok_or_else(|| Error::Numeric("every spectral fit start failed".into()))?;
        let (lam, w) = Problem::<T>::split(&best.x);
        let mut pairs: Vec<(T, T)> = lam.into_iter().zip(w).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let total: T = pairs.iter().map(|p| p.1).sum();
        let min_sep = pairs
            .windows(2)
            .map(|p| p[1].0 / p[0].0)
            .fold(T::infinity(), |m, r| m.min(r));
        let collapsed = min_sep < opts.min_ratio || pairs.iter().any(|p| p.1 < opts.min_weight_fraction * total);
        if collapsed && n > 1 {
            n -= 1;
            continue;
        }
        if collapsed {
            return Err(Error::Numeric("spectral fit degenerated even with one mode".into()));
        }
        let m = T::from_usize_lossy(times.len());
        let model = ResolventModel::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())?;
        return Ok(SpectralFit {
            model: Some(model),
            degenerate: false,
            modes_requested: modes,
            modes_used: n,
            rms_residual: (T::lit(2.0) * best.cost / m).sqrt(),
            condition: condition(&best.normal_matrix),
            min_separation: min_sep,
        });
    }
}
