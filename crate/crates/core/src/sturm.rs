//! Neumann Sturm–Liouville problem `-w'' - p w = λ w`, `w'(0) = w'(1) = 0`.
//!
//! Second-order central differences with ghost-point closure give a
//! tridiagonal matrix that becomes symmetric under the trapezoid weights
//! (1/2 at both ends). Eigenvalues come from Sturm-sequence bisection,
//! eigenvectors from inverse iteration, and eigen-data from several nested
//! grids is combined by Richardson extrapolation in h².

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_tridiagonal, SymTridiagonal};
use crate::quad;
use crate::scalar::Real;

/// Samples below this magnitude everywhere make the potential "identically zero".
pub const ZERO_POTENTIAL_TOL: f64 = 1e-14;

/// Non-positive coefficient sampled on a uniform grid of `[0, 1]`, endpoints
/// included; evaluated off-grid by linear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Potential<T> {
    samples: Vec<T>,
}

impl<T: Real> Potential<T> {
    pub fn new(samples: Vec<T>) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::Validation(format!(
                "potential needs at least 3 samples, got {}",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite potential sample at {i}")));
        }
        if let Some(i) = samples.iter().position(|v| *v > T::zero()) {
            return Err(Error::Validation(format!(
                "potential must be non-positive, sample {i} is {}",
                samples[i]
            )));
        }
        if samples.iter().all(|v| v.abs() <= T::lit(ZERO_POTENTIAL_TOL)) {
            return Err(Error::DegeneratePotential(
                "p vanishes identically, so 0 is a Neumann eigenvalue".into(),
            ));
        }
        Ok(Self { samples })
    }

    pub fn constant(value: T, cells: usize) -> Result<Self> {
        Self::new(vec![value; cells + 1])
    }

    pub fn from_fn(cells: usize, f: impl Fn(T) -> T) -> Result<Self> {
        let h = T::one() / T::from_usize_lossy(cells);
        Self::new((0..=cells).map(|i| f(h * T::from_usize_lossy(i))).collect())
    }

    /// Equal-width pieces: piece `i` covers `[i/K, (i+1)/K)`, the last piece
    /// also owns `x = 1`.
    pub fn piecewise(values: &[T], cells: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation("piecewise potential needs pieces".into()));
        }
        let k = values.len();
        Self::from_fn(cells, |x| values[piece_index(x, k)])
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn cells(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn grid(&self) -> Vec<T> {
        let h = T::one() / T::from_usize_lossy(self.cells());
        (0..=self.cells()).map(|i| h * T::from_usize_lossy(i)).collect()
    }

    /// Piecewise-linear interpolant.
    pub fn at(&self, x: T) -> T {
        let j = self.cells();
        let s = (x.max(T::zero()).min(T::one())) * T::from_usize_lossy(j);
        let i = s.floor().to_usize().unwrap_or(0).min(j - 1);
        let f = s - T::from_usize_lossy(i);
        self.samples[i] * (T::one() - f) + self.samples[i + 1] * f
    }

    pub fn resample(&self, cells: usize) -> Result<Self> {
        Self::from_fn(cells, |x| self.at(x))
    }

    /// Trapezoid mean of p over [0, 1].
    pub fn mean(&self) -> T {
        quad::trapezoid(&self.samples, T::one() / T::from_usize_lossy(self.cells()))
    }
}

pub(crate) fn piece_index<T: Real>(x: T, pieces: usize) -> usize {
    (x * T::from_usize_lossy(pieces))
        .floor()
        .to_usize()
        .unwrap_or(0)
        .min(pieces - 1)
}

/// Quality indicators computed alongside the eigen-triples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EigenDiagnostics<T> {
    /// Smallest `|φ(1)|` of the unit-L² eigenvectors before rescaling.
    pub min_raw_boundary: T,
    /// Largest normalised inner product between distinct eigenfunctions.
    pub orthogonality: T,
    /// Largest `|λ_n - ((n-1)π)² - mean(-p)|`.
    pub weyl_deviation: T,
    /// Smallest C with `C⁻¹ n² ≤ λ_n ≤ C n²` on the computed modes.
    pub growth_constant: T,
    pub min_norming: T,
    /// Largest relative change between the extrapolated and finest-grid eigenvalues.
    pub extrapolation_change: T,
    pub levels: usize,
}

/// Eigen-triples `(λ_n, φ_n, ρ_n)` with `φ_n(1) = 1` and `ρ_n = ‖φ_n‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SpectralData<T> {
    pub lambdas: Vec<T>,
    pub norming: Vec<T>,
    pub grid: Vec<T>,
    pub eigenfunctions: Vec<Vec<T>>,
    #[serde(skip)]
    pub diagnostics: EigenDiagnostics<T>,
}

impl<T: Real> SpectralData<T> {
    pub fn modes(&self) -> usize {
        self.lambdas.len()
    }

    /// The first `n` modes.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.modes());
        Self {
            lambdas: self.lambdas[..n].to_vec(),
            norming: self.norming[..n].to_vec(),
            grid: self.grid.clone(),
            eigenfunctions: self.eigenfunctions[..n].to_vec(),
            diagnostics: self.diagnostics.clone(),
        }
    }

    /// Checks the structural invariants after deserialisation.
    pub fn validate(&self) -> Result<()> {
        let n = self.lambdas.len();
        if n == 0 || self.norming.len() != n || self.eigenfunctions.len() != n {
            return Err(Error::Validation("spectral data arrays disagree in length".into()));
        }
        if self.grid.len() < 3 || self.eigenfunctions.iter().any(|f| f.len() != self.grid.len()) {
            return Err(Error::Validation("eigenfunctions do not match the grid".into()));
        }
        if !(self.lambdas[0] > T::zero()) || self.lambdas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Validation(
                "eigenvalues must be positive and strictly increasing".into(),
            ));
        }
        if self.norming.iter().any(|r| !(*r > T::zero())) {
            return Err(Error::Validation("norming constants must be positive".into()));
        }
        Ok(())
    }

    /// Value of φ_n at grid index `j` (`n` is 0-based).
    #[inline]
    pub fn phi(&self, n: usize, j: usize) -> T {
        self.eigenfunctions[n][j]
    }

    pub fn cells(&self) -> usize {
        self.grid.len() - 1
    }

    /// Weights `1/(λ_n ρ_n)`.
    pub fn weights(&self) -> Vec<T> {
        self.lambdas
            .iter()
            .zip(&self.norming)
            .map(|(l, r)| (*l * *r).recip())
            .collect()
    }

    /// Partial sums `Σ_n φ_n(x_j) / (λ_n ρ_n)` at every grid node.
    pub fn steady_partial_sum(&self) -> Vec<T> {
        let w = self.weights();
        (0..self.grid.len())
            .map(|j| (0..self.modes()).map(|n| w[n] * self.phi(n, j)).sum())
            .collect()
    }
}

fn richardson<T: Real>(estimates: &[T]) -> T {
    // estimates[l] computed with h / 2^l, error expansion in even powers of h
    let mut table = estimates.to_vec();
    let mut factor = T::lit(4.0);
    for level in 1..table.len() {
        for i in (level..table.len()).rev() {
            table[i] = table[i] + (table[i] - table[i - 1]) / (factor - T::one());
        }
        factor = factor * T::lit(4.0);
    }
    *table.last().expect("at least one level")
}

struct LevelSolution<T> {
    lambdas: Vec<T>,
    norming: Vec<T>,
    /// eigenfunctions sampled at the base-grid nodes
    phis: Vec<Vec<T>>,
    min_raw_boundary: T,
}

fn solve_level<T: Real>(p: &Potential<T>, modes: usize, level: usize) -> Result<LevelSolution<T>> {
    let base = p.cells();
    let stride = 1usize << level;
    let cells = base * stride;
    let h = T::one() / T::from_usize_lossy(cells);
    let h2 = h * h;
    let two = T::lit(2.0);
    let diag: Vec<T> = (0..=cells)
        .map(|i| two / h2 - p.at(h * T::from_usize_lossy(i)))
        .collect();
    let mut off = vec![-T::one() / h2; cells];
    off[0] = -two.sqrt() / h2;
    off[cells - 1] = -two.sqrt() / h2;
    let matrix = SymTridiagonal::new(diag, off)?;

    let mut sol = LevelSolution {
        lambdas: Vec::with_capacity(modes),
        norming: Vec::with_capacity(modes),
        phis: Vec::with_capacity(modes),
        min_raw_boundary: T::infinity(),
    };
    let inv_sqrt_half = two.sqrt();
    for n in 0..modes {
        let lambda = matrix.eigenvalue(n)?;
        let y = matrix.eigenvector(lambda)?;
        // undo the symmetrising scaling; unit Euclidean y has trapezoid norm h
        let scale = h.sqrt().recip();
        let u: Vec<T> = y
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let w = if i == 0 || i == cells { inv_sqrt_half } else { T::one() };
                *v * w * scale
            })
            .collect();
        let raw = u[cells];
        if raw.abs() <= T::lit(1e-10) {
            return Err(Error::Normalization {
                index: n + 1,
                value: raw.to_f64_lossy(),
            });
        }
        sol.min_raw_boundary = sol.min_raw_boundary.min(raw.abs());
        let phi: Vec<T> = u.iter().map(|v| *v / raw).collect();
        let sq: Vec<T> = phi.iter().map(|v| *v * *v).collect();
        sol.norming.push(quad::simpson(&sq, h));
        sol.phis.push((0..=base).map(|j| phi[j * stride]).collect());
        sol.lambdas.push(lambda);
    }
    Ok(sol)
}

/// First `modes` eigen-triples of the Neumann operator for `p`, extrapolated
/// over `refine` nested grids (base grid = the potential's grid).
pub fn eigen_solve<T: Real>(p: &Potential<T>, modes: usize, refine: usize) -> Result<SpectralData<T>> {
    if modes == 0 {
        return Err(Error::Parameter("at least one mode is required".into()));
    }
    if refine == 0 {
        return Err(Error::Parameter("at least one grid level is required".into()));
    }
    if modes * 4 > p.cells() {
        return Err(Error::Parameter(format!(
            "{modes} modes need at least {} cells, potential has {}",
            modes * 4,
            p.cells()
        )));
    }
    let levels = (0..refine)
        .map(|l| solve_level(p, modes, l))
        .collect::<Result<Vec<_>>>()?;
    let base = p.cells();
    let finest = levels.last().expect("refine >= 1");

    let mut lambdas = Vec::with_capacity(modes);
    let mut norming = Vec::with_capacity(modes);
    let mut eigenfunctions = Vec::with_capacity(modes);
    let mut change = T::zero();
    for n in 0..modes {
        let lam = richardson(&levels.iter().map(|l| l.lambdas[n]).collect::<Vec<_>>());
        change = change.max(((lam - finest.lambdas[n]) / lam).abs());
        lambdas.push(lam);
        norming.push(richardson(&levels.iter().map(|l| l.norming[n]).collect::<Vec<_>>()));
        let mut phi: Vec<T> = (0..=base)
            .map(|j| richardson(&levels.iter().map(|l| l.phis[n][j]).collect::<Vec<_>>()))
            .collect();
        phi[base] = T::one();
        eigenfunctions.push(phi);
    }
    if !(lambdas[0] > T::zero()) {
        return Err(Error::Numeric(format!(
            "first eigenvalue {} is not positive",
            lambdas[0]
        )));
    }
    if let Some(i) = lambdas.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::Numeric(format!(
            "eigenvalues {} and {} are not simple",
            i + 1,
            i + 2
        )));
    }
    if let Some(i) = norming.iter().position(|r| !(*r > T::zero())) {
        return Err(Error::Numeric(format!("norming constant {} is not positive", i + 1)));
    }

    let grid = p.grid();
    let h = T::one() / T::from_usize_lossy(base);
    let mut orth = T::zero();
    for n in 0..modes {
        for m in 0..n {
            let prod: Vec<T> = eigenfunctions[n]
                .iter()
                .zip(&eigenfunctions[m])
                .map(|(a, b)| *a * *b)
                .collect();
            let ip = quad::simpson(&prod, h) / (norming[n] * norming[m]).sqrt();
            orth = orth.max(ip.abs());
        }
    }
    let mean_neg_p = -p.mean();
    let mut weyl = T::zero();
    let mut growth = T::one();
    for (i, lam) in lambdas.iter().enumerate() {
        let k = T::from_usize_lossy(i);
        weyl = weyl.max((*lam - (k * T::PI()).powi(2) - mean_neg_p).abs());
        let n2 = T::from_usize_lossy((i + 1) * (i + 1));
        growth = growth.max(*lam / n2).max(n2 / *lam);
    }
    let diagnostics = EigenDiagnostics {
        min_raw_boundary: levels.iter().fold(T::infinity(), |m, l| m.min(l.min_raw_boundary)),
        orthogonality: orth,
        weyl_deviation: weyl,
        growth_constant: growth,
        min_norming: norming.iter().fold(T::infinity(), |m, r| m.min(*r)),
        extrapolation_change: change,
        levels: refine,
    };
    Ok(SpectralData {
        lambdas,
        norming,
        grid,
        eigenfunctions,
        diagnostics,
    })
}

/// Smallest multiple of `cells` that satisfies the `modes ≤ cells/4` guard.
pub fn eigen_grid_cells(cells: usize, modes: usize) -> usize {
    let cells = cells.max(1);
    cells * (4 * modes).div_ceil(cells).max(1)
}

/// [`eigen_solve`] on `p` resampled to [`eigen_grid_cells`]`(cells, modes)`, so
/// that every node of the `cells` grid is also an eigenfunction node.
pub fn eigen_solve_on<T: Real>(p: &Potential<T>, cells: usize, modes: usize, refine: usize) -> Result<SpectralData<T>> {
    eigen_solve(&p.resample(eigen_grid_cells(cells, modes))?, modes, refine)
}

/// Solves `-w'' - p w = 0`, `w'(0) = 0`, `w'(1) = 1` on the potential's grid,
/// extrapolated over `refine` nested grids. This is `lim_{t→∞} K(x, t)`.
pub fn neumann_steady<T: Real>(p: &Potential<T>, refine: usize) -> Result<Vec<T>> {
    let base = p.cells();
    let refine = refine.max(1);
    let mut per_level: Vec<Vec<T>> = Vec::with_capacity(refine);
    for level in 0..refine {
        let stride = 1usize << level;
        let cells = base * stride;
        let h = T::one() / T::from_usize_lossy(cells);
        let h2 = h * h;
        let two = T::lit(2.0);
        let diag: Vec<T> = (0..=cells)
            .map(|i| two / h2 - p.at(h * T::from_usize_lossy(i)))
            .collect();
        let mut sub = vec![-T::one() / h2; cells];
        let mut sup = vec![-T::one() / h2; cells];
        sup[0] = -two / h2;
        sub[cells - 1] = -two / h2;
        let mut rhs = vec![T::zero(); cells + 1];
        rhs[cells] = two / h;
        let w = solve_tridiagonal(&sub, &diag, &sup, &rhs)
            .map_err(|_| Error::DegeneratePotential("steady Neumann problem is singular".into()))?;
        per_level.push((0..=base).map(|j| w[j * stride]).collect());
    }
    Ok((0..=base)
        .map(|j| richardson(&per_level.iter().map(|l| l[j]).collect::<Vec<_>>()))
        .collect())
}
