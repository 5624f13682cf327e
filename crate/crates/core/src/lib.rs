//! Spectral forward solver, boundary kernels and inverse recovery for the
//! time-fractional diffusion equation on `[0, 1]` with a Neumann input at `x = 1`.
//!
//! The numerical core is generic over [`scalar::Real`]; the aliases below fix it to `f64`.
//!
//! ```
//! use fracspec::{eigen_solve_on, solve_forward, Endpoint, ForwardOptions, FractionalOrder, Potential64, Signal64};
//!
//! let p = Potential64::from_fn(200, |x| -(1.0 + x))?;
//! let spec = eigen_solve_on(&p, 200, 64, 3)?;
//! let g = Signal64::from_fn(1.0, 400, |t| t * t)?;
//! let u = solve_forward(&spec, FractionalOrder::new(0.5)?, &g, &ForwardOptions::default())?;
//! assert!(u.trace(Endpoint::Zero).max_abs() > 0.0);
//! # Ok::<(), fracspec::Error>(())
//! ```

// `!(x > 0)` style guards are used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// quadrature nodes and series constants are kept at their published digits
#![allow(clippy::excessive_precision)]

pub mod cli;
pub mod error;
pub mod forward;
pub mod fraccalc;
pub mod harness;
pub mod inverse;
pub mod linalg;
pub mod mlf;
pub mod optim;
pub mod oracle;
pub mod quad;
pub mod scalar;
pub mod special;
pub mod sturm;

pub use error::{Error, Result};
pub use forward::{kernel, solve_forward, Endpoint, ForwardOptions, TailMode};
pub use fraccalc::{caputo_l1, rl_integral, FractionalOrder, Signal};
pub use sturm::Potential;
pub use mlf::{mittag_leffler, ml_eval};
pub use scalar::Real;
pub use sturm::{eigen_solve, eigen_solve_on};

pub type Signal64 = fraccalc::Signal<f64>;
pub type Order64 = fraccalc::FractionalOrder<f64>;
pub type Potential64 = sturm::Potential<f64>;
pub type SpectralData64 = sturm::SpectralData<f64>;
pub type SolutionField64 = forward::SolutionField<f64>;
pub type KernelTable64 = forward::KernelTable<f64>;
pub type ResolventModel64 = inverse::ResolventModel<f64>;
pub type PotentialFit64 = inverse::PotentialFit<f64>;
pub type ExperimentReport64 = harness::ExperimentReport<f64>;
pub type ContinuationReport64 = harness::ContinuationReport<f64>;
