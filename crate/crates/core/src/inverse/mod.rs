//! Recovery of the order, the spectral data and the potential from the
//! boundary kernel, and support splitting for vanishing convolutions.

mod order;
mod potential;
mod resolvent;
mod spectral;
mod support;

pub use order::{estimate_order, refine_order, OrderEstimate, OrderOptions};
pub use potential::{recover_potential, Basis, PotentialFit, PotentialOptions, SpectralTarget};
pub use resolvent::{contour_integral, residue_at, resolvent_eval, resolvent_eval_complex, ResolventModel};
pub use spectral::{extract_spectral, ExtractOptions, SpectralFit};
pub use support::{support_infimum, titchmarsh_check, SupportSplit, TitchmarshReport, Verdict};
