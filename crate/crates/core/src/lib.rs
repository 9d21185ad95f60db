//! Weighted thermodynamic formalism on full shifts.
//!
//! For weights `w_n` and a potential `f` depending on `r` coordinates, the
//! weighted Birkhoff sums `Σ w_k f(T^k x)` have a pressure function
//! `ψ(λ) = lim (1/n) log Σ exp(λ Σ w_k f(T^k x))` over cylinders of length
//! `n`. This crate computes `ψ` by transfer matrices and by enumeration,
//! its Legendre transform and the resulting multifractal spectrum, return
//! word approximations for substitutive weights, and the explicit Markov
//! Gibbs measure of the `xy` potential.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x < y)` deliberately rejects NaN too

pub mod error;
pub mod gibbs;
pub mod legendre;
pub mod model;
pub mod partition;
pub mod pressure;
pub mod returnwords;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use gibbs::{local_dimension_estimate, sample_paths, GibbsSample, InhomMarkov};
pub use legendre::{mobius_spectrum, spectrum_closed_form, spectrum_curve, SpectrumPoint};
pub use model::{FrequencyTable, Potential, SymbolicSpace, WeightSequence};
pub use partition::{exact_partition, transfer_log_partition};
pub use pressure::{closed_form_curve, pressure_curve, PressureCurve};
pub use weights::Substitution;
