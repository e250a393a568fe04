//! Two-point invariant currents for one-dimensional static and periodically
//! driven lattices.
//!
//! A potential that is symmetric under `x -> x̄` only on a finite domain still
//! leaves a fingerprint on every stationary state: the two-point current
//! `Q(x, x̄) = [σ Ψ*(x) Ψ'(x̄) - Ψ(x̄) Ψ*'(x)] / 2i` is spatially constant
//! wherever both `x` and `x̄` lie in that domain. For time-periodic potentials
//! the same holds for the one-period average of `Q` over a Floquet mode.
//!
//! The crate is organised bottom-up:
//!
//! * [`domain`]: symmetry transforms, lattice geometry, grids and state types.
//! * [`hamiltonian`]: plane-wave Hamiltonian of a Gaussian superlattice and
//!   its stationary states.
//! * [`floquet`]: one-period propagator, Floquet modes and their time series.
//! * [`invariants`]: `Q`, `Qᶜ`, the period average `Q̄`, shift scans and the
//!   constancy-based convergence measure.
//! * [`detect`]: plateau segmentation, defect localisation, period inference.
//! * [`transfer`]: 2x2 transfer matrices for point-scatterer chains, used as
//!   an exactly solvable reference.

pub mod detect;
pub mod domain;
mod error;
pub mod floquet;
pub mod hamiltonian;
pub mod invariants;
mod linalg;
pub mod transfer;

pub use error::{Error, ErrorCategory, Result};

pub use num_complex::Complex64;
