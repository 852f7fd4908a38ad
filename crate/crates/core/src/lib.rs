//! Lyapunov exponent spectra and closed-orbit analysis for three-dimensional
//! autonomous flows.
//!
//! Two competing exponent definitions are computed side by side:
//!
//! * **LE_J**: real parts of the eigenvalues of the integrated Jacobian
//!   `∫₀ᵗ J(r₀(s)) ds`, divided by `t` ([`exponents::le_j`]).
//! * **LE_O**: eigenvalues of the symmetrized average `(∫J + ∫Jᵀ) / 2t`
//!   ([`exponents::le_o_symmetric`]), alongside the time-ordered singular-value
//!   route through the variational propagator
//!   ([`exponents::le_finite_time_svd`]).
//!
//! The [`orbitlab`] module finds attracting closed orbits, refines their
//! periods by Newton shooting, counts rotation numbers and probes stability
//! empirically; [`cases`] holds the registry of reference cases used for
//! regression runs and parameter sweeps.
//!
//! The crate is `no_std` with `alloc`; the default `std` feature only
//! switches the floating-point backend from `libm` to the platform one.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod cases;
mod error;
pub mod exponents;
pub mod matrix3;
pub mod orbitlab;
pub mod vectorfields;

pub use error::{Error, Result};
pub use matrix3::{ComplexTriple, Matrix3, StateVec3};
pub use vectorfields::{Forcing, IntegratedJacobian, Propagator, SystemSpec, Tolerance, Trajectory};
