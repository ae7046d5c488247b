//! Exact bound states of a (2+1)-dimensional Dirac particle with
//! position-dependent mass `m(ρ) = m0 + κ/ρ` in an Aharonov-Bohm flux tube
//! plus a 2D Coulomb field, together with an independent Numerov shooting
//! solver that checks every closed-form result.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod params;
pub mod specfun;
pub mod spectrum;
pub mod verifier;
pub mod wavefunction;

pub use error::{Error, Result};
pub use params::{
    DerivedQuantities, MagneticNumber, QuantumNumbers, Spin, SystemParams, FINE_STRUCTURE,
};
