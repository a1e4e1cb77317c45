//! Numerics for mass renormalization and radiative level shifts of a
//! non-relativistic electron coupled to the quantized radiation field
//! (Pauli-Fierz model), at leading order in the coupling.
//!
//! Natural units (hbar = c = 1) with energies in units of the electron mass;
//! conversions to eV/MHz live in [`units`].

pub mod cli;
pub mod hydrogen;
pub mod quadrature;
pub mod renorm;
pub mod shifts;
pub mod spectral;
pub mod units;
