//! Energetics of the dilute Bose gas on three-dimensional Bravais lattices.
//!
//! The crate computes the quantities entering the low-density ground-state
//! energy expansion e₀(ρ) ≈ 4πa ρ²: lattice scattering data and the
//! scattering length a, Bogoliubov-type variational upper bounds in finite
//! volume and in the thermodynamic limit, spectral comparisons between
//! periodic and Neumann restrictions of the hopping Laplacian, a rigorous
//! finite-volume lower-bound certificate, and small-system exact
//! diagonalization for cross-validation.
//!
//! Units: energies in units of the hopping scale, lengths in units of the
//! primitive cell, density as particles per lattice site.

pub mod bogoliubov;
pub mod ed;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod lower_bound;
pub mod numerics;
pub mod quad;
pub mod scattering;
pub mod spectra;

pub use error::{Error, Result};
pub use lattice::{build_lattice, FiniteLattice, LatticeConfig, LatticeModel};
pub use quad::{bz_integrate, QuadratureParams, SingularOrder};
