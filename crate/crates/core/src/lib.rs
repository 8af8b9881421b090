//! Positive-energy Fock-space simulator for two-dimensional massless QED on a
//! circle of circumference `L`.
//!
//! The crate builds truncated matrix representations of the charge, axial
//! charge, free Dirac Hamiltonian and current modes, implements the large
//! gauge transformation that shifts the gauge zero mode by one flux quantum,
//! evaluates the point-splitting limits behind the regularized charges, and
//! assembles the full Hamiltonian (gauge zero mode x fermion sector) for
//! small spectral studies.
//!
//! Conventions used throughout:
//!
//! * momenta are `k_n = 2 pi n / L` with `n` an integer; `n` is stored as an
//!   integer and the `2 pi / L` factor is applied as late as possible,
//! * `b_n` annihilates a fermion in mode `n`, `c_n` an antifermion,
//! * basis kets are creation words in canonical order: fermion creators with
//!   ascending mode index first, then antifermion creators ascending.

pub mod anomaly;
pub mod assembly;
pub mod error;
pub mod fock;
pub mod gauge;
pub mod operators;
pub mod params;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use params::ModelParams;
