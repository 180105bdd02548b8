//! Simulation of coupled cavity arrays whose cavities each hold a single
//! V-system atom (ground level `g`, two degenerate excited levels `A`, `B`
//! driven by orthogonally polarized photons `a`, `b`).
//!
//! The crate covers the whole chain from microscopic model to spin model:
//!
//! * [`site`]: single-cavity basis, Hamiltonian and polariton eigenstates.
//! * [`lattice`]: cavity graphs, per-edge hopping and polarization rotations.
//! * [`manybody`] / [`sparse`]: fixed-excitation product bases and the full
//!   sparse Hamiltonian.
//! * [`eigensolve`]: Lanczos with full reorthogonalization plus a dense oracle.
//! * [`perturbation`]: numeric second-order degenerate perturbation theory on
//!   a cavity pair and extraction of the effective XXZ coefficients.
//! * [`spinmodel`]: spin operators, rotation lifts and lattice spin models.
//! * [`mixedfill`]: first-order hopping at non-integer filling.
//! * [`regime`] and [`sweep`]: validity checks and the ground-state comparison
//!   sweep between the cavity array and its spin model.
//!
//! Energies carry no fixed unit; every quantity shares the unit of `g`.

pub mod eigensolve;
pub mod error;
pub mod lattice;
pub mod manybody;
pub mod mixedfill;
pub mod perturbation;
pub mod regime;
pub mod site;
pub mod sparse;
pub mod spinmodel;
pub mod sweep;

mod par;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
