//! PT-symmetric two-qubit Ising model: spectra, exceptional points,
//! entanglement, dynamics and parameter sensing.
//!
//! Everything works in the computational basis `|00>, |01>, |10>, |11>` with
//! `sigma_z |1> = +|1>`; rates are in units of the gain/loss rate `gamma`.

#![allow(clippy::needless_range_loop)]

pub mod dynamics;
pub mod entanglement;
pub mod ep;
pub mod error;
pub mod linalg;
pub mod model;
pub mod sensing;
pub mod spectrum;

pub use dynamics::{initial_state, propagate, InitialStateSpec, Trajectory};
pub use entanglement::{concurrence_mixed, concurrence_pure, DensityMatrix4, Eigenstate};
pub use ep::{locate_ep, EpPoint, EpSlice};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix4, StateVector4, C64};
pub use model::{build_hamiltonian, SystemParams};
pub use sensing::{Kappa, SensingPoint};
pub use spectrum::{classify_phase, Phase, PhaseLabel, Spectrum, SpectrumSource};
