//! Simulation of discrete quantum walks in the motional phase space of a
//! single trapped ion.
//!
//! The crate covers the ideal walk on a lattice of coherent states, its
//! implementation with a state-dependent optical dipole force, the
//! blue-sideband readout of the motional state and a short-pulse
//! photon-kick alternative for the shift operation.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dipole;
pub mod error;
pub mod fock;
pub mod kick;
pub mod linalg;
pub mod params;
pub mod pulse;
pub mod readout;
pub mod walk;

pub use error::{Error, Result};
pub use fock::{coherent_state, displacement_matrix, sideband_element, wigner, MotionalState, PhasePoint};
pub use num_complex::Complex64;
pub use params::{ApproxLevel, SimParams};

pub use dipole::{HybridState, Propagator};
pub use kick::KickParams;
pub use pulse::{PulseEvent, PulseProgram, StepLayout};
pub use readout::ReadoutConfig;
pub use walk::{LatticeState, WalkSpec};

/// Version of this crate.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
