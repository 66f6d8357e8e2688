#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::too_many_arguments,
    clippy::needless_range_loop
)]

//! Thermodynamics and full photon counting statistics of a quantum
//! resonator whose frequency is driven while it is weakly coupled to a
//! thermal reservoir.
//!
//! Units are natural: ħ = k_B = 1, with frequencies in units of the
//! undriven resonator frequency ω̄₀.

pub mod analysis;
pub mod counting;
pub mod dynamics;
pub mod error;
pub mod linear_response;
pub mod model;
pub mod ode;
pub mod oracle;
pub mod series;

pub use error::{Error, Result};
pub use model::{
    bose_einstein, Config, DriveConfig, DriveKind, DriveWaveform, SimulationGrid, SystemParams,
};
