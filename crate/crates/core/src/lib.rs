//! Classical spin-vector annealing for Chimera-structured Ising spin glasses.
//!
//! Each qubit is modelled as a planar rotor in the XZ plane. A transverse
//! field `A(s)` along x competes with Ising couplings scaled by `B(s)` along
//! z while Metropolis sweeps at a fixed temperature drive the rotors. The
//! crate also provides the instances the model runs on, exact ground-state
//! oracles to grade it, simulated-annealing baselines, and the statistics
//! used to compare solvers.

pub mod analysis;
pub mod baselines;
pub mod error;
pub mod instances;
pub mod oracle;
pub mod schedule;
pub mod seeds;
pub mod svmc;

pub use error::{Error, Result};
pub use instances::{ChimeraSpec, IsingInstance, SpinConfig};
pub use schedule::AnnealSchedule;
pub use svmc::{ModelParams, RotorState, RunRecord};
