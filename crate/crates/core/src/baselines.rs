//! Comparison algorithms: single-spin-flip simulated annealing on bits, and
//! the O(2) rotor model with the transverse field switched off.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{ising_energy, IsingInstance, SpinConfig};
use crate::schedule::{step_fraction, AnnealSchedule};
use crate::svmc::{anneal_from, InitialState, ModelParams, RotorState, RunRecord};

pub const DEFAULT_SA_T0: f64 = 10.0;
pub const DEFAULT_SA_T1: f64 = 0.05;

/// Temperature ladder for bit-flip annealing, in instance energy units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TemperatureLadder {
    Linear { t0: f64, t1: f64 },
    Geometric { t0: f64, t1: f64 },
}

impl Default for TemperatureLadder {
    fn default() -> Self {
        TemperatureLadder::Linear {
            t0: DEFAULT_SA_T0,
            t1: DEFAULT_SA_T1,
        }
    }
}

impl fmt::Display for TemperatureLadder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemperatureLadder::Linear { t0, t1 } => write!(f, "linear({t0},{t1})"),
            TemperatureLadder::Geometric { t0, t1 } => write!(f, "geometric({t0},{t1})"),
        }
    }
}

impl TemperatureLadder {
    pub fn validate(&self) -> Result<()> {
        let (TemperatureLadder::Linear { t0, t1 } | TemperatureLadder::Geometric { t0, t1 }) =
            *self;
        if !(t0 > 0.0 && t1 > 0.0 && t0.is_finite() && t1.is_finite()) {
            return Err(Error::Param(format!(
                "temperatures must be positive and finite, got {t0} -> {t1}"
            )));
        }
        Ok(())
    }

    /// Temperature of sweep `k` out of `sweeps`.
    pub fn temperature(&self, k: usize, sweeps: usize) -> f64 {
        let s = step_fraction(k, sweeps);
        match *self {
            TemperatureLadder::Linear { t0, t1 } => t0 + s * (t1 - t0),
            TemperatureLadder::Geometric { t0, t1 } => t0 * (t1 / t0).powf(s),
        }
    }
}

/// Single-spin-flip Metropolis annealing on `z in {-1, +1}^n` from a random
/// start. The record's `final_theta` holds `0` for up spins and `pi` for
/// down spins.
pub fn sa_bits(
    inst: &IsingInstance,
    ladder: &TemperatureLadder,
    sweeps: usize,
    seed: u64,
) -> Result<RunRecord> {
    ladder.validate()?;
    if sweeps == 0 {
        return Err(Error::Param("sweeps must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let active: Vec<usize> = inst.active_sites().collect();
    let mut z = SpinConfig::all_up(inst);
    for &s in &active {
        if rng.gen_bool(0.5) {
            z.0[s] = -1;
        }
    }
    let mut accepted = 0u64;
    for k in 0..sweeps {
        let beta = 1.0 / ladder.temperature(k, sweeps);
        for &i in &active {
            let mut local = inst.field(i);
            for &(j, coupling) in inst.neighbors(i) {
                local += coupling * f64::from(z.0[j]);
            }
            let delta = 2.0 * f64::from(z.0[i]) * local;
            if delta <= 0.0 || rng.gen::<f64>() < (-delta * beta).exp() {
                z.0[i] = -z.0[i];
                accepted += 1;
            }
        }
    }
    let angles = z
        .spins()
        .iter()
        .map(|&s| if s < 0 { PI } else { 0.0 })
        .collect();
    let final_theta = RotorState::from_angles(inst, angles)?;
    let final_energy = ising_energy(&z, inst)?;
    Ok(RunRecord {
        seed,
        final_theta,
        final_config: z,
        final_energy,
        success: false,
        snapshots: Vec::new(),
        accepted,
        proposals: (active.len() * sweeps) as u64,
    })
}

/// O(2) simulated annealing: the rotor model with `A` forced to zero and
/// uniform random starting angles. Cooling comes from the growing `B(s)`,
/// i.e. the effective temperature `T / B(s)`.
pub fn sa_o2(
    inst: &IsingInstance,
    sched: &AnnealSchedule,
    params: &ModelParams,
    seed: u64,
) -> Result<RunRecord> {
    anneal_from(
        inst,
        &sched.without_transverse(),
        params,
        InitialState::Uniform,
        seed,
    )
}
