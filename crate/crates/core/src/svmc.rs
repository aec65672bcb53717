//! Classical spin-vector model: one O(2) rotor per qubit in the XZ plane,
//! a transverse field `A` along x, and couplings scaled by `B` along z,
//!
//! ```text
//! H = -A sum_i sin(theta_i) - B sum_{i<j} J_ij cos(theta_i) cos(theta_j) - B sum_i h_i cos(theta_i)
//! ```
//!
//! evolved by single-site Metropolis sweeps at a constant temperature `T`
//! while `A(s)` and `B(s)` follow an annealing schedule.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{ising_energy, IsingInstance, SpinConfig};
use crate::schedule::{step_fraction, AnnealSchedule};

/// Temperature used for the headline runs, in GHz.
pub const DEFAULT_TEMPERATURE: f64 = 0.22;
/// Sweeps per run for the headline runs.
pub const DEFAULT_STEPS: usize = 150_000;
/// Cap on greedy-descent passes.
pub const DEFAULT_DESCENT_PASSES: usize = 100_000;

/// Rotor angles in `[0, 2pi)`. Broken sites hold `NaN` and are skipped by
/// every sum.
#[derive(Debug, Clone, Default)]
pub struct RotorState {
    theta: Vec<f64>,
}

/// Bitwise equality; broken-site sentinels compare equal.
impl PartialEq for RotorState {
    fn eq(&self, other: &Self) -> bool {
        self.theta.len() == other.theta.len()
            && self
                .theta
                .iter()
                .zip(&other.theta)
                .all(|(a, b)| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()))
    }
}

impl RotorState {
    /// Every active rotor along +x (`theta = pi/2`).
    pub fn transverse(inst: &IsingInstance) -> Self {
        Self::filled(inst, |_| FRAC_PI_2)
    }

    /// Independent uniform angles on active sites.
    pub fn uniform<R: Rng + ?Sized>(inst: &IsingInstance, rng: &mut R) -> Self {
        let mut theta = vec![f64::NAN; inst.n()];
        for site in inst.active_sites() {
            theta[site] = rng.gen_range(0.0..TAU);
        }
        RotorState { theta }
    }

    /// Wraps active angles into `[0, 2pi)` and marks broken sites.
    pub fn from_angles(inst: &IsingInstance, angles: Vec<f64>) -> Result<Self> {
        if angles.len() != inst.n() {
            return Err(Error::LengthMismatch {
                expected: inst.n(),
                got: angles.len(),
            });
        }
        let mut theta = angles;
        for (site, t) in theta.iter_mut().enumerate() {
            if !inst.is_active(site) {
                *t = f64::NAN;
            } else if !t.is_finite() {
                return Err(Error::Param(format!("non-finite angle at site {site}")));
            } else {
                *t = wrap(*t);
            }
        }
        Ok(RotorState { theta })
    }

    fn filled(inst: &IsingInstance, f: impl Fn(usize) -> f64) -> Self {
        RotorState {
            theta: (0..inst.n())
                .map(|s| if inst.is_active(s) { f(s) } else { f64::NAN })
                .collect(),
        }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Global z-flip `theta -> pi - theta`.
    pub fn z2_image(&self) -> Self {
        RotorState {
            theta: self.theta.iter().map(|&t| wrap(PI - t)).collect(),
        }
    }

    /// Largest wrapped angular distance between active rotors.
    pub fn max_angle_distance(&self, other: &RotorState) -> f64 {
        self.theta
            .iter()
            .zip(&other.theta)
            .filter(|(a, _)| !a.is_nan())
            .map(|(&a, &b)| angle_distance(a, b))
            .fold(0.0, f64::max)
    }
}

impl Serialize for RotorState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let angles: Vec<Option<f64>> = self
            .theta
            .iter()
            .map(|&t| if t.is_nan() { None } else { Some(t) })
            .collect();
        angles.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RotorState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let angles = Vec::<Option<f64>>::deserialize(d)?;
        Ok(RotorState {
            theta: angles.into_iter().map(|t| t.unwrap_or(f64::NAN)).collect(),
        })
    }
}

fn wrap(t: f64) -> f64 {
    let w = t.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Where the rotors start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialState {
    /// All rotors along the transverse field.
    Transverse,
    /// Uniform random angles, drawn from the run's generator.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Temperature in GHz (Boltzmann constant absorbed).
    pub temperature: f64,
    /// Number of full sweeps.
    pub steps: usize,
    /// Anneal fractions at which to record the state.
    #[serde(default)]
    pub snapshot_at: Vec<f64>,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            temperature: DEFAULT_TEMPERATURE,
            steps: DEFAULT_STEPS,
            snapshot_at: Vec::new(),
        }
    }
}

impl ModelParams {
    pub fn new(temperature: f64, steps: usize) -> Self {
        ModelParams {
            temperature,
            steps,
            snapshot_at: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Param(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if self.steps == 0 {
            return Err(Error::Param("steps must be >= 1".into()));
        }
        if let Some(s) = self.snapshot_at.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::FractionOutOfRange(*s));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub s: f64,
    pub theta: RotorState,
}

/// Outcome of one annealing run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub final_theta: RotorState,
    pub final_config: SpinConfig,
    pub final_energy: f64,
    /// Set by the caller after grading against an oracle.
    pub success: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<Snapshot>,
    pub accepted: u64,
    pub proposals: u64,
}

impl RunRecord {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

fn check_state(state: &RotorState, inst: &IsingInstance) -> Result<()> {
    if state.len() != inst.n() {
        return Err(Error::LengthMismatch {
            expected: inst.n(),
            got: state.len(),
        });
    }
    Ok(())
}

fn check_site(site: usize, inst: &IsingInstance) -> Result<()> {
    if site >= inst.n() {
        return Err(Error::SiteOutOfRange {
            site,
            total: inst.n(),
        });
    }
    if !inst.is_active(site) {
        return Err(Error::BrokenSite(site));
    }
    Ok(())
}

/// Model Hamiltonian at fixed `(A, B)`, in GHz.
pub fn model_energy(state: &RotorState, a: f64, b: f64, inst: &IsingInstance) -> Result<f64> {
    check_state(state, inst)?;
    let theta = state.theta();
    let transverse: f64 = inst.active_sites().map(|s| theta[s].sin()).sum();
    let coupling: f64 = inst
        .edges()
        .iter()
        .map(|e| e.coupling * theta[e.i].cos() * theta[e.j].cos())
        .sum();
    let field: f64 = match inst.fields() {
        Some(h) => inst.active_sites().map(|s| h[s] * theta[s].cos()).sum(),
        None => 0.0,
    };
    Ok(-a * transverse - b * coupling - b * field)
}

/// `sum_j J_ij cos(theta_j) + h_i`, the z-field at `site` before scaling by `B`.
fn local_z_field(theta: &[f64], site: usize, inst: &IsingInstance) -> f64 {
    inst.neighbors(site)
        .iter()
        .map(|&(j, coupling)| coupling * theta[j].cos())
        .sum::<f64>()
        + inst.field(site)
}

/// Energy change from moving rotor `site` to `theta_new`, all others fixed.
pub fn local_delta_energy(
    state: &RotorState,
    site: usize,
    theta_new: f64,
    a: f64,
    b: f64,
    inst: &IsingInstance,
) -> Result<f64> {
    check_state(state, inst)?;
    check_site(site, inst)?;
    let old = state.theta()[site];
    let z = local_z_field(state.theta(), site, inst);
    Ok(-a * (theta_new.sin() - old.sin()) - b * z * (theta_new.cos() - old.cos()))
}

/// Angle of the effective field `(A, B * z-field)` at `site`, measured from
/// the z-axis; the minimizer of that rotor's energy with all others fixed.
pub fn zero_temp_align(
    state: &RotorState,
    site: usize,
    a: f64,
    b: f64,
    inst: &IsingInstance,
) -> Result<f64> {
    check_state(state, inst)?;
    check_site(site, inst)?;
    let z = b * local_z_field(state.theta(), site, inst);
    if a == 0.0 && z == 0.0 {
        return Err(Error::ZeroField(site));
    }
    Ok(a.atan2(z))
}

/// z-spin of each rotor: `sign(cos theta)`, with `cos theta = 0` rounded up.
pub fn round_to_spins(state: &RotorState) -> SpinConfig {
    round_to_spins_banded(state, 0.0)
}

/// Like [`round_to_spins`], but every rotor with `|cos theta| <= band` counts
/// as a tie and rounds to `+1`. Used to read off minima in the regime where
/// rotors sit on the x-axis up to convergence noise.
pub fn round_to_spins_banded(state: &RotorState, band: f64) -> SpinConfig {
    SpinConfig(
        state
            .theta()
            .iter()
            .map(|&t| {
                if t.is_nan() {
                    0
                } else {
                    let c = t.cos();
                    if c >= 0.0 || c.abs() <= band {
                        1
                    } else {
                        -1
                    }
                }
            })
            .collect(),
    )
}

/// Mutable sweep state with cached trigonometry.
struct Workspace<'a> {
    inst: &'a IsingInstance,
    active: Vec<usize>,
    theta: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl<'a> Workspace<'a> {
    fn new(inst: &'a IsingInstance, state: RotorState) -> Self {
        let cos = state.theta.iter().map(|t| t.cos()).collect();
        let sin = state.theta.iter().map(|t| t.sin()).collect();
        Workspace {
            inst,
            active: inst.active_sites().collect(),
            theta: state.theta,
            cos,
            sin,
        }
    }

    fn state(&self) -> RotorState {
        RotorState {
            theta: self.theta.clone(),
        }
    }

    fn into_state(self) -> RotorState {
        RotorState { theta: self.theta }
    }

    /// One Metropolis sweep in index order; returns accepted moves.
    fn sweep<R: Rng + ?Sized>(&mut self, a: f64, b: f64, temperature: f64, rng: &mut R) -> u64 {
        let inv_t = 1.0 / temperature;
        let mut accepted = 0;
        for &i in &self.active {
            let proposal = rng.gen_range(0.0..TAU);
            let (sin_new, cos_new) = proposal.sin_cos();
            let mut z = self.inst.field(i);
            for &(j, coupling) in self.inst.neighbors(i) {
                z += coupling * self.cos[j];
            }
            let delta = -a * (sin_new - self.sin[i]) - b * z * (cos_new - self.cos[i]);
            if delta <= 0.0 || rng.gen::<f64>() < (-delta * inv_t).exp() {
                self.theta[i] = proposal;
                self.sin[i] = sin_new;
                self.cos[i] = cos_new;
                accepted += 1;
            }
        }
        accepted
    }
}

/// One Metropolis sweep over every active rotor in index order, with
/// uniform proposals on `[0, 2pi)` and acceptance `min(1, exp(-dE/T))`.
/// Returns the number of accepted moves.
pub fn metropolis_sweep<R: Rng + ?Sized>(
    state: &mut RotorState,
    a: f64,
    b: f64,
    temperature: f64,
    inst: &IsingInstance,
    rng: &mut R,
) -> Result<u64> {
    check_state(state, inst)?;
    if !(temperature > 0.0) {
        return Err(Error::Param(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let mut ws = Workspace::new(inst, std::mem::take(state));
    let accepted = ws.sweep(a, b, temperature, rng);
    *state = ws.into_state();
    Ok(accepted)
}

struct Trajectory {
    state: RotorState,
    snapshots: Vec<Snapshot>,
    accepted: u64,
    proposals: u64,
}

/// Runs sweeps `k = 0, 1, ...` at `s = k / (steps - 1)`, stopping after the
/// last step with `s <= stop`.
fn run_sweeps(
    inst: &IsingInstance,
    sched: &AnnealSchedule,
    params: &ModelParams,
    init: InitialState,
    rng: &mut ChaCha8Rng,
    stop: f64,
) -> Result<Trajectory> {
    params.validate()?;
    let start = match init {
        InitialState::Transverse => RotorState::transverse(inst),
        InitialState::Uniform => RotorState::uniform(inst, rng),
    };
    let mut ws = Workspace::new(inst, start);
    let mut wanted: Vec<f64> = params.snapshot_at.clone();
    wanted.sort_by(f64::total_cmp);
    wanted.dedup();
    let mut next_snap = 0;
    let mut snapshots = Vec::with_capacity(wanted.len());
    let mut accepted = 0u64;
    let mut proposals = 0u64;

    for k in 0..params.steps {
        let s = step_fraction(k, params.steps);
        if k > 0 && s > stop {
            break;
        }
        let (a, b) = sched.eval_unchecked(s);
        accepted += ws.sweep(a, b, params.temperature, rng);
        proposals += ws.active.len() as u64;
        while next_snap < wanted.len() && wanted[next_snap] <= s {
            snapshots.push(Snapshot {
                s: wanted[next_snap],
                theta: ws.state(),
            });
            next_snap += 1;
        }
    }
    Ok(Trajectory {
        state: ws.into_state(),
        snapshots,
        accepted,
        proposals,
    })
}

/// Full anneal from the transverse-field ground state.
pub fn anneal(
    inst: &IsingInstance,
    sched: &AnnealSchedule,
    params: &ModelParams,
    seed: u64,
) -> Result<RunRecord> {
    anneal_from(inst, sched, params, InitialState::Transverse, seed)
}

/// Full anneal with an explicit starting state.
pub fn anneal_from(
    inst: &IsingInstance,
    sched: &AnnealSchedule,
    params: &ModelParams,
    init: InitialState,
    seed: u64,
) -> Result<RunRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let traj = run_sweeps(inst, sched, params, init, &mut rng, 1.0)?;
    let final_config = round_to_spins(&traj.state);
    let final_energy = ising_energy(&final_config, inst)?;
    Ok(RunRecord {
        seed,
        final_theta: traj.state,
        final_config,
        final_energy,
        success: false,
        snapshots: traj.snapshots,
        accepted: traj.accepted,
        proposals: traj.proposals,
    })
}

/// Anneals only up to fraction `stop` (the same sweeps a full run would
/// perform before passing `stop`) and returns the state there.
pub fn anneal_until(
    inst: &IsingInstance,
    sched: &AnnealSchedule,
    params: &ModelParams,
    init: InitialState,
    seed: u64,
    stop: f64,
) -> Result<RotorState> {
    if !(0.0..=1.0).contains(&stop) {
        return Err(Error::FractionOutOfRange(stop));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(run_sweeps(inst, sched, params, init, &mut rng, stop)?.state)
}

/// Zero-temperature relaxation of the frozen Hamiltonian `H(A, B)`: aligns
/// each rotor with its effective field in index order until no rotor moves
/// by `tol` or more in a full pass. Rotors whose effective field vanishes
/// are left where they are.
pub fn greedy_descent(
    state: &RotorState,
    a: f64,
    b: f64,
    inst: &IsingInstance,
    tol: f64,
) -> Result<RotorState> {
    greedy_descent_capped(state, a, b, inst, tol, DEFAULT_DESCENT_PASSES)
}

pub fn greedy_descent_capped(
    state: &RotorState,
    a: f64,
    b: f64,
    inst: &IsingInstance,
    tol: f64,
    max_passes: usize,
) -> Result<RotorState> {
    check_state(state, inst)?;
    if !(tol > 0.0) {
        return Err(Error::Param(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let mut ws = Workspace::new(inst, state.clone());
    for _ in 0..max_passes {
        let mut max_change = 0.0f64;
        for idx in 0..ws.active.len() {
            let i = ws.active[idx];
            let mut z = inst.field(i);
            for &(j, coupling) in inst.neighbors(i) {
                z += coupling * ws.cos[j];
            }
            let z = b * z;
            if a == 0.0 && z == 0.0 {
                continue;
            }
            let target = a.atan2(z);
            let change = angle_distance(target, ws.theta[i]);
            if change > 0.0 {
                max_change = max_change.max(change);
                ws.theta[i] = target;
                let (s, c) = target.sin_cos();
                ws.sin[i] = s;
                ws.cos[i] = c;
            }
        }
        if max_change < tol {
            return Ok(ws.into_state());
        }
    }
    Err(Error::NoConvergence(max_passes))
}
