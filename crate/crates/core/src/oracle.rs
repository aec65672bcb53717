//! Exact ground states for grading annealing runs.
//!
//! Two independent routes: brute-force enumeration for small instances, and
//! a frontier dynamic program over the Chimera cell grid whose state is the
//! set of already-placed spins that still have couplings to unplaced ones.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{ising_energy, ising_energy_exact, IsingInstance, Side, SpinConfig};

/// Largest active-spin count accepted by [`exhaustive_ground`].
pub const MAX_EXHAUSTIVE_SPINS: usize = 24;
/// Largest frontier (in spins) accepted by [`chimera_ground`].
pub const MAX_FRONTIER_SPINS: usize = 22;
/// Tie tolerance for non-integral instances.
pub const ENERGY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundState {
    pub energy: f64,
    pub config: SpinConfig,
    /// Number of minimizing configurations, when known.
    pub degeneracy: Option<u64>,
}

fn tie_tolerance(inst: &IsingInstance) -> f64 {
    if inst.is_integral() {
        0.0
    } else {
        ENERGY_TOLERANCE
    }
}

/// Minimum over all `2^n` assignments of the active spins, with the count of
/// minimizers. Walks a Gray code so each step flips one spin.
pub fn exhaustive_ground(inst: &IsingInstance) -> Result<GroundState> {
    let active: Vec<usize> = inst.active_sites().collect();
    let m = active.len();
    if m > MAX_EXHAUSTIVE_SPINS {
        return Err(Error::TooLarge(format!(
            "{m} active spins > {MAX_EXHAUSTIVE_SPINS} for exhaustive search"
        )));
    }
    let tol = tie_tolerance(inst);
    let mut config = SpinConfig::all_up(inst);
    let mut energy = ising_energy(&config, inst)?;
    let mut best = energy;
    let mut best_code = 0u64;
    let mut count = 1u64;
    let mut code = 0u64;

    for k in 1u64..(1u64 << m) {
        let bit = k.trailing_zeros() as usize;
        let site = active[bit];
        let z = &mut config.0;
        let mut local = inst.field(site);
        for &(j, coupling) in inst.neighbors(site) {
            local += coupling * f64::from(z[j]);
        }
        // E contains -z_i * local; flipping z_i changes it by 2 z_i local
        energy += 2.0 * f64::from(z[site]) * local;
        z[site] = -z[site];
        code ^= 1 << bit;
        if tol > 0.0 && k % 4096 == 0 {
            energy = ising_energy(&config, inst)?;
        }
        if energy < best - tol {
            best = energy;
            best_code = code;
            count = 1;
        } else if (energy - best).abs() <= tol {
            count += 1;
        }
    }

    let mut best_config = SpinConfig::all_up(inst);
    for (bit, &site) in active.iter().enumerate() {
        if best_code >> bit & 1 == 1 {
            best_config.0[site] = -1;
        }
    }
    let energy = ising_energy(&best_config, inst)?;
    Ok(GroundState {
        energy,
        config: best_config,
        degeneracy: Some(count),
    })
}

/// Active sites in cell-sweep order, column by column (or row by row).
/// Within a cell the block coupled along the sweep direction comes first.
fn sweep_order(inst: &IsingInstance, column_major: bool) -> Vec<usize> {
    let spec = inst.spec();
    let mut order = Vec::with_capacity(inst.n());
    let (outer, inner) = if column_major {
        (spec.cols, spec.rows)
    } else {
        (spec.rows, spec.cols)
    };
    let (first, second) = if column_major {
        (Side::Right, Side::Left)
    } else {
        (Side::Left, Side::Right)
    };
    for o in 0..outer {
        for i in 0..inner {
            let (row, col) = if column_major { (i, o) } else { (o, i) };
            for side in [first, second] {
                for k in 0..spec.cell_half {
                    let site = spec.site(row, col, side, k);
                    if inst.is_active(site) {
                        order.push(site);
                    }
                }
            }
        }
    }
    order
}

/// For each step of `order`, the sites that can be minimized out right
/// after it is placed (all their neighbours are placed by then).
fn elimination_plan(inst: &IsingInstance, order: &[usize]) -> (Vec<Vec<usize>>, usize) {
    let mut position = vec![usize::MAX; inst.n()];
    for (p, &s) in order.iter().enumerate() {
        position[s] = p;
    }
    let mut plan = vec![Vec::new(); order.len()];
    for (p, &s) in order.iter().enumerate() {
        let last = inst
            .neighbors(s)
            .iter()
            .map(|&(j, _)| position[j])
            .fold(p, usize::max);
        plan[last].push(s);
    }
    let mut size = 0usize;
    let mut peak = 0usize;
    for done in &plan {
        size += 1;
        peak = peak.max(size);
        size -= done.len();
    }
    (plan, peak)
}

struct Elimination {
    site: usize,
    /// Frontier after removal; bit `b` of a table index is `frontier[b]`.
    frontier: Vec<usize>,
    /// Bit set: 1 where the eliminated spin's best value is -1.
    choice: Vec<u64>,
}

/// Exact ground state by frontier dynamic programming over the cell grid.
/// Table bit 0 encodes `z = +1`, bit 1 encodes `z = -1`.
pub fn chimera_ground(inst: &IsingInstance) -> Result<GroundState> {
    let spec = inst.spec();
    // both sweep directions; keep the one with the smaller frontier
    let (order, plan, peak) = [true, false]
        .into_iter()
        .map(|column_major| {
            let order = sweep_order(inst, column_major);
            let (plan, peak) = elimination_plan(inst, &order);
            (order, plan, peak)
        })
        .min_by_key(|(_, _, peak)| *peak)
        .expect("two candidate orders");
    if peak > MAX_FRONTIER_SPINS {
        return Err(Error::TooLarge(format!(
            "{}x{} cells with half {} needs a {peak}-spin frontier (max {MAX_FRONTIER_SPINS})",
            spec.rows, spec.cols, spec.cell_half
        )));
    }

    let mut frontier: Vec<usize> = Vec::with_capacity(peak);
    let mut table: Vec<f64> = vec![0.0];
    let mut eliminations: Vec<Elimination> = Vec::with_capacity(order.len());

    for (&site, done) in order.iter().zip(&plan) {
        // place `site` as the new top bit
        let links: Vec<(usize, f64)> = inst
            .neighbors(site)
            .iter()
            .filter_map(|&(j, coupling)| {
                frontier.iter().position(|&f| f == j).map(|b| (b, coupling))
            })
            .collect();
        let h = inst.field(site);
        let len = table.len();
        let mut grown = vec![0.0; len * 2];
        for (idx, &base) in table.iter().enumerate() {
            // couplings to already placed spins: -J z_u z_v
            let mut s = 0.0;
            for &(b, coupling) in &links {
                let zu = if idx >> b & 1 == 0 { 1.0 } else { -1.0 };
                s += coupling * zu;
            }
            grown[idx] = base - s - h;
            grown[idx | len] = base + s + h;
        }
        table = grown;
        frontier.push(site);

        for &gone in done {
            let p = frontier
                .iter()
                .position(|&f| f == gone)
                .expect("eliminated site is on the frontier");
            let half = table.len() / 2;
            let low_mask = (1usize << p) - 1;
            let mut reduced = Vec::with_capacity(half);
            let mut choice = vec![0u64; half.div_ceil(64)];
            for idx in 0..half {
                let base = ((idx & !low_mask) << 1) | (idx & low_mask);
                let up = table[base];
                let down = table[base | (1 << p)];
                if down < up {
                    reduced.push(down);
                    choice[idx / 64] |= 1 << (idx % 64);
                } else {
                    reduced.push(up);
                }
            }
            table = reduced;
            frontier.remove(p);
            eliminations.push(Elimination {
                site: gone,
                frontier: frontier.clone(),
                choice,
            });
        }
    }
    debug_assert!(frontier.is_empty() && table.len() == 1);

    let mut config = SpinConfig::all_up(inst);
    for elim in eliminations.iter().rev() {
        let idx = elim
            .frontier
            .iter()
            .enumerate()
            .fold(0usize, |acc, (b, &s)| {
                acc | (usize::from(config.0[s] < 0) << b)
            });
        if elim.choice[idx / 64] >> (idx % 64) & 1 == 1 {
            config.0[elim.site] = -1;
        }
    }
    let energy = ising_energy(&config, inst)?;
    debug_assert!((energy - table[0]).abs() <= 1e-6 * (1.0 + energy.abs()));
    Ok(GroundState {
        energy,
        config,
        degeneracy: None,
    })
}

/// Exact ground state by whichever route fits: the cell-sweep program when
/// its frontier is small enough, otherwise enumeration.
pub fn ground_state(inst: &IsingInstance) -> Result<GroundState> {
    match chimera_ground(inst) {
        Err(Error::TooLarge(msg)) if inst.active_count() > MAX_EXHAUSTIVE_SPINS => {
            Err(Error::TooLarge(msg))
        }
        Err(Error::TooLarge(_)) => exhaustive_ground(inst),
        other => other,
    }
}

/// Whether `config` attains `ground_energy`. Integral instances compare
/// exactly in integers; others within [`ENERGY_TOLERANCE`].
pub fn is_ground(config: &SpinConfig, inst: &IsingInstance, ground_energy: f64) -> Result<bool> {
    if let Some(e) = ising_energy_exact(config, inst)? {
        return Ok(ground_energy.fract() == 0.0 && e == ground_energy as i64);
    }
    let e = ising_energy(config, inst)?;
    Ok((e - ground_energy).abs() <= ENERGY_TOLERANCE)
}

/// Cached ground states keyed by instance id.
pub type GroundCache = BTreeMap<String, GroundState>;

/// Renders the cache as `id,energy,config` CSV.
pub fn format_ground_cache(cache: &GroundCache) -> String {
    let mut out = String::from("id,energy,config\n");
    for (id, g) in cache {
        let _ = writeln!(out, "{id},{},{}", g.energy, g.config);
    }
    out
}

pub fn parse_ground_cache(text: &str, origin: &Path) -> Result<GroundCache> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut cache = GroundCache::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != "id,energy,config" {
                return Err(err(idx + 1, "header must be `id,energy,config`".into()));
            }
            saw_header = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(err(
                idx + 1,
                format!("expected 3 columns, got {}", cols.len()),
            ));
        }
        let energy = cols[1]
            .parse::<f64>()
            .map_err(|e| err(idx + 1, e.to_string()))?;
        let config = SpinConfig::parse(cols[2])
            .ok_or_else(|| err(idx + 1, "config must use + - .".into()))?;
        cache.insert(
            cols[0].to_string(),
            GroundState {
                energy,
                config,
                degeneracy: None,
            },
        );
    }
    Ok(cache)
}

pub fn read_ground_cache(path: impl AsRef<Path>) -> Result<GroundCache> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ground_cache(&text, path)
}
