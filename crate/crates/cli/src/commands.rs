//! Implementation of the `svmc` subcommands.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;
use svmc_core::analysis::{
    bimodality_score, bin_edges, branching_diff, histogram, minima_catalog, pearson, MinimaOptions,
    SuccessEstimate, DEFAULT_BINS,
};
use svmc_core::baselines::{sa_bits, sa_o2, TemperatureLadder, DEFAULT_SA_T0, DEFAULT_SA_T1};
use svmc_core::instances::{
    build_chimera, format_instance, random_instance, read_instance, read_mask, with_random_fields,
    ChimeraSpec, CouplingModel, IsingInstance,
};
use svmc_core::oracle::{
    format_ground_cache, ground_state, is_ground, read_ground_cache, GroundCache, GroundState,
};
use svmc_core::schedule::{AnnealSchedule, DEFAULT_SCHEDULE_NAME};
use svmc_core::seeds::derive_seed;
use svmc_core::svmc::{anneal, ModelParams, DEFAULT_STEPS, DEFAULT_TEMPERATURE};
use svmc_core::Error as CoreError;

use crate::meta::Metadata;
use crate::results::{format_results, read_probabilities};

/// Runs `f` on a pool with `threads` workers (0 = rayon's default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building thread pool")?;
    Ok(pool.install(f))
}

fn write_output(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Clone, Default)]
pub struct ScheduleSource {
    /// CSV file; the built-in approximate schedule when `None`.
    pub path: Option<PathBuf>,
    pub allow_nonmonotone: bool,
}

impl ScheduleSource {
    pub fn load(&self) -> Result<(AnnealSchedule, String)> {
        match &self.path {
            None => Ok((
                AnnealSchedule::default_schedule(),
                DEFAULT_SCHEDULE_NAME.to_string(),
            )),
            Some(p) => {
                let sched = AnnealSchedule::read_csv(p, !self.allow_nonmonotone)?;
                Ok((sched, p.display().to_string()))
            }
        }
    }
}

/// Expands directories into their `*.ising` files, sorted by name.
pub fn collect_instance_paths(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)
                .with_context(|| format!("listing {}", input.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "ising"))
                .collect();
            found.sort();
            paths.extend(found);
        } else if input.is_file() {
            paths.push(input.clone());
        } else {
            bail!("instance file {} not found", input.display());
        }
    }
    ensure!(!paths.is_empty(), "no instance files given");
    Ok(paths)
}

/// Reads instances and orders them by id; ids must be unique.
pub fn load_instances(inputs: &[PathBuf]) -> Result<Vec<IsingInstance>> {
    let mut instances = collect_instance_paths(inputs)?
        .iter()
        .map(|p| read_instance(p).map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    instances.sort_by(|a, b| a.id().cmp(b.id()));
    for w in instances.windows(2) {
        ensure!(
            w[0].id() != w[1].id(),
            "duplicate instance id '{}'",
            w[0].id()
        );
    }
    Ok(instances)
}

// ---------------------------------------------------------------- gen

#[derive(Debug, Clone)]
pub struct GenOptions {
    pub rows: usize,
    pub cols: usize,
    pub half: usize,
    pub mask: Option<PathBuf>,
    pub coupling: CouplingModel,
    pub fields: Option<CouplingModel>,
    pub count: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            rows: 4,
            cols: 4,
            half: 4,
            mask: None,
            coupling: CouplingModel::Pm1,
            fields: None,
            count: 1,
            seed: 0,
            out_dir: PathBuf::from("instances"),
        }
    }
}

/// Writes `count` instances named `<seed>-<index>.ising` plus `manifest.json`.
pub fn cmd_gen(opts: &GenOptions) -> Result<Vec<PathBuf>> {
    let mut spec = ChimeraSpec::new(opts.rows, opts.cols, opts.half);
    if let Some(mask) = &opts.mask {
        spec.broken = read_mask(mask)?;
    }
    let adjacency = build_chimera(&spec)?;
    std::fs::create_dir_all(&opts.out_dir)
        .with_context(|| format!("creating {}", opts.out_dir.display()))?;

    let mut paths = Vec::with_capacity(opts.count);
    let mut ids = Vec::with_capacity(opts.count);
    for index in 0..opts.count {
        let id = format!("{}-{}", opts.seed, index);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, "gen", index as u64));
        let mut inst = random_instance(&adjacency, &mut rng, opts.coupling, id.clone())?;
        if let Some(model) = opts.fields {
            inst = with_random_fields(&inst, &mut rng, model)?;
        }
        let path = opts.out_dir.join(format!("{id}.ising"));
        write_output(&path, &format_instance(&inst))?;
        paths.push(path);
        ids.push(id);
    }

    let mut meta = Metadata::new("gen");
    meta.set("rows", opts.rows)
        .set("cols", opts.cols)
        .set("half", opts.half)
        .set("broken", format!("{:?}", spec.broken))
        .set("coupling", opts.coupling)
        .set(
            "fields",
            opts.fields.map_or("none".to_string(), |m| m.to_string()),
        )
        .set("count", opts.count)
        .set("seed", opts.seed);
    let manifest = json!({
        "metadata": meta.to_json(),
        "instances": ids,
        "active_sites": spec.active_count(),
        "edges": adjacency.edges.len(),
    });
    write_output(
        &opts.out_dir.join("manifest.json"),
        &(serde_json::to_string_pretty(&manifest)? + "\n"),
    )?;
    Ok(paths)
}

// ---------------------------------------------------------------- exact

fn solve_all(instances: &[IsingInstance]) -> Result<Vec<GroundState>> {
    instances
        .par_iter()
        .map(|inst| {
            ground_state(inst).with_context(|| format!("oracle failed on instance {}", inst.id()))
        })
        .collect()
}

/// Computes ground states and renders the `id,energy,config` cache.
pub fn cmd_exact(inputs: &[PathBuf], out: Option<&Path>) -> Result<String> {
    let instances = load_instances(inputs)?;
    let grounds = solve_all(&instances)?;
    let cache: GroundCache = instances
        .iter()
        .zip(grounds)
        .map(|(inst, g)| (inst.id().to_string(), g))
        .collect();
    let mut meta = Metadata::new("exact");
    meta.set("instances", instances.len());
    let text = meta.to_comment_block() + &format_ground_cache(&cache);
    if let Some(out) = out {
        write_output(out, &text)?;
    }
    Ok(text)
}

/// Ground energies for `instances`, from the cache where present.
fn ground_energies(instances: &[IsingInstance], cache: Option<&Path>) -> Result<Vec<f64>> {
    let cache = match cache {
        Some(p) => read_ground_cache(p)?,
        None => GroundCache::new(),
    };
    let missing: Vec<IsingInstance> = instances
        .iter()
        .filter(|i| !cache.contains_key(i.id()))
        .cloned()
        .collect();
    let solved: HashMap<String, GroundState> = missing
        .iter()
        .map(|i| i.id().to_string())
        .zip(solve_all(&missing)?)
        .collect();
    instances
        .iter()
        .map(|inst| {
            let g = cache
                .get(inst.id())
                .or_else(|| solved.get(inst.id()))
                .expect("every instance is cached or solved");
            let e = svmc_core::instances::ising_energy(&g.config, inst).with_context(|| {
                format!("cached ground state for {} has wrong length", inst.id())
            })?;
            ensure!(
                (e - g.energy).abs() <= 1e-9,
                "cached ground energy for {} ({}) does not match its configuration ({e})",
                inst.id(),
                g.energy
            );
            Ok(g.energy)
        })
        .collect()
}

// ---------------------------------------------------------------- run

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Svmc,
    SaO2,
    SaBits,
}

impl std::fmt::Display for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Solver::Svmc => "svmc",
            Solver::SaO2 => "sa_o2",
            Solver::SaBits => "sa_bits",
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub solver: Solver,
    pub instances: Vec<PathBuf>,
    pub runs_per_instance: usize,
    pub schedule: ScheduleSource,
    pub temperature: f64,
    pub steps: usize,
    pub sa_ladder: TemperatureLadder,
    pub seed: u64,
    pub ground_cache: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            solver: Solver::Svmc,
            instances: Vec::new(),
            runs_per_instance: 100,
            schedule: ScheduleSource::default(),
            temperature: DEFAULT_TEMPERATURE,
            steps: DEFAULT_STEPS,
            sa_ladder: TemperatureLadder::Linear {
                t0: DEFAULT_SA_T0,
                t1: DEFAULT_SA_T1,
            },
            seed: 0,
            ground_cache: None,
            out: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<SuccessEstimate>,
    pub csv: String,
}

/// Runs every instance `runs_per_instance` times, grades each run against
/// the exact ground energy and tabulates success probabilities. Run `r` of
/// instance `id` is seeded with `derive_seed(seed, id, r)`, so the output
/// does not depend on the thread count.
pub fn cmd_run(opts: &RunOptions) -> Result<RunOutput> {
    ensure!(
        opts.runs_per_instance >= 1,
        "runs_per_instance must be >= 1"
    );
    let instances = load_instances(&opts.instances)?;
    let (sched, sched_name) = opts.schedule.load()?;
    let params = ModelParams::new(opts.temperature, opts.steps);
    params.validate()?;
    opts.sa_ladder.validate()?;
    let grounds = ground_energies(&instances, opts.ground_cache.as_deref())?;

    let runs = opts.runs_per_instance;
    let outcomes = (0..instances.len() * runs)
        .into_par_iter()
        .map(|task| {
            let (idx, run) = (task / runs, task % runs);
            let inst = &instances[idx];
            let seed = derive_seed(opts.seed, inst.id(), run as u64);
            let record = match opts.solver {
                Solver::Svmc => anneal(inst, &sched, &params, seed),
                Solver::SaO2 => sa_o2(inst, &sched, &params, seed),
                Solver::SaBits => sa_bits(inst, &opts.sa_ladder, opts.steps, seed),
            }?;
            is_ground(&record.final_config, inst, grounds[idx])
        })
        .collect::<std::result::Result<Vec<bool>, CoreError>>()?;

    let rows = instances
        .iter()
        .zip(outcomes.chunks(runs))
        .map(|(inst, hits)| {
            let n_success = hits.iter().filter(|&&h| h).count() as u64;
            SuccessEstimate::from_counts(inst.id(), runs as u64, n_success)
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;

    let mut meta = Metadata::new("run");
    meta.set("solver", opts.solver)
        .set("instances", instances.len())
        .set("runs_per_instance", runs)
        .set("seed", opts.seed)
        .set("steps", opts.steps);
    match opts.solver {
        Solver::Svmc | Solver::SaO2 => {
            meta.set("temperature_ghz", opts.temperature)
                .set("schedule", &sched_name);
        }
        Solver::SaBits => {
            meta.set("sa_ladder", opts.sa_ladder);
        }
    }
    let csv = format_results(&meta, &rows);
    if let Some(out) = &opts.out {
        write_output(out, &csv)?;
    }
    Ok(RunOutput { rows, csv })
}

// ---------------------------------------------------------------- stats

#[derive(Debug, Clone)]
pub struct StatsOutput {
    pub counts: Vec<usize>,
    /// `None` when there are too few instances for the score.
    pub bimodality: Option<f64>,
    pub csv: String,
}

/// Histogram CSV (`bin_lo,bin_hi,count`) plus the bimodality score.
pub fn cmd_stats(results: &Path, n_bins: usize, out: Option<&Path>) -> Result<StatsOutput> {
    let rows = read_probabilities(results)?;
    let ps: Vec<f64> = rows.iter().map(|r| r.p).collect();
    let counts = histogram(&ps, n_bins)?;
    let bimodality = match bimodality_score(&ps) {
        Ok(score) => Some(score),
        Err(CoreError::Param(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let mut meta = Metadata::new("stats");
    meta.set("results", results.display())
        .set("instances", ps.len())
        .set("bins", n_bins)
        .set(
            "bimodality_score",
            bimodality.map_or("n/a".to_string(), |s| s.to_string()),
        );
    let mut csv = meta.to_comment_block();
    csv.push_str("bin_lo,bin_hi,count\n");
    for ((lo, hi), c) in bin_edges(n_bins).into_iter().zip(&counts) {
        let _ = writeln!(csv, "{lo},{hi},{c}");
    }
    if let Some(out) = out {
        write_output(out, &csv)?;
    }
    Ok(StatsOutput {
        counts,
        bimodality,
        csv,
    })
}

pub const DEFAULT_STATS_BINS: usize = DEFAULT_BINS;

// ---------------------------------------------------------------- correlate

#[derive(Debug, Clone)]
pub struct CorrelateOutput {
    pub r: f64,
    pub pairs: usize,
    pub csv: String,
}

/// Joins two probability files on instance id, writes the paired scatter
/// CSV and returns Pearson's R over the pairs.
pub fn cmd_correlate(a: &Path, b: &Path, out: Option<&Path>) -> Result<CorrelateOutput> {
    let rows_a = read_probabilities(a)?;
    let rows_b: BTreeMap<String, f64> = read_probabilities(b)?
        .into_iter()
        .map(|r| (r.instance_id, r.p))
        .collect();
    let mut pairs: Vec<(String, f64, f64)> = rows_a
        .into_iter()
        .filter_map(|r| {
            rows_b
                .get(&r.instance_id)
                .map(|&pb| (r.instance_id, r.p, pb))
        })
        .collect();
    pairs.sort_by(|x, y| x.0.cmp(&y.0));
    pairs.dedup_by(|x, y| x.0 == y.0);
    ensure!(
        pairs.len() >= 2,
        "only {} overlapping instance ids between {} and {}; need at least 2",
        pairs.len(),
        a.display(),
        b.display()
    );

    let mut meta = Metadata::new("correlate");
    meta.set("a", a.display())
        .set("b", b.display())
        .set("pairs", pairs.len());
    let xs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.2).collect();
    let r = pearson(&xs, &ys);
    meta.set(
        "pearson_r",
        r.as_ref()
            .map_or("undefined".to_string(), |r| r.to_string()),
    );
    let mut csv = meta.to_comment_block();
    csv.push_str("instance_id,p_a,p_b\n");
    for (id, pa, pb) in &pairs {
        let _ = writeln!(csv, "{id},{pa},{pb}");
    }
    // the scatter is useful even when R is undefined
    if let Some(out) = out {
        write_output(out, &csv)?;
    }
    let r = r.with_context(|| {
        "cannot correlate: one side has zero variance (e.g. every instance solved with p = 1)"
    })?;
    Ok(CorrelateOutput {
        r,
        pairs: pairs.len(),
        csv,
    })
}

// ---------------------------------------------------------------- minima

#[derive(Debug, Clone)]
pub struct MinimaCmdOptions {
    pub instance: PathBuf,
    pub s_star: f64,
    pub n_probes: usize,
    pub schedule: ScheduleSource,
    pub temperature: f64,
    pub steps: usize,
    pub seed: u64,
    pub descent_tol: f64,
    pub zero_band: f64,
    pub out: Option<PathBuf>,
}

impl Default for MinimaCmdOptions {
    fn default() -> Self {
        let defaults = MinimaOptions::default();
        MinimaCmdOptions {
            instance: PathBuf::new(),
            s_star: 0.31,
            n_probes: 100,
            schedule: ScheduleSource::default(),
            temperature: DEFAULT_TEMPERATURE,
            steps: DEFAULT_STEPS,
            seed: 0,
            descent_tol: defaults.descent_tol,
            zero_band: defaults.zero_band,
            out: None,
        }
    }
}

/// Local-minima catalog at `s_star` plus the branching diff between the two
/// most frequent minima.
pub fn cmd_minima(opts: &MinimaCmdOptions) -> Result<serde_json::Value> {
    let inst = read_instance(&opts.instance)?;
    let (sched, sched_name) = opts.schedule.load()?;
    let params = ModelParams::new(opts.temperature, opts.steps);
    let mopts = MinimaOptions {
        descent_tol: opts.descent_tol,
        zero_band: opts.zero_band,
        ..MinimaOptions::default()
    };
    let catalog = minima_catalog(
        &inst,
        &sched,
        &params,
        opts.s_star,
        opts.n_probes,
        opts.seed,
        &mopts,
    )?;
    let branching = match catalog.entries.as_slice() {
        [first, second, ..] => {
            let sites = branching_diff(&first.config, &second.config)?;
            json!([{ "minima": [0, 1], "sites": sites }])
        }
        _ => json!([]),
    };
    let mut meta = Metadata::new("minima");
    meta.set("instance", inst.id())
        .set("s_star", opts.s_star)
        .set("n_probes", opts.n_probes)
        .set("seed", opts.seed)
        .set("steps", opts.steps)
        .set("temperature_ghz", opts.temperature)
        .set("schedule", sched_name)
        .set("descent_tol", opts.descent_tol)
        .set("zero_band", opts.zero_band);
    let doc = json!({
        "metadata": meta.to_json(),
        "catalog": catalog,
        "distinct_minima": catalog.len(),
        "branching": branching,
    });
    if let Some(out) = &opts.out {
        write_output(out, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    }
    Ok(doc)
}
