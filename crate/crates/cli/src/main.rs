use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use svmc_cli::commands::{
    cmd_correlate, cmd_exact, cmd_gen, cmd_minima, cmd_run, cmd_stats, with_threads, GenOptions,
    MinimaCmdOptions, RunOptions, ScheduleSource, Solver, DEFAULT_STATS_BINS,
};
use svmc_core::baselines::{TemperatureLadder, DEFAULT_SA_T0, DEFAULT_SA_T1};
use svmc_core::instances::CouplingModel;
use svmc_core::svmc::{DEFAULT_STEPS, DEFAULT_TEMPERATURE};

#[derive(Parser)]
#[command(
    name = "svmc",
    version,
    about = "Rotor-model annealing experiments on Chimera instances"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random Chimera instances.
    Gen(GenArgs),
    /// Run a solver campaign and tabulate success probabilities.
    Run(RunArgs),
    /// Histogram and bimodality score of a results file.
    Stats(StatsArgs),
    /// Pearson correlation between two results files.
    Correlate(CorrelateArgs),
    /// Catalog of local minima reached from a mid-anneal state.
    Minima(MinimaArgs),
    /// Exact ground states for a set of instances.
    Exact(ExactArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 4)]
    rows: usize,
    #[arg(long, default_value_t = 4)]
    cols: usize,
    /// Sites per half cell.
    #[arg(long, default_value_t = 4)]
    half: usize,
    /// File listing broken site indices.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Coupling model: pm1 or rangeN.
    #[arg(long, default_value = "pm1")]
    coupling: CouplingModel,
    /// Add random local fields from this model.
    #[arg(long)]
    fields: Option<CouplingModel>,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "instances")]
    out: PathBuf,
}

#[derive(Args)]
struct ScheduleArgs {
    /// Schedule CSV with columns s,A_GHz,B_GHz (built-in table if omitted).
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Accept schedules where A rises or B falls.
    #[arg(long)]
    allow_nonmonotone: bool,
}

impl ScheduleArgs {
    fn source(&self) -> ScheduleSource {
        ScheduleSource {
            path: self.schedule.clone(),
            allow_nonmonotone: self.allow_nonmonotone,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Svmc,
    #[value(name = "sa_o2")]
    SaO2,
    #[value(name = "sa_bits")]
    SaBits,
}

#[derive(Clone, Copy, ValueEnum)]
enum LadderArg {
    Linear,
    Geometric,
}

#[derive(Args)]
struct RunArgs {
    /// Instance files or directories of `.ising` files.
    #[arg(required = true)]
    instances: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "svmc")]
    solver: SolverArg,
    #[arg(long = "runs", default_value_t = 100)]
    runs_per_instance: usize,
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// Temperature in GHz.
    #[arg(long, default_value_t = DEFAULT_TEMPERATURE)]
    temperature: f64,
    /// Monte Carlo sweeps per run.
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    steps: usize,
    #[arg(long, value_enum, default_value = "linear")]
    sa_ladder: LadderArg,
    #[arg(long, default_value_t = DEFAULT_SA_T0)]
    sa_t0: f64,
    #[arg(long, default_value_t = DEFAULT_SA_T1)]
    sa_t1: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "SVMC_THREADS", default_value_t = 0)]
    threads: usize,
    /// Ground-state cache written by `svmc exact`.
    #[arg(long)]
    ground_cache: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    results: PathBuf,
    #[arg(long, default_value_t = DEFAULT_STATS_BINS)]
    bins: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CorrelateArgs {
    a: PathBuf,
    b: PathBuf,
    /// Paired scatter CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MinimaArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 0.31)]
    s_star: f64,
    #[arg(long, default_value_t = 100)]
    probes: usize,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long, default_value_t = DEFAULT_TEMPERATURE)]
    temperature: f64,
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "SVMC_THREADS", default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExactArgs {
    #[arg(required = true)]
    instances: Vec<PathBuf>,
    #[arg(long, env = "SVMC_THREADS", default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => {
            let paths = cmd_gen(&GenOptions {
                rows: a.rows,
                cols: a.cols,
                half: a.half,
                mask: a.mask,
                coupling: a.coupling,
                fields: a.fields,
                count: a.count,
                seed: a.seed,
                out_dir: a.out.clone(),
            })?;
            println!("wrote {} instances to {}", paths.len(), a.out.display());
        }
        Command::Run(a) => {
            if a.runs_per_instance == 0 {
                bail!("--runs must be >= 1");
            }
            let (t0, t1) = (a.sa_t0, a.sa_t1);
            let opts = RunOptions {
                solver: match a.solver {
                    SolverArg::Svmc => Solver::Svmc,
                    SolverArg::SaO2 => Solver::SaO2,
                    SolverArg::SaBits => Solver::SaBits,
                },
                instances: a.instances,
                runs_per_instance: a.runs_per_instance,
                schedule: a.schedule.source(),
                temperature: a.temperature,
                steps: a.steps,
                sa_ladder: match a.sa_ladder {
                    LadderArg::Linear => TemperatureLadder::Linear { t0, t1 },
                    LadderArg::Geometric => TemperatureLadder::Geometric { t0, t1 },
                },
                seed: a.seed,
                ground_cache: a.ground_cache,
                out: a.out.clone(),
            };
            let output = with_threads(a.threads, || cmd_run(&opts))??;
            if a.out.is_none() {
                print!("{}", output.csv);
            }
        }
        Command::Stats(a) => {
            let output = cmd_stats(&a.results, a.bins, a.out.as_deref())?;
            if a.out.is_none() {
                print!("{}", output.csv);
            }
            match output.bimodality {
                Some(s) => println!("bimodality score: {s}"),
                None => println!("bimodality score: unavailable (too few instances)"),
            }
        }
        Command::Correlate(a) => {
            let output = cmd_correlate(&a.a, &a.b, a.out.as_deref())?;
            println!("pearson r = {} over {} instances", output.r, output.pairs);
        }
        Command::Minima(a) => {
            let opts = MinimaCmdOptions {
                instance: a.instance,
                s_star: a.s_star,
                n_probes: a.probes,
                schedule: a.schedule.source(),
                temperature: a.temperature,
                steps: a.steps,
                seed: a.seed,
                out: a.out.clone(),
                ..MinimaCmdOptions::default()
            };
            let doc = with_threads(a.threads, || cmd_minima(&opts))??;
            if a.out.is_none() {
                println!("{}", serde_json::to_string_pretty(&doc)?);
            } else {
                println!("{} distinct minima", doc["distinct_minima"]);
            }
        }
        Command::Exact(a) => {
            let text = with_threads(a.threads, || cmd_exact(&a.instances, a.out.as_deref()))??;
            if a.out.is_none() {
                print!("{text}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
