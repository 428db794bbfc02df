use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gibbsprep::harness::{
    exact_gibbs_report, report_resources, resources_csv, run_appendix_a, run_appendix_b, run_sweep,
    tfd_report, with_workers, write_resources_csv, AppendixAConfig, AppendixBConfig,
    ExperimentConfig, LayerRule, RunOutcome,
};
use gibbsprep::objective::{EntropyEstimator, DEFAULT_SHOTS};
use gibbsprep::{AnsatzConfig, Boundary, EvaluationMode};

#[derive(Parser)]
#[command(
    name = "gibbsprep",
    version,
    about = "Variational Gibbs-state preparation experiments"
)]
struct Cli {
    /// Log verbosity (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multistart optimization over a temperature grid.
    Sweep(SweepArgs),
    /// Coefficient-of-variation grid and power-law fits.
    AppendixA(AppendixAArgs),
    /// Constraint gaps and best product vs entangled distribution fidelities.
    AppendixB(AppendixBArgs),
    /// Gate and parameter counts.
    Resources(ResourcesArgs),
    /// Dump the exact Gibbs state, its spectrum and free energy.
    ExactGibbs(ExactGibbsArgs),
    /// Prepare the thermofield double from saved parameters.
    Tfd(TfdArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Shots,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    boundary: Option<Boundary>,
    /// Inverse temperature; repeat for a grid.
    #[arg(long = "beta")]
    beta: Vec<f64>,
    #[arg(long)]
    layers_ancilla: Option<usize>,
    #[arg(long)]
    layers_system: Option<usize>,
    /// Skip the ring-closing system gate for n >= 3.
    #[arg(long)]
    drop_nonadjacent_rp: bool,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Shots per measurement circuit in shot mode.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    miller_madow: bool,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reuse finished runs found in the output directory.
    #[arg(long)]
    resume: bool,
    #[arg(long)]
    workers: Option<usize>,
}

impl SweepArgs {
    fn into_config(self) -> Result<(ExperimentConfig, bool)> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)
                .with_context(|| format!("reading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(n) = self.n {
            c.n = n;
        }
        if let Some(h) = self.h {
            c.h = h;
        }
        if let Some(b) = self.boundary {
            c.boundary = b;
        }
        if !self.beta.is_empty() {
            c.beta_grid = self.beta;
        }
        if let Some(l) = self.layers_ancilla {
            c.layers_ancilla = l;
        }
        if self.layers_system.is_some() {
            c.layers_system = self.layers_system;
        }
        if self.drop_nonadjacent_rp {
            c.drop_nonadjacent_rp = true;
        }
        let current_shots = match c.mode {
            EvaluationMode::Shots {
                shots_per_circuit, ..
            } => shots_per_circuit,
            EvaluationMode::Exact => DEFAULT_SHOTS,
        };
        let shots = self.shots.unwrap_or(current_shots);
        let estimator = if self.miller_madow {
            EntropyEstimator::MillerMadow
        } else {
            match c.mode {
                EvaluationMode::Shots {
                    entropy_estimator, ..
                } => entropy_estimator,
                EvaluationMode::Exact => EntropyEstimator::PlugIn,
            }
        };
        let shot_mode = match self.mode {
            Some(Mode::Shots) => true,
            Some(Mode::Exact) => false,
            None => matches!(c.mode, EvaluationMode::Shots { .. }) || self.shots.is_some(),
        };
        c.mode = if shot_mode {
            EvaluationMode::Shots {
                shots_per_circuit: shots,
                entropy_estimator: estimator,
            }
        } else {
            EvaluationMode::Exact
        };
        if self.runs.is_some() {
            c.num_runs = self.runs;
        }
        if let Some(s) = self.seed {
            c.base_seed = s;
        }
        if let Some(out) = self.out {
            c.output_dir = out;
        }
        if self.workers.is_some() {
            c.workers = self.workers;
        }
        Ok((c, self.resume))
    }
}

#[derive(Args)]
struct AppendixAArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// System size; repeat for the fit range.
    #[arg(long = "n")]
    n: Vec<usize>,
    #[arg(long = "h")]
    h: Vec<f64>,
    #[arg(long = "boundary")]
    boundary: Vec<Boundary>,
    /// Inverse temperature; 0 is allowed.
    #[arg(long = "beta")]
    beta: Vec<f64>,
    /// Number of lowest levels to report.
    #[arg(long)]
    states: Option<usize>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct AppendixBArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "n")]
    n: Vec<usize>,
    #[arg(long = "h")]
    h: Vec<f64>,
    #[arg(long)]
    boundary: Option<Boundary>,
    #[arg(long = "beta")]
    beta: Vec<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    layers_ancilla: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ResourcesArgs {
    #[arg(long = "n", default_values_t = [3usize, 4, 5, 6, 7, 8])]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    layers_ancilla: usize,
    /// Fixed system layer count; defaults to n - 1.
    #[arg(long)]
    layers_system: Option<usize>,
    /// CSV path; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExactGibbsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    h: f64,
    #[arg(long, default_value_t = Boundary::Periodic)]
    boundary: Boundary,
    #[arg(long)]
    beta: f64,
    /// JSON path; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TfdArgs {
    /// A run file from a sweep (`params/<beta>/<run>.json`) or a JSON array
    /// of flat parameters.
    #[arg(long)]
    params: PathBuf,
    /// Sweep `config.json` describing the circuit; overrides the shape flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    layers_ancilla: usize,
    #[arg(long)]
    layers_system: Option<usize>,
    #[arg(long, default_value_t = Boundary::Periodic)]
    boundary: Boundary,
    #[arg(long)]
    drop_nonadjacent_rp: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => {
            fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
        }
        None => print_stdout(&(text + "\n")),
    }
}

// A closed pipe (`| head`) is not an error.
fn print_stdout(text: &str) -> Result<()> {
    match std::io::stdout().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn check_workers(workers: Option<usize>) -> Result<()> {
    if workers == Some(0) {
        bail!("--workers must be >= 1");
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let (config, resume) = args.into_config()?;
    check_workers(config.workers)?;
    let result = run_sweep(&config, resume)?;
    println!("beta,best_fidelity,best_free_energy,exact_free_energy");
    for p in &result.points {
        println!(
            "{},{:.6},{:.9},{:.9}",
            p.beta, p.best_fidelity, p.best_free_energy, p.exact_free_energy
        );
    }
    println!("wrote {}", result.output_dir.join("summary.csv").display());
    Ok(())
}

fn appendix_a(args: AppendixAArgs) -> Result<()> {
    let mut c = match &args.config {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
        None => AppendixAConfig::default(),
    };
    if !args.n.is_empty() {
        c.n_values = args.n;
    }
    if !args.h.is_empty() {
        c.h_values = args.h;
    }
    if !args.boundary.is_empty() {
        c.boundaries = args.boundary;
    }
    if !args.beta.is_empty() {
        c.beta_grid = args.beta;
    }
    if let Some(s) = args.states {
        c.num_states = s;
    }
    if let Some(s) = args.shots {
        c.shots = s;
    }
    if let Some(o) = args.out {
        c.output_dir = o;
    }
    check_workers(args.workers)?;
    let out = with_workers(args.workers, || run_appendix_a(&c))??;
    for f in out.fits.iter().filter(|f| f.state_index == 0) {
        println!(
            "{} h={} beta={}: alpha_0={:.4} C={:.4} r2={:.4}",
            f.boundary, f.h, f.beta, f.exponent, f.prefactor, f.r_squared
        );
    }
    println!("wrote {}", c.output_dir.display());
    Ok(())
}

fn appendix_b(args: AppendixBArgs) -> Result<()> {
    let mut c = match &args.config {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
        None => AppendixBConfig::default(),
    };
    if !args.n.is_empty() {
        c.n_values = args.n;
    }
    if !args.h.is_empty() {
        c.h_values = args.h;
    }
    if let Some(b) = args.boundary {
        c.boundary = b;
    }
    if !args.beta.is_empty() {
        c.beta_grid = args.beta;
    }
    if let Some(r) = args.restarts {
        c.restarts = r;
    }
    if let Some(l) = args.layers_ancilla {
        c.layers_ancilla = l;
    }
    if let Some(s) = args.seed {
        c.seed = s;
    }
    if let Some(o) = args.out {
        c.output_dir = o;
    }
    check_workers(args.workers)?;
    for r in with_workers(args.workers, || run_appendix_b(&c))?? {
        println!(
            "n={} h={} beta={}: gap={:.6e} product={:.6} entangled={:.6}",
            r.n, r.h, r.beta, r.constraint_gap, r.best_product_fidelity, r.best_entangled_fidelity
        );
    }
    println!("wrote {}", c.output_dir.display());
    Ok(())
}

fn resources(args: ResourcesArgs) -> Result<()> {
    let rule = args
        .layers_system
        .map_or(LayerRule::NMinusOne, LayerRule::Fixed);
    let rows = report_resources(&args.n, args.layers_ancilla, rule)?;
    match args.out {
        Some(path) => {
            write_resources_csv(&path, &rows)?;
            println!("wrote {}", path.display());
        }
        None => print_stdout(&resources_csv(&rows)?)?,
    }
    Ok(())
}

fn tfd(args: TfdArgs) -> Result<()> {
    let text = fs::read_to_string(&args.params)
        .with_context(|| format!("reading {}", args.params.display()))?;
    let flat: Vec<f64> = match serde_json::from_str::<RunOutcome>(&text) {
        Ok(outcome) => outcome.record.final_params,
        Err(_) => serde_json::from_str(&text)
            .context("expected a run file or a JSON array of parameters")?,
    };
    let config = match &args.config {
        Some(path) => ExperimentConfig::from_json_file(path)?.ansatz(),
        None => {
            let Some(n) = args.n else {
                bail!("give --config or --n to describe the circuit");
            };
            AnsatzConfig {
                n,
                layers_ancilla: args.layers_ancilla,
                layers_system: args
                    .layers_system
                    .unwrap_or_else(|| n.saturating_sub(1).max(1)),
                boundary: args.boundary,
                drop_nonadjacent_rp: args.drop_nonadjacent_rp,
            }
        }
    };
    let report = tfd_report(&config, &flat)?;
    emit_json(&report, args.out.as_deref())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    log::debug!("starting");
    match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::AppendixA(a) => appendix_a(a),
        Command::AppendixB(a) => appendix_b(a),
        Command::Resources(a) => resources(a),
        Command::ExactGibbs(a) => {
            let report = exact_gibbs_report(a.n, a.h, a.boundary, a.beta)?;
            emit_json(&report, a.out.as_deref())
        }
        Command::Tfd(a) => tfd(a),
    }
}
