//! `ptspec`: command-line front end of the point-spectra solver.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 input or configuration
//! error, 3 success with a truncated spectrum.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use point_spectra::green::{free_green, GreenKernel, KernelParams};
use point_spectra::harness::{
    compare_tables, flags, read_csv, run_convergence, run_epsilon_sweep, write_csv, Discretizer,
    ExperimentPlan,
};
use point_spectra::measure::{MeasureSpec, RNG_NAME};
use point_spectra::oracle::{circle_spectrum, CircleSpec};
use point_spectra::spectral::{find_spectrum, SchroedingerProblem, SolverOptions};
use point_spectra::{Error, VERSION};

const TOOL: &str = "ptspec";

#[derive(Debug, Parser)]
#[command(name = "ptspec", version, about = "Bound states of -Δ + ε²Δ² + μ for point measures μ")]
struct Cli {
    /// JSON configuration document.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads, 0 = one per core.
    #[arg(long, global = true, value_name = "K", default_value_t = 0)]
    threads: usize,
    /// Seed for random discretizers; overrides the configuration.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate the regularized and free kernels at the given radii.
    Green {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        alpha: f64,
        /// Comma-separated radii.
        #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
        r: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Negative spectrum of one problem described by --config.
    Solve,
    /// Exact bound states of the attractive circle.
    Oracle {
        #[arg(long, default_value_t = 10.0)]
        radius: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Convergence table for the plan in --config (default circle plan
    /// without one).
    Converge {
        /// Treat the plan as an ε sweep at fixed measure.
        #[arg(long)]
        sweep: bool,
    },
    /// Per-level error deltas between two convergence tables.
    Compare { a: PathBuf, b: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Configuration of `solve`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveConfig {
    spec: MeasureSpec,
    epsilon: f64,
    /// Sites; required unless `spec` is explicit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default)]
    discretizer: Discretizer,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    solver: SolverOptions,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_input_error() { 2 } else { 1 };
        Self { code, message: e.to_string() }
    }
}

#[derive(Debug, PartialEq, Eq)]
enum Outcome {
    Done,
    Truncated,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Truncated) => {
            eprintln!("{TOOL}: warning: spectrum truncated at the alpha cap");
            ExitCode::from(3)
        }
        Err(f) => {
            eprintln!("{TOOL}: error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Failure::input(format!("cannot start {} threads: {e}", cli.threads)))?;
    }
    match &cli.command {
        Command::Green { dim, epsilon, alpha, r, format } => {
            no_config(cli, "green")?;
            cmd_green(cli, *dim, *epsilon, *alpha, r, *format)
        }
        Command::Solve => cmd_solve(cli),
        Command::Oracle { radius, gamma, format } => {
            no_config(cli, "oracle")?;
            cmd_oracle(cli, *radius, *gamma, *format)
        }
        Command::Converge { sweep } => cmd_converge(cli, *sweep),
        Command::Compare { a, b } => {
            no_config(cli, "compare")?;
            cmd_compare(cli, a, b)
        }
    }
}

fn no_config(cli: &Cli, name: &str) -> Result<(), Failure> {
    match cli.config {
        Some(_) => Err(Failure::input(format!("`{name}` takes its parameters as flags, not --config"))),
        None => Ok(()),
    }
}

fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("invalid config {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::input(format!("cannot write {}: {e}", p.display()))),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::input(format!("cannot write to stdout: {e}"))),
    }
}

fn pretty(v: &impl Serialize) -> Result<Vec<u8>, Failure> {
    let mut s = serde_json::to_vec_pretty(v).map_err(Error::from)?;
    s.push(b'\n');
    Ok(s)
}

fn provenance(config: Value, rng: Value) -> Value {
    json!({ "tool": TOOL, "version": VERSION, "config": config, "rng": rng })
}

/// `<out>.meta.json` next to a CSV output; CSV files carry a single header
/// row, so provenance lives beside them.
fn write_sidecar(out: Option<&Path>, meta: &Value) -> Result<(), Failure> {
    if let Some(p) = out {
        let mut name = p.as_os_str().to_owned();
        name.push(".meta.json");
        emit(Some(Path::new(&name)), &pretty(meta)?)?;
    }
    Ok(())
}

fn csv_cell(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        v.to_string()
    }
}

fn cmd_green(cli: &Cli, dim: usize, epsilon: f64, alpha: f64, radii: &[f64], format: Format) -> Result<Outcome, Failure> {
    if radii.is_empty() {
        return Err(Failure::input("the r list is empty"));
    }
    let params = KernelParams::new(dim, epsilon, alpha)?;
    let kernel = GreenKernel::new(params)?;
    let mut table = Vec::with_capacity(radii.len());
    for &r in radii {
        let g = kernel.eval(r)?;
        let free = match free_green(dim, alpha, r) {
            Ok(v) => v,
            Err(Error::Singularity { .. }) => f64::INFINITY,
            Err(e) => return Err(e.into()),
        };
        table.push((r, g, free));
    }
    let config = json!({ "dim": dim, "epsilon": epsilon, "alpha": alpha, "r": radii });
    let meta = provenance(config, Value::Null);
    match format {
        Format::Csv => {
            let mut s = String::from("r,g_eps,g_free\n");
            for (r, g, f) in &table {
                s.push_str(&format!("{},{},{}\n", csv_cell(*r), csv_cell(*g), csv_cell(*f)));
            }
            emit(cli.out.as_deref(), s.as_bytes())?;
            write_sidecar(cli.out.as_deref(), &meta)?;
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .iter()
                .map(|(r, g, f)| json!({ "r": r, "g_eps": g, "g_free": if f.is_infinite() { json!("inf") } else { json!(f) } }))
                .collect();
            let mut doc = meta;
            doc["rows"] = Value::Array(rows);
            emit(cli.out.as_deref(), &pretty(&doc)?)?;
        }
    }
    Ok(Outcome::Done)
}

fn cmd_solve(cli: &Cli) -> Result<Outcome, Failure> {
    let path = cli.config.as_deref().ok_or_else(|| Failure::input("`solve` needs --config"))?;
    let mut config: SolveConfig = load_config(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.solver.validate()?;
    let measure = match (&config.spec, config.n) {
        (MeasureSpec::Explicit { measure }, _) => measure.clone(),
        (_, Some(n)) if n > 0 => config.discretizer.discretize(&config.spec, n, config.seed)?,
        _ => return Err(Failure::input("`n` must be a positive integer unless the spec is explicit")),
    };
    let rng = serde_json::to_value(measure.metadata()).map_err(Error::from)?;
    let problem = SchroedingerProblem::new(measure, config.epsilon)?;
    let result = find_spectrum(&problem, &config.solver)?;
    let truncated = result.truncated;
    let resolved = serde_json::to_value(&config).map_err(Error::from)?;
    let mut doc = provenance(resolved, rng);
    doc["result"] = serde_json::to_value(&result).map_err(Error::from)?;
    emit(cli.out.as_deref(), &pretty(&doc)?)?;
    Ok(if truncated { Outcome::Truncated } else { Outcome::Done })
}

fn cmd_oracle(cli: &Cli, radius: f64, gamma: f64, format: Format) -> Result<Outcome, Failure> {
    let spec = CircleSpec::new(radius, gamma)?;
    let sp = circle_spectrum(&spec)?;
    let meta = provenance(json!({ "radius": radius, "gamma": gamma }), Value::Null);
    match format {
        Format::Csv => {
            let mut s = String::from("l,kappa,energy,multiplicity\n");
            for l in &sp.levels {
                s.push_str(&format!("{},{},{},{}\n", l.l, l.kappa, l.energy, l.multiplicity));
            }
            emit(cli.out.as_deref(), s.as_bytes())?;
            write_sidecar(cli.out.as_deref(), &meta)?;
        }
        Format::Json => {
            let mut doc = meta;
            doc["levels"] = serde_json::to_value(&sp.levels).map_err(Error::from)?;
            emit(cli.out.as_deref(), &pretty(&doc)?)?;
        }
    }
    Ok(Outcome::Done)
}

fn cmd_converge(cli: &Cli, sweep: bool) -> Result<Outcome, Failure> {
    let mut plan = match cli.config.as_deref() {
        Some(p) => load_config::<ExperimentPlan>(p)?,
        None => ExperimentPlan::default_circle(),
    };
    if let Some(seed) = cli.seed {
        plan.seed = seed;
    }
    let out = cli.out.clone().or_else(|| plan.output.clone().map(PathBuf::from));
    let rows = if sweep { run_epsilon_sweep(&plan)? } else { run_convergence(&plan)? };
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    emit(out.as_deref(), &buf)?;
    let rng = match plan.discretizer {
        Discretizer::Midpoint => Value::Null,
        Discretizer::Random { .. } => json!({
            "generator": RNG_NAME,
            "seed": plan.seed,
            "cell_seed": "seed + N * 0x9E3779B97F4A7C15 (wrapping)",
        }),
    };
    let resolved = serde_json::to_value(&plan).map_err(Error::from)?;
    write_sidecar(out.as_deref(), &provenance(resolved, rng))?;
    let truncated = rows.iter().any(|r| r.flags.iter().any(|f| f == flags::TRUNCATED));
    Ok(if truncated { Outcome::Truncated } else { Outcome::Done })
}

fn cmd_compare(cli: &Cli, a: &Path, b: &Path) -> Result<Outcome, Failure> {
    let open = |p: &Path| fs::File::open(p).map_err(|e| Failure::input(format!("cannot open {}: {e}", p.display())));
    let ta = read_csv(open(a)?)?;
    let tb = read_csv(open(b)?)?;
    let summary = compare_tables(&ta, &tb)?;
    let config = json!({ "a": a.display().to_string(), "b": b.display().to_string() });
    let mut doc = provenance(config, Value::Null);
    doc["summary"] = serde_json::to_value(&summary).map_err(Error::from)?;
    emit(cli.out.as_deref(), &pretty(&doc)?)?;
    Ok(Outcome::Done)
}
