//! Command-line front end.
//!
//! Exit codes: 0 on success or SAT, 1 on UNSAT, 2 on usage or runtime
//! errors. Every subcommand accepts `--config FILE`, a `key = value` file
//! whose keys are flag names; flags given on the command line win.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{
    parse_n_range, parse_theta_grid, rows_to_csv, run_sweep, summarize, summary_to_csv, SweepConfig, ThetaSpec,
};
use crate::formula::{generate, parse_dimacs, Formula, GeneratorKind};
use crate::limits;
use crate::phf::{density_algorithm, density_row_bound, verify_phf};
use crate::solver::{self, MuSource, PlanKind, PrepMode, ReadoutMode, Schedule, SolveConfig, Verdict};
use crate::spectral::{spectral_report, SpectralReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNSAT: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mdsat", version, about = "Measurement-driven SAT solver simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Largest n for dense operator assembly.
    #[arg(long, global = true)]
    dense_cap: Option<usize>,

    /// Largest n for state-vector simulation.
    #[arg(long, global = true)]
    mc_cap: Option<usize>,

    /// Largest n for exhaustive enumeration.
    #[arg(long, global = true)]
    brute_cap: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a DIMACS instance.
    #[command(args_override_self = true)]
    Gen(GenArgs),
    /// Solve a DIMACS instance.
    #[command(args_override_self = true)]
    Solve(SolveArgs),
    /// Run a seeded sweep over generated instances.
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// Spectral diagnostics of an instance over an angle grid.
    #[command(args_override_self = true)]
    Spectral(SpectralArgs),
    /// Build and verify a perfect hash family.
    #[command(args_override_self = true)]
    Phf(PhfArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value = "random_ksat")]
    kind: GeneratorKind,
    #[arg(long)]
    n: usize,
    /// Defaults to round(4.26 n).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AngleArgs {
    /// Radians, `frac:x` (x · π/2) or `unate`. Values within 1e-4 of π/2
    /// are taken as exactly π/2.
    #[arg(long, default_value = "frac:1")]
    theta: ThetaSpec,
    /// Shorthand for `--theta frac:x`.
    #[arg(long)]
    theta_fraction: Option<f64>,
    /// Ramp from `--theta` to π/2 over this many cycles.
    #[arg(long)]
    cubic_cycles: Option<usize>,
}

impl AngleArgs {
    fn spec(&self) -> ThetaSpec {
        self.theta_fraction.map(ThetaSpec::Fraction).unwrap_or(self.theta)
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    input: PathBuf,
    #[command(flatten)]
    angle: AngleArgs,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value = "unique")]
    readout: ReadoutMode,
    #[arg(long, default_value = "monte_carlo")]
    mode: PrepMode,
    #[arg(long, default_value = "sequential")]
    plan: PlanKind,
    /// `empirical`, `dl_bound` or a number in [0, 1).
    #[arg(long, default_value = "empirical")]
    mu: MuSource,
    #[arg(long)]
    max_restarts: Option<u64>,
    /// Measurement budget before answering UNSAT.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON run report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write every clause check outcome as CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Print the JSON report on stdout instead of the verdict line.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value = "random_ksat")]
    kind: GeneratorKind,
    /// `a..b` (inclusive) or a comma list.
    #[arg(long, default_value = "6")]
    n: String,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 4.26)]
    ratio: f64,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Comma-separated angle grid.
    #[arg(long, default_value = "frac:1")]
    thetas: String,
    #[arg(long, default_value_t = 1)]
    instances: usize,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "unique")]
    readout: ReadoutMode,
    #[arg(long, default_value = "sequential")]
    plan: PlanKind,
    #[arg(long, default_value = "monte_carlo")]
    mode: PrepMode,
    #[arg(long, default_value = "empirical")]
    mu: MuSource,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    cubic_cycles: Option<usize>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Per-run CSV; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-(n, θ) mean cost CSV.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SpectralArgs {
    input: PathBuf,
    #[arg(long, default_value = "frac:1")]
    thetas: String,
    /// Also compute the uniform gap (sampled above 12 clauses).
    #[arg(long)]
    uniform_gap: bool,
    /// JSON output; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PhfArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Write the rows here and print only the verdict line.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// One angle of a spectral run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEntry {
    pub theta_spec: String,
    pub theta: Option<f64>,
    pub report: Option<SpectralReport>,
    pub error: Option<String>,
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run(args: Vec<String>) -> i32 {
    limits::load_from_env();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    if let Some(c) = cli.dense_cap {
        limits::set_dense_cap(c);
    }
    if let Some(c) = cli.mc_cap {
        limits::set_monte_carlo_cap(c);
    }
    if let Some(c) = cli.brute_cap {
        limits::set_brute_force_cap(c);
    }
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Spectral(a) => cmd_spectral(a),
        Command::Phf(a) => cmd_phf(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

const SUBCOMMANDS: [&str; 5] = ["gen", "solve", "sweep", "spectral", "phf"];

/// Replaces `--config FILE` with the file's settings, placed right after the
/// subcommand so later command-line flags override them.
pub fn expand_config(mut args: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let path = if let Some(p) = args[pos].strip_prefix("--config=") {
        let p = p.to_string();
        args.remove(pos);
        p
    } else {
        if pos + 1 >= args.len() {
            return Err(Error::InvalidParameter("--config needs a file".into()));
        }
        args.remove(pos);
        args.remove(pos)
    };
    let text = fs::read_to_string(&path)?;
    let flags = config_flags(&text)?;
    let sub = args
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.as_str()))
        .ok_or_else(|| Error::InvalidParameter("--config given without a subcommand".into()))?;
    args.splice(sub + 1..sub + 1, flags);
    Ok(args)
}

/// `key = value` lines to flags. `true` gives a bare switch, `false` drops
/// it; `#` starts a comment line.
pub fn config_flags(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("expected key = value, got {line:?}") })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        if key.is_empty() {
            return Err(Error::Parse { line: i + 1, msg: "empty key".into() });
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            v => out.push(format!("--{key}={v}")),
        }
    }
    Ok(out)
}

fn read_formula(path: &Path) -> Result<Formula> {
    parse_dimacs(&fs::read_to_string(path)?)
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<i32> {
    let m = a.m.unwrap_or_else(|| (4.26 * a.n as f64).round() as usize);
    let f = generate(a.kind, a.n, m, a.k, a.seed)?;
    emit(a.out.as_deref(), &f.to_dimacs())?;
    Ok(EXIT_OK)
}

fn cmd_solve(a: SolveArgs) -> Result<i32> {
    let f = read_formula(&a.input)?;
    let theta = a.angle.spec().resolve(f.num_vars())?;
    let mut cfg = SolveConfig::new(theta, a.delta);
    if let Some(c) = a.angle.cubic_cycles {
        cfg.prep.schedule = Schedule::Cubic { theta_init: theta, cycles: c };
    }
    cfg.readout = a.readout;
    cfg.prep.mode = a.mode;
    cfg.prep.plan = a.plan;
    cfg.prep.mu_source = a.mu;
    cfg.prep.max_restarts = a.max_restarts;
    cfg.budget = a.budget;
    cfg.seed = a.seed;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let (report, trace) = if a.trace.is_some() {
        let (r, t) = solver::solve_traced(&f, &cfg, &mut rng)?;
        (r, Some(t))
    } else {
        (solver::solve(&f, &cfg, &mut rng)?, None)
    };
    let json = report.to_json()?;
    if let Some(p) = &a.report {
        fs::write(p, &json)?;
    }
    if let (Some(p), Some(t)) = (&a.trace, &trace) {
        fs::write(p, solver::trace_to_csv(t))?;
    }
    if a.json {
        println!("{json}");
    } else {
        match &report.assignment {
            Some(x) => println!("SAT {x}"),
            None => println!("UNSAT"),
        }
    }
    Ok(if report.status == Verdict::Sat { EXIT_OK } else { EXIT_UNSAT })
}

fn cmd_sweep(a: SweepArgs) -> Result<i32> {
    let cfg = SweepConfig {
        kind: a.kind,
        ns: parse_n_range(&a.n)?,
        m: a.m,
        ratio: a.ratio,
        k: a.k,
        thetas: parse_theta_grid(&a.thetas)?,
        instances: a.instances,
        trials: a.trials,
        delta: a.delta,
        seed: a.seed,
        readout: a.readout,
        plan: a.plan,
        mode: a.mode,
        mu_source: a.mu,
        budget: a.budget,
        cubic_cycles: a.cubic_cycles,
        workers: a.workers,
    };
    let rows = run_sweep(&cfg)?;
    emit(a.out.as_deref(), &rows_to_csv(&rows))?;
    if let Some(p) = &a.summary {
        fs::write(p, summary_to_csv(&summarize(&rows)))?;
    }
    Ok(EXIT_OK)
}

/// Diagnostics for each grid angle; failures become error entries.
pub fn spectral_entries(f: &Formula, grid: &[ThetaSpec], with_uniform_gap: bool) -> Vec<SpectralEntry> {
    grid.iter()
        .map(|spec| {
            let theta = spec.resolve(f.num_vars());
            let result = match &theta {
                Ok(t) => spectral_report(f, *t, with_uniform_gap),
                Err(e) => Err(Error::InvalidParameter(e.to_string())),
            };
            SpectralEntry {
                theta_spec: spec.to_string(),
                theta: theta.ok().map(|t| t.radians()),
                error: result.as_ref().err().map(ToString::to_string),
                report: result.ok(),
            }
        })
        .collect()
}

fn opt_float(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

pub fn spectral_csv(entries: &[SpectralEntry]) -> String {
    let mut out = String::from(
        "theta_spec,theta,d_sol,gap,uniform_gap,uniform_gap_exact,mu_emp,g,friedrichs_c,dl_slack,qub_slack,gap_bound_slack,speed_slack,error\n",
    );
    for e in entries {
        let cells = match &e.report {
            Some(r) => [
                r.d_sol.to_string(),
                opt_float(Some(r.gap)),
                opt_float(r.uniform_gap.map(|u| u.value)),
                r.uniform_gap.map(|u| u.exact.to_string()).unwrap_or_default(),
                opt_float(Some(r.mu_emp)),
                r.g.to_string(),
                opt_float(r.friedrichs_c),
                opt_float(Some(r.dl_slack)),
                opt_float(Some(r.qub_slack)),
                opt_float(Some(r.gap_bound_slack)),
                opt_float(r.speed_slack),
            ],
            None => Default::default(),
        };
        let err = e.error.as_deref().unwrap_or("").replace('"', "'");
        out.push_str(&format!("{},{},{},\"{}\"\n", e.theta_spec, opt_float(e.theta), cells.join(","), err));
    }
    out
}

fn cmd_spectral(a: SpectralArgs) -> Result<i32> {
    let f = read_formula(&a.input)?;
    let grid = parse_theta_grid(&a.thetas)?;
    let entries = spectral_entries(&f, &grid, a.uniform_gap);
    let json = serde_json::to_string_pretty(&entries)? + "\n";
    emit(a.out.as_deref(), &json)?;
    if let Some(p) = &a.csv {
        fs::write(p, spectral_csv(&entries))?;
    }
    Ok(EXIT_OK)
}

fn cmd_phf(a: PhfArgs) -> Result<i32> {
    let fam = density_algorithm(a.n, a.k)?;
    let verified = verify_phf(&fam);
    let verdict = format!(
        "# verified={verified} rows={} n={} k={} bound={:.6}",
        fam.num_rows(),
        a.n,
        a.k,
        density_row_bound(a.n, a.k)
    );
    match &a.out {
        Some(p) => {
            fs::write(p, fam.to_text())?;
            println!("{verdict}");
        }
        None => print!("{verdict}\n{}", fam.to_text()),
    }
    Ok(if verified { EXIT_OK } else { EXIT_ERROR })
}
