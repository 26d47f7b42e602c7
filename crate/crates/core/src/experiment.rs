//! Seeded parameter sweeps over generated instances.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::Angle;
use crate::error::{Error, Result};
use crate::formula::{generate, Formula, GeneratorKind};
use crate::solver::{self, MuSource, PlanKind, PrepMode, ReadoutMode, Schedule, SolveConfig, Verdict};

/// Radian inputs this close to π/2 are taken as exactly π/2.
pub const RIGHT_ANGLE_SNAP: f64 = 1e-4;

/// Parses a radian value, snapping near-π/2 inputs.
pub fn angle_from_radians(theta: f64) -> Result<Angle> {
    if (theta - std::f64::consts::FRAC_PI_2).abs() <= RIGHT_ANGLE_SNAP {
        Ok(Angle::right())
    } else {
        Angle::new(theta)
    }
}

/// One entry of an angle grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ThetaSpec {
    Radians(f64),
    /// Multiple of π/2.
    Fraction(f64),
    /// `cos θ = 1 − 2/n`.
    Unate,
}

impl ThetaSpec {
    pub fn resolve(self, n: usize) -> Result<Angle> {
        match self {
            ThetaSpec::Radians(t) => angle_from_radians(t),
            ThetaSpec::Fraction(x) => Angle::from_fraction(x),
            ThetaSpec::Unate => Angle::unate_schedule(n),
        }
    }
}

impl fmt::Display for ThetaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaSpec::Radians(t) => write!(f, "{t}"),
            ThetaSpec::Fraction(x) => write!(f, "frac:{x}"),
            ThetaSpec::Unate => f.write_str("unate"),
        }
    }
}

impl FromStr for ThetaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameter(format!("invalid angle entry {s:?}"));
        if s == "unate" {
            Ok(ThetaSpec::Unate)
        } else if let Some(x) = s.strip_prefix("frac:") {
            x.parse().map(ThetaSpec::Fraction).map_err(|_| bad())
        } else {
            s.parse().map(ThetaSpec::Radians).map_err(|_| bad())
        }
    }
}

/// Comma-separated grid; empty grids are rejected.
pub fn parse_theta_grid(s: &str) -> Result<Vec<ThetaSpec>> {
    let grid: Vec<ThetaSpec> = s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect::<Result<_>>()?;
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty angle grid".into()));
    }
    Ok(grid)
}

/// Inclusive range `a..b` or `a..=b` style `"4..14"`, or a comma list.
pub fn parse_n_range(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidParameter(format!("invalid n range {s:?}"));
    let ns: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
    };
    if ns.is_empty() {
        return Err(bad());
    }
    Ok(ns)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub kind: GeneratorKind,
    pub ns: Vec<usize>,
    /// Clause count; `None` uses `round(ratio · n)`.
    pub m: Option<usize>,
    pub ratio: f64,
    pub k: usize,
    pub thetas: Vec<ThetaSpec>,
    pub instances: usize,
    pub trials: usize,
    pub delta: f64,
    pub seed: u64,
    pub readout: ReadoutMode,
    pub plan: PlanKind,
    pub mode: PrepMode,
    pub mu_source: MuSource,
    pub budget: Option<u64>,
    /// Cubic-schedule cycle count; `None` runs fixed angles.
    pub cubic_cycles: Option<usize>,
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            kind: GeneratorKind::RandomKsat,
            ns: vec![6],
            m: None,
            ratio: 4.26,
            k: 3,
            thetas: vec![ThetaSpec::Fraction(1.0)],
            instances: 1,
            trials: 1,
            delta: 0.1,
            seed: 0,
            readout: ReadoutMode::Unique,
            plan: PlanKind::Sequential,
            mode: PrepMode::MonteCarlo,
            mu_source: MuSource::Empirical,
            budget: None,
            cubic_cycles: None,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub theta_spec: String,
    pub theta: f64,
    pub cos_theta: f64,
    pub trial: usize,
    /// `SAT`, `UNSAT` or `ERROR`.
    pub status: String,
    pub success: bool,
    pub measurements: u64,
    pub restarts: u64,
    pub readout_rounds: u64,
    pub cycles: usize,
    pub mu: Option<f64>,
    pub error: String,
    #[serde(skip)]
    sort_key: (usize, usize, usize, usize),
}

fn mix(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent stream per key, fixed by the master seed.
pub fn stream_rng(master: u64, key: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(key.iter().fold(0x9e37_79b9_7f4a_7c15, |acc, &k| mix(acc ^ k)));
    rng
}

fn instance_seed(master: u64, n: usize, i: usize) -> u64 {
    mix(mix(master ^ 0x5eed) ^ mix(n as u64) ^ (i as u64).rotate_left(32))
}

pub fn sweep_instance(cfg: &SweepConfig, n: usize, i: usize) -> Result<Formula> {
    let m = cfg.m.unwrap_or_else(|| (cfg.ratio * n as f64).round() as usize);
    generate(cfg.kind, n, m, cfg.k, instance_seed(cfg.seed, n, i))
}

/// Runs every `(instance, θ, trial)` cell. Per-cell failures become error
/// rows; only an invalid configuration is an error.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.thetas.is_empty() {
        return Err(Error::InvalidParameter("empty angle grid".into()));
    }
    if cfg.ns.is_empty() {
        return Err(Error::InvalidParameter("empty n range".into()));
    }
    let mut jobs = Vec::new();
    for &n in &cfg.ns {
        for i in 0..cfg.instances {
            for t in 0..cfg.thetas.len() {
                for trial in 0..cfg.trials {
                    jobs.push((n, i, t, trial));
                }
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let mut rows: Vec<SweepRow> = pool.install(|| jobs.par_iter().map(|&job| run_cell(cfg, job)).collect());
    rows.sort_by_key(|r| r.sort_key);
    Ok(rows)
}

fn run_cell(cfg: &SweepConfig, (n, i, t, trial): (usize, usize, usize, usize)) -> SweepRow {
    let spec = cfg.thetas[t];
    let mut row = SweepRow {
        instance: format!("n{n}_i{i}"),
        n,
        m: 0,
        theta_spec: spec.to_string(),
        theta: f64::NAN,
        cos_theta: f64::NAN,
        trial,
        status: "ERROR".into(),
        success: false,
        measurements: 0,
        restarts: 0,
        readout_rounds: 0,
        cycles: 0,
        mu: None,
        error: String::new(),
        sort_key: (n, i, t, trial),
    };
    let result = (|| -> Result<solver::RunReport> {
        let f = sweep_instance(cfg, n, i)?;
        row.m = f.num_clauses();
        let theta = spec.resolve(n)?;
        row.theta = theta.radians();
        row.cos_theta = theta.cos();
        let mut sc = SolveConfig::new(theta, cfg.delta);
        if let Some(c) = cfg.cubic_cycles {
            sc.prep.schedule = Schedule::Cubic { theta_init: theta, cycles: c };
        }
        sc.readout = cfg.readout;
        sc.prep.plan = cfg.plan;
        sc.prep.mode = cfg.mode;
        sc.prep.mu_source = cfg.mu_source;
        sc.budget = cfg.budget;
        sc.seed = cfg.seed;
        let mut rng = stream_rng(cfg.seed, &[n as u64, i as u64, t as u64, trial as u64]);
        solver::solve(&f, &sc, &mut rng)
    })();
    match result {
        Ok(r) => {
            row.success = r.status == Verdict::Sat;
            row.status = if row.success { "SAT" } else { "UNSAT" }.into();
            row.measurements = r.measurements;
            row.restarts = r.restarts;
            row.readout_rounds = r.readout_rounds;
            row.cycles = r.cycles_per_attempt;
            row.mu = r.mu;
        }
        Err(e) => row.error = e.to_string(),
    }
    row
}

fn csv_float(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.16e}")
    }
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "instance,n,m,theta_spec,theta,cos_theta,trial,status,success,measurements,restarts,readout_rounds,cycles,mu,error\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.instance,
            r.n,
            r.m,
            r.theta_spec,
            csv_float(r.theta),
            csv_float(r.cos_theta),
            r.trial,
            r.status,
            r.success,
            r.measurements,
            r.restarts,
            r.readout_rounds,
            r.cycles,
            r.mu.map(csv_float).unwrap_or_default(),
            csv_text(&r.error),
        ));
    }
    out
}

/// Mean cost per `(n, θ entry)` over successful rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub theta_spec: String,
    pub runs: usize,
    pub successes: usize,
    pub errors: usize,
    pub mean_measurements: f64,
}

pub fn summarize(rows: &[SweepRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(usize, usize), (String, Vec<&SweepRow>)> = BTreeMap::new();
    for r in rows {
        groups.entry((r.n, r.sort_key.2)).or_insert_with(|| (r.theta_spec.clone(), Vec::new())).1.push(r);
    }
    groups
        .into_iter()
        .map(|((n, _), (spec, rs))| {
            let ok: Vec<_> = rs.iter().filter(|r| r.success).collect();
            let mean = if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().map(|r| r.measurements as f64).sum::<f64>() / ok.len() as f64
            };
            SummaryRow {
                n,
                theta_spec: spec,
                runs: rs.len(),
                successes: ok.len(),
                errors: rs.iter().filter(|r| !r.error.is_empty()).count(),
                mean_measurements: mean,
            }
        })
        .collect()
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("n,theta_spec,runs,successes,errors,mean_measurements\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n,
            r.theta_spec,
            r.runs,
            r.successes,
            r.errors,
            csv_float(r.mean_measurements)
        ));
    }
    out
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
