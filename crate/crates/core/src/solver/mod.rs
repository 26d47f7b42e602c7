//! Measurement-driven solver: state preparation by repeated clause checks
//! with global restart, solution readout, and the outer solve loop.

mod bounds;
mod prepare;
mod readout;

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::Angle;
use crate::error::{Error, Result};
use crate::formula::Formula;

pub use bounds::{theory_bounds, BoundInputs, BoundReport, RateInput};
pub use prepare::{prepare_state, resolve_mu, trace_to_csv, PrepOutcome, Preparation, Preparer, TraceEvent};
pub use readout::{
    multiple_copies, multiple_epsilon, readout_multiple, readout_unique, unique_copies, unique_epsilon, ReadoutFailure,
    ReadoutOutcome, UniqueReadout,
};

/// Default starting angle of the cubic schedule, as a fraction of π/2.
pub const CUBIC_INIT_FRACTION: f64 = 0.47;

/// Angle per preparation cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    Fixed {
        theta: Angle,
    },
    /// `θ(c) = θ_init + (π/2 − θ_init)(c/c_Q)³` for `c = 0..=c_Q`.
    Cubic {
        theta_init: Angle,
        cycles: usize,
    },
}

impl Schedule {
    pub fn fixed(theta: Angle) -> Self {
        Schedule::Fixed { theta }
    }

    pub fn cubic(cycles: usize) -> Self {
        Schedule::Cubic { theta_init: Angle::from_fraction(CUBIC_INIT_FRACTION).expect("valid"), cycles }
    }

    /// Angle used by the readout stage: the fixed angle, or π/2 at the end
    /// of a cubic ramp.
    pub fn final_angle(&self) -> Angle {
        match *self {
            Schedule::Fixed { theta } => theta,
            Schedule::Cubic { .. } => Angle::right(),
        }
    }

    /// Smallest angle visited.
    pub fn initial_angle(&self) -> Angle {
        match *self {
            Schedule::Fixed { theta } => theta,
            Schedule::Cubic { theta_init, .. } => theta_init,
        }
    }
}

pub fn schedule_angle(s: &Schedule, c: usize) -> Result<Angle> {
    match *s {
        Schedule::Fixed { theta } => Ok(theta),
        Schedule::Cubic { theta_init, cycles } => {
            if c > cycles {
                return Err(Error::InvalidParameter(format!("cycle {c} beyond schedule length {cycles}")));
            }
            if c == cycles {
                return Ok(Angle::right());
            }
            let t0 = theta_init.radians();
            let x = c as f64 / cycles as f64;
            Angle::new(t0 + (FRAC_PI_2 - t0) * x * x * x)
        }
    }
}

/// Where the convergence rate `μ` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuSource {
    /// `‖T − P_GS‖₂` by dense SVD.
    Empirical,
    /// `1 − Δ/(4g²)` with the exact gap.
    DlBound,
    User(f64),
}

impl fmt::Display for MuSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MuSource::Empirical => f.write_str("empirical"),
            MuSource::DlBound => f.write_str("dl_bound"),
            MuSource::User(mu) => write!(f, "{mu}"),
        }
    }
}

impl FromStr for MuSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "empirical" => Ok(MuSource::Empirical),
            "dl_bound" | "dl" => Ok(MuSource::DlBound),
            _ => s
                .parse::<f64>()
                .map(MuSource::User)
                .map_err(|_| Error::InvalidParameter(format!("unknown mu source {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrepMode {
    /// Sample each check; restart from `|+^n⟩` on any failure.
    MonteCarlo,
    /// Follow the all-pass branch with renormalization.
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    Sequential,
    Layered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutMode {
    Unique,
    Multiple,
}

macro_rules! snake_enum_str {
    ($t:ty, $($v:ident => $s:literal),+) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$v => $s),+ })
            }
        }
        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok(Self::$v),)+
                    _ => Err(Error::InvalidParameter(format!("unknown {} {s:?}", stringify!($t)))),
                }
            }
        }
    };
}

snake_enum_str!(PrepMode, MonteCarlo => "monte_carlo", Deterministic => "deterministic");
snake_enum_str!(PlanKind, Sequential => "sequential", Layered => "layered");
snake_enum_str!(ReadoutMode, Unique => "unique", Multiple => "multiple");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepConfig {
    pub schedule: Schedule,
    pub epsilon: f64,
    pub mu_source: MuSource,
    /// `None` derives a limit from the success-probability floor.
    pub max_restarts: Option<u64>,
    pub mode: PrepMode,
    pub plan: PlanKind,
    /// Failure probability used for the derived restart limit.
    pub delta: f64,
}

impl PrepConfig {
    pub fn new(theta: Angle) -> Self {
        PrepConfig {
            schedule: Schedule::fixed(theta),
            epsilon: 0.01,
            mu_source: MuSource::Empirical,
            max_restarts: None,
            mode: PrepMode::MonteCarlo,
            plan: PlanKind::Sequential,
            delta: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon {} outside (0, 1)", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta {} outside (0, 1)", self.delta)));
        }
        if self.max_restarts == Some(0) {
            return Err(Error::InvalidParameter("max_restarts must be at least 1".into()));
        }
        if let MuSource::User(mu) = self.mu_source {
            if !(0.0..1.0).contains(&mu) {
                return Err(Error::InvalidParameter(format!("mu {mu} outside [0, 1)")));
            }
        }
        if let Schedule::Cubic { cycles: 0, .. } = self.schedule {
            return Err(Error::InvalidParameter("cubic schedule needs at least one cycle".into()));
        }
        Ok(())
    }

    /// `⌈10 ln(1/δ) / ((1 + cosθ)/2)^n⌉`, with θ = π/2 for cubic ramps.
    pub fn restart_limit(&self, n: usize) -> u64 {
        if let Some(r) = self.max_restarts {
            return r;
        }
        let theta = match self.schedule {
            Schedule::Fixed { theta } => theta,
            Schedule::Cubic { .. } => Angle::right(),
        };
        let floor = ((1.0 + theta.cos()) / 2.0).powi(n as i32);
        let limit = (10.0 * (1.0 / self.delta).ln() / floor).ceil();
        if limit >= u64::MAX as f64 {
            u64::MAX
        } else {
            (limit as u64).max(1)
        }
    }
}

/// `r* = ⌈ln((ε cos^n(θ/2))^{-1}) / ln(μ^{-1})⌉`, at least 1.
pub fn cycles_required(theta: Angle, n: usize, epsilon: f64, mu: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} outside (0, 1)")));
    }
    if !(0.0..1.0).contains(&mu) {
        return Err(Error::InvalidParameter(format!("mu {mu} outside [0, 1)")));
    }
    if mu == 0.0 {
        return Ok(1);
    }
    let num = (1.0 / epsilon).ln() + n as f64 * (1.0 / (theta.radians() / 2.0).cos()).ln();
    let r = (num / (1.0 / mu).ln()).ceil();
    Ok(if r < 1.0 { 1 } else { r as usize })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "SAT")]
    Sat,
    #[serde(rename = "UNSAT")]
    Unsat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub prep: PrepConfig,
    pub readout: ReadoutMode,
    /// Measurement budget before answering UNSAT; `None` derives it.
    pub budget: Option<u64>,
    /// Recorded in the report only; the caller seeds the RNG.
    pub seed: u64,
}

impl SolveConfig {
    pub fn new(theta: Angle, delta: f64) -> Self {
        let mut prep = PrepConfig::new(theta);
        prep.delta = delta;
        SolveConfig { prep, readout: ReadoutMode::Unique, budget: None, seed: 0 }
    }
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub status: Verdict,
    pub assignment: Option<String>,
    pub n: usize,
    pub m: usize,
    pub schedule: Schedule,
    pub readout: ReadoutMode,
    pub mode: PrepMode,
    pub plan: PlanKind,
    pub checks_per_cycle: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub mu_source: MuSource,
    /// `None` when μ could not be computed and one cycle was used.
    pub mu: Option<f64>,
    pub cycles_per_attempt: usize,
    pub copies_per_readout: usize,
    pub readout_rounds: u64,
    pub restarts: u64,
    pub measurements: u64,
    pub budget: u64,
    pub seed: u64,
    pub wall_time_s: f64,
}

impl RunReport {
    /// Copy with the wall-clock field zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> RunReport {
        RunReport { wall_time_s: 0.0, ..self.clone() }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Prepare-and-read-out until a verified assignment appears or the
/// measurement budget runs out.
pub fn solve<R: Rng + ?Sized>(f: &Formula, cfg: &SolveConfig, rng: &mut R) -> Result<RunReport> {
    solve_inner(f, cfg, rng, None)
}

/// [`solve`] that also records every clause or layer check outcome.
pub fn solve_traced<R: Rng + ?Sized>(
    f: &Formula,
    cfg: &SolveConfig,
    rng: &mut R,
) -> Result<(RunReport, Vec<TraceEvent>)> {
    let mut trace = Vec::new();
    let report = solve_inner(f, cfg, rng, Some(&mut trace))?;
    Ok((report, trace))
}

fn solve_inner<R: Rng + ?Sized>(
    f: &Formula,
    cfg: &SolveConfig,
    rng: &mut R,
    mut trace: Option<&mut Vec<TraceEvent>>,
) -> Result<RunReport> {
    let start = Instant::now();
    cfg.prep.validate()?;
    let n = f.num_vars();
    let delta = cfg.prep.delta;
    let theta_read = cfg.prep.schedule.final_angle();
    let (epsilon, copies) = match cfg.readout {
        ReadoutMode::Unique => (unique_epsilon(theta_read), unique_copies(theta_read, n, delta)),
        ReadoutMode::Multiple => (multiple_epsilon(theta_read), multiple_copies(theta_read, n, delta) * n),
    };
    let prep_cfg = PrepConfig { epsilon, ..cfg.prep.clone() };
    let unique = UniqueReadout::new(f, &prep_cfg)?;
    let preparer = unique.preparer();
    let budget = cfg.budget.unwrap_or_else(|| default_budget(f, &prep_cfg, preparer, copies));

    let mut measurements = 0u64;
    let mut restarts = 0u64;
    let mut rounds = 0u64;
    let mut found = None;
    while measurements < budget {
        rounds += 1;
        let out = match cfg.readout {
            ReadoutMode::Unique => unique.run_traced(rng, trace.as_deref_mut())?,
            ReadoutMode::Multiple => readout::readout_multiple_traced(f, &prep_cfg, rng, trace.as_deref_mut())?,
        };
        measurements += out.measurements;
        restarts += out.restarts;
        if out.satisfies {
            found = out.assignment;
            break;
        }
    }
    if let Some(a) = &found {
        if !f.evaluate(a)? {
            return Err(Error::Internal("reported assignment does not satisfy the formula".into()));
        }
    }
    Ok(RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        status: if found.is_some() { Verdict::Sat } else { Verdict::Unsat },
        assignment: found.map(|a| a.to_string()),
        n,
        m: f.num_clauses(),
        schedule: cfg.prep.schedule,
        readout: cfg.readout,
        mode: cfg.prep.mode,
        plan: cfg.prep.plan,
        checks_per_cycle: preparer.checks_per_cycle(),
        delta,
        epsilon,
        mu_source: cfg.prep.mu_source,
        mu: preparer.mu(),
        cycles_per_attempt: preparer.cycles(),
        copies_per_readout: copies,
        readout_rounds: rounds,
        restarts,
        measurements,
        budget,
        seed: cfg.seed,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// `10 · T_S · copies`, at least `2^n`.
fn default_budget(f: &Formula, cfg: &PrepConfig, preparer: &Preparer, copies: usize) -> u64 {
    let n = f.num_vars();
    let theta = cfg.schedule.initial_angle();
    let t_s = preparer.checks_per_cycle().max(1) as f64
        * preparer.cycles() as f64
        * (1.0 / cfg.delta).ln()
        * (2.0 / (1.0 + theta.cos())).powi(n as i32);
    let b = (10.0 * t_s * copies.max(1) as f64).max(2f64.powi(n as i32)).ceil();
    if b >= u64::MAX as f64 {
        u64::MAX
    } else {
        b as u64
    }
}
