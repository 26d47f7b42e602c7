//! Solution readout from prepared copies.
//!
//! Unique readout measures every qubit of `R` copies in the computational
//! basis and takes a per-qubit majority vote. Multiple readout estimates
//! `⟨Z̃⟩` of one qubit at a time, fixes that variable, propagates it through
//! the formula and re-encodes the smaller instance.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::prepare::{Preparer, TraceEvent};
use super::PrepConfig;
use crate::encoding::Angle;
use crate::error::{Error, Result};
use crate::formula::{Assignment, Formula, Propagation};
use crate::statevec::{one_probability, BasisSampler};

/// `((1 − 1/√2)²/8) sin²θ`.
pub fn unique_epsilon(theta: Angle) -> f64 {
    (1.0 - std::f64::consts::FRAC_1_SQRT_2).powi(2) / 8.0 * theta.sin().powi(2)
}

/// `R = ⌈2 ln(n/δ) / ln(2/(1 + cos²θ))⌉`.
pub fn unique_copies(theta: Angle, n: usize, delta: f64) -> usize {
    if n == 0 {
        return 0;
    }
    let c2 = theta.cos().powi(2);
    (2.0 * (n as f64 / delta).ln() / (2.0 / (1.0 + c2)).ln()).ceil().max(1.0) as usize
}

/// `sin²θ / 8`.
pub fn multiple_epsilon(theta: Angle) -> f64 {
    theta.sin().powi(2) / 8.0
}

/// `r = ⌈8 ln(2n/δ) / sin²θ⌉` copies per variable.
pub fn multiple_copies(theta: Angle, n: usize, delta: f64) -> usize {
    if n == 0 {
        return 0;
    }
    (8.0 * (2.0 * n as f64 / delta).ln() / theta.sin().powi(2)).ceil().max(1.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutFailure {
    /// The returned assignment does not satisfy the formula.
    Verification,
    /// A fixed value left the reduced formula unsatisfiable.
    PropagationUnsat,
    /// A preparation ran out of restarts.
    RestartsExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutOutcome {
    pub assignment: Option<Assignment>,
    pub satisfies: bool,
    pub failure: Option<ReadoutFailure>,
    pub copies: usize,
    pub restarts: u64,
    pub measurements: u64,
}

impl ReadoutOutcome {
    fn failed(kind: ReadoutFailure, copies: usize, restarts: u64, measurements: u64) -> Self {
        ReadoutOutcome { assignment: None, satisfies: false, failure: Some(kind), copies, restarts, measurements }
    }
}

/// Unique readout with its preparer built once.
#[derive(Debug, Clone)]
pub struct UniqueReadout<'a> {
    f: &'a Formula,
    preparer: Preparer,
    sampler: Option<BasisSampler>,
    copies: usize,
}

impl<'a> UniqueReadout<'a> {
    /// `cfg.epsilon` is used as given; [`readout_unique`] sets it.
    pub fn new(f: &'a Formula, cfg: &PrepConfig) -> Result<Self> {
        let preparer = Preparer::new(f, cfg)?;
        let sampler = preparer.final_state().map(BasisSampler::new);
        let copies = unique_copies(cfg.schedule.final_angle(), f.num_vars(), cfg.delta);
        Ok(UniqueReadout { f, preparer, sampler, copies })
    }

    pub fn preparer(&self) -> &Preparer {
        &self.preparer
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ReadoutOutcome> {
        self.run_traced(rng, None)
    }

    pub(crate) fn run_traced<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        mut trace: Option<&mut Vec<TraceEvent>>,
    ) -> Result<ReadoutOutcome> {
        let n = self.f.num_vars();
        let mut votes = vec![0i64; n];
        let (mut restarts, mut measurements) = (0u64, 0u64);
        for _ in 0..self.copies {
            match self.preparer.sample(rng, trace.as_deref_mut()) {
                Ok(o) => {
                    restarts += o.restarts;
                    measurements += o.measurements;
                }
                Err(Error::RestartsExhausted { restarts: r, measurements: m }) => {
                    return Ok(ReadoutOutcome::failed(
                        ReadoutFailure::RestartsExhausted,
                        self.copies,
                        restarts + r,
                        measurements + m,
                    ));
                }
                Err(e) => return Err(e),
            }
            let idx = self.sampler.as_ref().expect("preparation succeeded").sample(rng);
            measurements += 1;
            for (q, v) in votes.iter_mut().enumerate() {
                *v += if idx >> q & 1 == 1 { 1 } else { -1 };
            }
        }
        let a = Assignment::new(votes.iter().map(|&v| v > 0).collect());
        let satisfies = self.f.evaluate(&a)?;
        Ok(ReadoutOutcome {
            assignment: Some(a),
            satisfies,
            failure: (!satisfies).then_some(ReadoutFailure::Verification),
            copies: self.copies,
            restarts,
            measurements,
        })
    }
}

/// Majority-vote readout for a formula promised to have one solution.
pub fn readout_unique<R: Rng + ?Sized>(f: &Formula, cfg: &PrepConfig, rng: &mut R) -> Result<ReadoutOutcome> {
    let cfg = PrepConfig { epsilon: unique_epsilon(cfg.schedule.final_angle()), ..cfg.clone() };
    UniqueReadout::new(f, &cfg)?.run(rng)
}

/// Variable-by-variable readout for formulas with any number of solutions.
pub fn readout_multiple<R: Rng + ?Sized>(f: &Formula, cfg: &PrepConfig, rng: &mut R) -> Result<ReadoutOutcome> {
    readout_multiple_traced(f, cfg, rng, None)
}

pub(crate) fn readout_multiple_traced<R: Rng + ?Sized>(
    f: &Formula,
    cfg: &PrepConfig,
    rng: &mut R,
    mut trace: Option<&mut Vec<TraceEvent>>,
) -> Result<ReadoutOutcome> {
    let n = f.num_vars();
    let theta = cfg.schedule.final_angle();
    let sin = theta.sin();
    let copies = multiple_copies(theta, n, cfg.delta);
    let step_cfg = PrepConfig { epsilon: multiple_epsilon(theta), ..cfg.clone() };
    let mut bits = vec![false; n];
    let mut current = f.clone();
    let (mut restarts, mut measurements, mut used) = (0u64, 0u64, 0usize);
    for bit in bits.iter_mut() {
        // the live variable is always number 1 after re-indexing
        let value = if !current.occurs(1) {
            false
        } else {
            let preparer = Preparer::new(&current, &step_cfg)?;
            if preparer.mu().is_none() && matches!(step_cfg.schedule, super::Schedule::Fixed { .. }) {
                return Ok(ReadoutOutcome::failed(ReadoutFailure::PropagationUnsat, used, restarts, measurements));
            }
            let p_one = preparer.final_state().map(|s| one_probability(s, 0));
            let mut sum = 0i64;
            for _ in 0..copies {
                used += 1;
                match preparer.sample(rng, trace.as_deref_mut()) {
                    Ok(o) => {
                        restarts += o.restarts;
                        measurements += o.measurements;
                    }
                    Err(Error::RestartsExhausted { restarts: r, measurements: m }) => {
                        return Ok(ReadoutOutcome::failed(
                            ReadoutFailure::RestartsExhausted,
                            used,
                            restarts + r,
                            measurements + m,
                        ));
                    }
                    Err(e) => return Err(e),
                }
                measurements += 1;
                sum += if rng.random::<f64>() < p_one.expect("preparation succeeded") { 1 } else { -1 };
            }
            let p_hat = sum as f64 / copies as f64;
            // TRUE only when −sinθ is the farther endpoint
            (p_hat + sin).abs() > (p_hat - sin).abs()
        };
        *bit = value;
        current = match current.propagate(1, value)? {
            Propagation::Unsat => {
                return Ok(ReadoutOutcome::failed(ReadoutFailure::PropagationUnsat, used, restarts, measurements));
            }
            Propagation::Reduced(g) => g.remove_variable(1)?,
        };
    }
    let a = Assignment::new(bits);
    let satisfies = f.evaluate(&a)?;
    Ok(ReadoutOutcome {
        failure: (!satisfies).then_some(ReadoutFailure::Verification),
        assignment: Some(a),
        satisfies,
        copies: used,
        restarts,
        measurements,
    })
}
