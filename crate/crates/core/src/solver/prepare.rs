//! State preparation by cycles of clause checks with global restart.
//!
//! With global restart every surviving attempt follows the same all-pass
//! branch, so that branch is computed once: conditional pass probabilities
//! `p_j`, survival products `S_j = Π_{i≤j} p_i` and the final state. A Monte
//! Carlo attempt draws one uniform `u` and fails at the first step with
//! `u ≥ S_j`, which reproduces per-check sampling exactly in distribution.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{cycles_required, schedule_angle, MuSource, PlanKind, PrepConfig, PrepMode, Schedule};
use crate::encoding::{clause_projectors, non_commuting_degree, Angle, ClauseProjector};
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::phf;
use crate::spectral;
use crate::statevec::{self, cycle_pass_in_place, MeasurementPlan, StateVector, MIN_BRANCH_PROBABILITY};

/// One clause or layer check in a recorded trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub attempt: u64,
    pub cycle: usize,
    /// Group index within the measurement plan.
    pub group: usize,
    pub passed: bool,
    /// Probability of the observed outcome.
    pub probability: f64,
}

/// CSV with header `attempt,cycle,group,outcome,probability`.
pub fn trace_to_csv(events: &[TraceEvent]) -> String {
    let mut out = String::from("attempt,cycle,group,outcome,probability\n");
    for e in events {
        out.push_str(&format!(
            "{},{},{},{},{:.16e}\n",
            e.attempt,
            e.cycle,
            e.group,
            if e.passed { "pass" } else { "fail" },
            e.probability
        ));
    }
    out
}

/// Resolves `μ` for a fixed angle and plan.
pub fn resolve_mu(f: &Formula, theta: Angle, plan: &MeasurementPlan, source: MuSource) -> Result<f64> {
    if let MuSource::User(mu) = source {
        return Ok(mu);
    }
    let projectors = clause_projectors(f, theta)?;
    // commuting checks: the cycle product is the ground-space projector
    if theta.is_right() || non_commuting_degree(&projectors) == 0 {
        if f.count_solutions()? == 0 {
            return Err(Error::Unsatisfiable);
        }
        return Ok(0.0);
    }
    match source {
        MuSource::Empirical => Ok(spectral::convergence_rate(f, theta, plan)?.min(1.0 - f64::EPSILON)),
        MuSource::DlBound => {
            let gap = spectral::spectral_gap(f, theta)?;
            let g = non_commuting_degree(&projectors) as f64;
            Ok((1.0 - gap / (4.0 * g * g)).clamp(0.0, 1.0 - f64::EPSILON))
        }
        MuSource::User(_) => unreachable!(),
    }
}

#[derive(Debug, Clone, Copy)]
struct Step {
    cycle: usize,
    group: usize,
    p_pass: f64,
}

/// Cached all-pass trajectory for one formula and configuration.
#[derive(Debug, Clone)]
pub struct Preparer {
    n: usize,
    mode: PrepMode,
    restart_limit: u64,
    plan: MeasurementPlan,
    /// Projectors per cycle angle; one entry for a fixed angle.
    projectors: Vec<Vec<ClauseProjector>>,
    cycles: usize,
    mu: Option<f64>,
    steps: Vec<Step>,
    survival: Vec<f64>,
    final_state: Option<StateVector>,
}

/// Cost of one successful preparation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PrepOutcome {
    pub restarts: u64,
    pub measurements: u64,
}

/// Owned result of [`prepare_state`].
#[derive(Debug, Clone, PartialEq)]
pub struct Preparation {
    pub state: StateVector,
    pub restarts: u64,
    pub measurements: u64,
    pub cycles: usize,
    /// `‖(Π C)^r |+^n⟩‖²`.
    pub success_probability: f64,
    pub mu: Option<f64>,
    pub trace: Vec<TraceEvent>,
}

impl Preparer {
    pub fn new(f: &Formula, cfg: &PrepConfig) -> Result<Self> {
        cfg.validate()?;
        let n = f.num_vars();
        crate::limits::check_monte_carlo("state preparation", n)?;
        let plan = match cfg.plan {
            PlanKind::Sequential => MeasurementPlan::sequential(f.num_clauses()),
            PlanKind::Layered => MeasurementPlan::layered(&phf::build_layers(f)?),
        };
        let (projectors, cycles, mu) = match cfg.schedule {
            Schedule::Fixed { theta } => {
                let mu = match resolve_mu(f, theta, &plan, cfg.mu_source) {
                    Ok(mu) => Some(mu),
                    Err(Error::Unsatisfiable) => None,
                    Err(e) => return Err(e),
                };
                let cycles = match mu {
                    Some(mu) => cycles_required(theta, n, cfg.epsilon, mu)?,
                    None => 1,
                };
                (vec![clause_projectors(f, theta)?], cycles, mu)
            }
            Schedule::Cubic { cycles, .. } => {
                let ps = (0..=cycles)
                    .map(|c| clause_projectors(f, schedule_angle(&cfg.schedule, c)?))
                    .collect::<Result<Vec<_>>>()?;
                (ps, cycles + 1, None)
            }
        };
        let mut p = Preparer {
            n,
            mode: cfg.mode,
            restart_limit: cfg.restart_limit(n),
            plan,
            projectors,
            cycles,
            mu,
            steps: Vec::new(),
            survival: Vec::new(),
            final_state: None,
        };
        p.trace_all_pass();
        Ok(p)
    }

    fn projectors_for(&self, cycle: usize) -> &[ClauseProjector] {
        &self.projectors[cycle.min(self.projectors.len() - 1)]
    }

    fn trace_all_pass(&mut self) {
        let mut psi = StateVector::plus(self.n).expect("size checked");
        let mut s = 1.0;
        for cycle in 0..self.cycles {
            for (group, members) in self.plan.groups().iter().enumerate() {
                let ps: Vec<&ClauseProjector> = members.iter().map(|&i| &self.projectors_for(cycle)[i]).collect();
                let (next, p) = statevec::group_pass(&psi, &ps);
                s *= p;
                self.steps.push(Step { cycle, group, p_pass: p });
                if p < MIN_BRANCH_PROBABILITY {
                    self.survival.push(0.0);
                    return;
                }
                self.survival.push(s);
                let scale = next.norm_sqr().sqrt().recip();
                psi = StateVector::from_amps(self.n, next.into_amps().into_iter().map(|a| a * scale).collect());
            }
        }
        self.final_state = Some(psi);
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn cycles(&self) -> usize {
        self.cycles
    }

    pub fn mu(&self) -> Option<f64> {
        self.mu
    }

    pub fn checks_per_cycle(&self) -> usize {
        self.plan.len()
    }

    pub fn plan(&self) -> &MeasurementPlan {
        &self.plan
    }

    /// Surviving state, `None` if some branch probability vanished.
    pub fn final_state(&self) -> Option<&StateVector> {
        self.final_state.as_ref()
    }

    /// Probability that one attempt passes every check.
    pub fn success_probability(&self) -> f64 {
        if self.final_state.is_none() {
            0.0
        } else {
            self.survival.last().copied().unwrap_or(1.0)
        }
    }

    /// Runs attempts until one survives. The surviving state is
    /// [`Preparer::final_state`].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, trace: Option<&mut Vec<TraceEvent>>) -> Result<PrepOutcome> {
        let total = self.steps.len() as u64;
        if self.mode == PrepMode::Deterministic {
            if self.final_state.is_none() {
                let p = self.steps.last().map_or(0.0, |s| s.p_pass);
                return Err(Error::ZeroProbabilityBranch(p));
            }
            if let Some(t) = trace {
                self.push_events(t, 0, self.steps.len(), None);
            }
            return Ok(PrepOutcome { restarts: 0, measurements: total });
        }
        let mut trace = trace;
        let mut measurements = 0u64;
        let mut restarts = 0u64;
        loop {
            let u: f64 = rng.random();
            let fail_at = self.survival.partition_point(|&s| s > u);
            let survived = fail_at == self.survival.len() && self.final_state.is_some();
            if let Some(t) = trace.as_deref_mut() {
                let failed = if survived { None } else { Some(fail_at.min(self.steps.len() - 1)) };
                self.push_events(t, restarts, fail_at.min(self.steps.len()), failed);
            }
            if survived {
                measurements += total;
                return Ok(PrepOutcome { restarts, measurements });
            }
            measurements += (fail_at + 1).min(self.steps.len()) as u64;
            restarts += 1;
            if restarts >= self.restart_limit {
                return Err(Error::RestartsExhausted { restarts, measurements });
            }
        }
    }

    fn push_events(&self, t: &mut Vec<TraceEvent>, attempt: u64, passed: usize, failed: Option<usize>) {
        for s in &self.steps[..passed] {
            t.push(TraceEvent { attempt, cycle: s.cycle, group: s.group, passed: true, probability: s.p_pass });
        }
        if let Some(j) = failed {
            let s = self.steps[j];
            t.push(TraceEvent { attempt, cycle: s.cycle, group: s.group, passed: false, probability: 1.0 - s.p_pass });
        }
    }

    /// Reference simulation that samples every check on an evolving state
    /// vector. Slow; used to validate [`Preparer::sample`].
    pub fn sample_literal<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(StateVector, PrepOutcome)> {
        let mut measurements = 0u64;
        let mut restarts = 0u64;
        'attempt: loop {
            let mut psi = StateVector::plus(self.n)?;
            for cycle in 0..self.cycles {
                for members in self.plan.groups() {
                    let ps: Vec<&ClauseProjector> = members.iter().map(|&i| &self.projectors_for(cycle)[i]).collect();
                    let (next, p) = statevec::group_pass(&psi, &ps);
                    measurements += 1;
                    if rng.random::<f64>() >= p {
                        restarts += 1;
                        if restarts >= self.restart_limit {
                            return Err(Error::RestartsExhausted { restarts, measurements });
                        }
                        continue 'attempt;
                    }
                    let scale = next.norm_sqr().sqrt().recip();
                    psi = StateVector::from_amps(self.n, next.into_amps().into_iter().map(|a| a * scale).collect());
                }
            }
            return Ok((psi, PrepOutcome { restarts, measurements }));
        }
    }

    /// Applies one full cycle of pass projectors at the cycle-0 angle,
    /// unnormalized.
    pub fn apply_cycle(&self, amps: &mut [f64]) {
        cycle_pass_in_place(self.projectors_for(0), &self.plan, amps);
    }
}

/// One successful preparation with an owned output state.
pub fn prepare_state<R: Rng + ?Sized>(f: &Formula, cfg: &PrepConfig, rng: &mut R) -> Result<Preparation> {
    let p = Preparer::new(f, cfg)?;
    let mut trace = Vec::new();
    let out = p.sample(rng, Some(&mut trace))?;
    Ok(Preparation {
        state: p.final_state().cloned().expect("sample succeeded"),
        restarts: out.restarts,
        measurements: out.measurements,
        cycles: p.cycles(),
        success_probability: p.success_probability(),
        mu: p.mu(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::ground_space_basis;
    use crate::formula::{generate, GeneratorKind};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sat(n: usize, m: usize, seed: u64) -> Formula {
        (seed..)
            .map(|s| generate(GeneratorKind::RandomKsat, n, m, 3, s).unwrap())
            .find(|f| f.count_solutions().unwrap() > 0)
            .unwrap()
    }

    #[test]
    fn right_angle_success_probability() {
        let f = sat(7, 20, 1);
        let mut cfg = PrepConfig::new(Angle::right());
        cfg.mode = PrepMode::Deterministic;
        let p = Preparer::new(&f, &cfg).unwrap();
        assert_eq!(p.cycles(), 1);
        let expect = f.count_solutions().unwrap() as f64 / 128.0;
        assert_abs_diff_eq!(p.success_probability(), expect, epsilon = 1e-12);
    }

    #[test]
    fn unate_single_cycle_fidelity_one() {
        let f = generate(GeneratorKind::Unate, 6, 10, 3, 5).unwrap();
        let theta = Angle::from_fraction(0.3).unwrap();
        let mut cfg = PrepConfig::new(theta);
        cfg.mode = PrepMode::Deterministic;
        let p = Preparer::new(&f, &cfg).unwrap();
        assert_eq!(p.cycles(), 1);
        let basis = ground_space_basis(&f, theta).unwrap();
        assert_abs_diff_eq!(p.final_state().unwrap().weight_in(&basis), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn fidelity_meets_tolerance() {
        let f = sat(6, 14, 2);
        let theta = Angle::from_fraction(0.5).unwrap();
        for eps in [0.1, 0.01] {
            let mut cfg = PrepConfig::new(theta);
            cfg.epsilon = eps;
            cfg.mode = PrepMode::Deterministic;
            let p = Preparer::new(&f, &cfg).unwrap();
            let basis = ground_space_basis(&f, theta).unwrap();
            let fid = p.final_state().unwrap().weight_in(&basis).sqrt();
            assert!(fid >= 1.0 - eps, "eps={eps} fid={fid}");
            let floor = ((1.0 + theta.cos()) / 2.0).powi(6);
            assert!(p.success_probability() >= floor);
        }
    }

    #[test]
    fn exact_and_literal_sampling_agree() {
        let f = sat(5, 10, 3);
        let mut cfg = PrepConfig::new(Angle::from_fraction(0.6).unwrap());
        cfg.mu_source = MuSource::User(0.5);
        cfg.epsilon = 0.1;
        let p = Preparer::new(&f, &cfg).unwrap();
        let trials = 3000;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let fast: u64 = (0..trials).map(|_| p.sample(&mut rng, None).unwrap().restarts).sum();
        let slow: u64 = (0..trials).map(|_| p.sample_literal(&mut rng).unwrap().1.restarts).sum();
        // restarts are geometric with mean (1−p)/p
        let s = p.success_probability();
        let mean = (1.0 - s) / s;
        let sd = ((1.0 - s).sqrt() / s) / (trials as f64).sqrt();
        for total in [fast, slow] {
            let m = total as f64 / trials as f64;
            assert!((m - mean).abs() < 5.0 * sd, "{m} vs {mean}");
        }
        let (state, _) = p.sample_literal(&mut rng).unwrap();
        for (a, b) in state.amps().iter().zip(p.final_state().unwrap().amps()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn unsat_falls_back_to_one_cycle() {
        let f = Formula::from_dimacs_clauses(2, &[&[1], &[-1]]).unwrap();
        let cfg = PrepConfig::new(Angle::from_fraction(0.5).unwrap());
        let p = Preparer::new(&f, &cfg).unwrap();
        assert_eq!(p.cycles(), 1);
        assert_eq!(p.mu(), None);
        let f = Formula::from_dimacs_clauses(1, &[&[1], &[-1]]).unwrap();
        let mut cfg = PrepConfig::new(Angle::right());
        cfg.max_restarts = Some(5);
        let err = Preparer::new(&f, &cfg).unwrap().sample(&mut ChaCha8Rng::seed_from_u64(0), None);
        assert!(matches!(err, Err(Error::RestartsExhausted { restarts: 5, .. })));
    }

    #[test]
    fn trace_records_outcomes() {
        let f = Formula::from_dimacs_clauses(2, &[&[1, 2], &[-1]]).unwrap();
        let out = prepare_state(&f, &PrepConfig::new(Angle::right()), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let fails = out.trace.iter().filter(|e| !e.passed).count() as u64;
        assert_eq!(fails, out.restarts);
        assert_eq!(out.trace.len() as u64, out.measurements);
        assert!(trace_to_csv(&out.trace).starts_with("attempt,cycle,group,outcome,probability\n"));
    }

    #[test]
    fn cubic_schedule_ends_in_basis_states() {
        let f = sat(5, 10, 4);
        let mut cfg = PrepConfig::new(Angle::right());
        cfg.schedule = Schedule::cubic(6);
        cfg.mode = PrepMode::Deterministic;
        let p = Preparer::new(&f, &cfg).unwrap();
        assert_eq!(p.cycles(), 7);
        let sols = f.solution_indices().unwrap();
        let psi = p.final_state().unwrap();
        let w: f64 = sols.iter().map(|&i| psi.amps()[i].powi(2)).sum();
        assert_abs_diff_eq!(w, 1.0, epsilon = 1e-10);
    }
}
