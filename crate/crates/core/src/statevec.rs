//! Real state vectors and projective clause checks.
//!
//! Amplitudes are stored in a flat `Vec<f64>` of length `2^n`; all states
//! and operators in this encoding are real. A clause check is the two-outcome
//! measurement `{P, I − P}` where outcome 0 ("fail") is the projector `P`.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{clause_projectors, complement_indices, Angle, ClauseProjector};
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::limits;
use crate::phf::Layer;

/// Branches with probability below this cannot be post-selected.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<f64>,
}

impl StateVector {
    /// `|+⟩^⊗n`.
    pub fn plus(n: usize) -> Result<Self> {
        limits::check_monte_carlo("state vector", n)?;
        let dim = 1usize << n;
        Ok(StateVector { n, amps: vec![(dim as f64).sqrt().recip(); dim] })
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        limits::check_monte_carlo("state vector", n)?;
        let mut amps = vec![0.0; 1 << n];
        amps[index] = 1.0;
        Ok(StateVector { n, amps })
    }

    /// Panics if `amps.len() != 2^n`.
    pub fn from_amps(n: usize, amps: Vec<f64>) -> Self {
        assert_eq!(amps.len(), 1usize << n, "amplitude vector length must be 2^n");
        StateVector { n, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amps(&self) -> &[f64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<f64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a * a).sum()
    }

    pub fn inner(&self, other: &StateVector) -> f64 {
        crate::linalg::dot(&self.amps, &other.amps)
    }

    fn normalized(mut self) -> Self {
        let s = self.norm_sqr().sqrt().recip();
        self.amps.iter_mut().for_each(|a| *a *= s);
        self
    }

    /// `⟨ψ|P|ψ⟩` for the projector onto the span of an orthonormal set.
    pub fn weight_in(&self, orthonormal: &[Vec<f64>]) -> f64 {
        orthonormal.iter().map(|q| crate::linalg::dot(q, &self.amps).powi(2)).sum()
    }
}

/// Replaces `ψ` by `(I − P)ψ` and returns `‖Pψ‖²`.
pub(crate) fn pass_in_place(p: &ClauseProjector, amps: &mut [f64]) -> f64 {
    let (offs, local) = (p.offsets(), p.local_vector());
    let mut removed = 0.0;
    for base in complement_indices(p.num_qubits(), p.mask()) {
        let ip: f64 = offs.iter().zip(local).map(|(&o, &v)| v * amps[base | o]).sum();
        if ip != 0.0 {
            for (&o, &v) in offs.iter().zip(local) {
                amps[base | o] -= ip * v;
            }
            removed += ip * ip;
        }
    }
    removed
}

/// Replaces `ψ` by `Pψ` and returns `‖Pψ‖²`.
pub(crate) fn fail_in_place(p: &ClauseProjector, amps: &mut [f64]) -> f64 {
    let (offs, local) = (p.offsets(), p.local_vector());
    let mut kept = 0.0;
    for base in complement_indices(p.num_qubits(), p.mask()) {
        let ip: f64 = offs.iter().zip(local).map(|(&o, &v)| v * amps[base | o]).sum();
        for (&o, &v) in offs.iter().zip(local) {
            amps[base | o] = ip * v;
        }
        kept += ip * ip;
    }
    kept
}

fn fail_weight(p: &ClauseProjector, amps: &[f64]) -> f64 {
    let (offs, local) = (p.offsets(), p.local_vector());
    complement_indices(p.num_qubits(), p.mask())
        .map(|base| {
            let ip: f64 = offs.iter().zip(local).map(|(&o, &v)| v * amps[base | o]).sum();
            ip * ip
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckProbabilities {
    pub p_fail: f64,
    pub p_pass: f64,
}

pub fn clause_check_probabilities(psi: &StateVector, p: &ClauseProjector) -> CheckProbabilities {
    let total = psi.norm_sqr();
    let p_fail = (fail_weight(p, &psi.amps) / total).clamp(0.0, 1.0);
    CheckProbabilities { p_fail, p_pass: 1.0 - p_fail }
}

/// Normalized post-measurement state for the pass outcome.
pub fn apply_pass(psi: &StateVector, p: &ClauseProjector) -> Result<StateVector> {
    let total = psi.norm_sqr();
    let mut out = psi.clone();
    pass_in_place(p, &mut out.amps);
    let prob = out.norm_sqr() / total;
    if prob < MIN_BRANCH_PROBABILITY {
        return Err(Error::ZeroProbabilityBranch(prob));
    }
    Ok(out.normalized())
}

/// Normalized post-measurement state for the fail outcome.
pub fn apply_fail(psi: &StateVector, p: &ClauseProjector) -> Result<StateVector> {
    let total = psi.norm_sqr();
    let mut out = psi.clone();
    let prob = fail_in_place(p, &mut out.amps) / total;
    if prob < MIN_BRANCH_PROBABILITY {
        return Err(Error::ZeroProbabilityBranch(prob));
    }
    Ok(out.normalized())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOutcome {
    pub passed: bool,
    /// Probability of the observed outcome.
    pub probability: f64,
    pub state: StateVector,
}

/// Samples one clause check and collapses the state.
pub fn measure<R: Rng + ?Sized>(psi: &StateVector, p: &ClauseProjector, rng: &mut R) -> Result<MeasurementOutcome> {
    let probs = clause_check_probabilities(psi, p);
    let passed = rng.random::<f64>() < probs.p_pass;
    let (state, probability) =
        if passed { (apply_pass(psi, p)?, probs.p_pass) } else { (apply_fail(psi, p)?, probs.p_fail) };
    Ok(MeasurementOutcome { passed, probability, state })
}

/// Pass projector of a set of mutually commuting checks applied to `ψ`,
/// unnormalized, together with the pass probability.
pub fn group_pass(psi: &StateVector, projectors: &[&ClauseProjector]) -> (StateVector, f64) {
    let total = psi.norm_sqr();
    let mut out = psi.clone();
    for p in projectors {
        pass_in_place(p, &mut out.amps);
    }
    let prob = (out.norm_sqr() / total).clamp(0.0, 1.0);
    (out, prob)
}

/// `⟨ψ|Z̃_q|ψ⟩` where `Z̃` is `+1` on bit value 1 (TRUE) and `−1` on bit value 0.
pub fn z_expectation(psi: &StateVector, q: usize) -> f64 {
    let total = psi.norm_sqr();
    let s: f64 = psi.amps.iter().enumerate().map(|(i, a)| if i >> q & 1 == 1 { a * a } else { -a * a }).sum();
    s / total
}

/// Probability that qubit `q` reads 1 in the computational basis.
pub fn one_probability(psi: &StateVector, q: usize) -> f64 {
    (1.0 + z_expectation(psi, q)) / 2.0
}

/// Cumulative distribution over basis indices, for repeated sampling.
#[derive(Debug, Clone)]
pub struct BasisSampler {
    cdf: Vec<f64>,
}

impl BasisSampler {
    pub fn new(psi: &StateVector) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = psi
            .amps
            .iter()
            .map(|a| {
                acc += a * a;
                acc
            })
            .collect();
        let total = acc;
        cdf.iter_mut().for_each(|c| *c /= total);
        BasisSampler { cdf }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}

/// Order in which clause checks are applied during one cycle. Each group is
/// a set of clause indices measured together; groups run first to last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementPlan {
    groups: Vec<Vec<usize>>,
}

impl MeasurementPlan {
    /// One check per clause in input order.
    pub fn sequential(m: usize) -> Self {
        MeasurementPlan { groups: (0..m).map(|i| vec![i]).collect() }
    }

    /// One check per layer.
    pub fn layered(layers: &[Layer]) -> Self {
        MeasurementPlan { groups: layers.iter().map(|l| l.clauses().to_vec()).collect() }
    }

    pub fn from_groups(groups: Vec<Vec<usize>>) -> Self {
        MeasurementPlan { groups }
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn is_layered(&self) -> bool {
        self.groups.iter().any(|g| g.len() > 1)
    }

    /// Every clause index in `0..m` appears in exactly one group.
    pub fn validate(&self, m: usize) -> Result<()> {
        let mut seen = vec![false; m];
        for &i in self.groups.iter().flatten() {
            if i >= m || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidParameter(format!("measurement plan: clause {i} out of range or repeated")));
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidParameter(format!("measurement plan omits clause {i}")));
        }
        Ok(())
    }
}

/// Applies all pass projectors of one cycle to `amps` in plan order.
pub(crate) fn cycle_pass_in_place(projectors: &[ClauseProjector], plan: &MeasurementPlan, amps: &mut [f64]) {
    for &i in plan.groups().iter().flatten() {
        pass_in_place(&projectors[i], amps);
    }
}

/// Dense `T = Π_groups Π_{i∈group} (I − P_i)` with the first group applied first.
pub fn product_operator(f: &Formula, theta: Angle, plan: &MeasurementPlan) -> Result<DMatrix<f64>> {
    let n = f.num_vars();
    limits::check_dense("product operator", n)?;
    plan.validate(f.num_clauses())?;
    let projectors = clause_projectors(f, theta)?;
    let dim = 1usize << n;
    let mut t = DMatrix::zeros(dim, dim);
    let mut col = vec![0.0; dim];
    for j in 0..dim {
        col.iter_mut().for_each(|a| *a = 0.0);
        col[j] = 1.0;
        cycle_pass_in_place(&projectors, plan, &mut col);
        t.column_mut(j).copy_from_slice(&col);
    }
    Ok(t)
}
