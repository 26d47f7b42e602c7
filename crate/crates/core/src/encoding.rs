//! Rotated encoding of truth values, clause projectors and Hamiltonian
//! assembly.
//!
//! TRUE and FALSE map to the non-orthogonal single-qubit states
//! `|θ⟩ = R_Y(+θ)|+⟩` and `|θ̄⟩ = R_Y(−θ)|+⟩` with overlap `cos θ`. Each
//! clause becomes a rank-1 projector on its support whose factor is `|θ^⊥⟩`
//! on positive-literal qubits and `|θ̄^⊥⟩` on negative-literal qubits, so
//! every rotated string satisfying the clause is annihilated exactly.
//!
//! Qubit `q` (0-based) carries variable `q+1` and is bit `q` of a basis
//! index.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::{Assignment, Clause, Formula, Literal};
use crate::limits;
use crate::linalg;
use crate::phf::{Compat, CompatString};
use crate::statevec::StateVector;

/// Rotation angle in `(0, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Angle(f64);

impl Angle {
    pub fn new(theta: f64) -> Result<Self> {
        if theta.is_finite() && theta > 0.0 && theta <= FRAC_PI_2 {
            Ok(Angle(theta))
        } else {
            Err(Error::InvalidAngle(theta))
        }
    }

    /// `fraction · π/2`.
    pub fn from_fraction(fraction: f64) -> Result<Self> {
        if fraction == 1.0 {
            return Ok(Angle::right());
        }
        Angle::new(fraction * FRAC_PI_2)
    }

    /// The unrotated (computational-basis) encoding.
    pub const fn right() -> Self {
        Angle(FRAC_PI_2)
    }

    /// Angle with `cos θ = 1 − 2/n`, the polynomial-time choice for unate
    /// instances.
    pub fn unate_schedule(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter("unate schedule needs n >= 2".into()));
        }
        if n == 2 {
            return Ok(Angle::right());
        }
        Angle::new((1.0 - 2.0 / n as f64).acos())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Exactly `π/2`: all clause checks commute and a single cycle converges.
    pub fn is_right(self) -> bool {
        self.0 == FRAC_PI_2
    }

    pub fn cos(self) -> f64 {
        if self.is_right() {
            0.0
        } else {
            self.0.cos()
        }
    }

    pub fn sin(self) -> f64 {
        self.0.sin()
    }
}

impl TryFrom<f64> for Angle {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Angle::new(v)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Real single-qubit amplitude pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    pub amp0: f64,
    pub amp1: f64,
}

impl QubitState {
    /// `R_Y(phi)|+⟩`.
    pub fn ry_plus(phi: f64) -> Self {
        let (s, c) = (phi / 2.0).sin_cos();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        QubitState { amp0: r * (c - s), amp1: r * (s + c) }
    }

    pub fn inner(self, other: QubitState) -> f64 {
        self.amp0 * other.amp0 + self.amp1 * other.amp1
    }

    #[inline]
    pub fn amp(self, bit: usize) -> f64 {
        if bit == 0 {
            self.amp0
        } else {
            self.amp1
        }
    }
}

/// The four rotated single-qubit states for one angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedBasis {
    /// TRUE: `R_Y(θ)|+⟩`.
    pub theta: QubitState,
    /// FALSE: `R_Y(−θ)|+⟩`.
    pub theta_bar: QubitState,
    /// `R_Y(π+θ)|+⟩`, orthogonal to `theta`.
    pub theta_perp: QubitState,
    /// `R_Y(π−θ)|+⟩`, orthogonal to `theta_bar`.
    pub theta_bar_perp: QubitState,
}

pub fn single_qubit_states(theta: Angle) -> RotatedBasis {
    let t = theta.radians();
    RotatedBasis {
        theta: QubitState::ry_plus(t),
        theta_bar: QubitState::ry_plus(-t),
        theta_perp: QubitState::ry_plus(PI + t),
        theta_bar_perp: QubitState::ry_plus(PI - t),
    }
}

/// Rank-1 projector `|v⟩⟨v| ⊗ I` for one clause.
#[derive(Debug, Clone, PartialEq)]
pub struct ClauseProjector {
    n: usize,
    support: Vec<usize>,
    factors: Vec<QubitState>,
    compat: CompatString,
    // Derived data for applying the projector to a state vector.
    mask: usize,
    offsets: Vec<usize>,
    local: Vec<f64>,
}

impl ClauseProjector {
    fn from_parts(n: usize, mut pairs: Vec<(usize, QubitState, Compat)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let support: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let factors: Vec<QubitState> = pairs.iter().map(|p| p.1).collect();
        let mut compat = vec![Compat::Free; n];
        for &(q, _, c) in &pairs {
            compat[q] = c;
        }
        let mask = support.iter().fold(0usize, |m, &q| m | 1 << q);
        let w = support.len();
        let mut offsets = Vec::with_capacity(1 << w);
        let mut local = Vec::with_capacity(1 << w);
        for j in 0..1usize << w {
            let mut off = 0;
            let mut amp = 1.0;
            for (t, (&q, f)) in support.iter().zip(&factors).enumerate() {
                let bit = j >> t & 1;
                off |= bit << q;
                amp *= f.amp(bit);
            }
            offsets.push(off);
            local.push(amp);
        }
        ClauseProjector { n, support, factors, compat: CompatString::new(compat), mask, offsets, local }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// 0-based qubit indices, sorted.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn factors(&self) -> &[QubitState] {
        &self.factors
    }

    /// Symbol per qubit: the forbidden truth value on the support, `I` elsewhere.
    pub fn compat_string(&self) -> &CompatString {
        &self.compat
    }

    pub(crate) fn mask(&self) -> usize {
        self.mask
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Tensor-product vector on the support, indexed like `offsets`.
    pub(crate) fn local_vector(&self) -> &[f64] {
        &self.local
    }

    /// Structural commutation: disjoint supports or equal factors on every
    /// shared qubit.
    pub fn commutes_with(&self, other: &ClauseProjector) -> bool {
        self.compat.compatible(&other.compat).unwrap_or(false)
    }

    /// Dense `2^n × 2^n` matrix.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        limits::check_dense("clause projector", self.n)?;
        let dim = 1usize << self.n;
        let mut m = DMatrix::zeros(dim, dim);
        self.add_to_dense(&mut m, 1.0);
        Ok(m)
    }

    pub(crate) fn add_to_dense(&self, m: &mut DMatrix<f64>, scale: f64) {
        for base in complement_indices(self.n, self.mask) {
            for (a, &oa) in self.offsets.iter().enumerate() {
                let va = self.local[a] * scale;
                if va == 0.0 {
                    continue;
                }
                for (b, &ob) in self.offsets.iter().enumerate() {
                    m[(base | oa, base | ob)] += va * self.local[b];
                }
            }
        }
    }
}

/// Indices in `0..2^n` with all `mask` bits clear, ascending.
pub(crate) fn complement_indices(n: usize, mask: usize) -> impl Iterator<Item = usize> {
    let full = if n == 0 { 0 } else { usize::MAX >> (usize::BITS as usize - n) };
    let cmask = full & !mask;
    let mut next = Some(0usize);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == cmask { None } else { Some((cur | !cmask).wrapping_add(1) & cmask) };
        Some(cur)
    })
}

/// Projector for `clause` on `n` qubits.
pub fn clause_projector(clause: &Clause, theta: Angle, n: usize) -> Result<ClauseProjector> {
    literal_projector(clause.literals(), theta, n)
}

/// Projector for an arbitrary literal set; the empty set gives the identity.
pub(crate) fn literal_projector(literals: &[Literal], theta: Angle, n: usize) -> Result<ClauseProjector> {
    let basis = single_qubit_states(theta);
    let mut pairs = Vec::with_capacity(literals.len());
    for l in literals {
        if l.var == 0 || l.var > n {
            return Err(Error::LiteralOutOfRange { lit: l.to_dimacs(), n });
        }
        // forbidden value: FALSE for a positive literal, TRUE for a negative one
        let (factor, forbidden) =
            if l.negated { (basis.theta_bar_perp, Compat::One) } else { (basis.theta_perp, Compat::Zero) };
        pairs.push((l.var - 1, factor, forbidden));
    }
    Ok(ClauseProjector::from_parts(n, pairs))
}

pub fn clause_projectors(f: &Formula, theta: Angle) -> Result<Vec<ClauseProjector>> {
    f.clauses().iter().map(|c| clause_projector(c, theta, f.num_vars())).collect()
}

/// Maximum number of other projectors a projector fails to commute with.
pub fn non_commuting_degree(projectors: &[ClauseProjector]) -> usize {
    (0..projectors.len())
        .map(|i| (0..projectors.len()).filter(|&j| j != i && !projectors[i].commutes_with(&projectors[j])).count())
        .max()
        .unwrap_or(0)
}

/// `|Θ_x⟩ = ⊗_q R_Y(±θ)|+⟩`.
pub fn theta_string_state(x: &Assignment, theta: Angle) -> Result<StateVector> {
    let n = x.len();
    limits::check_monte_carlo("rotated string state", n)?;
    let basis = single_qubit_states(theta);
    let mut amps = vec![1.0f64];
    for &bit in x.bits() {
        let s = if bit { basis.theta } else { basis.theta_bar };
        // new qubit is the next-higher bit
        let mut next = Vec::with_capacity(amps.len() * 2);
        next.extend(amps.iter().map(|a| a * s.amp0));
        next.extend(amps.iter().map(|a| a * s.amp1));
        amps = next;
    }
    Ok(StateVector::from_amps(n, amps))
}

/// Dense `H(θ) = Σ_i P_i(θ)`.
#[derive(Debug, Clone)]
pub struct HamiltonianDense {
    pub matrix: DMatrix<f64>,
    pub n: usize,
    pub m: usize,
}

pub fn hamiltonian_matrix(f: &Formula, theta: Angle) -> Result<HamiltonianDense> {
    let n = f.num_vars();
    limits::check_dense("Hamiltonian", n)?;
    let projectors = clause_projectors(f, theta)?;
    Ok(HamiltonianDense { matrix: sum_dense(n, &projectors), n, m: f.num_clauses() })
}

pub(crate) fn sum_dense(n: usize, projectors: &[ClauseProjector]) -> DMatrix<f64> {
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for p in projectors {
        p.add_to_dense(&mut m, 1.0);
    }
    m
}

/// Orthonormal basis of `span{|Θ_x⟩ : x satisfies f}`.
pub fn ground_space_basis(f: &Formula, theta: Angle) -> Result<Vec<Vec<f64>>> {
    let sols = f.solution_indices()?;
    if sols.is_empty() {
        return Err(Error::Unsatisfiable);
    }
    let n = f.num_vars();
    let states: Vec<Vec<f64>> = sols
        .into_iter()
        .map(|i| theta_string_state(&Assignment::from_index(i, n), theta).map(StateVector::into_amps))
        .collect::<Result<_>>()?;
    let basis = linalg::orthonormalize(states);
    if basis.is_empty() {
        return Err(Error::Internal("solution states numerically dependent".into()));
    }
    Ok(basis)
}

/// Dense orthogonal projector onto the ground space.
pub fn ground_space_projector(f: &Formula, theta: Angle) -> Result<DMatrix<f64>> {
    limits::check_dense("ground-space projector", f.num_vars())?;
    let basis = ground_space_basis(f, theta)?;
    Ok(linalg::projector_from_basis(1 << f.num_vars(), &basis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Formula;
    use approx::assert_abs_diff_eq;

    fn angles() -> Vec<Angle> {
        (1..=10).map(|i| Angle::from_fraction(i as f64 / 10.0).unwrap()).collect()
    }

    #[test]
    fn angle_validation() {
        assert!(Angle::new(0.0).is_err());
        assert!(Angle::new(1.6).is_err());
        assert!(Angle::new(f64::NAN).is_err());
        assert!(Angle::from_fraction(1.0).unwrap().is_right());
        let a = Angle::unate_schedule(10).unwrap();
        assert_abs_diff_eq!(a.cos(), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn right_angle_states() {
        let b = single_qubit_states(Angle::right());
        assert_abs_diff_eq!(b.theta.amp0, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.theta.amp1, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.theta_bar.amp0, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.theta_bar.amp1, 0.0, epsilon = 1e-15);
        // |θ^⊥⟩ is −|0⟩ at π/2; stored without re-phasing
        assert_abs_diff_eq!(b.theta_perp.amp0, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn overlap_table() {
        for t in angles() {
            let b = single_qubit_states(t);
            let (c, s) = (t.radians().cos(), t.radians().sin());
            for q in [b.theta, b.theta_bar, b.theta_perp, b.theta_bar_perp] {
                assert_abs_diff_eq!(q.inner(q), 1.0, epsilon = 1e-12);
            }
            assert_abs_diff_eq!(b.theta.inner(b.theta_perp), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(b.theta_bar.inner(b.theta_bar_perp), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(b.theta.inner(b.theta_bar), c, epsilon = 1e-15);
            assert_abs_diff_eq!(b.theta_perp.inner(b.theta_bar_perp), c, epsilon = 1e-15);
            assert_abs_diff_eq!(b.theta.inner(b.theta_bar_perp), s, epsilon = 1e-15);
            assert_abs_diff_eq!(b.theta_bar.inner(b.theta_perp), -s, epsilon = 1e-15);
        }
    }

    #[test]
    fn worked_clause_projector() {
        let c = Clause::from_dimacs(&[1, 4, -6]).unwrap();
        let t = Angle::from_fraction(0.3).unwrap();
        let p = clause_projector(&c, t, 6).unwrap();
        let b = single_qubit_states(t);
        assert_eq!(p.support(), &[0, 3, 5]);
        assert_eq!(p.factors(), &[b.theta_perp, b.theta_perp, b.theta_bar_perp]);
        assert_eq!(p.compat_string().to_string(), "0II0I1");
    }

    #[test]
    fn worked_clause_right_angle_is_basis_pattern() {
        let c = Clause::from_dimacs(&[1, 4, -6]).unwrap();
        let p = clause_projector(&c, Angle::right(), 6).unwrap().to_dense().unwrap();
        // forbidden pattern: b1=0, b4=0, b6=1
        for i in 0..64usize {
            let forbidden = i & 1 == 0 && i >> 3 & 1 == 0 && i >> 5 & 1 == 1;
            for j in 0..64usize {
                let expect = if i == j && forbidden { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(p[(i, j)], expect, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn violated_string_energy() {
        let c = Clause::from_dimacs(&[1, -2, 3]).unwrap();
        let f = Formula::new(4, vec![c.clone()]).unwrap();
        for t in angles() {
            let p = clause_projector(&c, t, 4).unwrap().to_dense().unwrap();
            for idx in 0..16 {
                let x = Assignment::from_index(idx, 4);
                let psi = theta_string_state(&x, t).unwrap();
                let v = nalgebra::DVector::from_vec(psi.amps().to_vec());
                let e = (v.transpose() * &p * &v)[(0, 0)];
                let expect = if f.evaluate(&x).unwrap() { 0.0 } else { t.sin().powi(6) };
                assert_abs_diff_eq!(e, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn right_angle_string_is_basis_vector() {
        let x: Assignment = "1011".parse().unwrap();
        let psi = theta_string_state(&x, Angle::right()).unwrap();
        for (i, a) in psi.amps().iter().enumerate() {
            assert_abs_diff_eq!(*a, if i == x.to_index() { 1.0 } else { 0.0 }, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_clause_spectrum() {
        let f = Formula::from_dimacs_clauses(3, &[&[1, -2, 3]]).unwrap();
        let h = hamiltonian_matrix(&f, Angle::from_fraction(0.4).unwrap()).unwrap();
        let ev = linalg::sorted_eigenvalues(&h.matrix);
        for e in &ev[..7] {
            assert_abs_diff_eq!(*e, 0.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(ev[7], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_formula_hamiltonian_is_zero() {
        let f = Formula::new(3, vec![]).unwrap();
        let h = hamiltonian_matrix(&f, Angle::right()).unwrap();
        assert!(h.matrix.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn ground_projector_unique_and_right_angle() {
        let f = Formula::from_dimacs_clauses(2, &[&[1], &[-2]]).unwrap();
        let t = Angle::from_fraction(0.35).unwrap();
        let p = ground_space_projector(&f, t).unwrap();
        let s = theta_string_state(&"10".parse().unwrap(), t).unwrap();
        let v = nalgebra::DVector::from_vec(s.amps().to_vec());
        assert!((&p - &v * v.transpose()).amax() < 1e-12);

        let g = Formula::from_dimacs_clauses(2, &[&[1, 2]]).unwrap();
        let p = ground_space_projector(&g, Angle::right()).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(p[(i, i)], if i == 0 { 0.0 } else { 1.0 }, epsilon = 1e-14);
        }
        assert!(matches!(
            ground_space_projector(&Formula::from_dimacs_clauses(1, &[&[1], &[-1]]).unwrap(), t),
            Err(Error::Unsatisfiable)
        ));
    }

    #[test]
    fn complement_iteration() {
        let v: Vec<usize> = complement_indices(3, 0b010).collect();
        assert_eq!(v, [0b000, 0b001, 0b100, 0b101]);
        assert_eq!(complement_indices(2, 0b11).collect::<Vec<_>>(), [0]);
        assert_eq!(complement_indices(0, 0).collect::<Vec<_>>(), [0]);
    }
}
