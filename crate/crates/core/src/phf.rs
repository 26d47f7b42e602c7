//! Perfect hash families and commuting measurement layers.
//!
//! An `(N, n, k)` perfect hash family is an `N × n` array over `[k]` in
//! which every set of `k` columns is mapped injectively by some row. Each
//! row, combined with each of the `2^k` maps `[k] → {0,1}`, yields a binary
//! pattern; clauses whose forbidden-value strings match a pattern commute
//! and can be checked in one projective measurement.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::encoding::ClauseProjector;
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::statevec::{self, StateVector, MIN_BRANCH_PROBABILITY};

/// Refuse to enumerate more `k`-subsets than this.
pub const MAX_SUBSETS: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Compat {
    Zero,
    One,
    Free,
}

impl Compat {
    fn symbol(self) -> char {
        match self {
            Compat::Zero => '0',
            Compat::One => '1',
            Compat::Free => 'I',
        }
    }
}

/// String over `{0, 1, I}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompatString(Vec<Compat>);

impl CompatString {
    pub fn new(symbols: Vec<Compat>) -> Self {
        CompatString(symbols)
    }

    pub fn symbols(&self) -> &[Compat] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// No position holds two different fixed symbols.
    pub fn compatible(&self, other: &CompatString) -> Result<bool> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: other.len() });
        }
        Ok(self.0.iter().zip(&other.0).all(|(a, b)| *a == Compat::Free || *b == Compat::Free || a == b))
    }

    fn matches_pattern(&self, pattern: &[bool]) -> bool {
        self.0.iter().zip(pattern).all(|(c, &p)| match c {
            Compat::Free => true,
            Compat::Zero => !p,
            Compat::One => p,
        })
    }
}

impl fmt::Display for CompatString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|c| write!(f, "{}", c.symbol()))
    }
}

impl FromStr for CompatString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(Compat::Zero),
                '1' => Ok(Compat::One),
                'I' => Ok(Compat::Free),
                _ => Err(Error::InvalidParameter(format!("invalid compatibility symbol {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(CompatString)
    }
}

/// String form of [`CompatString::compatible`].
pub fn compatible(s1: &str, s2: &str) -> Result<bool> {
    s1.parse::<CompatString>()?.compatible(&s2.parse()?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerfectHashFamily {
    rows: Vec<Vec<u8>>,
    n: usize,
    k: usize,
}

impl PerfectHashFamily {
    /// Validates shape and symbol range; does not check the covering property.
    pub fn from_rows(rows: Vec<Vec<u8>>, n: usize, k: usize) -> Result<Self> {
        for r in &rows {
            if r.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: r.len() });
            }
            if let Some(&s) = r.iter().find(|&&s| s as usize >= k) {
                return Err(Error::InvalidParameter(format!("symbol {s} outside [0, {k})")));
            }
        }
        Ok(PerfectHashFamily { rows, n, k })
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// One row per line, space-separated 0-based symbols. `#` lines are
    /// skipped on import.
    pub fn to_text(&self) -> String {
        self.rows.iter().map(|r| r.iter().join(" ") + "\n").collect()
    }

    pub fn from_text(text: &str, k: usize) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<u8>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { line: lineno + 1, msg: e.to_string() })?;
            rows.push(row);
        }
        let n = rows.first().map_or(0, Vec::len);
        Self::from_rows(rows, n, k)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `c_k = 1 / ln(k^k / (k^k − k!))`.
pub fn density_constant(k: usize) -> f64 {
    let kk = (k as f64).powi(k as i32);
    let kf: f64 = (1..=k).map(|i| i as f64).product();
    1.0 / (kk / (kk - kf)).ln()
}

/// Upper bound `c_k ln C(n, k)` on the density algorithm's row count.
pub fn density_row_bound(n: usize, k: usize) -> f64 {
    density_constant(k) * binomial(n, k).ln()
}

/// Upper bound `(√k/√(2π))(2e)^k ln n` on the number of layers.
pub fn layer_count_bound(n: usize, k: usize) -> f64 {
    let k = k as f64;
    (k / (2.0 * std::f64::consts::PI)).sqrt() * (2.0 * std::f64::consts::E).powf(k) * (n as f64).ln()
}

/// Deterministic density construction. Ties in the per-entry argmax go to
/// the smallest symbol.
pub fn density_algorithm(n: usize, k: usize) -> Result<PerfectHashFamily> {
    if k == 0 || k > n || k > u8::MAX as usize {
        return Err(Error::InvalidParameter(format!("density algorithm needs 1 <= k <= n, got n={n}, k={k}")));
    }
    if binomial(n, k) > MAX_SUBSETS as f64 {
        return Err(Error::BudgetExceeded(format!("C({n},{k}) subsets exceed {MAX_SUBSETS}")));
    }
    let subsets: Vec<Vec<usize>> = (0..n).combinations(k).collect();
    let mut containing: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (s, cols) in subsets.iter().enumerate() {
        for &c in cols {
            containing[c].push(s);
        }
    }
    // χ scaled by k^k: (k−s)!·k^s, exact in integers
    let weight: Vec<u128> =
        (0..=k).map(|s| (1..=(k - s) as u128).product::<u128>() * (k as u128).pow(s as u32)).collect();

    let mut uncovered = vec![true; subsets.len()];
    let mut remaining = subsets.len();
    let mut rows = Vec::new();
    while remaining > 0 {
        // entries at positions < i are fixed
        let mut row: Vec<u8> = Vec::with_capacity(n);
        for (i, members) in containing.iter().enumerate() {
            let mut best = (0u8, 0u128);
            for x in 0..k as u8 {
                let mut score = 0u128;
                for &s in members {
                    if !uncovered[s] {
                        continue;
                    }
                    let mut used = 0u64;
                    let mut fixed = 0;
                    let mut distinct = true;
                    for &c in &subsets[s] {
                        let v = match c.cmp(&i) {
                            std::cmp::Ordering::Less => row[c],
                            std::cmp::Ordering::Equal => x,
                            std::cmp::Ordering::Greater => continue,
                        };
                        if used >> v & 1 == 1 {
                            distinct = false;
                            break;
                        }
                        used |= 1 << v;
                        fixed += 1;
                    }
                    if distinct {
                        score += weight[fixed];
                    }
                }
                if x == 0 || score > best.1 {
                    best = (x, score);
                }
            }
            row.push(best.0);
        }
        for (s, cols) in subsets.iter().enumerate() {
            if uncovered[s] && injective(&row, cols) {
                uncovered[s] = false;
                remaining -= 1;
            }
        }
        rows.push(row);
    }
    Ok(PerfectHashFamily { rows, n, k })
}

fn injective(row: &[u8], cols: &[usize]) -> bool {
    let mut used = 0u64;
    cols.iter().all(|&c| {
        let bit = 1u64 << row[c];
        let fresh = used & bit == 0;
        used |= bit;
        fresh
    })
}

/// Exhaustive check over all `k`-column subsets.
pub fn verify_phf(fam: &PerfectHashFamily) -> bool {
    if fam.k > fam.n {
        return false;
    }
    (0..fam.n).combinations(fam.k).all(|cols| fam.rows.iter().any(|r| injective(r, &cols)))
}

/// A binary pattern together with the clauses it hosts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layer {
    pattern: Vec<bool>,
    clauses: Vec<usize>,
}

impl Layer {
    pub fn pattern(&self) -> &[bool] {
        &self.pattern
    }

    pub fn pattern_string(&self) -> String {
        self.pattern.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// Clause indices, ascending.
    pub fn clauses(&self) -> &[usize] {
        &self.clauses
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }
}

/// `2^k` patterns per row: symbol `s` maps to bit `s` of the pattern index.
pub fn candidate_patterns(fam: &PerfectHashFamily) -> Vec<Vec<bool>> {
    let mut out = Vec::with_capacity(fam.rows.len() << fam.k);
    for row in &fam.rows {
        for b in 0..1usize << fam.k {
            out.push(row.iter().map(|&s| b >> s & 1 == 1).collect());
        }
    }
    out
}

/// Groups clauses into commuting layers. Each clause goes to the first
/// compatible candidate pattern; empty layers are dropped.
pub fn build_layers(f: &Formula) -> Result<Vec<Layer>> {
    if f.num_clauses() == 0 {
        return Ok(Vec::new());
    }
    let n = f.num_vars();
    let width = f.clauses().iter().map(|c| c.width()).max().unwrap_or(1);
    let fam = density_algorithm(n, f.k().max(width).min(n))?;
    layers_from_family(f, &fam)
}

/// [`build_layers`] with a caller-supplied family.
pub fn layers_from_family(f: &Formula, fam: &PerfectHashFamily) -> Result<Vec<Layer>> {
    if fam.n != f.num_vars() {
        return Err(Error::LengthMismatch { expected: f.num_vars(), got: fam.n });
    }
    let patterns = candidate_patterns(fam);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); patterns.len()];
    for (ci, clause) in f.clauses().iter().enumerate() {
        if clause.width() > fam.k {
            return Err(Error::ClauseTooWide { clause: ci, width: clause.width(), k: fam.k });
        }
        let cs = clause_compat(clause, f.num_vars());
        let slot = patterns
            .iter()
            .position(|p| cs.matches_pattern(p))
            .ok_or_else(|| Error::Internal(format!("clause {ci} matches no layer pattern")))?;
        members[slot].push(ci);
    }
    Ok(patterns
        .into_iter()
        .zip(members)
        .filter(|(_, m)| !m.is_empty())
        .map(|(pattern, clauses)| Layer { pattern, clauses })
        .collect())
}

fn clause_compat(clause: &crate::formula::Clause, n: usize) -> CompatString {
    let mut s = vec![Compat::Free; n];
    for l in clause.literals() {
        s[l.var - 1] = if l.negated { Compat::One } else { Compat::Zero };
    }
    CompatString(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerCheck {
    pub p_pass: f64,
    /// `None` when the branch has probability below the post-selection floor.
    pub pass_state: Option<StateVector>,
    pub fail_state: Option<StateVector>,
}

/// Two-outcome measurement `{Π(I − P_i), I − Π(I − P_i)}` over the layer.
pub fn layer_check_probabilities(psi: &StateVector, layer: &Layer, projectors: &[ClauseProjector]) -> LayerCheck {
    let members: Vec<&ClauseProjector> = layer.clauses.iter().map(|&i| &projectors[i]).collect();
    let (passed, p_pass) = statevec::group_pass(psi, &members);
    let scale = psi.norm_sqr().sqrt();
    let normalize = |mut v: Vec<f64>, p: f64| {
        (p >= MIN_BRANCH_PROBABILITY).then(|| {
            let s = (p.sqrt() * scale).recip();
            v.iter_mut().for_each(|a| *a *= s);
            StateVector::from_amps(psi.num_qubits(), v)
        })
    };
    let fail: Vec<f64> = psi.amps().iter().zip(passed.amps()).map(|(a, b)| a - b).collect();
    LayerCheck { p_pass, fail_state: normalize(fail, 1.0 - p_pass), pass_state: normalize(passed.into_amps(), p_pass) }
}
