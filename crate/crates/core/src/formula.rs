//! CNF formulas: representation, DIMACS I/O, evaluation, propagation of a
//! fixed variable, the brute-force solution oracle and instance generators.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits;

/// A variable (1-based) or its negation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, negated: false }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, negated: true }
    }

    /// Literal from a signed DIMACS integer.
    pub fn from_dimacs(lit: i64) -> Self {
        Literal { var: lit.unsigned_abs() as usize, negated: lit < 0 }
    }

    pub fn to_dimacs(self) -> i64 {
        if self.negated {
            -(self.var as i64)
        } else {
            self.var as i64
        }
    }

    /// Truth value of the literal when its variable takes `value`.
    #[inline]
    pub fn eval(self, value: bool) -> bool {
        value != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "¬b{}", self.var)
        } else {
            write!(f, "b{}", self.var)
        }
    }
}

/// Disjunction of literals over distinct variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clause {
    literals: Vec<Literal>,
}

impl Clause {
    /// Builds a clause, merging duplicate literals. Fails on an empty
    /// literal list or when a variable occurs in both polarities.
    pub fn new(literals: impl IntoIterator<Item = Literal>) -> Result<Self> {
        let mut out: Vec<Literal> = Vec::new();
        for lit in literals {
            if lit.var == 0 {
                return Err(Error::InvalidParameter("variable index 0".into()));
            }
            match out.iter().find(|l| l.var == lit.var) {
                Some(l) if l.negated == lit.negated => {}
                Some(_) => return Err(Error::Tautology { clause: 0, var: lit.var }),
                None => out.push(lit),
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidParameter("empty clause".into()));
        }
        Ok(Clause { literals: out })
    }

    /// Convenience constructor from signed DIMACS integers.
    pub fn from_dimacs(lits: &[i64]) -> Result<Self> {
        Clause::new(lits.iter().map(|&l| Literal::from_dimacs(l)))
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn width(&self) -> usize {
        self.literals.len()
    }

    pub fn literal_of(&self, var: usize) -> Option<Literal> {
        self.literals.iter().copied().find(|l| l.var == var)
    }

    pub fn is_satisfied_by(&self, a: &Assignment) -> bool {
        self.literals.iter().any(|l| l.eval(a.get(l.var)))
    }

    /// Bitmasks (positive, negative) over 0-based qubit positions.
    pub(crate) fn masks(&self) -> (usize, usize) {
        let mut pos = 0usize;
        let mut neg = 0usize;
        for l in &self.literals {
            let bit = 1usize << (l.var - 1);
            if l.negated {
                neg |= bit;
            } else {
                pos |= bit;
            }
        }
        (pos, neg)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.literals.iter().enumerate() {
            if i > 0 {
                write!(f, " ∨ ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// Truth-value assignment `x ∈ {0,1}^n`; `true` is TRUE.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment(Vec<bool>);

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Self {
        Assignment(bits)
    }

    pub fn all_false(n: usize) -> Self {
        Assignment(vec![false; n])
    }

    /// Assignment encoded in a basis index: bit `q` holds variable `q+1`.
    pub fn from_index(index: usize, n: usize) -> Self {
        Assignment((0..n).map(|q| index >> q & 1 == 1).collect())
    }

    pub fn to_index(&self) -> usize {
        self.0.iter().enumerate().fold(0, |acc, (q, &b)| acc | (usize::from(b) << q))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Value of 1-based variable `var`.
    #[inline]
    pub fn get(&self, var: usize) -> bool {
        self.0[var - 1]
    }

    pub fn set(&mut self, var: usize, value: bool) {
        self.0[var - 1] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn hamming(&self, other: &Assignment) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Assignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::InvalidParameter(format!("bad assignment character {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Assignment)
    }
}

/// CNF instance over variables `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Formula {
    n: usize,
    k: usize,
    clauses: Vec<Clause>,
}

/// Result of fixing a variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Propagation {
    Reduced(Formula),
    /// Some clause lost its last literal.
    Unsat,
}

impl Formula {
    /// Formula whose declared width is the maximum clause width.
    pub fn new(n: usize, clauses: Vec<Clause>) -> Result<Self> {
        let k = clauses.iter().map(Clause::width).max().unwrap_or(0);
        Formula::with_k(n, k, clauses)
    }

    pub fn with_k(n: usize, k: usize, clauses: Vec<Clause>) -> Result<Self> {
        for (i, c) in clauses.iter().enumerate() {
            if c.width() > k {
                return Err(Error::ClauseTooWide { clause: i, width: c.width(), k });
            }
            for l in c.literals() {
                if l.var > n {
                    return Err(Error::LiteralOutOfRange { lit: l.to_dimacs(), n });
                }
            }
        }
        Ok(Formula { n, k, clauses })
    }

    /// Shorthand used heavily in tests: clauses as signed DIMACS integers.
    pub fn from_dimacs_clauses(n: usize, clauses: &[&[i64]]) -> Result<Self> {
        let cs = clauses.iter().map(|c| Clause::from_dimacs(c)).collect::<Result<Vec<_>>>()?;
        Formula::new(n, cs)
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// Declared maximum clause width.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Variables occurring in at least one clause.
    pub fn occurs(&self, var: usize) -> bool {
        self.clauses.iter().any(|c| c.literal_of(var).is_some())
    }

    pub fn evaluate(&self, a: &Assignment) -> Result<bool> {
        if a.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: a.len() });
        }
        Ok(self.clauses.iter().all(|c| c.is_satisfied_by(a)))
    }

    /// Fixes `var := value`: satisfied clauses are discarded and false
    /// literals deleted. Variable numbering is unchanged.
    pub fn propagate(&self, var: usize, value: bool) -> Result<Propagation> {
        if var == 0 || var > self.n {
            return Err(Error::LiteralOutOfRange { lit: var as i64, n: self.n });
        }
        let mut out = Vec::with_capacity(self.clauses.len());
        for c in &self.clauses {
            match c.literal_of(var) {
                Some(l) if l.eval(value) => continue,
                Some(_) => {
                    let rest: Vec<Literal> = c.literals.iter().copied().filter(|l| l.var != var).collect();
                    if rest.is_empty() {
                        return Ok(Propagation::Unsat);
                    }
                    out.push(Clause { literals: rest });
                }
                None => out.push(c.clone()),
            }
        }
        Ok(Propagation::Reduced(Formula { n: self.n, k: self.k, clauses: out }))
    }

    /// Drops a variable that no longer occurs, shifting higher indices down.
    pub fn remove_variable(&self, var: usize) -> Result<Formula> {
        if var == 0 || var > self.n {
            return Err(Error::LiteralOutOfRange { lit: var as i64, n: self.n });
        }
        if self.occurs(var) {
            return Err(Error::InvalidParameter(format!("variable {var} still occurs")));
        }
        let clauses = self
            .clauses
            .iter()
            .map(|c| Clause {
                literals: c
                    .literals
                    .iter()
                    .map(|l| Literal { var: if l.var > var { l.var - 1 } else { l.var }, negated: l.negated })
                    .collect(),
            })
            .collect();
        Ok(Formula { n: self.n - 1, k: self.k, clauses })
    }

    /// Sub-formula keeping the clauses listed in `indices`.
    pub fn subformula(&self, indices: &[usize]) -> Formula {
        Formula { n: self.n, k: self.k, clauses: indices.iter().map(|&i| self.clauses[i].clone()).collect() }
    }

    /// True iff no variable occurs in both polarities.
    pub fn is_unate(&self) -> bool {
        let mut pos = vec![false; self.n + 1];
        let mut neg = vec![false; self.n + 1];
        for l in self.clauses.iter().flat_map(|c| c.literals()) {
            if l.negated {
                neg[l.var] = true;
            } else {
                pos[l.var] = true;
            }
        }
        !pos.iter().zip(&neg).any(|(&p, &n)| p && n)
    }

    /// TRUE for variables occurring positively, FALSE otherwise.
    pub fn polarity_assignment(&self) -> Assignment {
        let mut a = Assignment::all_false(self.n);
        for l in self.clauses.iter().flat_map(|c| c.literals()) {
            if !l.negated {
                a.set(l.var, true);
            }
        }
        a
    }

    /// Basis indices (bit `q` = variable `q+1`) of all satisfying assignments.
    pub fn solution_indices(&self) -> Result<Vec<usize>> {
        limits::check_brute_force("brute-force enumeration", self.n)?;
        let masks: Vec<(usize, usize)> = self.clauses.iter().map(Clause::masks).collect();
        let full = (1usize << self.n) - 1;
        Ok((0..1usize << self.n).filter(|&x| masks.iter().all(|&(p, q)| x & p != 0 || (!x & full) & q != 0)).collect())
    }

    /// Exact solution set, in increasing basis-index order.
    pub fn brute_force_solutions(&self) -> Result<Vec<Assignment>> {
        Ok(self.solution_indices()?.into_iter().map(|i| Assignment::from_index(i, self.n)).collect())
    }

    pub fn count_solutions(&self) -> Result<usize> {
        Ok(self.solution_indices()?.len())
    }

    /// Canonical DIMACS text.
    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p cnf {} {}\n", self.n, self.clauses.len());
        for c in &self.clauses {
            for l in c.literals() {
                s.push_str(&l.to_dimacs().to_string());
                s.push(' ');
            }
            s.push_str("0\n");
        }
        s
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            return write!(f, "⊤");
        }
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, " ∧ ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Parses DIMACS CNF. Clauses may span lines; `c` lines are comments and a
/// trailing `%` line (as in SATLIB files) ends the input.
pub fn parse_dimacs(text: &str) -> Result<Formula> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Clause> = Vec::new();
    let mut current: Vec<i64> = Vec::new();
    let mut last_line = 0;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        last_line = lineno + 1;
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(Error::Parse { line: lineno + 1, msg: "duplicate header".into() });
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(Error::Parse { line: lineno + 1, msg: format!("malformed header {line:?}") });
            }
            let n = parts[2].parse::<usize>().map_err(|e| Error::Parse { line: lineno + 1, msg: e.to_string() })?;
            let m = parts[3].parse::<usize>().map_err(|e| Error::Parse { line: lineno + 1, msg: e.to_string() })?;
            header = Some((n, m));
            continue;
        }
        let Some((n, _)) = header else {
            return Err(Error::Parse { line: lineno + 1, msg: "clause before header".into() });
        };
        for tok in line.split_whitespace() {
            let lit = tok
                .parse::<i64>()
                .map_err(|_| Error::Parse { line: lineno + 1, msg: format!("bad literal {tok:?}") })?;
            if lit == 0 {
                if current.is_empty() {
                    return Err(Error::Parse { line: lineno + 1, msg: "empty clause".into() });
                }
                let idx = clauses.len();
                let c = Clause::from_dimacs(&current).map_err(|e| match e {
                    Error::Tautology { var, .. } => Error::Tautology { clause: idx, var },
                    other => other,
                })?;
                clauses.push(c);
                current.clear();
            } else {
                if lit.unsigned_abs() as usize > n {
                    return Err(Error::LiteralOutOfRange { lit, n });
                }
                current.push(lit);
            }
        }
    }

    let Some((n, m)) = header else {
        return Err(Error::Parse { line: last_line, msg: "missing 'p cnf' header".into() });
    };
    if !current.is_empty() {
        return Err(Error::Parse { line: last_line, msg: "unterminated clause".into() });
    }
    if clauses.len() != m {
        return Err(Error::ClauseCountMismatch { declared: m, found: clauses.len() });
    }
    Formula::new(n, clauses)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    RandomKsat,
    PlantedUnique,
    Unate,
    UnateUnique,
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random_ksat" | "random" => Ok(GeneratorKind::RandomKsat),
            "planted_unique" => Ok(GeneratorKind::PlantedUnique),
            "unate" => Ok(GeneratorKind::Unate),
            "unate_unique" => Ok(GeneratorKind::UnateUnique),
            _ => Err(Error::InvalidParameter(format!("unknown generator kind {s:?}"))),
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeneratorKind::RandomKsat => "random_ksat",
            GeneratorKind::PlantedUnique => "planted_unique",
            GeneratorKind::Unate => "unate",
            GeneratorKind::UnateUnique => "unate_unique",
        })
    }
}

/// Default attempt cap for the planted-unique generator.
pub const PLANTED_ATTEMPT_CAP: usize = 10_000;

/// Generates an instance; identical arguments give identical formulas.
///
/// `unate_unique` ignores `m` and `k` (it always emits one unit clause per
/// variable). `planted_unique` starts from `m` clauses satisfied by a hidden
/// assignment and appends clauses until it is the only solution, so the
/// result can have more than `m` clauses.
pub fn generate(kind: GeneratorKind, n: usize, m: usize, k: usize, seed: u64) -> Result<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if kind != GeneratorKind::UnateUnique && (k == 0 || k > n) {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    match kind {
        GeneratorKind::RandomKsat => {
            let clauses = (0..m)
                .map(|_| {
                    let vars = sample(&mut rng, n, k).into_vec();
                    let lits = vars.into_iter().map(|v| Literal { var: v + 1, negated: rng.random::<bool>() });
                    Clause::new(lits)
                })
                .collect::<Result<Vec<_>>>()?;
            Formula::with_k(n, k, clauses)
        }
        GeneratorKind::Unate => {
            let polarity: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
            let clauses = (0..m)
                .map(|_| {
                    let vars = sample(&mut rng, n, k).into_vec();
                    Clause::new(vars.into_iter().map(|v| Literal { var: v + 1, negated: polarity[v] }))
                })
                .collect::<Result<Vec<_>>>()?;
            Formula::with_k(n, k, clauses)
        }
        GeneratorKind::UnateUnique => {
            let clauses = (1..=n)
                .map(|v| Clause::new([Literal { var: v, negated: rng.random::<bool>() }]))
                .collect::<Result<Vec<_>>>()?;
            Formula::with_k(n, 1, clauses)
        }
        GeneratorKind::PlantedUnique => planted_unique(&mut rng, n, m, k, PLANTED_ATTEMPT_CAP),
    }
}

fn planted_unique(rng: &mut ChaCha8Rng, n: usize, m: usize, k: usize, cap: usize) -> Result<Formula> {
    limits::check_brute_force("planted_unique generation", n)?;
    let planted = Assignment::from_index(rng.random_range(0..1usize << n), n);
    let mut clauses = Vec::with_capacity(m);
    while clauses.len() < m {
        let vars = sample(rng, n, k).into_vec();
        let lits: Vec<Literal> =
            vars.into_iter().map(|v| Literal { var: v + 1, negated: rng.random::<bool>() }).collect();
        let c = Clause::new(lits)?;
        if c.is_satisfied_by(&planted) {
            clauses.push(c);
        }
    }
    for _ in 0..cap {
        let f = Formula::with_k(n, k, clauses.clone())?;
        let sols = f.solution_indices()?;
        let others: Vec<usize> = sols.into_iter().filter(|&x| x != planted.to_index()).collect();
        if others.is_empty() {
            return Ok(f);
        }
        // Kill one competing solution with a clause it violates but the
        // planted assignment satisfies.
        let target = Assignment::from_index(others[rng.random_range(0..others.len())], n);
        let differing: Vec<usize> = (1..=n).filter(|&v| target.get(v) != planted.get(v)).collect();
        let pivot = differing[rng.random_range(0..differing.len())];
        let mut vars = vec![pivot];
        let rest: Vec<usize> = (1..=n).filter(|&v| v != pivot).collect();
        for i in sample(rng, rest.len(), k - 1).into_iter() {
            vars.push(rest[i]);
        }
        vars.sort_unstable();
        let c = Clause::new(vars.into_iter().map(|v| Literal { var: v, negated: target.get(v) }))?;
        debug_assert!(c.is_satisfied_by(&planted) && !c.is_satisfied_by(&target));
        clauses.push(c);
    }
    Err(Error::GenerationFailed(cap))
}
