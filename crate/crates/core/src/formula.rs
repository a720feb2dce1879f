//! CNF formulas: variables, literals, clauses and DIMACS I/O.
//!
//! Clauses are normalized on construction: duplicate literals are removed,
//! tautologies (`l` and `-l` in one clause) are dropped and unit clauses are
//! kept apart in [`CnfFormula::units`]. An empty clause is rejected, the
//! parser reports it as [`DimacsError::EmptyClause`] so callers can treat the
//! input as trivially unsatisfiable.

use std::fmt;
use std::ops::Not;

use thiserror::Error;

/// A propositional variable. Stored 0-based, printed with its 1-based DIMACS number.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u32);

impl Var {
    #[inline]
    pub fn from_index(index: usize) -> Var {
        Var(index as u32)
    }

    /// Variable with the given DIMACS number (must be at least 1).
    #[inline]
    pub fn from_dimacs(number: u32) -> Var {
        assert!(number >= 1, "DIMACS variables start at 1");
        Var(number - 1)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn dimacs(self) -> u32 {
        self.0 + 1
    }

    #[inline]
    pub fn lit(self, positive: bool) -> Lit {
        Lit::new(self, positive)
    }

    #[inline]
    pub fn positive(self) -> Lit {
        Lit::new(self, true)
    }

    #[inline]
    pub fn negative(self) -> Lit {
        Lit::new(self, false)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.dimacs())
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.dimacs())
    }
}

/// A literal: a variable with a polarity. The low bit of the code is set for
/// negative literals, so a literal and its negation are adjacent codes.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    #[inline]
    pub fn new(var: Var, positive: bool) -> Lit {
        Lit(var.0 << 1 | (!positive) as u32)
    }

    /// Parses a nonzero DIMACS literal such as `-3`.
    #[inline]
    pub fn from_dimacs(lit: i32) -> Lit {
        assert!(lit != 0, "0 is not a literal");
        Lit::new(Var::from_dimacs(lit.unsigned_abs()), lit > 0)
    }

    #[inline]
    pub fn to_dimacs(self) -> i32 {
        let n = self.var().dimacs() as i32;
        if self.is_positive() {
            n
        } else {
            -n
        }
    }

    #[inline]
    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    /// Dense index, usable for per-literal tables of size `2 * num_vars`.
    #[inline]
    pub fn code(self) -> usize {
        self.0 as usize
    }
}

impl Not for Lit {
    type Output = Lit;

    #[inline]
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_positive() {
            write!(f, "x{}", self.var().dimacs())
        } else {
            write!(f, "¬x{}", self.var().dimacs())
        }
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A normalized clause with at least two distinct, non-complementary literals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Clause {
    lits: Vec<Lit>,
}

impl Clause {
    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Lit> {
        self.lits.iter()
    }
}

impl<'a> IntoIterator for &'a Clause {
    type Item = &'a Lit;
    type IntoIter = std::slice::Iter<'a, Lit>;

    fn into_iter(self) -> Self::IntoIter {
        self.lits.iter()
    }
}

/// Outcome of normalizing a raw literal list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Normalized {
    Empty,
    Tautology,
    Unit(Lit),
    Clause(Clause),
}

/// Removes duplicate literals (keeping first occurrences) and detects tautologies.
pub fn normalize(raw: impl IntoIterator<Item = Lit>) -> Normalized {
    let mut lits: Vec<Lit> = Vec::new();
    for lit in raw {
        if lits.contains(&!lit) {
            return Normalized::Tautology;
        }
        if !lits.contains(&lit) {
            lits.push(lit);
        }
    }
    match lits.len() {
        0 => Normalized::Empty,
        1 => Normalized::Unit(lits[0]),
        _ => Normalized::Clause(Clause { lits }),
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ClauseError {
    #[error("literal {lit} exceeds variable count {num_vars}")]
    VarOutOfRange { lit: i64, num_vars: usize },
    #[error("empty clause")]
    Empty,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum DimacsError {
    #[error("line {line}: clause data before the `p cnf` header")]
    MissingHeader { line: usize },
    #[error("line {line}: malformed `p cnf` header")]
    MalformedHeader { line: usize },
    #[error("line {line}: invalid token `{token}`")]
    InvalidToken { line: usize, token: String },
    #[error("line {line}: literal {lit} exceeds declared variable count {num_vars}")]
    VarOutOfRange { line: usize, lit: i64, num_vars: usize },
    #[error("line {line}: empty clause, the formula is unsatisfiable")]
    EmptyClause { line: usize },
    #[error("unterminated clause at end of input")]
    UnterminatedClause,
    #[error("no `p cnf` header found")]
    NoHeader,
}

impl DimacsError {
    /// True when the input was well formed but contains an empty clause.
    pub fn is_empty_clause(&self) -> bool {
        matches!(self, DimacsError::EmptyClause { .. })
    }
}

/// A CNF formula over variables `1..=num_vars`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Clause>,
    units: Vec<Lit>,
}

impl CnfFormula {
    pub fn new(num_vars: usize) -> CnfFormula {
        CnfFormula {
            num_vars,
            clauses: Vec::new(),
            units: Vec::new(),
        }
    }

    /// Builds a formula from DIMACS-style integer clauses.
    pub fn from_clauses<C, I>(num_vars: usize, clauses: C) -> Result<CnfFormula, ClauseError>
    where
        C: IntoIterator<Item = I>,
        I: IntoIterator<Item = i32>,
    {
        let mut formula = CnfFormula::new(num_vars);
        for clause in clauses {
            formula.add_dimacs_clause(clause)?;
        }
        Ok(formula)
    }

    pub fn add_dimacs_clause(
        &mut self,
        clause: impl IntoIterator<Item = i32>,
    ) -> Result<(), ClauseError> {
        let mut lits = Vec::new();
        for raw in clause {
            if raw == 0 || raw.unsigned_abs() as usize > self.num_vars {
                return Err(ClauseError::VarOutOfRange {
                    lit: raw as i64,
                    num_vars: self.num_vars,
                });
            }
            lits.push(Lit::from_dimacs(raw));
        }
        self.add_clause(lits)
    }

    /// Adds a clause after normalization. Tautologies are silently dropped.
    pub fn add_clause(&mut self, lits: impl IntoIterator<Item = Lit>) -> Result<(), ClauseError> {
        let lits: Vec<Lit> = lits.into_iter().collect();
        if let Some(bad) = lits.iter().find(|l| l.var().index() >= self.num_vars) {
            return Err(ClauseError::VarOutOfRange {
                lit: bad.to_dimacs() as i64,
                num_vars: self.num_vars,
            });
        }
        match normalize(lits) {
            Normalized::Empty => return Err(ClauseError::Empty),
            Normalized::Tautology => {}
            Normalized::Unit(lit) => self.units.push(lit),
            Normalized::Clause(clause) => self.clauses.push(clause),
        }
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Clauses with two or more literals.
    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Input unit clauses, installed at decision level 0.
    pub fn units(&self) -> &[Lit] {
        &self.units
    }

    /// Iterates over all constraints, unit clauses first, as literal slices.
    pub fn all_clauses(&self) -> impl Iterator<Item = &[Lit]> {
        self.units
            .iter()
            .map(std::slice::from_ref)
            .chain(self.clauses.iter().map(|c| c.lits()))
    }

    /// Number of clause occurrences of each variable.
    pub fn occurrences(&self) -> Vec<u32> {
        let mut occ = vec![0u32; self.num_vars];
        for clause in self.all_clauses() {
            for lit in clause {
                occ[lit.var().index()] += 1;
            }
        }
        occ
    }

    /// Whether `assignment` (indexed by variable) satisfies every clause.
    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.all_clauses()
            .all(|c| c.iter().any(|l| assignment[l.var().index()] == l.is_positive()))
    }
}

/// Parses DIMACS CNF text.
///
/// Comment lines start with `c`; a line starting with `%` ends the input (as
/// in the SATLIB uniform random files). The clause count in the header is not
/// enforced.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, DimacsError> {
    let mut formula: Option<CnfFormula> = None;
    let mut pending: Vec<Lit> = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('%') {
            break;
        }
        if trimmed.starts_with('p') {
            if formula.is_some() {
                return Err(DimacsError::MalformedHeader { line: line_no });
            }
            formula = Some(parse_header(trimmed, line_no)?);
            continue;
        }
        let formula = formula
            .as_mut()
            .ok_or(DimacsError::MissingHeader { line: line_no })?;
        for token in trimmed.split_whitespace() {
            let value: i64 = token.parse().map_err(|_| DimacsError::InvalidToken {
                line: line_no,
                token: token.to_string(),
            })?;
            if value == 0 {
                let lits = std::mem::take(&mut pending);
                formula.add_clause(lits).map_err(|e| match e {
                    ClauseError::Empty => DimacsError::EmptyClause { line: line_no },
                    ClauseError::VarOutOfRange { lit, num_vars } => DimacsError::VarOutOfRange {
                        line: line_no,
                        lit,
                        num_vars,
                    },
                })?;
                continue;
            }
            if value.unsigned_abs() > formula.num_vars as u64 {
                return Err(DimacsError::VarOutOfRange {
                    line: line_no,
                    lit: value,
                    num_vars: formula.num_vars,
                });
            }
            pending.push(Lit::from_dimacs(value as i32));
        }
    }

    if !pending.is_empty() {
        return Err(DimacsError::UnterminatedClause);
    }
    formula.ok_or(DimacsError::NoHeader)
}

fn parse_header(line: &str, line_no: usize) -> Result<CnfFormula, DimacsError> {
    let malformed = || DimacsError::MalformedHeader { line: line_no };
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "p" || fields[1] != "cnf" {
        return Err(malformed());
    }
    let num_vars: usize = fields[2].parse().map_err(|_| malformed())?;
    let _num_clauses: usize = fields[3].parse().map_err(|_| malformed())?;
    if num_vars > i32::MAX as usize {
        return Err(malformed());
    }
    Ok(CnfFormula::new(num_vars))
}

/// Renders a formula as DIMACS CNF, unit clauses first.
pub fn write_dimacs(formula: &CnfFormula) -> String {
    use std::fmt::Write;

    let count = formula.units.len() + formula.clauses.len();
    let mut out = format!("p cnf {} {}\n", formula.num_vars, count);
    for clause in formula.all_clauses() {
        for lit in clause {
            let _ = write!(out, "{} ", lit);
        }
        out.push_str("0\n");
    }
    out
}
