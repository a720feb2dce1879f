//! Brute-force ground truth for small formulas.
//!
//! Every total assignment is a bit mask over variable indices (bit `i` set
//! means variable `i + 1` is true). Nothing here shares code with the solver.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::formula::{CnfFormula, Lit};

pub const DEFAULT_BOUND: usize = 26;

/// Hard ceiling on the bound: the cover table stores one byte per assignment.
const MAX_BOUND: usize = 34;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("formula has {num_vars} variables, above the brute-force bound of {bound}")]
    BoundExceeded { num_vars: usize, bound: usize },
    #[error("model {index} assigns variable {var} both ways")]
    InconsistentModel { index: usize, var: u32 },
    #[error("model {index} mentions variable {var}, formula has {num_vars}")]
    VarOutOfRange { index: usize, var: u32, num_vars: usize },
}

/// A total assignment covered a wrong number of times.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// The assignment as one literal per variable, in variable order.
    pub assignment: Vec<Lit>,
    pub times_covered: u32,
    pub is_model: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleReport {
    pub model_count: BigUint,
    /// Σ 2^(n − |μ|) over the given partial models.
    pub covered: BigUint,
    /// Every total model is covered and no non-model is.
    pub cover_ok: bool,
    /// No total assignment is covered twice.
    pub disjoint_ok: bool,
    /// First violating assignment in ascending mask order.
    pub first_violation: Option<Violation>,
}

impl OracleReport {
    pub fn is_exact(&self) -> bool {
        self.cover_ok && self.disjoint_ok
    }
}

struct Masks {
    num_vars: usize,
    clauses: Vec<(u64, u64)>,
}

impl Masks {
    fn new(formula: &CnfFormula, bound: usize) -> Result<Masks, OracleError> {
        let n = formula.num_vars();
        if n > bound.min(MAX_BOUND) {
            return Err(OracleError::BoundExceeded {
                num_vars: n,
                bound: bound.min(MAX_BOUND),
            });
        }
        let clauses = formula
            .all_clauses()
            .map(|c| {
                c.iter().fold((0u64, 0u64), |(pos, neg), l| {
                    let bit = 1u64 << l.var().index();
                    if l.is_positive() {
                        (pos | bit, neg)
                    } else {
                        (pos, neg | bit)
                    }
                })
            })
            .collect();
        Ok(Masks { num_vars: n, clauses })
    }

    fn size(&self) -> u64 {
        1u64 << self.num_vars
    }

    fn satisfies(&self, a: u64) -> bool {
        self.clauses
            .iter()
            .all(|&(pos, neg)| a & pos != 0 || !a & neg != 0)
    }

    fn decode(&self, a: u64) -> Vec<Lit> {
        (0..self.num_vars)
            .map(|i| Lit::from_dimacs(if a >> i & 1 == 1 { i as i32 + 1 } else { -(i as i32 + 1) }))
            .collect()
    }
}

pub fn count_models(formula: &CnfFormula) -> Result<BigUint, OracleError> {
    count_models_with_bound(formula, DEFAULT_BOUND)
}

pub fn count_models_with_bound(formula: &CnfFormula, bound: usize) -> Result<BigUint, OracleError> {
    let masks = Masks::new(formula, bound)?;
    let count = (0..masks.size())
        .into_par_iter()
        .filter(|&a| masks.satisfies(a))
        .count();
    Ok(BigUint::from(count))
}

/// (fixed bits, values of fixed bits) for one partial model.
fn model_mask(index: usize, lits: &[Lit], num_vars: usize) -> Result<(u64, u64), OracleError> {
    let mut fixed = 0u64;
    let mut value = 0u64;
    for l in lits {
        let var = l.var().dimacs();
        if l.var().index() >= num_vars {
            return Err(OracleError::VarOutOfRange { index, var, num_vars });
        }
        let bit = 1u64 << l.var().index();
        let v = if l.is_positive() { bit } else { 0 };
        if fixed & bit != 0 {
            if value & bit != v {
                return Err(OracleError::InconsistentModel { index, var });
            }
            continue;
        }
        fixed |= bit;
        value |= v;
    }
    Ok((fixed, value))
}

pub fn verify_cover<M: AsRef<[Lit]>>(
    formula: &CnfFormula,
    models: &[M],
) -> Result<OracleReport, OracleError> {
    verify_cover_with_bound(formula, models, DEFAULT_BOUND)
}

/// Counts, for every total assignment, how many partial models contain it.
pub fn verify_cover_with_bound<M: AsRef<[Lit]>>(
    formula: &CnfFormula,
    models: &[M],
    bound: usize,
) -> Result<OracleReport, OracleError> {
    let masks = Masks::new(formula, bound)?;
    let n = masks.num_vars;
    let full = masks.size() - 1;
    let mut counts = vec![0u8; masks.size() as usize];
    let mut covered = BigUint::zero();
    for (index, m) in models.iter().enumerate() {
        let (fixed, value) = model_mask(index, m.as_ref(), n)?;
        let free = full & !fixed;
        covered += BigUint::one() << free.count_ones();
        let mut sub = free;
        loop {
            let slot = &mut counts[(value | sub) as usize];
            *slot = slot.saturating_add(1);
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & free;
        }
    }

    let model_count = (0..masks.size())
        .into_par_iter()
        .filter(|&a| masks.satisfies(a))
        .count();
    let bad = |a: &u64| {
        let c = counts[*a as usize];
        c > 1 || (c == 1) != masks.satisfies(*a)
    };
    let first = (0..masks.size()).into_par_iter().find_first(bad);
    let overlap = counts.par_iter().any(|&c| c > 1);
    let wrong_cover = (0..masks.size())
        .into_par_iter()
        .any(|a| (counts[a as usize] > 0) != masks.satisfies(a));

    Ok(OracleReport {
        model_count: BigUint::from(model_count),
        covered,
        cover_ok: !wrong_cover,
        disjoint_ok: !overlap,
        first_violation: first.map(|a| Violation {
            assignment: masks.decode(a),
            times_covered: counts[a as usize] as u32,
            is_model: masks.satisfies(a),
        }),
    })
}

/// Result of checking partial models against an externally supplied count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountCheck {
    pub covered: BigUint,
    pub count_ok: bool,
    /// First pair of models (by index) that share a total assignment.
    pub first_overlap: Option<(usize, usize)>,
}

impl CountCheck {
    pub fn is_exact(&self) -> bool {
        self.count_ok && self.first_overlap.is_none()
    }
}

/// Checks pairwise disjointness and that the covered total equals `expected`.
/// Needs no enumeration of assignments, so it works for any number of
/// variables; it does not check that the models satisfy the formula.
pub fn verify_against_count<M: AsRef<[Lit]>>(
    num_vars: usize,
    models: &[M],
    expected: &BigUint,
) -> Result<CountCheck, OracleError> {
    let mut sets: Vec<Vec<Option<bool>>> = Vec::with_capacity(models.len());
    let mut covered = BigUint::zero();
    for (index, m) in models.iter().enumerate() {
        let mut values = vec![None; num_vars];
        for l in m.as_ref() {
            let var = l.var().dimacs();
            let slot = values
                .get_mut(l.var().index())
                .ok_or(OracleError::VarOutOfRange { index, var, num_vars })?;
            match *slot {
                Some(v) if v != l.is_positive() => {
                    return Err(OracleError::InconsistentModel { index, var })
                }
                _ => *slot = Some(l.is_positive()),
            }
        }
        let assigned = values.iter().filter(|v| v.is_some()).count();
        covered += BigUint::one() << (num_vars - assigned);
        sets.push(values);
    }
    let clash = |a: &[Option<bool>], b: &[Option<bool>]| {
        a.iter()
            .zip(b)
            .any(|(x, y)| matches!((x, y), (Some(p), Some(q)) if p != q))
    };
    let first_overlap = (0..sets.len())
        .flat_map(|i| (i + 1..sets.len()).map(move |j| (i, j)))
        .find(|&(i, j)| !clash(&sets[i], &sets[j]));
    Ok(CountCheck {
        count_ok: &covered == expected,
        covered,
        first_overlap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn formula(n: usize, clauses: &[&[i32]]) -> CnfFormula {
        CnfFormula::from_clauses(n, clauses.iter().map(|c| c.to_vec())).unwrap()
    }

    fn lits(xs: &[i32]) -> Vec<Lit> {
        xs.iter().map(|&x| Lit::from_dimacs(x)).collect()
    }

    fn example_two() -> CnfFormula {
        formula(3, &[&[1, 2, 3]])
    }

    fn example_one() -> CnfFormula {
        formula(3, &[&[1, -2], &[1, -3], &[-1, -2]])
    }

    #[test]
    fn counts() {
        assert_eq!(count_models(&example_two()).unwrap(), BigUint::from(7u32));
        assert_eq!(count_models(&example_one()).unwrap(), BigUint::from(3u32));
        assert_eq!(
            count_models(&formula(4, &[&[1, 4], &[2, 3]])).unwrap(),
            BigUint::from(9u32)
        );
        assert_eq!(count_models(&CnfFormula::new(0)).unwrap(), BigUint::one());
        assert_eq!(count_models(&formula(1, &[&[1], &[-1]])).unwrap(), BigUint::zero());
    }

    #[test]
    fn bound_is_enforced() {
        let f = CnfFormula::new(27);
        assert_eq!(
            count_models(&f),
            Err(OracleError::BoundExceeded { num_vars: 27, bound: 26 })
        );
        assert!(count_models_with_bound(&CnfFormula::new(5), 4).is_err());
    }

    #[test]
    fn example_two_solution_is_exact() {
        let models = [lits(&[3]), lits(&[2, -3]), lits(&[1, -2, -3])];
        let r = verify_cover(&example_two(), &models).unwrap();
        assert!(r.is_exact());
        assert_eq!(r.covered, BigUint::from(7u32));
        assert_eq!(r.first_violation, None);
    }

    #[test]
    fn empty_model_covers_everything_once() {
        let r = verify_cover(&CnfFormula::new(1), &[lits(&[])]).unwrap();
        assert!(r.is_exact());
        assert_eq!(r.covered, BigUint::from(2u32));
    }

    #[test]
    fn duplicate_model_breaks_disjointness() {
        let models = [lits(&[3]), lits(&[2, -3]), lits(&[2, -3]), lits(&[1, -2, -3])];
        let r = verify_cover(&example_two(), &models).unwrap();
        assert!(r.cover_ok);
        assert!(!r.disjoint_ok);
        let w = r.first_violation.unwrap();
        assert_eq!(w.times_covered, 2);
        assert!(w.is_model);
        assert_eq!(w.assignment, lits(&[-1, 2, -3]));
    }

    #[test]
    fn missing_model_is_a_gap() {
        let models = [lits(&[3]), lits(&[1, -2, -3])];
        let r = verify_cover(&example_two(), &models).unwrap();
        assert!(!r.cover_ok);
        assert!(r.disjoint_ok);
        let w = r.first_violation.unwrap();
        assert_eq!((w.times_covered, w.is_model), (0, true));
        assert_eq!(w.assignment, lits(&[-1, 2, -3]));
    }

    #[test]
    fn covering_a_non_model_fails() {
        let models = [lits(&[3]), lits(&[-3])];
        let r = verify_cover(&example_two(), &models).unwrap();
        assert!(!r.cover_ok);
        let w = r.first_violation.unwrap();
        assert_eq!(w.assignment, lits(&[-1, -2, -3]));
        assert!(!w.is_model);
    }

    #[test]
    fn inconsistent_model_is_rejected() {
        let models = [lits(&[1, -1])];
        assert_eq!(
            verify_cover(&example_two(), &models),
            Err(OracleError::InconsistentModel { index: 0, var: 1 })
        );
    }

    #[test]
    fn total_enumeration_passes() {
        let f = formula(5, &[&[1, -2, 3], &[-1, 4], &[2, 5, -3]]);
        let totals: Vec<Vec<Lit>> = (0u32..32)
            .map(|a| {
                (0..5)
                    .map(|i| if a >> i & 1 == 1 { i + 1 } else { -(i + 1) })
                    .collect::<Vec<i32>>()
            })
            .filter(|a| {
                let bools: Vec<bool> = a.iter().map(|&x| x > 0).collect();
                f.is_satisfied_by(&bools)
            })
            .map(|a| lits(&a))
            .collect();
        let r = verify_cover(&f, &totals).unwrap();
        assert!(r.is_exact());
        assert_eq!(r.model_count, BigUint::from(totals.len()));
    }

    #[test]
    fn external_count() {
        let models = [lits(&[3]), lits(&[2, -3]), lits(&[1, -2, -3])];
        let ok = verify_against_count(3, &models, &BigUint::from(7u32)).unwrap();
        assert!(ok.is_exact());
        let dup = [lits(&[3]), lits(&[3, 1])];
        let r = verify_against_count(3, &dup, &BigUint::from(6u32)).unwrap();
        assert_eq!(r.first_overlap, Some((0, 1)));
        assert!(r.count_ok);
        let r = verify_against_count(3, &models, &BigUint::from(8u32)).unwrap();
        assert!(!r.count_ok);
    }
}
