//! Benchmark families: paired binary clauses and uniform random 3-SAT.
//!
//! Random instances use ChaCha8 seeded with `seed_from_u64`, drawing only
//! 64-bit words. A variable is `(word * n) >> 64` (multiply-shift), redrawn
//! while it repeats within the clause; the sign is the top bit of the next
//! word. Any implementation following these steps rebuilds the same corpus.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::formula::CnfFormula;

pub const DEFAULT_RATIO: f64 = 1.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("binary-clause family needs an even number of variables, got {0}")]
    OddVariableCount(usize),
    #[error("random 3-SAT needs at least 3 variables, got {0}")]
    TooFewVariables(usize),
    #[error("clause/variable ratio must be finite and non-negative, got {0}")]
    BadRatio(f64),
}

/// `(x1 ∨ xn) ∧ (x2 ∨ x(n−1)) ∧ …`, with 3^(n/2) models.
pub fn gen_binary(n: usize) -> Result<CnfFormula, GenError> {
    if !n.is_multiple_of(2) {
        return Err(GenError::OddVariableCount(n));
    }
    let clauses = (1..=n / 2).map(|i| [i as i32, (n + 1 - i) as i32]);
    Ok(CnfFormula::from_clauses(n, clauses).expect("indices within range"))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rnd3SatSpec {
    pub n: usize,
    pub ratio: f64,
    pub seed: u64,
}

impl Rnd3SatSpec {
    pub fn new(n: usize, seed: u64) -> Rnd3SatSpec {
        Rnd3SatSpec {
            n,
            ratio: DEFAULT_RATIO,
            seed,
        }
    }

    pub fn num_clauses(&self) -> usize {
        (self.ratio * self.n as f64).round() as usize
    }
}

/// Raw clauses in DIMACS numbering, before normalization.
pub fn rnd3sat_clauses(spec: &Rnd3SatSpec) -> Result<Vec<[i32; 3]>, GenError> {
    if spec.n < 3 {
        return Err(GenError::TooFewVariables(spec.n));
    }
    if !spec.ratio.is_finite() || spec.ratio < 0.0 {
        return Err(GenError::BadRatio(spec.ratio));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n as u128;
    let clauses = (0..spec.num_clauses())
        .map(|_| {
            let mut clause = [0i32; 3];
            for k in 0..3 {
                let var = loop {
                    let v = ((rng.next_u64() as u128 * n) >> 64) as i32 + 1;
                    if !clause[..k].iter().any(|l| l.abs() == v) {
                        break v;
                    }
                };
                let negative = rng.next_u64() >> 63 == 1;
                clause[k] = if negative { -var } else { var };
            }
            clause
        })
        .collect();
    Ok(clauses)
}

pub fn gen_rnd3sat(spec: &Rnd3SatSpec) -> Result<CnfFormula, GenError> {
    let clauses = rnd3sat_clauses(spec)?;
    Ok(CnfFormula::from_clauses(spec.n, clauses).expect("indices within range"))
}
