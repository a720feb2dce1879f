//! Disjoint AllSAT enumeration.
//!
//! The solver lists pairwise-disjoint partial models of a CNF formula without
//! adding blocking clauses. It runs CDCL with chronological backtracking,
//! learns clauses up to the last UIP, and shrinks each total model to a
//! prefix of the trail before flipping the deciding literal.
//!
//! ```
//! use chrono_allsat::{enumerate, parse_dimacs, PartialModel, SolverConfig};
//!
//! let formula = parse_dimacs("p cnf 3 1\n1 2 3 0\n").unwrap();
//! let mut models: Vec<PartialModel> = Vec::new();
//! let summary = enumerate(&formula, SolverConfig::default(), &mut models).unwrap();
//! assert_eq!(summary.coverage, 7u32.into());
//! ```

pub mod bench;
pub mod config;
pub mod engine;
pub mod formula;
pub mod generators;
pub mod heuristic;
pub mod oracle;
pub mod search;
pub mod shrink;

pub use config::SolverConfig;
pub use formula::{parse_dimacs, write_dimacs, CnfFormula, DimacsError, Lit, Var};
pub use heuristic::{HeuristicConfig, Polarity};
pub use search::{
    enumerate, AuditReport, Discard, EnumerationSummary, FnSink, ModelSink, PartialModel, SolveError,
    Solver, Stats, Status,
};
pub use shrink::ShrinkMode;
