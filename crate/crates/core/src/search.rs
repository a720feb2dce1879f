//! The enumeration loop: propagate, analyze conflicts with the last UIP,
//! shrink and store total assignments, then flip the deciding literal.
//!
//! After a model is stored the decision at the backtrack level is flipped and
//! tagged [`Reason::Backtrue`]. Its reason clause, the flip together with the
//! negation of every decision below it, is rebuilt when conflict analysis
//! needs it and never stored.

use std::error::Error;
use std::fmt;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::config::SolverConfig;
use crate::engine::{ClauseRef, Engine, Origin, Reason};
use crate::formula::{CnfFormula, Lit, Var};
use crate::heuristic::Heuristic;
use crate::shrink::implicant_shrinking;

const TIME_CHECK_INTERVAL: u64 = 1024;

/// A consistent set of literals satisfying every clause, sorted by variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartialModel {
    lits: Vec<Lit>,
}

impl PartialModel {
    pub fn new(mut lits: Vec<Lit>) -> PartialModel {
        lits.sort_by_key(|l| l.var());
        PartialModel { lits }
    }

    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    /// Number of total assignments over `num_vars` variables it covers.
    pub fn weight(&self, num_vars: usize) -> BigUint {
        BigUint::one() << (num_vars - self.lits.len())
    }
}

impl AsRef<[Lit]> for PartialModel {
    fn as_ref(&self) -> &[Lit] {
        &self.lits
    }
}

/// Formats as a `v` line: `v 2 -3 0`.
impl fmt::Display for PartialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("v")?;
        for l in &self.lits {
            write!(f, " {}", l)?;
        }
        f.write_str(" 0")
    }
}

pub type SinkError = Box<dyn Error + Send + Sync>;

/// Receives models as they are found. Called on the solver thread.
pub trait ModelSink {
    fn on_model(&mut self, model: &PartialModel) -> Result<(), SinkError>;
}

impl ModelSink for Vec<PartialModel> {
    fn on_model(&mut self, model: &PartialModel) -> Result<(), SinkError> {
        self.push(model.clone());
        Ok(())
    }
}

pub struct FnSink<F>(pub F);

impl<F> ModelSink for FnSink<F>
where
    F: FnMut(&PartialModel) -> Result<(), SinkError>,
{
    fn on_model(&mut self, model: &PartialModel) -> Result<(), SinkError> {
        (self.0)(model)
    }
}

/// Drops every model; only the summary is kept.
pub struct Discard;

impl ModelSink for Discard {
    fn on_model(&mut self, _: &PartialModel) -> Result<(), SinkError> {
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("model sink failed: {0}")]
    Sink(#[source] SinkError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    /// All models were enumerated and there is at least one.
    Complete,
    /// All models were enumerated and there are none.
    Unsat,
    Timeout,
    BudgetExhausted,
}

impl Status {
    pub fn is_finished(self) -> bool {
        matches!(self, Status::Complete | Status::Unsat)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Complete => "complete",
            Status::Unsat => "unsat",
            Status::Timeout => "timeout",
            Status::BudgetExhausted => "budget_exhausted",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub decisions: u64,
    /// Every falsified clause met, including the final one at level 0.
    pub conflicts: u64,
    pub learned: u64,
    pub propagations: u64,
    pub model_literals: u64,
    /// Trail literals removed by shrinking before models were stored.
    pub shrink_dropped: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CheckCount {
    pub checked: u64,
    pub failed: u64,
}

/// Counts of invariant checks made with [`SolverConfig::audit`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuditReport {
    /// No unit or falsified clause left after propagation; watch pairs intact.
    pub propagation: CheckCount,
    /// Each learned clause is falsified and has one literal at the conflict level.
    pub learned_clauses: CheckCount,
    /// Each rebuilt flip reason is unit under the trail before the flip.
    pub backtrue_reasons: CheckCount,
    /// The trail cut at the shrink level satisfies the formula and keeps
    /// every implied literal.
    pub shrink: CheckCount,
    /// Watch lists are unchanged by a shrink call.
    pub watch_restore: CheckCount,
    /// Storing a model adds no clause.
    pub no_blocking: CheckCount,
    pub first_failure: Option<String>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        [
            self.propagation,
            self.learned_clauses,
            self.backtrue_reasons,
            self.shrink,
            self.watch_restore,
            self.no_blocking,
        ]
        .iter()
        .all(|c| c.failed == 0)
    }

    fn record(count: &mut CheckCount, first: &mut Option<String>, result: Result<(), String>) {
        count.checked += 1;
        if let Err(e) = result {
            count.failed += 1;
            first.get_or_insert(e);
        }
    }
}

#[derive(Clone, Debug)]
pub struct EnumerationSummary {
    pub status: Status,
    pub partial_models: u64,
    /// Σ 2^(n − |μ|) over the stored models.
    pub coverage: BigUint,
    pub stats: Stats,
    pub elapsed: Duration,
    pub input_clauses: usize,
    /// Final clause database size: input clauses plus learned clauses.
    pub clause_db: usize,
    pub audit: Option<AuditReport>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Flow {
    Continue,
    Done,
}

pub struct Solver {
    formula: CnfFormula,
    engine: Engine,
    heuristic: Heuristic,
    config: SolverConfig,
    stats: Stats,
    audit: Option<AuditReport>,
    seen: Vec<bool>,
    partial_models: u64,
    coverage: BigUint,
    root_conflict: bool,
}

impl Solver {
    pub fn new(formula: &CnfFormula, config: SolverConfig) -> Solver {
        let n = formula.num_vars();
        let mut engine = Engine::new(n);
        for clause in formula.clauses() {
            engine.add_clause(clause.lits().to_vec(), Origin::Input);
        }
        let mut root_conflict = false;
        for &unit in formula.units() {
            if engine.is_false(unit) {
                root_conflict = true;
            } else if !engine.is_assigned(unit.var()) {
                engine.assign(unit, 0, Reason::Unit);
            }
        }
        Solver {
            formula: formula.clone(),
            heuristic: Heuristic::new(formula.occurrences(), config.heuristic.clone()),
            audit: config.audit.then(AuditReport::default),
            config,
            engine,
            stats: Stats::default(),
            seen: vec![false; n],
            partial_models: 0,
            coverage: BigUint::zero(),
            root_conflict,
        }
    }

    pub fn enumerate<S: ModelSink + ?Sized>(
        mut self,
        sink: &mut S,
    ) -> Result<EnumerationSummary, SolveError> {
        let start = Instant::now();
        let mut status = Status::Complete;
        if self.root_conflict {
            self.stats.conflicts += 1;
        } else {
            let mut steps: u64 = 0;
            loop {
                if self.config.step_budget.is_some_and(|budget| steps >= budget) {
                    status = Status::BudgetExhausted;
                    break;
                }
                if steps.is_multiple_of(TIME_CHECK_INTERVAL)
                    && self.config.time_budget.is_some_and(|t| start.elapsed() >= t)
                {
                    status = Status::Timeout;
                    break;
                }
                steps += 1;
                if self.step(sink)? == Flow::Done {
                    break;
                }
            }
        }
        if status == Status::Complete && self.partial_models == 0 {
            status = Status::Unsat;
        }
        self.stats.propagations = self.engine.propagations();
        Ok(EnumerationSummary {
            status,
            partial_models: self.partial_models,
            coverage: self.coverage,
            stats: self.stats,
            elapsed: start.elapsed(),
            input_clauses: self.formula.clauses().len(),
            clause_db: self.engine.num_clauses(),
            audit: self.audit,
        })
    }

    fn step<S: ModelSink + ?Sized>(&mut self, sink: &mut S) -> Result<Flow, SolveError> {
        if let Some(conflict) = self.engine.propagate() {
            self.stats.conflicts += 1;
            return Ok(self.analyze_conflict(conflict));
        }
        if let Some(audit) = &mut self.audit {
            let result = match self.engine.find_unpropagated() {
                Some(c) => Err(format!("clause {:?} left unit or falsified", c)),
                None => self.engine.check_watch_integrity(),
            };
            AuditReport::record(&mut audit.propagation, &mut audit.first_failure, result);
        }
        match self.heuristic.pick_branch_literal(&self.engine) {
            Some(lit) => {
                self.stats.decisions += 1;
                self.engine.decide(lit);
                Ok(Flow::Continue)
            }
            None => self.analyze_assignment(sink),
        }
    }

    fn analyze_conflict(&mut self, conflict: ClauseRef) -> Flow {
        let conflict_level = self.engine.clause_level(conflict);
        if conflict_level < self.engine.decision_level() {
            self.engine.backtrack(conflict_level);
        }
        let dl = self.engine.decision_level();
        if dl == 0 {
            return Flow::Done;
        }
        let (uip, learned, involved) = self.last_uip_analysis(conflict);
        if let Some(audit) = &mut self.audit {
            let result = check_learned(&self.engine, &learned, dl);
            AuditReport::record(&mut audit.learned_clauses, &mut audit.first_failure, result);
        }
        self.heuristic.on_conflict(involved);

        self.engine.backtrack(dl - 1);
        // Asserting at the highest remaining level rather than dl - 1 keeps the
        // learned clause visible to propagation after later backtracks.
        let level = learned[1..]
            .iter()
            .map(|l| self.engine.level(l.var()))
            .max()
            .unwrap_or(0);
        let cref = self.engine.add_clause(learned, Origin::Learned);
        self.stats.learned += 1;
        self.engine.imply(!uip, level, cref);
        Flow::Continue
    }

    /// Resolves the conflict back to the decision of the current level.
    ///
    /// Returns that decision, the learned clause with `¬uip` first and a
    /// literal of the highest other level second, and every variable met.
    fn last_uip_analysis(&mut self, conflict: ClauseRef) -> (Lit, Vec<Lit>, Vec<Var>) {
        let dl = self.engine.decision_level();
        let mut pending = 0usize;
        let mut others = Vec::new();
        let mut involved = Vec::new();
        let conflict_lits = self.engine.clause(conflict).lits().to_vec();
        for l in conflict_lits {
            self.mark(l, dl, &mut pending, &mut others, &mut involved);
        }

        let mut index = self.engine.trail().len();
        let uip = loop {
            index -= 1;
            let p = self.engine.trail()[index];
            if !self.seen[p.var().index()] || self.engine.level(p.var()) != dl {
                continue;
            }
            pending -= 1;
            let reason_lits = match self.engine.reason(p.var()) {
                Reason::Decision => {
                    debug_assert_eq!(pending, 0);
                    break p;
                }
                Reason::Propagated(cref) => self.engine.clause(cref).lits().to_vec(),
                Reason::Backtrue { .. } => {
                    let reason = reconstruct_backtrue_reason(&self.engine, p);
                    if let Some(audit) = &mut self.audit {
                        let result = check_backtrue(&self.engine, p, &reason);
                        AuditReport::record(
                            &mut audit.backtrue_reasons,
                            &mut audit.first_failure,
                            result,
                        );
                    }
                    reason
                }
                Reason::Unit => unreachable!("level-0 literal at conflict level {}", dl),
            };
            for l in reason_lits {
                if l != p {
                    self.mark(l, dl, &mut pending, &mut others, &mut involved);
                }
            }
        };

        for v in &involved {
            self.seen[v.index()] = false;
        }
        if let Some((i, _)) = others
            .iter()
            .enumerate()
            .max_by_key(|(_, l)| self.engine.level(l.var()))
        {
            others.swap(0, i);
        }
        let mut learned = Vec::with_capacity(others.len() + 1);
        learned.push(!uip);
        learned.extend(others);
        (uip, learned, involved)
    }

    fn mark(
        &mut self,
        lit: Lit,
        dl: u32,
        pending: &mut usize,
        others: &mut Vec<Lit>,
        involved: &mut Vec<Var>,
    ) {
        let v = lit.var();
        if self.seen[v.index()] {
            return;
        }
        self.seen[v.index()] = true;
        involved.push(v);
        let level = self.engine.level(v);
        if level == dl {
            *pending += 1;
        } else if level > 0 {
            others.push(lit);
        }
    }

    fn analyze_assignment<S: ModelSink + ?Sized>(&mut self, sink: &mut S) -> Result<Flow, SolveError> {
        let dl = self.engine.decision_level();
        let snapshot = self.audit.is_some().then(|| self.engine.watch_snapshot());
        let db_before = self.engine.num_clauses();

        let shrunk = implicant_shrinking(&mut self.engine, self.config.shrink);
        let b = shrunk.b;
        if let Some(audit) = &mut self.audit {
            let restored = if snapshot.as_ref() == Some(&self.engine.watch_snapshot()) {
                Ok(())
            } else {
                Err("watch lists changed by shrinking".to_string())
            };
            AuditReport::record(&mut audit.watch_restore, &mut audit.first_failure, restored);
            let sound = check_shrink(&self.engine, &self.formula, b);
            AuditReport::record(&mut audit.shrink, &mut audit.first_failure, sound);
        }
        if b < dl {
            self.engine.backtrack(b);
        }

        let model = PartialModel::new(self.engine.trail().to_vec());
        self.partial_models += 1;
        self.stats.model_literals += model.len() as u64;
        self.stats.shrink_dropped += shrunk.dropped as u64;
        self.coverage += model.weight(self.formula.num_vars());
        sink.on_model(&model).map_err(SolveError::Sink)?;
        if let Some(audit) = &mut self.audit {
            let result = if self.engine.num_clauses() == db_before {
                Ok(())
            } else {
                Err("clause added while storing a model".to_string())
            };
            AuditReport::record(&mut audit.no_blocking, &mut audit.first_failure, result);
        }

        if b == 0 {
            return Ok(Flow::Done);
        }
        let flip = !self.engine.decision(b).expect("decision at shrink level");
        self.engine.backtrack(b - 1);
        self.engine.assign(flip, b - 1, Reason::Backtrue { origin: b });
        Ok(Flow::Continue)
    }
}

/// Rebuilds the reason of a flipped decision: the flip itself and the
/// negation of every decision below its original level.
pub fn reconstruct_backtrue_reason(engine: &Engine, lit: Lit) -> Vec<Lit> {
    let Reason::Backtrue { origin } = engine.reason(lit.var()) else {
        panic!("{:?} was not flipped after a model", lit);
    };
    let mut reason = vec![lit];
    reason.extend((1..origin).map(|l| !engine.decision(l).expect("decision below flip")));
    reason
}

/// Runs the enumeration with a fresh solver.
pub fn enumerate<S: ModelSink + ?Sized>(
    formula: &CnfFormula,
    config: SolverConfig,
    sink: &mut S,
) -> Result<EnumerationSummary, SolveError> {
    Solver::new(formula, config).enumerate(sink)
}

fn check_learned(engine: &Engine, learned: &[Lit], dl: u32) -> Result<(), String> {
    if let Some(l) = learned.iter().find(|&&l| !engine.is_false(l)) {
        return Err(format!("learned clause literal {:?} is not false", l));
    }
    let at_dl = learned.iter().filter(|l| engine.level(l.var()) == dl).count();
    if at_dl != 1 {
        return Err(format!("learned clause has {} literals at level {}", at_dl, dl));
    }
    Ok(())
}

fn check_backtrue(engine: &Engine, lit: Lit, reason: &[Lit]) -> Result<(), String> {
    if !engine.is_true(lit) {
        return Err(format!("flipped literal {:?} is not true", lit));
    }
    let pos = engine.position(lit.var());
    for &l in reason.iter().filter(|&&l| l != lit) {
        if !engine.is_false(l) || engine.position(l.var()) > pos {
            return Err(format!("reason literal {:?} of {:?} is not false before it", l, lit));
        }
    }
    Ok(())
}

fn check_shrink(engine: &Engine, formula: &CnfFormula, b: u32) -> Result<(), String> {
    let kept = |l: &Lit| engine.is_true(*l) && engine.level(l.var()) <= b;
    if let Some(c) = formula.all_clauses().find(|c| !c.iter().any(kept)) {
        return Err(format!("clause {:?} unsatisfied after shrinking to {}", c, b));
    }
    if let Some(l) = engine
        .trail()
        .iter()
        .find(|l| engine.reason(l.var()) != Reason::Decision && engine.level(l.var()) > b)
    {
        return Err(format!("implied literal {:?} dropped by shrinking to {}", l, b));
    }
    Ok(())
}
