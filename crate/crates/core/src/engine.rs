//! Assignment trail, clause database and two-watched-literal propagation.
//!
//! Decision levels may appear out of order on the trail: a propagated literal
//! takes the highest level among the other literals of its reason, which can
//! be below the current decision level. Backtracking therefore filters the
//! trail by level instead of truncating it, and restarts propagation at the
//! first position where a literal was removed so that kept literals placed
//! after it are visited again.
//!
//! `ω(ℓ)` here is the list of clauses watched *by* `ℓ`; it is scanned when
//! `ℓ` becomes false.

use crate::formula::{Lit, Var};

/// Level of an unassigned variable.
pub const UNASSIGNED_LEVEL: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClauseRef(u32);

impl ClauseRef {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Input,
    Learned,
}

/// Why a literal is on the trail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reason {
    Decision,
    /// Initial literal, or implied at level 0.
    Unit,
    Propagated(ClauseRef),
    /// Flipped decision after a model was stored. `origin` is the level the
    /// decision had before the flip; its reason clause is never stored.
    Backtrue { origin: u32 },
}

#[derive(Clone, Debug)]
pub struct StoredClause {
    lits: Vec<Lit>,
    watch: [usize; 2],
    origin: Origin,
}

impl StoredClause {
    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    /// Positions of the two watched literals.
    pub fn watch_positions(&self) -> [usize; 2] {
        self.watch
    }

    pub fn watched(&self) -> [Lit; 2] {
        [self.lits[self.watch[0]], self.lits[self.watch[1]]]
    }

    fn slot_of(&self, lit: Lit) -> Option<usize> {
        (0..2).find(|&s| self.lits[self.watch[s]] == lit)
    }
}

#[derive(Clone, Copy, Debug)]
struct WatchMove {
    cref: ClauseRef,
    slot: u8,
    from_pos: u32,
    list_index: u32,
}

/// A copy of every watch list and watch position, for equality checks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WatchSnapshot {
    lists: Vec<Vec<ClauseRef>>,
    positions: Vec<[usize; 2]>,
}

#[derive(Clone, Debug)]
pub struct Engine {
    clauses: Vec<StoredClause>,
    watches: Vec<Vec<ClauseRef>>,
    journal: Vec<WatchMove>,
    values: Vec<Option<bool>>,
    levels: Vec<u32>,
    reasons: Vec<Reason>,
    positions: Vec<u32>,
    phases: Vec<bool>,
    trail: Vec<Lit>,
    decisions: Vec<Lit>,
    qhead: usize,
    propagations: u64,
}

impl Engine {
    pub fn new(num_vars: usize) -> Engine {
        Engine {
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * num_vars],
            journal: Vec::new(),
            values: vec![None; num_vars],
            levels: vec![UNASSIGNED_LEVEL; num_vars],
            reasons: vec![Reason::Decision; num_vars],
            positions: vec![u32::MAX; num_vars],
            phases: vec![false; num_vars],
            trail: Vec::new(),
            decisions: Vec::new(),
            qhead: 0,
            propagations: 0,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.values.len()
    }

    /// Adds a clause. Clauses of length two or more are watched at positions
    /// 0 and 1; callers adding clauses under a non-empty trail must order the
    /// literals so that this is a valid watch pair.
    pub fn add_clause(&mut self, lits: Vec<Lit>, origin: Origin) -> ClauseRef {
        assert!(!lits.is_empty(), "empty clause in clause database");
        let cref = ClauseRef(self.clauses.len() as u32);
        if lits.len() >= 2 {
            self.watches[lits[0].code()].push(cref);
            self.watches[lits[1].code()].push(cref);
        }
        self.clauses.push(StoredClause {
            lits,
            watch: [0, 1],
            origin,
        });
        cref
    }

    pub fn clause(&self, cref: ClauseRef) -> &StoredClause {
        &self.clauses[cref.index()]
    }

    pub fn clauses(&self) -> impl Iterator<Item = (ClauseRef, &StoredClause)> {
        self.clauses
            .iter()
            .enumerate()
            .map(|(i, c)| (ClauseRef(i as u32), c))
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    #[inline]
    pub fn value(&self, lit: Lit) -> Option<bool> {
        self.values[lit.var().index()].map(|v| v == lit.is_positive())
    }

    #[inline]
    pub fn is_true(&self, lit: Lit) -> bool {
        self.value(lit) == Some(true)
    }

    #[inline]
    pub fn is_false(&self, lit: Lit) -> bool {
        self.value(lit) == Some(false)
    }

    #[inline]
    pub fn is_assigned(&self, var: Var) -> bool {
        self.values[var.index()].is_some()
    }

    /// δ(v); [`UNASSIGNED_LEVEL`] when unassigned.
    #[inline]
    pub fn level(&self, var: Var) -> u32 {
        self.levels[var.index()]
    }

    #[inline]
    pub fn reason(&self, var: Var) -> Reason {
        self.reasons[var.index()]
    }

    /// Trail position of an assigned variable.
    #[inline]
    pub fn position(&self, var: Var) -> usize {
        self.positions[var.index()] as usize
    }

    /// True if `lit` is true and sits on the trail before `cursor`.
    #[inline]
    pub fn in_prefix(&self, lit: Lit, cursor: usize) -> bool {
        self.is_true(lit) && self.position(lit.var()) < cursor
    }

    pub fn trail(&self) -> &[Lit] {
        &self.trail
    }

    pub fn decision_level(&self) -> u32 {
        self.decisions.len() as u32
    }

    /// σ(level); `None` for level 0 or levels above the current one.
    pub fn decision(&self, level: u32) -> Option<Lit> {
        if level == 0 {
            return None;
        }
        self.decisions.get(level as usize - 1).copied()
    }

    pub fn saved_phase(&self, var: Var) -> bool {
        self.phases[var.index()]
    }

    pub fn propagations(&self) -> u64 {
        self.propagations
    }

    /// δ(c): the highest level among the clause's literals.
    pub fn clause_level(&self, cref: ClauseRef) -> u32 {
        self.clause(cref)
            .lits
            .iter()
            .map(|l| self.level(l.var()))
            .max()
            .unwrap_or(0)
    }

    /// Pushes `lit` on the trail. A decision must open the next level.
    pub fn assign(&mut self, lit: Lit, level: u32, reason: Reason) {
        let var = lit.var();
        assert!(
            !self.is_assigned(var),
            "variable {:?} assigned twice",
            var
        );
        match reason {
            Reason::Decision => {
                assert_eq!(level, self.decision_level() + 1, "decision must open a new level");
                self.decisions.push(lit);
            }
            Reason::Unit => assert_eq!(level, 0, "UNIT reason above level 0"),
            _ => assert!(level <= self.decision_level(), "level above current level"),
        }
        let v = var.index();
        self.values[v] = Some(lit.is_positive());
        self.levels[v] = level;
        self.reasons[v] = reason;
        self.positions[v] = self.trail.len() as u32;
        self.trail.push(lit);
    }

    /// Opens a new decision level with `lit`.
    pub fn decide(&mut self, lit: Lit) {
        self.assign(lit, self.decision_level() + 1, Reason::Decision);
    }

    /// Assigns `lit` as implied by `cref`; level 0 implications are tagged UNIT.
    pub fn imply(&mut self, lit: Lit, level: u32, cref: ClauseRef) {
        let reason = if level == 0 {
            Reason::Unit
        } else {
            Reason::Propagated(cref)
        };
        self.assign(lit, level, reason);
    }

    /// Unit propagation to fixpoint. Returns a falsified clause on conflict.
    pub fn propagate(&mut self) -> Option<ClauseRef> {
        while self.qhead < self.trail.len() {
            let false_lit = !self.trail[self.qhead];
            self.qhead += 1;

            let mut list = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut kept = 0;
            let mut i = 0;
            let mut conflict = None;
            while i < list.len() {
                let cref = list[i];
                i += 1;
                let clause = &self.clauses[cref.index()];
                let slot = match clause.slot_of(false_lit) {
                    Some(s) => s,
                    None => unreachable!("clause {:?} in ω({:?}) without watching it", cref, false_lit),
                };
                let other = clause.lits[clause.watch[1 - slot]];
                if self.is_true(other) {
                    list[kept] = cref;
                    kept += 1;
                    continue;
                }
                let replacement = (0..clause.lits.len()).find(|&k| {
                    k != clause.watch[0] && k != clause.watch[1] && !self.is_false(clause.lits[k])
                });
                if let Some(k) = replacement {
                    let new_lit = clause.lits[k];
                    self.clauses[cref.index()].watch[slot] = k;
                    self.watches[new_lit.code()].push(cref);
                    continue;
                }
                list[kept] = cref;
                kept += 1;
                if self.is_false(other) {
                    conflict = Some(cref);
                    break;
                }
                let level = clause
                    .lits
                    .iter()
                    .filter(|&&l| l != other)
                    .map(|l| self.level(l.var()))
                    .max()
                    .unwrap_or(0);
                self.imply(other, level, cref);
                self.propagations += 1;
            }
            while i < list.len() {
                list[kept] = list[i];
                kept += 1;
                i += 1;
            }
            list.truncate(kept);
            self.watches[false_lit.code()] = list;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    /// Removes every trail entry above `target`, keeping survivors in order.
    pub fn backtrack(&mut self, target: u32) {
        if target >= self.decision_level() {
            return;
        }
        // Everything before σ(target + 1) has a level of at most `target`.
        let start = self.position(self.decisions[target as usize].var());
        let mut kept = start;
        for i in start..self.trail.len() {
            let lit = self.trail[i];
            let v = lit.var().index();
            if self.levels[v] > target {
                self.phases[v] = lit.is_positive();
                self.values[v] = None;
                self.levels[v] = UNASSIGNED_LEVEL;
                self.positions[v] = u32::MAX;
            } else {
                self.trail[kept] = lit;
                self.positions[v] = kept as u32;
                kept += 1;
            }
        }
        self.trail.truncate(kept);
        self.decisions.truncate(target as usize);
        self.qhead = self.qhead.min(start);
    }

    pub fn watches(&self, lit: Lit) -> &[ClauseRef] {
        &self.watches[lit.code()]
    }

    /// Makes `to` watch `cref` in place of `from`. Journaled moves are undone
    /// by [`Engine::undo_watch_journal`], restoring list order exactly.
    pub fn move_watch(&mut self, cref: ClauseRef, from: Lit, to: Lit, journaled: bool) {
        let clause = &self.clauses[cref.index()];
        let slot = clause
            .slot_of(from)
            .unwrap_or_else(|| panic!("{:?} does not watch clause {:?}", from, cref));
        let to_pos = clause
            .lits
            .iter()
            .position(|&l| l == to)
            .unwrap_or_else(|| panic!("{:?} is not in clause {:?}", to, cref));
        let from_pos = clause.watch[slot];
        let list = &mut self.watches[from.code()];
        let list_index = list
            .iter()
            .position(|&c| c == cref)
            .expect("watch list out of sync");
        list.remove(list_index);
        self.watches[to.code()].push(cref);
        self.clauses[cref.index()].watch[slot] = to_pos;
        if journaled {
            self.journal.push(WatchMove {
                cref,
                slot: slot as u8,
                from_pos: from_pos as u32,
                list_index: list_index as u32,
            });
        }
    }

    pub fn journal_len(&self) -> usize {
        self.journal.len()
    }

    /// Reverts all journaled watch moves, newest first.
    pub fn undo_watch_journal(&mut self) {
        while let Some(mv) = self.journal.pop() {
            let clause = &mut self.clauses[mv.cref.index()];
            let slot = mv.slot as usize;
            let to = clause.lits[clause.watch[slot]];
            let from = clause.lits[mv.from_pos as usize];
            clause.watch[slot] = mv.from_pos as usize;
            let popped = self.watches[to.code()].pop();
            debug_assert_eq!(popped, Some(mv.cref));
            self.watches[from.code()].insert(mv.list_index as usize, mv.cref);
        }
    }

    pub fn watch_snapshot(&self) -> WatchSnapshot {
        WatchSnapshot {
            lists: self.watches.clone(),
            positions: self.clauses.iter().map(|c| c.watch).collect(),
        }
    }

    /// Full scan: every clause of length ≥ 2 is watched at two distinct
    /// positions and appears in exactly those two watch lists.
    pub fn check_watch_integrity(&self) -> Result<(), String> {
        let mut counts = vec![0usize; self.clauses.len()];
        for (code, list) in self.watches.iter().enumerate() {
            for &cref in list {
                let clause = self.clause(cref);
                if !clause.watched().iter().any(|l| l.code() == code) {
                    return Err(format!("clause {:?} listed under a literal it does not watch", cref));
                }
                counts[cref.index()] += 1;
            }
        }
        for (cref, clause) in self.clauses() {
            if clause.lits.len() < 2 {
                if counts[cref.index()] != 0 {
                    return Err(format!("unit clause {:?} is watched", cref));
                }
                continue;
            }
            if clause.watch[0] == clause.watch[1] {
                return Err(format!("clause {:?} watched twice at one position", cref));
            }
            if counts[cref.index()] != 2 {
                return Err(format!(
                    "clause {:?} appears {} times in watch lists",
                    cref,
                    counts[cref.index()]
                ));
            }
        }
        Ok(())
    }

    /// Naive scan for a clause that is falsified or unit but not propagated.
    pub fn find_unpropagated(&self) -> Option<ClauseRef> {
        self.clauses().find_map(|(cref, clause)| {
            if clause.lits.iter().any(|&l| self.is_true(l)) {
                return None;
            }
            let open = clause.lits.iter().filter(|&&l| !self.is_false(l)).count();
            (open <= 1).then_some(cref)
        })
    }

    /// Trail/assignment coherence check.
    pub fn check_trail(&self) -> Result<(), String> {
        let mut on_trail = vec![false; self.num_vars()];
        for (pos, &lit) in self.trail.iter().enumerate() {
            let v = lit.var();
            if on_trail[v.index()] {
                return Err(format!("{:?} twice on trail", v));
            }
            on_trail[v.index()] = true;
            if !self.is_true(lit) || self.position(v) != pos {
                return Err(format!("{:?} out of sync with assignment", lit));
            }
            if self.level(v) > self.decision_level() {
                return Err(format!("{:?} above current level", lit));
            }
        }
        for (i, &assigned) in on_trail.iter().enumerate() {
            let v = Var::from_index(i);
            if assigned != self.is_assigned(v) || assigned != (self.level(v) != UNASSIGNED_LEVEL) {
                return Err(format!("{:?} assigned but not on trail", v));
            }
        }
        for (i, &d) in self.decisions.iter().enumerate() {
            if self.reason(d.var()) != Reason::Decision || self.level(d.var()) != i as u32 + 1 {
                return Err(format!("σ({}) = {:?} is not a decision at that level", i + 1, d));
            }
        }
        Ok(())
    }
}
