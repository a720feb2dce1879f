//! Chronological implicant shrinking.
//!
//! Given a total satisfying trail, find the lowest level `b` such that the
//! trail filtered to levels `≤ b` still satisfies every clause. The trail is
//! scanned from the newest literal backwards. `T′` is the part not yet
//! scanned, i.e. the positions before the cursor.

use crate::engine::{Engine, Reason};
use crate::formula::Lit;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ShrinkMode {
    /// Move watches to substitutes in `T′`.
    Dynamic,
    /// Only look at the other watched literal; no watch moves.
    #[default]
    Conservative,
    /// Never shrink: every emitted model is total.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShrinkResult {
    pub b: u32,
    /// Trail literals with a level above `b`.
    pub dropped: usize,
}

/// Computes the backtrack level for a total satisfying trail.
///
/// Watch moves made while checking are undone before returning.
pub fn implicant_shrinking(engine: &mut Engine, mode: ShrinkMode) -> ShrinkResult {
    let dl = engine.decision_level();
    let b = match mode {
        ShrinkMode::None => dl,
        ShrinkMode::Dynamic | ShrinkMode::Conservative => {
            let journal_start = engine.journal_len();
            debug_assert_eq!(journal_start, 0);
            let b = scan(engine, mode);
            engine.undo_watch_journal();
            b
        }
    };
    let dropped = engine
        .trail()
        .iter()
        .filter(|l| engine.level(l.var()) > b)
        .count();
    ShrinkResult { b, dropped }
}

fn scan(engine: &mut Engine, mode: ShrinkMode) -> u32 {
    let mut b = 0;
    let mut cursor = engine.trail().len();
    while cursor > 0 {
        cursor -= 1;
        let lit = engine.trail()[cursor];
        let level = engine.level(lit.var());
        if engine.reason(lit.var()) != Reason::Decision {
            // Implied literals keep their level: dropping them could merge
            // this model with one already emitted.
            b = b.max(level);
        } else if level > b {
            b = match mode {
                ShrinkMode::Dynamic => check_literal_dynamic(engine, lit, b, cursor),
                _ => check_literal_conservative(engine, lit, b, cursor),
            };
        } else {
            // A decision at level b: everything before it is at a lower level.
            break;
        }
    }
    b
}

/// Tries to hand every clause watched by `lit` to another literal of `T′`.
/// Returns `b` raised to `δ(lit)` if some clause has no substitute.
pub fn check_literal_dynamic(engine: &mut Engine, lit: Lit, mut b: u32, cursor: usize) -> u32 {
    let watched = engine.watches(lit).to_vec();
    for cref in watched {
        let substitute = engine
            .clause(cref)
            .lits()
            .iter()
            .copied()
            .filter(|&l| l != lit && engine.in_prefix(l, cursor))
            .min_by_key(|l| engine.level(l.var()));
        match substitute {
            Some(to) => engine.move_watch(cref, lit, to, true),
            None => b = b.max(engine.level(lit.var())),
        }
    }
    b
}

/// Reads each clause watched by `lit` as the binary clause of its two watches:
/// `lit` is droppable only if the other watch is in `T′`.
pub fn check_literal_conservative(engine: &Engine, lit: Lit, mut b: u32, cursor: usize) -> u32 {
    for &cref in engine.watches(lit) {
        let [w0, w1] = engine.clause(cref).watched();
        let other = if w0 == lit { w1 } else { w0 };
        if !engine.in_prefix(other, cursor) {
            b = b.max(engine.level(lit.var()));
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Origin;
    use proptest::prelude::*;

    fn lit(x: i32) -> Lit {
        Lit::from_dimacs(x)
    }

    fn engine_with(num_vars: usize, clauses: &[&[i32]]) -> Engine {
        let mut e = Engine::new(num_vars);
        for c in clauses {
            e.add_clause(c.iter().map(|&x| lit(x)).collect(), Origin::Input);
        }
        e
    }

    #[test]
    fn example_two_first_trail() {
        let mut e = engine_with(3, &[&[1, 2, 3]]);
        for x in [3, 2, 1] {
            e.decide(lit(x));
            assert_eq!(e.propagate(), None);
        }
        let before = e.watch_snapshot();
        let r = implicant_shrinking(&mut e, ShrinkMode::Dynamic);
        assert_eq!(r, ShrinkResult { b: 1, dropped: 2 });
        assert_eq!(e.watch_snapshot(), before);
    }

    #[test]
    fn example_two_first_move() {
        let mut e = engine_with(3, &[&[1, 2, 3]]);
        for x in [3, 2, 1] {
            e.decide(lit(x));
        }
        let c1 = e.watches(lit(1))[0];
        let b = check_literal_dynamic(&mut e, lit(1), 0, 2);
        assert_eq!(b, 0);
        assert!(e.watches(lit(1)).is_empty());
        assert_eq!(e.watches(lit(2)), &[c1]);
        assert_eq!(e.watches(lit(3)), &[c1]);
        e.undo_watch_journal();
    }

    #[test]
    fn example_two_second_trail_pins_x2() {
        let mut e = engine_with(3, &[&[1, 2, 3]]);
        e.assign(lit(-3), 0, Reason::Backtrue { origin: 1 });
        e.decide(lit(2));
        e.decide(lit(1));
        assert_eq!(e.propagate(), None);
        // x2 has no substitute once x1 is gone and x3 is false.
        assert_eq!(check_literal_dynamic(&mut e, lit(2), 0, 1), 1);
        e.undo_watch_journal();
        let r = implicant_shrinking(&mut e, ShrinkMode::Dynamic);
        assert_eq!(r.b, 1);
        assert_eq!(r.dropped, 1);
    }

    #[test]
    fn empty_watch_list_keeps_b() {
        let mut e = engine_with(3, &[&[1, 2]]);
        e.decide(lit(1));
        e.decide(lit(3));
        assert_eq!(check_literal_dynamic(&mut e, lit(3), 0, 1), 0);
        assert_eq!(check_literal_conservative(&e, lit(3), 0, 1), 0);
    }

    #[test]
    fn conservative_uses_other_watch() {
        let mut e = engine_with(3, &[&[1, 2, 3]]);
        e.decide(lit(2));
        e.decide(lit(1));
        assert_eq!(check_literal_conservative(&e, lit(1), 0, 1), 0);
    }

    #[test]
    fn conservative_ignores_unwatched_substitute() {
        let mut e = engine_with(3, &[&[1, 2, 3]]);
        e.decide(lit(3));
        e.decide(lit(-2));
        e.decide(lit(1));
        assert_eq!(check_literal_conservative(&e, lit(1), 0, 2), 3);
        assert_eq!(check_literal_dynamic(&mut e, lit(1), 0, 2), 0);
        e.undo_watch_journal();
    }

    #[test]
    fn mode_none_returns_dl() {
        let mut e = engine_with(3, &[&[1, 2, 3]]);
        for x in [3, 2, 1] {
            e.decide(lit(x));
        }
        let r = implicant_shrinking(&mut e, ShrinkMode::None);
        assert_eq!(r, ShrinkResult { b: 3, dropped: 0 });
    }

    #[test]
    fn implied_literal_pins_its_level() {
        // x2 is implied at level 1 and must be kept with its decision.
        let mut e = engine_with(3, &[&[-1, 2], &[2, 3]]);
        e.decide(lit(1));
        assert_eq!(e.propagate(), None);
        e.decide(lit(3));
        let r = implicant_shrinking(&mut e, ShrinkMode::Dynamic);
        assert_eq!(r.b, 1);
    }

    #[test]
    fn out_of_order_level_zero_does_not_stop_scan() {
        // ¬x4 lands at level 0 after x3^d; x3 still has to be checked.
        let mut e = engine_with(4, &[&[1, 2], &[2, 3, 4]]);
        e.decide(lit(-2));
        assert_eq!(e.propagate(), None);
        e.decide(lit(3));
        e.assign(lit(-4), 0, Reason::Unit);
        assert_eq!(e.propagate(), None);
        // Trail: ¬x2^d x1 x3^d ¬x4. x1 is implied at level 1.
        let r = implicant_shrinking(&mut e, ShrinkMode::Dynamic);
        assert_eq!(r.b, 2);
    }

    fn satisfied_after(e: &Engine, clauses: &[Vec<i32>], b: u32) -> bool {
        clauses.iter().all(|c| {
            c.iter()
                .any(|&x| e.is_true(lit(x)) && e.level(lit(x).var()) <= b)
        })
    }

    fn instance() -> impl Strategy<Value = (usize, Vec<Vec<i32>>, Vec<bool>)> {
        (3usize..9).prop_flat_map(|n| {
            let clause = prop::sample::subsequence((1..=n as i32).collect::<Vec<_>>(), 1..=n.min(4))
                .prop_flat_map(|vars| {
                    let len = vars.len();
                    (Just(vars), prop::collection::vec(any::<bool>(), len))
                })
                .prop_map(|(vars, signs)| {
                    vars.into_iter()
                        .zip(signs)
                        .map(|(v, s)| if s { v } else { -v })
                        .collect::<Vec<i32>>()
                });
            (
                Just(n),
                prop::collection::vec(clause, 1..10),
                prop::collection::vec(any::<bool>(), n),
            )
        })
    }

    /// Builds a total trail by deciding variables in index order with the
    /// given phases and propagating. `None` on conflict.
    fn total_trail(n: usize, clauses: &[Vec<i32>], phases: &[bool]) -> Option<Engine> {
        let mut e = Engine::new(n);
        for c in clauses {
            if c.len() >= 2 {
                e.add_clause(c.iter().map(|&x| lit(x)).collect(), Origin::Input);
            }
        }
        for c in clauses.iter().filter(|c| c.len() == 1) {
            let l = lit(c[0]);
            if e.is_false(l) {
                return None;
            }
            if !e.is_assigned(l.var()) {
                e.assign(l, 0, Reason::Unit);
            }
        }
        if e.propagate().is_some() {
            return None;
        }
        for (i, &phase) in phases.iter().enumerate() {
            let v = crate::formula::Var::from_index(i);
            if e.is_assigned(v) {
                continue;
            }
            e.decide(v.lit(phase));
            if e.propagate().is_some() {
                return None;
            }
        }
        Some(e)
    }

    proptest! {
        #[test]
        fn shrunk_prefix_still_satisfies((n, clauses, phases) in instance()) {
            for mode in [ShrinkMode::Dynamic, ShrinkMode::Conservative, ShrinkMode::None] {
                let Some(mut e) = total_trail(n, &clauses, &phases) else { return Ok(()) };
                let before = e.watch_snapshot();
                let r = implicant_shrinking(&mut e, mode);
                prop_assert_eq!(e.watch_snapshot(), before);
                prop_assert!(r.b <= e.decision_level());
                prop_assert!(satisfied_after(&e, &clauses, r.b));
                for &l in e.trail() {
                    if e.reason(l.var()) != Reason::Decision {
                        prop_assert!(e.level(l.var()) <= r.b);
                    }
                }
            }
        }
    }
}
