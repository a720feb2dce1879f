//! Decision ordering: VSADS scores with deterministic tie-breaking.
//!
//! The score of a variable is `w_occ * occurrences + w_act * activity`, where
//! occurrences are counted once over the input formula and the activity is a
//! VSIDS-style decaying sum bumped on conflicts. Ties prefer variables that
//! currently watch a clause with either literal, then the smallest index.
//!
//! Decay is implemented by growing the bump increment. Scores read the raw
//! activity divided by the increment, which is the decayed sum itself, so
//! rescaling raw values and increment together changes no score.

use crate::engine::Engine;
use crate::formula::{Lit, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Polarity {
    #[default]
    False,
    True,
    /// Last value the variable had before being unassigned (false initially).
    Saved,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeuristicConfig {
    pub polarity: Polarity,
    pub w_occ: f64,
    pub w_act: f64,
    pub decay: f64,
    /// Explicit decision order. Overrides scoring while it has unassigned
    /// variables; used to pin worked examples, not for performance.
    pub pinned_order: Option<Vec<Var>>,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            polarity: Polarity::False,
            w_occ: 1.0,
            w_act: 100.0,
            decay: 0.95,
            pinned_order: None,
        }
    }
}

const DEFAULT_RESCALE_LIMIT: f64 = 1e100;

#[derive(Clone, Debug)]
pub struct Heuristic {
    occurrences: Vec<u32>,
    activity: Vec<f64>,
    increment: f64,
    rescale_limit: f64,
    config: HeuristicConfig,
}

impl Heuristic {
    pub fn new(occurrences: Vec<u32>, config: HeuristicConfig) -> Heuristic {
        assert!(
            config.decay > 0.0 && config.decay < 1.0,
            "decay must lie in (0, 1)"
        );
        let n = occurrences.len();
        Heuristic {
            occurrences,
            activity: vec![0.0; n],
            increment: 1.0,
            rescale_limit: DEFAULT_RESCALE_LIMIT,
            config,
        }
    }

    /// Overrides the activity value that triggers rescaling.
    pub fn with_rescale_limit(mut self, limit: f64) -> Heuristic {
        assert!(limit > 1.0);
        self.rescale_limit = limit;
        self
    }

    /// Decayed activity: each past bump weighs `decay^k`, `k` counting the
    /// conflicts since (starting at 1).
    pub fn activity(&self, var: Var) -> f64 {
        self.activity[var.index()] / self.increment
    }

    pub fn score(&self, var: Var) -> f64 {
        self.config.w_occ * self.occurrences[var.index()] as f64 + self.config.w_act * self.activity(var)
    }

    pub fn bump(&mut self, var: Var) {
        let a = &mut self.activity[var.index()];
        *a += self.increment;
        if *a > self.rescale_limit {
            self.rescale();
        }
    }

    pub fn decay(&mut self) {
        self.increment /= self.config.decay;
        if self.increment > self.rescale_limit {
            self.rescale();
        }
    }

    fn rescale(&mut self) {
        let factor = 1.0 / self.rescale_limit;
        for a in &mut self.activity {
            *a *= factor;
        }
        self.increment *= factor;
    }

    /// Bumps every variable involved in a conflict, then decays once.
    pub fn on_conflict(&mut self, vars: impl IntoIterator<Item = Var>) {
        for var in vars {
            self.bump(var);
        }
        self.decay();
    }

    /// Next decision literal, or `None` when every relevant variable is assigned.
    /// Variables that occur in no clause are never decided.
    pub fn pick_branch_literal(&self, engine: &Engine) -> Option<Lit> {
        let var = self.pick_pinned(engine).or_else(|| self.pick_scored(engine))?;
        let positive = match self.config.polarity {
            Polarity::False => false,
            Polarity::True => true,
            Polarity::Saved => engine.saved_phase(var),
        };
        Some(var.lit(positive))
    }

    fn relevant(&self, var: Var) -> bool {
        self.occurrences.get(var.index()).is_some_and(|&n| n > 0)
    }

    fn pick_pinned(&self, engine: &Engine) -> Option<Var> {
        self.config
            .pinned_order
            .as_ref()?
            .iter()
            .copied()
            .find(|&v| self.relevant(v) && !engine.is_assigned(v))
    }

    fn pick_scored(&self, engine: &Engine) -> Option<Var> {
        let mut best: Option<(Var, f64, bool)> = None;
        for i in 0..self.occurrences.len() {
            let var = Var::from_index(i);
            if !self.relevant(var) || engine.is_assigned(var) {
                continue;
            }
            let score = self.score(var);
            let watched =
                !engine.watches(var.positive()).is_empty() || !engine.watches(var.negative()).is_empty();
            let better = match best {
                None => true,
                // Ascending scan: equal score and watch status keeps the lower index.
                Some((_, s, w)) => score > s || (score == s && watched && !w),
            };
            if better {
                best = Some((var, score, watched));
            }
        }
        best.map(|(v, _, _)| v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Origin;
    use num_rational::BigRational;
    use num_traits::{One, Zero};
    use proptest::prelude::*;

    fn lit(x: i32) -> Lit {
        Lit::from_dimacs(x)
    }

    fn pinned(order: &[u32], polarity: Polarity) -> HeuristicConfig {
        HeuristicConfig {
            polarity,
            pinned_order: Some(order.iter().map(|&v| Var::from_dimacs(v)).collect()),
            ..HeuristicConfig::default()
        }
    }

    #[test]
    fn pinned_order_true_polarity() {
        let engine = Engine::new(3);
        let h = Heuristic::new(vec![1, 1, 1], pinned(&[3, 2, 1], Polarity::True));
        assert_eq!(h.pick_branch_literal(&engine), Some(lit(3)));
    }

    #[test]
    fn pinned_order_false_polarity() {
        let mut engine = Engine::new(3);
        let h = Heuristic::new(vec![2, 2, 1], pinned(&[3, 2, 1], Polarity::False));
        assert_eq!(h.pick_branch_literal(&engine), Some(lit(-3)));
        engine.decide(lit(-3));
        assert_eq!(h.pick_branch_literal(&engine), Some(lit(-2)));
    }

    #[test]
    fn nothing_left_to_decide() {
        let mut engine = Engine::new(2);
        engine.decide(lit(1));
        engine.decide(lit(2));
        let h = Heuristic::new(vec![1, 1], HeuristicConfig::default());
        assert_eq!(h.pick_branch_literal(&engine), None);
    }

    #[test]
    fn irrelevant_variables_are_never_decided() {
        let engine = Engine::new(3);
        let h = Heuristic::new(vec![0, 1, 0], pinned(&[1, 3], Polarity::True));
        assert_eq!(h.pick_branch_literal(&engine), Some(lit(2)));
    }

    #[test]
    fn ties_prefer_watched_then_lowest_index() {
        let mut engine = Engine::new(4);
        engine.add_clause(vec![lit(3), lit(4), lit(1)], Origin::Input);
        // All have one occurrence except x2, which has one too but no watch.
        let h = Heuristic::new(vec![1, 1, 1, 1], HeuristicConfig::default());
        // x1 occurs in the clause but is not watched; x3 is the first watched.
        assert_eq!(h.pick_branch_literal(&engine), Some(lit(-3)));
        let h = Heuristic::new(vec![1, 2, 1, 1], HeuristicConfig::default());
        assert_eq!(h.pick_branch_literal(&engine), Some(lit(-2)));
    }

    #[test]
    fn saved_polarity() {
        let mut engine = Engine::new(1);
        let config = HeuristicConfig {
            polarity: Polarity::Saved,
            ..HeuristicConfig::default()
        };
        let h = Heuristic::new(vec![1], config);
        assert_eq!(h.pick_branch_literal(&engine), Some(lit(-1)));
        engine.decide(lit(1));
        engine.backtrack(0);
        assert_eq!(h.pick_branch_literal(&engine), Some(lit(1)));
    }

    #[test]
    fn conflict_bump_breaks_tie() {
        let engine = Engine::new(2);
        let mut h = Heuristic::new(vec![1, 1], HeuristicConfig::default());
        assert_eq!(h.pick_branch_literal(&engine), Some(lit(-1)));
        h.on_conflict([Var::from_dimacs(2)]);
        assert_eq!(h.pick_branch_literal(&engine), Some(lit(-2)));
    }

    #[test]
    fn unbumped_variable_only_decays() {
        let mut h = Heuristic::new(vec![1, 1], HeuristicConfig::default());
        h.on_conflict([Var::from_dimacs(1)]);
        let mut previous = h.activity(Var::from_dimacs(1));
        for _ in 0..50 {
            h.on_conflict([Var::from_dimacs(2)]);
            let now = h.activity(Var::from_dimacs(1));
            assert!(now < previous);
            previous = now;
        }
    }

    #[test]
    fn scaling_activities_keeps_argmax() {
        let mut engine = Engine::new(3);
        engine.add_clause(vec![lit(1), lit(2), lit(3)], Origin::Input);
        let mut h = Heuristic::new(vec![1, 1, 1], HeuristicConfig::default());
        h.on_conflict([Var::from_dimacs(3), Var::from_dimacs(2)]);
        h.on_conflict([Var::from_dimacs(3)]);
        let before = h.pick_branch_literal(&engine);
        h.rescale();
        assert_eq!(h.pick_branch_literal(&engine), before);
    }

    /// Exact decayed activity: each bump at conflict t contributes decay^(T - t).
    fn reference(n: usize, conflicts: &[Vec<usize>], decay: BigRational) -> Vec<BigRational> {
        let mut act = vec![BigRational::zero(); n];
        for bumped in conflicts {
            for a in act.iter_mut() {
                *a = &*a * &decay;
            }
            for &v in bumped {
                act[v] += BigRational::one();
            }
        }
        act
    }

    proptest! {
        #[test]
        fn rescaling_preserves_activity_order(
            conflicts in prop::collection::vec(prop::collection::vec(0usize..6, 1..4), 100),
        ) {
            let mut h = Heuristic::new(vec![1; 6], HeuristicConfig::default()).with_rescale_limit(1e3);
            for bumped in &conflicts {
                // The heuristic's activities are the reference's times decay.
                h.on_conflict(bumped.iter().map(|&v| Var::from_index(v)));
            }
            let decay = BigRational::new(95.into(), 100.into());
            let exact = reference(6, &conflicts, decay);
            for a in 0..6 {
                for b in 0..6 {
                    let (fa, fb) = (h.activity(Var::from_index(a)), h.activity(Var::from_index(b)));
                    prop_assert!(fa >= 0.0);
                    if exact[a] == exact[b] {
                        continue;
                    }
                    let (hi, lo) = if exact[a] > exact[b] { (&exact[a], &exact[b]) } else { (&exact[b], &exact[a]) };
                    let gap = (hi - lo) / hi;
                    if gap > BigRational::new(1.into(), 1_000_000_000.into()) {
                        prop_assert_eq!(exact[a] > exact[b], fa > fb);
                    }
                }
            }
        }
    }
}
