use std::time::Duration;

use crate::heuristic::HeuristicConfig;
use crate::shrink::ShrinkMode;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolverConfig {
    pub shrink: ShrinkMode,
    pub heuristic: HeuristicConfig,
    /// Maximum number of search-loop iterations.
    pub step_budget: Option<u64>,
    /// Wall-clock limit, checked every 1024 iterations.
    pub time_budget: Option<Duration>,
    /// Run the invariant checks of [`crate::search::AuditReport`]. Slow.
    pub audit: bool,
}
