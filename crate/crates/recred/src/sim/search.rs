//! Exhaustive breadth-first search over whole game states, with canonical
//! dedup and optional parallel frontier expansion. Results are independent
//! of thread scheduling.

use std::collections::HashSet;
use std::sync::Arc;

use super::{Action, GameState};
use crate::pcp::Parallelism;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    /// Maximum primitive actions in a trace (BFS depth).
    pub max_steps: usize,
    /// Maximum chest/jar stack depth (states deeper are pruned).
    pub max_depth: usize,
    /// Maximum distinct canonical states to explore.
    pub max_states: usize,
}

impl SearchLimits {
    pub fn new(max_steps: usize, max_depth: usize, max_states: usize) -> SearchLimits {
        SearchLimits {
            max_steps,
            max_depth,
            max_states,
        }
    }
}

#[derive(Debug, Clone)]
pub enum SearchOutcome {
    /// A winning primitive trace, replayable from the initial state.
    Solvable(Vec<Action>),
    /// The reachable state space within the limits holds no win.
    NotSolvableWithin,
    /// The state budget was exhausted with frontier states remaining.
    Unknown { explored: usize, frontier: usize },
}

struct Node {
    state: GameState,
    parent: Option<(Arc<Node>, Action)>,
}

fn trace_of(node: &Arc<Node>, last: Action) -> Vec<Action> {
    let mut actions = vec![last];
    let mut cur = node.clone();
    while let Some((parent, act)) = cur.parent.clone() {
        actions.push(act);
        cur = parent;
    }
    actions.reverse();
    actions
}

/// Layer-synchronous BFS from `start`. Deterministic: within each layer,
/// children are considered in (parent order, action order), and the first
/// occurrence of a canonical state wins.
pub fn bounded_search(start: &GameState, limits: SearchLimits) -> SearchOutcome {
    bounded_search_with(start, limits, Parallelism::default())
}

pub fn bounded_search_with(
    start: &GameState,
    limits: SearchLimits,
    par: Parallelism,
) -> SearchOutcome {
    if start.won {
        return SearchOutcome::Solvable(vec![]);
    }
    let mut seen: HashSet<u64> = HashSet::new();
    seen.insert(start.canonical_hash());
    let root = Arc::new(Node {
        state: start.clone(),
        parent: None,
    });
    let mut frontier: Vec<Arc<Node>> = vec![root];
    let mut explored = 1usize;

    for _step in 0..limits.max_steps {
        if frontier.is_empty() {
            return SearchOutcome::NotSolvableWithin;
        }
        let expand = |node: &Arc<Node>| -> Vec<(u64, Action, Arc<Node>, GameState)> {
            let mut out = Vec::new();
            for &action in Action::enumerate_all() {
                if let Ok(next) = node.state.apply(action) {
                    if next.depth() > limits.max_depth {
                        continue;
                    }
                    out.push((next.canonical_hash(), action, node.clone(), next));
                }
            }
            out
        };
        let candidates: Vec<(u64, Action, Arc<Node>, GameState)> = match par {
            Parallelism::Sequential => frontier.iter().flat_map(expand).collect(),
            #[cfg(feature = "parallel")]
            Parallelism::Parallel => {
                use rayon::prelude::*;
                frontier.par_iter().flat_map_iter(expand).collect()
            }
        };
        let mut next_frontier = Vec::new();
        for (hash, action, parent, state) in candidates {
            if !seen.insert(hash) {
                continue;
            }
            explored += 1;
            if state.won {
                return SearchOutcome::Solvable(trace_of(&parent, action));
            }
            if explored >= limits.max_states {
                return SearchOutcome::Unknown {
                    explored,
                    frontier: next_frontier.len() + 1,
                };
            }
            next_frontier.push(Arc::new(Node {
                state,
                parent: Some((parent, action)),
            }));
        }
        frontier = next_frontier;
    }
    if frontier.is_empty() {
        SearchOutcome::NotSolvableWithin
    } else {
        // Depth limit hit with states left: unexplored territory remains.
        SearchOutcome::Unknown {
            explored,
            frontier: frontier.len(),
        }
    }
}
