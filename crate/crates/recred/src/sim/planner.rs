//! Per-room planner: shortest primitive action sequence achieving a goal
//! without leaving the current room.

use std::collections::{HashMap, VecDeque};

use super::{Action, GameState, RtKind};
use crate::grid::Cell;

/// Default cap on explored states per plan. Overridable through
/// `RECRED_BUDGET`.
pub const DEFAULT_PLAN_BUDGET: usize = 200_000;

/// Goals expressible over the in-room state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GoalKind {
    /// Player foot at the cell; carried object unchanged from plan start
    /// (same identity, or empty both before and after).
    AtCellSameCarry(Cell),
    /// Player foot at the cell, carrying nothing.
    AtCellEmpty(Cell),
    /// Carrying the object with this id.
    Carrying(String),
    /// Object with the id rests at the cell and is not carried.
    ObjectAt(String, Cell),
    /// Any cell where a door with this id no longer blocks (door gone).
    DoorOpen(String),
    /// The game is won.
    Won,
}

impl GoalKind {
    fn satisfied(&self, state: &GameState, start_carry: &Option<String>) -> bool {
        match self {
            GoalKind::AtCellSameCarry(cell) => {
                state.player.foot == *cell
                    && state.player.carrying.as_ref().map(|o| o.id.clone()) == *start_carry
            }
            GoalKind::AtCellEmpty(cell) => {
                state.player.foot == *cell && state.player.carrying.is_none()
            }
            GoalKind::Carrying(id) => {
                state.player.carrying.as_ref().map(|o| o.id.as_str()) == Some(id.as_str())
            }
            GoalKind::ObjectAt(id, cell) => state
                .current
                .objects
                .iter()
                .any(|o| o.id == *id && o.pos == *cell),
            GoalKind::DoorOpen(id) => !state.current.objects.iter().any(|o| o.id == *id),
            GoalKind::Won => state.won,
        }
    }
}

/// Result of a plan request.
#[derive(Debug, Clone)]
pub enum PlanOutcome {
    Found(Vec<Action>),
    /// No in-room action sequence reaches the goal (state space exhausted).
    Unreachable,
    /// The state budget ran out before the search finished.
    BudgetExceeded { explored: usize },
}

impl PlanOutcome {
    pub fn into_actions(self) -> Option<Vec<Action>> {
        match self {
            PlanOutcome::Found(a) => Some(a),
            _ => None,
        }
    }
}

/// Breadth-first search over in-room states: shortest action sequence
/// achieving `goal`, never entering chests/jars or exiting the room.
pub fn room_reach(state: &GameState, goal: &GoalKind, budget: usize) -> PlanOutcome {
    let start_carry = state.player.carrying.as_ref().map(|o| o.id.clone());
    if goal.satisfied(state, &start_carry) {
        return PlanOutcome::Found(vec![]);
    }
    let mut seen: HashMap<u64, ()> = HashMap::new();
    seen.insert(state.canonical_hash(), ());
    // Parent-indexed action log keeps clones cheap.
    let mut nodes: Vec<(GameState, usize, Action)> = Vec::new();
    let mut queue: VecDeque<i64> = VecDeque::new();
    queue.push_back(-1);
    let mut explored = 0usize;
    while let Some(idx) = queue.pop_front() {
        let cur = if idx < 0 {
            state
        } else {
            &nodes[idx as usize].0
        };
        let cur = cur.clone();
        for &action in Action::enumerate_in_room() {
            let Ok(next) = cur.apply(action) else {
                continue;
            };
            let h = next.canonical_hash();
            if seen.contains_key(&h) {
                continue;
            }
            seen.insert(h, ());
            explored += 1;
            if explored > budget {
                return PlanOutcome::BudgetExceeded { explored };
            }
            let done = goal.satisfied(&next, &start_carry);
            nodes.push((next, idx.max(-1) as usize, action));
            let new_idx = nodes.len() - 1;
            // Fix parent for children of the root.
            if idx >= 0 {
                nodes[new_idx].1 = idx as usize;
            } else {
                nodes[new_idx].1 = usize::MAX;
            }
            if done {
                // Reconstruct the action path.
                let mut path = Vec::new();
                let mut at = new_idx;
                loop {
                    path.push(nodes[at].2);
                    if nodes[at].1 == usize::MAX {
                        break;
                    }
                    at = nodes[at].1;
                }
                path.reverse();
                return PlanOutcome::Found(path);
            }
            queue.push_back(new_idx as i64);
        }
    }
    PlanOutcome::Unreachable
}

/// Budget from the environment, falling back to the default.
pub fn plan_budget() -> usize {
    std::env::var("RECRED_BUDGET")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_PLAN_BUDGET)
}

/// Convenience for tests: plan and apply, returning the end state.
pub fn reach_and_apply(state: &GameState, goal: &GoalKind, budget: usize) -> Option<GameState> {
    let actions = room_reach(state, goal, budget).into_actions()?;
    state.replay(&actions).ok()
}

#[allow(dead_code)]
fn _assert_send<T: Send>() {}
const _: () = {
    fn check() {
        _assert_send::<GameState>();
        _assert_send::<RtKind>();
    }
    let _ = check;
};
