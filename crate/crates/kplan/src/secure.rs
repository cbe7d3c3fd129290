//! Secure (conformant) plan checking: a plan is secure when it works from
//! every legal initial state, every step stays executable with at least
//! one successor, and every final belief state satisfies the goal.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ground::GroundProgram;
use crate::par;
use crate::plan::{self, Limits, Plan, PlanError};
use crate::transition::{self, State, StepMode, TransitionError};

#[derive(Debug, Error)]
pub enum SecureError {
    #[error(transparent)]
    Transition(#[from] TransitionError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// Why a plan is not secure, with a trajectory leading to the offending
/// state (`states[0]` is a legal initial state).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub states: Vec<State>,
    pub reason: Reason,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reason {
    /// The planning domain has no legal initial state at all.
    NoInitialState,
    /// The step after the last state is not executable or has no
    /// successor state.
    Stuck,
    /// The full plan ran but the final state misses the goal.
    GoalMissed,
}

/// Walk parent pointers back to an initial state.
fn trajectory(levels: &[BTreeMap<State, Option<State>>], mut level: usize, s: &State) -> Vec<State> {
    let mut states = vec![s.clone()];
    let mut cur = s.clone();
    while let Some(Some(parent)) = levels[level].get(&cur) {
        states.push(parent.clone());
        cur = parent.clone();
        level -= 1;
    }
    states.reverse();
    states
}

/// Check a plan for security by expanding the belief state level by
/// level. `Ok(())` means secure; `Err` carries a counterexample.
pub fn check_secure(
    gp: &GroundProgram,
    p: &Plan,
    cap: usize,
) -> Result<Result<(), Counterexample>, SecureError> {
    let init = transition::legal_initial_states(gp, cap)?;
    if init.is_empty() {
        return Ok(Err(Counterexample { states: vec![], reason: Reason::NoInitialState }));
    }
    // levels[j] maps each state reachable after j steps to one parent.
    let mut levels: Vec<BTreeMap<State, Option<State>>> = Vec::with_capacity(p.len() + 1);
    levels.push(init.into_iter().map(|s| (s, None)).collect());
    for (j, acts) in p.iter().enumerate() {
        let frontier: Vec<State> = levels[j].keys().cloned().collect();
        let expanded: Vec<(State, Result<Vec<State>, ()>)> = par::map_collect(frontier, |s| {
            if !transition::is_executable(gp, &s, acts) {
                return (s, Err(()));
            }
            match transition::successors(gp, &s, acts, cap) {
                Ok(succ) if succ.is_empty() => (s, Err(())),
                Ok(succ) => (s, Ok(succ)),
                Err(_) => (s, Ok(Vec::new())), // cap; re-derive below
            }
        });
        let mut next: BTreeMap<State, Option<State>> = BTreeMap::new();
        for (s, r) in expanded {
            match r {
                Err(()) => {
                    return Ok(Err(Counterexample {
                        states: trajectory(&levels, j, &s),
                        reason: Reason::Stuck,
                    }));
                }
                Ok(succ) => {
                    if succ.is_empty() {
                        // Re-run to surface the cap error on this thread.
                        transition::successors(gp, &s, acts, cap)?;
                    }
                    for s2 in succ {
                        next.entry(s2).or_insert_with(|| Some(s.clone()));
                    }
                }
            }
            if next.len() > cap {
                return Err(TransitionError::Capped(cap).into());
            }
        }
        levels.push(next);
    }
    let last = p.len();
    let final_states: Vec<State> = levels[last].keys().cloned().collect();
    for s in final_states {
        if !plan::goal_satisfied(gp, &s) {
            return Ok(Err(Counterexample {
                states: trajectory(&levels, last, &s),
                reason: Reason::GoalMissed,
            }));
        }
    }
    Ok(Ok(()))
}

/// The secure plans among the optimistic plans of the queried length.
pub fn secure_plans(
    gp: &GroundProgram,
    mode: StepMode,
    limits: Limits,
) -> Result<Vec<Plan>, SecureError> {
    // Collect optimistic candidates without a cap, then filter; capping
    // before filtering could discard the secure ones.
    let search_limits = Limits { max_plans: usize::MAX, ..limits };
    let candidates = plan::optimistic_plans(gp, mode, search_limits)?;
    let checked: Vec<(Plan, bool)> = par::map_collect(candidates, |p| {
        let ok = matches!(check_secure(gp, &p, limits.cap), Ok(Ok(())));
        (p, ok)
    });
    Ok(checked
        .into_iter()
        .filter(|(_, ok)| *ok)
        .map(|(p, _)| p)
        .take(limits.max_plans)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::ground_program;
    use crate::kparse::parse;
    use crate::transition::state_texts;

    fn gp(text: &str, bg: Option<&str>) -> GroundProgram {
        ground_program(&parse(text, bg).unwrap()).unwrap().ground
    }

    const BT2: &str = "\
fluents: armed(P) requires package(P). unsafe.
actions: dunk(P) requires package(P).
always: inertial armed(P). caused -armed(P) after dunk(P).
caused unsafe if armed(P). executable dunk(P).
initially: total armed(P). forbidden armed(P), armed(P1), P <> P1.
forbidden not unsafe.
goal: not unsafe ? (1)";

    #[test]
    fn dunking_everything_is_secure() {
        let g = gp(BT2, Some("package(1). package(2)."));
        let both = vec![{
            let mut v = vec![g.act_id("dunk(1)").unwrap(), g.act_id("dunk(2)").unwrap()];
            v.sort();
            v
        }];
        assert_eq!(check_secure(&g, &both, transition::DEFAULT_CAP).unwrap(), Ok(()));
    }

    #[test]
    fn dunking_one_package_misses_the_other_initial_state() {
        let g = gp(BT2, Some("package(1). package(2)."));
        let one = vec![vec![g.act_id("dunk(1)").unwrap()]];
        let cex = check_secure(&g, &one, transition::DEFAULT_CAP).unwrap().unwrap_err();
        assert_eq!(cex.reason, Reason::GoalMissed);
        assert_eq!(cex.states.len(), 2);
        // the run that fails starts with the bomb in package 2
        assert!(state_texts(&g, &cex.states[0]).contains(&"armed(2)".to_string()));
        assert!(state_texts(&g, &cex.states[1]).contains(&"unsafe".to_string()));
    }

    #[test]
    fn secure_plans_are_a_subset_of_optimistic_plans() {
        let g = gp(BT2, Some("package(1). package(2)."));
        let optimistic =
            plan::optimistic_plans(&g, StepMode::Concurrent, Limits::default()).unwrap();
        let secure = secure_plans(&g, StepMode::Concurrent, Limits::default()).unwrap();
        assert_eq!(secure.len(), 1);
        assert!(secure.iter().all(|p| optimistic.contains(p)));
        let names: Vec<&str> = secure[0][0].iter().map(|&a| g.act_text(a)).collect();
        assert_eq!(names, vec!["dunk(1)", "dunk(2)"]);
    }

    #[test]
    fn contradictory_initial_constraints_make_everything_insecure() {
        let text = "\
fluents: f.
initially: f. -f.
goal: f ? (0)";
        let g = gp(text, None);
        let cex = check_secure(&g, &vec![], transition::DEFAULT_CAP).unwrap().unwrap_err();
        assert_eq!(cex.reason, Reason::NoInitialState);
    }

    #[test]
    fn inexecutable_step_reports_stuck_with_prefix() {
        let text = "\
fluents: loaded. broken.
actions: shoot.
always: executable shoot if loaded. caused broken after shoot. inertial loaded. inertial broken.
initially: total loaded.
goal: broken ? (1)";
        let g = gp(text, None);
        let shoot = vec![vec![g.act_id("shoot").unwrap()]];
        let cex = check_secure(&g, &shoot, transition::DEFAULT_CAP).unwrap().unwrap_err();
        assert_eq!(cex.reason, Reason::Stuck);
        assert_eq!(cex.states.len(), 1);
        assert_eq!(state_texts(&g, &cex.states[0]), vec!["-loaded"]);
    }

    #[test]
    fn dead_transition_also_reports_stuck() {
        let text = "\
fluents: f. g.
actions: a.
always: executable a. caused f after a. caused -f after a, g. inertial g.
initially: total g.
goal: f ? (1)";
        let g = gp(text, None);
        let a = vec![vec![g.act_id("a").unwrap()]];
        let cex = check_secure(&g, &a, transition::DEFAULT_CAP).unwrap().unwrap_err();
        assert_eq!(cex.reason, Reason::Stuck);
        assert_eq!(state_texts(&g, &cex.states[0]), vec!["g"]);
    }
}
