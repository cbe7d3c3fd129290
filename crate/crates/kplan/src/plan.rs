//! Search for optimistic plans: sequences of executable action sets of
//! exactly the queried length for which some trajectory reaches the goal.

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use crate::ground::GroundProgram;
use crate::par;
use crate::transition::{
    self, ActionSet, State, StepMode, TransitionError,
};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    Transition(#[from] TransitionError),
    #[error("program has no goal query")]
    NoQuery,
}

pub type Plan = Vec<ActionSet>;

#[derive(Clone, Copy, Debug)]
pub struct Limits {
    /// Stop after collecting this many distinct plans.
    pub max_plans: usize,
    /// Passed through to state/action-set enumeration.
    pub cap: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_plans: usize::MAX, cap: transition::DEFAULT_CAP }
    }
}

pub fn goal_satisfied(gp: &GroundProgram, s: &State) -> bool {
    let Some(q) = &gp.query else { return false };
    q.goal_pos.iter().all(|&l| s.contains(l)) && q.goal_neg.iter().all(|&l| !s.contains(l))
}

struct Search<'a> {
    gp: &'a GroundProgram,
    mode: StepMode,
    limits: Limits,
    /// (state, remaining steps) pairs from which no goal trajectory exists.
    dead: HashSet<(State, usize)>,
    plans: BTreeSet<Plan>,
}

impl Search<'_> {
    /// Depth-first over canonical action-set order, so plans are found in
    /// lexicographic order from each initial state.
    /// Returns (goal reachable below this node, plan cap hit). The memo
    /// keys on goal reachability, not on whether new plans were recorded:
    /// two sibling successors can yield identical plan suffixes, and the
    /// duplicate branch must not poison the memo.
    fn dfs(
        &mut self,
        s: &State,
        k: usize,
        prefix: &mut Plan,
    ) -> Result<(bool, bool), TransitionError> {
        if k == 0 {
            if goal_satisfied(self.gp, s) {
                self.plans.insert(prefix.clone());
                return Ok((true, self.plans.len() >= self.limits.max_plans));
            }
            return Ok((false, false));
        }
        let key = (s.clone(), k);
        if self.dead.contains(&key) {
            return Ok((false, false));
        }
        let mut found = false;
        for acts in transition::executable_action_sets(self.gp, s, self.mode, self.limits.cap)? {
            for s2 in transition::successors(self.gp, s, &acts, self.limits.cap)? {
                prefix.push(acts.clone());
                let (f, full) = self.dfs(&s2, k - 1, prefix)?;
                prefix.pop();
                found |= f;
                if full {
                    return Ok((found, true));
                }
            }
        }
        if !found {
            self.dead.insert(key);
        }
        Ok((found, false))
    }
}

/// All optimistic plans (up to `limits.max_plans`) of exactly the queried
/// length, as a sorted deduplicated list.
pub fn optimistic_plans(
    gp: &GroundProgram,
    mode: StepMode,
    limits: Limits,
) -> Result<Vec<Plan>, PlanError> {
    let q = gp.query.as_ref().ok_or(PlanError::NoQuery)?;
    let len = q.plan_length;
    let init = transition::legal_initial_states(gp, limits.cap)?;
    // With no plan cap the initial states are independent; fan out.
    if limits.max_plans == usize::MAX && init.len() > 1 {
        let results: Vec<Result<BTreeSet<Plan>, TransitionError>> =
            par::map_collect(init, |s0| {
                let mut search =
                    Search { gp, mode, limits, dead: HashSet::new(), plans: BTreeSet::new() };
                let mut prefix = Vec::new();
                search.dfs(&s0, len, &mut prefix)?;
                Ok(search.plans)
            });
        let mut all = BTreeSet::new();
        for r in results {
            all.extend(r?);
        }
        return Ok(all.into_iter().collect());
    }
    let mut search = Search { gp, mode, limits, dead: HashSet::new(), plans: BTreeSet::new() };
    for s0 in init {
        let mut prefix = Vec::new();
        if search.dfs(&s0, len, &mut prefix)?.1 {
            break;
        }
    }
    Ok(search.plans.into_iter().collect())
}

/// A trajectory witnessing that `plan` is optimistic: the state sequence
/// s_0, ..., s_i of some goal-establishing run. `None` if the plan is not
/// an optimistic plan.
pub fn find_witness(gp: &GroundProgram, plan: &Plan) -> Result<Option<Vec<State>>, PlanError> {
    fn replay(
        gp: &GroundProgram,
        s: &State,
        rest: &[ActionSet],
        trace: &mut Vec<State>,
    ) -> Result<bool, TransitionError> {
        let Some((acts, tail)) = rest.split_first() else {
            return Ok(goal_satisfied(gp, s));
        };
        if !transition::is_executable(gp, s, acts) {
            return Ok(false);
        }
        for s2 in transition::successors(gp, s, acts, transition::DEFAULT_CAP)? {
            trace.push(s2.clone());
            if replay(gp, &s2, tail, trace)? {
                return Ok(true);
            }
            trace.pop();
        }
        Ok(false)
    }
    if gp.query.is_none() {
        return Err(PlanError::NoQuery);
    }
    for s0 in transition::legal_initial_states(gp, transition::DEFAULT_CAP)? {
        let mut trace = vec![s0.clone()];
        if replay(gp, &s0, plan, &mut trace)? {
            return Ok(Some(trace));
        }
    }
    Ok(None)
}

/// Parse a plan in the CLI's step format: one `STEP k: {a, b}` line per
/// step (`{}` for an empty step).
pub fn parse_plan(gp: &GroundProgram, text: &str) -> Result<Plan, String> {
    let mut plan = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let rest = line
            .strip_prefix("STEP ")
            .and_then(|r| r.split_once(':'))
            .map(|(_, r)| r.trim())
            .ok_or_else(|| format!("cannot parse plan line `{line}`"))?;
        let inner = rest
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(|| format!("cannot parse plan line `{line}`"))?;
        let mut acts = Vec::new();
        // split on commas at parenthesis depth zero only
        let mut names = Vec::new();
        let (mut depth, mut start) = (0usize, 0usize);
        for (i, c) in inner.char_indices() {
            match c {
                '(' => depth += 1,
                ')' => depth = depth.saturating_sub(1),
                ',' if depth == 0 => {
                    names.push(&inner[start..i]);
                    start = i + 1;
                }
                _ => {}
            }
        }
        names.push(&inner[start..]);
        for name in names {
            let name = name.trim();
            if name.is_empty() {
                continue;
            }
            let id = gp.act_id(name).ok_or_else(|| format!("unknown action `{name}`"))?;
            acts.push(id);
        }
        acts.sort_unstable();
        acts.dedup();
        plan.push(acts);
    }
    Ok(plan)
}

/// Render a plan in the CLI's step format.
pub fn format_plan(gp: &GroundProgram, plan: &Plan) -> String {
    let mut out = String::new();
    for (k, acts) in plan.iter().enumerate() {
        let names: Vec<&str> = acts.iter().map(|&a| gp.act_text(a)).collect();
        out.push_str(&format!("STEP {}: {{{}}}\n", k + 1, names.join(", ")));
    }
    out
}
