//! The transition semantics over a compiled ground program: knowledge
//! states, legal initial states, executable action sets, and successor
//! states (answer sets of the per-step reduct).

use std::collections::BTreeSet;

use thiserror::Error;

use crate::ground::{ActId, CompiledRule, GroundProgram, LitId};

#[derive(Debug, Error)]
pub enum TransitionError {
    #[error("state enumeration cap of {0} exceeded")]
    Capped(usize),
}

/// A set of ground fluent literals, stored as a bitset over the interned
/// literal ids of one ground program.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LitSet {
    bits: Vec<u64>,
}

impl LitSet {
    pub fn new(n_lits: usize) -> Self {
        LitSet { bits: vec![0; n_lits.div_ceil(64)] }
    }

    pub fn contains(&self, id: LitId) -> bool {
        self.bits[id / 64] >> (id % 64) & 1 == 1
    }

    pub fn insert(&mut self, id: LitId) -> bool {
        let was = self.contains(id);
        self.bits[id / 64] |= 1 << (id % 64);
        !was
    }

    pub fn remove(&mut self, id: LitId) {
        self.bits[id / 64] &= !(1 << (id % 64));
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = LitId> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &bits)| {
            let mut bits = bits;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(w * 64 + b)
                }
            })
        })
    }

    pub fn from_iter(n_lits: usize, ids: impl IntoIterator<Item = LitId>) -> Self {
        let mut s = LitSet::new(n_lits);
        for id in ids {
            s.insert(id);
        }
        s
    }

    pub fn is_subset(&self, other: &LitSet) -> bool {
        self.bits.iter().zip(other.bits.iter()).all(|(a, b)| a & !b == 0)
    }

    pub fn intersects(&self, other: &LitSet) -> bool {
        self.bits.iter().zip(other.bits.iter()).any(|(a, b)| a & b != 0)
    }
}

pub type State = LitSet;

/// An action set in canonical form: sorted ids.
pub type ActionSet = Vec<ActId>;

/// No literal together with its complement.
pub fn is_consistent(gp: &GroundProgram, s: &State) -> bool {
    s.iter().all(|l| !s.contains(gp.complement(l)))
}

/// Render a state as its sorted literal texts.
pub fn state_texts(gp: &GroundProgram, s: &State) -> Vec<String> {
    s.iter().map(|l| gp.lit_text(l).to_string()).collect()
}

pub fn state_from_texts(gp: &GroundProgram, texts: &[&str]) -> State {
    LitSet::from_iter(gp.num_lits(), texts.iter().map(|t| gp.lit_id(t).expect("unknown literal")))
}

// ---------------------------------------------------------------------------
// Reduct and answer sets of one step
// ---------------------------------------------------------------------------

/// A rule that survived the pre-part reduction for a fixed previous state
/// and action set; only the if-part remains to be evaluated.
#[derive(Clone, Debug)]
struct ActiveRule {
    head: Option<LitId>,
    post_pos: Vec<LitId>,
    post_neg: Vec<LitId>,
}

fn act_mask(gp: &GroundProgram, acts: &ActionSet) -> Vec<bool> {
    let mut mask = vec![false; gp.num_actions()];
    for &a in acts {
        mask[a] = true;
    }
    mask
}

fn pre_satisfied(r: &CompiledRule, s: &State, acts: &[bool]) -> bool {
    r.pre_pos_fl.iter().all(|&l| s.contains(l))
        && r.pre_neg_fl.iter().all(|&l| !s.contains(l))
        && r.pre_pos_act.iter().all(|&a| acts[a])
        && r.pre_neg_act.iter().all(|&a| !acts[a])
}

/// The rules that constrain a successor of `s` under `acts`: dynamic and
/// static rules from the always section whose pre parts hold.
fn active_rules_step(gp: &GroundProgram, s: &State, acts: &[bool]) -> Vec<ActiveRule> {
    gp.rules
        .iter()
        .filter(|r| !r.is_initial && pre_satisfied(r, s, acts))
        .map(|r| ActiveRule { head: r.head, post_pos: r.post_pos.clone(), post_neg: r.post_neg.clone() })
        .collect()
}

/// The rules that constrain a legal initial state: initial-state
/// constraints plus the static always rules.
fn active_rules_initial(gp: &GroundProgram) -> Vec<ActiveRule> {
    gp.rules
        .iter()
        .filter(|r| r.is_initial || r.is_static)
        .map(|r| ActiveRule { head: r.head, post_pos: r.post_pos.clone(), post_neg: r.post_neg.clone() })
        .collect()
}

/// Truth status of the guessed literals during enumeration.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Dec {
    In,
    Out,
    Open,
}

struct Enumerator<'a> {
    gp: &'a GroundProgram,
    rules: &'a [ActiveRule],
    /// Literals that are heads of some active rule; everything else can
    /// never be in an answer set.
    heads: LitSet,
    /// The guessed literals: negative if-part literals that are also heads.
    guess: Vec<LitId>,
    guess_index: Vec<Option<usize>>,
    dec: Vec<Dec>,
    out: Vec<State>,
    cap: usize,
}

impl Enumerator<'_> {
    /// Least set closed under the rules selected by `usable`, which decides
    /// from the current decisions whether a rule's negative if-part is
    /// settled enough to fire. Constraints are reported via the bool.
    fn lfp(&self, certain: bool) -> (LitSet, bool) {
        let mut s = LitSet::new(self.gp.num_lits());
        let mut violated = false;
        loop {
            let mut changed = false;
            for r in self.rules {
                let neg_ok = r.post_neg.iter().all(|&l| {
                    if !self.heads.contains(l) {
                        return true;
                    }
                    match self.guess_index[l].map(|i| self.dec[i]) {
                        Some(Dec::Out) => true,
                        Some(Dec::In) => false,
                        Some(Dec::Open) | None => !certain,
                    }
                });
                if !neg_ok || !r.post_pos.iter().all(|&l| s.contains(l)) {
                    continue;
                }
                match r.head {
                    Some(h) => {
                        if s.insert(h) {
                            changed = true;
                        }
                    }
                    None => {
                        if certain {
                            violated = true;
                        }
                    }
                }
            }
            if !changed {
                return (s, violated);
            }
        }
    }

    fn search(&mut self) -> Result<(), TransitionError> {
        let (lower, violated) = self.lfp(true);
        if violated || !is_consistent(self.gp, &lower) {
            return Ok(());
        }
        let (upper, _) = self.lfp(false);
        // Forced decisions: anything certainly derived is in, anything not
        // possibly derived is out.
        let mut forced = Vec::new();
        for (i, &g) in self.guess.iter().enumerate() {
            match self.dec[i] {
                Dec::In => {
                    if !upper.contains(g) {
                        return Ok(());
                    }
                }
                Dec::Out => {
                    if lower.contains(g) {
                        return Ok(());
                    }
                }
                Dec::Open => {
                    if lower.contains(g) {
                        forced.push((i, Dec::In));
                    } else if !upper.contains(g) {
                        forced.push((i, Dec::Out));
                    }
                }
            }
        }
        if !forced.is_empty() {
            for &(i, d) in &forced {
                self.dec[i] = d;
            }
            let r = self.search();
            for &(i, _) in &forced {
                self.dec[i] = Dec::Open;
            }
            return r;
        }
        match self.dec.iter().position(|&d| d == Dec::Open) {
            None => {
                // Fully decided: the certain fixpoint is the candidate
                // answer set. Check stability and the constraints.
                let s = lower;
                for (i, &g) in self.guess.iter().enumerate() {
                    if s.contains(g) != (self.dec[i] == Dec::In) {
                        return Ok(());
                    }
                }
                for r in self.rules {
                    if r.head.is_none()
                        && r.post_pos.iter().all(|&l| s.contains(l))
                        && r.post_neg.iter().all(|&l| !s.contains(l))
                    {
                        return Ok(());
                    }
                }
                if self.out.len() >= self.cap {
                    return Err(TransitionError::Capped(self.cap));
                }
                self.out.push(s);
                Ok(())
            }
            Some(i) => {
                for d in [Dec::In, Dec::Out] {
                    self.dec[i] = d;
                    self.search()?;
                }
                self.dec[i] = Dec::Open;
                Ok(())
            }
        }
    }
}

/// All answer sets (consistent, stable, constraint-free) of the given
/// active rules.
fn answer_sets(gp: &GroundProgram, rules: &[ActiveRule], cap: usize) -> Result<Vec<State>, TransitionError> {
    let mut heads = LitSet::new(gp.num_lits());
    for r in rules {
        if let Some(h) = r.head {
            heads.insert(h);
        }
    }
    let mut guess_set = BTreeSet::new();
    for r in rules {
        for &l in &r.post_neg {
            if heads.contains(l) {
                guess_set.insert(l);
            }
        }
    }
    let guess: Vec<LitId> = guess_set.into_iter().collect();
    let mut guess_index = vec![None; gp.num_lits()];
    for (i, &g) in guess.iter().enumerate() {
        guess_index[g] = Some(i);
    }
    let mut e = Enumerator {
        gp,
        rules,
        heads,
        dec: vec![Dec::Open; guess.len()],
        guess,
        guess_index,
        out: Vec::new(),
        cap,
    };
    e.search()?;
    let mut out = e.out;
    out.sort();
    Ok(out)
}

// ---------------------------------------------------------------------------
// Public semantics
// ---------------------------------------------------------------------------

pub const DEFAULT_CAP: usize = 1_000_000;

/// All legal initial states, sorted.
pub fn legal_initial_states(gp: &GroundProgram, cap: usize) -> Result<Vec<State>, TransitionError> {
    answer_sets(gp, &active_rules_initial(gp), cap)
}

/// Whether every action in the set has a satisfied executability
/// condition (evaluated against the state and the whole set, so actions
/// may depend on each other).
pub fn is_executable(gp: &GroundProgram, s: &State, acts: &ActionSet) -> bool {
    let mask = act_mask(gp, acts);
    acts.iter().all(|&a| {
        gp.execs_for(a).any(|e| {
            e.pre_pos_fl.iter().all(|&l| s.contains(l))
                && e.pre_neg_fl.iter().all(|&l| !s.contains(l))
                && e.pre_pos_act.iter().all(|&b| mask[b])
                && e.pre_neg_act.iter().all(|&b| !mask[b])
        })
    })
}

/// All successor states of `s` under `acts`, sorted. Executability of
/// `acts` is not checked here.
pub fn successors(
    gp: &GroundProgram,
    s: &State,
    acts: &ActionSet,
    cap: usize,
) -> Result<Vec<State>, TransitionError> {
    let mask = act_mask(gp, acts);
    let rules = active_rules_step(gp, s, &mask);
    answer_sets(gp, &rules, cap)
}

/// A transition is legal when the action set is executable in `s` and `s2`
/// is one of its successors.
pub fn is_legal_transition(gp: &GroundProgram, s: &State, acts: &ActionSet, s2: &State) -> bool {
    is_executable(gp, s, acts)
        && successors(gp, s, acts, DEFAULT_CAP).map(|ss| ss.contains(s2)).unwrap_or(false)
}

/// Enumeration mode for candidate action sets at each step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepMode {
    /// At most one action per step (plus the empty set).
    Sequential,
    /// Arbitrary subsets of the candidate actions.
    Concurrent,
}

/// All executable action sets in `s`, in canonical (lexicographic id)
/// order. The empty set is always included.
pub fn executable_action_sets(
    gp: &GroundProgram,
    s: &State,
    mode: StepMode,
    cap: usize,
) -> Result<Vec<ActionSet>, TransitionError> {
    // Candidates: actions with at least one condition whose fluent parts
    // hold; the action parts are checked per candidate set.
    let candidates: Vec<ActId> = (0..gp.num_actions())
        .filter(|&a| {
            gp.execs_for(a).any(|e| {
                e.pre_pos_fl.iter().all(|&l| s.contains(l))
                    && e.pre_neg_fl.iter().all(|&l| !s.contains(l))
            })
        })
        .collect();
    let mut out: Vec<ActionSet> = vec![vec![]];
    match mode {
        StepMode::Sequential => {
            for &a in &candidates {
                let set = vec![a];
                if is_executable(gp, s, &set) {
                    out.push(set);
                }
            }
        }
        StepMode::Concurrent => {
            let effective = if gp.no_concurrency { StepMode::Sequential } else { mode };
            if effective == StepMode::Sequential {
                return executable_action_sets(gp, s, StepMode::Sequential, cap);
            }
            if candidates.len() > 24 {
                return Err(TransitionError::Capped(cap));
            }
            for bits in 1u64..(1 << candidates.len()) {
                let set: ActionSet = candidates
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| bits >> i & 1 == 1)
                    .map(|(_, &a)| a)
                    .collect();
                if is_executable(gp, s, &set) {
                    out.push(set);
                }
                if out.len() > cap {
                    return Err(TransitionError::Capped(cap));
                }
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

// ---------------------------------------------------------------------------
// Probes
// ---------------------------------------------------------------------------

/// Structural checks for the restricted domain class whose secure checks
/// are easy: empty background, executability conditions over fluents only,
/// no default negation in the if-parts of always rules, and constraints
/// forcing exactly one action per step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlainReport {
    pub background_empty: bool,
    pub exec_bodies_fluent_only: bool,
    pub no_default_negation_in_effects: bool,
    pub one_action_per_step: bool,
}

impl PlainReport {
    pub fn is_plain(&self) -> bool {
        self.background_empty
            && self.exec_bodies_fluent_only
            && self.no_default_negation_in_effects
            && self.one_action_per_step
    }
}

pub fn probe_plain(background_rule_count: usize, gp: &GroundProgram) -> PlainReport {
    let exec_bodies_fluent_only =
        gp.execs.iter().all(|e| e.pre_pos_act.is_empty() && e.pre_neg_act.is_empty());
    let no_default_negation_in_effects =
        gp.rules.iter().filter(|r| !r.is_initial).all(|r| r.post_neg.is_empty());
    let m = gp.num_actions();
    let bare_constraint = |r: &CompiledRule| {
        r.head.is_none()
            && r.post_pos.is_empty()
            && r.post_neg.is_empty()
            && r.pre_pos_fl.is_empty()
            && r.pre_neg_fl.is_empty()
            && !r.is_initial
    };
    // Vacuously true without ground actions; otherwise require all pairwise
    // exclusions plus the at-least-one-action constraint.
    let one_action_per_step = m == 0 || {
        let pairs_ok = (0..m).all(|i| {
            (i + 1..m).all(|j| {
                gp.rules.iter().any(|r| {
                    bare_constraint(r) && r.pre_neg_act.is_empty() && r.pre_pos_act == vec![i, j]
                })
            })
        });
        let all_acts: Vec<ActId> = (0..m).collect();
        let at_least_one = gp.rules.iter().any(|r| {
            bare_constraint(r) && r.pre_pos_act.is_empty() && r.pre_neg_act == all_acts
        });
        pairs_ok && at_least_one
    };
    PlainReport {
        background_empty: background_rule_count == 0,
        exec_bodies_fluent_only,
        no_default_negation_in_effects,
        one_action_per_step,
    }
}

/// Whether every reachable transition (within `horizon` steps of the
/// initial states) has at most one successor state.
pub fn probe_determined(
    gp: &GroundProgram,
    horizon: usize,
    cap: usize,
) -> Result<bool, TransitionError> {
    let mut layer: BTreeSet<State> = legal_initial_states(gp, cap)?.into_iter().collect();
    let mut seen = layer.clone();
    for _ in 0..horizon {
        let mut next = BTreeSet::new();
        for s in &layer {
            for acts in executable_action_sets(gp, s, StepMode::Concurrent, cap)? {
                let succ = successors(gp, s, &acts, cap)?;
                if succ.len() > 1 {
                    return Ok(false);
                }
                for s2 in succ {
                    if !seen.contains(&s2) {
                        seen.insert(s2.clone());
                        next.insert(s2);
                    }
                    if seen.len() > cap {
                        return Err(TransitionError::Capped(cap));
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        layer = next;
    }
    Ok(true)
}
