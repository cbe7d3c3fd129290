//! Typed instantiation: compute the legal fluent/action instances from the
//! declarations and the background model, instantiate the causation rules
//! and executability conditions over them, and compile the result into an
//! integer-indexed ground program.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::ast::*;
use crate::datalog::{self, Model};
use crate::kparse::{self, KParseError};

#[derive(Debug, Error)]
pub enum GroundError {
    #[error(transparent)]
    Parse(#[from] KParseError),
    #[error(transparent)]
    Background(#[from] datalog::DatalogError),
    #[error("goal literal `{0}` is not a legal fluent instance")]
    IllegalGoal(String),
}

pub type LitId = usize;
pub type ActId = usize;

/// A ground causation rule over interned ids. Type literals have been
/// resolved against the background model and stripped.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CompiledRule {
    pub head: Option<LitId>,
    pub post_pos: Vec<LitId>,
    pub post_neg: Vec<LitId>,
    pub pre_pos_fl: Vec<LitId>,
    pub pre_neg_fl: Vec<LitId>,
    pub pre_pos_act: Vec<ActId>,
    pub pre_neg_act: Vec<ActId>,
    /// Written without an after part (checked before type resolution).
    pub is_static: bool,
    /// Came from the initial-state section.
    pub is_initial: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CompiledExec {
    pub action: ActId,
    pub pre_pos_fl: Vec<LitId>,
    pub pre_neg_fl: Vec<LitId>,
    pub pre_pos_act: Vec<ActId>,
    pub pre_neg_act: Vec<ActId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundQuery {
    pub goal_pos: Vec<LitId>,
    pub goal_neg: Vec<LitId>,
    pub plan_length: usize,
}

/// The compiled ground planning domain. Fluent literals (both polarities of
/// every legal instance) and actions are interned; ids follow the
/// lexicographic order of their texts, so id order is reporting order.
#[derive(Clone, Debug, Default)]
pub struct GroundProgram {
    lit_texts: Vec<String>,
    lit_ids: HashMap<String, LitId>,
    complement: Vec<LitId>,
    positive: Vec<bool>,
    act_texts: Vec<String>,
    act_ids: HashMap<String, ActId>,
    pub rules: Vec<CompiledRule>,
    pub execs: Vec<CompiledExec>,
    exec_index: Vec<Vec<usize>>,
    pub query: Option<GroundQuery>,
    pub no_concurrency: bool,
}

impl GroundProgram {
    pub fn num_lits(&self) -> usize {
        self.lit_texts.len()
    }

    pub fn num_actions(&self) -> usize {
        self.act_texts.len()
    }

    pub fn lit_text(&self, id: LitId) -> &str {
        &self.lit_texts[id]
    }

    pub fn act_text(&self, id: ActId) -> &str {
        &self.act_texts[id]
    }

    pub fn lit_id(&self, text: &str) -> Option<LitId> {
        self.lit_ids.get(text).copied()
    }

    pub fn act_id(&self, text: &str) -> Option<ActId> {
        self.act_ids.get(text).copied()
    }

    pub fn complement(&self, id: LitId) -> LitId {
        self.complement[id]
    }

    pub fn is_positive(&self, id: LitId) -> bool {
        self.positive[id]
    }

    /// Indices into `execs` of the conditions for one action.
    pub fn execs_for(&self, action: ActId) -> impl Iterator<Item = &CompiledExec> {
        self.exec_index[action].iter().map(|&i| &self.execs[i])
    }

    fn render_rule(&self, r: &CompiledRule) -> String {
        let mut s = String::from("caused ");
        match r.head {
            Some(h) => s.push_str(self.lit_text(h)),
            None => s.push_str("false"),
        }
        let post: Vec<String> = r
            .post_pos
            .iter()
            .map(|&l| self.lit_text(l).to_string())
            .chain(r.post_neg.iter().map(|&l| format!("not {}", self.lit_text(l))))
            .collect();
        if !post.is_empty() {
            s.push_str(" if ");
            s.push_str(&post.join(", "));
        }
        let pre: Vec<String> = r
            .pre_pos_act
            .iter()
            .map(|&a| self.act_text(a).to_string())
            .chain(r.pre_pos_fl.iter().map(|&l| self.lit_text(l).to_string()))
            .chain(r.pre_neg_act.iter().map(|&a| format!("not {}", self.act_text(a))))
            .chain(r.pre_neg_fl.iter().map(|&l| format!("not {}", self.lit_text(l))))
            .collect();
        if !pre.is_empty() || !r.is_static {
            s.push_str(" after ");
            s.push_str(&pre.join(", "));
        }
        s.push('.');
        s
    }

    /// Deterministic text dump of the whole ground program.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str("% fluent literals:\n");
        for t in &self.lit_texts {
            out.push_str(&format!("%   {t}\n"));
        }
        out.push_str("% actions:\n");
        for t in &self.act_texts {
            out.push_str(&format!("%   {t}\n"));
        }
        let mut initial = String::new();
        let mut always = String::new();
        for r in &self.rules {
            let line = format!("{}\n", self.render_rule(r));
            if r.is_initial {
                initial.push_str(&line);
            } else {
                always.push_str(&line);
            }
        }
        out.push_str("always:\n");
        out.push_str(&always);
        for e in &self.execs {
            let mut s = format!("executable {}", self.act_text(e.action));
            let body: Vec<String> = e
                .pre_pos_fl
                .iter()
                .map(|&l| self.lit_text(l).to_string())
                .chain(e.pre_pos_act.iter().map(|&a| self.act_text(a).to_string()))
                .chain(e.pre_neg_fl.iter().map(|&l| format!("not {}", self.lit_text(l))))
                .chain(e.pre_neg_act.iter().map(|&a| format!("not {}", self.act_text(a))))
                .collect();
            if !body.is_empty() {
                s.push_str(" if ");
                s.push_str(&body.join(", "));
            }
            out.push_str(&s);
            out.push_str(".\n");
        }
        out.push_str("initially:\n");
        out.push_str(&initial);
        if let Some(q) = &self.query {
            let goals: Vec<String> = q
                .goal_pos
                .iter()
                .map(|&l| self.lit_text(l).to_string())
                .chain(q.goal_neg.iter().map(|&l| format!("not {}", self.lit_text(l))))
                .collect();
            out.push_str(&format!("goal: {} ? ({})\n", goals.join(", "), q.plan_length));
        }
        out
    }
}

/// A ground program together with the model and legal instances it was
/// built from.
#[derive(Debug)]
pub struct Grounding {
    pub model: Model,
    pub fluent_atoms: BTreeSet<String>,
    pub action_atoms: BTreeSet<String>,
    pub ground: GroundProgram,
}

type Subst = HashMap<String, String>;

fn subst_term(t: &Term, theta: &Subst) -> Term {
    match t {
        Term::Const(_) => t.clone(),
        Term::Var(v) => match theta.get(v) {
            Some(c) => Term::Const(c.clone()),
            None => t.clone(),
        },
    }
}

fn subst_atom(a: &Atom, theta: &Subst) -> Atom {
    Atom::new(&a.pred, a.args.iter().map(|t| subst_term(t, theta)).collect())
}

/// Enumerate all substitutions over `requires` literals that hold in the
/// model, calling `found` for each.
fn match_requires(lits: &[Literal], theta: &mut Subst, model: &Model, found: &mut dyn FnMut(&Subst)) {
    let Some((lit, rest)) = lits.split_first() else {
        found(theta);
        return;
    };
    if lit.atom.pred == EQ_PRED {
        // Equality in a requires part: both sides must already be bound.
        let a = subst_term(&lit.atom.args[0], theta);
        let b = subst_term(&lit.atom.args[1], theta);
        if let (Term::Const(a), Term::Const(b)) = (a, b) {
            if (a == b) == lit.positive {
                match_requires(rest, theta, model, found);
            }
        }
        return;
    }
    let tuples: Vec<Vec<String>> = model.extension(lit.positive, &lit.atom.pred).cloned().collect();
    for tuple in tuples {
        if tuple.len() != lit.atom.args.len() {
            continue;
        }
        let mut bound = Vec::new();
        let mut ok = true;
        for (term, val) in lit.atom.args.iter().zip(tuple.iter()) {
            match term {
                Term::Const(c) => {
                    if c != val {
                        ok = false;
                        break;
                    }
                }
                Term::Var(v) => match theta.get(v) {
                    Some(existing) if existing != val => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        theta.insert(v.clone(), val.clone());
                        bound.push(v.clone());
                    }
                },
            }
        }
        if ok {
            match_requires(rest, theta, model, found);
        }
        for v in bound {
            theta.remove(&v);
        }
    }
}

/// Compute all legal instances of the given declarations.
pub fn legal_instances(decls: &[Declaration], model: &Model) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for d in decls {
        let mut theta = Subst::new();
        match_requires(&d.requires, &mut theta, model, &mut |theta| {
            let atom = subst_atom(&d.head, theta);
            if atom.is_ground() {
                out.insert(atom.to_string());
            }
        });
    }
    out
}

/// All constants occurring in the program or the model.
fn all_constants(prog: &KProgram, model: &Model) -> Vec<String> {
    let mut set: BTreeSet<String> = prog.constants();
    for f in model.facts() {
        if let Some(open) = f.find('(') {
            for c in f[open + 1..f.len() - 1].split(',') {
                set.insert(c.to_string());
            }
        }
    }
    set.into_iter().collect()
}

struct Compiler<'a> {
    model: &'a Model,
    fluent_atoms: &'a BTreeSet<String>,
    gp: GroundProgram,
}

enum Resolved {
    Keep,
    DropRule,
}

impl Compiler<'_> {
    /// Resolve one ground literal in the given polarity position into the
    /// target id vectors, or signal that the whole rule instance is dropped.
    fn resolve(
        &self,
        lit: &Literal,
        negated: bool,
        fl: &mut Vec<LitId>,
        act: &mut Vec<ActId>,
    ) -> Resolved {
        match lit.kind {
            Kind::Type => {
                let holds = self.model.holds(lit);
                // A positive occurrence must hold; a default-negated type
                // literal that holds deletes every instance of the rule.
                if holds == negated {
                    Resolved::DropRule
                } else {
                    Resolved::Keep
                }
            }
            Kind::Fluent => {
                let atom = lit.atom.to_string();
                if !self.fluent_atoms.contains(&atom) {
                    return Resolved::DropRule;
                }
                let text = if lit.positive { atom } else { format!("-{atom}") };
                fl.push(self.gp.lit_ids[&text]);
                Resolved::Keep
            }
            Kind::Action => {
                let atom = lit.atom.to_string();
                match self.gp.act_ids.get(&atom) {
                    Some(&id) => {
                        act.push(id);
                        Resolved::Keep
                    }
                    None => Resolved::DropRule,
                }
            }
        }
    }

    fn compile_rule(&self, r: &CausationRule, theta: &Subst) -> Option<CompiledRule> {
        let mut out = CompiledRule {
            head: None,
            post_pos: vec![],
            post_neg: vec![],
            pre_pos_fl: vec![],
            pre_neg_fl: vec![],
            pre_pos_act: vec![],
            pre_neg_act: vec![],
            is_static: r.is_static(),
            is_initial: r.is_initial,
        };
        if let Some(h) = &r.head {
            let h = ground_lit(h, theta);
            let atom = h.atom.to_string();
            if !self.fluent_atoms.contains(&atom) {
                return None;
            }
            let text = if h.positive { atom } else { format!("-{atom}") };
            out.head = Some(self.gp.lit_ids[&text]);
        }
        let mut dead_act = Vec::new();
        for (lits, negated, fl, act) in [
            (&r.post_pos, false, &mut out.post_pos, &mut dead_act),
            (&r.pre_pos, false, &mut out.pre_pos_fl, &mut out.pre_pos_act),
        ] {
            for l in lits.iter() {
                let l = ground_lit(l, theta);
                if let Resolved::DropRule = self.resolve(&l, negated, fl, act) {
                    return None;
                }
            }
        }
        debug_assert!(dead_act.is_empty());
        let mut dead_act = Vec::new();
        for (lits, fl, act) in [
            (&r.post_neg, &mut out.post_neg, &mut dead_act),
            (&r.pre_neg, &mut out.pre_neg_fl, &mut out.pre_neg_act),
        ] {
            for l in lits.iter() {
                let l = ground_lit(l, theta);
                if let Resolved::DropRule = self.resolve(&l, true, fl, act) {
                    return None;
                }
            }
        }
        debug_assert!(dead_act.is_empty());
        for v in [
            &mut out.post_pos,
            &mut out.post_neg,
            &mut out.pre_pos_fl,
            &mut out.pre_neg_fl,
            &mut out.pre_pos_act,
            &mut out.pre_neg_act,
        ] {
            v.sort_unstable();
            v.dedup();
        }
        Some(out)
    }

    fn compile_exec(&self, e: &ExecCondition, theta: &Subst) -> Option<CompiledExec> {
        let action_atom = subst_atom(&e.action, theta).to_string();
        let action = *self.gp.act_ids.get(&action_atom)?;
        let mut out = CompiledExec {
            action,
            pre_pos_fl: vec![],
            pre_neg_fl: vec![],
            pre_pos_act: vec![],
            pre_neg_act: vec![],
        };
        for l in &e.pre_pos {
            let l = ground_lit(l, theta);
            if let Resolved::DropRule = self.resolve(&l, false, &mut out.pre_pos_fl, &mut out.pre_pos_act) {
                return None;
            }
        }
        for l in &e.pre_neg {
            let l = ground_lit(l, theta);
            if let Resolved::DropRule = self.resolve(&l, true, &mut out.pre_neg_fl, &mut out.pre_neg_act) {
                return None;
            }
        }
        for v in [&mut out.pre_pos_fl, &mut out.pre_neg_fl] {
            v.sort_unstable();
            v.dedup();
        }
        for v in [&mut out.pre_pos_act, &mut out.pre_neg_act] {
            v.sort_unstable();
            v.dedup();
        }
        Some(out)
    }
}

fn ground_lit(l: &Literal, theta: &Subst) -> Literal {
    Literal { positive: l.positive, kind: l.kind, atom: subst_atom(&l.atom, theta) }
}

/// Call `f` for every assignment of `vars` to `consts`.
fn for_all_substs(vars: &[String], consts: &[String], theta: &mut Subst, f: &mut dyn FnMut(&Subst)) {
    let Some((v, rest)) = vars.split_first() else {
        f(theta);
        return;
    };
    for c in consts {
        theta.insert(v.clone(), c.clone());
        for_all_substs(rest, consts, theta, f);
    }
    theta.remove(v);
}

fn rule_vars(r: &CausationRule) -> Vec<String> {
    let mut vars = BTreeSet::new();
    for l in r.head.iter().chain(r.post()).chain(r.pre()) {
        for v in l.atom.variables() {
            vars.insert(v.to_string());
        }
    }
    vars.into_iter().collect()
}

/// Expand macros, evaluate the background, and build the compiled ground
/// program.
pub fn ground_program(prog: &KProgram) -> Result<Grounding, GroundError> {
    let core = kparse::expand_macros(prog)?;
    let model = datalog::evaluate(&core.background)?;
    let fluent_atoms = legal_instances(&core.fluent_decls, &model);
    let action_atoms = legal_instances(&core.action_decls, &model);

    let mut gp = GroundProgram::default();
    let mut lit_texts: Vec<String> = fluent_atoms
        .iter()
        .flat_map(|a| [a.clone(), format!("-{a}")])
        .collect();
    lit_texts.sort();
    for (i, t) in lit_texts.iter().enumerate() {
        gp.lit_ids.insert(t.clone(), i);
    }
    gp.positive = lit_texts.iter().map(|t| !t.starts_with('-')).collect();
    gp.complement = lit_texts
        .iter()
        .map(|t| {
            let c = if let Some(stripped) = t.strip_prefix('-') {
                stripped.to_string()
            } else {
                format!("-{t}")
            };
            gp.lit_ids[&c]
        })
        .collect();
    gp.lit_texts = lit_texts;
    gp.act_texts = action_atoms.iter().cloned().collect();
    for (i, t) in gp.act_texts.iter().enumerate() {
        gp.act_ids.insert(t.clone(), i);
    }
    gp.no_concurrency = core.no_concurrency;

    let consts = all_constants(&core, &model);
    let compiler = Compiler { model: &model, fluent_atoms: &fluent_atoms, gp };

    let mut rules: BTreeSet<CompiledRule> = BTreeSet::new();
    for r in core.core_rules() {
        let vars = rule_vars(r);
        let mut theta = Subst::new();
        for_all_substs(&vars, &consts, &mut theta, &mut |theta| {
            if let Some(cr) = compiler.compile_rule(r, theta) {
                rules.insert(cr);
            }
        });
    }
    let mut execs: BTreeSet<CompiledExec> = BTreeSet::new();
    for e in core.exec_conditions() {
        let mut vars = BTreeSet::new();
        for v in e.action.variables() {
            vars.insert(v.to_string());
        }
        for l in e.pre_pos.iter().chain(e.pre_neg.iter()) {
            for v in l.atom.variables() {
                vars.insert(v.to_string());
            }
        }
        let vars: Vec<String> = vars.into_iter().collect();
        let mut theta = Subst::new();
        for_all_substs(&vars, &consts, &mut theta, &mut |theta| {
            if let Some(ce) = compiler.compile_exec(e, theta) {
                execs.insert(ce);
            }
        });
    }
    // noConcurrency: one constraint per unordered pair of ground actions.
    if core.no_concurrency {
        for i in 0..compiler.gp.act_texts.len() {
            for j in i + 1..compiler.gp.act_texts.len() {
                rules.insert(CompiledRule {
                    head: None,
                    post_pos: vec![],
                    post_neg: vec![],
                    pre_pos_fl: vec![],
                    pre_neg_fl: vec![],
                    pre_pos_act: vec![i, j],
                    pre_neg_act: vec![],
                    is_static: false,
                    is_initial: false,
                });
            }
        }
    }
    let mut gp = compiler.gp;
    gp.rules = rules.into_iter().collect();
    gp.execs = execs.into_iter().collect();
    gp.exec_index = vec![Vec::new(); gp.act_texts.len()];
    for (i, e) in gp.execs.iter().enumerate() {
        gp.exec_index[e.action].push(i);
    }
    if let Some(q) = &core.query {
        let mut gq = GroundQuery { goal_pos: vec![], goal_neg: vec![], plan_length: q.plan_length };
        for (lits, out, required) in
            [(&q.goal_pos, &mut gq.goal_pos, true), (&q.goal_neg, &mut gq.goal_neg, false)]
        {
            for l in lits {
                let atom = l.atom.to_string();
                if !fluent_atoms.contains(&atom) {
                    if required {
                        return Err(GroundError::IllegalGoal(l.to_string()));
                    }
                    // A default-negated goal over an illegal instance can
                    // never be in a state; it is vacuously satisfied.
                    continue;
                }
                let text = if l.positive { atom } else { format!("-{atom}") };
                out.push(gp.lit_ids[&text]);
            }
            out.sort_unstable();
            out.dedup();
        }
        gp.query = Some(gq);
    }
    Ok(Grounding { model, fluent_atoms, action_atoms, ground: gp })
}
