//! AST for K planning programs and their Datalog background.

use std::fmt;

pub const EQ_PRED: &str = "=";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(String),
    Var(String),
}

impl Term {
    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Const(s) | Term::Var(s) => s,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: impl Into<String>, args: Vec<Term>) -> Self {
        Atom { pred: pred.into(), args }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| !t.is_var())
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            Term::Const(_) => None,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pred == EQ_PRED {
            return write!(f, "{} = {}", self.args[0], self.args[1]);
        }
        f.write_str(&self.pred)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Whether a predicate names a fluent, an action, or part of the static
/// background (type predicates, including the built-in equality).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Fluent,
    Action,
    Type,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub positive: bool,
    pub kind: Kind,
    pub atom: Atom,
}

impl Literal {
    pub fn pos(kind: Kind, atom: Atom) -> Self {
        Literal { positive: true, kind, atom }
    }

    pub fn neg(kind: Kind, atom: Atom) -> Self {
        Literal { positive: false, kind, atom }
    }

    /// The complement under strong negation.
    pub fn complement(&self) -> Self {
        Literal { positive: !self.positive, kind: self.kind, atom: self.atom.clone() }
    }

    pub fn is_ground(&self) -> bool {
        self.atom.is_ground()
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("-")?;
        }
        write!(f, "{}", self.atom)
    }
}

/// `p(X1,...,Xn) requires t1,...,tm`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Declaration {
    pub head: Atom,
    pub requires: Vec<Literal>,
}

impl fmt::Display for Declaration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.requires.is_empty() {
            f.write_str(" requires ")?;
            write_body(f, &self.requires, &[])?;
        }
        f.write_str(".")
    }
}

/// `caused f if B after A.` -- the head is `None` for `false`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausationRule {
    pub head: Option<Literal>,
    pub post_pos: Vec<Literal>,
    pub post_neg: Vec<Literal>,
    pub pre_pos: Vec<Literal>,
    pub pre_neg: Vec<Literal>,
    pub is_initial: bool,
}

impl CausationRule {
    pub fn is_static(&self) -> bool {
        self.pre_pos.is_empty() && self.pre_neg.is_empty()
    }

    pub fn post(&self) -> impl Iterator<Item = &Literal> {
        self.post_pos.iter().chain(self.post_neg.iter())
    }

    pub fn pre(&self) -> impl Iterator<Item = &Literal> {
        self.pre_pos.iter().chain(self.pre_neg.iter())
    }

    /// All literals occurring in the rule, including the head.
    pub fn lit(&self) -> impl Iterator<Item = &Literal> {
        self.head.iter().chain(self.post()).chain(self.pre())
    }
}

impl fmt::Display for CausationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("caused ")?;
        match &self.head {
            Some(l) => write!(f, "{l}")?,
            None => f.write_str("false")?,
        }
        if !self.post_pos.is_empty() || !self.post_neg.is_empty() {
            f.write_str(" if ")?;
            write_body(f, &self.post_pos, &self.post_neg)?;
        }
        if !self.pre_pos.is_empty() || !self.pre_neg.is_empty() {
            f.write_str(" after ")?;
            write_body(f, &self.pre_pos, &self.pre_neg)?;
        }
        f.write_str(".")
    }
}

/// `executable a if B.`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecCondition {
    pub action: Atom,
    pub pre_pos: Vec<Literal>,
    pub pre_neg: Vec<Literal>,
}

impl fmt::Display for ExecCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "executable {}", self.action)?;
        if !self.pre_pos.is_empty() || !self.pre_neg.is_empty() {
            f.write_str(" if ")?;
            write_body(f, &self.pre_pos, &self.pre_neg)?;
        }
        f.write_str(".")
    }
}

/// `g1,...,gm, not g_{m+1},...,not gn ? (i)`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub goal_pos: Vec<Literal>,
    pub goal_neg: Vec<Literal>,
    pub plan_length: usize,
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_body(f, &self.goal_pos, &self.goal_neg)?;
        write!(f, " ? ({})", self.plan_length)
    }
}

/// A statement in the `always:` or `initially:` section, before macro
/// expansion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KStatement {
    Rule(CausationRule),
    Exec(ExecCondition),
    Inertial {
        fluent: Literal,
        post_pos: Vec<Literal>,
        post_neg: Vec<Literal>,
        pre_pos: Vec<Literal>,
        pre_neg: Vec<Literal>,
    },
    Default {
        fluent: Literal,
    },
    Total {
        fluent: Literal,
        post_pos: Vec<Literal>,
        post_neg: Vec<Literal>,
        pre_pos: Vec<Literal>,
        pre_neg: Vec<Literal>,
    },
    Forbidden {
        post_pos: Vec<Literal>,
        post_neg: Vec<Literal>,
        pre_pos: Vec<Literal>,
        pre_neg: Vec<Literal>,
    },
    Nonexecutable {
        action: Atom,
        cond_pos: Vec<Literal>,
        cond_neg: Vec<Literal>,
    },
}

impl KStatement {
    pub fn is_core(&self) -> bool {
        matches!(self, KStatement::Rule(_) | KStatement::Exec(_))
    }
}

impl fmt::Display for KStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KStatement::Rule(r) => write!(f, "{r}"),
            KStatement::Exec(e) => write!(f, "{e}"),
            KStatement::Inertial { fluent, post_pos, post_neg, pre_pos, pre_neg } => {
                write!(f, "inertial {fluent}")?;
                write_if_after(f, post_pos, post_neg, pre_pos, pre_neg)
            }
            KStatement::Default { fluent } => write!(f, "default {fluent}."),
            KStatement::Total { fluent, post_pos, post_neg, pre_pos, pre_neg } => {
                write!(f, "total {fluent}")?;
                write_if_after(f, post_pos, post_neg, pre_pos, pre_neg)
            }
            KStatement::Forbidden { post_pos, post_neg, pre_pos, pre_neg } => {
                f.write_str("forbidden")?;
                if !post_pos.is_empty() || !post_neg.is_empty() {
                    f.write_str(" ")?;
                    write_body(f, post_pos, post_neg)?;
                }
                if !pre_pos.is_empty() || !pre_neg.is_empty() {
                    f.write_str(" after ")?;
                    write_body(f, pre_pos, pre_neg)?;
                }
                f.write_str(".")
            }
            KStatement::Nonexecutable { action, cond_pos, cond_neg } => {
                write!(f, "nonexecutable {action}")?;
                if !cond_pos.is_empty() || !cond_neg.is_empty() {
                    f.write_str(" if ")?;
                    write_body(f, cond_pos, cond_neg)?;
                }
                f.write_str(".")
            }
        }
    }
}

fn write_if_after(
    f: &mut fmt::Formatter<'_>,
    post_pos: &[Literal],
    post_neg: &[Literal],
    pre_pos: &[Literal],
    pre_neg: &[Literal],
) -> fmt::Result {
    if !post_pos.is_empty() || !post_neg.is_empty() {
        f.write_str(" if ")?;
        write_body(f, post_pos, post_neg)?;
    }
    if !pre_pos.is_empty() || !pre_neg.is_empty() {
        f.write_str(" after ")?;
        write_body(f, pre_pos, pre_neg)?;
    }
    f.write_str(".")
}

fn write_body(f: &mut fmt::Formatter<'_>, pos: &[Literal], neg: &[Literal]) -> fmt::Result {
    let mut first = true;
    for l in pos {
        if !first {
            f.write_str(", ")?;
        }
        first = false;
        write!(f, "{l}")?;
    }
    for l in neg {
        if !first {
            f.write_str(", ")?;
        }
        first = false;
        // `not (X = Y)` is the reading of the inequality built-in.
        if l.atom.pred == EQ_PRED {
            write!(f, "{} <> {}", l.atom.args[0], l.atom.args[1])?;
        } else {
            write!(f, "not {l}")?;
        }
    }
    Ok(())
}

/// A rule of the stratified normal background program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatalogRule {
    pub head: Literal,
    pub pos: Vec<Literal>,
    pub neg: Vec<Literal>,
}

impl fmt::Display for DatalogRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.pos.is_empty() || !self.neg.is_empty() {
            f.write_str(" :- ")?;
            write_body(f, &self.pos, &self.neg)?;
        }
        f.write_str(".")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DatalogProgram {
    pub rules: Vec<DatalogRule>,
}

impl fmt::Display for DatalogProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// A parsed K planning problem, partitioned by section.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KProgram {
    pub background: DatalogProgram,
    pub fluent_decls: Vec<Declaration>,
    pub action_decls: Vec<Declaration>,
    pub always: Vec<KStatement>,
    pub initially: Vec<KStatement>,
    pub no_concurrency: bool,
    pub query: Option<Query>,
}

impl KProgram {
    /// True once `expand_macros` has run: only core causation rules and
    /// executability conditions remain.
    pub fn is_core(&self) -> bool {
        self.always.iter().all(KStatement::is_core) && self.initially.iter().all(KStatement::is_core)
    }

    pub fn core_rules(&self) -> impl Iterator<Item = &CausationRule> {
        self.always
            .iter()
            .chain(self.initially.iter())
            .filter_map(|s| match s {
                KStatement::Rule(r) => Some(r),
                _ => None,
            })
    }

    pub fn exec_conditions(&self) -> impl Iterator<Item = &ExecCondition> {
        self.always.iter().filter_map(|s| match s {
            KStatement::Exec(e) => Some(e),
            _ => None,
        })
    }

    /// All constants occurring anywhere in the problem or its background.
    pub fn constants(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        let add_atom = |a: &Atom, out: &mut std::collections::BTreeSet<String>| {
            for t in &a.args {
                if let Term::Const(c) = t {
                    out.insert(c.clone());
                }
            }
        };
        for r in &self.background.rules {
            add_atom(&r.head.atom, &mut out);
            for l in r.pos.iter().chain(r.neg.iter()) {
                add_atom(&l.atom, &mut out);
            }
        }
        for d in self.fluent_decls.iter().chain(self.action_decls.iter()) {
            add_atom(&d.head, &mut out);
            for l in &d.requires {
                add_atom(&l.atom, &mut out);
            }
        }
        let add_stmt = |s: &KStatement, out: &mut std::collections::BTreeSet<String>| {
            let mut lits: Vec<&Literal> = Vec::new();
            match s {
                KStatement::Rule(r) => lits.extend(r.lit()),
                KStatement::Exec(e) => {
                    lits.extend(e.pre_pos.iter().chain(e.pre_neg.iter()));
                    for t in &e.action.args {
                        if let Term::Const(c) = t {
                            out.insert(c.clone());
                        }
                    }
                }
                KStatement::Inertial { fluent, post_pos, post_neg, pre_pos, pre_neg }
                | KStatement::Total { fluent, post_pos, post_neg, pre_pos, pre_neg } => {
                    lits.push(fluent);
                    lits.extend(post_pos.iter().chain(post_neg).chain(pre_pos).chain(pre_neg));
                }
                KStatement::Default { fluent } => lits.push(fluent),
                KStatement::Forbidden { post_pos, post_neg, pre_pos, pre_neg } => {
                    lits.extend(post_pos.iter().chain(post_neg).chain(pre_pos).chain(pre_neg));
                }
                KStatement::Nonexecutable { action, cond_pos, cond_neg } => {
                    lits.extend(cond_pos.iter().chain(cond_neg.iter()));
                    for t in &action.args {
                        if let Term::Const(c) = t {
                            out.insert(c.clone());
                        }
                    }
                }
            }
            for l in lits {
                add_atom(&l.atom, out);
            }
        };
        for s in self.always.iter().chain(self.initially.iter()) {
            add_stmt(s, &mut out);
        }
        if let Some(q) = &self.query {
            for l in q.goal_pos.iter().chain(q.goal_neg.iter()) {
                add_atom(&l.atom, &mut out);
            }
        }
        out
    }
}

impl fmt::Display for KProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.background.rules.is_empty() {
            writeln!(f, "background:")?;
            for r in &self.background.rules {
                writeln!(f, "    {r}")?;
            }
        }
        if !self.fluent_decls.is_empty() {
            writeln!(f, "fluents:")?;
            for d in &self.fluent_decls {
                writeln!(f, "    {d}")?;
            }
        }
        if !self.action_decls.is_empty() {
            writeln!(f, "actions:")?;
            for d in &self.action_decls {
                writeln!(f, "    {d}")?;
            }
        }
        if !self.always.is_empty() || self.no_concurrency {
            writeln!(f, "always:")?;
            for s in &self.always {
                writeln!(f, "    {s}")?;
            }
            if self.no_concurrency {
                writeln!(f, "    noConcurrency.")?;
            }
        }
        if !self.initially.is_empty() {
            writeln!(f, "initially:")?;
            for s in &self.initially {
                writeln!(f, "    {s}")?;
            }
        }
        if let Some(q) = &self.query {
            writeln!(f, "goal: {q}")?;
        }
        Ok(())
    }
}
