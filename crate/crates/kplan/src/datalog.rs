//! Bottom-up evaluation of stratified Datalog with strong negation, used
//! for the static background knowledge. Produces the unique model that
//! grounding and type lookups are resolved against.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::ast::*;

#[derive(Debug, Error)]
pub enum DatalogError {
    #[error("background is not stratified; negation cycle through: {}", preds.join(", "))]
    Unstratified { preds: Vec<String> },
    #[error("background is inconsistent on `{0}`")]
    Inconsistent(String),
    #[error("equality with unbound variables in `{0}`")]
    UnboundEquality(String),
    #[error("non-ground negative literal `{lit}` in `{rule}`")]
    NonGroundNegative { lit: String, rule: String },
}

/// A relation name together with its strong-negation sign.
type Pred = (bool, String);

fn pred_of(l: &Literal) -> Pred {
    (l.positive, l.atom.pred.clone())
}

/// The (unique) model of a stratified background program. Tuples are stored
/// per signed predicate; consistency across signs is checked on
/// construction.
#[derive(Clone, Debug, Default)]
pub struct Model {
    tuples: HashMap<Pred, BTreeSet<Vec<String>>>,
}

impl Model {
    fn insert(&mut self, pred: Pred, args: Vec<String>) -> bool {
        self.tuples.entry(pred).or_default().insert(args)
    }

    fn contains(&self, pred: &Pred, args: &[String]) -> bool {
        self.tuples.get(pred).map(|s| s.contains(args)).unwrap_or(false)
    }

    /// Truth of a ground literal, with `=` evaluated as a builtin.
    pub fn holds(&self, lit: &Literal) -> bool {
        if lit.atom.pred == EQ_PRED {
            let eq = lit.atom.args[0] == lit.atom.args[1];
            return eq == lit.positive;
        }
        let args: Vec<String> = lit.atom.args.iter().map(|t| t.name().to_string()).collect();
        self.contains(&(lit.positive, lit.atom.pred.clone()), &args)
    }

    /// All tuples of a signed predicate, for use as a type extension.
    pub fn extension(&self, positive: bool, pred: &str) -> impl Iterator<Item = &Vec<String>> {
        self.tuples.get(&(positive, pred.to_string())).into_iter().flatten()
    }

    /// All facts as display strings, sorted; handy for dumps and tests.
    pub fn facts(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .tuples
            .iter()
            .flat_map(|((positive, pred), tuples)| {
                tuples.iter().map(move |args| {
                    let sign = if *positive { "" } else { "-" };
                    if args.is_empty() {
                        format!("{sign}{pred}")
                    } else {
                        format!("{sign}{pred}({})", args.join(","))
                    }
                })
            })
            .collect();
        out.sort();
        out
    }
}

/// Assign a stratum to every signed predicate. Errors out when default
/// negation occurs in a cycle.
pub fn stratify(prog: &DatalogProgram) -> Result<HashMap<Pred, usize>, DatalogError> {
    let mut strata: HashMap<Pred, usize> = HashMap::new();
    let mut preds: BTreeSet<Pred> = BTreeSet::new();
    for r in &prog.rules {
        preds.insert(pred_of(&r.head));
        for l in r.pos.iter().chain(r.neg.iter()) {
            if l.atom.pred != EQ_PRED {
                preds.insert(pred_of(l));
            }
        }
    }
    for p in &preds {
        strata.insert(p.clone(), 0);
    }
    let limit = preds.len();
    loop {
        let mut changed = false;
        for r in &prog.rules {
            let h = pred_of(&r.head);
            let mut need = strata[&h];
            for l in &r.pos {
                if l.atom.pred != EQ_PRED {
                    need = need.max(strata[&pred_of(l)]);
                }
            }
            for l in &r.neg {
                if l.atom.pred != EQ_PRED {
                    need = need.max(strata[&pred_of(l)] + 1);
                }
            }
            if need > strata[&h] {
                strata.insert(h, need);
                changed = true;
            }
        }
        if !changed {
            return Ok(strata);
        }
        if strata.values().any(|&s| s > limit) {
            let mut cyc: Vec<String> = strata
                .iter()
                .filter(|(_, &s)| s > limit)
                .map(|((pos, p), _)| if *pos { p.clone() } else { format!("-{p}") })
                .collect();
            cyc.sort();
            return Err(DatalogError::Unstratified { preds: cyc });
        }
    }
}

type Subst = HashMap<String, String>;

fn apply(term: &Term, theta: &Subst) -> Option<String> {
    match term {
        Term::Const(c) => Some(c.clone()),
        Term::Var(v) => theta.get(v).cloned(),
    }
}

/// Match the positive body literals in order, extending `theta`; equality
/// literals bind when one side is known. Calls `found` on every complete
/// match.
fn join(
    rule: &DatalogRule,
    lits: &[&Literal],
    theta: &mut Subst,
    model: &Model,
    found: &mut dyn FnMut(&Subst) -> Result<(), DatalogError>,
) -> Result<(), DatalogError> {
    let Some((lit, rest)) = lits.split_first() else {
        return found(theta);
    };
    if lit.atom.pred == EQ_PRED {
        let a = apply(&lit.atom.args[0], theta);
        let b = apply(&lit.atom.args[1], theta);
        return match (a, b) {
            (Some(a), Some(b)) => {
                if a == b {
                    join(rule, rest, theta, model, found)
                } else {
                    Ok(())
                }
            }
            (Some(a), None) => {
                let Term::Var(v) = &lit.atom.args[1] else { unreachable!() };
                theta.insert(v.clone(), a);
                let r = join(rule, rest, theta, model, found);
                theta.remove(v);
                r
            }
            (None, Some(b)) => {
                let Term::Var(v) = &lit.atom.args[0] else { unreachable!() };
                theta.insert(v.clone(), b);
                let r = join(rule, rest, theta, model, found);
                theta.remove(v);
                r
            }
            (None, None) => Err(DatalogError::UnboundEquality(rule.to_string())),
        };
    }
    let pred = pred_of(lit);
    let tuples: Vec<Vec<String>> = model.extension(pred.0, &pred.1).cloned().collect();
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
                    Some(existing) => {
                        if existing != val {
                            ok = false;
                            break;
                        }
                    }
                    None => {
                        theta.insert(v.clone(), val.clone());
                        bound.push(v.clone());
                    }
                },
            }
        }
        if ok {
            join(rule, rest, theta, model, found)?;
        }
        for v in bound {
            theta.remove(&v);
        }
    }
    Ok(())
}

fn ground_atom(atom: &Atom, theta: &Subst, rule: &DatalogRule) -> Result<Vec<String>, DatalogError> {
    atom.args
        .iter()
        .map(|t| {
            apply(t, theta).ok_or_else(|| DatalogError::NonGroundNegative {
                lit: atom.to_string(),
                rule: rule.to_string(),
            })
        })
        .collect()
}

/// Evaluate a stratified program bottom-up, stratum by stratum, and check
/// global consistency of strong negation.
pub fn evaluate(prog: &DatalogProgram) -> Result<Model, DatalogError> {
    let strata = stratify(prog)?;
    let max = strata.values().copied().max().unwrap_or(0);
    let mut model = Model::default();
    for level in 0..=max {
        let rules: Vec<&DatalogRule> =
            prog.rules.iter().filter(|r| strata[&pred_of(&r.head)] == level).collect();
        loop {
            let mut derived: Vec<(Pred, Vec<String>)> = Vec::new();
            for rule in &rules {
                // Put equalities last so their variables are bound first.
                let mut pos: Vec<&Literal> =
                    rule.pos.iter().filter(|l| l.atom.pred != EQ_PRED).collect();
                pos.extend(rule.pos.iter().filter(|l| l.atom.pred == EQ_PRED));
                let mut theta = Subst::new();
                join(rule, &pos, &mut theta, &model, &mut |theta| {
                    for l in &rule.neg {
                        if l.atom.pred == EQ_PRED {
                            let a = apply(&l.atom.args[0], theta).ok_or_else(|| {
                                DatalogError::NonGroundNegative {
                                    lit: l.to_string(),
                                    rule: rule.to_string(),
                                }
                            })?;
                            let b = apply(&l.atom.args[1], theta).ok_or_else(|| {
                                DatalogError::NonGroundNegative {
                                    lit: l.to_string(),
                                    rule: rule.to_string(),
                                }
                            })?;
                            if a == b {
                                return Ok(());
                            }
                        } else {
                            let args = ground_atom(&l.atom, theta, rule)?;
                            if model.contains(&pred_of(l), &args) {
                                return Ok(());
                            }
                        }
                    }
                    let args = ground_atom(&rule.head.atom, theta, rule)?;
                    derived.push((pred_of(&rule.head), args));
                    Ok(())
                })?;
            }
            let mut changed = false;
            for (pred, args) in derived {
                if model.insert(pred, args) {
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }
    for ((positive, pred), tuples) in &model.tuples {
        if *positive {
            continue;
        }
        for args in tuples {
            if model.contains(&(true, pred.clone()), args) {
                let atom = if args.is_empty() {
                    pred.clone()
                } else {
                    format!("{pred}({})", args.join(","))
                };
                return Err(DatalogError::Inconsistent(atom));
            }
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kparse::parse_datalog;

    fn eval(text: &str) -> Model {
        evaluate(&parse_datalog(text).unwrap()).unwrap()
    }

    #[test]
    fn blocks_background_derives_locations() {
        let m = eval("block(a). block(b). block(c). location(table). location(B) :- block(B).");
        assert_eq!(
            m.facts(),
            vec![
                "block(a)",
                "block(b)",
                "block(c)",
                "location(a)",
                "location(b)",
                "location(c)",
                "location(table)",
            ]
        );
    }

    #[test]
    fn strong_negation_facts_coexist() {
        let m = eval("r(b,a). -r(a,b). s(a,a). s(a,b). s(b,b).");
        assert_eq!(m.facts(), vec!["-r(a,b)", "r(b,a)", "s(a,a)", "s(a,b)", "s(b,b)"]);
        let lit = crate::kparse::parse_datalog("-r(a,b).").unwrap().rules[0].head.clone();
        assert!(m.holds(&lit));
        assert!(!m.holds(&lit.complement()));
    }

    #[test]
    fn negation_cycle_is_rejected() {
        let err = evaluate(&parse_datalog("p :- not p.").unwrap()).unwrap_err();
        match err {
            DatalogError::Unstratified { preds } => assert_eq!(preds, vec!["p"]),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn stratified_negation_evaluates_in_order() {
        let m = eval("r. q :- not r. p :- not q.");
        assert_eq!(m.facts(), vec!["p", "r"]);
    }

    #[test]
    fn contradictory_facts_are_inconsistent() {
        let err = evaluate(&parse_datalog("p(a). -p(a).").unwrap()).unwrap_err();
        assert!(matches!(err, DatalogError::Inconsistent(_)));
    }

    #[test]
    fn transitive_closure() {
        let m = eval("e(a,b). e(b,c). e(c,d). t(X,Y) :- e(X,Y). t(X,Z) :- t(X,Y), e(Y,Z).");
        assert!(m.facts().contains(&"t(a,d)".to_string()));
        assert_eq!(m.facts().iter().filter(|f| f.starts_with("t(")).count(), 6);
    }

    #[test]
    fn inequality_builtin_filters_pairs() {
        let m = eval("d(a). d(b). p(X,Y) :- d(X), d(Y), X <> Y.");
        let facts = m.facts();
        let pairs: Vec<&String> = facts.iter().filter(|f| f.starts_with("p(")).collect();
        assert_eq!(pairs, vec!["p(a,b)", "p(b,a)"]);
    }

    #[test]
    fn positive_equality_binds() {
        let m = eval("d(a). d(b). p(X,Y) :- d(X), Y = X.");
        let facts = m.facts();
        let pairs: Vec<&String> = facts.iter().filter(|f| f.starts_with("p(")).collect();
        assert_eq!(pairs, vec!["p(a,a)", "p(b,b)"]);
    }

    #[test]
    fn extension_lookup_by_sign() {
        let m = eval("r(b,a). -r(a,b).");
        let pos: Vec<_> = m.extension(true, "r").collect();
        let neg: Vec<_> = m.extension(false, "r").collect();
        assert_eq!(pos, vec![&vec!["b".to_string(), "a".to_string()]]);
        assert_eq!(neg, vec![&vec!["a".to_string(), "b".to_string()]]);
    }
}
