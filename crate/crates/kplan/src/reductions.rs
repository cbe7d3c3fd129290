//! Encodings of propositional satisfiability and quantified boolean
//! formulas as planning problems, together with exhaustive oracles used to
//! cross-check the planner on these families.
//!
//! Variable numbering convention: clause literals are nonzero integers in
//! DIMACS style; variables are grouped into consecutive blocks (e.g. for
//! an exists/forall/exists prefix the first block holds the outermost
//! variables).

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("setting every variable to true does not satisfy the matrix; normalize first")]
    AllTrueAssumption,
    #[error("oracle limit: {0} variables exceed the exhaustive bound")]
    TooManyVariables(usize),
}

pub const ORACLE_VAR_LIMIT: usize = 24;

pub type Clause = Vec<i32>;

fn check_var_limit(n: usize) -> Result<(), ReductionError> {
    if n > ORACLE_VAR_LIMIT {
        Err(ReductionError::TooManyVariables(n))
    } else {
        Ok(())
    }
}

fn clause_sat(c: &Clause, assign: &[bool]) -> bool {
    c.iter().any(|&l| assign[l.unsigned_abs() as usize - 1] == (l > 0))
}

pub fn eval_cnf(clauses: &[Clause], assign: &[bool]) -> bool {
    clauses.iter().all(|c| clause_sat(c, assign))
}

/// Exhaustive satisfiability check; returns a satisfying assignment.
pub fn oracle_sat(num_vars: usize, clauses: &[Clause]) -> Result<Option<Vec<bool>>, ReductionError> {
    check_var_limit(num_vars)?;
    for bits in 0u64..(1 << num_vars) {
        let assign: Vec<bool> = (0..num_vars).map(|i| bits >> i & 1 == 1).collect();
        if eval_cnf(clauses, &assign) {
            return Ok(Some(assign));
        }
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quant {
    Exists,
    Forall,
}

/// Exhaustive evaluation of a prenex QBF with CNF matrix. `blocks` gives
/// the quantifier and variable count per block, outermost first; block
/// variables are numbered consecutively starting at 1.
pub fn oracle_qbf(blocks: &[(Quant, usize)], clauses: &[Clause]) -> Result<bool, ReductionError> {
    let total: usize = blocks.iter().map(|&(_, n)| n).sum();
    check_var_limit(total)?;
    fn go(blocks: &[(Quant, usize)], clauses: &[Clause], assign: &mut Vec<bool>) -> bool {
        let Some((&(q, n), rest)) = blocks.split_first() else {
            return eval_cnf(clauses, assign);
        };
        let base = assign.len();
        assign.extend(std::iter::repeat(false).take(n));
        let result = 'outer: {
            for bits in 0u64..(1 << n) {
                for i in 0..n {
                    assign[base + i] = bits >> i & 1 == 1;
                }
                let sub = go(rest, clauses, assign);
                match q {
                    Quant::Exists if sub => break 'outer true,
                    Quant::Forall if !sub => break 'outer false,
                    _ => {}
                }
            }
            q == Quant::Forall
        };
        assign.truncate(base);
        result
    }
    Ok(go(blocks, clauses, &mut Vec::new()))
}

/// Whether the all-true assignment satisfies every clause.
pub fn all_true_satisfies(clauses: &[Clause]) -> bool {
    clauses.iter().all(|c| c.iter().any(|&l| l > 0))
}

/// Flip variable polarities so that the all-true assignment satisfies the
/// matrix, using a satisfying assignment found by the oracle. Flipping a
/// variable uniformly is a bijection on the assignments of its block, so
/// quantified truth is preserved. `None` when the matrix is unsatisfiable.
pub fn normalize_all_true(
    num_vars: usize,
    clauses: &[Clause],
) -> Result<Option<Vec<Clause>>, ReductionError> {
    let Some(assign) = oracle_sat(num_vars, clauses)? else {
        return Ok(None);
    };
    Ok(Some(
        clauses
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&l| if assign[l.unsigned_abs() as usize - 1] { l } else { -l })
                    .collect()
            })
            .collect(),
    ))
}

// ---------------------------------------------------------------------------
// Program generators
// ---------------------------------------------------------------------------

/// Name of a variable given the block layout: `blocks` maps consecutive
/// variable ranges to name prefixes.
fn var_name(blocks: &[(&str, usize)], v: usize) -> String {
    let mut base = 0;
    for &(prefix, n) in blocks {
        if v <= base + n {
            return format!("{prefix}{v}");
        }
        base += n;
    }
    panic!("variable {v} outside declared blocks");
}

fn lit_name(blocks: &[(&str, usize)], l: i32) -> String {
    let name = var_name(blocks, l.unsigned_abs() as usize);
    if l > 0 {
        name
    } else {
        format!("-{name}")
    }
}

fn neg_lit_name(blocks: &[(&str, usize)], l: i32) -> String {
    lit_name(blocks, -l)
}

/// Empty-plan satisfiability encoding: the query `p0 ? (0)` has an
/// optimistic plan (the empty one) iff the CNF is satisfiable.
pub fn sat_to_optimistic(num_vars: usize, clauses: &[Clause]) -> String {
    let blocks = [("x", num_vars)];
    let mut out = String::from("fluents: ");
    for v in 1..=num_vars {
        let _ = write!(out, "x{v}. ");
    }
    out.push_str("p0.\ninitially:\n");
    for v in 1..=num_vars {
        let _ = writeln!(out, "total x{v}.");
    }
    for c in clauses {
        let negs: Vec<String> = c.iter().map(|&l| neg_lit_name(&blocks, l)).collect();
        let _ = writeln!(out, "forbidden {}.", negs.join(", "));
    }
    out.push_str("caused p0.\ngoal: p0 ? (0)\n");
    out
}

/// Split a clause into the literals over the first `n_first` variables and
/// the rest.
fn split_clause(c: &Clause, n_first: usize) -> (Clause, Clause) {
    let (a, b): (Clause, Clause) =
        c.iter().partition(|&&l| (l.unsigned_abs() as usize) <= n_first);
    (a, b)
}

/// Security-check encoding of a forall/exists QBF: variables 1..=nx are
/// universal, the rest existential. The single-step plan over action
/// `alpha` is secure iff the QBF is true. Requires the all-true
/// assignment to satisfy the matrix so the plan is optimistic.
pub fn qbf2_to_secure_check(
    nx: usize,
    ny: usize,
    clauses: &[Clause],
) -> Result<String, ReductionError> {
    if !all_true_satisfies(clauses) {
        return Err(ReductionError::AllTrueAssumption);
    }
    let blocks = [("x", nx), ("y", ny)];
    let mut out = String::from("fluents: ");
    for v in 1..=nx + ny {
        let _ = write!(out, "{}. ", var_name(&blocks, v));
    }
    out.push_str("p0. p1.\nactions: alpha.\nalways: executable alpha.\n");
    for v in nx + 1..=nx + ny {
        let _ = writeln!(out, "total {} after p0.", var_name(&blocks, v));
    }
    for c in clauses {
        let (xs, ys) = split_clause(c, nx);
        let ks: Vec<String> = ys.iter().map(|&l| neg_lit_name(&blocks, l)).collect();
        let mut after: Vec<String> = vec!["p0".to_string()];
        after.extend(xs.iter().map(|&l| neg_lit_name(&blocks, l)));
        if ks.is_empty() {
            let _ = writeln!(out, "forbidden after {}.", after.join(", "));
        } else {
            let _ = writeln!(out, "forbidden {} after {}.", ks.join(", "), after.join(", "));
        }
    }
    out.push_str("caused p1 after p0.\ninitially:\n");
    for v in 1..=nx {
        let _ = writeln!(out, "total {}.", var_name(&blocks, v));
    }
    out.push_str("caused p0.\ngoal: p1 ? (1)\n");
    Ok(out)
}

/// The proper variant: no existential variables; the plan over `alpha` is
/// secure iff the CNF over the universal variables is unsatisfiable.
pub fn cnf_to_secure_check_proper(nx: usize, clauses: &[Clause]) -> String {
    let blocks = [("x", nx)];
    let mut out = String::from("fluents: ");
    for v in 1..=nx {
        let _ = write!(out, "x{v}. ");
    }
    out.push_str("p0. p1.\nactions: alpha.\nalways: executable alpha.\n");
    for c in clauses {
        let mut after: Vec<String> = vec!["p0".to_string()];
        after.extend(c.iter().map(|&l| neg_lit_name(&blocks, l)));
        let _ = writeln!(out, "caused p1 after {}.", after.join(", "));
    }
    out.push_str("initially:\n");
    for v in 1..=nx {
        let _ = writeln!(out, "total x{v}.");
    }
    out.push_str("caused p0.\ngoal: p1 ? (1)\n");
    out
}

/// Secure-plan-existence encoding of an exists/forall/exists QBF:
/// variables 1..=nz are the outer existentials (each with an action
/// `set_z<i>`), then nx universals, then ny inner existentials. Some
/// single-step plan over the set-actions is secure iff the QBF is true.
pub fn qbf3_to_secure_exists(
    nz: usize,
    nx: usize,
    ny: usize,
    clauses: &[Clause],
) -> Result<String, ReductionError> {
    if !all_true_satisfies(clauses) {
        return Err(ReductionError::AllTrueAssumption);
    }
    let blocks = [("z", nz), ("x", nx), ("y", ny)];
    let mut out = String::from("fluents: ");
    for v in 1..=nz + nx + ny {
        let _ = write!(out, "{}. ", var_name(&blocks, v));
    }
    out.push_str("p0. p1.\nactions: ");
    for v in 1..=nz {
        let _ = write!(out, "set_z{v}. ");
    }
    out.push_str("\nalways:\n");
    for v in 1..=nz {
        let _ = writeln!(out, "executable set_z{v}.");
        let _ = writeln!(out, "caused z{v} after p0, set_z{v}.");
        let _ = writeln!(out, "caused -z{v} after p0, not set_z{v}.");
    }
    out.push_str("caused p1 after p0.\n");
    for v in nz + nx + 1..=nz + nx + ny {
        let _ = writeln!(out, "total {} after p0.", var_name(&blocks, v));
    }
    for c in clauses {
        let (xs_and_zs, ys) = split_clause(c, nz + nx);
        let (zs, xs) = split_clause(&xs_and_zs, nz);
        // K-literals (checked in the successor state): over Z and Y.
        let mut ks: Vec<String> = zs.iter().map(|&l| neg_lit_name(&blocks, l)).collect();
        ks.extend(ys.iter().map(|&l| neg_lit_name(&blocks, l)));
        let mut after: Vec<String> = vec!["p0".to_string()];
        after.extend(xs.iter().map(|&l| neg_lit_name(&blocks, l)));
        if ks.is_empty() {
            let _ = writeln!(out, "forbidden after {}.", after.join(", "));
        } else {
            let _ = writeln!(out, "forbidden {} after {}.", ks.join(", "), after.join(", "));
        }
    }
    out.push_str("initially:\n");
    for v in nz + 1..=nz + nx {
        let _ = writeln!(out, "total {}.", var_name(&blocks, v));
    }
    out.push_str("caused p0.\ngoal: p1 ? (1)\n");
    Ok(out)
}

/// The proper/deterministic variant: no inner existentials; some
/// single-step plan over the set-actions is secure iff exists-Z forall-X
/// not-phi is true.
pub fn qbf2_to_secure_exists_proper(nz: usize, nx: usize, clauses: &[Clause]) -> String {
    let blocks = [("z", nz), ("x", nx)];
    let mut out = String::from("fluents: ");
    for v in 1..=nz + nx {
        let _ = write!(out, "{}. ", var_name(&blocks, v));
    }
    out.push_str("p0. p1.\nactions: ");
    for v in 1..=nz {
        let _ = write!(out, "set_z{v}. ");
    }
    out.push_str("\nalways:\n");
    for v in 1..=nz {
        let _ = writeln!(out, "executable set_z{v}.");
        let _ = writeln!(out, "caused z{v} after p0, set_z{v}.");
        let _ = writeln!(out, "caused -z{v} after p0, not set_z{v}.");
    }
    for c in clauses {
        let (zs, xs) = split_clause(c, nz);
        let ks: Vec<String> = zs.iter().map(|&l| neg_lit_name(&blocks, l)).collect();
        let mut after: Vec<String> = vec!["p0".to_string()];
        after.extend(xs.iter().map(|&l| neg_lit_name(&blocks, l)));
        if ks.is_empty() {
            let _ = writeln!(out, "caused p1 after {}.", after.join(", "));
        } else {
            let _ = writeln!(out, "caused p1 if {} after {}.", ks.join(", "), after.join(", "));
        }
    }
    out.push_str("initially:\n");
    for v in nz + 1..=nz + nx {
        let _ = writeln!(out, "total {}.", var_name(&blocks, v));
    }
    out.push_str("caused p0.\ngoal: p1 ? (1)\n");
    out
}

/// Pad a clause to exactly three literals by repetition.
fn pad3(c: &Clause) -> (i32, i32, i32) {
    match c.len() {
        1 => (c[0], c[0], c[0]),
        2 => (c[0], c[1], c[1]),
        3 => (c[0], c[1], c[2]),
        n => panic!("clause width {n} not supported"),
    }
}

/// Empty-plan security encoding over two disjoint CNFs: the empty plan for
/// `f ? (0)` is secure iff the first CNF is satisfiable and the second is
/// unsatisfiable. The result is a plain domain (it has no actions).
pub fn two_cnfs_to_secure_empty_plan(
    nx: usize,
    phi: &[Clause],
    ny: usize,
    psi: &[Clause],
) -> String {
    let xb = [("x", nx)];
    let yb = [("y", ny)];
    let mut out = String::from("fluents: ");
    for v in 1..=nx {
        let _ = write!(out, "x{v}. ");
    }
    for v in 1..=ny {
        let _ = write!(out, "y{v}. ");
    }
    out.push_str("f.\ninitially:\n");
    for v in 1..=nx {
        let _ = writeln!(out, "total x{v}.");
    }
    for c in phi {
        let (l1, l2, l3) = pad3(c);
        let _ = writeln!(
            out,
            "caused {} if {}, {}.",
            lit_name(&xb, l1),
            neg_lit_name(&xb, l2),
            neg_lit_name(&xb, l3)
        );
    }
    for v in 1..=ny {
        let _ = writeln!(out, "total y{v}.");
    }
    for c in psi {
        let (k1, k2, k3) = pad3(c);
        let _ = writeln!(
            out,
            "caused f if {}, {}, {}.",
            neg_lit_name(&yb, k1),
            neg_lit_name(&yb, k2),
            neg_lit_name(&yb, k3)
        );
    }
    out.push_str("goal: f ? (0)\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::ground_program;
    use crate::kparse::parse;
    use crate::plan::{self, Limits};
    use crate::secure;
    use crate::transition::{self, probe_plain, StepMode};

    fn gp(text: &str) -> crate::ground::GroundProgram {
        ground_program(&parse(text, None).unwrap()).unwrap().ground
    }

    fn plan_is_secure(g: &crate::ground::GroundProgram, p: &plan::Plan) -> bool {
        matches!(secure::check_secure(g, p, transition::DEFAULT_CAP).unwrap(), Ok(()))
    }

    #[test]
    fn oracle_sat_basics() {
        // (x1 or x2) and (-x1 or x2) => satisfiable with x2
        let a = oracle_sat(2, &[vec![1, 2], vec![-1, 2]]).unwrap().unwrap();
        assert!(a[1]);
        // x1 and -x1 => unsat
        assert!(oracle_sat(1, &[vec![1], vec![-1]]).unwrap().is_none());
        assert!(matches!(
            oracle_sat(30, &[]),
            Err(ReductionError::TooManyVariables(30))
        ));
    }

    #[test]
    fn oracle_qbf_basics() {
        // forall x1 exists x2: x1 <-> x2  (true)
        let iff = vec![vec![-1, 2], vec![1, -2]];
        assert!(oracle_qbf(&[(Quant::Forall, 1), (Quant::Exists, 1)], &iff).unwrap());
        // exists x2 forall x1: x1 <-> x2 is false (renumbered: forall inner)
        assert!(!oracle_qbf(&[(Quant::Exists, 1), (Quant::Forall, 1)], &iff).unwrap());
        // forall x1: x1 or -x1
        assert!(oracle_qbf(&[(Quant::Forall, 1)], &[vec![1, -1]]).unwrap());
    }

    #[test]
    fn normalization_preserves_and_fixes_all_true() {
        let clauses = vec![vec![-1, -2], vec![2, -1]];
        assert!(!all_true_satisfies(&clauses));
        let norm = normalize_all_true(2, &clauses).unwrap().unwrap();
        assert!(all_true_satisfies(&norm));
        // satisfiability is preserved
        assert!(oracle_sat(2, &norm).unwrap().is_some());
    }

    #[test]
    fn sat_reduction_matches_oracle() {
        for (n, clauses) in [
            (2, vec![vec![1, 2], vec![-1, 2]]),
            (1, vec![vec![1], vec![-1]]),
            (3, vec![vec![1, -2, 3], vec![-3], vec![2]]),
        ] {
            let g = gp(&sat_to_optimistic(n, &clauses));
            let plans =
                plan::optimistic_plans(&g, StepMode::Sequential, Limits::default()).unwrap();
            let expect = oracle_sat(n, &clauses).unwrap().is_some();
            assert_eq!(!plans.is_empty(), expect, "clauses {clauses:?}");
            if expect {
                assert_eq!(plans, vec![Vec::<Vec<usize>>::new()]);
            }
        }
    }

    #[test]
    fn forall_exists_security_check_matches_oracle() {
        // forall x1 exists y(2): x1 <-> y, with all-true clause forms
        let tru = vec![vec![-1, 2], vec![1, 2]]; // forall x exists y: (-x|y) & (x|y) -> y must be true: true
        let fls = vec![vec![1, 2], vec![1, -2]]; // needs x true always: false
        for (clauses, n) in [(&tru, "tru"), (&fls, "fls")] {
            let text = qbf2_to_secure_check(1, 1, clauses).unwrap();
            let g = gp(&text);
            let alpha = vec![g.act_id("alpha").unwrap()];
            let expect =
                oracle_qbf(&[(Quant::Forall, 1), (Quant::Exists, 1)], clauses).unwrap();
            assert_eq!(plan_is_secure(&g, &vec![alpha]), expect, "{n}");
        }
        let bad = vec![vec![-1, -2]];
        assert!(matches!(
            qbf2_to_secure_check(1, 1, &bad),
            Err(ReductionError::AllTrueAssumption)
        ));
    }

    #[test]
    fn proper_security_check_is_unsatisfiability() {
        for (n, clauses) in [
            (2, vec![vec![1], vec![-1]]),          // unsat -> secure
            (2, vec![vec![1, 2]]),                 // sat -> insecure
            (1, vec![vec![1], vec![-1], vec![1]]), // unsat
        ] {
            let g = gp(&cnf_to_secure_check_proper(n, &clauses));
            let alpha = vec![g.act_id("alpha").unwrap()];
            let expect = oracle_sat(n, &clauses).unwrap().is_none();
            assert_eq!(plan_is_secure(&g, &vec![alpha]), expect, "{clauses:?}");
        }
    }

    /// All single-step candidate plans over the set-actions.
    fn set_action_plans(g: &crate::ground::GroundProgram) -> Vec<plan::Plan> {
        let m = g.num_actions();
        (0u64..(1 << m))
            .map(|bits| vec![(0..m).filter(|&i| bits >> i & 1 == 1).collect::<Vec<_>>()])
            .collect()
    }

    #[test]
    fn exists_forall_exists_matches_oracle() {
        // z1, x1, y1: clauses (z|y) & (-z|x|y)
        let c1 = vec![vec![1, 3], vec![-1, 2, 3]];
        // (z|x) & (-z|-x) : exists z forall x ... no y -> use y unused
        let c2 = vec![vec![1, 2], vec![-1, 2]];
        for clauses in [&c1, &c2] {
            let text = qbf3_to_secure_exists(1, 1, 1, clauses).unwrap();
            let g = gp(&text);
            let expect = oracle_qbf(
                &[(Quant::Exists, 1), (Quant::Forall, 1), (Quant::Exists, 1)],
                clauses,
            )
            .unwrap();
            let found = set_action_plans(&g).iter().any(|p| plan_is_secure(&g, p));
            assert_eq!(found, expect, "{clauses:?}");
        }
    }

    #[test]
    fn proper_exists_forall_matches_oracle() {
        // exists z forall x not((z|x) & (-z|x)) : phi unsat when ... check directly
        for clauses in [
            vec![vec![1, 2], vec![-1, 2]], // phi sat iff x true; exists z forall x not phi? not phi = x false case -> forall x fails? evaluate via oracle below
            vec![vec![1], vec![-1]],       // phi always false -> trivially true
            vec![vec![1, -2], vec![-1, 2]],
        ] {
            let text = qbf2_to_secure_exists_proper(1, 1, &clauses);
            let g = gp(&text);
            // expected: exists Z forall X: phi is false
            let mut expect = false;
            for z in [false, true] {
                let mut all = true;
                for x in [false, true] {
                    if eval_cnf(&clauses, &[z, x]) {
                        all = false;
                        break;
                    }
                }
                if all {
                    expect = true;
                    break;
                }
            }
            let found = set_action_plans(&g).iter().any(|p| plan_is_secure(&g, p));
            assert_eq!(found, expect, "{clauses:?}");
        }
    }

    #[test]
    fn empty_plan_security_is_sat_and_unsat() {
        let sat = vec![vec![1, 2], vec![-1, 2]];
        let unsat = vec![vec![1], vec![-1]];
        for (phi, psi, expect) in [
            (&sat, &unsat, true),
            (&sat, &sat, false),
            (&unsat, &unsat, false),
        ] {
            let g = gp(&two_cnfs_to_secure_empty_plan(2, phi, 2, psi));
            assert_eq!(plan_is_secure(&g, &vec![]), expect);
        }
    }

    #[test]
    fn empty_plan_encoding_is_plain() {
        let g = gp(&two_cnfs_to_secure_empty_plan(
            2,
            &[vec![1, 2]],
            1,
            &[vec![1]],
        ));
        assert!(probe_plain(0, &g).is_plain());
    }
}
