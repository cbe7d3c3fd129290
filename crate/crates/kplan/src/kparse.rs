//! Front end for the K language: lexer, parser, macro expansion, and the
//! safety restriction on default-negated type literals.

use std::fmt;

use thiserror::Error;

use crate::ast::*;

#[derive(Debug, Error)]
pub enum KParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unknown section keyword `{name}`")]
    UnknownSection { line: usize, col: usize, name: String },
    #[error("{line}:{col}: unterminated statement (expected `.`)")]
    Unterminated { line: usize, col: usize },
    #[error("predicate `{pred}` used with arity {found}, declared with arity {declared}")]
    ArityMismatch { pred: String, found: usize, declared: usize },
    #[error("action literal `{0}` must be positive")]
    NegatedAction(String),
    #[error("head of rule must be a fluent literal or `false`, got `{0}`")]
    BadRuleHead(String),
    #[error("`{0}` is not a declared action")]
    NotAnAction(String),
    #[error("goal literal `{0}` must be a ground fluent literal")]
    BadGoalLiteral(String),
    #[error("declaration head variable `{var}` does not occur in the requires part of `{decl}`")]
    UnboundDeclVariable { var: String, decl: String },
    #[error("`total` requires a positive fluent, got `{0}`")]
    TotalNegated(String),
    #[error("statement not allowed in the `initially` section: `{0}`")]
    BadInitialStatement(String),
    #[error("initial state constraints must be static, but `{0}` has an after part")]
    DynamicInitial(String),
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    Int(String),
    Dot,
    Comma,
    LParen,
    RParen,
    Minus,
    Question,
    Eq,
    Neq,
    Colon,
    ColonDash,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Var(s) | Tok::Int(s) => f.write_str(s),
            Tok::Dot => f.write_str("."),
            Tok::Comma => f.write_str(","),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
            Tok::Minus => f.write_str("-"),
            Tok::Question => f.write_str("?"),
            Tok::Eq => f.write_str("="),
            Tok::Neq => f.write_str("<>"),
            Tok::Colon => f.write_str(":"),
            Tok::ColonDash => f.write_str(":-"),
        }
    }
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize, usize)>, KParseError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        let bump = |chars: &mut std::iter::Peekable<std::str::Chars>, line: &mut usize, col: &mut usize| {
            let c = chars.next().unwrap();
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            c
        };
        match c {
            c if c.is_whitespace() => {
                bump(&mut chars, &mut line, &mut col);
            }
            '%' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump(&mut chars, &mut line, &mut col);
                }
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(bump(&mut chars, &mut line, &mut col));
                    } else {
                        break;
                    }
                }
                let tok = if s.starts_with(|c: char| c.is_ascii_uppercase()) {
                    Tok::Var(s)
                } else {
                    Tok::Ident(s)
                };
                out.push((tok, tl, tc));
            }
            '0'..='9' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        s.push(bump(&mut chars, &mut line, &mut col));
                    } else {
                        break;
                    }
                }
                out.push((Tok::Int(s), tl, tc));
            }
            '.' => {
                bump(&mut chars, &mut line, &mut col);
                out.push((Tok::Dot, tl, tc));
            }
            ',' => {
                bump(&mut chars, &mut line, &mut col);
                out.push((Tok::Comma, tl, tc));
            }
            '(' => {
                bump(&mut chars, &mut line, &mut col);
                out.push((Tok::LParen, tl, tc));
            }
            ')' => {
                bump(&mut chars, &mut line, &mut col);
                out.push((Tok::RParen, tl, tc));
            }
            '-' => {
                bump(&mut chars, &mut line, &mut col);
                out.push((Tok::Minus, tl, tc));
            }
            '?' => {
                bump(&mut chars, &mut line, &mut col);
                out.push((Tok::Question, tl, tc));
            }
            '=' => {
                bump(&mut chars, &mut line, &mut col);
                out.push((Tok::Eq, tl, tc));
            }
            '<' => {
                bump(&mut chars, &mut line, &mut col);
                if chars.peek() == Some(&'>') {
                    bump(&mut chars, &mut line, &mut col);
                    out.push((Tok::Neq, tl, tc));
                } else {
                    return Err(KParseError::Syntax { line: tl, col: tc, msg: "expected `<>`".into() });
                }
            }
            ':' => {
                bump(&mut chars, &mut line, &mut col);
                if chars.peek() == Some(&'-') {
                    bump(&mut chars, &mut line, &mut col);
                    out.push((Tok::ColonDash, tl, tc));
                } else {
                    out.push((Tok::Colon, tl, tc));
                }
            }
            other => {
                return Err(KParseError::Syntax {
                    line: tl,
                    col: tc,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(out)
}

impl Lexer {
    fn new(text: &str) -> Result<Self, KParseError> {
        Ok(Lexer { toks: lex(text)?, pos: 0 })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|(t, _, _)| t)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|(_, l, c)| (*l, *c))
            .unwrap_or((1, 1))
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> KParseError {
        let (line, col) = self.here();
        KParseError::Syntax { line, col, msg: msg.into() }
    }

    fn expect(&mut self, t: Tok) -> Result<(), KParseError> {
        match self.next() {
            Some(got) if got == t => Ok(()),
            Some(got) => Err(self.err(format!("expected `{t}`, found `{got}`"))),
            None => Err(self.err(format!("expected `{t}`, found end of input"))),
        }
    }

    fn eat_ident(&mut self, kw: &str) -> bool {
        if self.peek() == Some(&Tok::Ident(kw.to_string())) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn at_ident(&self, kw: &str) -> bool {
        self.peek() == Some(&Tok::Ident(kw.to_string()))
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

/// A positive/negative split of body literals, as produced by parsing a
/// comma-separated condition.
#[derive(Default)]
struct Body {
    pos: Vec<Literal>,
    neg: Vec<Literal>,
}

fn parse_term(lx: &mut Lexer) -> Result<Term, KParseError> {
    match lx.next() {
        Some(Tok::Var(v)) => Ok(Term::Var(v)),
        Some(Tok::Ident(c)) | Some(Tok::Int(c)) => Ok(Term::Const(c)),
        other => Err(lx.err(format!(
            "expected a term, found `{}`",
            other.map(|t| t.to_string()).unwrap_or_else(|| "end of input".into())
        ))),
    }
}

fn parse_atom(lx: &mut Lexer) -> Result<Atom, KParseError> {
    let pred = match lx.next() {
        Some(Tok::Ident(s)) => s,
        other => {
            return Err(lx.err(format!(
                "expected a predicate name, found `{}`",
                other.map(|t| t.to_string()).unwrap_or_else(|| "end of input".into())
            )))
        }
    };
    let mut args = Vec::new();
    if lx.peek() == Some(&Tok::LParen) {
        lx.next();
        loop {
            args.push(parse_term(lx)?);
            match lx.next() {
                Some(Tok::Comma) => continue,
                Some(Tok::RParen) => break,
                _ => return Err(lx.err("expected `,` or `)` in argument list")),
            }
        }
    }
    Ok(Atom::new(pred, args))
}

fn eq_atom(a: Term, b: Term) -> Atom {
    Atom::new(EQ_PRED, vec![a, b])
}

/// Parse one element of a body: a literal, `not` literal, `X = Y`, or
/// `X <> Y` (read as `not (X = Y)`).
fn parse_body_elem(lx: &mut Lexer, body: &mut Body) -> Result<(), KParseError> {
    if lx.eat_ident("not") {
        // not (X = Y) | not X = Y | not l
        if lx.peek() == Some(&Tok::LParen) {
            lx.next();
            let a = parse_term(lx)?;
            lx.expect(Tok::Eq)?;
            let b = parse_term(lx)?;
            lx.expect(Tok::RParen)?;
            body.neg.push(Literal::pos(Kind::Type, eq_atom(a, b)));
            return Ok(());
        }
        let lit = parse_plain_literal(lx)?;
        if lit.positive && lit.atom.args.is_empty() && matches!(lx.peek(), Some(Tok::Eq)) {
            lx.next();
            let b = parse_term(lx)?;
            body.neg.push(Literal::pos(Kind::Type, eq_atom(Term::Const(lit.atom.pred), b)));
        } else {
            body.neg.push(lit);
        }
        return Ok(());
    }
    // A variable or integer can only start an (in)equality.
    if matches!(lx.peek(), Some(Tok::Var(_)) | Some(Tok::Int(_))) {
        let a = parse_term(lx)?;
        match lx.next() {
            Some(Tok::Eq) => {
                let b = parse_term(lx)?;
                body.pos.push(Literal::pos(Kind::Type, eq_atom(a, b)));
            }
            Some(Tok::Neq) => {
                let b = parse_term(lx)?;
                body.neg.push(Literal::pos(Kind::Type, eq_atom(a, b)));
            }
            _ => return Err(lx.err("expected `=` or `<>`")),
        }
        return Ok(());
    }
    let lit = parse_plain_literal(lx)?;
    if lit.positive && lit.atom.args.is_empty() {
        match lx.peek() {
            Some(Tok::Eq) => {
                lx.next();
                let b = parse_term(lx)?;
                body.pos.push(Literal::pos(Kind::Type, eq_atom(Term::Const(lit.atom.pred), b)));
                return Ok(());
            }
            Some(Tok::Neq) => {
                lx.next();
                let b = parse_term(lx)?;
                body.neg.push(Literal::pos(Kind::Type, eq_atom(Term::Const(lit.atom.pred), b)));
                return Ok(());
            }
            _ => {}
        }
    }
    body.pos.push(lit);
    Ok(())
}

/// `[-] p(t1,...,tn)`; both `-p` and `- p` are accepted.
fn parse_plain_literal(lx: &mut Lexer) -> Result<Literal, KParseError> {
    let positive = if lx.peek() == Some(&Tok::Minus) {
        lx.next();
        false
    } else {
        true
    };
    let atom = parse_atom(lx)?;
    Ok(Literal { positive, kind: Kind::Type, atom })
}

fn parse_body(lx: &mut Lexer, stop: &[Tok]) -> Result<Body, KParseError> {
    let mut body = Body::default();
    loop {
        parse_body_elem(lx, &mut body)?;
        if lx.peek() == Some(&Tok::Comma) {
            // Stop at section-like boundaries only on a terminator.
            lx.next();
            continue;
        }
        break;
    }
    match lx.peek() {
        Some(t) if stop.contains(t) => Ok(body),
        Some(Tok::Ident(kw)) if kw == "after" => Ok(body),
        _ => Err(lx.err("expected `,`, `after`, or a statement terminator")),
    }
}

/// Parse optional `if B` and `after A` parts up to (but not consuming) `.`.
fn parse_if_after(lx: &mut Lexer) -> Result<(Body, Body), KParseError> {
    let mut post = Body::default();
    let mut pre = Body::default();
    if lx.eat_ident("if") {
        post = parse_body(lx, &[Tok::Dot])?;
    }
    if lx.eat_ident("after") {
        pre = parse_body(lx, &[Tok::Dot])?;
    }
    Ok((post, pre))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Background,
    Fluents,
    Actions,
    Always,
    Initially,
    Goal,
}

/// Parse K source (and optionally a separate background file) into a
/// [`KProgram`]. Literal kinds are resolved against the declarations and
/// basic well-formedness is checked.
pub fn parse(text: &str, background_text: Option<&str>) -> Result<KProgram, KParseError> {
    let mut prog = KProgram::default();
    if let Some(bg) = background_text {
        prog.background = parse_datalog(bg)?;
    }
    let mut lx = Lexer::new(text)?;
    let mut section = None;
    while let Some(tok) = lx.peek() {
        // Section headers: `name :`
        if let Tok::Ident(name) = tok {
            if lx.peek2() == Some(&Tok::Colon) {
                let name = name.clone();
                let (line, col) = lx.here();
                section = Some(match name.as_str() {
                    "background" => Section::Background,
                    "fluents" => Section::Fluents,
                    "actions" => Section::Actions,
                    "always" => Section::Always,
                    "initially" => Section::Initially,
                    "goal" => Section::Goal,
                    _ => return Err(KParseError::UnknownSection { line, col, name }),
                });
                lx.next();
                lx.next();
                continue;
            }
        }
        if lx.eat_ident("noConcurrency") {
            lx.expect(Tok::Dot)?;
            prog.no_concurrency = true;
            continue;
        }
        match section {
            None => return Err(lx.err("statement outside of any section")),
            Some(Section::Background) => {
                let rule = parse_datalog_rule(&mut lx)?;
                prog.background.rules.push(rule);
            }
            Some(Section::Fluents) => prog.fluent_decls.push(parse_declaration(&mut lx)?),
            Some(Section::Actions) => prog.action_decls.push(parse_declaration(&mut lx)?),
            Some(Section::Always) => {
                let stmt = parse_statement(&mut lx, false)?;
                prog.always.push(stmt);
            }
            Some(Section::Initially) => {
                let stmt = parse_statement(&mut lx, true)?;
                prog.initially.push(stmt);
            }
            Some(Section::Goal) => {
                let q = parse_query(&mut lx)?;
                prog.query = Some(q);
            }
        }
    }
    classify(&mut prog)?;
    Ok(prog)
}

fn parse_declaration(lx: &mut Lexer) -> Result<Declaration, KParseError> {
    let head = parse_atom(lx)?;
    let mut requires = Vec::new();
    if lx.eat_ident("requires") {
        let body = parse_body(lx, &[Tok::Dot])?;
        if !body.neg.is_empty() {
            return Err(lx.err("requires part must not contain default negation"));
        }
        requires = body.pos;
    }
    lx.expect(Tok::Dot)?;
    Ok(Declaration { head, requires })
}

fn parse_statement(lx: &mut Lexer, initial: bool) -> Result<KStatement, KParseError> {
    let stmt = if lx.eat_ident("caused") {
        let head = if lx.eat_ident("false") { None } else { Some(parse_plain_literal(lx)?) };
        let (post, pre) = parse_if_after(lx)?;
        KStatement::Rule(CausationRule {
            head,
            post_pos: post.pos,
            post_neg: post.neg,
            pre_pos: pre.pos,
            pre_neg: pre.neg,
            is_initial: initial,
        })
    } else if lx.eat_ident("executable") {
        let action = parse_atom(lx)?;
        let body = if lx.eat_ident("if") { parse_body(lx, &[Tok::Dot])? } else { Body::default() };
        KStatement::Exec(ExecCondition { action, pre_pos: body.pos, pre_neg: body.neg })
    } else if lx.eat_ident("inertial") {
        let fluent = parse_plain_literal(lx)?;
        let (post, pre) = parse_if_after(lx)?;
        KStatement::Inertial {
            fluent,
            post_pos: post.pos,
            post_neg: post.neg,
            pre_pos: pre.pos,
            pre_neg: pre.neg,
        }
    } else if lx.eat_ident("default") {
        let fluent = parse_plain_literal(lx)?;
        KStatement::Default { fluent }
    } else if lx.eat_ident("total") {
        let fluent = parse_plain_literal(lx)?;
        let (post, pre) = parse_if_after(lx)?;
        KStatement::Total {
            fluent,
            post_pos: post.pos,
            post_neg: post.neg,
            pre_pos: pre.pos,
            pre_neg: pre.neg,
        }
    } else if lx.eat_ident("forbidden") {
        let post = if lx.at_ident("after") || lx.peek() == Some(&Tok::Dot) {
            Body::default()
        } else {
            parse_body(lx, &[Tok::Dot])?
        };
        let pre = if lx.eat_ident("after") { parse_body(lx, &[Tok::Dot])? } else { Body::default() };
        KStatement::Forbidden {
            post_pos: post.pos,
            post_neg: post.neg,
            pre_pos: pre.pos,
            pre_neg: pre.neg,
        }
    } else if lx.eat_ident("nonexecutable") {
        let action = parse_atom(lx)?;
        let body = if lx.eat_ident("if") { parse_body(lx, &[Tok::Dot])? } else { Body::default() };
        KStatement::Nonexecutable { action, cond_pos: body.pos, cond_neg: body.neg }
    } else {
        // `caused` is optional when both the if and after parts are empty.
        let head = parse_plain_literal(lx)?;
        let (post, pre) = parse_if_after(lx)?;
        KStatement::Rule(CausationRule {
            head: Some(head),
            post_pos: post.pos,
            post_neg: post.neg,
            pre_pos: pre.pos,
            pre_neg: pre.neg,
            is_initial: initial,
        })
    };
    lx.expect(Tok::Dot)?;
    if initial {
        match &stmt {
            KStatement::Rule(r) if !r.is_static() => {
                return Err(KParseError::DynamicInitial(r.to_string()))
            }
            KStatement::Inertial { .. } | KStatement::Exec(_) | KStatement::Nonexecutable { .. } => {
                return Err(KParseError::BadInitialStatement(stmt.to_string()))
            }
            KStatement::Total { pre_pos, pre_neg, .. } if !pre_pos.is_empty() || !pre_neg.is_empty() => {
                return Err(KParseError::DynamicInitial(stmt.to_string()))
            }
            KStatement::Forbidden { pre_pos, pre_neg, .. }
                if !pre_pos.is_empty() || !pre_neg.is_empty() =>
            {
                return Err(KParseError::DynamicInitial(stmt.to_string()))
            }
            _ => {}
        }
    }
    Ok(stmt)
}

fn parse_query(lx: &mut Lexer) -> Result<Query, KParseError> {
    let mut body = Body::default();
    if lx.peek() != Some(&Tok::Question) {
        loop {
            parse_body_elem(lx, &mut body)?;
            if lx.peek() == Some(&Tok::Comma) {
                lx.next();
                continue;
            }
            break;
        }
    }
    lx.expect(Tok::Question)?;
    lx.expect(Tok::LParen)?;
    let n = match lx.next() {
        Some(Tok::Int(s)) => s.parse::<usize>().map_err(|_| lx.err("invalid plan length"))?,
        _ => return Err(lx.err("expected plan length")),
    };
    lx.expect(Tok::RParen)?;
    if lx.peek() == Some(&Tok::Dot) {
        lx.next();
    }
    Ok(Query { goal_pos: body.pos, goal_neg: body.neg, plan_length: n })
}

// ---------------------------------------------------------------------------
// Datalog front end
// ---------------------------------------------------------------------------

/// Parse a background program: facts and rules `head :- body.` without
/// function symbols.
pub fn parse_datalog(text: &str) -> Result<DatalogProgram, KParseError> {
    let mut lx = Lexer::new(text)?;
    let mut rules = Vec::new();
    while lx.peek().is_some() {
        rules.push(parse_datalog_rule(&mut lx)?);
    }
    Ok(DatalogProgram { rules })
}

fn parse_datalog_rule(lx: &mut Lexer) -> Result<DatalogRule, KParseError> {
    let head = parse_plain_literal(lx)?;
    let mut body = Body::default();
    if lx.peek() == Some(&Tok::ColonDash) {
        lx.next();
        loop {
            parse_body_elem(lx, &mut body)?;
            if lx.peek() == Some(&Tok::Comma) {
                lx.next();
                continue;
            }
            break;
        }
    }
    lx.expect(Tok::Dot)?;
    Ok(DatalogRule { head, pos: body.pos, neg: body.neg })
}

// ---------------------------------------------------------------------------
// Kind resolution and well-formedness
// ---------------------------------------------------------------------------

struct Symbols {
    fluents: std::collections::HashMap<String, usize>,
    actions: std::collections::HashMap<String, usize>,
}

impl Symbols {
    fn kind_of(&self, pred: &str) -> Kind {
        if self.fluents.contains_key(pred) {
            Kind::Fluent
        } else if self.actions.contains_key(pred) {
            Kind::Action
        } else {
            Kind::Type
        }
    }

    fn check(&self, lit: &mut Literal) -> Result<(), KParseError> {
        lit.kind = self.kind_of(&lit.atom.pred);
        let declared = match lit.kind {
            Kind::Fluent => self.fluents.get(&lit.atom.pred).copied(),
            Kind::Action => self.actions.get(&lit.atom.pred).copied(),
            Kind::Type => None,
        };
        if let Some(declared) = declared {
            if declared != lit.atom.args.len() {
                return Err(KParseError::ArityMismatch {
                    pred: lit.atom.pred.clone(),
                    found: lit.atom.args.len(),
                    declared,
                });
            }
        }
        if lit.kind == Kind::Action && !lit.positive {
            return Err(KParseError::NegatedAction(lit.to_string()));
        }
        Ok(())
    }
}

fn classify(prog: &mut KProgram) -> Result<(), KParseError> {
    let mut symbols = Symbols {
        fluents: std::collections::HashMap::new(),
        actions: std::collections::HashMap::new(),
    };
    for d in &prog.fluent_decls {
        symbols.fluents.insert(d.head.pred.clone(), d.head.args.len());
    }
    for d in &prog.action_decls {
        symbols.actions.insert(d.head.pred.clone(), d.head.args.len());
    }
    for d in prog.fluent_decls.iter().chain(prog.action_decls.iter()) {
        for var in d.head.variables() {
            if !d.requires.iter().any(|t| t.atom.variables().any(|v| v == var)) {
                return Err(KParseError::UnboundDeclVariable {
                    var: var.to_string(),
                    decl: d.to_string(),
                });
            }
        }
    }
    let stmts = prog.always.iter_mut().chain(prog.initially.iter_mut());
    for stmt in stmts {
        match stmt {
            KStatement::Rule(r) => {
                if let Some(h) = &mut r.head {
                    symbols.check(h)?;
                    if h.kind != Kind::Fluent {
                        return Err(KParseError::BadRuleHead(h.to_string()));
                    }
                }
                for l in r
                    .post_pos
                    .iter_mut()
                    .chain(r.post_neg.iter_mut())
                    .chain(r.pre_pos.iter_mut())
                    .chain(r.pre_neg.iter_mut())
                {
                    symbols.check(l)?;
                }
                for l in r.post_pos.iter().chain(r.post_neg.iter()) {
                    if l.kind == Kind::Action {
                        return Err(KParseError::BadRuleHead(format!(
                            "action literal `{l}` in if part of `{r}`"
                        )));
                    }
                }
            }
            KStatement::Exec(e) => {
                if symbols.kind_of(&e.action.pred) != Kind::Action {
                    return Err(KParseError::NotAnAction(e.action.to_string()));
                }
                for l in e.pre_pos.iter_mut().chain(e.pre_neg.iter_mut()) {
                    symbols.check(l)?;
                }
            }
            KStatement::Inertial { fluent, post_pos, post_neg, pre_pos, pre_neg }
            | KStatement::Total { fluent, post_pos, post_neg, pre_pos, pre_neg } => {
                symbols.check(fluent)?;
                if fluent.kind != Kind::Fluent {
                    return Err(KParseError::BadRuleHead(fluent.to_string()));
                }
                for l in post_pos
                    .iter_mut()
                    .chain(post_neg.iter_mut())
                    .chain(pre_pos.iter_mut())
                    .chain(pre_neg.iter_mut())
                {
                    symbols.check(l)?;
                }
            }
            KStatement::Default { fluent } => {
                symbols.check(fluent)?;
                if fluent.kind != Kind::Fluent {
                    return Err(KParseError::BadRuleHead(fluent.to_string()));
                }
            }
            KStatement::Forbidden { post_pos, post_neg, pre_pos, pre_neg } => {
                for l in post_pos
                    .iter_mut()
                    .chain(post_neg.iter_mut())
                    .chain(pre_pos.iter_mut())
                    .chain(pre_neg.iter_mut())
                {
                    symbols.check(l)?;
                }
            }
            KStatement::Nonexecutable { action, cond_pos, cond_neg } => {
                if symbols.kind_of(&action.pred) != Kind::Action {
                    return Err(KParseError::NotAnAction(action.to_string()));
                }
                for l in cond_pos.iter_mut().chain(cond_neg.iter_mut()) {
                    symbols.check(l)?;
                }
            }
        }
    }
    if let Some(q) = &mut prog.query {
        for l in q.goal_pos.iter_mut().chain(q.goal_neg.iter_mut()) {
            symbols.check(l)?;
            if l.kind != Kind::Fluent || !l.is_ground() {
                return Err(KParseError::BadGoalLiteral(l.to_string()));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Macro expansion
// ---------------------------------------------------------------------------

/// Expand all macros into core causation rules. `noConcurrency` stays as a
/// marker on the program; it is expanded over the ground actions at
/// grounding time.
pub fn expand_macros(prog: &KProgram) -> Result<KProgram, KParseError> {
    let mut out = prog.clone();
    out.always = expand_section(&prog.always, false)?;
    out.initially = expand_section(&prog.initially, true)?;
    Ok(out)
}

fn expand_section(stmts: &[KStatement], initial: bool) -> Result<Vec<KStatement>, KParseError> {
    let mut out = Vec::new();
    for stmt in stmts {
        match stmt {
            KStatement::Rule(r) => {
                let mut r = r.clone();
                r.is_initial = initial;
                out.push(KStatement::Rule(r));
            }
            KStatement::Exec(e) => out.push(KStatement::Exec(e.clone())),
            // inertial f if B after A  =>  caused f if not -.f, B after f, A.
            KStatement::Inertial { fluent, post_pos, post_neg, pre_pos, pre_neg } => {
                let mut neg = vec![fluent.complement()];
                neg.extend(post_neg.iter().cloned());
                let mut pre = vec![fluent.clone()];
                pre.extend(pre_pos.iter().cloned());
                out.push(KStatement::Rule(CausationRule {
                    head: Some(fluent.clone()),
                    post_pos: post_pos.clone(),
                    post_neg: neg,
                    pre_pos: pre,
                    pre_neg: pre_neg.clone(),
                    is_initial: initial,
                }));
            }
            // default f  =>  caused f if not -.f.
            KStatement::Default { fluent } => {
                out.push(KStatement::Rule(CausationRule {
                    head: Some(fluent.clone()),
                    post_pos: vec![],
                    post_neg: vec![fluent.complement()],
                    pre_pos: vec![],
                    pre_neg: vec![],
                    is_initial: initial,
                }));
            }
            // total f if B after A  =>  caused f if not -f, B after A.
            //                           caused -f if not f, B after A.
            KStatement::Total { fluent, post_pos, post_neg, pre_pos, pre_neg } => {
                if !fluent.positive {
                    return Err(KParseError::TotalNegated(fluent.to_string()));
                }
                for head in [fluent.clone(), fluent.complement()] {
                    let mut neg = vec![head.complement()];
                    neg.extend(post_neg.iter().cloned());
                    out.push(KStatement::Rule(CausationRule {
                        head: Some(head),
                        post_pos: post_pos.clone(),
                        post_neg: neg,
                        pre_pos: pre_pos.clone(),
                        pre_neg: pre_neg.clone(),
                        is_initial: initial,
                    }));
                }
            }
            // forbidden B after A  =>  caused false if B after A.
            KStatement::Forbidden { post_pos, post_neg, pre_pos, pre_neg } => {
                out.push(KStatement::Rule(CausationRule {
                    head: None,
                    post_pos: post_pos.clone(),
                    post_neg: post_neg.clone(),
                    pre_pos: pre_pos.clone(),
                    pre_neg: pre_neg.clone(),
                    is_initial: initial,
                }));
            }
            // nonexecutable a if B  =>  caused false after a, B.
            KStatement::Nonexecutable { action, cond_pos, cond_neg } => {
                let mut pre = vec![Literal::pos(Kind::Action, action.clone())];
                pre.extend(cond_pos.iter().cloned());
                out.push(KStatement::Rule(CausationRule {
                    head: None,
                    post_pos: vec![],
                    post_neg: vec![],
                    pre_pos: pre,
                    pre_neg: cond_neg.clone(),
                    is_initial: initial,
                }));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Safety restriction
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SafetyDiagnostic {
    pub statement: String,
    pub variable: String,
}

impl fmt::Display for SafetyDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "variable `{}` occurs only in default-negated type literals in `{}`",
            self.variable, self.statement
        )
    }
}

/// Check the safety restriction: every variable occurring in a
/// default-negated type literal must also occur in some literal that is not
/// a default-negated type literal. The background program is checked for
/// standard LP safety. Returns an empty list iff the program is safe.
pub fn check_safety(prog: &KProgram) -> Vec<SafetyDiagnostic> {
    let mut diags = Vec::new();
    let check_rule =
        |name: String, neg: Vec<&Literal>, others: Vec<&Literal>, diags: &mut Vec<SafetyDiagnostic>| {
            let mut reported = std::collections::BTreeSet::new();
            for l in &neg {
                if l.kind != Kind::Type {
                    continue;
                }
                for var in l.atom.variables() {
                    let safe = others
                        .iter()
                        .any(|o| o.atom.variables().any(|v| v == var))
                        || neg
                            .iter()
                            .any(|o| o.kind != Kind::Type && o.atom.variables().any(|v| v == var));
                    if !safe && reported.insert(var.to_string()) {
                        diags.push(SafetyDiagnostic { statement: name.clone(), variable: var.to_string() });
                    }
                }
            }
        };
    for stmt in prog.always.iter().chain(prog.initially.iter()) {
        match stmt {
            KStatement::Rule(r) => {
                let neg: Vec<&Literal> = r.post_neg.iter().chain(r.pre_neg.iter()).collect();
                let others: Vec<&Literal> =
                    r.head.iter().chain(r.post_pos.iter()).chain(r.pre_pos.iter()).collect();
                check_rule(r.to_string(), neg, others, &mut diags);
            }
            KStatement::Exec(e) => {
                let head = Literal::pos(Kind::Action, e.action.clone());
                let neg: Vec<&Literal> = e.pre_neg.iter().collect();
                let mut others: Vec<&Literal> = e.pre_pos.iter().collect();
                others.push(&head);
                check_rule(e.to_string(), neg, others, &mut diags);
                continue;
            }
            // Macros expand to rules whose non-negated parts contain the
            // fluent itself, so checking the written parts suffices.
            _ => {
                if let Ok(core) = expand_section(std::slice::from_ref(stmt), false) {
                    for s in core {
                        if let KStatement::Rule(r) = s {
                            let neg: Vec<&Literal> =
                                r.post_neg.iter().chain(r.pre_neg.iter()).collect();
                            let others: Vec<&Literal> =
                                r.head.iter().chain(r.post_pos.iter()).chain(r.pre_pos.iter()).collect();
                            check_rule(stmt.to_string(), neg, others, &mut diags);
                        }
                    }
                }
            }
        }
    }
    // Standard LP safety for the background.
    for r in &prog.background.rules {
        let mut reported = std::collections::BTreeSet::new();
        let bound: Vec<&str> = r.pos.iter().flat_map(|l| l.atom.variables()).collect();
        for var in r.head.atom.variables().chain(r.neg.iter().flat_map(|l| l.atom.variables())) {
            if !bound.contains(&var) && reported.insert(var.to_string()) {
                diags.push(SafetyDiagnostic { statement: r.to_string(), variable: var.to_string() });
            }
        }
    }
    diags
}
