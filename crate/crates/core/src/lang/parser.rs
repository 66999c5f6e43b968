//! Recursive-descent parser for programs, formulas and terms.
//!
//! Identifiers are variables when they start with an uppercase letter or `_`,
//! or when an enclosing `pi`, quantifier or procedure header binds them.

use crate::error::{ParseErrors, SyntaxError};
use crate::lang::ast::{ActionTemplate, Formula, Interrupt, Program};
use crate::lang::lexer::{lex, Spanned, Tok};
use crate::term::{ActionInstance, Term};

/// Names that look like calls but denote constructs the language does not have.
const UNKNOWN_CONSTRUCTS: &[&str] =
    &["if", "conc", "pconc", "iconc", "search", "proc", "interrupt", "sim", "prioritized_interrupts"];

pub(crate) struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    scope: Vec<String>,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    pub(crate) fn new(src: &str) -> PResult<Self> {
        Ok(Parser { toks: lex(src)?, pos: 0, scope: Vec::new() })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub(crate) fn here(&self) -> (usize, usize) {
        let s = &self.toks[self.pos];
        (s.line, s.col)
    }

    pub(crate) fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let (l, c) = self.here();
        Err(SyntaxError::new(l, c, msg))
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub(crate) fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, t: &Tok) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            self.err(format!("expected {t}, found {}", self.peek()))
        }
    }

    pub(crate) fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {other}")),
        }
    }

    pub(crate) fn int(&mut self) -> PResult<i64> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(n)
            }
            other => self.err(format!("expected integer, found {other}")),
        }
    }

    pub(crate) fn peek_ident(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    /// Skips tokens until just after the next `.` (statement recovery).
    pub(crate) fn recover_to_dot(&mut self) {
        while !self.at_eof() {
            if self.bump() == Tok::Dot {
                break;
            }
        }
    }

    pub(crate) fn with_scope<T>(&mut self, vars: &[String], f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        let n = self.scope.len();
        self.scope.extend(vars.iter().cloned());
        let r = f(self);
        self.scope.truncate(n);
        r
    }

    fn is_var_name(&self, s: &str) -> bool {
        s.starts_with(|c: char| c.is_uppercase() || c == '_') || self.scope.iter().any(|v| v == s)
    }

    // ---- terms ----

    pub(crate) fn term(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Term::Int(n))
            }
            Tok::LBracket => {
                self.bump();
                let items = self.comma_list(&Tok::RBracket, Self::term)?;
                Ok(Term::List(items))
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let args = self.comma_list(&Tok::RParen, Self::term)?;
                    if args.is_empty() {
                        return self.err("empty argument list");
                    }
                    Ok(Term::App(name, args))
                } else if self.is_var_name(&name) {
                    Ok(Term::Var(name))
                } else {
                    Ok(Term::Sym(name))
                }
            }
            other => self.err(format!("expected term, found {other}")),
        }
    }

    /// Parses `item {, item} close`, the opening delimiter already consumed.
    pub(crate) fn comma_list<T>(&mut self, close: &Tok, mut item: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        let mut out = Vec::new();
        if self.eat(close) {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.eat(close) {
                return Ok(out);
            }
            if !self.eat(&Tok::Comma) {
                return self.err(format!("expected `,` or {close}, found {}", self.peek()));
            }
        }
    }

    fn call_args(&mut self) -> PResult<Vec<Term>> {
        if self.eat(&Tok::LParen) {
            let args = self.comma_list(&Tok::RParen, Self::term)?;
            if args.is_empty() {
                return self.err("empty argument list");
            }
            Ok(args)
        } else {
            Ok(Vec::new())
        }
    }

    // ---- formulas ----

    pub(crate) fn formula(&mut self) -> PResult<Formula> {
        if let Tok::Ident(name) = self.peek().clone() {
            let is_call = *self.peek_at(1) == Tok::LParen;
            match name.as_str() {
                "true" if !is_call => {
                    self.bump();
                    return Ok(Formula::True);
                }
                "false" if !is_call => {
                    self.bump();
                    return Ok(Formula::False);
                }
                "and" | "or" if is_call => {
                    self.bump();
                    self.bump();
                    let parts = self.comma_list(&Tok::RParen, Self::formula)?;
                    if parts.is_empty() {
                        return self.err(format!("`{name}` needs at least one operand"));
                    }
                    return Ok(if name == "and" { Formula::And(parts) } else { Formula::Or(parts) });
                }
                "neg" if is_call => {
                    self.bump();
                    self.bump();
                    let f = self.formula()?;
                    self.expect(&Tok::RParen)?;
                    return Ok(Formula::not(f));
                }
                "some" | "all" if is_call => {
                    self.bump();
                    self.bump();
                    let v = self.ident()?;
                    self.expect(&Tok::Comma)?;
                    let sort = self.ident()?;
                    self.expect(&Tok::Comma)?;
                    let body = self.with_scope(std::slice::from_ref(&v), Self::formula)?;
                    self.expect(&Tok::RParen)?;
                    let body = Box::new(body);
                    return Ok(if name == "some" { Formula::Exists(v, sort, body) } else { Formula::Forall(v, sort, body) });
                }
                _ => {}
            }
        }
        let lhs = self.term()?;
        if self.eat(&Tok::Eq) {
            return Ok(Formula::Eq(lhs, self.term()?));
        }
        if self.eat(&Tok::Lt) {
            return Ok(Formula::Lt(lhs, self.term()?));
        }
        match lhs {
            Term::Sym(n) => Ok(Formula::Atom(n, vec![])),
            Term::App(n, args) => Ok(Formula::Atom(n, args)),
            other => self.err(format!("`{other}` is not a formula")),
        }
    }

    // ---- programs ----

    pub(crate) fn program(&mut self, top: bool) -> PResult<Program> {
        match self.peek().clone() {
            Tok::LBracket => {
                self.bump();
                let items = self.comma_list(&Tok::RBracket, |p| p.program(false))?;
                Ok(raw_seq(items))
            }
            Tok::Question => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let f = self.formula()?;
                self.expect(&Tok::RParen)?;
                Ok(Program::Test(f))
            }
            Tok::Ident(name) => self.named_program(name, top),
            other => self.err(format!("expected program, found {other}")),
        }
    }

    fn named_program(&mut self, name: String, top: bool) -> PResult<Program> {
        let is_call = *self.peek_at(1) == Tok::LParen;
        let keyword = matches!(
            name.as_str(),
            "ndet" | "while" | "rrobin" | "star" | "searchn" | "pi" | "prioritized_interrupts"
        );
        if keyword && !is_call {
            self.bump();
            return self.err(format!("construct `{name}` needs arguments"));
        }
        match name.as_str() {
            "ndet" => {
                self.bump();
                self.bump();
                let branches = self.comma_list(&Tok::RParen, |p| p.program(false))?;
                if branches.is_empty() {
                    return self.err("`ndet` needs at least one branch");
                }
                Ok(Program::Choice(branches.into_iter().map(split_guard).collect()))
            }
            "while" => {
                self.bump();
                self.bump();
                let c = self.formula()?;
                self.expect(&Tok::Comma)?;
                let body = self.program(false)?;
                self.expect(&Tok::RParen)?;
                Ok(Program::While(c, Box::new(body)))
            }
            "rrobin" => {
                self.bump();
                self.bump();
                let parts = self.comma_list(&Tok::RParen, |p| p.program(false))?;
                if parts.is_empty() {
                    return self.err("`rrobin` needs at least one branch");
                }
                Ok(raw_conc(parts))
            }
            "star" | "searchn" => {
                self.bump();
                self.bump();
                let body = self.program(false)?;
                self.expect(&Tok::Comma)?;
                let (l, c) = self.here();
                let n = self.int()?;
                if n <= 0 || n > u32::MAX as i64 {
                    return Err(SyntaxError::new(l, c, format!("`{name}` bound must be a positive integer, got {n}")));
                }
                self.expect(&Tok::RParen)?;
                let b = Box::new(body);
                Ok(if name == "star" { Program::Star(b, n as u32) } else { Program::Search(b, n as u32) })
            }
            "pi" => {
                self.bump();
                self.bump();
                let v = self.ident()?;
                self.expect(&Tok::Comma)?;
                let sort = self.ident()?;
                self.expect(&Tok::Comma)?;
                let body = self.with_scope(std::slice::from_ref(&v), |p| p.program(false))?;
                self.expect(&Tok::RParen)?;
                Ok(Program::Pick(v, sort, Box::new(body)))
            }
            "prioritized_interrupts" if top => {
                self.bump();
                self.bump();
                self.expect(&Tok::LBracket)?;
                let items = self.comma_list(&Tok::RBracket, |p| {
                    if !p.peek_ident("interrupt") {
                        return p.err("expected `interrupt(trigger, program)`");
                    }
                    p.bump();
                    p.expect(&Tok::LParen)?;
                    let trigger = p.formula()?;
                    p.expect(&Tok::Comma)?;
                    let body = p.program(false)?;
                    p.expect(&Tok::RParen)?;
                    Ok((trigger, body))
                })?;
                self.expect(&Tok::RParen)?;
                if items.is_empty() {
                    return self.err("`prioritized_interrupts` needs at least one interrupt");
                }
                Ok(Program::Interrupts(
                    items
                        .into_iter()
                        .enumerate()
                        .map(|(i, (trigger, body))| Interrupt { priority: i as i64, trigger, body })
                        .collect(),
                ))
            }
            "prioritized_interrupts" => self.err("`prioritized_interrupts` is only allowed at top level"),
            n if UNKNOWN_CONSTRUCTS.contains(&n) => self.err(format!("unknown construct `{n}`")),
            _ => {
                self.bump();
                let args = self.call_args()?;
                Ok(Program::Act(ActionTemplate::new(name, args)))
            }
        }
    }
}

/// `[]` is Nil, `[p]` is p, longer lists nest to the right.
fn raw_seq(items: Vec<Program>) -> Program {
    let mut it = items.into_iter().rev();
    match it.next() {
        None => Program::Nil,
        Some(last) => it.fold(last, |acc, p| Program::Seq(Box::new(p), Box::new(acc))),
    }
}

fn raw_conc(items: Vec<Program>) -> Program {
    let mut it = items.into_iter().rev();
    let last = it.next().expect("nonempty");
    it.fold(last, |acc, p| Program::Conc(Box::new(p), Box::new(acc)))
}

/// A branch written `[?(g), rest...]` is guarded by `g`; anything else by `true`.
fn split_guard(branch: Program) -> (Formula, Program) {
    match branch {
        Program::Test(g) => (g, Program::Nil),
        Program::Seq(first, rest) => match *first {
            Program::Test(g) => (g, *rest),
            other => (Formula::True, Program::Seq(Box::new(other), rest)),
        },
        other => (Formula::True, other),
    }
}

fn finish<T>(mut p: Parser, f: impl FnOnce(&mut Parser) -> PResult<T>) -> Result<T, ParseErrors> {
    let v = f(&mut p)?;
    if !p.at_eof() {
        let (l, c) = p.here();
        return Err(SyntaxError::new(l, c, format!("unexpected {} after end of input", p.peek())).into());
    }
    Ok(v)
}

/// Parses a process program.
pub fn parse_process(text: &str) -> Result<Program, ParseErrors> {
    finish(Parser::new(text)?, |p| p.program(true))
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseErrors> {
    finish(Parser::new(text)?, Parser::formula)
}

pub fn parse_term(text: &str) -> Result<Term, ParseErrors> {
    finish(Parser::new(text)?, Parser::term)
}

/// Parses a ground action such as `disconnect(a3)`.
pub fn parse_action(text: &str) -> Result<ActionInstance, ParseErrors> {
    let t = parse_term(text)?;
    ActionInstance::from_term(&t).ok_or_else(|| SyntaxError::new(1, 1, format!("`{text}` is not a ground action")).into())
}
