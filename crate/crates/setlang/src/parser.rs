//! Concrete syntax: lexer, recursive-descent parser and rendering.
//!
//! The syntax is ASCII: `&` / `or` for conjunction and disjunction,
//! `{a,b/T}` for extensional sets, `[m,n]` for integer intervals,
//! `(a,b)` for pairs, `b?a` for tagged atoms, `=`, `neq`, `in`, `nin`,
//! `=<` (plus the derived `<`, `>`, `>=`) as infix constraint symbols and
//! `un`, `disj`, `size`, `id`, `inv`, `comp` as prefix ones.  `%` starts
//! a line comment.  Rendering is the inverse of parsing: for every value
//! produced by the parser, parsing its rendering yields an equal value.

use crate::ast::*;
use std::fmt;
use thiserror::Error;

/// Position-annotated parse error.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("parse error at line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Slash,
    Question,
    Amp,
    Eq,
    Plus,
    Minus,
    Star,
    Leq,
    Lt,
    Gt,
    Geq,
    ColonDash,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Var(s) => write!(f, "'{s}'"),
            Tok::Int(n) => write!(f, "'{n}'"),
            Tok::LParen => write!(f, "'('"),
            Tok::RParen => write!(f, "')'"),
            Tok::LBrace => write!(f, "'{{'"),
            Tok::RBrace => write!(f, "'}}'"),
            Tok::LBracket => write!(f, "'['"),
            Tok::RBracket => write!(f, "']'"),
            Tok::Comma => write!(f, "','"),
            Tok::Dot => write!(f, "'.'"),
            Tok::Slash => write!(f, "'/'"),
            Tok::Question => write!(f, "'?'"),
            Tok::Amp => write!(f, "'&'"),
            Tok::Eq => write!(f, "'='"),
            Tok::Plus => write!(f, "'+'"),
            Tok::Minus => write!(f, "'-'"),
            Tok::Star => write!(f, "'*'"),
            Tok::Leq => write!(f, "'=<'"),
            Tok::Lt => write!(f, "'<'"),
            Tok::Gt => write!(f, "'>'"),
            Tok::Geq => write!(f, "'>='"),
            Tok::ColonDash => write!(f, "':-'"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

struct Lexer;

impl Lexer {
    fn lex(src: &str) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
        let mut out = Vec::new();
        let mut line = 1usize;
        let mut col = 1usize;
        let mut chars = src.chars().peekable();
        while let Some(&c) = chars.peek() {
            let (tl, tc) = (line, col);
            let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
                let c = chars.next().unwrap();
                if c == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                c
            };
            match c {
                ' ' | '\t' | '\r' | '\n' => {
                    bump(&mut chars);
                }
                '%' => {
                    while let Some(&c) = chars.peek() {
                        bump(&mut chars);
                        if c == '\n' {
                            break;
                        }
                    }
                }
                '0'..='9' => {
                    let mut s = String::new();
                    while let Some(&d) = chars.peek() {
                        if d.is_ascii_digit() {
                            s.push(bump(&mut chars));
                        } else {
                            break;
                        }
                    }
                    let n = s.parse::<i64>().map_err(|_| ParseError {
                        line: tl,
                        col: tc,
                        msg: format!("integer literal '{s}' out of range"),
                    })?;
                    out.push((Tok::Int(n), tl, tc));
                }
                'a'..='z' => {
                    let mut s = String::new();
                    while let Some(&d) = chars.peek() {
                        if d.is_ascii_alphanumeric() || d == '_' {
                            s.push(bump(&mut chars));
                        } else {
                            break;
                        }
                    }
                    out.push((Tok::Ident(s), tl, tc));
                }
                'A'..='Z' | '_' => {
                    let mut s = String::new();
                    while let Some(&d) = chars.peek() {
                        if d.is_ascii_alphanumeric() || d == '_' {
                            s.push(bump(&mut chars));
                        } else {
                            break;
                        }
                    }
                    out.push((Tok::Var(s), tl, tc));
                }
                '(' => {
                    bump(&mut chars);
                    out.push((Tok::LParen, tl, tc));
                }
                ')' => {
                    bump(&mut chars);
                    out.push((Tok::RParen, tl, tc));
                }
                '{' => {
                    bump(&mut chars);
                    out.push((Tok::LBrace, tl, tc));
                }
                '}' => {
                    bump(&mut chars);
                    out.push((Tok::RBrace, tl, tc));
                }
                '[' => {
                    bump(&mut chars);
                    out.push((Tok::LBracket, tl, tc));
                }
                ']' => {
                    bump(&mut chars);
                    out.push((Tok::RBracket, tl, tc));
                }
                ',' => {
                    bump(&mut chars);
                    out.push((Tok::Comma, tl, tc));
                }
                '.' => {
                    bump(&mut chars);
                    out.push((Tok::Dot, tl, tc));
                }
                '/' => {
                    bump(&mut chars);
                    out.push((Tok::Slash, tl, tc));
                }
                '?' => {
                    bump(&mut chars);
                    out.push((Tok::Question, tl, tc));
                }
                '&' => {
                    bump(&mut chars);
                    out.push((Tok::Amp, tl, tc));
                }
                '+' => {
                    bump(&mut chars);
                    out.push((Tok::Plus, tl, tc));
                }
                '-' => {
                    bump(&mut chars);
                    out.push((Tok::Minus, tl, tc));
                }
                '*' => {
                    bump(&mut chars);
                    out.push((Tok::Star, tl, tc));
                }
                '=' => {
                    bump(&mut chars);
                    if chars.peek() == Some(&'<') {
                        bump(&mut chars);
                        out.push((Tok::Leq, tl, tc));
                    } else {
                        out.push((Tok::Eq, tl, tc));
                    }
                }
                '<' => {
                    bump(&mut chars);
                    out.push((Tok::Lt, tl, tc));
                }
                '>' => {
                    bump(&mut chars);
                    if chars.peek() == Some(&'=') {
                        bump(&mut chars);
                        out.push((Tok::Geq, tl, tc));
                    } else {
                        out.push((Tok::Gt, tl, tc));
                    }
                }
                ':' => {
                    bump(&mut chars);
                    if chars.peek() == Some(&'-') {
                        bump(&mut chars);
                        out.push((Tok::ColonDash, tl, tc));
                    } else {
                        return Err(ParseError {
                            line: tl,
                            col: tc,
                            msg: "unexpected ':'".to_string(),
                        });
                    }
                }
                other => {
                    return Err(ParseError {
                        line: tl,
                        col: tc,
                        msg: format!("unexpected character '{other}'"),
                    })
                }
            }
        }
        out.push((Tok::Eof, line, col));
        Ok(out)
    }
}

/// Words that cannot be used as atoms or basic-type names.
const RESERVED: &[&str] = &["or", "in", "nin", "neq", "dec", "true", "false"];

/// Primitive prefix constraint symbols.
fn prim_sym(name: &str) -> Option<Sym> {
    match name {
        "un" => Some(Sym::Un),
        "disj" => Some(Sym::Disj),
        "size" => Some(Sym::Size),
        "id" => Some(Sym::Id),
        "inv" => Some(Sym::Inv),
        "comp" => Some(Sym::Comp),
        _ => None,
    }
}

struct Parser<'g> {
    toks: Vec<(Tok, usize, usize)>,
    i: usize,
    gen: &'g mut VarGen,
}

impl<'g> Parser<'g> {
    fn new(src: &str, gen: &'g mut VarGen) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: Lexer::lex(src)?,
            i: 0,
            gen,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }
    fn peek2(&self) -> &Tok {
        &self.toks[(self.i + 1).min(self.toks.len() - 1)].0
    }
    fn pos(&self) -> (usize, usize) {
        (self.toks[self.i].1, self.toks[self.i].2)
    }
    fn next(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.pos();
        Err(ParseError {
            line,
            col,
            msg: msg.into(),
        })
    }
    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected {t}, found {}", self.peek()))
        }
    }

    fn register_var(&mut self, name: &str) -> Result<Term, ParseError> {
        if name == "_" {
            return Ok(Term::Var(self.gen.fresh("_")));
        }
        if self.gen.is_generated(name) {
            return self.err(format!(
                "variable name '{name}' collides with a generated fresh variable"
            ));
        }
        self.gen.register(name);
        Ok(Term::var(name))
    }

    // ---- terms ----

    fn term(&mut self) -> Result<Term, ParseError> {
        let mut t = self.mul_term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.next();
                    t = Term::add(t, self.mul_term()?);
                }
                Tok::Minus => {
                    self.next();
                    t = Term::sub(t, self.mul_term()?);
                }
                _ => return Ok(t),
            }
        }
    }

    fn mul_term(&mut self) -> Result<Term, ParseError> {
        let mut t = self.primary()?;
        while *self.peek() == Tok::Star {
            self.next();
            let rhs = self.primary()?;
            // Linearity: one side of a product must be a constant.
            let lin = matches!(t, Term::Int(_)) || matches!(rhs, Term::Int(_));
            if !lin {
                return self.err("non-linear product: one factor must be an integer constant");
            }
            t = Term::mul(t, rhs);
        }
        Ok(t)
    }

    fn primary(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.next();
                Ok(Term::Int(n))
            }
            Tok::Minus => {
                self.next();
                match self.peek().clone() {
                    Tok::Int(n) => {
                        self.next();
                        Ok(Term::Int(-n))
                    }
                    _ => self.err("'-' is binary; a leading '-' must be followed by an integer literal"),
                }
            }
            Tok::Var(v) => {
                self.next();
                self.register_var(&v)
            }
            Tok::Ident(name) => {
                if RESERVED.contains(&name.as_str()) {
                    return self.err(format!("reserved word '{name}' cannot be used as an atom"));
                }
                self.next();
                if *self.peek() == Tok::Question {
                    self.next();
                    match self.peek().clone() {
                        Tok::Ident(a) => {
                            if RESERVED.contains(&a.as_str()) {
                                return self.err(format!(
                                    "reserved word '{a}' cannot be used as an atom"
                                ));
                            }
                            self.next();
                            Ok(Term::tagged(&name, &a))
                        }
                        other => self.err(format!(
                            "a tagged atom must be 'base?atom'; found {other} after '?'"
                        )),
                    }
                } else if *self.peek() == Tok::LParen {
                    self.err(format!("compound term '{name}(...)' is not part of the term language"))
                } else {
                    Ok(Term::atom(&name))
                }
            }
            Tok::LBrace => {
                self.next();
                if *self.peek() == Tok::RBrace {
                    self.next();
                    return Ok(Term::Empty);
                }
                let mut elems = vec![self.term()?];
                while *self.peek() == Tok::Comma {
                    self.next();
                    elems.push(self.term()?);
                }
                let tail = if *self.peek() == Tok::Slash {
                    self.next();
                    self.term()?
                } else {
                    Term::Empty
                };
                self.expect(Tok::RBrace)?;
                Ok(Term::set_lit(elems, tail))
            }
            Tok::LBracket => {
                self.next();
                let lo = self.term()?;
                self.expect(Tok::Comma)?;
                let hi = self.term()?;
                self.expect(Tok::RBracket)?;
                Ok(Term::interval(lo, hi))
            }
            Tok::LParen => {
                self.next();
                let a = self.term()?;
                if *self.peek() == Tok::Comma {
                    self.next();
                    let b = self.term()?;
                    self.expect(Tok::RParen)?;
                    Ok(Term::pair(a, b))
                } else {
                    self.expect(Tok::RParen)?;
                    Ok(a)
                }
            }
            other => self.err(format!("expected a term, found {other}")),
        }
    }

    // ---- types ----

    fn type_expr(&mut self) -> Result<Type, ParseError> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.next();
                Ok(Type::Var(v))
            }
            Tok::Ident(name) => {
                self.next();
                match name.as_str() {
                    "int" => Ok(Type::Int),
                    "set" => {
                        self.expect(Tok::LParen)?;
                        let t = self.type_expr()?;
                        self.expect(Tok::RParen)?;
                        Ok(Type::set(t))
                    }
                    "prod" | "rel" => {
                        self.expect(Tok::LParen)?;
                        let a = self.type_expr()?;
                        self.expect(Tok::Comma)?;
                        let b = self.type_expr()?;
                        self.expect(Tok::RParen)?;
                        Ok(if name == "prod" {
                            Type::prod(a, b)
                        } else {
                            Type::rel(a, b)
                        })
                    }
                    "enum" => {
                        self.expect(Tok::LParen)?;
                        self.expect(Tok::LBracket)?;
                        let mut atoms = Vec::new();
                        loop {
                            match self.peek().clone() {
                                Tok::Ident(a) => {
                                    if RESERVED.contains(&a.as_str()) {
                                        return self.err(format!(
                                            "reserved word '{a}' cannot be an enum atom"
                                        ));
                                    }
                                    self.next();
                                    atoms.push(a);
                                }
                                other => {
                                    return self.err(format!("expected an atom, found {other}"))
                                }
                            }
                            if *self.peek() == Tok::Comma {
                                self.next();
                            } else {
                                break;
                            }
                        }
                        self.expect(Tok::RBracket)?;
                        self.expect(Tok::RParen)?;
                        if atoms.len() < 2 {
                            return self.err("an enum type needs at least two atoms");
                        }
                        let mut seen = std::collections::BTreeSet::new();
                        for a in &atoms {
                            if !seen.insert(a.clone()) {
                                return self.err(format!("duplicate atom '{a}' in enum type"));
                            }
                        }
                        Ok(Type::Enum(atoms))
                    }
                    _ => {
                        if RESERVED.contains(&name.as_str()) {
                            self.err(format!("reserved word '{name}' cannot be a type name"))
                        } else {
                            Ok(Type::basic(&name))
                        }
                    }
                }
            }
            other => self.err(format!("expected a type, found {other}")),
        }
    }

    // ---- formulas ----

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.conj()?;
        while *self.peek() == Tok::Ident("or".into()) {
            self.next();
            f = Formula::or(f, self.conj()?);
        }
        Ok(f)
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.prim_formula()?;
        while *self.peek() == Tok::Amp {
            self.next();
            f = Formula::and(f, self.prim_formula()?);
        }
        Ok(f)
    }

    fn prim_formula(&mut self) -> Result<Formula, ParseError> {
        if let Tok::Ident(name) = self.peek().clone() {
            match name.as_str() {
                "true" => {
                    self.next();
                    return Ok(Formula::True);
                }
                "false" => {
                    self.next();
                    return Ok(Formula::False);
                }
                "dec" if *self.peek2() == Tok::LParen => {
                    self.next();
                    return self.dec_formula();
                }
                _ if *self.peek2() == Tok::LParen => {
                    self.next();
                    self.next();
                    let mut args = vec![self.term()?];
                    while *self.peek() == Tok::Comma {
                        self.next();
                        args.push(self.term()?);
                    }
                    self.expect(Tok::RParen)?;
                    if let Some(sym) = prim_sym(&name) {
                        if args.len() != sym.arity() {
                            return self.err(format!(
                                "'{name}' takes {} arguments, found {}",
                                sym.arity(),
                                args.len()
                            ));
                        }
                        return Ok(Formula::atom(Constraint::prim(sym, args)));
                    }
                    if RESERVED.contains(&name.as_str()) {
                        return self.err(format!("reserved word '{name}' is not a predicate"));
                    }
                    return Ok(Formula::atom(Constraint::Call(name, args)));
                }
                _ => {}
            }
        }
        // Term-leading constraint. `(` could open either a pair/grouped
        // term or a parenthesised formula; try the term route first and
        // backtrack on failure.
        let save = self.i;
        let save_gen = self.gen.clone();
        match self.rel_constraint() {
            Ok(f) => Ok(f),
            Err(e) => {
                if self.toks[save].0 == Tok::LParen {
                    self.i = save;
                    *self.gen = save_gen;
                    self.next();
                    let f = self.formula()?;
                    self.expect(Tok::RParen)?;
                    return Ok(f);
                }
                Err(e)
            }
        }
    }

    fn rel_constraint(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.term()?;
        let c = match self.peek().clone() {
            Tok::Eq => {
                self.next();
                Constraint::eq(lhs, self.term()?)
            }
            Tok::Leq => {
                self.next();
                Constraint::leq(lhs, self.term()?)
            }
            Tok::Lt => {
                self.next();
                Constraint::call("<", vec![lhs, self.term()?])
            }
            Tok::Gt => {
                self.next();
                Constraint::call(">", vec![lhs, self.term()?])
            }
            Tok::Geq => {
                self.next();
                Constraint::call(">=", vec![lhs, self.term()?])
            }
            Tok::Ident(op) => match op.as_str() {
                "neq" => {
                    self.next();
                    Constraint::neq(lhs, self.term()?)
                }
                "in" => {
                    self.next();
                    Constraint::is_in(lhs, self.term()?)
                }
                "nin" => {
                    self.next();
                    Constraint::nin(lhs, self.term()?)
                }
                _ => return self.err(format!("expected a constraint operator, found '{op}'")),
            },
            other => return self.err(format!("expected a constraint operator, found {other}")),
        };
        Ok(Formula::atom(c))
    }

    fn dec_formula(&mut self) -> Result<Formula, ParseError> {
        self.expect(Tok::LParen)?;
        let mut vars = Vec::new();
        if *self.peek() == Tok::LBracket {
            self.next();
            loop {
                match self.peek().clone() {
                    Tok::Var(v) if v != "_" => {
                        self.next();
                        let t = self.register_var(&v)?;
                        if let Term::Var(name) = t {
                            vars.push(name);
                        }
                    }
                    other => return self.err(format!("expected a variable, found {other}")),
                }
                if *self.peek() == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
            self.expect(Tok::RBracket)?;
        } else {
            match self.peek().clone() {
                Tok::Var(v) if v != "_" => {
                    self.next();
                    let t = self.register_var(&v)?;
                    if let Term::Var(name) = t {
                        vars.push(name);
                    }
                }
                other => return self.err(format!("expected a variable, found {other}")),
            }
        }
        self.expect(Tok::Comma)?;
        let ty = self.type_expr()?;
        self.expect(Tok::RParen)?;
        Ok(Formula::conj(
            vars.into_iter().map(|v| Formula::Dec(v, ty.clone())),
        ))
    }

    // ---- programs ----

    fn program(&mut self) -> Result<Vec<ProgramItem>, ParseError> {
        let mut items = Vec::new();
        while *self.peek() != Tok::Eof {
            if *self.peek() == Tok::ColonDash {
                items.push(ProgramItem::Directive(self.directive()?));
            } else {
                items.push(ProgramItem::Clause(self.clause()?));
            }
        }
        Ok(items)
    }

    fn directive(&mut self) -> Result<Directive, ParseError> {
        self.expect(Tok::ColonDash)?;
        let kind = match self.peek().clone() {
            Tok::Ident(k) if k == "dec_p_type" => DirectiveKind::Mono,
            Tok::Ident(k) if k == "dec_pp_type" => DirectiveKind::Poly,
            other => {
                return self.err(format!(
                    "expected 'dec_p_type' or 'dec_pp_type', found {other}"
                ))
            }
        };
        self.next();
        self.expect(Tok::LParen)?;
        let name = match self.peek().clone() {
            Tok::Ident(n) if !RESERVED.contains(&n.as_str()) => {
                self.next();
                n
            }
            other => return self.err(format!("expected a predicate name, found {other}")),
        };
        self.expect(Tok::LParen)?;
        let mut types = vec![self.type_expr()?];
        while *self.peek() == Tok::Comma {
            self.next();
            types.push(self.type_expr()?);
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::Dot)?;
        if kind == DirectiveKind::Mono {
            for t in &types {
                let mut tv = std::collections::BTreeSet::new();
                t.type_vars(&mut tv);
                if !tv.is_empty() {
                    return self.err(format!(
                        "type variables are not admitted in dec_p_type (found {})",
                        tv.iter().next().unwrap()
                    ));
                }
            }
        }
        Ok(Directive { kind, name, types })
    }

    fn clause(&mut self) -> Result<Clause, ParseError> {
        let name = match self.peek().clone() {
            Tok::Ident(n) if !RESERVED.contains(&n.as_str()) && prim_sym(&n).is_none() => {
                self.next();
                n
            }
            other => return self.err(format!("expected a clause head, found {other}")),
        };
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Var(v) if v != "_" => {
                    self.next();
                    let t = self.register_var(&v)?;
                    if let Term::Var(name) = t {
                        if params.contains(&name) {
                            return self.err(format!(
                                "clause head is not linear: variable '{name}' repeats"
                            ));
                        }
                        params.push(name);
                    }
                }
                other => {
                    return self.err(format!(
                        "clause head arguments must be distinct variables, found {other}"
                    ))
                }
            }
            if *self.peek() == Tok::Comma {
                self.next();
            } else {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        let body = if *self.peek() == Tok::ColonDash {
            self.next();
            self.formula()?
        } else {
            Formula::True
        };
        self.expect(Tok::Dot)?;
        Ok(Clause { name, params, body })
    }
}

/// Parse a formula, optionally terminated by `.`.
pub fn parse_formula(src: &str) -> Result<Formula, ParseError> {
    let mut gen = VarGen::new();
    parse_formula_with(src, &mut gen)
}

/// Parse a formula, registering variable names in the given generator so
/// later fresh names cannot collide with them.
pub fn parse_formula_with(src: &str, gen: &mut VarGen) -> Result<Formula, ParseError> {
    let mut p = Parser::new(src, gen)?;
    let f = p.formula()?;
    if *p.peek() == Tok::Dot {
        p.next();
    }
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {} after formula", p.peek()));
    }
    Ok(f)
}

/// Parse a program: a sequence of directives and clauses.
pub fn parse_program(src: &str) -> Result<Vec<ProgramItem>, ParseError> {
    let mut gen = VarGen::new();
    parse_program_with(src, &mut gen)
}

pub fn parse_program_with(src: &str, gen: &mut VarGen) -> Result<Vec<ProgramItem>, ParseError> {
    let mut p = Parser::new(src, gen)?;
    p.program()
}

/// Parse a type expression.
pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    let mut gen = VarGen::new();
    let mut p = Parser::new(src, &mut gen)?;
    let t = p.type_expr()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {} after type", p.peek()));
    }
    Ok(t)
}

/// Parse a term expression.
pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut gen = VarGen::new();
    let mut p = Parser::new(src, &mut gen)?;
    let t = p.term()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {} after term", p.peek()));
    }
    Ok(t)
}

/// Render a formula in concrete syntax.  `parse_formula(render(f)) == f`
/// for every parser-produced `f`.
pub fn render(f: &Formula) -> String {
    f.to_string()
}

/// Render a program item.
pub fn render_item(item: &ProgramItem) -> String {
    match item {
        ProgramItem::Directive(d) => d.to_string(),
        ProgramItem::Clause(c) => c.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(src: &str) {
        let f = parse_formula(src).expect(src);
        let r = render(&f);
        let f2 = parse_formula(&r).unwrap_or_else(|e| panic!("re-parse of '{r}': {e}"));
        assert_eq!(f, f2, "round trip of '{src}' via '{r}'");
    }

    #[test]
    fn parses_basic_formulas() {
        roundtrip("X = 1");
        roundtrip("un({a,1,{2},(5,b)},{X},{Y/B})");
        roundtrip("X neq a & 3 in A or size(B,N)");
        roundtrip("(X = 1 or X = 2) & Y = 3");
        roundtrip("(1,2) in R & inv(R,S)");
        roundtrip("comp({(X,u?c)},S,{})");
        roundtrip("[M,N] = [1,3] & X nin [0,2]");
        roundtrip("dec(X,int) & dec(A,set(enum([a,b,c])))");
        roundtrip("M + 1 =< N * 3 - 2");
        roundtrip("id({X/A},R) & id(R,A)");
        roundtrip("N + K > 5 & K < N & N >= 0");
    }

    #[test]
    fn dec_list_sugar() {
        let f = parse_formula("dec([A,B,C],set(int)) & un(A,B,C)").unwrap();
        let decs: Vec<_> = f
            .dnf()
            .remove(0)
            .into_iter()
            .filter(|g| matches!(g, Formula::Dec(_, _)))
            .collect();
        assert_eq!(decs.len(), 3);
    }

    #[test]
    fn negative_literals() {
        assert_eq!(parse_term("-3").unwrap(), Term::Int(-3));
        assert_eq!(
            parse_term("{-1,2}").unwrap(),
            Term::set_lit(vec![Term::Int(-1), Term::Int(2)], Term::Empty)
        );
        assert!(parse_term("-X").is_err());
        let t = parse_term("3 - 2").unwrap();
        assert_eq!(t.eval_int(), Some(1));
    }

    #[test]
    fn rejects_ill_formed_terms() {
        assert!(parse_term("u?10").is_err(), "tag must name an atom");
        assert!(parse_term("f(X)").is_err(), "no compound terms");
        assert!(parse_term("X * Y").is_err(), "non-linear product");
        assert!(parse_formula("X = in").is_err(), "reserved word as atom");
    }

    #[test]
    fn anonymous_variables_are_fresh() {
        let mut gen = VarGen::new();
        let f = parse_formula_with("_ in A & _ in A", &mut gen).unwrap();
        let vars = f.free_vars();
        assert_eq!(vars.len(), 3, "two distinct anonymous variables plus A");
    }

    #[test]
    fn fresh_name_collision_is_rejected() {
        let mut gen = VarGen::new();
        let n = gen.fresh("N");
        let src = format!("{n} = 1");
        assert!(parse_formula_with(&src, &mut gen).is_err());
    }

    #[test]
    fn parses_programs() {
        let src = "\
% book store
:- dec_p_type(addBook(rel(bid,title),bid,title,rel(bid,title))).
addBook(Books,B,T,Books2) :-
  comp({(B,B)},Books,{}) & Books2 = {(B,T)/Books}.
";
        let items = parse_program(src).unwrap();
        assert_eq!(items.len(), 2);
        match &items[0] {
            ProgramItem::Directive(d) => {
                assert_eq!(d.kind, DirectiveKind::Mono);
                assert_eq!(d.types.len(), 4);
                assert_eq!(d.types[0], Type::rel(Type::basic("bid"), Type::basic("title")));
            }
            _ => panic!("expected directive"),
        }
        for it in &items {
            let r = render_item(it);
            let back = parse_program(&r).unwrap();
            assert_eq!(back.len(), 1);
            assert_eq!(&back[0], it);
        }
    }

    #[test]
    fn polymorphic_directive() {
        let src = ":- dec_pp_type(applyTo(rel(T,U),T,U)).";
        let items = parse_program(src).unwrap();
        match &items[0] {
            ProgramItem::Directive(d) => {
                assert_eq!(d.kind, DirectiveKind::Poly);
                assert_eq!(d.types[1], Type::Var("T".into()));
            }
            _ => panic!(),
        }
        assert!(parse_program(":- dec_p_type(f(set(T))).").is_err());
    }

    #[test]
    fn head_linearity() {
        assert!(parse_program("p(X,X) :- X = 1.").is_err());
        assert!(parse_program("p({}) :- true.").is_err());
    }

    #[test]
    fn type_roundtrip() {
        for s in [
            "int",
            "set(int)",
            "rel(t,u)",
            "prod(int,set(enum([a,b])))",
            "enum([on,off,unknown])",
        ] {
            let t = parse_type(s).unwrap();
            assert_eq!(parse_type(&t.to_string()).unwrap(), t);
        }
        assert!(parse_type("enum([a])").is_err());
        assert!(parse_type("enum([a,a,b])").is_err());
    }
}
