//! Brute-force semantic evaluator over bounded finite domains.
//!
//! The oracle interprets formulas directly over ground values — sets as
//! actual finite sets, relations as sets of pairs — and enumerates every
//! valuation of the free variables within a domain bound.  It serves as
//! independent ground truth for the rewriting solver: bounded, slow, and
//! obviously correct.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ast::{Constraint, Formula, IntOp, Sym, Term, Type};
use crate::solver::Answer;
use crate::typecheck::Context;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// A ground element of the interpretation domain.  The variant order
/// fixes the canonical total order: ints < atoms < tagged < pairs < sets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum GroundValue {
    Int(i64),
    Atom(String),
    Tagged(String, String),
    Pair(Box<GroundValue>, Box<GroundValue>),
    Set(BTreeSet<GroundValue>),
}

impl fmt::Display for GroundValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroundValue::Int(n) => write!(f, "{n}"),
            GroundValue::Atom(a) => write!(f, "{a}"),
            GroundValue::Tagged(b, a) => write!(f, "{b}?{a}"),
            GroundValue::Pair(a, b) => write!(f, "({a},{b})"),
            GroundValue::Set(es) => {
                write!(f, "{{")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, "}}")
            }
        }
    }
}

pub type Valuation = BTreeMap<String, GroundValue>;

/// Finite bounds on the interpretation domain.
#[derive(Debug, Clone)]
pub struct DomainBound {
    /// Elements per basic type `b`: tags mentioned in the formula plus
    /// generic ones (`b?a1`, `b?a2`, …) up to this pool size.
    pub atom_pool: usize,
    pub int_lo: i64,
    pub int_hi: i64,
    /// Sets range over subsets up to this cardinality.
    pub max_card: usize,
    /// Abort enumeration when the valuation space exceeds this count.
    pub max_space: u64,
}

impl Default for DomainBound {
    fn default() -> DomainBound {
        DomainBound {
            atom_pool: 3,
            int_lo: -2,
            int_hi: 2,
            max_card: 3,
            max_space: 50_000_000,
        }
    }
}

impl DomainBound {
    /// Parse a bound spec of the form `atoms=3,ints=-2..2,card=3`.
    /// Omitted fields keep their defaults.
    pub fn parse(spec: &str) -> Result<DomainBound, String> {
        let mut b = DomainBound::default();
        for part in spec.split(',').filter(|p| !p.is_empty()) {
            let (key, val) = part
                .split_once('=')
                .ok_or_else(|| format!("malformed bound component {part:?}"))?;
            match key.trim() {
                "atoms" => {
                    b.atom_pool = val
                        .trim()
                        .parse()
                        .map_err(|_| format!("bad atom pool {val:?}"))?
                }
                "ints" => {
                    let (lo, hi) = val
                        .trim()
                        .split_once("..")
                        .ok_or_else(|| format!("bad int range {val:?}"))?;
                    b.int_lo = lo.parse().map_err(|_| format!("bad int bound {lo:?}"))?;
                    b.int_hi = hi.parse().map_err(|_| format!("bad int bound {hi:?}"))?;
                    if b.int_lo > b.int_hi {
                        return Err(format!("empty int range {val:?}"));
                    }
                }
                "card" => {
                    b.max_card = val
                        .trim()
                        .parse()
                        .map_err(|_| format!("bad cardinality {val:?}"))?
                }
                other => return Err(format!("unknown bound component {other:?}")),
            }
        }
        Ok(b)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("unbound variable {0} during evaluation")]
    UnboundVariable(String),
    #[error("the oracle cannot evaluate predicate {0}")]
    UnsupportedCall(String),
    #[error("valuation space of about {0} exceeds the explosion guard")]
    Explosion(u64),
    #[error("variable {0} has no inferable type for enumeration")]
    Untyped(String),
}

// ---------------------------------------------------------------------
// Term and formula evaluation (Def. 11 semantics)
// ---------------------------------------------------------------------

fn eval_term(t: &Term, v: &Valuation) -> Result<GroundValue, OracleError> {
    match t {
        Term::Int(n) => Ok(GroundValue::Int(*n)),
        Term::Atom(a) => Ok(GroundValue::Atom(a.clone())),
        Term::Tagged(b, a) => Ok(GroundValue::Tagged(b.clone(), a.clone())),
        Term::Var(x) => v
            .get(x)
            .cloned()
            .ok_or_else(|| OracleError::UnboundVariable(x.clone())),
        Term::Empty => Ok(GroundValue::Set(BTreeSet::new())),
        Term::Cons(h, tail) => {
            let h = eval_term(h, v)?;
            match eval_term(tail, v)? {
                GroundValue::Set(mut es) => {
                    es.insert(h);
                    Ok(GroundValue::Set(es))
                }
                // A non-set tail has no denotation; treat as the
                // ill-sorted value that satisfies nothing (callers
                // compare sets structurally, so this never matches).
                other => Ok(GroundValue::Pair(Box::new(h), Box::new(other))),
            }
        }
        Term::Interval(a, b) => {
            let GroundValue::Int(a) = eval_term(a, v)? else {
                return Ok(GroundValue::Set(BTreeSet::new()));
            };
            let GroundValue::Int(b) = eval_term(b, v)? else {
                return Ok(GroundValue::Set(BTreeSet::new()));
            };
            Ok(GroundValue::Set((a..=b).map(GroundValue::Int).collect()))
        }
        Term::Pair(a, b) => Ok(GroundValue::Pair(
            Box::new(eval_term(a, v)?),
            Box::new(eval_term(b, v)?),
        )),
        Term::Arith(op, a, b) => {
            let (GroundValue::Int(a), GroundValue::Int(b)) =
                (eval_term(a, v)?, eval_term(b, v)?)
            else {
                return Ok(GroundValue::Atom("\u{1}ill-sorted".to_string()));
            };
            let n = match op {
                IntOp::Add => a.checked_add(b),
                IntOp::Sub => a.checked_sub(b),
                IntOp::Mul => a.checked_mul(b),
            };
            Ok(n.map(GroundValue::Int)
                .unwrap_or_else(|| GroundValue::Atom("\u{1}overflow".to_string())))
        }
    }
}

fn as_set(v: &GroundValue) -> Option<&BTreeSet<GroundValue>> {
    match v {
        GroundValue::Set(es) => Some(es),
        _ => None,
    }
}

/// A relation: every element a pair, decomposed.
fn as_rel(v: &GroundValue) -> Option<Vec<(&GroundValue, &GroundValue)>> {
    let es = as_set(v)?;
    es.iter()
        .map(|e| match e {
            GroundValue::Pair(a, b) => Some((a.as_ref(), b.as_ref())),
            _ => None,
        })
        .collect()
}

fn eval_prim(sym: Sym, args: &[GroundValue]) -> bool {
    match sym {
        Sym::Eq => args[0] == args[1],
        Sym::Neq => args[0] != args[1],
        Sym::In => as_set(&args[1]).is_some_and(|s| s.contains(&args[0])),
        Sym::Nin => as_set(&args[1]).is_none_or(|s| !s.contains(&args[0])),
        Sym::Un => match (as_set(&args[0]), as_set(&args[1]), as_set(&args[2])) {
            (Some(a), Some(b), Some(c)) => a.union(b).cloned().collect::<BTreeSet<_>>() == *c,
            _ => false,
        },
        Sym::Disj => match (as_set(&args[0]), as_set(&args[1])) {
            (Some(a), Some(b)) => a.is_disjoint(b),
            _ => false,
        },
        Sym::Size => match (as_set(&args[0]), &args[1]) {
            (Some(s), GroundValue::Int(n)) => s.len() as i64 == *n,
            _ => false,
        },
        Sym::Id => match (as_set(&args[0]), as_rel(&args[1])) {
            (Some(a), Some(_)) => {
                let expect: BTreeSet<GroundValue> = a
                    .iter()
                    .map(|x| GroundValue::Pair(Box::new(x.clone()), Box::new(x.clone())))
                    .collect();
                as_set(&args[1]).is_some_and(|r| *r == expect)
            }
            _ => false,
        },
        Sym::Inv => match (as_rel(&args[0]), as_rel(&args[1])) {
            (Some(r), Some(_)) => {
                let inv: BTreeSet<GroundValue> = r
                    .iter()
                    .map(|(a, b)| {
                        GroundValue::Pair(Box::new((*b).clone()), Box::new((*a).clone()))
                    })
                    .collect();
                as_set(&args[1]).is_some_and(|s| *s == inv)
            }
            _ => false,
        },
        Sym::Comp => match (as_rel(&args[0]), as_rel(&args[1]), as_rel(&args[2])) {
            (Some(r), Some(s), Some(_)) => {
                let mut comp: BTreeSet<GroundValue> = BTreeSet::new();
                for (a, b) in &r {
                    for (c, d) in &s {
                        if b == c {
                            comp.insert(GroundValue::Pair(
                                Box::new((*a).clone()),
                                Box::new((*d).clone()),
                            ));
                        }
                    }
                }
                as_set(&args[2]).is_some_and(|t| *t == comp)
            }
            _ => false,
        },
        Sym::Leq => match (&args[0], &args[1]) {
            (GroundValue::Int(a), GroundValue::Int(b)) => a <= b,
            _ => false,
        },
    }
}

/// Semantic meaning of the built-in derived constraints.
fn eval_call(name: &str, args: &[GroundValue]) -> Result<bool, OracleError> {
    let set = |i: usize| as_set(&args[i]);
    Ok(match name {
        "subset" => match (set(0), set(1)) {
            (Some(a), Some(b)) => a.is_subset(b),
            _ => false,
        },
        "inters" => match (set(0), set(1), set(2)) {
            (Some(a), Some(b), Some(c)) => {
                a.intersection(b).cloned().collect::<BTreeSet<_>>() == *c
            }
            _ => false,
        },
        "diff" => match (set(0), set(1), set(2)) {
            (Some(a), Some(b), Some(c)) => {
                a.difference(b).cloned().collect::<BTreeSet<_>>() == *c
            }
            _ => false,
        },
        "<" => matches!(
            (&args[0], &args[1]),
            (GroundValue::Int(a), GroundValue::Int(b)) if a < b
        ),
        ">" => matches!(
            (&args[0], &args[1]),
            (GroundValue::Int(a), GroundValue::Int(b)) if a > b
        ),
        ">=" => matches!(
            (&args[0], &args[1]),
            (GroundValue::Int(a), GroundValue::Int(b)) if a >= b
        ),
        "nun" => !eval_prim(Sym::Un, args),
        "ndisj" => !eval_prim(Sym::Disj, args),
        "nsubset" => !eval_call("subset", args)?,
        "pfun" => is_pfun(&args[0]),
        "npfun" => !is_pfun(&args[0]),
        "applyTo" => match as_rel(&args[0]) {
            Some(pairs) => {
                pairs.iter().any(|(x, y)| **x == args[1] && **y == args[2])
                    && pairs
                        .iter()
                        .all(|(x, y)| **x != args[1] || **y == args[2])
            }
            None => false,
        },
        other => return Err(OracleError::UnsupportedCall(other.to_string())),
    })
}

fn is_pfun(v: &GroundValue) -> bool {
    match as_rel(v) {
        Some(pairs) => pairs
            .iter()
            .all(|(x, y)| pairs.iter().all(|(x2, y2)| x != x2 || y == y2)),
        None => false,
    }
}

fn eval_constraint(c: &Constraint, v: &Valuation) -> Result<bool, OracleError> {
    let vals: Vec<GroundValue> = c
        .args()
        .iter()
        .map(|a| eval_term(a, v))
        .collect::<Result<_, _>>()?;
    match c {
        Constraint::Prim(sym, _) => Ok(eval_prim(*sym, &vals)),
        Constraint::Call(name, _) => eval_call(name, &vals),
    }
}

/// Evaluate a formula under a total valuation of its free variables.
/// `dec` conjuncts are checked as domain membership.
pub fn eval(f: &Formula, v: &Valuation, bound: &DomainBound) -> Result<bool, OracleError> {
    match f {
        Formula::True => Ok(true),
        Formula::False => Ok(false),
        Formula::Atom(c) => eval_constraint(c, v),
        Formula::Dec(x, t) => {
            let val = v
                .get(x)
                .ok_or_else(|| OracleError::UnboundVariable(x.clone()))?;
            Ok(in_domain(val, t, bound))
        }
        Formula::And(a, b) => Ok(eval(a, v, bound)? && eval(b, v, bound)?),
        Formula::Or(a, b) => Ok(eval(a, v, bound)? || eval(b, v, bound)?),
    }
}

/// Three-valued evaluation under a partial valuation: `Some(false)` is a
/// definite refutation, used to prune the enumeration early.
fn eval_partial(f: &Formula, v: &Valuation, bound: &DomainBound) -> Option<bool> {
    match f {
        Formula::True => Some(true),
        Formula::False => Some(false),
        Formula::Dec(x, t) => v.get(x).map(|val| in_domain(val, t, bound)),
        Formula::Atom(c) => {
            if c.free_vars().iter().all(|x| v.contains_key(x)) {
                eval_constraint(c, v).ok()
            } else {
                None
            }
        }
        Formula::And(a, b) => match (eval_partial(a, v, bound), eval_partial(b, v, bound)) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (Some(true), Some(true)) => Some(true),
            _ => None,
        },
        Formula::Or(a, b) => match (eval_partial(a, v, bound), eval_partial(b, v, bound)) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        },
    }
}

// ---------------------------------------------------------------------
// Domain construction
// ---------------------------------------------------------------------

fn in_domain(v: &GroundValue, t: &Type, bound: &DomainBound) -> bool {
    match (v, t) {
        (GroundValue::Int(n), Type::Int) => *n >= bound.int_lo && *n <= bound.int_hi,
        (GroundValue::Tagged(b, _), Type::Basic(name)) => b == name,
        (GroundValue::Atom(a), Type::Enum(atoms)) => atoms.iter().any(|x| x == a),
        (GroundValue::Pair(a, b), Type::Prod(ta, tb)) => {
            in_domain(a, ta, bound) && in_domain(b, tb, bound)
        }
        (GroundValue::Set(es), Type::Set(inner)) => {
            es.len() <= bound.max_card && es.iter().all(|e| in_domain(e, inner, bound))
        }
        _ => false,
    }
}

/// Collect the tags used for each basic type in a formula, so mentioned
/// elements are guaranteed to be in the domain.
fn collect_tags(f: &Formula, out: &mut BTreeMap<String, BTreeSet<String>>) {
    fn term(t: &Term, out: &mut BTreeMap<String, BTreeSet<String>>) {
        match t {
            Term::Tagged(b, a) => {
                out.entry(b.clone()).or_default().insert(a.clone());
            }
            Term::Arith(_, x, y)
            | Term::Cons(x, y)
            | Term::Interval(x, y)
            | Term::Pair(x, y) => {
                term(x, out);
                term(y, out);
            }
            _ => {}
        }
    }
    match f {
        Formula::Atom(c) => c.args().iter().for_each(|t| term(t, out)),
        Formula::And(a, b) | Formula::Or(a, b) => {
            collect_tags(a, out);
            collect_tags(b, out);
        }
        _ => {}
    }
}

/// All values of `M(τ)` under a bound.  Deterministic canonical order.
fn domain(
    t: &Type,
    bound: &DomainBound,
    tags: &BTreeMap<String, BTreeSet<String>>,
) -> Result<Vec<GroundValue>, OracleError> {
    match t {
        Type::Int => Ok((bound.int_lo..=bound.int_hi).map(GroundValue::Int).collect()),
        Type::Basic(b) => {
            let mut names: Vec<String> = tags
                .get(b)
                .map(|s| s.iter().cloned().collect())
                .unwrap_or_default();
            let mut i = 1;
            while names.len() < bound.atom_pool {
                let cand = format!("a{i}");
                if !names.contains(&cand) {
                    names.push(cand);
                }
                i += 1;
            }
            names.sort();
            Ok(names
                .into_iter()
                .map(|a| GroundValue::Tagged(b.clone(), a))
                .collect())
        }
        Type::Enum(atoms) => Ok(atoms.iter().cloned().map(GroundValue::Atom).collect()),
        Type::Prod(a, b) => {
            let da = domain(a, bound, tags)?;
            let db = domain(b, bound, tags)?;
            let mut out = Vec::with_capacity(da.len() * db.len());
            for x in &da {
                for y in &db {
                    out.push(GroundValue::Pair(Box::new(x.clone()), Box::new(y.clone())));
                }
            }
            Ok(out)
        }
        Type::Set(inner) => {
            let base = domain(inner, bound, tags)?;
            let mut out: Vec<BTreeSet<GroundValue>> = vec![BTreeSet::new()];
            for _ in 0..bound.max_card.min(base.len()) {
                let mut grown: Vec<BTreeSet<GroundValue>> = Vec::new();
                for s in &out {
                    for e in &base {
                        if !s.contains(e) {
                            let mut s2 = s.clone();
                            s2.insert(e.clone());
                            grown.push(s2);
                        }
                    }
                }
                out.extend(grown);
                out.sort();
                out.dedup();
                if out.len() as u64 > bound.max_space {
                    return Err(OracleError::Explosion(out.len() as u64));
                }
            }
            out.sort();
            Ok(out.into_iter().map(GroundValue::Set).collect())
        }
        Type::Var(v) => Err(OracleError::Untyped(format!("type variable {v}"))),
    }
}

// ---------------------------------------------------------------------
// Model enumeration
// ---------------------------------------------------------------------

/// Types for the free variables of a formula, as `(name, type)` pairs in
/// canonical (sorted) variable order.
pub type TypedVars = Vec<(String, Type)>;

fn typed_vars(f: &Formula, ctx: &Context) -> Result<TypedVars, OracleError> {
    let mut out = Vec::new();
    for v in f.free_vars() {
        let t = ctx
            .vars
            .get(&v)
            .cloned()
            .ok_or_else(|| OracleError::Untyped(v.clone()))?;
        out.push((v, t));
    }
    Ok(out)
}

fn enumerate_rec(
    f: &Formula,
    vars: &[(String, Vec<GroundValue>)],
    v: &mut Valuation,
    bound: &DomainBound,
    out: &mut Vec<Valuation>,
) {
    match vars.split_first() {
        None => {
            if eval(f, v, bound).unwrap_or(false) {
                out.push(v.clone());
            }
        }
        Some(((name, dom), rest)) => {
            for val in dom {
                v.insert(name.clone(), val.clone());
                if eval_partial(f, v, bound) != Some(false) {
                    enumerate_rec(f, rest, v, bound, out);
                }
            }
            v.remove(name);
        }
    }
}

fn variable_domains(
    f: &Formula,
    vars: &TypedVars,
    bound: &DomainBound,
) -> Result<Vec<(String, Vec<GroundValue>)>, OracleError> {
    let mut tags = BTreeMap::new();
    collect_tags(f, &mut tags);
    let mut doms = Vec::new();
    let mut space: u64 = 1;
    for (name, t) in vars {
        let d = domain(t, bound, &tags)?;
        space = space.saturating_mul(d.len().max(1) as u64);
        if space > bound.max_space {
            return Err(OracleError::Explosion(space));
        }
        doms.push((name.clone(), d));
    }
    Ok(doms)
}

/// Sequential model enumeration: all satisfying valuations, in canonical
/// order.
pub fn enumerate_models_seq(
    f: &Formula,
    vars: &TypedVars,
    bound: &DomainBound,
) -> Result<Vec<Valuation>, OracleError> {
    let doms = variable_domains(f, vars, bound)?;
    let mut out = Vec::new();
    enumerate_rec(f, &doms, &mut Valuation::new(), bound, &mut out);
    Ok(out)
}

/// Enumeration over explicit per-variable domains, data-parallel over
/// the first variable's values when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
fn enumerate_domains(
    f: &Formula,
    doms: &[(String, Vec<GroundValue>)],
    bound: &DomainBound,
) -> Vec<Valuation> {
    let Some(((name, first), rest)) = doms.split_first() else {
        let mut out = Vec::new();
        enumerate_rec(f, doms, &mut Valuation::new(), bound, &mut out);
        return out;
    };
    let chunks: Vec<Vec<Valuation>> = first
        .par_iter()
        .map(|val| {
            let mut v = Valuation::new();
            v.insert(name.clone(), val.clone());
            let mut out = Vec::new();
            if eval_partial(f, &v, bound) != Some(false) {
                enumerate_rec(f, rest, &mut v, bound, &mut out);
            }
            out
        })
        .collect();
    chunks.into_iter().flatten().collect()
}

#[cfg(not(feature = "parallel"))]
fn enumerate_domains(
    f: &Formula,
    doms: &[(String, Vec<GroundValue>)],
    bound: &DomainBound,
) -> Vec<Valuation> {
    let mut out = Vec::new();
    enumerate_rec(f, doms, &mut Valuation::new(), bound, &mut out);
    out
}

/// Model enumeration, data-parallel over the first variable's values
/// when the `parallel` feature is enabled.
pub fn enumerate_models(
    f: &Formula,
    vars: &TypedVars,
    bound: &DomainBound,
) -> Result<Vec<Valuation>, OracleError> {
    let doms = variable_domains(f, vars, bound)?;
    Ok(enumerate_domains(f, &doms, bound))
}

/// Convenience: enumerate with types taken from a typing context.
pub fn models(
    f: &Formula,
    ctx: &Context,
    bound: &DomainBound,
) -> Result<Vec<Valuation>, OracleError> {
    enumerate_models(f, &typed_vars(f, ctx)?, bound)
}

// ---------------------------------------------------------------------
// Solver agreement
// ---------------------------------------------------------------------

/// Result of comparing solver answers against the oracle at a bound.
#[derive(Debug, Default)]
pub struct Report {
    /// Oracle models no answer covers.
    pub missing: Vec<Valuation>,
    /// Answer models the formula does not have.
    pub extra: Vec<Valuation>,
    /// Evaluation problems (untypeable residue variables etc.).
    pub problems: Vec<String>,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty() && self.problems.is_empty()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return write!(f, "oracle agrees");
        }
        for v in &self.missing {
            writeln!(f, "- missing model: {}", render_valuation(v))?;
        }
        for v in &self.extra {
            writeln!(f, "- spurious model: {}", render_valuation(v))?;
        }
        for p in &self.problems {
            writeln!(f, "- {p}")?;
        }
        Ok(())
    }
}

fn render_valuation(v: &Valuation) -> String {
    v.iter()
        .map(|(k, val)| format!("{k} = {val}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Project a valuation onto a set of variables.
/// Replace residual type variables by `int`: any ground choice yields
/// the same satisfiability for a variable the residue does not constrain.
fn default_ground(t: &Type) -> Type {
    match t {
        Type::Var(_) => Type::Int,
        Type::Set(x) => Type::Set(Box::new(default_ground(x))),
        Type::Prod(a, b) => {
            Type::Prod(Box::new(default_ground(a)), Box::new(default_ground(b)))
        }
        _ => t.clone(),
    }
}

fn project(v: &Valuation, keep: &BTreeSet<String>) -> Valuation {
    v.iter()
        .filter(|(k, _)| keep.contains(*k))
        .map(|(k, val)| (k.clone(), val.clone()))
        .collect()
}

/// Compare the models of `f` with the union of the models of the
/// solver's answers, both at the same bound.  Answer formulas may
/// mention fresh variables; their types are inferred from the residue.
pub fn agree(
    f: &Formula,
    ctx: &Context,
    schemes: &crate::typecheck::SchemeEnv,
    bound: &DomainBound,
    answers: &[Answer],
) -> Report {
    let mut report = Report::default();
    let f_vars: BTreeSet<String> = f.free_vars();
    let truth: BTreeSet<Valuation> = match models(f, ctx, bound) {
        Ok(ms) => ms
            .into_iter()
            .map(|m| project(&m, &f_vars))
            .collect(),
        Err(e) => {
            report.problems.push(format!("formula: {e}"));
            return report;
        }
    };
    let qtv = match typed_vars(f, ctx) {
        Ok(v) => v,
        Err(e) => {
            report.problems.push(format!("formula: {e}"));
            return report;
        }
    };
    let qdoms = match variable_domains(f, &qtv, bound) {
        Ok(d) => d,
        Err(e) => {
            report.problems.push(format!("formula: {e}"));
            return report;
        }
    };
    // Fresh integer variables in a residue are existentially quantified,
    // so they get extra head room: a size variable can exceed the query
    // bound by the cardinality cap.  Query variables stay at the stated
    // bound, so both sides compare over the same space.
    let wide_ints: Vec<GroundValue> = (bound.int_lo - bound.max_card as i64 - 1
        ..=bound.int_hi + bound.max_card as i64 + 1)
        .map(GroundValue::Int)
        .collect();
    let mut claimed: BTreeSet<Valuation> = BTreeSet::new();
    for (i, a) in answers.iter().enumerate() {
        let af = a.to_formula();
        // Type every variable of the answer: known ones from Γ, fresh
        // ones inferred from the constraints they appear in.  A type
        // variable left unconstrained by the residue can be grounded
        // arbitrarily without changing satisfiability.
        let tv = match crate::typecheck::infer_types(&af, ctx, schemes, true) {
            Ok(map) => map
                .into_iter()
                .map(|(v, t)| (v, default_ground(&t)))
                .collect::<TypedVars>(),
            Err(e) => {
                report.problems.push(format!("answer {}: {e}", i + 1));
                continue;
            }
        };
        let mut af_tags = BTreeMap::new();
        collect_tags(&af, &mut af_tags);
        // A binding whose right-hand side is ground (possibly through
        // other bindings) pins its variable, collapsing that dimension
        // of the search.
        let mut eqs: Vec<(String, Term)> = a
            .bindings
            .iter()
            .map(|(v, t)| (v.clone(), t.clone()))
            .collect();
        for c in &a.residue {
            if let Constraint::Prim(crate::ast::Sym::Eq, args) = c {
                match (&args[0], &args[1]) {
                    (Term::Var(v), t) | (t, Term::Var(v)) => {
                        eqs.push((v.clone(), t.clone()))
                    }
                    _ => {}
                }
            }
        }
        let mut fixed = Valuation::new();
        let mut changed = true;
        while changed {
            changed = false;
            for (v, t) in &eqs {
                if !fixed.contains_key(v) {
                    if let Ok(val) = eval_term(t, &fixed) {
                        fixed.insert(v.clone(), val);
                        changed = true;
                    }
                }
            }
        }
        // Existential search space: the answer's fresh variables only.
        // Query variables are supplied from the outer scan, so the cost
        // is |query space| x |answers|, never their joint product.
        let mut fresh: Vec<(String, Vec<GroundValue>)> = Vec::new();
        let mut fresh_err = None;
        for (n, t) in &tv {
            if f_vars.contains(n) {
                continue;
            }
            let d = if let Some(val) = fixed.get(n) {
                vec![val.clone()]
            } else if matches!(t, Type::Int) {
                wide_ints.clone()
            } else {
                match domain(t, bound, &af_tags) {
                    Ok(d) => d,
                    Err(e) => {
                        fresh_err = Some(format!("answer {}: {e}", i + 1));
                        break;
                    }
                }
            };
            fresh.push((n.clone(), d));
        }
        if let Some(e) = fresh_err {
            report.problems.push(e);
            continue;
        }
        // Order the fresh variables so each one completes as many
        // conjuncts as possible given everything placed before it; the
        // partial evaluator then prunes right after each assignment
        // (residues chain fresh variables through equalities).
        let mut conj_vars: Vec<BTreeSet<String>> = Vec::new();
        collect_conjunct_vars(&af, &mut conj_vars);
        let mut placed: BTreeSet<String> = f_vars.clone();
        let mut ordered: Vec<(String, Vec<GroundValue>)> = Vec::new();
        let mut remaining = fresh;
        while !remaining.is_empty() {
            let best = remaining
                .iter()
                .enumerate()
                .max_by_key(|(_, (n, _))| {
                    conj_vars
                        .iter()
                        .filter(|s| {
                            s.contains(n)
                                && s.iter().all(|v| v == n || placed.contains(v))
                        })
                        .count()
                })
                .map(|(i, _)| i)
                .unwrap();
            let (n, d) = remaining.remove(best);
            placed.insert(n.clone());
            ordered.push((n, d));
        }
        let fresh = ordered;
        // Scan the query space pruned by the answer formula itself; at
        // each full query assignment, search the fresh variables for a
        // witness.
        let mut adoms = qdoms.clone();
        for (name, d) in adoms.iter_mut() {
            if let Some(val) = fixed.get(name) {
                d.clear();
                d.push(val.clone());
            }
        }
        // The witness search only depends on query variables the answer
        // actually mentions; memoise on those so unconstrained query
        // dimensions do not multiply the search.
        let af_free = af.free_vars();
        let relevant: Vec<String> = adoms
            .iter()
            .map(|(n, _)| n.clone())
            .filter(|n| af_free.contains(n))
            .collect();
        let mut memo: BTreeMap<Vec<GroundValue>, bool> = BTreeMap::new();
        let mut v = Valuation::new();
        claimed_rec(
            &af, &adoms, &fresh, &relevant, &mut memo, &mut v, bound, &mut claimed,
        );
    }
    report.missing = truth.difference(&claimed).cloned().collect();
    report.extra = claimed.difference(&truth).cloned().collect();
    report
}

/// Depth-first scan over query-variable domains, pruned by the answer
/// formula; each complete query assignment that some fresh-variable
/// witness satisfies is recorded as claimed.
#[allow(clippy::too_many_arguments)]
fn claimed_rec(
    af: &Formula,
    qdoms: &[(String, Vec<GroundValue>)],
    fresh: &[(String, Vec<GroundValue>)],
    relevant: &[String],
    memo: &mut BTreeMap<Vec<GroundValue>, bool>,
    v: &mut Valuation,
    bound: &DomainBound,
    out: &mut BTreeSet<Valuation>,
) {
    match qdoms.split_first() {
        None => {
            let key: Vec<GroundValue> =
                relevant.iter().map(|n| v[n].clone()).collect();
            let sat = match memo.get(&key) {
                Some(b) => *b,
                None => {
                    let b = exists_rec(af, fresh, v, bound);
                    memo.insert(key, b);
                    b
                }
            };
            if sat {
                out.insert(v.clone());
            }
        }
        Some(((name, dom), rest)) => {
            for val in dom {
                v.insert(name.clone(), val.clone());
                if eval_partial(af, v, bound) != Some(false) {
                    claimed_rec(af, rest, fresh, relevant, memo, v, bound, out);
                }
            }
            v.remove(name);
        }
    }
}

/// Variable sets of the conjuncts of a conjunction.
fn collect_conjunct_vars(f: &Formula, out: &mut Vec<BTreeSet<String>>) {
    match f {
        Formula::And(a, b) => {
            collect_conjunct_vars(a, out);
            collect_conjunct_vars(b, out);
        }
        Formula::Atom(c) => out.push(c.free_vars()),
        _ => {}
    }
}

/// Early-exit existential search over the remaining (fresh) variables.
fn exists_rec(
    af: &Formula,
    doms: &[(String, Vec<GroundValue>)],
    v: &mut Valuation,
    bound: &DomainBound,
) -> bool {
    match doms.split_first() {
        None => eval(af, v, bound).unwrap_or(false),
        Some(((name, dom), rest)) => {
            for val in dom {
                v.insert(name.clone(), val.clone());
                if eval_partial(af, v, bound) != Some(false)
                    && exists_rec(af, rest, v, bound)
                {
                    v.remove(name);
                    return true;
                }
            }
            v.remove(name);
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;
    use crate::typecheck;

    fn b() -> DomainBound {
        DomainBound::default()
    }

    fn models_of(src: &str) -> Vec<Valuation> {
        let f = parse_formula(src).unwrap();
        let ctx = typecheck::collect_context(&f).unwrap();
        models(&f, &ctx, &b()).unwrap()
    }

    #[test]
    fn union_semantics() {
        let ms = models_of("dec(C, set(int)) & un({1}, {2}, C).");
        assert_eq!(ms.len(), 1);
        let GroundValue::Set(s) = &ms[0]["C"] else { panic!() };
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn empty_membership_has_no_models() {
        assert!(models_of("dec(X, int) & X in {}.").is_empty());
    }

    #[test]
    fn interval_size_with_empty_interval() {
        // [3,1] denotes the empty set.
        let ms = models_of("dec(N, int) & size([3,1], N).");
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0]["N"], GroundValue::Int(0));
    }

    #[test]
    fn composition_semantics() {
        let f = parse_formula(
            "dec(T, rel(int, int)) & comp({(1,2)}, {(2,1)}, T).",
        )
        .unwrap();
        let ctx = typecheck::collect_context(&f).unwrap();
        let ms = models(&f, &ctx, &b()).unwrap();
        assert_eq!(ms.len(), 1);
        let GroundValue::Set(s) = &ms[0]["T"] else { panic!() };
        assert_eq!(s.len(), 1);
        assert!(s.contains(&GroundValue::Pair(
            Box::new(GroundValue::Int(1)),
            Box::new(GroundValue::Int(1))
        )));
    }

    #[test]
    fn extensionality_of_literals() {
        let v = Valuation::new();
        let f1 = parse_formula("{1,2,1} = {2,1}.").unwrap();
        assert!(eval(&f1, &v, &b()).unwrap());
    }

    #[test]
    fn id_and_inv() {
        assert_eq!(models_of("dec(R, rel(int,int)) & id({1,2}, R) & inv(R, R).").len(), 1);
        assert!(models_of("id({1}, {(1,2)}) & true.").is_empty());
    }

    #[test]
    fn derived_complements_at_bound() {
        // nun is the exact complement of un over all bounded valuations.
        let f = parse_formula(
            "dec([A,B,C], set(enum([x,y]))) & un(A, B, C).",
        )
        .unwrap();
        let g = parse_formula(
            "dec([A,B,C], set(enum([x,y]))) & nun(A, B, C).",
        )
        .unwrap();
        let ctx = typecheck::collect_context(&f).unwrap();
        let total = 4usize.pow(3);
        let mf = models(&f, &ctx, &b()).unwrap().len();
        let mg = models(&g, &ctx, &b()).unwrap().len();
        assert_eq!(mf + mg, total);
    }

    #[test]
    fn pfun_semantics() {
        let v = Valuation::new();
        assert!(eval(
            &parse_formula("pfun({(1,2),(2,2)}) & true.").unwrap(),
            &v,
            &b()
        )
        .unwrap());
        assert!(!eval(
            &parse_formula("pfun({(1,2),(1,3)}) & true.").unwrap(),
            &v,
            &b()
        )
        .unwrap());
        // Non-pair elements make pfun false.
        assert!(!eval(&parse_formula("pfun({1}) & true.").unwrap(), &v, &b()).unwrap());
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let f = parse_formula(
            "dec([A,B], set(int)) & dec(N, int) & un(A, B, [0,1]) & size(A, N) & N =< 1.",
        )
        .unwrap();
        let ctx = typecheck::collect_context(&f).unwrap();
        let tv = typed_vars(&f, &ctx).unwrap();
        let par = enumerate_models(&f, &tv, &b()).unwrap();
        let seq = enumerate_models_seq(&f, &tv, &b()).unwrap();
        let pa: BTreeSet<_> = par.into_iter().collect();
        let sa: BTreeSet<_> = seq.into_iter().collect();
        assert_eq!(pa, sa);
    }

    #[test]
    fn explosion_guard_fires() {
        let f = parse_formula("dec(A, set(set(set(int)))) & A = A.").unwrap();
        let ctx = typecheck::collect_context(&f).unwrap();
        let mut bound = b();
        bound.max_space = 1_000;
        assert!(matches!(
            models(&f, &ctx, &bound),
            Err(OracleError::Explosion(_))
        ));
    }

    #[test]
    fn agreement_with_solver_basics() {
        let f = parse_formula("dec(X, int) & X in {0,1} & X neq 0.").unwrap();
        let ctx = typecheck::check_formula(&f, &BTreeMap::new()).unwrap();
        let out = crate::solver::solve(
            &f,
            &crate::solver::NoResolver,
            crate::ast::VarGen::new(),
            None,
            100_000,
        );
        let rep = agree(&f, &ctx, &BTreeMap::new(), &b(), &out.answers);
        assert!(rep.ok(), "{rep}");
    }

    #[test]
    fn corrupted_answer_is_detected() {
        let f = parse_formula("dec(X, int) & X = 1.").unwrap();
        let ctx = typecheck::check_formula(&f, &BTreeMap::new()).unwrap();
        let mut bad = Answer {
            bindings: BTreeMap::new(),
            residue: Vec::new(),
        };
        bad.bindings
            .insert("X".to_string(), Term::Int(2));
        let rep = agree(&f, &ctx, &BTreeMap::new(), &b(), &[bad]);
        assert!(!rep.ok());
        assert_eq!(rep.missing.len(), 1);
        assert_eq!(rep.extra.len(), 1);
    }

    #[test]
    fn bound_spec_parsing() {
        let bd = DomainBound::parse("atoms=2,ints=-1..3,card=2").unwrap();
        assert_eq!(bd.atom_pool, 2);
        assert_eq!((bd.int_lo, bd.int_hi), (-1, 3));
        assert_eq!(bd.max_card, 2);
        assert!(DomainBound::parse("ints=5..1").is_err());
        assert!(DomainBound::parse("wat=1").is_err());
    }
}
