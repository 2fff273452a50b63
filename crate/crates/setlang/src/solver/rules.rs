//! The rewrite rules of the constraint solver.
//!
//! [`rewrite_step`] maps one atomic primitive constraint (with the
//! current substitution already applied) to an [`Action`]: discard it as
//! satisfied, fail the branch, bind a variable, replace it by one or
//! more alternative conjunctions (a choice point when more than one), or
//! declare it irreducible (part of the answer).

use crate::ast::*;
use std::collections::BTreeSet;

/// Outcome of one rewrite step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    /// The constraint is satisfied; drop it.
    Drop,
    /// The constraint is unsatisfiable; fail this branch.
    Fail,
    /// Bind a variable and drop the constraint.
    Bind(String, Term),
    /// Replace the constraint by the disjunction of these conjunctions.
    Replace(Vec<Vec<Constraint>>),
    /// No rule applies; the constraint is in solved form.
    Irreducible,
}

/// Read-only view of the store a rewrite step may consult.
pub trait StoreView {
    /// The exact integer value of a variable, if the integer store pins
    /// it down.
    fn int_value(&self, var: &str) -> Option<i64>;
}

/// A store view with no information; handy for tests.
pub struct EmptyStore;
impl StoreView for EmptyStore {
    fn int_value(&self, _var: &str) -> Option<i64> {
        None
    }
}

const SIZE_INSTANTIATION_CAP: i64 = 16;

fn is_int_expr(t: &Term) -> bool {
    matches!(t, Term::Arith(..))
}

/// Is this ground term definitely not a set?
fn ground_scalar(t: &Term) -> bool {
    t.is_ground()
        && matches!(
            t,
            Term::Int(_) | Term::Atom(_) | Term::Tagged(_, _) | Term::Pair(_, _) | Term::Arith(..)
        )
}


/// Canonical form of a ground term, with set semantics (duplicates
/// collapse, order is irrelevant, ground intervals expand).  `None` when
/// the term is not ground or an interval bound is not an integer.
pub fn canon(t: &Term) -> Option<String> {
    match t {
        Term::Int(n) => Some(format!("i{n}")),
        Term::Arith(..) => t.eval_int().map(|n| format!("i{n}")),
        Term::Atom(a) => Some(format!("a{a}")),
        Term::Tagged(b, a) => Some(format!("t{b}?{a}")),
        Term::Var(_) => None,
        Term::Empty => Some("s{}".to_string()),
        Term::Cons(_, _) => {
            let (elems, tail) = t.as_ext()?;
            let mut set: BTreeSet<String> = BTreeSet::new();
            for e in elems {
                set.insert(canon(e)?);
            }
            match tail {
                Term::Empty => {}
                Term::Interval(_, _) => {
                    let c = canon(tail)?;
                    let inner = c.strip_prefix("s{")?.strip_suffix('}')?;
                    if !inner.is_empty() {
                        for part in inner.split('\u{1}') {
                            set.insert(part.to_string());
                        }
                    }
                }
                _ => return None,
            }
            Some(format!(
                "s{{{}}}",
                set.into_iter().collect::<Vec<_>>().join("\u{1}")
            ))
        }
        Term::Interval(a, b) => {
            let (a, b) = (a.eval_int()?, b.eval_int()?);
            let mut set = BTreeSet::new();
            for n in a..=b {
                set.insert(format!("i{n}"));
            }
            Some(format!(
                "s{{{}}}",
                set.into_iter().collect::<Vec<_>>().join("\u{1}")
            ))
        }
        Term::Pair(a, b) => Some(format!("p({},{})", canon(a)?, canon(b)?)),
    }
}

/// Expand a ground interval into an extensional set.
fn expand_interval(t: &Term) -> Option<Term> {
    if let Term::Interval(a, b) = t {
        let (a, b) = (a.eval_int()?, b.eval_int()?);
        let elems: Vec<Term> = (a..=b).map(Term::Int).collect();
        return Some(Term::set_lit(elems, Term::Empty));
    }
    None
}

fn occurs(v: &str, t: &Term) -> bool {
    t.free_vars().contains(v)
}

fn plus1(t: &Term) -> Term {
    Term::add(t.clone(), Term::Int(1))
}

/// Apply one rewrite step to a primitive constraint.
pub fn rewrite_step(c: &Constraint, store: &dyn StoreView, gen: &mut VarGen) -> Action {
    let Constraint::Prim(sym, args) = c else {
        // Calls are resolved by the engine, not by rewriting.
        return Action::Irreducible;
    };
    match sym {
        Sym::Eq => rw_eq(&args[0], &args[1], gen),
        Sym::Neq => rw_neq(&args[0], &args[1], gen),
        Sym::In => rw_in(&args[0], &args[1]),
        Sym::Nin => rw_nin(&args[0], &args[1]),
        Sym::Un => rw_un(&args[0], &args[1], &args[2], gen),
        Sym::Disj => rw_disj(&args[0], &args[1]),
        Sym::Size => rw_size(&args[0], &args[1], store, gen),
        Sym::Id => rw_id(&args[0], &args[1], gen),
        Sym::Inv => rw_inv(&args[0], &args[1], gen),
        Sym::Comp => rw_comp(&args[0], &args[1], &args[2], gen),
        Sym::Leq => rw_leq(&args[0], &args[1]),
    }
}

fn rw_leq(a: &Term, b: &Term) -> Action {
    if a == b {
        return Action::Drop;
    }
    match (a.eval_int(), b.eval_int()) {
        (Some(x), Some(y)) => {
            if x <= y {
                Action::Drop
            } else {
                Action::Fail
            }
        }
        _ => {
            // An =< over something that is manifestly not an integer
            // cannot be satisfied.
            let non_int = |t: &Term| {
                matches!(
                    t,
                    Term::Atom(_)
                        | Term::Tagged(_, _)
                        | Term::Pair(_, _)
                        | Term::Empty
                        | Term::Cons(_, _)
                        | Term::Interval(_, _)
                )
            };
            if non_int(a) || non_int(b) {
                Action::Fail
            } else {
                Action::Irreducible
            }
        }
    }
}

fn rw_eq(s: &Term, t: &Term, gen: &mut VarGen) -> Action {
    if s == t {
        return Action::Drop;
    }
    // Ground fast path with set semantics.
    if let (Some(cs), Some(ct)) = (canon(s), canon(t)) {
        return if cs == ct { Action::Drop } else { Action::Fail };
    }
    // Integer-flavored equalities either evaluate, bind, or go to the
    // integer store as residue.
    if is_int_expr(s) || is_int_expr(t) {
        if let (Term::Var(x), Some(n)) = (s, t.eval_int()) {
            return Action::Bind(x.clone(), Term::Int(n));
        }
        if let (Some(n), Term::Var(y)) = (s.eval_int(), t) {
            return Action::Bind(y.clone(), Term::Int(n));
        }
        return Action::Irreducible;
    }
    match (s, t) {
        (Term::Var(x), _) => bind_var(x, t, gen),
        (_, Term::Var(y)) => bind_var(y, s, gen),
        (Term::Pair(a1, a2), Term::Pair(b1, b2)) => Action::Replace(vec![vec![
            Constraint::eq(a1.as_ref().clone(), b1.as_ref().clone()),
            Constraint::eq(a2.as_ref().clone(), b2.as_ref().clone()),
        ]]),
        (Term::Empty, Term::Cons(_, _)) | (Term::Cons(_, _), Term::Empty) => Action::Fail,
        (Term::Empty, Term::Interval(a, b)) | (Term::Interval(a, b), Term::Empty) => {
            Action::Replace(vec![vec![Constraint::leq(plus1(b), a.as_ref().clone())]])
        }
        (Term::Cons(x, a), Term::Cons(y, b)) => {
            // Set unification: {x/A} = {y/B} branches over the element
            // being shared, duplicated on either side, or permuted away.
            let (x, a) = (x.as_ref().clone(), a.as_ref().clone());
            let (y, b) = (y.as_ref().clone(), b.as_ref().clone());
            let n = gen.fresh_var("N");
            Action::Replace(vec![
                vec![Constraint::eq(x.clone(), y.clone()), Constraint::eq(a.clone(), b.clone())],
                vec![
                    Constraint::eq(x.clone(), y.clone()),
                    Constraint::eq(s.clone(), b.clone()),
                ],
                vec![
                    Constraint::eq(x.clone(), y.clone()),
                    Constraint::eq(a.clone(), t.clone()),
                ],
                vec![
                    Constraint::eq(a, Term::cons(y, n.clone())),
                    Constraint::eq(Term::cons(x, n), b),
                ],
            ])
        }
        (Term::Interval(a, b), Term::Interval(c, d)) => Action::Replace(vec![
            vec![
                Constraint::leq(plus1(b), a.as_ref().clone()),
                Constraint::leq(plus1(d), c.as_ref().clone()),
            ],
            vec![
                Constraint::leq(a.as_ref().clone(), b.as_ref().clone()),
                Constraint::leq(c.as_ref().clone(), d.as_ref().clone()),
                Constraint::eq(a.as_ref().clone(), c.as_ref().clone()),
                Constraint::eq(b.as_ref().clone(), d.as_ref().clone()),
            ],
        ]),
        (Term::Interval(_, _), Term::Cons(_, _)) => match expand_interval(s) {
            Some(e) => Action::Replace(vec![vec![Constraint::eq(e, t.clone())]]),
            None => Action::Irreducible,
        },
        (Term::Cons(_, _), Term::Interval(_, _)) => match expand_interval(t) {
            Some(e) => Action::Replace(vec![vec![Constraint::eq(s.clone(), e)]]),
            None => Action::Irreducible,
        },
        _ => Action::Fail,
    }
}

fn bind_var(x: &str, t: &Term, gen: &mut VarGen) -> Action {
    if !occurs(x, t) {
        return Action::Bind(x.to_string(), t.clone());
    }
    // Occurs check with the tail-absorption exception:
    // X = {t1,..,tn / X}  ~>  X = {t1,..,tn / N} with N fresh.
    if let Some((elems, tail)) = t.as_ext() {
        if tail == &Term::Var(x.to_string())
            && elems.iter().all(|e| !occurs(x, e))
        {
            let n = gen.fresh_var("N");
            let elems: Vec<Term> = elems.into_iter().cloned().collect();
            return Action::Bind(x.to_string(), Term::set_lit(elems, n));
        }
    }
    Action::Fail
}

fn rw_neq(s: &Term, t: &Term, gen: &mut VarGen) -> Action {
    if s == t {
        return Action::Fail;
    }
    if let (Some(cs), Some(ct)) = (canon(s), canon(t)) {
        return if cs == ct { Action::Fail } else { Action::Drop };
    }
    if is_int_expr(s) || is_int_expr(t) {
        return Action::Irreducible;
    }
    // Orient a variable to the left so residue reads `X neq t`.
    if !s.is_var() && t.is_var() {
        return Action::Replace(vec![vec![Constraint::neq(t.clone(), s.clone())]]);
    }
    // Occurs cases: X ≠ t with X inside t is true by well-foundedness,
    // except when t is an extensional set with tail X, which can hold or
    // not depending on the elements — handled by the witness split below.
    let var_in = |x: &str, t: &Term| occurs(x, t);
    if let Term::Var(x) = s {
        if var_in(x, t) {
            if let Some((_, tail)) = t.as_ext() {
                if tail != &Term::Var(x.clone()) {
                    return Action::Drop;
                }
            } else {
                return Action::Drop;
            }
        }
    }
    if let Term::Var(y) = t {
        if var_in(y, s) {
            if let Some((_, tail)) = s.as_ext() {
                if tail != &Term::Var(y.clone()) {
                    return Action::Drop;
                }
            } else {
                return Action::Drop;
            }
        }
    }
    let set_like = |t: &Term| matches!(t, Term::Empty | Term::Cons(_, _) | Term::Interval(_, _));
    match (s, t) {
        (Term::Var(_), _) | (_, Term::Var(_)) => {
            // One side a variable: a witness split is only possible when
            // the other side is an extensional set with the variable as
            // tail (handled here) — otherwise the disequality is in
            // solved form.
            let (x, ext) = match (s, t) {
                (Term::Var(x), _) if t.as_ext().is_some() && var_in(x, t) => (s.clone(), t),
                (_, Term::Var(y)) if s.as_ext().is_some() && var_in(y, s) => (t.clone(), s),
                _ => return Action::Irreducible,
            };
            witness_split(&x, ext, gen)
        }
        (Term::Pair(a1, a2), Term::Pair(b1, b2)) => Action::Replace(vec![
            vec![Constraint::neq(a1.as_ref().clone(), b1.as_ref().clone())],
            vec![Constraint::neq(a2.as_ref().clone(), b2.as_ref().clone())],
        ]),
        (Term::Empty, Term::Cons(_, _)) | (Term::Cons(_, _), Term::Empty) => Action::Drop,
        (Term::Empty, Term::Interval(a, b)) | (Term::Interval(a, b), Term::Empty) => {
            Action::Replace(vec![vec![Constraint::leq(a.as_ref().clone(), b.as_ref().clone())]])
        }
        (Term::Interval(a, b), Term::Interval(c, d)) => {
            // Different as sets: exactly one side empty, or both
            // non-empty with different bounds.
            let (a, b) = (a.as_ref().clone(), b.as_ref().clone());
            let (c, d) = (c.as_ref().clone(), d.as_ref().clone());
            Action::Replace(vec![
                vec![Constraint::leq(plus1(&b), a.clone()), Constraint::leq(c.clone(), d.clone())],
                vec![Constraint::leq(a.clone(), b.clone()), Constraint::leq(plus1(&d), c.clone())],
                vec![
                    Constraint::leq(a.clone(), b.clone()),
                    Constraint::leq(c.clone(), d.clone()),
                    Constraint::neq(a.clone(), c.clone()),
                ],
                vec![
                    Constraint::leq(a.clone(), b.clone()),
                    Constraint::leq(c.clone(), d.clone()),
                    Constraint::eq(a, c),
                    Constraint::neq(b, d),
                ],
            ])
        }
        _ if set_like(s) && set_like(t) => witness_split(s, t, gen),
        _ => Action::Drop,
    }
}

/// s ≠ t for set-shaped s, t via a fresh witness element on one side only.
fn witness_split(s: &Term, t: &Term, gen: &mut VarGen) -> Action {
    let n = gen.fresh_var("N");
    Action::Replace(vec![
        vec![
            Constraint::is_in(n.clone(), s.clone()),
            Constraint::nin(n.clone(), t.clone()),
        ],
        vec![Constraint::is_in(n.clone(), t.clone()), Constraint::nin(n, s.clone())],
    ])
}

fn rw_in(x: &Term, s: &Term) -> Action {
    if let Term::Var(v) = s {
        if occurs(v, x) {
            // x ∈ S with S occurring in x contradicts well-foundedness.
            return Action::Fail;
        }
    }
    match s {
        Term::Empty => Action::Fail,
        Term::Cons(y, a) => Action::Replace(vec![
            vec![Constraint::eq(x.clone(), y.as_ref().clone())],
            vec![Constraint::is_in(x.clone(), a.as_ref().clone())],
        ]),
        Term::Interval(a, b) => {
            if ground_scalar(x) && x.eval_int().is_none() {
                return Action::Fail;
            }
            if matches!(x, Term::Empty | Term::Cons(_, _) | Term::Interval(_, _)) {
                return Action::Fail;
            }
            Action::Replace(vec![vec![
                Constraint::leq(a.as_ref().clone(), x.clone()),
                Constraint::leq(x.clone(), b.as_ref().clone()),
            ]])
        }
        Term::Var(_) => Action::Irreducible,
        _ => Action::Fail,
    }
}

fn rw_nin(x: &Term, s: &Term) -> Action {
    if let Term::Var(v) = s {
        if occurs(v, x) {
            return Action::Drop;
        }
    }
    match s {
        Term::Empty => Action::Drop,
        Term::Cons(y, a) => Action::Replace(vec![vec![
            Constraint::neq(x.clone(), y.as_ref().clone()),
            Constraint::nin(x.clone(), a.as_ref().clone()),
        ]]),
        Term::Interval(a, b) => {
            if ground_scalar(x) && x.eval_int().is_none() {
                return Action::Drop;
            }
            if matches!(x, Term::Empty | Term::Cons(_, _) | Term::Interval(_, _)) {
                return Action::Drop;
            }
            Action::Replace(vec![
                vec![Constraint::leq(plus1(x), a.as_ref().clone())],
                vec![Constraint::leq(plus1(b), x.clone())],
            ])
        }
        Term::Var(_) => Action::Irreducible,
        _ => Action::Drop,
    }
}

fn rw_un(a: &Term, b: &Term, c: &Term, gen: &mut VarGen) -> Action {
    for t in [a, b, c] {
        if ground_scalar(t) {
            return Action::Fail;
        }
    }
    // Empty cases.
    if *a == Term::Empty {
        return Action::Replace(vec![vec![Constraint::eq(b.clone(), c.clone())]]);
    }
    if *b == Term::Empty {
        return Action::Replace(vec![vec![Constraint::eq(a.clone(), c.clone())]]);
    }
    if *c == Term::Empty {
        return Action::Replace(vec![vec![
            Constraint::eq(a.clone(), Term::Empty),
            Constraint::eq(b.clone(), Term::Empty),
        ]]);
    }
    // un(A,A,C) ~> A = C
    if a == b {
        return Action::Replace(vec![vec![Constraint::eq(a.clone(), c.clone())]]);
    }
    // Subset forms un(A,B,B) / un(A,B,A): decompose the extensional side
    // into memberships.
    let subset = |sub: &Term, sup: &Term| -> Option<Action> {
        match sub.as_ext() {
            Some((elems, tail)) => {
                let mut out: Vec<Constraint> = elems
                    .into_iter()
                    .map(|e| Constraint::is_in(e.clone(), sup.clone()))
                    .collect();
                match tail {
                    Term::Empty => {}
                    Term::Var(_) => out.push(Constraint::un(tail.clone(), sup.clone(), sup.clone())),
                    _ => return None,
                }
                Some(Action::Replace(vec![out]))
            }
            None => None,
        }
    };
    if b == c {
        if let Some(act) = subset(a, b) {
            return act;
        }
        if a.is_var() {
            return Action::Irreducible;
        }
    }
    if a == c {
        if let Some(act) = subset(b, a) {
            return act;
        }
        if b.is_var() {
            return Action::Irreducible;
        }
    }
    // Concatenation: both inputs fully extensional and the output a
    // variable — a single deterministic solved form (set semantics
    // absorbs duplicates, so no disequalities are needed).
    if c.is_var() {
        let full_ext = |t: &Term| -> Option<Vec<Term>> {
            match t {
                Term::Cons(_, _) => {
                    let (elems, tail) = t.as_ext()?;
                    if *tail == Term::Empty {
                        Some(elems.into_iter().cloned().collect())
                    } else {
                        None
                    }
                }
                _ => None,
            }
        };
        if let (Some(ea), Some(eb)) = (full_ext(a), full_ext(b)) {
            // Set semantics absorbs duplicates; drop ground repeats for a
            // canonical answer.
            let mut elems: Vec<Term> = Vec::new();
            let mut seen: BTreeSet<String> = BTreeSet::new();
            for e in ea.into_iter().chain(eb) {
                match canon(&e) {
                    Some(k) => {
                        if seen.insert(k) {
                            elems.push(e);
                        }
                    }
                    None => elems.push(e),
                }
            }
            return Action::Replace(vec![vec![Constraint::eq(
                c.clone(),
                Term::set_lit(elems, Term::Empty),
            )]]);
        }
    }
    // First argument extensional: peel its first element.
    if let Some((elems, _)) = a.as_ext() {
        let x = elems[0].clone();
        let n1 = gen.fresh_var("N");
        let n = gen.fresh_var("N");
        let n2 = gen.fresh_var("N");
        let common = vec![
            Constraint::eq(a.clone(), Term::cons(x.clone(), n1.clone())),
            Constraint::nin(x.clone(), n1.clone()),
            Constraint::eq(c.clone(), Term::cons(x.clone(), n.clone())),
        ];
        let mut br1 = common.clone();
        br1.push(Constraint::nin(x.clone(), b.clone()));
        br1.push(Constraint::un(n1.clone(), b.clone(), n.clone()));
        let mut br2 = common;
        br2.push(Constraint::eq(b.clone(), Term::cons(x.clone(), n2.clone())));
        br2.push(Constraint::nin(x, n2.clone()));
        br2.push(Constraint::un(n1, n2, n));
        return Action::Replace(vec![br1, br2]);
    }
    // Second argument extensional: symmetric.
    if let Some((elems, _)) = b.as_ext() {
        let y = elems[0].clone();
        let n1 = gen.fresh_var("N");
        let n = gen.fresh_var("N");
        let n2 = gen.fresh_var("N");
        let common = vec![
            Constraint::eq(b.clone(), Term::cons(y.clone(), n1.clone())),
            Constraint::nin(y.clone(), n1.clone()),
            Constraint::eq(c.clone(), Term::cons(y.clone(), n.clone())),
        ];
        let mut br1 = common.clone();
        br1.push(Constraint::nin(y.clone(), a.clone()));
        br1.push(Constraint::un(a.clone(), n1.clone(), n.clone()));
        let mut br2 = common;
        br2.push(Constraint::eq(a.clone(), Term::cons(y.clone(), n2.clone())));
        br2.push(Constraint::nin(y, n2.clone()));
        br2.push(Constraint::un(n2, n1, n));
        return Action::Replace(vec![br1, br2]);
    }
    // Third argument extensional: its first element came from A, from B,
    // or from both.
    if let Some((elems, _)) = c.as_ext() {
        let t0 = elems[0].clone();
        let n = gen.fresh_var("N");
        let n1 = gen.fresh_var("N");
        let n2 = gen.fresh_var("N");
        let common = vec![
            Constraint::eq(c.clone(), Term::cons(t0.clone(), n.clone())),
            Constraint::nin(t0.clone(), n.clone()),
        ];
        let mut br1 = common.clone();
        br1.push(Constraint::eq(a.clone(), Term::cons(t0.clone(), n1.clone())));
        br1.push(Constraint::nin(t0.clone(), n1.clone()));
        br1.push(Constraint::nin(t0.clone(), b.clone()));
        br1.push(Constraint::un(n1.clone(), b.clone(), n.clone()));
        let mut br2 = common.clone();
        br2.push(Constraint::eq(b.clone(), Term::cons(t0.clone(), n2.clone())));
        br2.push(Constraint::nin(t0.clone(), n2.clone()));
        br2.push(Constraint::nin(t0.clone(), a.clone()));
        br2.push(Constraint::un(a.clone(), n2.clone(), n.clone()));
        let mut br3 = common;
        br3.push(Constraint::eq(a.clone(), Term::cons(t0.clone(), n1.clone())));
        br3.push(Constraint::nin(t0.clone(), n1.clone()));
        br3.push(Constraint::eq(b.clone(), Term::cons(t0.clone(), n2.clone())));
        br3.push(Constraint::nin(t0, n2.clone()));
        br3.push(Constraint::un(n1, n2, n));
        return Action::Replace(vec![br1, br2, br3]);
    }
    Action::Irreducible
}

fn rw_disj(a: &Term, b: &Term) -> Action {
    if ground_scalar(a) || ground_scalar(b) {
        return Action::Fail;
    }
    if *a == Term::Empty || *b == Term::Empty {
        return Action::Drop;
    }
    if a == b {
        return Action::Replace(vec![vec![Constraint::eq(a.clone(), Term::Empty)]]);
    }
    if let Some((elems, _)) = a.as_ext() {
        let x = elems[0].clone();
        let rest = match a {
            Term::Cons(_, t) => t.as_ref().clone(),
            _ => unreachable!(),
        };
        return Action::Replace(vec![vec![
            Constraint::nin(x, b.clone()),
            Constraint::disj(rest, b.clone()),
        ]]);
    }
    if let Some((elems, _)) = b.as_ext() {
        let y = elems[0].clone();
        let rest = match b {
            Term::Cons(_, t) => t.as_ref().clone(),
            _ => unreachable!(),
        };
        return Action::Replace(vec![vec![
            Constraint::nin(y, a.clone()),
            Constraint::disj(a.clone(), rest),
        ]]);
    }
    if let (Term::Interval(a1, b1), Term::Interval(a2, b2)) = (a, b) {
        return Action::Replace(vec![
            vec![Constraint::leq(plus1(b1), a1.as_ref().clone())],
            vec![Constraint::leq(plus1(b2), a2.as_ref().clone())],
            vec![Constraint::leq(plus1(b1), a2.as_ref().clone())],
            vec![Constraint::leq(plus1(b2), a1.as_ref().clone())],
        ]);
    }
    Action::Irreducible
}

fn rw_size(s: &Term, m: &Term, store: &dyn StoreView, gen: &mut VarGen) -> Action {
    if ground_scalar(s) {
        return Action::Fail;
    }
    if m.is_ground() && m.eval_int().is_none() {
        return Action::Fail;
    }
    match s {
        Term::Empty => Action::Replace(vec![vec![Constraint::eq(m.clone(), Term::Int(0))]]),
        Term::Interval(a, b) => Action::Replace(vec![
            vec![
                Constraint::leq(plus1(b), a.as_ref().clone()),
                Constraint::eq(m.clone(), Term::Int(0)),
            ],
            vec![
                Constraint::leq(a.as_ref().clone(), b.as_ref().clone()),
                Constraint::eq(
                    m.clone(),
                    Term::add(Term::sub(b.as_ref().clone(), a.as_ref().clone()), Term::Int(1)),
                ),
            ],
        ]),
        Term::Cons(x, a) => {
            // size({x/A}, m): either x is new (m = 1 + size A) or it is
            // a duplicate already in A.
            let (x, a) = (x.as_ref().clone(), a.as_ref().clone());
            let n = gen.fresh_var("N");
            let k = gen.fresh_var("N");
            Action::Replace(vec![
                vec![
                    Constraint::nin(x.clone(), a.clone()),
                    Constraint::eq(m.clone(), Term::add(Term::Int(1), k.clone())),
                    Constraint::size(a.clone(), k.clone()),
                    Constraint::leq(Term::Int(0), k),
                ],
                vec![
                    Constraint::eq(a.clone(), Term::cons(x.clone(), n.clone())),
                    Constraint::nin(x.clone(), n.clone()),
                    Constraint::size(Term::cons(x, n), m.clone()),
                ],
            ])
        }
        Term::Var(sv) => {
            let k = match m {
                Term::Int(k) => Some(*k),
                Term::Var(mv) => store.int_value(mv),
                _ => m.eval_int(),
            };
            match k {
                Some(k) if k < 0 => Action::Fail,
                Some(0) => {
                    Action::Replace(vec![vec![Constraint::eq(s.clone(), Term::Empty)]])
                }
                Some(k) if k <= SIZE_INSTANTIATION_CAP => {
                    let xs: Vec<Term> = (0..k).map(|_| gen.fresh_var("E")).collect();
                    let mut br = vec![Constraint::eq(
                        Term::Var(sv.clone()),
                        Term::set_lit(xs.clone(), Term::Empty),
                    )];
                    for i in 0..xs.len() {
                        for j in i + 1..xs.len() {
                            br.push(Constraint::neq(xs[i].clone(), xs[j].clone()));
                        }
                    }
                    if m.is_var() {
                        br.push(Constraint::eq(m.clone(), Term::Int(k)));
                    }
                    Action::Replace(vec![br])
                }
                _ => Action::Irreducible,
            }
        }
        _ => Action::Irreducible,
    }
}

/// Ensure the head of an extensional relation is a pair, binding a
/// variable head to a fresh pair when needed.  Returns the head as a
/// pair, a "retry after binding" action, or failure for a non-pair head.
enum RelHead {
    Pair(Term, Term, Term), // fst, snd, tail
    Retry(Action),
    Bad,
}

fn rel_head(r: &Term, gen: &mut VarGen) -> RelHead {
    let Term::Cons(h, tail) = r else { return RelHead::Bad };
    match h.as_ref() {
        Term::Pair(x, y) => {
            RelHead::Pair(x.as_ref().clone(), y.as_ref().clone(), tail.as_ref().clone())
        }
        Term::Var(v) => {
            let fx = gen.fresh_var("X");
            let fy = gen.fresh_var("Y");
            RelHead::Retry(Action::Replace(vec![vec![Constraint::eq(
                Term::var(v),
                Term::pair(fx, fy),
            )]]))
        }
        _ => RelHead::Bad,
    }
}

fn rw_id(a: &Term, r: &Term, gen: &mut VarGen) -> Action {
    if ground_scalar(a) || ground_scalar(r) {
        return Action::Fail;
    }
    if *a == Term::Empty {
        return Action::Replace(vec![vec![Constraint::eq(r.clone(), Term::Empty)]]);
    }
    if *r == Term::Empty {
        return Action::Replace(vec![vec![Constraint::eq(a.clone(), Term::Empty)]]);
    }
    if let Some(e) = expand_interval(a) {
        return Action::Replace(vec![vec![Constraint::prim(Sym::Id, vec![e, r.clone()])]]);
    }
    if let Term::Cons(x, a1) = a {
        let (x, _a1) = (x.as_ref().clone(), a1.as_ref().clone());
        let n1 = gen.fresh_var("N");
        let n = gen.fresh_var("N");
        return Action::Replace(vec![vec![
            Constraint::eq(a.clone(), Term::cons(x.clone(), n1.clone())),
            Constraint::nin(x.clone(), n1.clone()),
            Constraint::eq(r.clone(), Term::cons(Term::pair(x.clone(), x.clone()), n.clone())),
            Constraint::nin(Term::pair(x.clone(), x), n.clone()),
            Constraint::prim(Sym::Id, vec![n1, n]),
        ]]);
    }
    if matches!(r, Term::Cons(_, _)) {
        match rel_head(r, gen) {
            RelHead::Retry(act) => {
                if let Action::Replace(mut brs) = act {
                    brs[0].push(Constraint::prim(Sym::Id, vec![a.clone(), r.clone()]));
                    return Action::Replace(brs);
                }
                unreachable!()
            }
            RelHead::Bad => return Action::Fail,
            RelHead::Pair(u, v2, _) => {
                let n1 = gen.fresh_var("N");
                let n = gen.fresh_var("N");
                return Action::Replace(vec![vec![
                    Constraint::eq(u.clone(), v2),
                    Constraint::eq(a.clone(), Term::cons(u.clone(), n1.clone())),
                    Constraint::nin(u.clone(), n1.clone()),
                    Constraint::eq(
                        r.clone(),
                        Term::cons(Term::pair(u.clone(), u.clone()), n.clone()),
                    ),
                    Constraint::nin(Term::pair(u.clone(), u), n.clone()),
                    Constraint::prim(Sym::Id, vec![n1, n]),
                ]]);
            }
        }
    }
    Action::Irreducible
}

fn rw_inv(r: &Term, s: &Term, gen: &mut VarGen) -> Action {
    if ground_scalar(r) || ground_scalar(s) {
        return Action::Fail;
    }
    if *r == Term::Empty {
        return Action::Replace(vec![vec![Constraint::eq(s.clone(), Term::Empty)]]);
    }
    if *s == Term::Empty {
        return Action::Replace(vec![vec![Constraint::eq(r.clone(), Term::Empty)]]);
    }
    if let Some(e) = expand_interval(r) {
        return Action::Replace(vec![vec![Constraint::prim(Sym::Inv, vec![e, s.clone()])]]);
    }
    if let Some(e) = expand_interval(s) {
        return Action::Replace(vec![vec![Constraint::prim(Sym::Inv, vec![r.clone(), e])]]);
    }
    if matches!(r, Term::Cons(_, _)) {
        return match rel_head(r, gen) {
            RelHead::Retry(act) => {
                if let Action::Replace(mut brs) = act {
                    brs[0].push(Constraint::prim(Sym::Inv, vec![r.clone(), s.clone()]));
                    return Action::Replace(brs);
                }
                unreachable!()
            }
            RelHead::Bad => Action::Fail,
            RelHead::Pair(x, y, _) => {
                let n1 = gen.fresh_var("N");
                let n = gen.fresh_var("N");
                let p = Term::pair(x.clone(), y.clone());
                let q = Term::pair(y, x);
                Action::Replace(vec![vec![
                    Constraint::eq(r.clone(), Term::cons(p.clone(), n1.clone())),
                    Constraint::nin(p, n1.clone()),
                    Constraint::eq(s.clone(), Term::cons(q.clone(), n.clone())),
                    Constraint::nin(q, n.clone()),
                    Constraint::prim(Sym::Inv, vec![n1, n]),
                ]])
            }
        };
    }
    if matches!(s, Term::Cons(_, _)) && r.is_var() {
        return Action::Replace(vec![vec![Constraint::prim(
            Sym::Inv,
            vec![s.clone(), r.clone()],
        )]]);
    }
    Action::Irreducible
}

fn singleton(p: Term) -> Term {
    Term::cons(p, Term::Empty)
}

fn rw_comp(r: &Term, s: &Term, t: &Term, gen: &mut VarGen) -> Action {
    for x in [r, s, t] {
        if ground_scalar(x) {
            return Action::Fail;
        }
    }
    if *r == Term::Empty || *s == Term::Empty {
        return Action::Replace(vec![vec![Constraint::eq(t.clone(), Term::Empty)]]);
    }
    if let Some(e) = expand_interval(r) {
        return Action::Replace(vec![vec![Constraint::prim(
            Sym::Comp,
            vec![e, s.clone(), t.clone()],
        )]]);
    }
    if let Some(e) = expand_interval(s) {
        return Action::Replace(vec![vec![Constraint::prim(
            Sym::Comp,
            vec![r.clone(), e, t.clone()],
        )]]);
    }
    // Normalize variable heads to pairs before anything else.
    for x in [r, s] {
        if matches!(x, Term::Cons(_, _)) {
            match rel_head(x, gen) {
                RelHead::Retry(Action::Replace(mut brs)) => {
                    brs[0].push(Constraint::prim(
                        Sym::Comp,
                        vec![r.clone(), s.clone(), t.clone()],
                    ));
                    return Action::Replace(brs);
                }
                RelHead::Bad => return Action::Fail,
                _ => {}
            }
        }
    }
    // Empty-composition rule: comp({(x,u)/R}, {(t,z)/S}, {}) rewrites to
    // u ≠ t ∧ comp({(x,u)},S,{}) ∧ comp(R,{(t,z)},{}) ∧ comp(R,S,{}).
    if *t == Term::Empty {
        if let (Term::Cons(_, _), Term::Cons(_, _)) = (r, s) {
            let RelHead::Pair(x, u, rt) = rel_head(r, gen) else { unreachable!() };
            let RelHead::Pair(t1, z, st) = rel_head(s, gen) else { unreachable!() };
            return Action::Replace(vec![vec![
                Constraint::neq(u.clone(), t1.clone()),
                Constraint::prim(
                    Sym::Comp,
                    vec![singleton(Term::pair(x, u)), st.clone(), Term::Empty],
                ),
                Constraint::prim(
                    Sym::Comp,
                    vec![rt.clone(), singleton(Term::pair(t1, z)), Term::Empty],
                ),
                Constraint::prim(Sym::Comp, vec![rt, st, Term::Empty]),
            ]]);
        }
    }
    // Decompose a multi-element first argument.
    if let Term::Cons(h, rt) = r {
        if rt.as_ref() != &Term::Empty {
            let t1 = gen.fresh_var("T");
            let t2 = gen.fresh_var("T");
            return Action::Replace(vec![vec![
                Constraint::prim(
                    Sym::Comp,
                    vec![singleton(h.as_ref().clone()), s.clone(), t1.clone()],
                ),
                Constraint::prim(Sym::Comp, vec![rt.as_ref().clone(), s.clone(), t2.clone()]),
                Constraint::un(t1, t2, t.clone()),
            ]]);
        }
        // Singleton first argument against an extensional second.
        if let Term::Cons(_, _) = s {
            let RelHead::Pair(x, u, _) = rel_head(r, gen) else { unreachable!() };
            let RelHead::Pair(t0, z, st) = rel_head(s, gen) else { unreachable!() };
            let n = gen.fresh_var("N");
            return Action::Replace(vec![
                vec![
                    Constraint::eq(u.clone(), t0.clone()),
                    Constraint::eq(t.clone(), Term::cons(Term::pair(x.clone(), z), n.clone())),
                    Constraint::prim(Sym::Comp, vec![r.clone(), st.clone(), n]),
                ],
                vec![
                    Constraint::neq(u, t0),
                    Constraint::prim(Sym::Comp, vec![r.clone(), st, t.clone()]),
                ],
            ]);
        }
    }
    Action::Irreducible
}

/// Would `rewrite_step` leave this constraint untouched?
pub fn is_irreducible(c: &Constraint, store: &dyn StoreView) -> bool {
    let mut gen = VarGen::new();
    matches!(rewrite_step(c, store, &mut gen), Action::Irreducible)
}
