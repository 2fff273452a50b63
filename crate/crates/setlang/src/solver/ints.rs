//! The integer store: satisfiability checking for the linear integer
//! constraints left irreducible by rewriting (`=<` plus integer-flavored
//! `=` and `neq`).
//!
//! The check is conservative: bounds propagation runs to a fixpoint and
//! an empty interval means `Unsat`; when every variable ends up with
//! finite bounds over a small domain an exhaustive check decides
//! exactly; otherwise equality elimination plus a single-variable
//! analysis may still conclude `Sat`, and everything else is `Unknown`
//! (the constraints stay in the answer as residue).

use crate::ast::{Constraint, Sym, Term};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntSat {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rel {
    /// Σ coeffs ≤ rhs
    Le,
    /// Σ coeffs = rhs
    Eq,
    /// Σ coeffs ≠ rhs
    Ne,
}

#[derive(Debug, Clone)]
struct LinCon {
    coeffs: BTreeMap<String, i64>,
    rhs: i64,
    rel: Rel,
}

#[derive(Debug, Clone, Default)]
struct LinExpr {
    coeffs: BTreeMap<String, i64>,
    cst: i64,
}

impl LinExpr {
    fn add(mut self, other: LinExpr, sign: i64) -> Option<LinExpr> {
        self.cst = self.cst.checked_add(other.cst.checked_mul(sign)?)?;
        for (v, c) in other.coeffs {
            let e = self.coeffs.entry(v).or_insert(0);
            *e = e.checked_add(c.checked_mul(sign)?)?;
        }
        self.coeffs.retain(|_, c| *c != 0);
        Some(self)
    }
    fn scale(mut self, k: i64) -> Option<LinExpr> {
        self.cst = self.cst.checked_mul(k)?;
        for c in self.coeffs.values_mut() {
            *c = c.checked_mul(k)?;
        }
        self.coeffs.retain(|_, c| *c != 0);
        Some(self)
    }
}

fn linearize(t: &Term) -> Option<LinExpr> {
    match t {
        Term::Int(n) => Some(LinExpr {
            coeffs: BTreeMap::new(),
            cst: *n,
        }),
        Term::Var(v) => {
            let mut coeffs = BTreeMap::new();
            coeffs.insert(v.clone(), 1);
            Some(LinExpr { coeffs, cst: 0 })
        }
        Term::Arith(op, a, b) => {
            let la = linearize(a)?;
            let lb = linearize(b)?;
            match op {
                crate::ast::IntOp::Add => la.add(lb, 1),
                crate::ast::IntOp::Sub => la.add(lb, -1),
                crate::ast::IntOp::Mul => {
                    if la.coeffs.is_empty() {
                        lb.scale(la.cst)
                    } else if lb.coeffs.is_empty() {
                        la.scale(lb.cst)
                    } else {
                        None
                    }
                }
            }
        }
        _ => None,
    }
}

/// Is this constraint one the integer store should reason about?
pub fn is_int_constraint(c: &Constraint) -> bool {
    match c {
        Constraint::Prim(Sym::Leq, _) => true,
        Constraint::Prim(Sym::Eq | Sym::Neq, args) => {
            let intish = |t: &Term| {
                matches!(t, Term::Arith(..) | Term::Int(_))
                    || matches!(t, Term::Var(_))
            };
            args.iter().any(|t| matches!(t, Term::Arith(..) | Term::Int(_)))
                && args.iter().all(intish)
        }
        _ => false,
    }
}

fn to_lincon(c: &Constraint) -> Option<LinCon> {
    let (rel, a, b) = match c {
        Constraint::Prim(Sym::Leq, args) => (Rel::Le, &args[0], &args[1]),
        Constraint::Prim(Sym::Eq, args) => (Rel::Eq, &args[0], &args[1]),
        Constraint::Prim(Sym::Neq, args) => (Rel::Ne, &args[0], &args[1]),
        _ => return None,
    };
    let e = linearize(a)?.add(linearize(b)?, -1)?;
    Some(LinCon {
        coeffs: e.coeffs,
        rhs: -e.cst,
        rel,
    })
}

type Bounds = BTreeMap<String, (Option<i64>, Option<i64>)>;

/// One propagation pass; returns false on a detected empty interval.
fn propagate(cons: &[LinCon], bounds: &mut Bounds) -> Result<bool, ()> {
    let mut changed = false;
    for con in cons {
        let les: Vec<(BTreeMap<String, i64>, i64)> = match con.rel {
            Rel::Le => vec![(con.coeffs.clone(), con.rhs)],
            Rel::Eq => {
                let neg: BTreeMap<String, i64> =
                    con.coeffs.iter().map(|(v, c)| (v.clone(), -c)).collect();
                vec![(con.coeffs.clone(), con.rhs), (neg, -con.rhs)]
            }
            Rel::Ne => continue,
        };
        for (coeffs, rhs) in les {
            // For each variable x with coefficient c: c*x ≤ rhs - min(rest)
            for (x, &c) in &coeffs {
                let mut rest_min: i64 = 0;
                let mut ok = true;
                for (y, &cy) in &coeffs {
                    if y == x {
                        continue;
                    }
                    let (lo, hi) = bounds.get(y).cloned().unwrap_or((None, None));
                    let m = if cy > 0 { lo.map(|l| cy * l) } else { hi.map(|h| cy * h) };
                    match m {
                        Some(m) => rest_min = rest_min.saturating_add(m),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                let slack = rhs.saturating_sub(rest_min);
                let entry = bounds.entry(x.clone()).or_insert((None, None));
                if c > 0 {
                    let hi = slack.div_euclid(c);
                    if entry.1.map_or(true, |h| hi < h) {
                        entry.1 = Some(hi);
                        changed = true;
                    }
                } else {
                    // c < 0: x ≥ slack / c (rounding up)
                    let lo = -(slack.div_euclid(-c));
                    if entry.0.map_or(true, |l| lo > l) {
                        entry.0 = Some(lo);
                        changed = true;
                    }
                }
                if let (Some(l), Some(h)) = *entry {
                    if l > h {
                        return Err(());
                    }
                }
            }
        }
    }
    Ok(changed)
}

fn eval_con(con: &LinCon, val: &BTreeMap<String, i64>) -> bool {
    let mut sum: i64 = 0;
    for (v, c) in &con.coeffs {
        sum = sum.saturating_add(c.saturating_mul(val[v]));
    }
    match con.rel {
        Rel::Le => sum <= con.rhs,
        Rel::Eq => sum == con.rhs,
        Rel::Ne => sum != con.rhs,
    }
}

const EXHAUSTIVE_LIMIT: u64 = 1_000_000;

fn exhaustive(cons: &[LinCon], vars: &[String], bounds: &Bounds) -> IntSat {
    let mut space: u64 = 1;
    for v in vars {
        let (lo, hi) = bounds[v];
        let (lo, hi) = (lo.unwrap(), hi.unwrap());
        let w = (hi - lo + 1) as u64;
        space = space.saturating_mul(w);
        if space > EXHAUSTIVE_LIMIT {
            return IntSat::Unknown;
        }
    }
    let mut val = BTreeMap::new();
    fn rec(
        i: usize,
        vars: &[String],
        bounds: &Bounds,
        cons: &[LinCon],
        val: &mut BTreeMap<String, i64>,
    ) -> bool {
        if i == vars.len() {
            return cons.iter().all(|c| eval_con(c, val));
        }
        let (lo, hi) = bounds[&vars[i]];
        for x in lo.unwrap()..=hi.unwrap() {
            val.insert(vars[i].clone(), x);
            if rec(i + 1, vars, bounds, cons, val) {
                return true;
            }
        }
        val.remove(&vars[i]);
        false
    }
    if rec(0, vars, bounds, cons, &mut val) {
        IntSat::Sat
    } else {
        IntSat::Unsat
    }
}

/// Substitute equalities with a unit-coefficient variable into the other
/// constraints, removing that variable.  Equisatisfiable.
fn eliminate(mut cons: Vec<LinCon>) -> Vec<LinCon> {
    loop {
        let mut pick: Option<(usize, String)> = None;
        'outer: for (i, c) in cons.iter().enumerate() {
            if c.rel != Rel::Eq {
                continue;
            }
            for (v, &k) in &c.coeffs {
                if k == 1 || k == -1 {
                    pick = Some((i, v.clone()));
                    break 'outer;
                }
            }
        }
        let Some((i, v)) = pick else { return cons };
        let eq = cons.remove(i);
        let k = eq.coeffs[&v];
        // v = (rhs - rest) / k with k = ±1
        let mut any_change = false;
        for c in cons.iter_mut() {
            let Some(&cv) = c.coeffs.get(&v) else { continue };
            // c' = c - (cv/k) * eq
            let f = cv / k;
            c.coeffs.remove(&v);
            for (w, &ew) in &eq.coeffs {
                if w == &v {
                    continue;
                }
                let e = c.coeffs.entry(w.clone()).or_insert(0);
                *e = e.saturating_sub(f.saturating_mul(ew));
            }
            c.coeffs.retain(|_, x| *x != 0);
            c.rhs = c.rhs.saturating_sub(f.saturating_mul(eq.rhs));
            any_change = true;
        }
        let _ = any_change;
    }
}

fn single_var_sat(c: &LinCon) -> Option<bool> {
    match c.coeffs.len() {
        0 => Some(match c.rel {
            Rel::Le => 0 <= c.rhs,
            Rel::Eq => c.rhs == 0,
            Rel::Ne => c.rhs != 0,
        }),
        1 => {
            let (_, &k) = c.coeffs.iter().next().unwrap();
            Some(match c.rel {
                // k*x ≤ rhs always has integer solutions
                Rel::Le => true,
                // k*x = rhs needs divisibility
                Rel::Eq => c.rhs % k == 0,
                // k*x ≠ rhs always has solutions
                Rel::Ne => true,
            })
        }
        _ => None,
    }
}

/// Decide satisfiability of the integer store.
pub fn check(cons: &[Constraint]) -> IntSat {
    let lincons: Vec<LinCon> = cons.iter().filter_map(to_lincon).collect();
    if lincons.is_empty() {
        return IntSat::Sat;
    }
    let has_unparsed = cons.iter().filter(|c| is_int_constraint(c)).count() != lincons.len();

    let mut bounds: Bounds = BTreeMap::new();
    for _ in 0..10 * lincons.len() + 10 {
        match propagate(&lincons, &mut bounds) {
            Err(()) => return IntSat::Unsat,
            Ok(true) => continue,
            Ok(false) => break,
        }
    }
    let mut vars: Vec<String> = Vec::new();
    for c in &lincons {
        for v in c.coeffs.keys() {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
        }
    }
    vars.sort();
    let all_bounded = vars
        .iter()
        .all(|v| matches!(bounds.get(v), Some((Some(_), Some(_)))));
    if all_bounded {
        let r = exhaustive(&lincons, &vars, &bounds);
        if r != IntSat::Unknown {
            // An unparsed int constraint could not be taken into account,
            // so Sat would be unsound to upgrade; Unsat remains sound.
            if r == IntSat::Sat && has_unparsed {
                return IntSat::Unknown;
            }
            return r;
        }
    }
    // Equality elimination followed by a per-constraint analysis: if
    // every remaining constraint touches at most one variable and each
    // is individually satisfiable, the whole store is satisfiable
    // provided no two of them share a variable adversarially; re-run
    // propagation on the eliminated system to cover that.
    let reduced = eliminate(lincons);
    let mut rbounds: Bounds = BTreeMap::new();
    for _ in 0..10 * reduced.len() + 10 {
        match propagate(&reduced, &mut rbounds) {
            Err(()) => return IntSat::Unsat,
            Ok(true) => continue,
            Ok(false) => break,
        }
    }
    let mut single_vars: Vec<&LinCon> = Vec::new();
    for c in &reduced {
        if c.coeffs.len() > 1 {
            return IntSat::Unknown;
        }
        single_vars.push(c);
    }
    // Group by variable and decide each group exhaustively over its
    // propagated (or default) bounds when finite; a group with an
    // unbounded side and no equality is satisfiable.
    let mut groups: BTreeMap<Option<String>, Vec<&LinCon>> = BTreeMap::new();
    for c in single_vars {
        groups
            .entry(c.coeffs.keys().next().cloned())
            .or_default()
            .push(c);
    }
    for (var, group) in groups {
        match var {
            None => {
                for c in &group {
                    if single_var_sat(c) != Some(true) {
                        return IntSat::Unsat;
                    }
                }
            }
            Some(v) => {
                let (lo, hi) = rbounds.get(&v).cloned().unwrap_or((None, None));
                match (lo, hi) {
                    (Some(lo), Some(hi)) => {
                        let mut found = false;
                        let mut val = BTreeMap::new();
                        for x in lo..=hi.min(lo.saturating_add(1_000_000)) {
                            val.insert(v.clone(), x);
                            if group.iter().all(|c| eval_con(c, &val)) {
                                found = true;
                                break;
                            }
                        }
                        if !found {
                            return IntSat::Unsat;
                        }
                    }
                    _ => {
                        // One side unbounded: inequalities and
                        // disequalities can always escape finitely many
                        // excluded points; equalities need divisibility.
                        for c in &group {
                            if c.rel == Rel::Eq && single_var_sat(c) != Some(true) {
                                return IntSat::Unsat;
                            }
                        }
                    }
                }
            }
        }
    }
    if has_unparsed {
        IntSat::Unknown
    } else {
        IntSat::Sat
    }
}

/// The exact value of a variable if the store pins it down.
pub fn exact_value(cons: &[Constraint], var: &str) -> Option<i64> {
    let lincons: Vec<LinCon> = cons.iter().filter_map(to_lincon).collect();
    let mut bounds: Bounds = BTreeMap::new();
    for _ in 0..10 * lincons.len() + 10 {
        match propagate(&lincons, &mut bounds) {
            Err(()) => return None,
            Ok(true) => continue,
            Ok(false) => break,
        }
    }
    match bounds.get(var) {
        Some((Some(lo), Some(hi))) if lo == hi => Some(*lo),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;

    fn cons_of(src: &str) -> Vec<Constraint> {
        let f = parse_formula(src).unwrap();
        f.dnf()
            .remove(0)
            .into_iter()
            .filter_map(|g| match g {
                crate::ast::Formula::Atom(c) => Some(c),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn empty_interval_is_unsat() {
        assert_eq!(check(&cons_of("0 =< N & N =< -1")), IntSat::Unsat);
        assert_eq!(check(&cons_of("0 =< N & N =< 0 & N neq 0")), IntSat::Unsat);
    }

    #[test]
    fn triangular_system_is_sat() {
        assert_eq!(check(&cons_of("M = 1 + N & 0 =< N")), IntSat::Sat);
    }

    #[test]
    fn coupled_free_system_is_unknown() {
        assert_eq!(
            check(&cons_of("N1 + 1 =< N2 & N3 + 1 =< N4")),
            IntSat::Unknown
        );
    }

    #[test]
    fn bounded_systems_are_decided() {
        assert_eq!(
            check(&cons_of("1 =< X & X =< 3 & 1 =< Y & Y =< 3 & X + Y = 6")),
            IntSat::Sat
        );
        assert_eq!(
            check(&cons_of("1 =< X & X =< 2 & 1 =< Y & Y =< 2 & X + Y = 6")),
            IntSat::Unsat
        );
    }

    #[test]
    fn exact_values() {
        assert_eq!(exact_value(&cons_of("3 =< X & X =< 3"), "X"), Some(3));
        assert_eq!(exact_value(&cons_of("3 =< X & X =< 4"), "X"), None);
        assert_eq!(exact_value(&cons_of("X = 2 + 3"), "X"), Some(5));
    }

    #[test]
    fn non_int_constraints_are_ignored() {
        assert!(!is_int_constraint(&Constraint::eq(
            Term::var("X"),
            Term::atom("a")
        )));
        assert!(is_int_constraint(&Constraint::eq(
            Term::var("X"),
            Term::add(Term::var("Y"), Term::Int(1))
        )));
    }
}
