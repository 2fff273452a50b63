//! Seeded random generators for property-based testing: printable ASTs
//! for parser round-trips, well-typed constraints per rewrite-rule
//! family for the preservation/progress suites, and small formulas over
//! the decidable core for solver-vs-oracle comparison.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ast::{Constraint, Formula, Sym, Term, Type};
use crate::typecheck::Context;

pub struct Gen {
    rng: ChaCha8Rng,
}

const ATOMS: &[&str] = &["a", "b", "c", "d", "e"];
const VARS: &[&str] = &["A", "B", "C", "V", "W", "X", "Y", "Z"];

impl Gen {
    pub fn new(seed: u64) -> Gen {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.rng.gen_range(0..xs.len())]
    }

    fn int(&mut self) -> i64 {
        self.rng.gen_range(-9..=9)
    }

    // -----------------------------------------------------------------
    // Arbitrary printable ASTs (round-trip testing)
    // -----------------------------------------------------------------

    /// A random term of bounded depth.  Every produced term renders to
    /// source the parser accepts.
    pub fn term(&mut self, depth: usize) -> Term {
        let leaf = depth == 0;
        match self.rng.gen_range(0..if leaf { 4 } else { 10 }) {
            0 => Term::Int(self.int()),
            1 => Term::atom(self.pick(ATOMS)),
            2 => Term::tagged(*self.pick(&["u", "v", "bid", "title"]), self.pick(ATOMS)),
            3 => Term::var(*self.pick(VARS)),
            4 => Term::Empty,
            5 => {
                let n = self.rng.gen_range(1..=3);
                let tail = if self.rng.gen_bool(0.3) {
                    Term::var(*self.pick(VARS))
                } else {
                    Term::Empty
                };
                (0..n).fold(tail, |t, _| Term::cons(self.term(depth - 1), t))
            }
            6 => Term::interval(self.arith(depth - 1), self.arith(depth - 1)),
            7 => Term::pair(self.term(depth - 1), self.term(depth - 1)),
            _ => self.arith(depth - 1),
        }
    }

    /// A random arithmetic term (linear: multiplication keeps one side
    /// constant, as the parser requires).
    fn arith(&mut self, depth: usize) -> Term {
        if depth == 0 || self.rng.gen_bool(0.4) {
            return if self.rng.gen_bool(0.5) {
                Term::Int(self.int())
            } else {
                Term::var(*self.pick(VARS))
            };
        }
        match self.rng.gen_range(0..3) {
            0 => Term::add(self.arith(depth - 1), self.arith(depth - 1)),
            1 => Term::sub(self.arith(depth - 1), self.arith(depth - 1)),
            _ => Term::mul(Term::Int(self.int()), self.arith(depth - 1)),
        }
    }

    /// A random ground type.
    pub fn ground_type(&mut self, depth: usize) -> Type {
        match self.rng.gen_range(0..if depth == 0 { 3 } else { 5 }) {
            0 => Type::Int,
            1 => Type::basic(*self.pick(&["u", "v", "bid"])),
            2 => Type::Enum(vec!["a".into(), "b".into(), "c".into()]),
            3 => Type::set(self.ground_type(depth - 1)),
            _ => Type::prod(self.ground_type(depth - 1), self.ground_type(depth - 1)),
        }
    }

    fn constraint(&mut self, depth: usize) -> Constraint {
        let sym = *self.pick(&[
            Sym::Eq,
            Sym::Neq,
            Sym::In,
            Sym::Nin,
            Sym::Un,
            Sym::Disj,
            Sym::Size,
            Sym::Id,
            Sym::Inv,
            Sym::Comp,
            Sym::Leq,
        ]);
        let args = (0..sym.arity()).map(|_| self.term(depth)).collect();
        Constraint::Prim(sym, args)
    }

    /// A random formula for round-trip testing.
    pub fn formula(&mut self, size: usize) -> Formula {
        if size == 0 {
            return match self.rng.gen_range(0..5) {
                0 => Formula::True,
                1 => Formula::False,
                2 => Formula::Dec((*self.pick(VARS)).to_string(), self.ground_type(2)),
                _ => Formula::Atom(self.constraint(2)),
            };
        }
        let left = self.rng.gen_range(0..size);
        let a = self.formula(left);
        let b = self.formula(size - 1 - left);
        if self.rng.gen_bool(0.7) {
            Formula::and(a, b)
        } else {
            Formula::or(a, b)
        }
    }

    // -----------------------------------------------------------------
    // Well-typed constraints (preservation / progress suites)
    // -----------------------------------------------------------------

    /// A term of the given type, possibly introducing declared
    /// variables into `ctx`.
    pub fn typed_term(&mut self, t: &Type, ctx: &mut BTreeMap<String, Type>, depth: usize) -> Term {
        // Reuse or introduce a variable of this type.
        if self.rng.gen_bool(0.35) {
            let existing: Vec<String> = ctx
                .iter()
                .filter(|(_, vt)| *vt == t)
                .map(|(v, _)| v.clone())
                .collect();
            if !existing.is_empty() && self.rng.gen_bool(0.6) {
                return Term::var(self.pick(&existing));
            }
            for cand in VARS {
                if !ctx.contains_key(*cand) {
                    ctx.insert((*cand).to_string(), t.clone());
                    return Term::var(*cand);
                }
            }
        }
        match t {
            Type::Int => {
                if depth > 0 && self.rng.gen_bool(0.3) {
                    Term::add(
                        self.typed_term(t, ctx, depth - 1),
                        self.typed_term(t, ctx, depth - 1),
                    )
                } else {
                    Term::Int(self.int())
                }
            }
            Type::Basic(b) => Term::tagged(b, self.pick(ATOMS)),
            Type::Enum(atoms) => {
                let a = self.rng.gen_range(0..atoms.len());
                Term::atom(&atoms[a])
            }
            Type::Prod(a, b) => Term::pair(
                self.typed_term(a, ctx, depth.saturating_sub(1)),
                self.typed_term(b, ctx, depth.saturating_sub(1)),
            ),
            Type::Set(inner) => {
                if matches!(**inner, Type::Int) && depth > 0 && self.rng.gen_bool(0.15) {
                    return Term::interval(Term::Int(self.int()), Term::Int(self.int()));
                }
                let n = self.rng.gen_range(0..=depth.min(3));
                let tail = Term::Empty;
                (0..n).fold(tail, |s, _| {
                    Term::cons(self.typed_term(inner, ctx, depth.saturating_sub(1)), s)
                })
            }
            Type::Var(_) => Term::Int(self.int()),
        }
    }

    /// A well-typed constraint of the given rule family, together with
    /// the typing context its variables were declared under.
    pub fn typed_constraint(&mut self, sym: Sym) -> (Constraint, Context) {
        let mut vars: BTreeMap<String, Type> = BTreeMap::new();
        let elem = self.ground_type(1);
        let args: Vec<Term> = match sym {
            Sym::Eq | Sym::Neq => {
                let t = if self.rng.gen_bool(0.7) {
                    Type::set(elem)
                } else {
                    elem
                };
                (0..2).map(|_| self.typed_term(&t, &mut vars, 2)).collect()
            }
            Sym::In | Sym::Nin => {
                let set = Type::set(elem.clone());
                vec![
                    self.typed_term(&elem, &mut vars, 2),
                    self.typed_term(&set, &mut vars, 2),
                ]
            }
            Sym::Un => {
                let t = Type::set(elem);
                (0..3).map(|_| self.typed_term(&t, &mut vars, 2)).collect()
            }
            Sym::Disj => {
                let t = Type::set(elem);
                (0..2).map(|_| self.typed_term(&t, &mut vars, 2)).collect()
            }
            Sym::Size => vec![
                self.typed_term(&Type::set(elem), &mut vars, 2),
                self.typed_term(&Type::Int, &mut vars, 1),
            ],
            Sym::Id => {
                let rel = Type::rel(elem.clone(), elem.clone());
                vec![
                    self.typed_term(&Type::set(elem), &mut vars, 2),
                    self.typed_term(&rel, &mut vars, 2),
                ]
            }
            Sym::Inv => {
                let other = self.ground_type(1);
                vec![
                    self.typed_term(&Type::rel(elem.clone(), other.clone()), &mut vars, 2),
                    self.typed_term(&Type::rel(other, elem), &mut vars, 2),
                ]
            }
            Sym::Comp => {
                let b = self.ground_type(1);
                let c = self.ground_type(1);
                vec![
                    self.typed_term(&Type::rel(elem.clone(), b.clone()), &mut vars, 2),
                    self.typed_term(&Type::rel(b, c.clone()), &mut vars, 2),
                    self.typed_term(&Type::rel(elem, c), &mut vars, 2),
                ]
            }
            Sym::Leq => (0..2)
                .map(|_| self.typed_term(&Type::Int, &mut vars, 1))
                .collect(),
        };
        let mut ctx = Context::new();
        // The only enum this generator produces is enum([a,b,c]); its
        // atoms must be in scope even when no variable carries the type.
        ctx.register_enums(&Type::Enum(vec!["a".into(), "b".into(), "c".into()]))
            .unwrap();
        for (v, t) in vars {
            ctx.register_enums(&t).unwrap();
            ctx.declare(&v, &t).unwrap();
        }
        (Constraint::Prim(sym, args), ctx)
    }

    // -----------------------------------------------------------------
    // Decidable-core formulas (solver vs. oracle)
    // -----------------------------------------------------------------

    /// A small formula over ≤3 variables with enum/int element types,
    /// returned with declarations included.  Both the solver and the
    /// bounded oracle decide these.
    pub fn core_formula(&mut self) -> Formula {
        let elem = if self.rng.gen_bool(0.5) {
            Type::Enum(vec!["a".into(), "b".into(), "c".into()])
        } else {
            Type::Int
        };
        let nvars = self.rng.gen_range(1..=3);
        let mut vars: BTreeMap<String, Type> = BTreeMap::new();
        for v in VARS.iter().take(nvars) {
            let t = if self.rng.gen_bool(0.7) {
                Type::set(elem.clone())
            } else {
                elem.clone()
            };
            vars.insert((*v).to_string(), t);
        }
        let nconj = self.rng.gen_range(1..=3);
        let mut f = Formula::True;
        for _ in 0..nconj {
            f = Formula::and(f, Formula::Atom(self.core_constraint(&mut vars, &elem)));
        }
        // Occasionally add one disjunction.
        if self.rng.gen_bool(0.3) {
            f = Formula::or(f, Formula::Atom(self.core_constraint(&mut vars, &elem)));
        }
        for (v, t) in vars.iter().rev() {
            f = Formula::and(Formula::Dec(v.clone(), t.clone()), f);
        }
        f
    }

    fn core_constraint(&mut self, vars: &mut BTreeMap<String, Type>, elem: &Type) -> Constraint {
        let set = Type::set(elem.clone());
        // Element values stay tiny so the oracle bound covers them.
        let small = |g: &mut Gen, t: &Type, vars: &mut BTreeMap<String, Type>| -> Term {
            let existing: Vec<String> = vars
                .iter()
                .filter(|(_, vt)| *vt == t)
                .map(|(v, _)| v.clone())
                .collect();
            if !existing.is_empty() && g.rng.gen_bool(0.5) {
                return Term::var(g.pick(&existing));
            }
            match t {
                Type::Int => Term::Int(g.rng.gen_range(-2..=2)),
                Type::Enum(atoms) => {
                    let i = g.rng.gen_range(0..atoms.len());
                    Term::atom(&atoms[i])
                }
                Type::Set(inner) => {
                    let n = g.rng.gen_range(0..=2);
                    (0..n).fold(Term::Empty, |s, _| {
                        let e = match inner.as_ref() {
                            Type::Int => Term::Int(g.rng.gen_range(-2..=2)),
                            Type::Enum(atoms) => {
                                let i = g.rng.gen_range(0..atoms.len());
                                Term::atom(&atoms[i])
                            }
                            _ => Term::Int(0),
                        };
                        Term::cons(e, s)
                    })
                }
                _ => Term::Int(0),
            }
        };
        match self.rng.gen_range(0..8) {
            0 => Constraint::eq(small(self, &set, vars), small(self, &set, vars)),
            1 => Constraint::neq(small(self, &set, vars), small(self, &set, vars)),
            2 => Constraint::is_in(small(self, elem, vars), small(self, &set, vars)),
            3 => Constraint::nin(small(self, elem, vars), small(self, &set, vars)),
            4 => Constraint::un(
                small(self, &set, vars),
                small(self, &set, vars),
                small(self, &set, vars),
            ),
            5 => Constraint::disj(small(self, &set, vars), small(self, &set, vars)),
            6 => Constraint::size(small(self, &set, vars), Term::Int(self.rng.gen_range(0..=3))),
            _ => {
                let name = *self.pick(&["subset", "ndisj", "nun"]);
                let arity = if name == "nun" { 3 } else { 2 };
                Constraint::call(
                    name,
                    (0..arity).map(|_| small(self, &set, vars)).collect(),
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser;
    use crate::typecheck;

    #[test]
    fn terms_round_trip() {
        let mut g = Gen::new(7);
        for _ in 0..500 {
            let t = g.term(3);
            let src = format!("{t}");
            let back = parser::parse_term(&src)
                .unwrap_or_else(|e| panic!("reparse of {src:?} failed: {e}"));
            assert_eq!(t, back, "round trip through {src:?}");
        }
    }

    #[test]
    fn formulas_round_trip() {
        let mut g = Gen::new(11);
        for _ in 0..300 {
            let f = g.formula(4);
            let src = format!("{f}.");
            let back = parser::parse_formula(&src)
                .unwrap_or_else(|e| panic!("reparse of {src:?} failed: {e}"));
            assert_eq!(f, back, "round trip through {src:?}");
        }
    }

    #[test]
    fn typed_constraints_typecheck() {
        let mut g = Gen::new(3);
        let fams = [Sym::Eq, Sym::Un, Sym::Size, Sym::Comp, Sym::In, Sym::Disj, Sym::Id, Sym::Inv];
        for i in 0..400 {
            let (c, ctx) = g.typed_constraint(fams[i % fams.len()]);
            let schemes = BTreeMap::new();
            let mut ck = typecheck::Checker::new(&ctx, &schemes);
            ck.check_constraint(&c)
                .unwrap_or_else(|e| panic!("generated constraint {c} ill-typed: {e}"));
        }
    }

    #[test]
    fn core_formulas_are_well_typed_and_bounded() {
        let mut g = Gen::new(23);
        for _ in 0..100 {
            let f = g.core_formula();
            typecheck::check_formula(&f, &crate::derived::Registry::builtin().schemes())
                .unwrap_or_else(|e| panic!("core formula {f} ill-typed: {e}"));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = Gen::new(42).formula(5);
        let b = Gen::new(42).formula(5);
        assert_eq!(a, b);
    }
}
