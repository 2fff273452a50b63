//! Derived constraints: named constraints defined by expansion into the
//! primitive language (possibly with existential witness variables) or by
//! recursive clauses resolved like user-defined predicates.
//!
//! The default registry provides: `subset`, `inters`, `diff`, the integer
//! comparisons `<`, `>`, `>=`, the negative constraints `nun`, `ndisj`,
//! `nsubset`, `npfun`, and the partial-function constraints `pfun` and
//! `applyTo`.

use crate::ast::*;
use crate::typecheck::{self, Checker, SchemeEnv, TypeError};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DerivedError {
    #[error("derived constraint name '{0}' collides with an existing symbol")]
    NameCollision(String),
    #[error("derived constraint '{name}': scheme has {scheme} types but {params} parameters")]
    SchemeArity { name: String, scheme: usize, params: usize },
    #[error("derived constraint '{name}': {source}")]
    Type {
        name: String,
        source: TypeError,
    },
}

/// How a derived constraint is given meaning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DefKind {
    /// Macro-style: the call expands to `body` with `params` replaced by
    /// the call's arguments and every other body variable renamed fresh
    /// (an existential witness).
    Expansion { params: Vec<String>, body: Formula },
    /// Clause-style: the call resolves against these clauses, one branch
    /// per clause, like a user-defined predicate.
    Clauses(Vec<Clause>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedDef {
    pub name: String,
    /// Typing scheme; `Type::Var` marks polymorphic positions.
    pub scheme: Vec<Type>,
    pub kind: DefKind,
}

impl DerivedDef {
    pub fn arity(&self) -> usize {
        self.scheme.len()
    }
}

/// Names of the primitive constraint symbols plus structural keywords; a
/// derived constraint cannot shadow any of these.
fn is_primitive_name(name: &str) -> bool {
    matches!(
        name,
        "un" | "disj" | "size" | "id" | "inv" | "comp" | "dec" | "in" | "nin" | "neq" | "or"
            | "true" | "false"
    )
}

#[derive(Debug, Clone, Default)]
pub struct Registry {
    defs: BTreeMap<String, DerivedDef>,
}

impl Registry {
    pub fn empty() -> Registry {
        Registry::default()
    }

    /// The registry of built-in derived constraints.
    pub fn builtin() -> Registry {
        let mut r = Registry::empty();
        for def in builtin_defs() {
            r.register(def).expect("builtin derived constraints are valid");
        }
        r
    }

    pub fn get(&self, name: &str) -> Option<&DerivedDef> {
        self.defs.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.defs.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.keys().map(|s| s.as_str())
    }

    /// Typing schemes of all registered derived constraints.
    pub fn schemes(&self) -> SchemeEnv {
        self.defs
            .iter()
            .map(|(n, d)| (n.clone(), d.scheme.clone()))
            .collect()
    }

    /// Register a derived constraint after validating its name and that
    /// its definition typechecks against its scheme (with the scheme's
    /// type variables held rigid).
    pub fn register(&mut self, def: DerivedDef) -> Result<(), DerivedError> {
        if is_primitive_name(&def.name) || self.defs.contains_key(&def.name) {
            return Err(DerivedError::NameCollision(def.name.clone()));
        }
        // Make the new symbol visible during checking so recursive
        // definitions (pfun) can reference themselves.
        let mut schemes = self.schemes();
        schemes.insert(def.name.clone(), def.scheme.clone());
        let check = |params: &[String], body: &Formula| -> Result<(), DerivedError> {
            if params.len() != def.scheme.len() {
                return Err(DerivedError::SchemeArity {
                    name: def.name.clone(),
                    scheme: def.scheme.len(),
                    params: params.len(),
                });
            }
            check_body(&def.name, params, &def.scheme, body, &schemes)
                .map_err(|source| DerivedError::Type {
                    name: def.name.clone(),
                    source,
                })
        };
        match &def.kind {
            DefKind::Expansion { params, body } => check(params, body)?,
            DefKind::Clauses(clauses) => {
                for c in clauses {
                    check(&c.params, &c.body)?;
                }
            }
        }
        self.defs.insert(def.name.clone(), def);
        Ok(())
    }

    /// Expand a macro-style derived call into a formula, renaming
    /// existential body variables fresh.  Returns `None` for names that
    /// are not macro-style (clause-style calls resolve in the engine).
    pub fn expand(&self, name: &str, args: &[Term], gen: &mut VarGen) -> Option<Formula> {
        let def = self.defs.get(name)?;
        let DefKind::Expansion { params, body } = &def.kind else {
            return None;
        };
        let mut map: BTreeMap<String, Term> = params
            .iter()
            .cloned()
            .zip(args.iter().cloned())
            .collect();
        for v in body.free_vars() {
            if !map.contains_key(&v) {
                map.insert(v.clone(), gen.fresh_var(&v));
            }
        }
        Some(body.substitute(&map))
    }

    /// The clauses of a clause-style derived constraint.
    pub fn clauses(&self, name: &str) -> Option<&[Clause]> {
        match &self.defs.get(name)?.kind {
            DefKind::Clauses(cs) => Some(cs),
            _ => None,
        }
    }
}

/// Typecheck a definition body with the parameters declared at the
/// (skolemized) scheme types; existential body variables are inferred.
fn check_body(
    name: &str,
    params: &[String],
    scheme: &[Type],
    body: &Formula,
    schemes: &SchemeEnv,
) -> Result<(), TypeError> {
    let mut tvs = BTreeSet::new();
    for t in scheme {
        t.type_vars(&mut tvs);
    }
    let skolem: BTreeMap<String, Type> = tvs
        .iter()
        .map(|v| (v.clone(), Type::Basic(format!("'{}", v.to_lowercase()))))
        .collect();
    let mut ctx = typecheck::collect_context(body)?;
    for (p, t) in params.iter().zip(scheme.iter()) {
        ctx.declare(p, &skolemize(t, &skolem))?;
    }
    let body = strip_decs(body);
    let mut ck = Checker::inferring(&ctx, schemes);
    ck.check_formula(&body).map_err(|e| match e {
        TypeError::ConstraintMismatch(m) => {
            TypeError::ConstraintMismatch(format!("{m} (in definition of {name})"))
        }
        other => other,
    })
}

fn skolemize(t: &Type, map: &BTreeMap<String, Type>) -> Type {
    match t {
        Type::Var(v) => map.get(v).cloned().unwrap_or_else(|| t.clone()),
        Type::Prod(a, b) => Type::prod(skolemize(a, map), skolemize(b, map)),
        Type::Set(inner) => Type::set(skolemize(inner, map)),
        _ => t.clone(),
    }
}

fn strip_decs(f: &Formula) -> Formula {
    match f {
        Formula::Dec(_, _) => Formula::True,
        Formula::And(a, b) => Formula::and(strip_decs(a), strip_decs(b)),
        Formula::Or(a, b) => Formula::or(strip_decs(a), strip_decs(b)),
        _ => f.clone(),
    }
}

fn tvar(n: &str) -> Type {
    Type::Var(n.to_string())
}

fn v(n: &str) -> Term {
    Term::var(n)
}

fn expansion(name: &str, scheme: Vec<Type>, params: &[&str], body: Formula) -> DerivedDef {
    DerivedDef {
        name: name.to_string(),
        scheme,
        kind: DefKind::Expansion {
            params: params.iter().map(|s| s.to_string()).collect(),
            body,
        },
    }
}

fn builtin_defs() -> Vec<DerivedDef> {
    let set_t = || Type::set(tvar("T"));
    let rel_tu = || Type::rel(tvar("T"), tvar("U"));
    let mut defs = Vec::new();

    // subset(A,B) ⇔ un(A,B,B)
    defs.push(expansion(
        "subset",
        vec![set_t(), set_t()],
        &["A", "B"],
        Formula::atom(Constraint::un(v("A"), v("B"), v("B"))),
    ));

    // inters(A,B,C): C = A ∩ B, via C ∪ D1 = A, C ∪ D2 = B, D1 ∩ D2 = ∅
    // with existential witnesses D1 = A ∖ B and D2 = B ∖ A.
    defs.push(expansion(
        "inters",
        vec![set_t(), set_t(), set_t()],
        &["A", "B", "C"],
        Formula::conj([
            Formula::atom(Constraint::un(v("C"), v("D1"), v("A"))),
            Formula::atom(Constraint::un(v("C"), v("D2"), v("B"))),
            Formula::atom(Constraint::disj(v("D1"), v("D2"))),
        ]),
    ));

    // diff(A,B,C): C = A ∖ B, via C ∪ D = A, C ∩ B = ∅, D ⊆ B with the
    // existential witness D = A ∩ B.
    defs.push(expansion(
        "diff",
        vec![set_t(), set_t(), set_t()],
        &["A", "B", "C"],
        Formula::conj([
            Formula::atom(Constraint::un(v("C"), v("D"), v("A"))),
            Formula::atom(Constraint::disj(v("C"), v("B"))),
            Formula::atom(Constraint::un(v("D"), v("B"), v("B"))),
        ]),
    ));

    // m < n ⇔ m + 1 =< n, and friends
    defs.push(expansion(
        "<",
        vec![Type::Int, Type::Int],
        &["M", "N"],
        Formula::atom(Constraint::leq(Term::add(v("M"), Term::Int(1)), v("N"))),
    ));
    defs.push(expansion(
        ">",
        vec![Type::Int, Type::Int],
        &["M", "N"],
        Formula::atom(Constraint::leq(Term::add(v("N"), Term::Int(1)), v("M"))),
    ));
    defs.push(expansion(
        ">=",
        vec![Type::Int, Type::Int],
        &["M", "N"],
        Formula::atom(Constraint::leq(v("N"), v("M"))),
    ));

    // nun(A,B,C): C ≠ A ∪ B, witnessed by an element on one side only:
    // (n ∈ A ∧ n ∉ C) ∨ (n ∈ B ∧ n ∉ C) ∨ (n ∈ C ∧ n ∉ A ∧ n ∉ B)
    defs.push(expansion(
        "nun",
        vec![set_t(), set_t(), set_t()],
        &["A", "B", "C"],
        Formula::disj([
            Formula::and(
                Formula::atom(Constraint::is_in(v("N"), v("A"))),
                Formula::atom(Constraint::nin(v("N"), v("C"))),
            ),
            Formula::and(
                Formula::atom(Constraint::is_in(v("N"), v("B"))),
                Formula::atom(Constraint::nin(v("N"), v("C"))),
            ),
            Formula::conj([
                Formula::atom(Constraint::is_in(v("N"), v("C"))),
                Formula::atom(Constraint::nin(v("N"), v("A"))),
                Formula::atom(Constraint::nin(v("N"), v("B"))),
            ]),
        ]),
    ));

    // ndisj(A,B): A ∩ B ≠ ∅
    defs.push(expansion(
        "ndisj",
        vec![set_t(), set_t()],
        &["A", "B"],
        Formula::and(
            Formula::atom(Constraint::is_in(v("N"), v("A"))),
            Formula::atom(Constraint::is_in(v("N"), v("B"))),
        ),
    ));

    // nsubset(A,B): A ⊄ B
    defs.push(expansion(
        "nsubset",
        vec![set_t(), set_t()],
        &["A", "B"],
        Formula::and(
            Formula::atom(Constraint::is_in(v("N"), v("A"))),
            Formula::atom(Constraint::nin(v("N"), v("B"))),
        ),
    ));

    // npfun(F): F is not a partial function, witnessed by two pairs with
    // the same first and different second components.
    defs.push(expansion(
        "npfun",
        vec![rel_tu()],
        &["F"],
        Formula::and(
            Formula::atom(Constraint::eq(
                v("F"),
                Term::set_lit(
                    vec![
                        Term::pair(v("X"), v("Y")),
                        Term::pair(v("X"), v("Z")),
                    ],
                    v("W"),
                ),
            )),
            Formula::atom(Constraint::neq(v("Y"), v("Z"))),
        ),
    ));

    // pfun(F): F is a partial function.  Recursive clauses: the empty
    // relation is a pfun; {(X,Y) / G} is a pfun when X is not in the
    // domain of G and G is a pfun.
    defs.push(DerivedDef {
        name: "pfun".to_string(),
        scheme: vec![rel_tu()],
        kind: DefKind::Clauses(vec![
            Clause {
                name: "pfun".to_string(),
                params: vec!["F".to_string()],
                body: Formula::atom(Constraint::eq(v("F"), Term::Empty)),
            },
            Clause {
                name: "pfun".to_string(),
                params: vec!["F".to_string()],
                body: Formula::conj([
                    Formula::atom(Constraint::eq(
                        v("F"),
                        Term::cons(Term::pair(v("X"), v("Y")), v("G")),
                    )),
                    Formula::atom(Constraint::prim(
                        Sym::Comp,
                        vec![
                            Term::cons(Term::pair(v("X"), v("X")), Term::Empty),
                            v("G"),
                            Term::Empty,
                        ],
                    )),
                    Formula::atom(Constraint::call("pfun", vec![v("G")])),
                ]),
            },
        ]),
    });

    // applyTo(F,X,Y): F maps X to Y and to nothing else.
    defs.push(DerivedDef {
        name: "applyTo".to_string(),
        scheme: vec![rel_tu(), tvar("T"), tvar("U")],
        kind: DefKind::Clauses(vec![Clause {
            name: "applyTo".to_string(),
            params: vec!["F".to_string(), "X".to_string(), "Y".to_string()],
            body: Formula::conj([
                Formula::atom(Constraint::eq(
                    v("F"),
                    Term::cons(Term::pair(v("X"), v("Y")), v("G")),
                )),
                Formula::atom(Constraint::nin(Term::pair(v("X"), v("Y")), v("G"))),
                Formula::atom(Constraint::prim(
                    Sym::Comp,
                    vec![
                        Term::cons(Term::pair(v("X"), v("X")), Term::Empty),
                        v("G"),
                        Term::Empty,
                    ],
                )),
            ]),
        }]),
    });

    defs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_registry_loads() {
        let r = Registry::builtin();
        for name in [
            "subset", "inters", "diff", "<", ">", ">=", "nun", "ndisj", "nsubset", "pfun",
            "npfun", "applyTo",
        ] {
            assert!(r.contains(name), "missing builtin '{name}'");
        }
    }

    #[test]
    fn expansion_renames_existentials() {
        let r = Registry::builtin();
        let mut gen = VarGen::new();
        gen.register("A");
        gen.register("B");
        let f1 = r
            .expand("ndisj", &[Term::var("A"), Term::var("B")], &mut gen)
            .unwrap();
        let f2 = r
            .expand("ndisj", &[Term::var("A"), Term::var("B")], &mut gen)
            .unwrap();
        assert_ne!(f1, f2, "each expansion gets its own witness variable");
        let vars = f1.free_vars();
        assert!(vars.contains("A") && vars.contains("B"));
        assert_eq!(vars.len(), 3);
    }

    #[test]
    fn subset_expands_to_un() {
        let r = Registry::builtin();
        let mut gen = VarGen::new();
        let f = r
            .expand("subset", &[Term::var("A"), Term::var("B")], &mut gen)
            .unwrap();
        assert_eq!(f.to_string(), "un(A,B,B)");
    }

    #[test]
    fn comparison_expansions() {
        let r = Registry::builtin();
        let mut gen = VarGen::new();
        let f = r
            .expand("<", &[Term::var("M"), Term::var("N")], &mut gen)
            .unwrap();
        assert_eq!(f.to_string(), "M + 1 =< N");
        let f = r
            .expand(">", &[Term::add(Term::var("N"), Term::var("K")), Term::Int(5)], &mut gen)
            .unwrap();
        assert_eq!(f.to_string(), "5 + 1 =< N + K");
    }

    #[test]
    fn name_collisions_are_rejected() {
        let mut r = Registry::builtin();
        for bad in ["un", "subset", "dec"] {
            let def = expansion(
                bad,
                vec![Type::set(tvar("T")), Type::set(tvar("T"))],
                &["A", "B"],
                Formula::atom(Constraint::disj(v("A"), v("B"))),
            );
            assert!(matches!(
                r.register(def),
                Err(DerivedError::NameCollision(_))
            ));
        }
    }

    #[test]
    fn ill_typed_definition_is_rejected() {
        let mut r = Registry::builtin();
        // scheme says two sets, body uses the first as an integer
        let def = expansion(
            "bogus",
            vec![Type::set(tvar("T")), Type::set(tvar("T"))],
            &["A", "B"],
            Formula::atom(Constraint::leq(v("A"), Term::Int(3))),
        );
        assert!(matches!(r.register(def), Err(DerivedError::Type { .. })));
    }

    #[test]
    fn pfun_and_apply_to_are_clause_style() {
        let r = Registry::builtin();
        assert_eq!(r.clauses("pfun").unwrap().len(), 2);
        assert_eq!(r.clauses("applyTo").unwrap().len(), 1);
        assert!(r.clauses("subset").is_none());
        let mut gen = VarGen::new();
        assert!(r.expand("pfun", &[Term::Empty], &mut gen).is_none());
    }
}
