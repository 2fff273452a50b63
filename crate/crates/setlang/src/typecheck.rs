//! The prescriptive typechecker.
//!
//! Checking a formula proceeds in phases: (1) collect the typing context
//! from `dec` declarations, validating enum types along the way; (2)
//! convert the formula to DNF; (3) check every atomic constraint of every
//! disjunct against the typing scheme of its symbol, inferring argument
//! types by first-order unification.  A mismatch produces the canonical
//! message `type error in <constraint>: <arg> is of type <type>, ...`.

use crate::ast::*;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// Errors reported by the typechecker.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TypeError {
    #[error("{0}")]
    ConstraintMismatch(String),
    #[error("type error: variable {0} has no declaration")]
    UndeclaredVariable(String),
    #[error("type error: variable {0} is declared twice with different types")]
    DuplicateDec(String),
    #[error("type error: ill-formed enum type: {0}")]
    IllFormedEnum(String),
    #[error("type error: atom {0} does not belong to any enum type in context")]
    UnknownAtom(String),
    #[error("type error: type variable {0} is not admitted here")]
    TypeVarInDec(String),
    #[error("type error in term {term}: {detail}")]
    IllTypedTerm { term: String, detail: String },
    #[error("type error: predicate {0} has no typing directive")]
    MissingDirective(String),
    #[error("type error: {name} takes {expected} arguments, found {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("type error: cannot instantiate polymorphic scheme of {name}: {detail}")]
    PolyInstantiationFailure { name: String, detail: String },
    #[error("type error: ill-formed directive for {name}: {detail}")]
    IllFormedDirective { name: String, detail: String },
    #[error("type error: type of {0} cannot be resolved to a ground type")]
    UnresolvedType(String),
}

pub type Result<T> = std::result::Result<T, TypeError>;

/// Typing context: variable declarations plus enum-atom ownership.
#[derive(Debug, Clone, Default)]
pub struct Context {
    pub vars: BTreeMap<String, Type>,
    /// Atom name -> the enum type owning it.
    pub atoms: BTreeMap<String, Type>,
}

impl Context {
    pub fn new() -> Context {
        Context::default()
    }

    /// Register the enum types occurring inside `t`, validating them.
    pub fn register_enums(&mut self, t: &Type) -> Result<()> {
        match t {
            Type::Enum(atoms) => {
                if atoms.len() < 2 {
                    return Err(TypeError::IllFormedEnum(format!(
                        "{t} has fewer than two atoms"
                    )));
                }
                let mut seen = BTreeSet::new();
                for a in atoms {
                    if !seen.insert(a) {
                        return Err(TypeError::IllFormedEnum(format!(
                            "atom {a} repeats in {t}"
                        )));
                    }
                }
                for a in atoms {
                    match self.atoms.get(a) {
                        Some(owner) if owner != t => {
                            return Err(TypeError::IllFormedEnum(format!(
                                "atom {a} belongs to both {owner} and {t}"
                            )));
                        }
                        _ => {
                            self.atoms.insert(a.clone(), t.clone());
                        }
                    }
                }
                Ok(())
            }
            Type::Prod(a, b) => {
                self.register_enums(a)?;
                self.register_enums(b)
            }
            Type::Set(inner) => self.register_enums(inner),
            _ => Ok(()),
        }
    }

    /// Declare a variable; an identical re-declaration collapses, a
    /// conflicting one is an error.
    pub fn declare(&mut self, v: &str, t: &Type) -> Result<()> {
        let mut tv = BTreeSet::new();
        t.type_vars(&mut tv);
        if let Some(x) = tv.into_iter().next() {
            return Err(TypeError::TypeVarInDec(x));
        }
        self.register_enums(t)?;
        match self.vars.get(v) {
            Some(prev) if prev != t => Err(TypeError::DuplicateDec(v.to_string())),
            _ => {
                self.vars.insert(v.to_string(), t.clone());
                Ok(())
            }
        }
    }
}

/// Typing schemes for callable (derived or program-defined) constraints.
/// Scheme types may contain `Type::Var` for polymorphic symbols.
pub type SchemeEnv = BTreeMap<String, Vec<Type>>;

/// Phase 1: collect the typing context of a formula from its `dec`
/// declarations (across all disjuncts).
pub fn collect_context(f: &Formula) -> Result<Context> {
    let mut ctx = Context::new();
    fn walk(f: &Formula, ctx: &mut Context) -> Result<()> {
        match f {
            Formula::Dec(v, t) => ctx.declare(v, t),
            Formula::And(a, b) | Formula::Or(a, b) => {
                walk(a, ctx)?;
                walk(b, ctx)
            }
            _ => Ok(()),
        }
    }
    walk(f, &mut ctx)?;
    Ok(ctx)
}

/// A first-order unifier over [`Type`] trees using `Type::Var` names of
/// the shape `?k` as unification variables.
#[derive(Debug, Clone, Default)]
pub struct Unifier {
    subst: BTreeMap<String, Type>,
    next: u64,
}

impl Unifier {
    pub fn new() -> Unifier {
        Unifier::default()
    }

    pub fn fresh(&mut self) -> Type {
        self.next += 1;
        Type::Var(format!("?{}", self.next))
    }

    /// Apply the substitution deeply.
    pub fn resolve(&self, t: &Type) -> Type {
        match t {
            Type::Var(v) => match self.subst.get(v) {
                Some(b) => self.resolve(b),
                None => t.clone(),
            },
            Type::Prod(a, b) => Type::prod(self.resolve(a), self.resolve(b)),
            Type::Set(inner) => Type::set(self.resolve(inner)),
            _ => t.clone(),
        }
    }

    fn occurs(&self, v: &str, t: &Type) -> bool {
        match t {
            Type::Var(w) => {
                if w == v {
                    return true;
                }
                match self.subst.get(w) {
                    Some(b) => self.occurs(v, &b.clone()),
                    None => false,
                }
            }
            Type::Prod(a, b) => self.occurs(v, a) || self.occurs(v, b),
            Type::Set(inner) => self.occurs(v, inner),
            _ => false,
        }
    }

    pub fn unify(&mut self, a: &Type, b: &Type) -> std::result::Result<(), ()> {
        let a = self.resolve(a);
        let b = self.resolve(b);
        match (&a, &b) {
            (Type::Var(v), _) => {
                if a == b {
                    Ok(())
                } else if self.occurs(v, &b) {
                    Err(())
                } else {
                    self.subst.insert(v.clone(), b);
                    Ok(())
                }
            }
            (_, Type::Var(_)) => self.unify(&b, &a),
            (Type::Int, Type::Int) => Ok(()),
            (Type::Basic(x), Type::Basic(y)) if x == y => Ok(()),
            (Type::Enum(x), Type::Enum(y)) if x == y => Ok(()),
            (Type::Prod(a1, a2), Type::Prod(b1, b2)) => {
                self.unify(a1, b1)?;
                self.unify(a2, b2)
            }
            (Type::Set(x), Type::Set(y)) => self.unify(x, y),
            _ => Err(()),
        }
    }

    /// Does the resolved type still contain unification variables?
    pub fn is_ground(&self, t: &Type) -> bool {
        let mut tv = BTreeSet::new();
        self.resolve(t).type_vars(&mut tv);
        tv.is_empty()
    }
}

/// The checker proper.  In strict mode every variable must be declared;
/// in inference mode undeclared variables receive fresh unification
/// variables whose final resolution can be queried afterwards.
pub struct Checker<'a> {
    pub ctx: &'a Context,
    pub schemes: &'a SchemeEnv,
    pub uf: Unifier,
    pub inference: bool,
    pub inferred: BTreeMap<String, Type>,
}

impl<'a> Checker<'a> {
    pub fn new(ctx: &'a Context, schemes: &'a SchemeEnv) -> Checker<'a> {
        Checker {
            ctx,
            schemes,
            uf: Unifier::new(),
            inference: false,
            inferred: BTreeMap::new(),
        }
    }

    pub fn inferring(ctx: &'a Context, schemes: &'a SchemeEnv) -> Checker<'a> {
        let mut c = Checker::new(ctx, schemes);
        c.inference = true;
        c
    }

    /// Infer the type of a term in the current substitution.
    pub fn infer_term_type(&mut self, t: &Term) -> Result<Type> {
        match t {
            Term::Int(_) => Ok(Type::Int),
            Term::Arith(_, a, b) => {
                let ta = self.infer_term_type(a)?;
                let tb = self.infer_term_type(b)?;
                if self.uf.unify(&ta, &Type::Int).is_err()
                    || self.uf.unify(&tb, &Type::Int).is_err()
                {
                    return Err(TypeError::IllTypedTerm {
                        term: t.to_string(),
                        detail: "arithmetic requires integer operands".to_string(),
                    });
                }
                Ok(Type::Int)
            }
            Term::Atom(a) => self
                .ctx
                .atoms
                .get(a)
                .cloned()
                .ok_or_else(|| TypeError::UnknownAtom(a.clone())),
            Term::Tagged(b, _) => Ok(Type::basic(b)),
            Term::Var(v) => {
                if let Some(t) = self.ctx.vars.get(v) {
                    return Ok(t.clone());
                }
                if self.inference {
                    let t = self
                        .inferred
                        .entry(v.clone())
                        .or_insert_with(|| {
                            self.uf.next += 1;
                            Type::Var(format!("?{}", self.uf.next))
                        })
                        .clone();
                    Ok(t)
                } else {
                    Err(TypeError::UndeclaredVariable(v.clone()))
                }
            }
            Term::Empty => Ok(Type::set(self.uf.fresh())),
            Term::Cons(h, tail) => {
                let th = self.infer_term_type(h)?;
                let tt = self.infer_term_type(tail)?;
                if self.uf.unify(&tt, &Type::set(th)).is_err() {
                    return Err(TypeError::IllTypedTerm {
                        term: t.to_string(),
                        detail: "set elements and tail disagree".to_string(),
                    });
                }
                Ok(self.uf.resolve(&tt))
            }
            Term::Interval(a, b) => {
                let ta = self.infer_term_type(a)?;
                let tb = self.infer_term_type(b)?;
                if self.uf.unify(&ta, &Type::Int).is_err()
                    || self.uf.unify(&tb, &Type::Int).is_err()
                {
                    return Err(TypeError::IllTypedTerm {
                        term: t.to_string(),
                        detail: "interval bounds must be integers".to_string(),
                    });
                }
                Ok(Type::set(Type::Int))
            }
            Term::Pair(a, b) => {
                let ta = self.infer_term_type(a)?;
                let tb = self.infer_term_type(b)?;
                Ok(Type::prod(self.uf.resolve(&ta), self.uf.resolve(&tb)))
            }
        }
    }

    /// The typing scheme of a primitive symbol, freshly instantiated.
    fn prim_scheme(&mut self, sym: Sym) -> Vec<Type> {
        match sym {
            Sym::Eq | Sym::Neq => {
                let t = self.uf.fresh();
                vec![t.clone(), t]
            }
            Sym::In | Sym::Nin => {
                let t = self.uf.fresh();
                vec![t.clone(), Type::set(t)]
            }
            Sym::Un => {
                let s = Type::set(self.uf.fresh());
                vec![s.clone(), s.clone(), s]
            }
            Sym::Disj => {
                let s = Type::set(self.uf.fresh());
                vec![s.clone(), s]
            }
            Sym::Size => vec![Type::set(self.uf.fresh()), Type::Int],
            Sym::Id => {
                let t = self.uf.fresh();
                vec![Type::set(t.clone()), Type::rel(t.clone(), t)]
            }
            Sym::Inv => {
                let a = self.uf.fresh();
                let b = self.uf.fresh();
                vec![Type::rel(a.clone(), b.clone()), Type::rel(b, a)]
            }
            Sym::Comp => {
                let a = self.uf.fresh();
                let b = self.uf.fresh();
                let c = self.uf.fresh();
                vec![
                    Type::rel(a.clone(), b.clone()),
                    Type::rel(b, c.clone()),
                    Type::rel(a, c),
                ]
            }
            Sym::Leq => vec![Type::Int, Type::Int],
        }
    }

    /// Check one atomic constraint against its scheme.
    pub fn check_constraint(&mut self, c: &Constraint) -> Result<()> {
        let scheme = match c {
            Constraint::Prim(sym, args) => {
                if args.len() != sym.arity() {
                    return Err(TypeError::ArityMismatch {
                        name: sym.name().to_string(),
                        expected: sym.arity(),
                        found: args.len(),
                    });
                }
                self.prim_scheme(*sym)
            }
            Constraint::Call(name, args) => {
                let scheme = self
                    .schemes
                    .get(name)
                    .ok_or_else(|| TypeError::MissingDirective(name.clone()))?;
                if args.len() != scheme.len() {
                    return Err(TypeError::ArityMismatch {
                        name: name.clone(),
                        expected: scheme.len(),
                        found: args.len(),
                    });
                }
                // Instantiate scheme type variables with fresh
                // unification variables, consistently across arguments.
                let mut map: BTreeMap<String, Type> = BTreeMap::new();
                scheme
                    .iter()
                    .map(|t| instantiate(t, &mut map, &mut self.uf))
                    .collect()
            }
        };
        let mut arg_types = Vec::new();
        for a in c.args() {
            arg_types.push(self.infer_term_type(a)?);
        }
        // Snapshot the argument types before unifying with the scheme:
        // the canonical error message reports them as inferred.
        let shown: Vec<Type> = arg_types.iter().map(|t| self.uf.resolve(t)).collect();
        for (at, st) in arg_types.iter().zip(scheme.iter()) {
            if self.uf.unify(at, st).is_err() {
                let parts = c
                    .args()
                    .iter()
                    .zip(shown.iter())
                    .map(|(a, t)| format!("{a} is of type {t}"))
                    .collect::<Vec<_>>()
                    .join(", ");
                return Err(TypeError::ConstraintMismatch(format!(
                    "type error in {c}: {parts}"
                )));
            }
        }
        Ok(())
    }

    /// Check a formula: DNF, then every atomic constraint of every
    /// disjunct under the shared substitution of that disjunct.
    pub fn check_formula(&mut self, f: &Formula) -> Result<()> {
        for disjunct in f.dnf() {
            for g in disjunct {
                if let Formula::Atom(c) = g {
                    self.check_constraint(&c)?;
                }
            }
        }
        Ok(())
    }
}

fn instantiate(t: &Type, map: &mut BTreeMap<String, Type>, uf: &mut Unifier) -> Type {
    match t {
        Type::Var(v) => map.entry(v.clone()).or_insert_with(|| uf.fresh()).clone(),
        Type::Prod(a, b) => Type::prod(instantiate(a, map, uf), instantiate(b, map, uf)),
        Type::Set(inner) => Type::set(instantiate(inner, map, uf)),
        _ => t.clone(),
    }
}

/// Check a whole formula under its own declarations.  This is the main
/// entry point used by the engine for queries.
pub fn check_formula(f: &Formula, schemes: &SchemeEnv) -> Result<Context> {
    let ctx = collect_context(f)?;
    let mut ck = Checker::new(&ctx, schemes);
    ck.check_formula(f)?;
    Ok(ctx)
}

/// Check a formula inferring types for undeclared variables.  Returns a
/// typing for every free variable; types that stay unconstrained are
/// reported via [`TypeError::UnresolvedType`] unless `allow_open`.
pub fn infer_types(
    f: &Formula,
    ctx: &Context,
    schemes: &SchemeEnv,
    allow_open: bool,
) -> Result<BTreeMap<String, Type>> {
    let mut ck = Checker::inferring(ctx, schemes);
    ck.check_formula(f)?;
    let mut out = BTreeMap::new();
    for (v, t) in ctx.vars.iter() {
        out.insert(v.clone(), t.clone());
    }
    for (v, t) in ck.inferred.clone() {
        let r = ck.uf.resolve(&t);
        if !ck.uf.is_ground(&r) && !allow_open {
            return Err(TypeError::UnresolvedType(v));
        }
        out.insert(v, r);
    }
    Ok(out)
}

/// Build the declaration formula `D(t1:τ1) ∧ ... ∧ D(tn:τn)` of Def-style
/// typing: the unique set of variable declarations making every `ti` a
/// term of type `τi`.  Duplicate declarations collapse; a conflicting
/// duplicate or an unresolvable variable type is an error.
pub fn build_d(pairs: &[(Term, Type)], ctx: &Context, schemes: &SchemeEnv) -> Result<Formula> {
    let mut ck = Checker::inferring(ctx, schemes);
    for (t, ty) in pairs {
        let it = ck.infer_term_type(t)?;
        if ck.uf.unify(&it, ty).is_err() {
            return Err(TypeError::IllTypedTerm {
                term: t.to_string(),
                detail: format!("term does not have type {ty}"),
            });
        }
    }
    let mut decs = Vec::new();
    let mut vars = BTreeSet::new();
    for (t, _) in pairs {
        t.collect_vars(&mut vars);
    }
    for v in vars {
        if let Some(t) = ck.ctx.vars.get(&v) {
            decs.push(Formula::Dec(v, t.clone()));
            continue;
        }
        let tv = ck
            .inferred
            .get(&v)
            .cloned()
            .ok_or_else(|| TypeError::UnresolvedType(v.clone()))?;
        let r = ck.uf.resolve(&tv);
        if !ck.uf.is_ground(&r) {
            return Err(TypeError::UnresolvedType(v));
        }
        decs.push(Formula::Dec(v, r));
    }
    Ok(Formula::conj(decs))
}

/// Instantiate a polymorphic scheme against ground actual types.
/// Returns the binding of scheme type variables.
pub fn instantiate_poly(
    name: &str,
    scheme: &[Type],
    actuals: &[Type],
) -> Result<BTreeMap<String, Type>> {
    if scheme.len() != actuals.len() {
        return Err(TypeError::ArityMismatch {
            name: name.to_string(),
            expected: scheme.len(),
            found: actuals.len(),
        });
    }
    let mut uf = Unifier::new();
    // Rename scheme variables into the unifier's namespace so they can
    // bind while ground actual types stay rigid.
    let mut map = BTreeMap::new();
    let renamed: Vec<Type> = scheme
        .iter()
        .map(|t| instantiate(t, &mut map, &mut uf))
        .collect();
    for (s, a) in renamed.iter().zip(actuals.iter()) {
        if uf.unify(s, a).is_err() {
            return Err(TypeError::PolyInstantiationFailure {
                name: name.to_string(),
                detail: format!(
                    "({}) does not match ({})",
                    scheme.iter().map(render_ty).collect::<Vec<_>>().join(","),
                    actuals.iter().map(render_ty).collect::<Vec<_>>().join(",")
                ),
            });
        }
    }
    let mut out = BTreeMap::new();
    for (v, tv) in map {
        out.insert(v, uf.resolve(&tv));
    }
    Ok(out)
}

fn render_ty(t: &Type) -> String {
    t.to_string()
}

/// Check a program clause against its typing directive.
pub fn check_clause(clause: &Clause, directive: &Directive, schemes: &SchemeEnv) -> Result<()> {
    if clause.params.len() != directive.types.len() {
        return Err(TypeError::ArityMismatch {
            name: clause.name.clone(),
            expected: directive.types.len(),
            found: clause.params.len(),
        });
    }
    // Skolemize directive type variables by mapping them to reserved
    // basic types, so the clause is checked generically.
    let mut dir_tvs = BTreeSet::new();
    for t in &directive.types {
        t.type_vars(&mut dir_tvs);
    }
    if directive.kind == DirectiveKind::Mono && !dir_tvs.is_empty() {
        return Err(TypeError::IllFormedDirective {
            name: directive.name.clone(),
            detail: "dec_p_type does not admit type variables".to_string(),
        });
    }
    let skolem: BTreeMap<String, Type> = dir_tvs
        .iter()
        .map(|v| (v.clone(), Type::Basic(format!("'{}", v.to_lowercase()))))
        .collect();
    let head_types: Vec<Type> = directive.types.iter().map(|t| skolemize(t, &skolem)).collect();
    let body = skolemize_formula(&clause.body, &skolem, &dir_tvs, &clause.name)?;
    let mut ctx = collect_context(&body)?;
    for (p, t) in clause.params.iter().zip(head_types.iter()) {
        ctx.declare(p, t)?;
    }
    let mut ck = Checker::new(&ctx, schemes);
    ck.check_formula(&body)?;
    Ok(())
}

fn skolemize(t: &Type, map: &BTreeMap<String, Type>) -> Type {
    match t {
        Type::Var(v) => map.get(v).cloned().unwrap_or_else(|| t.clone()),
        Type::Prod(a, b) => Type::prod(skolemize(a, map), skolemize(b, map)),
        Type::Set(inner) => Type::set(skolemize(inner, map)),
        _ => t.clone(),
    }
}

fn skolemize_formula(
    f: &Formula,
    map: &BTreeMap<String, Type>,
    scope: &BTreeSet<String>,
    clause_name: &str,
) -> Result<Formula> {
    Ok(match f {
        Formula::Dec(v, t) => {
            let mut tvs = BTreeSet::new();
            t.type_vars(&mut tvs);
            for tv in &tvs {
                if !scope.contains(tv) {
                    return Err(TypeError::IllFormedDirective {
                        name: clause_name.to_string(),
                        detail: format!(
                            "type variable {tv} in a body declaration is not bound by the directive"
                        ),
                    });
                }
            }
            Formula::Dec(v.clone(), skolemize(t, map))
        }
        Formula::And(a, b) => Formula::and(
            skolemize_formula(a, map, scope, clause_name)?,
            skolemize_formula(b, map, scope, clause_name)?,
        ),
        Formula::Or(a, b) => Formula::or(
            skolemize_formula(a, map, scope, clause_name)?,
            skolemize_formula(b, map, scope, clause_name)?,
        ),
        _ => f.clone(),
    })
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (v, t)) in self.vars.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}: {t}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;

    fn check(src: &str) -> Result<Context> {
        let f = parse_formula(src).unwrap();
        check_formula(&f, &SchemeEnv::new())
    }

    #[test]
    fn well_typed_formulas_pass() {
        check("dec(X,int) & dec(A,set(int)) & X in A & un(A,A,A)").unwrap();
        check("dec(R,rel(t,u)) & dec(S,rel(u,t)) & inv(R,S)").unwrap();
        check("dec(A,set(enum([a,b,c]))) & a in A & A neq {b,c}").unwrap();
        check("dec(X,prod(int,t)) & X = (3,t?k)").unwrap();
        check("dec(A,set(int)) & dec(N,int) & size(A,N) & A = [1,N]").unwrap();
        // declarations can sit in either disjunct; phase 1 is global
        check("dec(X,int) & X = 1 or dec(Y,int) & Y = 2 & X = Y").unwrap();
    }

    #[test]
    fn canonical_error_message() {
        let err = check(
            "id({X/A},R) & id(R,A) & dec(X,t) & dec(A,set(t)) & dec(R,rel(t,t))",
        )
        .unwrap_err();
        assert_eq!(
            err.to_string(),
            "type error in id(R,A): R is of type rel(t,t), A is of type set(t)"
        );
    }

    #[test]
    fn mismatches_are_caught() {
        assert!(check("dec(X,int) & dec(A,set(t)) & X in A").is_err());
        assert!(check("dec(A,set(int)) & dec(B,set(t)) & un(A,B,B)").is_err());
        assert!(check("dec(X,int) & X = a").is_err(), "unknown atom");
        assert!(check("dec(A,set(enum([a,b]))) & dec(X,enum([b,c])) & X in A").is_err());
        assert!(check("X = 1").is_err(), "undeclared variable");
        assert!(check("dec(X,int) & dec(X,t) & X = X").is_err());
        // same declaration twice collapses
        check("dec(X,int) & dec(X,int) & X = 1").unwrap();
    }

    #[test]
    fn size_and_arith() {
        check("dec(A,set(t)) & dec(N,int) & size(A,N) & N + 1 =< 5").unwrap();
        assert!(check("dec(A,set(t)) & size(A,A)").is_err());
        assert!(check("dec(A,set(t)) & A + 1 =< 5").is_err());
    }

    #[test]
    fn build_d_is_unique_and_collapses() {
        let ctx = Context::new();
        let schemes = SchemeEnv::new();
        let t = crate::parser::parse_term("{X,(Y,1)/A}").unwrap();
        let ty = crate::parser::parse_type("set(prod(u,int))").unwrap();
        let d = build_d(&[(t, ty)], &ctx, &schemes).unwrap();
        assert_eq!(
            d.to_string(),
            "dec(A,rel(u,int)) & dec(X,prod(u,int)) & dec(Y,u)"
        );
        // a variable with no determined type is rejected
        let t = Term::var("Z");
        let res = build_d(
            &[(Term::cons(t, Term::Empty), Type::set(Type::Var("?x".into())))],
            &ctx,
            &schemes,
        );
        assert!(matches!(res, Err(TypeError::UnresolvedType(_))));
    }

    #[test]
    fn poly_instantiation() {
        let scheme = vec![
            Type::rel(Type::Var("T".into()), Type::Var("U".into())),
            Type::Var("T".into()),
            Type::Var("U".into()),
        ];
        let ok = instantiate_poly(
            "applyTo",
            &scheme,
            &[
                Type::rel(Type::basic("bid"), Type::basic("title")),
                Type::basic("bid"),
                Type::basic("title"),
            ],
        )
        .unwrap();
        assert_eq!(ok["T"], Type::basic("bid"));
        let bad = instantiate_poly(
            "applyTo",
            &scheme,
            &[
                Type::rel(Type::basic("bid"), Type::basic("title")),
                Type::Int,
                Type::basic("title"),
            ],
        );
        assert!(matches!(
            bad,
            Err(TypeError::PolyInstantiationFailure { .. })
        ));
    }

    #[test]
    fn clause_checking() {
        let items = crate::parser::parse_program(
            ":- dec_p_type(addBook(rel(bid,title),bid,title,rel(bid,title))).
             addBook(Books,B,T,Books2) :-
               comp({(B,B)},Books,{}) & Books2 = {(B,T)/Books}.",
        )
        .unwrap();
        let (d, c) = match (&items[0], &items[1]) {
            (ProgramItem::Directive(d), ProgramItem::Clause(c)) => (d.clone(), c.clone()),
            _ => panic!(),
        };
        check_clause(&c, &d, &SchemeEnv::new()).unwrap();

        // a body that breaks the directive types must fail
        let items = crate::parser::parse_program(
            ":- dec_p_type(p(set(int))).
             p(A) :- a in A.",
        )
        .unwrap();
        let (d, c) = match (&items[0], &items[1]) {
            (ProgramItem::Directive(d), ProgramItem::Clause(c)) => (d.clone(), c.clone()),
            _ => panic!(),
        };
        assert!(check_clause(&c, &d, &SchemeEnv::new()).is_err());
    }

    #[test]
    fn poly_clause_checking() {
        let items = crate::parser::parse_program(
            ":- dec_pp_type(applyTo(rel(T,U),T,U)).
             applyTo(F,X,Y) :- dec(G,rel(T,U)) & F = {(X,Y)/G} & (X,Y) nin G & comp({(X,X)},G,{}).",
        )
        .unwrap();
        let (d, c) = match (&items[0], &items[1]) {
            (ProgramItem::Directive(d), ProgramItem::Clause(c)) => (d.clone(), c.clone()),
            _ => panic!(),
        };
        check_clause(&c, &d, &SchemeEnv::new()).unwrap();

        // a body type variable not bound by the directive is rejected
        let items = crate::parser::parse_program(
            ":- dec_pp_type(q(set(T))).
             q(A) :- dec(B,set(W)) & un(A,B,B).",
        )
        .unwrap();
        let (d, c) = match (&items[0], &items[1]) {
            (ProgramItem::Directive(d), ProgramItem::Clause(c)) => (d.clone(), c.clone()),
            _ => panic!(),
        };
        assert!(check_clause(&c, &d, &SchemeEnv::new()).is_err());
    }
}
