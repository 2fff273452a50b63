//! CLP layer: clause store, consult-time typechecking and query
//! resolution.  A query is typechecked (when the flag is on), then
//! handed to the solver; predicate calls are resolved by replacing them
//! with renamed-apart clause-body instances, one branch per clause.

use std::collections::BTreeMap;
use std::fmt;

use crate::ast::{
    Clause, Constraint, Directive, Formula, ProgramItem, Term, VarGen,
};
use crate::derived::{DerivedError, Registry};
use crate::parser::{self, ParseError};
use crate::solver::{self, Resolver, SolveOutcome};
use crate::typecheck::{self, SchemeEnv, TypeError};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Type(#[from] TypeError),
    #[error("{0}")]
    Derived(#[from] DerivedError),
    #[error("cannot read {path}: {source}")]
    Consult {
        path: String,
        source: std::io::Error,
    },
    #[error("unknown predicate {0}")]
    UnknownPredicate(String),
    /// Consulting reports every offending clause, not just the first.
    #[error("{}", errors.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n"))]
    ConsultBatch { errors: Vec<EngineError> },
}

/// User-defined clauses grouped by (name, arity), with their directives.
#[derive(Debug, Default, Clone)]
pub struct ClauseStore {
    directives: BTreeMap<(String, usize), Directive>,
    clauses: BTreeMap<(String, usize), Vec<Clause>>,
    /// Textual order of definition, for reporting.
    order: Vec<(String, usize)>,
}

impl ClauseStore {
    pub fn directive(&self, name: &str, arity: usize) -> Option<&Directive> {
        self.directives.get(&(name.to_string(), arity))
    }

    pub fn clauses(&self, name: &str, arity: usize) -> Option<&[Clause]> {
        self.clauses
            .get(&(name.to_string(), arity))
            .map(|v| v.as_slice())
    }

    pub fn contains(&self, name: &str, arity: usize) -> bool {
        self.clauses.contains_key(&(name.to_string(), arity))
            || self.directives.contains_key(&(name.to_string(), arity))
    }

    pub fn names(&self) -> impl Iterator<Item = &(String, usize)> {
        self.order.iter()
    }

    /// Typing schemes contributed by directives (ignoring arity
    /// overloading: the language has at most one directive per name).
    pub fn schemes(&self) -> SchemeEnv {
        self.directives
            .values()
            .map(|d| (d.name.clone(), d.types.clone()))
            .collect()
    }
}

/// Outcome status of a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Sat,
    Unsat,
    Budget,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Sat => write!(f, "sat"),
            Status::Unsat => write!(f, "unsat"),
            Status::Budget => write!(f, "budget exhausted"),
        }
    }
}

/// Result of running a query: the raw solver outcome plus the variables
/// the user actually wrote, for answer projection.
#[derive(Debug)]
pub struct QueryResult {
    pub outcome: SolveOutcome,
    pub query_vars: std::collections::BTreeSet<String>,
}

impl QueryResult {
    pub fn status(&self) -> Status {
        if !self.outcome.answers.is_empty() {
            Status::Sat
        } else if self.outcome.budget_exhausted {
            Status::Budget
        } else {
            Status::Unsat
        }
    }
}

/// Per-session options.
#[derive(Debug, Clone)]
pub struct Options {
    pub max_answers: Option<usize>,
    pub step_budget: u64,
    /// When set, every variable declared `int` in a query is confined
    /// to this inclusive range.
    pub int_bound: Option<(i64, i64)>,
}

impl Default for Options {
    fn default() -> Options {
        Options {
            max_answers: None,
            step_budget: solver::DEFAULT_STEP_BUDGET,
            int_bound: None,
        }
    }
}

/// An interactive session: clause store, derived registry, typecheck
/// flag and the fresh-variable generator shared by everything parsed in
/// the session.
pub struct Session {
    pub store: ClauseStore,
    pub derived: Registry,
    pub typecheck: bool,
    pub opts: Options,
    gen: VarGen,
}

impl Default for Session {
    fn default() -> Session {
        Session::new()
    }
}

impl Session {
    pub fn new() -> Session {
        Session {
            store: ClauseStore::default(),
            derived: Registry::builtin(),
            typecheck: true,
            opts: Options::default(),
            gen: VarGen::new(),
        }
    }

    pub fn set_typecheck(&mut self, on: bool) {
        self.typecheck = on;
    }

    /// Parse and load a program from source.  All-or-nothing: when any
    /// clause fails validation the store is left untouched and every
    /// error is reported.
    pub fn consult_str(&mut self, src: &str) -> Result<(), EngineError> {
        let mut gen = self.gen.clone();
        let items = parser::parse_program_with(src, &mut gen)?;
        let mut store = self.store.clone();
        let mut errors: Vec<EngineError> = Vec::new();
        let schemes_base = self.all_schemes();
        for item in &items {
            match item {
                ProgramItem::Directive(d) => {
                    let key = (d.name.clone(), d.types.len());
                    if self.derived.contains(&d.name) {
                        errors.push(EngineError::Derived(DerivedError::NameCollision(
                            d.name.clone(),
                        )));
                        continue;
                    }
                    if store.directives.contains_key(&key) {
                        errors.push(EngineError::Type(TypeError::IllFormedDirective {
                            name: d.name.clone(),
                            detail: "duplicate directive".to_string(),
                        }));
                        continue;
                    }
                    if !store.contains(&d.name, d.types.len()) {
                        store.order.push(key.clone());
                    }
                    store.directives.insert(key, d.clone());
                }
                ProgramItem::Clause(c) => {
                    let key = (c.name.clone(), c.params.len());
                    if self.derived.contains(&c.name) {
                        errors.push(EngineError::Derived(DerivedError::NameCollision(
                            c.name.clone(),
                        )));
                        continue;
                    }
                    if self.typecheck {
                        let Some(d) = store.directives.get(&key) else {
                            errors.push(EngineError::Type(TypeError::MissingDirective(
                                c.name.clone(),
                            )));
                            continue;
                        };
                        // Clause bodies may call any directive-typed
                        // predicate as well as the derived constraints,
                        // including the one being defined (recursion).
                        let mut schemes = schemes_base.clone();
                        for dir in store.directives.values() {
                            schemes.insert(dir.name.clone(), dir.types.clone());
                        }
                        if let Err(e) = typecheck::check_clause(c, d, &schemes) {
                            errors.push(EngineError::Type(e));
                            continue;
                        }
                    }
                    if !store.contains(&c.name, c.params.len()) {
                        store.order.push(key.clone());
                    }
                    store.clauses.entry(key).or_default().push(c.clone());
                }
            }
        }
        if !errors.is_empty() {
            return if errors.len() == 1 {
                Err(errors.pop().unwrap())
            } else {
                Err(EngineError::ConsultBatch { errors })
            };
        }
        self.store = store;
        self.gen = gen;
        Ok(())
    }

    /// Consult a file by path.
    pub fn consult_file(&mut self, path: &str) -> Result<(), EngineError> {
        let src = std::fs::read_to_string(path).map_err(|source| EngineError::Consult {
            path: path.to_string(),
            source,
        })?;
        self.consult_str(&src)
    }

    fn all_schemes(&self) -> SchemeEnv {
        let mut schemes = self.derived.schemes();
        for d in self.store.directives.values() {
            schemes.insert(d.name.clone(), d.types.clone());
        }
        schemes
    }

    /// Validate that every predicate call in the formula is known —
    /// either a derived constraint or a user clause/directive.
    fn validate_calls(&self, f: &Formula) -> Result<(), EngineError> {
        fn walk(
            f: &Formula,
            sess: &Session,
            out: &mut Result<(), EngineError>,
        ) {
            if out.is_err() {
                return;
            }
            match f {
                Formula::Atom(crate::ast::Constraint::Call(name, args)) => {
                    if !sess.derived.contains(name)
                        && !sess.store.contains(name, args.len())
                    {
                        *out = Err(EngineError::UnknownPredicate(name.clone()));
                    }
                }
                Formula::And(a, b) | Formula::Or(a, b) => {
                    walk(a, sess, out);
                    walk(b, sess, out);
                }
                _ => {}
            }
        }
        let mut out = Ok(());
        walk(f, self, &mut out);
        out
    }

    /// Parse, typecheck and solve a query.
    pub fn query(&mut self, src: &str) -> Result<QueryResult, EngineError> {
        let mut gen = self.gen.clone();
        let f = parser::parse_formula_with(src, &mut gen)?;
        self.validate_calls(&f)?;
        if self.typecheck {
            typecheck::check_formula(&f, &self.all_schemes())?;
        }
        let query_vars = f.free_vars();
        let mut f = f;
        if let Some((lo, hi)) = self.opts.int_bound {
            if let Ok(ctx) = typecheck::collect_context(&f) {
                for (v, t) in &ctx.vars {
                    if *t == crate::ast::Type::Int {
                        let var = Term::var(v);
                        f = Formula::and(
                            f,
                            Formula::and(
                                Formula::Atom(Constraint::leq(Term::Int(lo), var.clone())),
                                Formula::Atom(Constraint::leq(var, Term::Int(hi))),
                            ),
                        );
                    }
                }
            }
        }
        let resolver = EngineResolver {
            derived: &self.derived,
            store: &self.store,
        };
        let outcome = solver::solve(
            &f,
            &resolver,
            gen.clone(),
            self.opts.max_answers,
            self.opts.step_budget,
        );
        self.gen = gen;
        Ok(QueryResult {
            outcome,
            query_vars,
        })
    }

    /// Register a user-defined derived constraint (expansion form).
    pub fn define_derived(
        &mut self,
        def: crate::derived::DerivedDef,
    ) -> Result<(), EngineError> {
        if self.store.directives.keys().any(|(n, _)| *n == def.name)
            || self.store.clauses.keys().any(|(n, _)| *n == def.name)
        {
            return Err(EngineError::Derived(DerivedError::NameCollision(
                def.name.clone(),
            )));
        }
        self.derived.register(def)?;
        Ok(())
    }
}

/// Resolver wiring derived constraints and user clauses into the solver.
pub struct EngineResolver<'a> {
    pub derived: &'a Registry,
    pub store: &'a ClauseStore,
}

fn clause_branch(c: &Clause, args: &[Term], gen: &mut VarGen) -> Formula {
    // Rename apart: parameters map to the call's arguments, every other
    // body variable gets a fresh name.
    let mut map: BTreeMap<String, Term> = c
        .params
        .iter()
        .cloned()
        .zip(args.iter().cloned())
        .collect();
    for v in c.body.free_vars() {
        if !map.contains_key(&v) {
            map.insert(v.clone(), gen.fresh_var(&v));
        }
    }
    c.body.substitute(&map)
}

impl Resolver for EngineResolver<'_> {
    fn branches(&self, name: &str, args: &[Term], gen: &mut VarGen) -> Option<Vec<Formula>> {
        if let Some(f) = self.derived.expand(name, args, gen) {
            return Some(vec![f]);
        }
        if let Some(cs) = self.derived.clauses(name) {
            return Some(cs.iter().map(|c| clause_branch(c, args, gen)).collect());
        }
        if let Some(cs) = self.store.clauses(name, args.len()) {
            return Some(cs.iter().map(|c| clause_branch(c, args, gen)).collect());
        }
        // Directive without clauses: defined but unsatisfiable.
        if self.store.directive(name, args.len()).is_some() {
            return Some(Vec::new());
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ADDBOOK: &str = "\
:- dec_p_type(addBook(rel(bid,title), bid, title, rel(bid,title))).
addBook(Books, B, T, NewBooks) :-
  comp({(B, B)}, Books, {}) & NewBooks = {(B, T) / Books}.
";

    fn render_term(t: &Term) -> String {
        format!("{t}")
    }

    #[test]
    fn consult_and_query_addbook() {
        let mut s = Session::new();
        s.consult_str(ADDBOOK).unwrap();
        let r = s
            .query(
                "dec(NewBooks, rel(bid, title)) & \
                 addBook({}, bid?b, title?sur, NewBooks).",
            )
            .unwrap();
        assert_eq!(r.status(), Status::Sat);
        let a = &r.outcome.answers[0];
        assert_eq!(
            render_term(&a.bindings["NewBooks"]),
            "{(bid?b,title?sur)}"
        );
    }

    #[test]
    fn missing_directive_under_typecheck() {
        let mut s = Session::new();
        let err = s.consult_str("p(A) :- A = {}.").unwrap_err();
        assert!(matches!(
            err,
            EngineError::Type(TypeError::MissingDirective(_))
        ));
        // With typechecking off the same file loads.
        s.set_typecheck(false);
        s.consult_str("p(A) :- A = {}.").unwrap();
        let r = s.query("p({}).").unwrap();
        assert_eq!(r.status(), Status::Sat);
    }

    #[test]
    fn consult_is_all_or_nothing() {
        let mut s = Session::new();
        let src = "\
:- dec_p_type(q(int)).
q(N) :- N = 1.
r(A) :- A = {}.
";
        assert!(s.consult_str(src).is_err());
        assert!(!s.store.contains("q", 1));
    }

    #[test]
    fn ill_typed_clause_body_is_reported() {
        let mut s = Session::new();
        let src = "\
:- dec_p_type(p(set(int))).
p(A) :- a in A.
";
        let err = s.consult_str(src).unwrap_err();
        assert!(matches!(err, EngineError::Type(_)));
    }

    #[test]
    fn unknown_predicate_is_rejected() {
        let mut s = Session::new();
        let err = s.query("mystery(X).").unwrap_err();
        assert!(matches!(err, EngineError::UnknownPredicate(_)));
    }

    #[test]
    fn derived_constraints_resolve() {
        let mut s = Session::new();
        let r = s
            .query("dec(B, set(int)) & subset({1,2}, B) & B = {1,2,3}.")
            .unwrap();
        assert_eq!(r.status(), Status::Sat);
        let r = s.query("dec(C, set(int)) & inters({1,2}, {2,3}, C).").unwrap();
        assert!(r
            .outcome
            .answers
            .iter()
            .any(|a| render_term(&a.bindings["C"]) == "{2}"));
    }

    #[test]
    fn pfun_and_apply_to() {
        let mut s = Session::new();
        let r = s.query("pfun({(1,u?a),(2,u?b)}).").unwrap();
        assert_eq!(r.status(), Status::Sat);
        let r = s.query("pfun({(1,u?a),(1,u?b)}).").unwrap();
        assert_eq!(r.status(), Status::Unsat);
        let r = s
            .query("dec(Y, u) & applyTo({(1,u?a),(2,u?b)}, 2, Y).")
            .unwrap();
        assert_eq!(r.status(), Status::Sat);
        assert_eq!(render_term(&r.outcome.answers[0].bindings["Y"]), "u?b");
    }

    #[test]
    fn typecheck_off_ignores_declarations() {
        let mut s = Session::new();
        // Formula (3)-style: ill-typed, rejected with typechecking on...
        let err = s.query("dec(X, int) & X = {}.").unwrap_err();
        assert!(matches!(err, EngineError::Type(_)));
        // ...but runs with it off.
        s.set_typecheck(false);
        let r = s.query("dec(X, int) & X = {}.").unwrap();
        assert_eq!(r.status(), Status::Sat);
    }

    #[test]
    fn divergence_is_budget_exhaustion() {
        let mut s = Session::new();
        s.set_typecheck(false);
        s.opts.step_budget = 2_000;
        let r = s.query("id({X/A}, R) & id(R, A).").unwrap();
        assert_eq!(r.status(), Status::Budget);
    }

    #[test]
    fn poly_clause_and_query() {
        let mut s = Session::new();
        let src = "\
:- dec_pp_type(first(set(prod(T1, T2)), T1)).
first(R, X) :- dec(Y, T2) & (X, Y) in R.
";
        s.consult_str(src).unwrap();
        let r = s
            .query("dec(R, rel(int, u)) & dec(X, int) & R = {(1, u?a)} & first(R, X).")
            .unwrap();
        assert_eq!(r.status(), Status::Sat);
        assert_eq!(render_term(&r.outcome.answers[0].bindings["X"]), "1");
    }

    #[test]
    fn max_answers_caps_enumeration() {
        let mut s = Session::new();
        s.opts.max_answers = Some(1);
        let r = s.query("dec(X, int) & X in {1,2,3}.").unwrap();
        assert_eq!(r.outcome.answers.len(), 1);
        assert!(!r.outcome.complete);
    }
}
