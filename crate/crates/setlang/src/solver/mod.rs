//! The constraint solver: depth-first search over the nondeterministic
//! rewriting system of [`rules`], with chronological backtracking, a
//! FIFO constraint scheduler that prioritizes equalities, and a global
//! step budget.  Exhausting the budget is reported separately from
//! failure: an empty answer stream only means `false` when the search
//! space was fully explored.

pub mod ints;
pub mod rules;

pub use ints::IntSat;
pub use rules::{is_irreducible, rewrite_step, Action};

use crate::ast::*;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Default rewrite-step budget per solve.
pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

/// The constraint store of one search state.
#[derive(Debug, Clone, Default)]
pub struct Store {
    /// Constraints awaiting rewriting.
    pub pending: VecDeque<Constraint>,
    /// Irreducible constraints (solved form).
    pub solved: Vec<Constraint>,
    /// The accumulated substitution.
    pub subst: BTreeMap<String, Term>,
}

impl Store {
    /// Apply the substitution deeply to a term.
    pub fn walk(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => match self.subst.get(v) {
                Some(b) => self.walk(b),
                None => t.clone(),
            },
            Term::Arith(op, a, b) => {
                Term::Arith(*op, Box::new(self.walk(a)), Box::new(self.walk(b)))
            }
            Term::Cons(a, b) => Term::cons(self.walk(a), self.walk(b)),
            Term::Interval(a, b) => Term::interval(self.walk(a), self.walk(b)),
            Term::Pair(a, b) => Term::pair(self.walk(a), self.walk(b)),
            _ => t.clone(),
        }
    }

    pub fn walk_constraint(&self, c: &Constraint) -> Constraint {
        match c {
            Constraint::Prim(s, args) => {
                Constraint::Prim(*s, args.iter().map(|t| self.walk(t)).collect())
            }
            Constraint::Call(n, args) => {
                Constraint::Call(n.clone(), args.iter().map(|t| self.walk(t)).collect())
            }
        }
    }

    /// Bind a variable; solved constraints mentioning it go back to
    /// pending so their rewriting can resume with the new information.
    pub fn bind(&mut self, x: &str, t: Term) {
        let t = self.walk(&t);
        debug_assert!(!self.subst.contains_key(x), "rebinding {x}");
        self.subst.insert(x.to_string(), t);
        let mut keep = Vec::new();
        for c in std::mem::take(&mut self.solved) {
            if c.free_vars().contains(x) {
                self.pending.push_back(c);
            } else {
                keep.push(c);
            }
        }
        self.solved = keep;
    }

    /// The integer-flavored constraints currently in the store.
    pub fn int_constraints(&self) -> Vec<Constraint> {
        self.solved
            .iter()
            .chain(self.pending.iter())
            .map(|c| self.walk_constraint(c))
            .filter(ints::is_int_constraint)
            .collect()
    }
}

impl rules::StoreView for Store {
    fn int_value(&self, var: &str) -> Option<i64> {
        if let Some(t) = self.subst.get(var) {
            return self.walk(t).eval_int();
        }
        ints::exact_value(&self.int_constraints(), var)
    }
}

/// One answer of the solver: a substitution plus irreducible residue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answer {
    pub bindings: BTreeMap<String, Term>,
    pub residue: Vec<Constraint>,
}

impl Answer {
    /// Re-express the answer as a formula (bindings as equalities,
    /// conjoined with the residue).
    pub fn to_formula(&self) -> Formula {
        let eqs = self
            .bindings
            .iter()
            .map(|(v, t)| Formula::atom(Constraint::eq(Term::var(v), t.clone())));
        let res = self.residue.iter().cloned().map(Formula::atom);
        Formula::conj(eqs.chain(res))
    }

    /// An unconditional success with no bindings of interest.
    pub fn is_yes(&self, of_interest: &BTreeSet<String>) -> bool {
        self.residue.is_empty() && self.bindings.keys().all(|v| !of_interest.contains(v))
    }
}

/// Resolves calls to derived constraints and user-defined predicates
/// into alternative body formulas.
pub trait Resolver {
    /// `None` means the name is unknown; an empty vector means no
    /// clauses (the call fails).
    fn branches(&self, name: &str, args: &[Term], gen: &mut VarGen) -> Option<Vec<Formula>>;
}

/// A resolver that knows no predicates.
pub struct NoResolver;
impl Resolver for NoResolver {
    fn branches(&self, _: &str, _: &[Term], _: &mut VarGen) -> Option<Vec<Formula>> {
        None
    }
}

#[derive(Debug, Clone)]
struct State {
    goals: Vec<Formula>,
    store: Store,
}

/// Lazy stream of answers for one formula.
pub struct Solver<'r> {
    resolver: &'r dyn Resolver,
    pub gen: VarGen,
    stack: Vec<State>,
    budget_left: u64,
    /// Set when the step budget ran out; the stream is then incomplete.
    pub budget_exhausted: bool,
}

enum Sat {
    Ok,
    Failed,
    OutOfBudget,
}

impl<'r> Solver<'r> {
    pub fn new(f: &Formula, resolver: &'r dyn Resolver, gen: VarGen, budget: u64) -> Solver<'r> {
        Solver {
            resolver,
            gen,
            stack: vec![State {
                goals: vec![f.clone()],
                store: Store::default(),
            }],
            budget_left: budget,
            budget_exhausted: false,
        }
    }

    /// True when the whole search space has been explored.
    pub fn search_exhausted(&self) -> bool {
        self.stack.is_empty() && !self.budget_exhausted
    }

    fn spend(&mut self, cost: u64) -> bool {
        if self.budget_left < cost {
            self.budget_left = 0;
            self.budget_exhausted = true;
            self.stack.clear();
            return false;
        }
        self.budget_left -= cost;
        true
    }

    /// Run the rewriting loop of one state to a fixpoint.
    fn saturate(&mut self, st: &mut State) -> Sat {
        loop {
            if st.store.pending.is_empty() {
                return Sat::Ok;
            }
            // FIFO with equality priority.
            let idx = st
                .store
                .pending
                .iter()
                .position(|c| matches!(c, Constraint::Prim(Sym::Eq, _)))
                .unwrap_or(0);
            let c = st.store.pending.remove(idx).unwrap();
            let c = st.store.walk_constraint(&c);
            // Steps are priced by constraint size: a derivation whose
            // terms keep growing burns through the budget quickly, which
            // keeps memory use bounded by the budget as well.
            if !self.spend(1 + c.node_count() / 2) {
                return Sat::OutOfBudget;
            }
            match rewrite_step(&c, &st.store, &mut self.gen) {
                Action::Drop => {}
                Action::Fail => return Sat::Failed,
                Action::Bind(x, t) => st.store.bind(&x, t),
                Action::Irreducible => st.store.solved.push(c),
                Action::Replace(mut branches) => {
                    if branches.is_empty() {
                        return Sat::Failed;
                    }
                    let first = branches.remove(0);
                    // Siblings become backtracking points; push in
                    // reverse so the leftmost alternative is explored
                    // first after this one fails.
                    for br in branches.into_iter().rev() {
                        let mut sib = st.clone();
                        sib.store.pending.extend(br);
                        self.stack.push(sib);
                    }
                    st.store.pending.extend(first);
                }
            }
        }
    }

    /// After goals and pending are empty: re-examine solved constraints
    /// that became reducible (e.g. `size` over a variable whose
    /// cardinality the integer store now pins down), check store
    /// consistency, and emit the answer.
    fn finalize(&mut self, st: &mut State) -> Option<Answer> {
        loop {
            match self.saturate(st) {
                Sat::Ok => {}
                Sat::Failed | Sat::OutOfBudget => return None,
            }
            let mut probe_gen = self.gen.clone();
            let pos = st.store.solved.iter().position(|c| {
                !matches!(
                    rewrite_step(c, &st.store, &mut probe_gen),
                    Action::Irreducible
                )
            });
            match pos {
                Some(i) => {
                    let c = st.store.solved.remove(i);
                    st.store.pending.push_back(c);
                }
                None => break,
            }
        }
        // Consistency: complementary membership literals on identical
        // arguments contradict each other.
        let mut ins: BTreeSet<Vec<Term>> = BTreeSet::new();
        let mut nins: BTreeSet<Vec<Term>> = BTreeSet::new();
        for c in &st.store.solved {
            match c {
                Constraint::Prim(Sym::In, args) => {
                    ins.insert(args.clone());
                }
                Constraint::Prim(Sym::Nin, args) => {
                    nins.insert(args.clone());
                }
                _ => {}
            }
        }
        if ins.intersection(&nins).next().is_some() {
            return None;
        }
        // Integer store check.
        if ints::check(&st.store.int_constraints()) == IntSat::Unsat {
            return None;
        }
        let bindings: BTreeMap<String, Term> = st
            .store
            .subst
            .keys()
            .map(|v| (v.clone(), st.store.walk(&Term::var(v))))
            .collect();
        let mut residue: Vec<Constraint> = Vec::new();
        for c in &st.store.solved {
            let c = st.store.walk_constraint(c);
            if !residue.contains(&c) {
                residue.push(c);
            }
        }
        Some(Answer { bindings, residue })
    }
}

impl<'r> Iterator for Solver<'r> {
    type Item = Answer;

    fn next(&mut self) -> Option<Answer> {
        'outer: while let Some(mut st) = self.stack.pop() {
            loop {
                let Some(goal) = st.goals.pop() else {
                    match self.finalize(&mut st) {
                        Some(ans) => return Some(ans),
                        None => continue 'outer,
                    }
                };
                match goal {
                    Formula::True | Formula::Dec(_, _) => {}
                    Formula::False => continue 'outer,
                    Formula::And(a, b) => {
                        st.goals.push(*b);
                        st.goals.push(*a);
                    }
                    Formula::Or(a, b) => {
                        let mut right = st.clone();
                        right.goals.push(*b);
                        self.stack.push(right);
                        st.goals.push(*a);
                    }
                    Formula::Atom(c) => {
                        if matches!(c, Constraint::Call(_, _)) {
                            // Settle the constraint store before
                            // resolving a call: a sibling state forked
                            // by the solver may still hold unsolved
                            // constraints that bind (or refute) the
                            // call's arguments.  The call goal must stay
                            // on the goal stack while we saturate: the
                            // saturation itself may fork sibling states,
                            // and those must still see the call.
                            st.goals.push(Formula::Atom(c.clone()));
                            let sat = self.saturate(&mut st);
                            st.goals.pop();
                            match sat {
                                Sat::Ok => {}
                                Sat::Failed => continue 'outer,
                                Sat::OutOfBudget => return None,
                            }
                        }
                        let c = st.store.walk_constraint(&c);
                        let cost = 1 + c.node_count() / 2;
                        match c {
                            Constraint::Call(name, args) => {
                                if !self.spend(cost) {
                                    return None;
                                }
                                match self.resolver.branches(&name, &args, &mut self.gen) {
                                    None => {
                                        // Unknown predicate: keep the call
                                        // as residue (the engine validates
                                        // names before solving).
                                        st.store.solved.push(Constraint::Call(name, args));
                                    }
                                    Some(branches) => {
                                        if branches.is_empty() {
                                            continue 'outer;
                                        }
                                        let mut it = branches.into_iter();
                                        let first = it.next().unwrap();
                                        let rest: Vec<Formula> = it.collect();
                                        for b in rest.into_iter().rev() {
                                            let mut sib = st.clone();
                                            sib.goals.push(b);
                                            self.stack.push(sib);
                                        }
                                        st.goals.push(first);
                                    }
                                }
                            }
                            prim => {
                                st.store.pending.push_back(prim);
                                match self.saturate(&mut st) {
                                    Sat::Ok => {}
                                    Sat::Failed => continue 'outer,
                                    Sat::OutOfBudget => return None,
                                }
                            }
                        }
                    }
                }
            }
        }
        None
    }
}

/// Summary of a bounded solve.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub answers: Vec<Answer>,
    /// The step budget ran out (the answer list may be incomplete and
    /// emptiness does not mean unsatisfiable).
    pub budget_exhausted: bool,
    /// The search space was fully explored.
    pub complete: bool,
}

impl SolveOutcome {
    pub fn is_unsat(&self) -> bool {
        self.answers.is_empty() && self.complete
    }
}

/// Solve a formula, collecting up to `max_answers` answers.
pub fn solve(
    f: &Formula,
    resolver: &dyn Resolver,
    gen: VarGen,
    max_answers: Option<usize>,
    step_budget: u64,
) -> SolveOutcome {
    let mut solver = Solver::new(f, resolver, gen, step_budget);
    let mut answers = Vec::new();
    while let Some(a) = solver.next() {
        answers.push(a);
        if let Some(max) = max_answers {
            if answers.len() >= max {
                break;
            }
        }
    }
    let complete = solver.search_exhausted();
    SolveOutcome {
        answers,
        budget_exhausted: solver.budget_exhausted,
        complete,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(src: &str) -> SolveOutcome {
        let mut gen = VarGen::new();
        let f = crate::parser::parse_formula_with(src, &mut gen).unwrap();
        solve(&f, &NoResolver, gen, None, DEFAULT_STEP_BUDGET)
    }

    fn first(src: &str) -> Answer {
        let out = run(src);
        assert!(!out.answers.is_empty(), "expected an answer for {src}");
        out.answers.into_iter().next().unwrap()
    }

    #[test]
    fn ground_equalities() {
        assert!(run("{1} = {1,1}").answers.len() >= 1);
        assert!(run("{1,2} = {2,1}").answers.len() >= 1);
        assert!(run("{1} = {2}").is_unsat());
        assert!(run("(1,a) = (1,a) & u?x neq u?y").answers.len() == 1);
    }

    #[test]
    fn binding_and_residue() {
        let a = first("X = 3 & Y = {X/A}");
        assert_eq!(a.bindings["X"], Term::Int(3));
        assert_eq!(a.bindings["Y"].to_string(), "{3/A}");
    }

    #[test]
    fn membership() {
        let out = run("X in {1,2}");
        assert_eq!(out.answers.len(), 2);
        assert_eq!(out.answers[0].bindings["X"], Term::Int(1));
        assert_eq!(out.answers[1].bindings["X"], Term::Int(2));
        assert!(run("3 in {1,2}").is_unsat());
        assert!(run("3 nin {1,2}").answers.len() == 1);
        assert!(run("X in {}").is_unsat());
        assert!(run("2 in [1,5] & 7 nin [1,5]").answers.len() == 1);
    }

    #[test]
    fn union_first_answer_is_exact() {
        let a = first("un({a,1,{2},(5,b)},{X},{Y/B})");
        assert_eq!(a.bindings["Y"].to_string(), "a");
        assert_eq!(a.bindings["B"].to_string(), "{1,{2},(5,b),X}");
        let shown: Vec<String> = a.residue.iter().map(|c| c.to_string()).collect();
        assert_eq!(shown, vec!["X neq a".to_string()]);
    }

    #[test]
    fn union_ground() {
        let a = first("un({1,2},{2,3},C)");
        assert_eq!(a.bindings["C"].to_string(), "{1,2,3}");
        assert!(run("un({1},{2},{1,2,3})").is_unsat());
        assert!(run("un({1},{2},{1,2})").answers.len() >= 1);
        assert!(run("un(A,B,{1}) & 1 nin A & 1 nin B").is_unsat());
    }

    #[test]
    fn disjointness() {
        assert!(run("disj({1,2},{3,4})").answers.len() == 1);
        assert!(run("disj({1,2},{2,3})").is_unsat());
        let a = first("disj(A,A)");
        assert_eq!(a.bindings["A"], Term::Empty);
    }

    #[test]
    fn sizes() {
        let a = first("size({1,2,3,1,4},M)");
        assert_eq!(a.bindings["M"], Term::Int(4));
        let out = run("size(A,2) & A = {X,Y}");
        assert!(!out.answers.is_empty());
        assert!(run("size(A,N) & N = 2 & A = {1}").is_unsat());
        let a = first("size([2,5],M)");
        assert_eq!(a.bindings["M"], Term::Int(4));
    }

    #[test]
    fn identity_inverse_composition() {
        let a = first("id({1,2},R)");
        assert_eq!(a.bindings["R"].to_string(), "{(1,1),(2,2)}");
        let a = first("inv({(1,a),(2,b)},S)");
        assert_eq!(a.bindings["S"].to_string(), "{(a,1),(b,2)}");
        let a = first("comp({(1,a)},{(a,x)},T)");
        assert_eq!(a.bindings["T"].to_string(), "{(1,x)}");
        assert!(run("comp({(1,a)},{(b,x)},T) & T neq {}").is_unsat());
        assert!(run("comp({(1,a)},{(b,x)},{})").answers.len() >= 1);
        assert!(run("comp({(1,a)},{(a,x)},{})").is_unsat());
    }

    #[test]
    fn comp_empty_rule_shape() {
        // The empty-composition rule produces its four-conjunct body.
        let c = Constraint::prim(
            Sym::Comp,
            vec![
                crate::parser::parse_term("{(X,U)/R}").unwrap(),
                crate::parser::parse_term("{(T,Z)/S}").unwrap(),
                Term::Empty,
            ],
        );
        let mut gen = VarGen::new();
        match rewrite_step(&c, &rules::EmptyStore, &mut gen) {
            Action::Replace(brs) => {
                assert_eq!(brs.len(), 1);
                let shown: Vec<String> = brs[0].iter().map(|c| c.to_string()).collect();
                assert_eq!(
                    shown,
                    vec![
                        "U neq T",
                        "comp({(X,U)},S,{})",
                        "comp(R,{(T,Z)},{})",
                        "comp(R,S,{})",
                    ]
                );
            }
            other => panic!("expected Replace, got {other:?}"),
        }
    }

    #[test]
    fn intervals() {
        assert!(run("[1,3] = {1,2,3}").answers.len() >= 1);
        assert!(run("[1,3] = {1,2}").is_unsat());
        assert!(run("[3,1] = {}").answers.len() == 1);
        let a = first("[M,N] = [1,3]");
        assert_eq!(a.bindings["M"], Term::Int(1));
        assert_eq!(a.bindings["N"], Term::Int(3));
    }

    #[test]
    fn set_disequality_needs_witness_consistency() {
        assert!(run("A neq {} & A = {}").is_unsat());
        assert!(run("{X} neq {X}").is_unsat());
        assert!(run("A neq A").is_unsat());
        assert!(run("{1} neq {1,1}").is_unsat());
        assert!(!run("{1} neq {1,2}").is_unsat());
    }

    #[test]
    fn tail_absorption() {
        let a = first("X = {1/X}");
        let t = &a.bindings["X"];
        let (elems, tail) = t.as_ext().unwrap();
        assert_eq!(elems.len(), 1);
        assert!(tail.is_var(), "tail must be replaced by a fresh variable");
        assert!(run("X = (1,X)").is_unsat());
        assert!(run("X = {{X}}").is_unsat());
    }

    #[test]
    fn budget_exhaustion_is_not_unsat() {
        // id over mutually recursive sets diverges; the budget stops it.
        let mut gen = VarGen::new();
        let f = crate::parser::parse_formula_with("id({X/A},R) & id(R,A)", &mut gen).unwrap();
        let out = solve(&f, &NoResolver, gen, None, 2_000);
        assert!(out.budget_exhausted);
        assert!(!out.complete);
        assert!(!out.is_unsat());
    }

    #[test]
    fn int_store_integration() {
        assert!(run("0 =< N & N =< -1").is_unsat());
        assert!(run("X = 1 + 2 & X = 3").answers.len() == 1);
        assert!(run("X = 1 + 2 & X = 4").is_unsat());
        let a = first("M = 1 + N & 0 =< N");
        assert!(!a.residue.is_empty(), "open int constraints stay as residue");
        // the minimum-of-a-pair pattern: exactly two answers
        let out = run("un({K,N},[M,X1],[M,X1]) & M in {K,N}");
        assert_eq!(out.answers.len(), 2);
    }

    #[test]
    fn size_from_int_store() {
        // size(A,N) with N pinned down only by the integer store
        let out = run("size(A,N) & 2 =< N & N =< 2");
        assert!(!out.answers.is_empty());
        let a = &out.answers[0];
        let s = a.bindings["A"].to_string();
        assert!(s.starts_with('{'), "A instantiated: {s}");
    }
}
