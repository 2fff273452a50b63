//! Abstract syntax for the set-constraint language: types, terms, atomic
//! constraints, formulas, clauses and directives, together with the few
//! structural operations (substitution, free variables, fresh-name
//! generation, DNF conversion) that every other module builds on.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Types of the language.
///
/// `rel(t1,t2)` is an alias for `set(prod(t1,t2))` and is expanded at
/// construction time; it is re-introduced when rendering (see
/// [`Type::as_rel`] and the `Display` impl).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    /// The integers.
    Int,
    /// An uninterpreted basic type, named by a lowercase identifier.
    Basic(String),
    /// An enumerated type with at least two distinct atoms.  Equality of
    /// enum types is order-sensitive: `enum([a,b])` and `enum([b,a])`
    /// are different types.
    Enum(Vec<String>),
    /// Cartesian product.
    Prod(Box<Type>, Box<Type>),
    /// Finite sets over an element type.
    Set(Box<Type>),
    /// A type variable; only admissible inside `dec_pp_type` directives.
    Var(String),
}

impl Type {
    pub fn set(t: Type) -> Type {
        Type::Set(Box::new(t))
    }
    pub fn prod(a: Type, b: Type) -> Type {
        Type::Prod(Box::new(a), Box::new(b))
    }
    /// Construct `rel(a, b)`, i.e. `set(prod(a, b))`.
    pub fn rel(a: Type, b: Type) -> Type {
        Type::set(Type::prod(a, b))
    }
    /// If this type has the shape `set(prod(a, b))`, return `(a, b)`.
    pub fn as_rel(&self) -> Option<(&Type, &Type)> {
        if let Type::Set(inner) = self {
            if let Type::Prod(a, b) = inner.as_ref() {
                return Some((a, b));
            }
        }
        None
    }
    pub fn basic(name: &str) -> Type {
        Type::Basic(name.to_string())
    }
    /// Type variables occurring in this type.
    pub fn type_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Type::Var(v) => {
                out.insert(v.clone());
            }
            Type::Prod(a, b) => {
                a.type_vars(out);
                b.type_vars(out);
            }
            Type::Set(t) => t.type_vars(out),
            _ => {}
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((a, b)) = self.as_rel() {
            return write!(f, "rel({a},{b})");
        }
        match self {
            Type::Int => write!(f, "int"),
            Type::Basic(b) => write!(f, "{b}"),
            Type::Enum(atoms) => {
                write!(f, "enum([")?;
                for (i, a) in atoms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, "])")
            }
            Type::Prod(a, b) => write!(f, "prod({a},{b})"),
            Type::Set(t) => write!(f, "set({t})"),
            Type::Var(v) => write!(f, "{v}"),
        }
    }
}

/// Integer arithmetic operators.  Multiplication is linear only: at least
/// one operand must be an integer constant (enforced by the parser and by
/// term constructors used in the solver).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntOp {
    Add,
    Sub,
    Mul,
}

/// Terms of the language.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// Integer literal.
    Int(i64),
    /// Linear integer arithmetic.
    Arith(IntOp, Box<Term>, Box<Term>),
    /// Untagged atom (lowercase identifier).
    Atom(String),
    /// Tagged atom `b?a` of basic type `b`.
    Tagged(String, String),
    /// Variable (identifier starting with an uppercase letter or `_`).
    Var(String),
    /// The empty set `{}`.
    Empty,
    /// Extensional set constructor `{x / S}`: the set `{x} ∪ S`.
    Cons(Box<Term>, Box<Term>),
    /// Integer interval `[m,n]`.
    Interval(Box<Term>, Box<Term>),
    /// Ordered pair `(a,b)`.
    Pair(Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }
    pub fn atom(name: &str) -> Term {
        Term::Atom(name.to_string())
    }
    pub fn tagged(base: &str, name: &str) -> Term {
        Term::Tagged(base.to_string(), name.to_string())
    }
    pub fn pair(a: Term, b: Term) -> Term {
        Term::Pair(Box::new(a), Box::new(b))
    }
    pub fn cons(head: Term, tail: Term) -> Term {
        Term::Cons(Box::new(head), Box::new(tail))
    }
    pub fn interval(lo: Term, hi: Term) -> Term {
        Term::Interval(Box::new(lo), Box::new(hi))
    }
    pub fn add(a: Term, b: Term) -> Term {
        Term::Arith(IntOp::Add, Box::new(a), Box::new(b))
    }
    pub fn sub(a: Term, b: Term) -> Term {
        Term::Arith(IntOp::Sub, Box::new(a), Box::new(b))
    }
    pub fn mul(a: Term, b: Term) -> Term {
        Term::Arith(IntOp::Mul, Box::new(a), Box::new(b))
    }
    /// Build `{e1,...,en / tail}` from a list of elements.
    pub fn set_lit(elems: Vec<Term>, tail: Term) -> Term {
        elems
            .into_iter()
            .rev()
            .fold(tail, |acc, e| Term::cons(e, acc))
    }

    /// Flatten a chain of `Cons` cells into `(elements, tail)`.
    /// `{a,b/X}` gives `([a,b], X)`; a plain `{a}` gives `([a], {})`.
    pub fn as_ext(&self) -> Option<(Vec<&Term>, &Term)> {
        match self {
            Term::Cons(_, _) => {
                let mut elems = Vec::new();
                let mut cur = self;
                while let Term::Cons(h, t) = cur {
                    elems.push(h.as_ref());
                    cur = t.as_ref();
                }
                Some((elems, cur))
            }
            _ => None,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// Free variables, in first-occurrence-independent (sorted) order.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Arith(_, a, b)
            | Term::Cons(a, b)
            | Term::Interval(a, b)
            | Term::Pair(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            _ => {}
        }
    }

    /// Capture-free substitution of terms for variables.  Terms have no
    /// binders, so this is plain simultaneous replacement.
    pub fn substitute(&self, map: &BTreeMap<String, Term>) -> Term {
        match self {
            Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Arith(op, a, b) => {
                Term::Arith(*op, Box::new(a.substitute(map)), Box::new(b.substitute(map)))
            }
            Term::Cons(a, b) => Term::cons(a.substitute(map), b.substitute(map)),
            Term::Interval(a, b) => Term::interval(a.substitute(map), b.substitute(map)),
            Term::Pair(a, b) => Term::pair(a.substitute(map), b.substitute(map)),
            _ => self.clone(),
        }
    }

    /// Number of nodes in the term tree.  The solver uses this to price
    /// rewriting steps so that derivations whose terms grow without
    /// bound exhaust the budget instead of exhausting memory.
    pub fn node_count(&self) -> u64 {
        match self {
            Term::Arith(_, a, b)
            | Term::Cons(a, b)
            | Term::Interval(a, b)
            | Term::Pair(a, b) => 1 + a.node_count() + b.node_count(),
            Term::Tagged(_, _) => 2,
            _ => 1,
        }
    }

    /// Evaluate a ground arithmetic term to an integer, if possible.
    pub fn eval_int(&self) -> Option<i64> {
        match self {
            Term::Int(n) => Some(*n),
            Term::Arith(op, a, b) => {
                let a = a.eval_int()?;
                let b = b.eval_int()?;
                match op {
                    IntOp::Add => a.checked_add(b),
                    IntOp::Sub => a.checked_sub(b),
                    IntOp::Mul => a.checked_mul(b),
                }
            }
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Arith(_, a, b)
            | Term::Cons(a, b)
            | Term::Interval(a, b)
            | Term::Pair(a, b) => a.is_ground() && b.is_ground(),
            _ => true,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(n) => write!(f, "{n}"),
            Term::Arith(op, a, b) => {
                // Parenthesise a child when its operator binds less
                // tightly, or equally on the right (operators are
                // left-associative).
                let prec = |t: &Term| match t {
                    Term::Arith(IntOp::Mul, _, _) => 2,
                    Term::Arith(_, _, _) => 1,
                    _ => 3,
                };
                let myp = prec(self);
                let (lp, rp) = (prec(a), prec(b));
                if lp < myp {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                match op {
                    IntOp::Add => write!(f, " + ")?,
                    IntOp::Sub => write!(f, " - ")?,
                    IntOp::Mul => write!(f, " * ")?,
                }
                if rp <= myp && matches!(b.as_ref(), Term::Arith(..)) {
                    write!(f, "({b})")
                } else if let Term::Int(n) = b.as_ref() {
                    // A negative literal on the right would lex as two
                    // operators; keep the round trip exact.
                    if *n < 0 {
                        write!(f, "({n})")
                    } else {
                        write!(f, "{n}")
                    }
                } else {
                    write!(f, "{b}")
                }
            }
            Term::Atom(a) => write!(f, "{a}"),
            Term::Tagged(b, a) => write!(f, "{b}?{a}"),
            Term::Var(v) => write!(f, "{v}"),
            Term::Empty => write!(f, "{{}}"),
            Term::Cons(_, _) => {
                let (elems, tail) = self.as_ext().expect("cons");
                write!(f, "{{")?;
                for (i, e) in elems.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{e}")?;
                }
                match tail {
                    Term::Empty => write!(f, "}}"),
                    t => write!(f, "/{t}}}"),
                }
            }
            Term::Interval(a, b) => write!(f, "[{a},{b}]"),
            Term::Pair(a, b) => write!(f, "({a},{b})"),
        }
    }
}

/// The primitive constraint symbols together with user-level calls to
/// derived constraints or program-defined predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    Eq,
    Neq,
    In,
    Nin,
    Un,
    Disj,
    Size,
    Id,
    Inv,
    Comp,
    Leq,
}

impl Sym {
    pub fn arity(&self) -> usize {
        match self {
            Sym::Eq | Sym::Neq | Sym::In | Sym::Nin | Sym::Disj | Sym::Size | Sym::Id
            | Sym::Inv | Sym::Leq => 2,
            Sym::Un | Sym::Comp => 3,
        }
    }
    pub fn name(&self) -> &'static str {
        match self {
            Sym::Eq => "=",
            Sym::Neq => "neq",
            Sym::In => "in",
            Sym::Nin => "nin",
            Sym::Un => "un",
            Sym::Disj => "disj",
            Sym::Size => "size",
            Sym::Id => "id",
            Sym::Inv => "inv",
            Sym::Comp => "comp",
            Sym::Leq => "=<",
        }
    }
    /// Infix symbols are rendered `a op b`; the rest as `op(a,..)`.
    pub fn is_infix(&self) -> bool {
        matches!(self, Sym::Eq | Sym::Neq | Sym::In | Sym::Nin | Sym::Leq)
    }
}

/// An atomic constraint: either a primitive constraint or a call to a
/// derived constraint / user-defined predicate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    Prim(Sym, Vec<Term>),
    Call(String, Vec<Term>),
}

impl Constraint {
    pub fn prim(sym: Sym, args: Vec<Term>) -> Constraint {
        debug_assert_eq!(sym.arity(), args.len(), "arity mismatch for {}", sym.name());
        Constraint::Prim(sym, args)
    }
    pub fn eq(a: Term, b: Term) -> Constraint {
        Constraint::Prim(Sym::Eq, vec![a, b])
    }
    pub fn neq(a: Term, b: Term) -> Constraint {
        Constraint::Prim(Sym::Neq, vec![a, b])
    }
    pub fn is_in(x: Term, s: Term) -> Constraint {
        Constraint::Prim(Sym::In, vec![x, s])
    }
    pub fn nin(x: Term, s: Term) -> Constraint {
        Constraint::Prim(Sym::Nin, vec![x, s])
    }
    pub fn un(a: Term, b: Term, c: Term) -> Constraint {
        Constraint::Prim(Sym::Un, vec![a, b, c])
    }
    pub fn disj(a: Term, b: Term) -> Constraint {
        Constraint::Prim(Sym::Disj, vec![a, b])
    }
    pub fn size(s: Term, n: Term) -> Constraint {
        Constraint::Prim(Sym::Size, vec![s, n])
    }
    pub fn leq(a: Term, b: Term) -> Constraint {
        Constraint::Prim(Sym::Leq, vec![a, b])
    }
    pub fn call(name: &str, args: Vec<Term>) -> Constraint {
        Constraint::Call(name.to_string(), args)
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Constraint::Prim(_, a) | Constraint::Call(_, a) => a,
        }
    }

    pub fn node_count(&self) -> u64 {
        1 + self.args().iter().map(Term::node_count).sum::<u64>()
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for a in self.args() {
            a.collect_vars(&mut out);
        }
        out
    }

    pub fn substitute(&self, map: &BTreeMap<String, Term>) -> Constraint {
        match self {
            Constraint::Prim(s, args) => {
                Constraint::Prim(*s, args.iter().map(|t| t.substitute(map)).collect())
            }
            Constraint::Call(n, args) => {
                Constraint::Call(n.clone(), args.iter().map(|t| t.substitute(map)).collect())
            }
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Prim(sym, args) if sym.is_infix() => {
                write!(f, "{} {} {}", args[0], sym.name(), args[1])
            }
            Constraint::Prim(sym, args) => {
                write!(f, "{}(", sym.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Constraint::Call(name, args) => {
                // Comparison shorthands read better infix and are parsed
                // back that way.
                if args.len() == 2 && matches!(name.as_str(), "<" | ">" | ">=") {
                    return write!(f, "{} {} {}", args[0], name, args[1]);
                }
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Formulas: conjunctions and disjunctions of atomic constraints, the
/// trivial formulas, and type declarations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(Constraint),
    /// `dec(v, t)`: a type declaration for a variable.  Ignored by the
    /// solver; consumed by the typechecker.
    Dec(String, Type),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn atom(c: Constraint) -> Formula {
        Formula::Atom(c)
    }
    /// Conjunction of a sequence, `true` when empty.
    pub fn conj<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        let mut it = items.into_iter();
        match it.next() {
            None => Formula::True,
            Some(first) => it.fold(first, Formula::and),
        }
    }
    /// Disjunction of a sequence, `false` when empty.
    pub fn disj<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        let mut it = items.into_iter();
        match it.next() {
            None => Formula::False,
            Some(first) => it.fold(first, Formula::or),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(c) => {
                for a in c.args() {
                    a.collect_vars(out);
                }
            }
            Formula::Dec(v, _) => {
                out.insert(v.clone());
            }
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            _ => {}
        }
    }

    /// Substitute terms for variables.  A declaration `dec(v, t)` whose
    /// variable is substituted by another variable is renamed; if it is
    /// substituted by a non-variable term the declaration is dropped
    /// (its information is carried by the substitution's own typing).
    pub fn substitute(&self, map: &BTreeMap<String, Term>) -> Formula {
        match self {
            Formula::Atom(c) => Formula::Atom(c.substitute(map)),
            Formula::Dec(v, t) => match map.get(v) {
                None => self.clone(),
                Some(Term::Var(w)) => Formula::Dec(w.clone(), t.clone()),
                Some(_) => Formula::True,
            },
            Formula::And(a, b) => Formula::and(a.substitute(map), b.substitute(map)),
            Formula::Or(a, b) => Formula::or(a.substitute(map), b.substitute(map)),
            f => f.clone(),
        }
    }

    /// Convert to disjunctive normal form: a list of disjuncts, each a
    /// list of atomic formulas (constraints and declarations).  `true`
    /// units are dropped; a `false` unit kills its disjunct.
    pub fn dnf(&self) -> Vec<Vec<Formula>> {
        fn go(f: &Formula) -> Vec<Vec<Formula>> {
            match f {
                Formula::True => vec![vec![]],
                Formula::False => vec![],
                Formula::Atom(_) | Formula::Dec(_, _) => vec![vec![f.clone()]],
                Formula::Or(a, b) => {
                    let mut out = go(a);
                    out.extend(go(b));
                    out
                }
                Formula::And(a, b) => {
                    let left = go(a);
                    let right = go(b);
                    let mut out = Vec::with_capacity(left.len() * right.len());
                    for l in &left {
                        for r in &right {
                            let mut d = l.clone();
                            d.extend(r.iter().cloned());
                            out.push(d);
                        }
                    }
                    out
                }
            }
        }
        go(self)
    }

    /// Rebuild a formula from its DNF.
    pub fn from_dnf(dnf: &[Vec<Formula>]) -> Formula {
        Formula::disj(dnf.iter().map(|d| Formula::conj(d.iter().cloned())))
    }

    /// DNF conversion as a formula-to-formula operation.
    pub fn to_dnf(&self) -> Formula {
        Formula::from_dnf(&self.dnf())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // `&` binds tighter than `or`; parenthesise an `or` child of an
        // `and`, and any child on the right of its own level to keep the
        // rendered tree exactly re-parseable (both operators associate
        // to the left in the parser).
        fn prec(f: &Formula) -> u8 {
            match f {
                Formula::Or(_, _) => 1,
                Formula::And(_, _) => 2,
                _ => 3,
            }
        }
        fn write(f: &Formula, out: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
            let p = prec(f);
            if p < min {
                out.write_str("(")?;
            }
            match f {
                Formula::True => out.write_str("true")?,
                Formula::False => out.write_str("false")?,
                Formula::Atom(c) => write!(out, "{c}")?,
                Formula::Dec(v, t) => write!(out, "dec({v},{t})")?,
                Formula::And(a, b) => {
                    write(a, out, 2)?;
                    out.write_str(" & ")?;
                    write(b, out, 3)?;
                }
                Formula::Or(a, b) => {
                    write(a, out, 1)?;
                    out.write_str(" or ")?;
                    write(b, out, 2)?;
                }
            }
            if p < min {
                out.write_str(")")?;
            }
            Ok(())
        }
        write(self, f, 0)
    }
}

/// A program clause `head(X1,..,Xn) :- body.` with a linear head: the
/// head arguments are pairwise distinct variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub name: String,
    pub params: Vec<String>,
    pub body: Formula,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")?;
        if self.body != Formula::True {
            write!(f, " :- {}", self.body)?;
        }
        write!(f, ".")
    }
}

/// Kind of a typing directive: monomorphic or polymorphic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectiveKind {
    /// `dec_p_type`: all types ground.
    Mono,
    /// `dec_pp_type`: type variables admitted.
    Poly,
}

/// A typing directive `:- dec_p_type(name(t1,..,tn)).` or its
/// polymorphic counterpart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Directive {
    pub kind: DirectiveKind,
    pub name: String,
    pub types: Vec<Type>,
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kw = match self.kind {
            DirectiveKind::Mono => "dec_p_type",
            DirectiveKind::Poly => "dec_pp_type",
        };
        write!(f, ":- {kw}({}(", self.name)?;
        for (i, t) in self.types.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, ")).")
    }
}

/// One item of a consulted program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProgramItem {
    Directive(Directive),
    Clause(Clause),
}

/// Fresh-variable generator.
///
/// Generated names have the shape `hint_k` for a monotonically increasing
/// counter `k` shared across hints.  Registering a parsed name of the
/// shape `base_k` bumps the counter past `k`, so a fresh name never
/// collides with anything seen in the input.
#[derive(Debug, Clone, Default)]
pub struct VarGen {
    counter: u64,
    used: BTreeSet<String>,
    generated: BTreeSet<String>,
}

impl VarGen {
    pub fn new() -> VarGen {
        VarGen::default()
    }

    /// Record a variable name seen in parsed input.
    pub fn register(&mut self, name: &str) {
        if let Some((_, suffix)) = name.rsplit_once('_') {
            if let Ok(k) = suffix.parse::<u64>() {
                self.counter = self.counter.max(k);
            }
        }
        self.used.insert(name.to_string());
    }

    /// Was this exact name produced by `fresh` in this session?
    pub fn is_generated(&self, name: &str) -> bool {
        self.generated.contains(name)
    }

    /// Produce a fresh variable name based on `hint`.
    pub fn fresh(&mut self, hint: &str) -> String {
        loop {
            self.counter += 1;
            let name = format!("{hint}_{}", self.counter);
            if !self.used.contains(&name) {
                self.used.insert(name.clone());
                self.generated.insert(name.clone());
                return name;
            }
        }
    }

    /// Fresh variable as a term.
    pub fn fresh_var(&mut self, hint: &str) -> Term {
        Term::Var(self.fresh(hint))
    }
}
