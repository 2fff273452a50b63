//! A typed constraint language over hereditarily finite sets and binary
//! relations, with a rewriting constraint solver, a prescriptive
//! typechecker, a small CLP engine above the solver, and a brute-force
//! bounded-domain oracle used for cross-validation.

pub mod ast;
pub mod parser;
pub mod typecheck;
pub mod derived;
pub mod solver;
pub mod engine;
pub mod oracle;
pub mod gen;
pub mod cli;
