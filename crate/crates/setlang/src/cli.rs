//! Command-line front end: batch solving and an interactive REPL.
//!
//! Exit codes: 0 satisfiable, 1 unsatisfiable, 2 type error, 3 budget
//! exhausted, 64 usage error.

use std::io::{BufRead, Write};

use clap::Parser;

use crate::ast::Term;
use crate::engine::{EngineError, Options, QueryResult, Session, Status};
use crate::oracle::{self, DomainBound};
use crate::solver::Answer;
use crate::typecheck;

pub const EXIT_SAT: i32 = 0;
pub const EXIT_UNSAT: i32 = 1;
pub const EXIT_TYPE_ERROR: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "setlang",
    about = "Typed constraint solving over hereditarily finite sets and binary relations",
    disable_help_flag = false
)]
pub struct Args {
    /// Enable or disable the typechecker (on|off).
    #[arg(
        long,
        value_parser = parse_on_off,
        action = clap::ArgAction::Set,
        value_name = "on|off",
        default_value = "on"
    )]
    pub typecheck: bool,

    /// Consult a source file before solving (repeatable).
    #[arg(long)]
    pub consult: Vec<String>,

    /// Solve one formula and exit; without it, start the REPL.
    #[arg(long)]
    pub solve: Option<String>,

    /// Maximum number of answers to produce.
    #[arg(long, default_value_t = 1)]
    pub max_answers: usize,

    /// Rewriting step budget.
    #[arg(long, default_value_t = crate::solver::DEFAULT_STEP_BUDGET)]
    pub step_budget: u64,

    /// Confine int-declared query variables to LO..HI.
    #[arg(long, value_parser = parse_range)]
    pub int_bound: Option<(i64, i64)>,

    /// Cross-check answers against the bounded-domain oracle.
    #[arg(long)]
    pub oracle_check: bool,

    /// Oracle domain bound, e.g. "atoms=3,ints=-2..2,card=3".
    #[arg(long)]
    pub oracle_bound: Option<String>,
}

fn parse_on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(format!("expected 'on' or 'off', got {other:?}")),
    }
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected LO..HI, got {s:?}"))?;
    let lo: i64 = lo.parse().map_err(|_| format!("bad bound {lo:?}"))?;
    let hi: i64 = hi.parse().map_err(|_| format!("bad bound {hi:?}"))?;
    if lo > hi {
        return Err(format!("empty range {s:?}"));
    }
    Ok((lo, hi))
}

/// Render one answer in the external format: `Var = term` lines for the
/// query's variables, then a `Constraint:` line for the residue.
/// An answer with nothing to report renders as `yes`.
pub fn render_answer(a: &Answer, query_vars: &std::collections::BTreeSet<String>) -> String {
    let mut lines: Vec<String> = Vec::new();
    for (v, t) in &a.bindings {
        if query_vars.contains(v) && a.bindings.get(v) != Some(&Term::var(v)) {
            lines.push(format!("{v} = {t}"));
        }
    }
    let mut out = lines.join(",\n");
    if !a.residue.is_empty() {
        let cs = a
            .residue
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&format!("Constraint: {cs}"));
    }
    if out.is_empty() {
        "yes".to_string()
    } else {
        out
    }
}

/// Render a whole result: answers separated by `;`, or `no`.
pub fn render_result(r: &QueryResult) -> String {
    match r.status() {
        Status::Unsat => "no".to_string(),
        Status::Budget if r.outcome.answers.is_empty() => {
            "no (step budget exhausted; satisfiability unknown)".to_string()
        }
        _ => {
            let mut out = String::new();
            for (i, a) in r.outcome.answers.iter().enumerate() {
                if i > 0 {
                    out.push_str(";\n");
                }
                out.push_str(&render_answer(a, &r.query_vars));
            }
            out
        }
    }
}

fn exit_code(r: &QueryResult) -> i32 {
    match r.status() {
        Status::Sat => EXIT_SAT,
        Status::Unsat => EXIT_UNSAT,
        Status::Budget => EXIT_BUDGET,
    }
}

fn error_code(e: &EngineError) -> i32 {
    match e {
        EngineError::Type(_) => EXIT_TYPE_ERROR,
        EngineError::ConsultBatch { errors } => errors
            .iter()
            .map(error_code)
            .max()
            .unwrap_or(EXIT_USAGE),
        _ => EXIT_USAGE,
    }
}

fn oracle_report(sess: &Session, src: &str, r: &QueryResult, bound: &DomainBound) -> String {
    // The oracle needs types; recover them from the query text.
    let f = match crate::parser::parse_formula(src) {
        Ok(f) => f,
        Err(e) => return format!("oracle: cannot reparse query: {e}"),
    };
    let mut schemes = sess.derived.schemes();
    for (name, tys) in sess.store.schemes() {
        schemes.insert(name, tys);
    }
    let ctx = match typecheck::check_formula(&f, &schemes) {
        Ok(ctx) => ctx,
        Err(e) => return format!("oracle: query does not typecheck, no ground truth: {e}"),
    };
    let rep = oracle::agree(&f, &ctx, &schemes, bound, &r.outcome.answers);
    if rep.ok() {
        "oracle agrees".to_string()
    } else {
        format!("oracle disagrees:\n{rep}")
    }
}

fn session_from(args: &Args) -> Result<Session, (i32, String)> {
    let mut sess = Session::new();
    sess.set_typecheck(args.typecheck);
    sess.opts = Options {
        max_answers: Some(args.max_answers),
        step_budget: args.step_budget,
        int_bound: args.int_bound,
    };
    for path in &args.consult {
        if let Err(e) = sess.consult_file(path) {
            return Err((error_code(&e), format!("{e}")));
        }
    }
    Ok(sess)
}

/// Run one formula in batch mode.
pub fn batch(args: &Args, out: &mut dyn Write) -> i32 {
    let src = args.solve.as_deref().unwrap_or("true.");
    let mut sess = match session_from(args) {
        Ok(s) => s,
        Err((code, msg)) => {
            let _ = writeln!(out, "{msg}");
            return code;
        }
    };
    match sess.query(src) {
        Ok(r) => {
            let _ = writeln!(out, "{}", render_result(&r));
            if args.oracle_check {
                let bound = match &args.oracle_bound {
                    Some(spec) => match DomainBound::parse(spec) {
                        Ok(b) => b,
                        Err(e) => {
                            let _ = writeln!(out, "{e}");
                            return EXIT_USAGE;
                        }
                    },
                    None => DomainBound::default(),
                };
                let _ = writeln!(out, "{}", oracle_report(&sess, src, &r, &bound));
            }
            exit_code(&r)
        }
        Err(e) => {
            let _ = writeln!(out, "{e}");
            error_code(&e)
        }
    }
}

/// The interactive loop.  Statements end with `.`; `:quit.` leaves.
pub fn repl(args: &Args, input: &mut dyn BufRead, out: &mut dyn Write) -> i32 {
    let mut sess = match session_from(args) {
        Ok(s) => s,
        Err((code, msg)) => {
            let _ = writeln!(out, "{msg}");
            return code;
        }
    };
    let bound = match &args.oracle_bound {
        Some(spec) => match DomainBound::parse(spec) {
            Ok(b) => b,
            Err(e) => {
                let _ = writeln!(out, "{e}");
                return EXIT_USAGE;
            }
        },
        None => DomainBound::default(),
    };
    let mut buf = String::new();
    loop {
        let _ = write!(out, "{}", if buf.is_empty() { "> " } else { "| " });
        let _ = out.flush();
        let mut line = String::new();
        match input.read_line(&mut line) {
            Ok(0) => return EXIT_SAT,
            Ok(_) => {}
            Err(_) => return EXIT_SAT,
        }
        buf.push_str(&line);
        let stmt = buf.trim();
        if !stmt.ends_with('.') {
            continue;
        }
        let stmt = stmt.to_string();
        buf.clear();
        if let Some(rest) = stmt.strip_prefix(':') {
            let rest = rest.trim_end_matches('.').trim();
            match rest.split_once(char::is_whitespace) {
                _ if rest == "quit" => return EXIT_SAT,
                Some(("consult", path)) => {
                    match sess.consult_file(path.trim()) {
                        Ok(()) => {
                            let _ = writeln!(out, "consulted {}", path.trim());
                        }
                        Err(e) => {
                            let _ = writeln!(out, "{e}");
                        }
                    }
                }
                Some(("typecheck", mode)) => match parse_on_off(mode.trim()) {
                    Ok(on) => sess.set_typecheck(on),
                    Err(e) => {
                        let _ = writeln!(out, "{e}");
                    }
                },
                _ => {
                    let _ = writeln!(out, "unknown command :{rest}");
                }
            }
            continue;
        }
        match sess.query(&stmt) {
            Ok(r) => {
                let _ = writeln!(out, "{}", render_result(&r));
                if args.oracle_check {
                    let _ = writeln!(out, "{}", oracle_report(&sess, &stmt, &r, &bound));
                }
            }
            Err(e) => {
                let _ = writeln!(out, "{e}");
            }
        }
    }
}

/// Program entry point; returns the process exit code.
pub fn run() -> i32 {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            // clap handles --help/--version with success exit codes.
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_SAT };
        }
    };
    if args.solve.is_some() {
        batch(&args, &mut std::io::stdout())
    } else {
        let stdin = std::io::stdin();
        repl(&args, &mut stdin.lock(), &mut std::io::stdout())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn run_batch(argv: &[&str]) -> (i32, String) {
        let args = Args::try_parse_from(
            std::iter::once("setlang").chain(argv.iter().copied()),
        )
        .unwrap();
        let mut out = Vec::new();
        let code = batch(&args, &mut out);
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_batch(&["--solve", "true."]).0, EXIT_SAT);
        assert_eq!(run_batch(&["--solve", "1 = 2."]).0, EXIT_UNSAT);
        let (code, out) = run_batch(&[
            "--solve",
            "dec(R, rel(u,u)) & dec(A, set(u)) & id(R, A).",
        ]);
        assert_eq!(code, EXIT_TYPE_ERROR);
        assert!(out.contains("type error in id(R,A)"), "{out}");
        let (code, _) = run_batch(&[
            "--typecheck",
            "off",
            "--step-budget",
            "2000",
            "--solve",
            "id({X/A}, R) & id(R, A).",
        ]);
        assert_eq!(code, EXIT_BUDGET);
    }

    #[test]
    fn answer_rendering() {
        let (code, out) = run_batch(&[
            "--typecheck",
            "off",
            "--solve",
            "un({a,1,{2},(5,b)}, {X}, {Y/B}).",
        ]);
        assert_eq!(code, EXIT_SAT);
        assert!(out.contains("Y = a"), "{out}");
        assert!(out.contains("B = {1,{2},(5,b),X}"), "{out}");
        assert!(out.contains("Constraint: X neq a"), "{out}");
    }

    #[test]
    fn yes_and_no() {
        let (code, out) = run_batch(&["--typecheck", "off", "--solve", "{1} = {1,1}."]);
        assert_eq!(code, EXIT_SAT);
        assert_eq!(out.trim(), "yes");
        let (_, out) = run_batch(&["--typecheck", "off", "--solve", "1 in {}."]);
        assert_eq!(out.trim(), "no");
    }

    #[test]
    fn multiple_answers_are_separated() {
        let (_, out) = run_batch(&[
            "--max-answers",
            "3",
            "--solve",
            "dec(X, int) & X in {1,2,3}.",
        ]);
        assert_eq!(out.matches(';').count(), 2, "{out}");
    }

    #[test]
    fn usage_errors() {
        assert!(Args::try_parse_from(["setlang", "--typecheck", "maybe"]).is_err());
        assert!(Args::try_parse_from(["setlang", "--int-bound", "5..1"]).is_err());
        let (code, _) = run_batch(&["--solve", "X = ."]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn oracle_check_in_batch() {
        let (code, out) = run_batch(&[
            "--oracle-check",
            "--max-answers",
            "10",
            "--solve",
            "dec(X, int) & X in {0,1} & X neq 0.",
        ]);
        assert_eq!(code, EXIT_SAT);
        assert!(out.contains("oracle agrees"), "{out}");
    }

    #[test]
    fn repl_session() {
        let args = Args::try_parse_from(["setlang", "--typecheck", "off"]).unwrap();
        let script = "{1} = {1,1}.\n:typecheck on.\ndec(X, int) & X = {}.\n:quit.\n";
        let mut out = Vec::new();
        let code = repl(&args, &mut Cursor::new(script), &mut out);
        assert_eq!(code, EXIT_SAT);
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("yes"), "{text}");
        assert!(text.contains("type error"), "{text}");
    }

    #[test]
    fn repl_consult() {
        let dir = std::env::temp_dir().join("setlang-cli-test");
        std::fs::create_dir_all(&dir).unwrap();
        let file = dir.join("double.slog");
        std::fs::write(
            &file,
            ":- dec_p_type(double(int, int)).\ndouble(N, M) :- M = N + N.\n",
        )
        .unwrap();
        let args = Args::try_parse_from(["setlang"]).unwrap();
        let script = format!(
            ":consult {}.\ndec(M, int) & double(4, M).\n:quit.\n",
            file.display()
        );
        let mut out = Vec::new();
        let code = repl(&args, &mut Cursor::new(script.as_str()), &mut out);
        assert_eq!(code, EXIT_SAT);
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("M = 8"), "{text}");
    }
}
