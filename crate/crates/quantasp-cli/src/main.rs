//! Command-line front end. Exit codes: `solve` reports 10 for COHERENT,
//! 20 for INCOHERENT, and 30 for UNKNOWN; usage errors exit 2; file and
//! engine errors exit 1; `check` exits 0 exactly when every encoding agrees
//! with the brute-force semantics.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use quantasp_backend::eval::{eval_circuit, eval_prenex, DEFAULT_EVAL_VAR_LIMIT};
use quantasp_backend::qcir::emit_qcir;
use quantasp_backend::qdimacs::{emit_qdimacs, prenex_cnf};
use quantasp_backend::solver::{
    load_solver_config, run_external, Formula, SolveResult,
};
use quantasp_cli::features::extract_features;
use quantasp_cli::select::{default_table, select_backend, SelectionTable};
use quantasp_cli::{compile_formula, CompiledFormula, Encoding};
use quantasp_core::gc::{gc_chain, is_guess_check};
use quantasp_core::model::Truth;
use quantasp_core::oracle::{self, OracleLimits};
use quantasp_core::qbf::{base_circuit, direct_cnf, omit_trivial_circuit, wf_circuit, wf_levels};
use quantasp_core::textio::{parse, render_rule};
use quantasp_core::{QuantifiedProgram, Quantifier};

#[derive(Parser)]
#[command(name = "quantasp", version, about = "Compile and solve quantified answer set programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, ValueEnum)]
enum EncodingArg {
    Base,
    Wf,
    #[value(name = "wf+gc")]
    WfGc,
}

impl From<EncodingArg> for Encoding {
    fn from(arg: EncodingArg) -> Self {
        match arg {
            EncodingArg::Base => Encoding::Base,
            EncodingArg::Wf => Encoding::WellFounded,
            EncodingArg::WfGc => Encoding::WellFoundedGc,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, ValueEnum)]
enum FormatArg {
    Qcir,
    Qdimacs,
}

#[derive(Subcommand)]
enum Command {
    /// Translate a program into a QBF and write it out.
    Compile {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = EncodingArg::Wf)]
        encoding: EncodingArg,
        #[arg(long, value_enum, default_value_t = FormatArg::Qcir)]
        format: FormatArg,
        /// Output path; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Disable Guess&Check rewriting under `wf+gc`.
        #[arg(long)]
        no_gc: bool,
    },
    /// Decide coherence and exit 10 (coherent), 20 (incoherent), or 30.
    Solve {
        input: PathBuf,
        /// `internal`, `auto`, or a solver name from the config.
        #[arg(long, default_value = "internal")]
        backend: String,
        #[arg(long, value_enum, default_value_t = EncodingArg::Wf)]
        encoding: EncodingArg,
        #[arg(long)]
        no_gc: bool,
        /// Variable cap for the internal evaluator.
        #[arg(long, default_value_t = DEFAULT_EVAL_VAR_LIMIT)]
        eval_limit: usize,
        /// Selection table for `--backend auto`; built-in table when absent.
        #[arg(long)]
        selection: Option<PathBuf>,
    },
    /// Evaluate every encoding against the brute-force semantics.
    Check {
        input: PathBuf,
        #[arg(long, default_value_t = 48)]
        eval_limit: usize,
        #[arg(long, default_value_t = 1 << 20)]
        oracle_steps: u64,
    },
    /// Print the well-founded model and residual of every level.
    Wf { input: PathBuf },
    /// Print the syntactic feature vector.
    Features {
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn file(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { code: 1, message: e.to_string() }
    }
}

fn load_program(path: &PathBuf) -> Result<QuantifiedProgram, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::file(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| Failure::file(format!("{}:{e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("quantasp: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Compile { input, encoding, format, output, no_gc } => {
            let qp = load_program(&input)?;
            let compiled = compile_formula(&qp, encoding.into(), no_gc)?;
            for warning in &compiled.warnings {
                eprintln!("quantasp: warning: {warning}");
            }
            if let Some(report) = &compiled.report {
                if let Some(level) = report.pruned_at {
                    eprintln!("pruned_at={level}");
                }
                if let Some(value) = report.constant_result {
                    eprintln!("constant={}", if value { "TRUE" } else { "FALSE" });
                }
            }
            let text = match format {
                FormatArg::Qcir => match &compiled.formula {
                    Formula::Circuit(c) => emit_qcir(c),
                    Formula::Prenex(p) => emit_qcir(&quantasp_backend::prenex_to_circuit(p)),
                },
                FormatArg::Qdimacs => match &compiled.formula {
                    Formula::Circuit(c) => emit_qdimacs(&prenex_cnf(c)),
                    Formula::Prenex(p) => emit_qdimacs(p),
                },
            };
            match output {
                Some(path) => fs::write(&path, text)
                    .map_err(|e| Failure::file(format!("{}: {e}", path.display())))?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Solve { input, backend, encoding, no_gc, eval_limit, selection } => {
            let qp = load_program(&input)?;
            let compiled = compile_formula(&qp, encoding.into(), no_gc)?;
            for warning in &compiled.warnings {
                eprintln!("quantasp: warning: {warning}");
            }
            let result = solve(&qp, &compiled, &backend, eval_limit, selection.as_ref())?;
            match result {
                SolveResult::Sat => {
                    println!("COHERENT");
                    Ok(10)
                }
                SolveResult::Unsat => {
                    println!("INCOHERENT");
                    Ok(20)
                }
                SolveResult::Unknown => {
                    println!("UNKNOWN");
                    Ok(30)
                }
            }
        }
        Command::Check { input, eval_limit, oracle_steps } => check(&input, eval_limit, oracle_steps),
        Command::Wf { input } => {
            let qp = load_program(&input)?;
            let levels = wf_levels(&qp)?;
            let n = qp.level_count();
            for entry in levels {
                let kind = if entry.level == n + 1 {
                    "constraint".to_string()
                } else {
                    match qp.quantifier(entry.level) {
                        Quantifier::Exists => "exists".to_string(),
                        Quantifier::Forall => "forall".to_string(),
                    }
                };
                println!("level {} ({kind})", entry.level);
                let mut decided = Vec::new();
                for &atom in entry.model.base() {
                    match entry.model.truth(atom) {
                        Truth::True => decided.push(entry.residual.symbols.name(atom).to_string()),
                        Truth::False => {
                            decided.push(format!("not {}", entry.residual.symbols.name(atom)))
                        }
                        Truth::Undef => {}
                    }
                }
                if decided.is_empty() {
                    println!("  W = {{ }}");
                } else {
                    println!("  W = {{ {} }}", decided.join(", "));
                }
                println!("  residual:");
                for rule in &entry.residual.rules {
                    println!("    {}", render_rule(rule, &entry.residual.symbols));
                }
            }
            Ok(0)
        }
        Command::Features { input, json } => {
            let qp = load_program(&input)?;
            let features = extract_features(&qp);
            if json {
                println!("{}", features.to_json());
            } else {
                let value: serde_json::Value =
                    serde_json::from_str(&features.to_json()).expect("features serialize");
                for (key, val) in value.as_object().expect("object") {
                    println!("{key} = {val}");
                }
            }
            Ok(0)
        }
    }
}

fn solve(
    qp: &QuantifiedProgram,
    compiled: &CompiledFormula,
    backend: &str,
    eval_limit: usize,
    selection: Option<&PathBuf>,
) -> Result<SolveResult, Failure> {
    // a pruned-to-constant build decides the instance at encoding time
    if let Some(report) = &compiled.report {
        if let Some(value) = report.constant_result {
            return Ok(if value { SolveResult::Sat } else { SolveResult::Unsat });
        }
    }
    match backend {
        "internal" => {
            let verdict = match &compiled.formula {
                Formula::Circuit(c) => eval_circuit(c, eval_limit),
                Formula::Prenex(p) => eval_prenex(p, eval_limit),
            };
            match verdict {
                Ok(true) => Ok(SolveResult::Sat),
                Ok(false) => Ok(SolveResult::Unsat),
                Err(e) => {
                    eprintln!("quantasp: internal evaluation unavailable: {e}");
                    Ok(SolveResult::Unknown)
                }
            }
        }
        name => {
            let config = load_solver_config()?;
            let solver_name = if name == "auto" {
                let table = match selection {
                    Some(path) => {
                        let text = fs::read_to_string(path)
                            .map_err(|e| Failure::file(format!("{}: {e}", path.display())))?;
                        SelectionTable::from_json(&text)?
                    }
                    None => default_table(),
                };
                let chosen = select_backend(&extract_features(qp), &table)?;
                eprintln!("quantasp: selected back-end `{chosen}`");
                chosen
            } else {
                name.to_string()
            };
            let spec = config.find(&solver_name).ok_or_else(|| {
                Failure::file(format!("solver `{solver_name}` not present in the config"))
            })?;
            let outcome = run_external(spec, &compiled.formula)?;
            if let Some(diagnostic) = &outcome.diagnostic {
                eprintln!("quantasp: {}: {diagnostic}", outcome.backend);
            }
            Ok(outcome.result)
        }
    }
}

fn check(input: &PathBuf, eval_limit: usize, oracle_steps: u64) -> Result<u8, Failure> {
    let qp = load_program(input)?;
    let limits = OracleLimits { max_base_atoms: 22, max_steps: oracle_steps };
    let expected = oracle::coherence(&qp, &limits)?;
    let verdict = |name: &str, got: bool| {
        let agrees = got == expected;
        println!(
            "{name:<8} {} ({})",
            if got { "COHERENT" } else { "INCOHERENT" },
            if agrees { "agrees" } else { "MISMATCH" }
        );
        agrees
    };
    println!("oracle   {}", if expected { "COHERENT" } else { "INCOHERENT" });

    let mut all_agree = true;
    all_agree &= verdict("base", eval_circuit(&base_circuit(&qp)?, eval_limit)?);
    all_agree &= verdict("wf", eval_circuit(&wf_circuit(&qp)?.circuit, eval_limit)?);
    all_agree &= verdict("trivial", eval_circuit(&omit_trivial_circuit(&qp)?, eval_limit)?);
    if is_guess_check(&qp).is_ok() {
        let chained = gc_chain(&qp)?;
        all_agree &= verdict("direct", eval_prenex(&direct_cnf(&chained)?, eval_limit)?);
    }
    Ok(if all_agree { 0 } else { 1 })
}
