//! External QBF solver adapters: per-solver command templates with exit-code
//! result mapping, wall-clock timeouts, and a first-winner portfolio runner.

use std::fmt;
use std::io::Write;
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use quantasp_core::qbf::{PrenexCnf, QbfCircuit};

use crate::qcir::emit_qcir;
use crate::qdimacs::{emit_qdimacs, prenex_cnf};

#[derive(Copy, Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Qcir,
    Qdimacs,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolverSpec {
    pub name: String,
    /// Command template; `{input}` is replaced by the formula path.
    pub command: String,
    pub format: InputFormat,
    #[serde(default = "default_sat_exit")]
    pub sat_exit: Vec<i32>,
    #[serde(default = "default_unsat_exit")]
    pub unsat_exit: Vec<i32>,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
}

fn default_sat_exit() -> Vec<i32> {
    vec![10]
}

fn default_unsat_exit() -> Vec<i32> {
    vec![20]
}

fn default_timeout() -> f64 {
    800.0
}

impl SolverSpec {
    pub fn validate(&self) -> Result<(), SolverError> {
        let placeholders = self.command.matches("{input}").count();
        if placeholders != 1 {
            return Err(SolverError::BadTemplate {
                name: self.name.clone(),
                placeholders,
            });
        }
        if self.sat_exit.iter().any(|c| self.unsat_exit.contains(c)) {
            return Err(SolverError::OverlappingExitCodes { name: self.name.clone() });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolverConfig {
    pub solvers: Vec<SolverSpec>,
}

impl SolverConfig {
    pub fn from_json(text: &str) -> Result<Self, SolverError> {
        let config: SolverConfig =
            serde_json::from_str(text).map_err(|e| SolverError::Config(e.to_string()))?;
        for spec in &config.solvers {
            spec.validate()?;
        }
        Ok(config)
    }

    pub fn find(&self, name: &str) -> Option<&SolverSpec> {
        self.solvers.iter().find(|s| s.name == name)
    }
}

/// Environment variable overriding the solver config path.
pub const SOLVERS_ENV: &str = "QUANTASP_SOLVERS";
pub const DEFAULT_SOLVERS_PATH: &str = "quantasp-solvers.json";

pub fn load_solver_config() -> Result<SolverConfig, SolverError> {
    let path =
        std::env::var(SOLVERS_ENV).unwrap_or_else(|_| DEFAULT_SOLVERS_PATH.to_string());
    let text = std::fs::read_to_string(&path)
        .map_err(|e| SolverError::Config(format!("cannot read {path}: {e}")))?;
    SolverConfig::from_json(&text)
}

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum SolveResult {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub result: SolveResult,
    pub backend: String,
    pub wall_time: Duration,
    /// Present exactly when the result is unknown.
    pub diagnostic: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolverError {
    BadTemplate { name: String, placeholders: usize },
    OverlappingExitCodes { name: String },
    Config(String),
    Io(String),
    /// Two portfolio members returned conclusive, contradictory results;
    /// that signals an encoding bug, not a solver hiccup.
    Disagreement { sat: String, unsat: String },
    EmptyPortfolio,
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::BadTemplate { name, placeholders } => write!(
                f,
                "solver `{name}`: command template must contain `{{input}}` exactly once (found {placeholders})"
            ),
            SolverError::OverlappingExitCodes { name } => {
                write!(f, "solver `{name}`: sat and unsat exit codes overlap")
            }
            SolverError::Config(msg) => write!(f, "solver config: {msg}"),
            SolverError::Io(msg) => write!(f, "solver io: {msg}"),
            SolverError::Disagreement { sat, unsat } => write!(
                f,
                "portfolio disagreement: `{sat}` reported SAT while `{unsat}` reported UNSAT"
            ),
            SolverError::EmptyPortfolio => write!(f, "portfolio has no solvers"),
        }
    }
}

impl std::error::Error for SolverError {}

/// A formula in whichever shape the pipeline produced; rendered to the
/// format each solver expects.
#[derive(Clone, Debug)]
pub enum Formula {
    Circuit(QbfCircuit),
    Prenex(PrenexCnf),
}

impl Formula {
    pub fn render(&self, format: InputFormat) -> String {
        match (self, format) {
            (Formula::Circuit(c), InputFormat::Qcir) => emit_qcir(c),
            (Formula::Circuit(c), InputFormat::Qdimacs) => emit_qdimacs(&prenex_cnf(c)),
            (Formula::Prenex(p), InputFormat::Qdimacs) => emit_qdimacs(p),
            (Formula::Prenex(p), InputFormat::Qcir) => emit_qcir(&crate::prenex_to_circuit(p)),
        }
    }

    pub fn file_extension(format: InputFormat) -> &'static str {
        match format {
            InputFormat::Qcir => "qcir",
            InputFormat::Qdimacs => "qdimacs",
        }
    }
}

/// Run one external solver: write the formula to a temp file, launch the
/// command, map the exit code, and kill the process on timeout.
pub fn run_external(spec: &SolverSpec, formula: &Formula) -> Result<SolveOutcome, SolverError> {
    spec.validate()?;
    let cancel = Arc::new(AtomicBool::new(false));
    run_with_cancel(spec, formula, &cancel)
}

fn run_with_cancel(
    spec: &SolverSpec,
    formula: &Formula,
    cancel: &AtomicBool,
) -> Result<SolveOutcome, SolverError> {
    let start = Instant::now();
    let mut file = tempfile::Builder::new()
        .prefix("quantasp-")
        .suffix(&format!(".{}", Formula::file_extension(spec.format)))
        .tempfile()
        .map_err(|e| SolverError::Io(e.to_string()))?;
    file.write_all(formula.render(spec.format).as_bytes())
        .map_err(|e| SolverError::Io(e.to_string()))?;
    file.flush().map_err(|e| SolverError::Io(e.to_string()))?;
    let input_path = file.path().to_string_lossy().into_owned();

    let argv: Vec<String> = spec
        .command
        .split_whitespace()
        .map(|token| token.replace("{input}", &input_path))
        .collect();
    if argv.is_empty() {
        return Err(SolverError::BadTemplate { name: spec.name.clone(), placeholders: 1 });
    }
    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| SolverError::Io(format!("cannot spawn `{}`: {e}", argv[0])))?;

    let timeout = Duration::from_secs_f64(spec.timeout_s);
    let status = wait_with_deadline(&mut child, start, timeout, cancel);
    let wall_time = start.elapsed();
    let outcome = match status {
        WaitOutcome::Exited(code) => {
            if spec.sat_exit.contains(&code) {
                SolveOutcome {
                    result: SolveResult::Sat,
                    backend: spec.name.clone(),
                    wall_time,
                    diagnostic: None,
                }
            } else if spec.unsat_exit.contains(&code) {
                SolveOutcome {
                    result: SolveResult::Unsat,
                    backend: spec.name.clone(),
                    wall_time,
                    diagnostic: None,
                }
            } else {
                SolveOutcome {
                    result: SolveResult::Unknown,
                    backend: spec.name.clone(),
                    wall_time,
                    diagnostic: Some(format!("unmapped exit code {code}")),
                }
            }
        }
        WaitOutcome::TimedOut => SolveOutcome {
            result: SolveResult::Unknown,
            backend: spec.name.clone(),
            wall_time,
            diagnostic: Some(format!("timeout after {:.1}s", spec.timeout_s)),
        },
        WaitOutcome::Cancelled => SolveOutcome {
            result: SolveResult::Unknown,
            backend: spec.name.clone(),
            wall_time,
            diagnostic: Some("terminated by portfolio".to_string()),
        },
        WaitOutcome::NoCode => SolveOutcome {
            result: SolveResult::Unknown,
            backend: spec.name.clone(),
            wall_time,
            diagnostic: Some("process killed by signal".to_string()),
        },
    };
    Ok(outcome)
}

enum WaitOutcome {
    Exited(i32),
    TimedOut,
    Cancelled,
    NoCode,
}

fn wait_with_deadline(
    child: &mut Child,
    start: Instant,
    timeout: Duration,
    cancel: &AtomicBool,
) -> WaitOutcome {
    // a cancelled child gets a short grace window so a result that already
    // arrived is reported rather than discarded
    let mut cancelled_at: Option<Instant> = None;
    loop {
        match child.try_wait() {
            Ok(Some(status)) => {
                return match status.code() {
                    Some(code) => WaitOutcome::Exited(code),
                    None => WaitOutcome::NoCode,
                };
            }
            Ok(None) => {}
            Err(_) => return WaitOutcome::NoCode,
        }
        if cancel.load(Ordering::Relaxed) {
            let since = cancelled_at.get_or_insert_with(Instant::now);
            if since.elapsed() >= Duration::from_millis(50) {
                let _ = child.kill();
                let _ = child.wait();
                return WaitOutcome::Cancelled;
            }
        }
        if start.elapsed() >= timeout {
            let _ = child.kill();
            let _ = child.wait();
            return WaitOutcome::TimedOut;
        }
        thread::sleep(Duration::from_millis(5));
    }
}

/// Launch every solver concurrently and return the first conclusive result,
/// terminating the rest. Conclusive results that disagree are a hard error.
pub fn run_portfolio(
    specs: &[SolverSpec],
    formula: &Formula,
) -> Result<SolveOutcome, SolverError> {
    if specs.is_empty() {
        return Err(SolverError::EmptyPortfolio);
    }
    for spec in specs {
        spec.validate()?;
    }
    let cancel = Arc::new(AtomicBool::new(false));
    let (sender, receiver) = mpsc::channel::<Result<SolveOutcome, SolverError>>();
    let mut handles = Vec::with_capacity(specs.len());
    for spec in specs {
        let sender = sender.clone();
        let cancel = Arc::clone(&cancel);
        let spec = spec.clone();
        let formula = formula.clone();
        handles.push(thread::spawn(move || {
            let outcome = run_with_cancel(&spec, &formula, &cancel);
            let _ = sender.send(outcome);
        }));
    }
    drop(sender);

    let mut winner: Option<SolveOutcome> = None;
    let mut last_unknown: Option<SolveOutcome> = None;
    let mut error: Option<SolverError> = None;
    for received in receiver.iter() {
        match received {
            Ok(outcome) => match outcome.result {
                SolveResult::Sat | SolveResult::Unsat => match &winner {
                    None => {
                        winner = Some(outcome);
                        cancel.store(true, Ordering::Relaxed);
                    }
                    Some(existing) if existing.result != outcome.result => {
                        let (sat, unsat) = if existing.result == SolveResult::Sat {
                            (existing.backend.clone(), outcome.backend.clone())
                        } else {
                            (outcome.backend.clone(), existing.backend.clone())
                        };
                        error = Some(SolverError::Disagreement { sat, unsat });
                    }
                    Some(_) => {}
                },
                SolveResult::Unknown => last_unknown = Some(outcome),
            },
            Err(e) => {
                if error.is_none() && winner.is_none() {
                    error = Some(e);
                }
            }
        }
    }
    for handle in handles {
        let _ = handle.join();
    }
    if let Some(SolverError::Disagreement { sat, unsat }) = error {
        return Err(SolverError::Disagreement { sat, unsat });
    }
    if let Some(outcome) = winner {
        return Ok(outcome);
    }
    if let Some(e) = error {
        return Err(e);
    }
    Ok(last_unknown.expect("at least one solver reported"))
}
