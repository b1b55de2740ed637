//! QCIR-G14 emission and parsing. Variables take the numbers 1..V in
//! circuit order and gates continue from V+1 in topological order, so equal
//! circuits emit byte-identical documents.

use std::collections::HashMap;
use std::fmt;

use quantasp_core::qbf::{GateKind, Node, QbfCircuit, Signal};
use quantasp_core::Quantifier;

fn signal_number(circuit: &QbfCircuit, signal: Signal) -> i64 {
    let magnitude = match signal.node {
        Node::Var(v) => v as i64,
        Node::Gate(g) => circuit.num_vars() as i64 + g as i64 + 1,
    };
    if signal.negated {
        -magnitude
    } else {
        magnitude
    }
}

/// Merge adjacent same-kind quantifier blocks and drop empty ones.
fn merged_prefix(prefix: &[(Quantifier, Vec<u32>)]) -> Vec<(Quantifier, Vec<u32>)> {
    let mut merged: Vec<(Quantifier, Vec<u32>)> = Vec::new();
    for (quantifier, vars) in prefix {
        if vars.is_empty() {
            continue;
        }
        match merged.last_mut() {
            Some((q, existing)) if *q == *quantifier => existing.extend(vars.iter().copied()),
            _ => merged.push((*quantifier, vars.clone())),
        }
    }
    merged
}

pub fn emit_qcir(circuit: &QbfCircuit) -> String {
    let mut out = String::from("#QCIR-G14\n");
    for (quantifier, vars) in merged_prefix(&circuit.prefix) {
        let keyword = match quantifier {
            Quantifier::Exists => "exists",
            Quantifier::Forall => "forall",
        };
        let ids: Vec<String> = vars.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("{keyword}({})\n", ids.join(",")));
    }
    out.push_str(&format!("output({})\n", signal_number(circuit, circuit.output)));
    for (index, gate) in circuit.gates.iter().enumerate() {
        let keyword = match gate.kind {
            GateKind::And => "and",
            GateKind::Or => "or",
        };
        let id = circuit.num_vars() + index + 1;
        let inputs: Vec<String> = gate
            .inputs
            .iter()
            .map(|&s| signal_number(circuit, s).to_string())
            .collect();
        out.push_str(&format!("{id} = {keyword}({})\n", inputs.join(",")));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QcirParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for QcirParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "qcir line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for QcirParseError {}

fn err(line: usize, message: impl Into<String>) -> QcirParseError {
    QcirParseError { line, message: message.into() }
}

/// Parse a QCIR document into a circuit. Gates must be defined before use
/// (the cleansed-form convention); `not` gates are folded into negated
/// references.
pub fn parse_qcir(input: &str) -> Result<QbfCircuit, QcirParseError> {
    let mut circuit = QbfCircuit::new();
    // file id -> signal (variables and defined gates)
    let mut signals: HashMap<i64, Signal> = HashMap::new();
    let mut output: Option<(i64, usize)> = None;
    let mut saw_header = false;

    for (idx, raw) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            saw_header = true;
            continue;
        }
        if let Some(rest) = line.strip_prefix("exists(").or_else(|| {
            line.strip_prefix("forall(")
        }) {
            let quantifier = if line.starts_with("exists") {
                Quantifier::Exists
            } else {
                Quantifier::Forall
            };
            let body = rest.strip_suffix(')').ok_or_else(|| err(lineno, "missing `)`"))?;
            let mut block = Vec::new();
            for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                let id: i64 = part
                    .parse()
                    .map_err(|_| err(lineno, format!("bad variable `{part}`")))?;
                if id <= 0 {
                    return Err(err(lineno, "prefix variables must be positive"));
                }
                if signals.contains_key(&id) {
                    return Err(err(lineno, format!("variable {id} declared twice")));
                }
                let v = circuit.add_var(&id.to_string());
                signals.insert(id, Signal::var(v));
                block.push(v);
            }
            circuit.prefix.push((quantifier, block));
            continue;
        }
        if let Some(rest) = line.strip_prefix("output(") {
            let body = rest.strip_suffix(')').ok_or_else(|| err(lineno, "missing `)`"))?;
            let id: i64 = body
                .trim()
                .parse()
                .map_err(|_| err(lineno, format!("bad output `{body}`")))?;
            output = Some((id, lineno));
            continue;
        }
        // gate definition: <id> = and|or|not(args)
        let (lhs, rhs) = line
            .split_once('=')
            .ok_or_else(|| err(lineno, "expected a gate definition"))?;
        let id: i64 = lhs
            .trim()
            .parse()
            .map_err(|_| err(lineno, format!("bad gate id `{}`", lhs.trim())))?;
        if signals.contains_key(&id) {
            return Err(err(lineno, format!("id {id} defined twice")));
        }
        let rhs = rhs.trim();
        let (kind, body) = if let Some(rest) = rhs.strip_prefix("and(") {
            (Some(GateKind::And), rest)
        } else if let Some(rest) = rhs.strip_prefix("or(") {
            (Some(GateKind::Or), rest)
        } else if let Some(rest) = rhs.strip_prefix("not(") {
            (None, rest)
        } else {
            return Err(err(lineno, format!("unsupported gate `{rhs}`")));
        };
        let body = body.strip_suffix(')').ok_or_else(|| err(lineno, "missing `)`"))?;
        let mut inputs = Vec::new();
        for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let reference: i64 = part
                .parse()
                .map_err(|_| err(lineno, format!("bad reference `{part}`")))?;
            let signal = signals
                .get(&reference.abs())
                .copied()
                .ok_or_else(|| err(lineno, format!("undefined reference {reference}")))?;
            inputs.push(if reference < 0 { signal.negate() } else { signal });
        }
        match kind {
            Some(kind) => {
                let signal = circuit.add_gate(kind, inputs);
                signals.insert(id, signal);
            }
            None => {
                if inputs.len() != 1 {
                    return Err(err(lineno, "`not` takes exactly one input"));
                }
                signals.insert(id, inputs[0].negate());
            }
        }
    }

    if !saw_header {
        return Err(err(1, "missing #QCIR header"));
    }
    let (output_id, output_line) = output.ok_or_else(|| err(1, "missing output(...)"))?;
    let signal = signals
        .get(&output_id.abs())
        .copied()
        .ok_or_else(|| err(output_line, format!("undefined output {output_id}")))?;
    circuit.output = if output_id < 0 { signal.negate() } else { signal };
    Ok(circuit)
}
