//! QDIMACS emission and parsing, plus the circuit-to-prenex-CNF conversion
//! with one selector variable per gate.

use std::fmt;

use quantasp_core::cnf::{lit, CnfFormula, CnfVarKind, Lit};
use quantasp_core::qbf::{GateKind, Node, PrenexCnf, QbfCircuit, Signal};
use quantasp_core::Quantifier;

/// Emit prenex CNF in QDIMACS. Adjacent same-kind blocks are merged so the
/// prefix alternates as the format requires.
pub fn emit_qdimacs(prenex: &PrenexCnf) -> String {
    let mut out = format!(
        "p cnf {} {}\n",
        prenex.matrix.num_vars(),
        prenex.matrix.clauses().len()
    );
    let mut merged: Vec<(Quantifier, Vec<u32>)> = Vec::new();
    for (quantifier, vars) in &prenex.prefix {
        if vars.is_empty() {
            continue;
        }
        match merged.last_mut() {
            Some((q, existing)) if *q == *quantifier => existing.extend(vars.iter().copied()),
            _ => merged.push((*quantifier, vars.clone())),
        }
    }
    for (quantifier, vars) in merged {
        let letter = match quantifier {
            Quantifier::Exists => 'e',
            Quantifier::Forall => 'a',
        };
        let ids: Vec<String> = vars.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("{letter} {} 0\n", ids.join(" ")));
    }
    for clause in prenex.matrix.clauses() {
        let lits: Vec<String> = clause.iter().map(|l| l.to_string()).collect();
        if clause.is_empty() {
            out.push_str("0\n");
        } else {
            out.push_str(&format!("{} 0\n", lits.join(" ")));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QdimacsParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for QdimacsParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "qdimacs line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for QdimacsParseError {}

fn err(line: usize, message: impl Into<String>) -> QdimacsParseError {
    QdimacsParseError { line, message: message.into() }
}

pub fn parse_qdimacs(input: &str) -> Result<PrenexCnf, QdimacsParseError> {
    let mut declared: Option<(usize, usize)> = None;
    let mut matrix = CnfFormula::new();
    let mut prefix: Vec<(Quantifier, Vec<u32>)> = Vec::new();
    let mut clause_lines = 0usize;
    for (idx, raw) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("p cnf") {
            let mut parts = rest.split_whitespace();
            let vars: usize = parts
                .next()
                .and_then(|p| p.parse().ok())
                .ok_or_else(|| err(lineno, "bad variable count"))?;
            let clauses: usize = parts
                .next()
                .and_then(|p| p.parse().ok())
                .ok_or_else(|| err(lineno, "bad clause count"))?;
            for v in 0..vars {
                matrix.add_var(CnfVarKind::Named(format!("{}", v + 1)));
            }
            declared = Some((vars, clauses));
            continue;
        }
        let Some((vars, _)) = declared else {
            return Err(err(lineno, "content before the problem line"));
        };
        if line.starts_with('e') || line.starts_with('a') {
            let quantifier = if line.starts_with('e') {
                Quantifier::Exists
            } else {
                Quantifier::Forall
            };
            if let Some((last, _)) = prefix.last() {
                if *last == quantifier {
                    return Err(err(lineno, "prefix lines must alternate"));
                }
            }
            let mut block = Vec::new();
            for part in line[1..].split_whitespace() {
                let id: i64 =
                    part.parse().map_err(|_| err(lineno, format!("bad token `{part}`")))?;
                if id == 0 {
                    break;
                }
                if id < 0 || id as usize > vars {
                    return Err(err(lineno, format!("variable {id} out of range")));
                }
                block.push(id as u32);
            }
            prefix.push((quantifier, block));
            continue;
        }
        let mut clause = Vec::new();
        let mut terminated = false;
        for part in line.split_whitespace() {
            let l: i64 = part.parse().map_err(|_| err(lineno, format!("bad literal `{part}`")))?;
            if l == 0 {
                terminated = true;
                break;
            }
            if l.unsigned_abs() as usize > vars {
                return Err(err(lineno, format!("literal {l} out of range")));
            }
            clause.push(l as Lit);
        }
        if !terminated {
            return Err(err(lineno, "clause not terminated by 0"));
        }
        matrix.push_clause(clause);
        clause_lines += 1;
    }
    let (_, clauses) = declared.ok_or_else(|| err(1, "missing problem line"))?;
    if clause_lines != clauses {
        return Err(err(
            input.lines().count(),
            format!("declared {clauses} clauses, found {clause_lines}"),
        ));
    }
    Ok(PrenexCnf { prefix, matrix })
}

/// Convert a circuit into an equisatisfiable prenex CNF: every gate gets a
/// selector variable defined by its inputs, selectors go into a trailing
/// innermost existential block, and the output selector is asserted.
pub fn prenex_cnf(circuit: &QbfCircuit) -> PrenexCnf {
    let mut matrix = CnfFormula::new();
    for name in &circuit.var_names {
        matrix.add_var(CnfVarKind::Named(name.clone()));
    }
    let mut selectors = Vec::with_capacity(circuit.gates.len());
    let signal_lit = |selectors: &[u32], s: Signal| -> Lit {
        let var = match s.node {
            Node::Var(v) => v,
            Node::Gate(g) => selectors[g as usize],
        };
        lit(var, !s.negated)
    };
    for gate in &circuit.gates {
        let s = matrix.add_var(CnfVarKind::Named(format!("_sel_{}", selectors.len() + 1)));
        let inputs: Vec<Lit> = gate
            .inputs
            .iter()
            .map(|&input| signal_lit(&selectors, input))
            .collect();
        match gate.kind {
            GateKind::And => {
                let mut closing = vec![lit(s, true)];
                for &l in &inputs {
                    matrix.push_clause(vec![lit(s, false), l]);
                    closing.push(-l);
                }
                matrix.push_clause(closing);
            }
            GateKind::Or => {
                let mut forward = vec![lit(s, false)];
                for &l in &inputs {
                    matrix.push_clause(vec![lit(s, true), -l]);
                    forward.push(l);
                }
                matrix.push_clause(forward);
            }
        }
        selectors.push(s);
    }
    matrix.push_clause(vec![signal_lit(&selectors, circuit.output)]);
    let mut prefix = circuit.prefix.clone();
    if !selectors.is_empty() {
        prefix.push((Quantifier::Exists, selectors));
    }
    PrenexCnf { prefix, matrix }
}
