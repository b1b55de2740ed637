//! Back end for quantified Boolean formulas: QCIR and QDIMACS formats, an
//! exact internal evaluator, and adapters for external solver processes.

pub mod eval;
pub mod qcir;
pub mod qdimacs;
pub mod solver;

use quantasp_core::cnf::lit_var;
use quantasp_core::qbf::{GateKind, PrenexCnf, QbfCircuit, Signal};

/// View prenex CNF as an and-of-ors circuit over the same variables.
pub fn prenex_to_circuit(prenex: &PrenexCnf) -> QbfCircuit {
    let mut circuit = QbfCircuit::new();
    for v in 1..=prenex.matrix.num_vars() as u32 {
        circuit.add_var(&v.to_string());
    }
    circuit.prefix = prenex.prefix.clone();
    let mut clause_signals = Vec::with_capacity(prenex.matrix.clauses().len());
    for clause in prenex.matrix.clauses() {
        let lits: Vec<Signal> = clause
            .iter()
            .map(|&l| {
                let s = Signal::var(lit_var(l));
                if l < 0 {
                    s.negate()
                } else {
                    s
                }
            })
            .collect();
        clause_signals.push(match lits.len() {
            1 => lits[0],
            _ => circuit.add_gate(GateKind::Or, lits),
        });
    }
    circuit.output = circuit.add_gate(GateKind::And, clause_signals);
    circuit
}
