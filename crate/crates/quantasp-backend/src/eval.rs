//! Exact internal QBF evaluation. Circuits are lowered to prenex CNF and
//! both forms are decided by prefix-ordered expansion over a clause set
//! that is simplified after every assignment, with two depth-independent
//! unit rules (a unit on an existential literal is assigned, a unit on a
//! universal literal falsifies the branch) and memoization on the residual
//! clause set. Residuals after a block only retain the atoms later levels
//! actually read, so the expansion collapses across blocks. Meant for
//! verification at small variable counts, not competition solving.

use std::collections::HashMap;
use std::fmt;

use quantasp_core::cnf::{lit_var, Lit};
use quantasp_core::qbf::{Node, PrenexCnf, QbfCircuit, Signal};
use quantasp_core::Quantifier;

use crate::qdimacs::prenex_cnf;

pub const DEFAULT_EVAL_VAR_LIMIT: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalError {
    TooManyVariables { vars: usize, limit: usize },
    FreeVariable { var: u32 },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::TooManyVariables { vars, limit } => {
                write!(f, "{vars} variables exceed the evaluation limit of {limit}")
            }
            EvalError::FreeVariable { var } => write!(f, "variable {var} is not quantified"),
        }
    }
}

impl std::error::Error for EvalError {}

/// Truth value of a closed prenex circuit. The limit counts the circuit's
/// own variables; gate selectors introduced for evaluation are functionally
/// determined and not counted.
pub fn eval_circuit(circuit: &QbfCircuit, var_limit: usize) -> Result<bool, EvalError> {
    let mut used = vec![false; circuit.num_vars()];
    let mut mark = |s: &Signal| {
        if let Node::Var(v) = s.node {
            used[(v - 1) as usize] = true;
        }
    };
    for gate in &circuit.gates {
        for input in &gate.inputs {
            mark(input);
        }
    }
    mark(&circuit.output);
    let used_count = used.iter().filter(|&&u| u).count();
    if used_count > var_limit {
        return Err(EvalError::TooManyVariables { vars: used_count, limit: var_limit });
    }
    let mut quantified = vec![false; circuit.num_vars()];
    for (_, vars) in &circuit.prefix {
        for &v in vars {
            quantified[(v - 1) as usize] = true;
        }
    }
    if let Some(free) = (0..circuit.num_vars()).find(|&i| used[i] && !quantified[i]) {
        return Err(EvalError::FreeVariable { var: free as u32 + 1 });
    }
    let lowered = prenex_cnf(circuit);
    Ok(Engine::new(&lowered).decide())
}

/// Truth value of a closed prenex CNF.
pub fn eval_prenex(prenex: &PrenexCnf, var_limit: usize) -> Result<bool, EvalError> {
    let vars = prenex.matrix.num_vars();
    if vars > var_limit {
        return Err(EvalError::TooManyVariables { vars, limit: var_limit });
    }
    let mut quantified = vec![false; vars];
    for (_, block) in &prenex.prefix {
        for &v in block {
            quantified[(v - 1) as usize] = true;
        }
    }
    let mut occurs = vec![false; vars];
    for clause in prenex.matrix.clauses() {
        for &l in clause {
            occurs[(lit_var(l) - 1) as usize] = true;
        }
    }
    if let Some(free) = (0..vars).find(|&i| occurs[i] && !quantified[i]) {
        return Err(EvalError::FreeVariable { var: free as u32 + 1 });
    }
    Ok(Engine::new(prenex).decide())
}

/// Residual of one branch: simplified clauses, or a decided value.
enum Residual {
    Decided(bool),
    Open(Vec<Vec<Lit>>),
}

struct Engine {
    /// position in the global prefix order per variable; branching always
    /// picks the outermost variable still occurring
    position: Vec<u32>,
    quantifier: Vec<Quantifier>,
    memo: HashMap<Vec<Vec<Lit>>, bool>,
    start: Vec<Vec<Lit>>,
}

impl Engine {
    fn new(prenex: &PrenexCnf) -> Self {
        let num_vars = prenex.matrix.num_vars();
        let mut position = vec![u32::MAX; num_vars];
        let mut quantifier = vec![Quantifier::Exists; num_vars];
        let mut next = 0u32;
        for (q, block) in &prenex.prefix {
            for &v in block {
                position[(v - 1) as usize] = next;
                quantifier[(v - 1) as usize] = *q;
                next += 1;
            }
        }
        let mut start: Vec<Vec<Lit>> = prenex.matrix.clauses().to_vec();
        start.sort();
        start.dedup();
        Engine { position, quantifier, memo: HashMap::new(), start }
    }

    fn decide(&mut self) -> bool {
        let start = std::mem::take(&mut self.start);
        match self.reduce(start, None) {
            Residual::Decided(value) => value,
            Residual::Open(clauses) => self.expand(clauses),
        }
    }

    /// Substitute an optional assignment, then run both unit rules to a
    /// fixpoint and canonicalize.
    fn reduce(&self, clauses: Vec<Vec<Lit>>, assign: Option<Lit>) -> Residual {
        let mut pending: Vec<Lit> = assign.into_iter().collect();
        let mut clauses = clauses;
        loop {
            if let Some(l) = pending.pop() {
                let mut next = Vec::with_capacity(clauses.len());
                for clause in &clauses {
                    if clause.contains(&l) {
                        continue;
                    }
                    let rewritten: Vec<Lit> =
                        clause.iter().copied().filter(|&x| x != -l).collect();
                    if rewritten.is_empty() {
                        return Residual::Decided(false);
                    }
                    next.push(rewritten);
                }
                clauses = next;
                continue;
            }
            // collect one unit, if any
            let unit = clauses.iter().find(|c| c.len() == 1).map(|c| c[0]);
            match unit {
                Some(l) => match self.quantifier[(lit_var(l) - 1) as usize] {
                    // forced for the existential player at any depth
                    Quantifier::Exists => pending.push(l),
                    // the universal player can always falsify it
                    Quantifier::Forall => return Residual::Decided(false),
                },
                None => break,
            }
        }
        if clauses.is_empty() {
            return Residual::Decided(true);
        }
        if clauses.iter().any(|c| c.is_empty()) {
            return Residual::Decided(false);
        }
        clauses.sort();
        clauses.dedup();
        Residual::Open(clauses)
    }

    fn expand(&mut self, clauses: Vec<Vec<Lit>>) -> bool {
        if let Some(&value) = self.memo.get(&clauses) {
            return value;
        }
        // outermost variable still read by the matrix
        let (_, var) = clauses
            .iter()
            .flatten()
            .map(|&l| {
                let v = lit_var(l);
                (self.position[(v - 1) as usize], v)
            })
            .min()
            .expect("open state has clauses");
        let quantifier = self.quantifier[(var - 1) as usize];
        let mut value = matches!(quantifier, Quantifier::Forall);
        for branch in [true, false] {
            let assignment = if branch { var as Lit } else { -(var as Lit) };
            let result = match self.reduce(clauses.clone(), Some(assignment)) {
                Residual::Decided(v) => v,
                Residual::Open(sub) => self.expand(sub),
            };
            match quantifier {
                Quantifier::Exists if result => {
                    value = true;
                    break;
                }
                Quantifier::Forall if !result => {
                    value = false;
                    break;
                }
                _ => {}
            }
        }
        self.memo.insert(clauses, value);
        value
    }
}
