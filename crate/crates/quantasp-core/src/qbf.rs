//! Assembly of the quantified Boolean encodings: per-level intermediate
//! programs with choice interfaces, the gate-level circuit with one
//! definition variable per level, the well-founded variant with incoherence
//! pruning, elision of trivial levels, and the direct prenex-CNF form for
//! programs whose universal levels are all trivial.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::cnf::{
    self, bounded_incoherence_check, cnf_encode, CnfError, CnfFormula, CnfVarKind,
    IncoherenceVerdict, DEFAULT_INCOHERENCE_VAR_LIMIT,
};
use crate::gc::{self, GcError};
use crate::model::{
    desugar_rules, Atom, ModelError, PartialInterpretation, Program, QuantifiedProgram,
    Quantifier, Rule, SymbolTable,
};
use crate::wellfounded::{wf_choice_interface, well_founded_model, WfError};

/// 1-based circuit variable.
pub type CircuitVar = u32;

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum Node {
    Var(CircuitVar),
    Gate(u32),
}

/// A possibly negated reference to a variable or gate.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub struct Signal {
    pub node: Node,
    pub negated: bool,
}

impl Signal {
    pub fn var(v: CircuitVar) -> Self {
        Signal { node: Node::Var(v), negated: false }
    }

    pub fn gate(index: u32) -> Self {
        Signal { node: Node::Gate(index), negated: false }
    }

    pub fn negate(self) -> Self {
        Signal { node: self.node, negated: !self.negated }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum GateKind {
    And,
    Or,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: Vec<Signal>,
}

/// A prenex circuit: quantifier blocks over an acyclic gate graph. Gates may
/// only reference earlier gates, so construction order is topological. An
/// empty `and` gate is the constant true, an empty `or` the constant false.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QbfCircuit {
    pub var_names: Vec<String>,
    pub prefix: Vec<(Quantifier, Vec<CircuitVar>)>,
    pub gates: Vec<Gate>,
    pub output: Signal,
}

impl Default for QbfCircuit {
    fn default() -> Self {
        Self::new()
    }
}

impl QbfCircuit {
    pub fn new() -> Self {
        QbfCircuit {
            var_names: Vec::new(),
            prefix: Vec::new(),
            gates: Vec::new(),
            output: Signal { node: Node::Gate(0), negated: false },
        }
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn add_var(&mut self, name: &str) -> CircuitVar {
        self.var_names.push(name.to_string());
        self.var_names.len() as CircuitVar
    }

    pub fn add_gate(&mut self, kind: GateKind, inputs: Vec<Signal>) -> Signal {
        for input in &inputs {
            match input.node {
                Node::Gate(g) => debug_assert!((g as usize) < self.gates.len()),
                Node::Var(v) => debug_assert!(v >= 1 && v as usize <= self.var_names.len()),
            }
        }
        self.gates.push(Gate { kind, inputs });
        Signal::gate(self.gates.len() as u32 - 1)
    }

    pub fn true_signal(&mut self) -> Signal {
        self.add_gate(GateKind::And, Vec::new())
    }

    pub fn false_signal(&mut self) -> Signal {
        self.add_gate(GateKind::Or, Vec::new())
    }

    /// Structural sanity: every variable quantified exactly once and the
    /// output in range.
    pub fn validate(&self) -> Result<(), String> {
        let mut seen = vec![0usize; self.num_vars()];
        for (_, vars) in &self.prefix {
            for &v in vars {
                if v == 0 || v as usize > self.num_vars() {
                    return Err(format!("variable {v} out of range"));
                }
                seen[(v - 1) as usize] += 1;
            }
        }
        if let Some(v) = seen.iter().position(|&c| c > 1) {
            return Err(format!("variable {} in more than one block", v + 1));
        }
        let check = |s: &Signal| match s.node {
            Node::Var(v) => {
                if seen[(v - 1) as usize] == 0 {
                    Err(format!("variable {v} unquantified"))
                } else {
                    Ok(())
                }
            }
            Node::Gate(g) => {
                if (g as usize) < self.gates.len() {
                    Ok(())
                } else {
                    Err(format!("gate {g} out of range"))
                }
            }
        };
        for (i, gate) in self.gates.iter().enumerate() {
            for input in &gate.inputs {
                check(input)?;
                if let Node::Gate(g) = input.node {
                    if g as usize >= i {
                        return Err(format!("gate {i} references later gate {g}"));
                    }
                }
            }
        }
        check(&self.output)
    }
}

/// A prenex quantifier prefix over a plain clause matrix.
#[derive(Clone, Debug)]
pub struct PrenexCnf {
    pub prefix: Vec<(Quantifier, Vec<cnf::Var>)>,
    pub matrix: CnfFormula,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LevelStats {
    pub level: usize,
    pub clauses: usize,
    pub vars: usize,
}

/// What the well-founded build did per level, including early pruning when
/// some level's simplified encoding is already unsatisfiable.
#[derive(Clone, Debug, Default)]
pub struct EncodingReport {
    pub per_level: Vec<LevelStats>,
    pub pruned_at: Option<usize>,
    /// Set when the whole formula collapsed to a constant (pruned at the
    /// first level).
    pub constant_result: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct WfEncoding {
    pub circuit: QbfCircuit,
    pub report: EncodingReport,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EncodeError {
    Model(ModelError),
    Cnf(CnfError),
    Wf(WfError),
    Gc(GcError),
    NonTrivialForall { level: usize },
}

impl fmt::Display for EncodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EncodeError::Model(e) => write!(f, "{e}"),
            EncodeError::Cnf(e) => write!(f, "{e}"),
            EncodeError::Wf(e) => write!(f, "{e}"),
            EncodeError::Gc(e) => write!(f, "{e}"),
            EncodeError::NonTrivialForall { level } => {
                write!(f, "universal level {level} is not trivial; run the Guess&Check chain first")
            }
        }
    }
}

impl std::error::Error for EncodeError {}

impl From<ModelError> for EncodeError {
    fn from(e: ModelError) -> Self {
        EncodeError::Model(e)
    }
}

impl From<CnfError> for EncodeError {
    fn from(e: CnfError) -> Self {
        EncodeError::Cnf(e)
    }
}

impl From<WfError> for EncodeError {
    fn from(e: WfError) -> Self {
        EncodeError::Wf(e)
    }
}

impl From<GcError> for EncodeError {
    fn from(e: GcError) -> Self {
        EncodeError::Gc(e)
    }
}

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum EncodingMode {
    Base,
    WellFounded,
}

/// Rules of the `i`-th intermediate program in base mode: the subprogram
/// plus a choice interface over every atom shared with the preceding levels.
fn base_level_rules(qp: &QuantifiedProgram, i: usize) -> Result<Vec<Rule>, EncodeError> {
    let upper = qp.subprogram(i)?;
    let mut rules = upper.rules.clone();
    if i > 1 {
        let lower = qp.prefix_union((i - 1).min(qp.level_count()))?;
        let empty = PartialInterpretation::new(lower.herbrand_base());
        let interface = wf_choice_interface(&lower, &upper, &empty);
        rules.extend(interface.rules);
    }
    Ok(rules)
}

/// Per-level state of the well-founded pipeline: a working symbol table for
/// fresh atoms and the union of the well-founded models seen so far.
struct WfPipeline<'a> {
    qp: &'a QuantifiedProgram,
    symbols: SymbolTable,
    accumulated: BTreeMap<Atom, bool>,
}

impl<'a> WfPipeline<'a> {
    fn new(qp: &'a QuantifiedProgram) -> Self {
        WfPipeline { qp, symbols: qp.symbols.clone(), accumulated: BTreeMap::new() }
    }

    /// The simplified intermediate program at position `i`: the level with
    /// its derived-truth interface, desugared, and reduced to its residual.
    fn level(&mut self, i: usize) -> Result<crate::wellfounded::WfResult, EncodeError> {
        let upper = self.qp.subprogram(i)?;
        let mut rules = upper.rules.clone();
        if i > 1 {
            let lower = self.qp.prefix_union((i - 1).min(self.qp.level_count()))?;
            let mut known = PartialInterpretation::new(lower.herbrand_base());
            for a in lower.herbrand_base() {
                if let Some(&value) = self.accumulated.get(&a) {
                    known.assign(a, value);
                }
            }
            let interface = wf_choice_interface(&lower, &upper, &known);
            rules.extend(interface.rules);
        }
        let desugared = desugar_rules(&rules, &mut self.symbols);
        let program = Program::new(desugared, self.symbols.clone());
        let wf = well_founded_model(&program)?;
        for a in program.herbrand_base() {
            match wf.model.truth(a) {
                crate::model::Truth::True => {
                    self.accumulated.entry(a).or_insert(true);
                }
                crate::model::Truth::False => {
                    self.accumulated.entry(a).or_insert(false);
                }
                crate::model::Truth::Undef => {}
            }
        }
        Ok(wf)
    }
}

/// Per-level outcome of the well-founded pipeline, for reporting.
#[derive(Clone, Debug)]
pub struct WfLevel {
    /// 1-based position; `n+1` is the constraint program.
    pub level: usize,
    pub model: PartialInterpretation,
    pub residual: Program,
}

/// Run the well-founded pipeline over every level and report each model and
/// residual.
pub fn wf_levels(qp: &QuantifiedProgram) -> Result<Vec<WfLevel>, EncodeError> {
    let mut pipeline = WfPipeline::new(qp);
    let mut out = Vec::with_capacity(qp.level_count() + 1);
    for i in 1..=qp.level_count() + 1 {
        let wf = pipeline.level(i)?;
        out.push(WfLevel { level: i, model: wf.model, residual: wf.residual });
    }
    Ok(out)
}

/// The `i`-th intermediate program, 1-based with `n+1` denoting the
/// constraint program. Base mode returns the raw program plus its choice
/// interface; well-founded mode returns the residual of the program plus
/// its derived-truth interface, desugared.
pub fn intermediate_program(
    qp: &QuantifiedProgram,
    i: usize,
    mode: EncodingMode,
) -> Result<Program, EncodeError> {
    match mode {
        EncodingMode::Base => Ok(Program::new(base_level_rules(qp, i)?, qp.symbols.clone())),
        EncodingMode::WellFounded => {
            let mut pipeline = WfPipeline::new(qp);
            let mut result = None;
            for level in 1..=i {
                result = Some(pipeline.level(level)?.residual);
            }
            Ok(result.expect("at least one level"))
        }
    }
}

/// Map one level's clause set into the circuit: shared atoms reuse their
/// circuit variable, per-level auxiliaries are always fresh. Returns the
/// conjunction signal and the variables first seen at this level.
fn install_cnf(
    circuit: &mut QbfCircuit,
    level_cnf: &CnfFormula,
    symbols: &SymbolTable,
    atom_vars: &mut HashMap<Atom, CircuitVar>,
) -> (Signal, Vec<CircuitVar>) {
    let mut block = Vec::new();
    let mut map = Vec::with_capacity(level_cnf.num_vars());
    for v in level_cnf.vars() {
        let cv = match level_cnf.var_kind(v) {
            CnfVarKind::Atom(a) => match atom_vars.get(a) {
                Some(&cv) => cv,
                None => {
                    let cv = circuit.add_var(symbols.name(*a));
                    atom_vars.insert(*a, cv);
                    block.push(cv);
                    cv
                }
            },
            _ => {
                let cv = circuit.add_var(&level_cnf.var_name(v, symbols));
                block.push(cv);
                cv
            }
        };
        map.push(cv);
    }
    let mut clause_signals = Vec::with_capacity(level_cnf.clauses().len());
    for clause in level_cnf.clauses() {
        let lits: Vec<Signal> = clause
            .iter()
            .map(|&l| {
                let cv = map[(cnf::lit_var(l) - 1) as usize];
                if l > 0 {
                    Signal::var(cv)
                } else {
                    Signal::var(cv).negate()
                }
            })
            .collect();
        let signal = match lits.len() {
            1 => lits[0],
            _ => circuit.add_gate(GateKind::Or, lits),
        };
        clause_signals.push(signal);
    }
    let conjunction = match clause_signals.len() {
        1 => clause_signals[0],
        _ => circuit.add_gate(GateKind::And, clause_signals),
    };
    (conjunction, block)
}

fn equivalence_gate(circuit: &mut QbfCircuit, a: Signal, b: Signal) -> Signal {
    let forward = circuit.add_gate(GateKind::Or, vec![a.negate(), b]);
    let backward = circuit.add_gate(GateKind::Or, vec![a, b.negate()]);
    circuit.add_gate(GateKind::And, vec![forward, backward])
}

/// Right fold of the connective chain: disjunction with a negated level
/// signal at universal positions, conjunction otherwise.
fn fold_chain(circuit: &mut QbfCircuit, chain: &[(Quantifier, Signal)], terminal: Signal) -> Signal {
    let mut acc = terminal;
    for &(quantifier, signal) in chain.iter().rev() {
        acc = match quantifier {
            Quantifier::Forall => circuit.add_gate(GateKind::Or, vec![signal.negate(), acc]),
            Quantifier::Exists => circuit.add_gate(GateKind::And, vec![signal, acc]),
        };
    }
    acc
}

fn block_quantifier(qp: &QuantifiedProgram, i: usize) -> Quantifier {
    if i == qp.level_count() + 1 {
        Quantifier::Exists
    } else {
        qp.quantifier(i)
    }
}

/// The base encoding: one definition variable per level tied to its clause
/// set, and the connective chain constraining them per the quantifier kinds.
/// Level variables enter the prefix at their first occurrence; definition
/// variables live in a trailing innermost existential block.
pub fn base_circuit(qp: &QuantifiedProgram) -> Result<QbfCircuit, EncodeError> {
    circuit_with_elided(qp, &BTreeSet::new())
}

/// Levels whose syntactic triviality admits elision from the matrix.
pub fn trivial_levels(qp: &QuantifiedProgram) -> Result<BTreeSet<usize>, EncodeError> {
    let mut elided = BTreeSet::new();
    for i in 1..=qp.level_count() {
        if gc::check_trivial(qp, i)?.syntactically_trivial {
            elided.insert(i);
        }
    }
    Ok(elided)
}

/// The trivial-elision encoding: trivial levels contribute only their
/// exported atoms to the prefix and are dropped from the matrix conjunction
/// and the connective chain. With no trivial levels this is exactly the
/// base encoding.
pub fn omit_trivial_circuit(qp: &QuantifiedProgram) -> Result<QbfCircuit, EncodeError> {
    let elided = trivial_levels(qp)?;
    circuit_with_elided(qp, &elided)
}

fn circuit_with_elided(
    qp: &QuantifiedProgram,
    elided: &BTreeSet<usize>,
) -> Result<QbfCircuit, EncodeError> {
    let n = qp.level_count();
    let mut symbols = qp.symbols.clone();
    let mut circuit = QbfCircuit::new();
    let mut atom_vars: HashMap<Atom, CircuitVar> = HashMap::new();
    let mut blocks: Vec<(Quantifier, Vec<CircuitVar>)> = Vec::new();
    let mut definition_vars: Vec<CircuitVar> = Vec::new();
    let mut equivalences: Vec<Signal> = Vec::new();
    let mut chain: Vec<(Quantifier, Signal)> = Vec::new();
    let mut terminal = None;

    for i in 1..=n + 1 {
        let quantifier = block_quantifier(qp, i);
        if i <= n && elided.contains(&i) {
            let mut block = Vec::new();
            for a in gc::ext_atoms(qp, i)? {
                if !atom_vars.contains_key(&a) {
                    let cv = circuit.add_var(qp.symbols.name(a));
                    atom_vars.insert(a, cv);
                    block.push(cv);
                }
            }
            if !block.is_empty() {
                blocks.push((quantifier, block));
            }
            continue;
        }
        let rules = base_level_rules(qp, i)?;
        let desugared = desugar_rules(&rules, &mut symbols);
        let level_cnf = cnf_encode(&Program::new(desugared, symbols.clone()))?;
        let (conjunction, block) = install_cnf(&mut circuit, &level_cnf, &symbols, &mut atom_vars);
        if !block.is_empty() {
            blocks.push((quantifier, block));
        }
        let definition = circuit.add_var(&format!("_phi_{i}"));
        definition_vars.push(definition);
        let signal = Signal::var(definition);
        equivalences.push(equivalence_gate(&mut circuit, signal, conjunction));
        if i == n + 1 {
            terminal = Some(signal);
        } else {
            chain.push((quantifier, signal));
        }
    }

    let terminal = terminal.expect("constraint level is never elided");
    let chain_signal = fold_chain(&mut circuit, &chain, terminal);
    let mut output_inputs = equivalences;
    output_inputs.push(chain_signal);
    circuit.output = circuit.add_gate(GateKind::And, output_inputs);
    blocks.push((Quantifier::Exists, definition_vars));
    circuit.prefix = blocks;
    debug_assert_eq!(circuit.validate(), Ok(()));
    Ok(circuit)
}

/// The well-founded encoding: per-level residual simplification with
/// derived truths propagated through the interfaces, and pruning as soon as
/// some level's clause set is detected unsatisfiable — at the first level
/// the whole formula is the constant decided by the quantifier.
pub fn wf_circuit(qp: &QuantifiedProgram) -> Result<WfEncoding, EncodeError> {
    let n = qp.level_count();
    let mut pipeline = WfPipeline::new(qp);
    let mut circuit = QbfCircuit::new();
    let mut atom_vars: HashMap<Atom, CircuitVar> = HashMap::new();
    let mut blocks: Vec<(Quantifier, Vec<CircuitVar>)> = Vec::new();
    let mut definition_vars: Vec<CircuitVar> = Vec::new();
    let mut equivalences: Vec<Signal> = Vec::new();
    let mut chain: Vec<(Quantifier, Signal)> = Vec::new();
    let mut report = EncodingReport::default();
    let mut terminal = None;

    for i in 1..=n + 1 {
        let quantifier = block_quantifier(qp, i);
        let residual = pipeline.level(i)?.residual;
        let level_cnf = cnf_encode(&residual)?;
        report.per_level.push(LevelStats {
            level: i,
            clauses: level_cnf.clauses().len(),
            vars: level_cnf.num_vars(),
        });
        if bounded_incoherence_check(&level_cnf, DEFAULT_INCOHERENCE_VAR_LIMIT)
            == IncoherenceVerdict::Incoherent
        {
            report.pruned_at = Some(i);
            let constant = quantifier == Quantifier::Forall;
            if i == 1 {
                report.constant_result = Some(constant);
                let mut collapsed = QbfCircuit::new();
                collapsed.output = if constant {
                    collapsed.true_signal()
                } else {
                    collapsed.false_signal()
                };
                debug_assert_eq!(collapsed.validate(), Ok(()));
                return Ok(WfEncoding { circuit: collapsed, report });
            }
            terminal = Some(if constant {
                circuit.true_signal()
            } else {
                circuit.false_signal()
            });
            break;
        }
        let (conjunction, block) =
            install_cnf(&mut circuit, &level_cnf, &pipeline.symbols, &mut atom_vars);
        if !block.is_empty() {
            blocks.push((quantifier, block));
        }
        let definition = circuit.add_var(&format!("_phi_{i}"));
        definition_vars.push(definition);
        let signal = Signal::var(definition);
        equivalences.push(equivalence_gate(&mut circuit, signal, conjunction));
        if i == n + 1 {
            terminal = Some(signal);
        } else {
            chain.push((quantifier, signal));
        }
    }

    let terminal = terminal.expect("loop sets the terminal");
    let chain_signal = fold_chain(&mut circuit, &chain, terminal);
    let mut output_inputs = equivalences;
    output_inputs.push(chain_signal);
    circuit.output = circuit.add_gate(GateKind::And, output_inputs);
    if !definition_vars.is_empty() {
        blocks.push((Quantifier::Exists, definition_vars));
    }
    circuit.prefix = blocks;
    debug_assert_eq!(circuit.validate(), Ok(()));
    Ok(WfEncoding { circuit, report })
}

/// Direct prenex-CNF encoding for programs whose universal levels are all
/// syntactically trivial: the matrix is the plain conjunction of the level
/// clause sets, with no definition variables and no gates.
pub fn direct_cnf(qp: &QuantifiedProgram) -> Result<PrenexCnf, EncodeError> {
    let n = qp.level_count();
    let elided = trivial_levels(qp)?;
    for i in 1..=n {
        if qp.quantifier(i) == Quantifier::Forall && !elided.contains(&i) {
            return Err(EncodeError::NonTrivialForall { level: i });
        }
    }
    let mut symbols = qp.symbols.clone();
    let mut matrix = CnfFormula::new();
    let mut prefix: Vec<(Quantifier, Vec<cnf::Var>)> = Vec::new();

    for i in 1..=n + 1 {
        let quantifier = block_quantifier(qp, i);
        let start = matrix.num_vars();
        if i <= n && elided.contains(&i) {
            for a in gc::ext_atoms(qp, i)? {
                matrix.intern_atom(a);
            }
        } else {
            let rules = base_level_rules(qp, i)?;
            let desugared = desugar_rules(&rules, &mut symbols);
            let level_cnf = cnf_encode(&Program::new(desugared, symbols.clone()))?;
            let user_atoms = qp.symbols.len();
            let map: Vec<cnf::Var> = level_cnf
                .vars()
                .map(|v| match level_cnf.var_kind(v) {
                    // atoms minted during desugaring are named after the
                    // working table so the matrix stays self-contained
                    CnfVarKind::Atom(a) if a.index() < user_atoms => matrix.intern_atom(*a),
                    _ => matrix.add_var(CnfVarKind::Named(level_cnf.var_name(v, &symbols))),
                })
                .collect();
            for clause in level_cnf.clauses() {
                let remapped: Vec<cnf::Lit> = clause
                    .iter()
                    .map(|&l| cnf::lit(map[(cnf::lit_var(l) - 1) as usize], l > 0))
                    .collect();
                matrix.push_clause(remapped);
            }
        }
        let end = matrix.num_vars();
        if end > start {
            prefix.push((quantifier, ((start + 1) as cnf::Var..=end as cnf::Var).collect()));
        }
    }
    Ok(PrenexCnf { prefix, matrix })
}
