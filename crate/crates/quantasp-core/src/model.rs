//! Propositional program model: atoms, rules, programs, quantifier-prefixed
//! programs, and three-valued interpretations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::graph::strongly_connected_components;

/// Name prefixes reserved for generated atoms; the parser rejects them in
/// user input so freshly minted names can never collide with source text.
pub const RESERVED_PREFIXES: &[&str] = &["_na_", "_u_", "_phi_", "_t_"];

/// A propositional atom, a dense index into a [`SymbolTable`].
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom(u32);

impl Atom {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Atom({})", self.0)
    }
}

/// Bijective name/id table. Ids are assigned in first-intern order, which
/// the parser ties to first occurrence in the source text; every downstream
/// ordering (bases, prefixes, emitted formulas) derives from it.
#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    names: Vec<String>,
    index: HashMap<String, Atom>,
    next_marker: u32,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Get-or-insert an atom for `name`. No reserved-prefix check; callers
    /// parsing user input must check [`is_reserved_name`] first.
    pub fn intern(&mut self, name: &str) -> Atom {
        if let Some(&a) = self.index.get(name) {
            return a;
        }
        let a = Atom(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), a);
        a
    }

    pub fn lookup(&self, name: &str) -> Option<Atom> {
        self.index.get(name).copied()
    }

    pub fn name(&self, a: Atom) -> &str {
        &self.names[a.index()]
    }

    pub fn atoms(&self) -> impl Iterator<Item = Atom> + '_ {
        (0..self.names.len() as u32).map(Atom)
    }

    /// Mint a fresh atom named `stem`, or `stem_2`, `stem_3`, ... if taken.
    pub fn fresh(&mut self, stem: &str) -> Atom {
        if !self.index.contains_key(stem) {
            return self.intern(stem);
        }
        let mut k = 2usize;
        loop {
            let candidate = format!("{stem}_{k}");
            if !self.index.contains_key(&candidate) {
                return self.intern(&candidate);
            }
            k += 1;
        }
    }

    /// Mint a fresh constraint-marker atom `_t_<k>`. The counter is owned by
    /// the table, so markers are unique across every level of one program.
    pub fn fresh_marker(&mut self) -> Atom {
        loop {
            let candidate = format!("_t_{}", self.next_marker);
            self.next_marker += 1;
            if !self.index.contains_key(&candidate) {
                return self.intern(&candidate);
            }
        }
    }
}

impl PartialEq for SymbolTable {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names
    }
}

impl Eq for SymbolTable {}

pub fn is_reserved_name(name: &str) -> bool {
    RESERVED_PREFIXES.iter().any(|p| name.starts_with(p))
}

/// An atom or its negation-as-failure complement.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { atom, positive: false }
    }

    pub fn complement(self) -> Self {
        Literal { atom: self.atom, positive: !self.positive }
    }
}

/// Rule head: a single atom, a choice over atoms, or absent (constraint).
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Head {
    Atom(Atom),
    Choice(Vec<Atom>),
    None,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Rule {
    pub head: Head,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn normal(head: Atom, body: Vec<Literal>) -> Self {
        Rule { head: Head::Atom(head), body: dedup_body(body) }
    }

    pub fn fact(head: Atom) -> Self {
        Rule::normal(head, Vec::new())
    }

    pub fn constraint(body: Vec<Literal>) -> Self {
        Rule { head: Head::None, body: dedup_body(body) }
    }

    /// Choice rule `{a1;...;am} :- body`. Duplicate head atoms collapse.
    pub fn choice(atoms: Vec<Atom>, body: Vec<Literal>) -> Self {
        let mut seen = BTreeSet::new();
        let atoms: Vec<Atom> = atoms.into_iter().filter(|a| seen.insert(*a)).collect();
        debug_assert!(!atoms.is_empty(), "choice head must be non-empty");
        Rule { head: Head::Choice(atoms), body: dedup_body(body) }
    }

    pub fn is_fact(&self) -> bool {
        matches!(self.head, Head::Atom(_)) && self.body.is_empty()
    }

    pub fn is_normal(&self) -> bool {
        matches!(self.head, Head::Atom(_))
    }

    pub fn is_choice(&self) -> bool {
        matches!(self.head, Head::Choice(_))
    }

    pub fn is_constraint(&self) -> bool {
        matches!(self.head, Head::None)
    }

    pub fn head_atoms(&self) -> Vec<Atom> {
        match &self.head {
            Head::Atom(a) => vec![*a],
            Head::Choice(atoms) => atoms.clone(),
            Head::None => Vec::new(),
        }
    }
}

fn dedup_body(body: Vec<Literal>) -> Vec<Literal> {
    let mut seen = BTreeSet::new();
    body.into_iter().filter(|l| seen.insert(*l)).collect()
}

/// A finite set of rules over a shared symbol table.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub symbols: SymbolTable,
}

impl Program {
    pub fn new(rules: Vec<Rule>, symbols: SymbolTable) -> Self {
        Program { rules, symbols }
    }

    pub fn empty(symbols: SymbolTable) -> Self {
        Program { rules: Vec::new(), symbols }
    }

    /// The set of atoms occurring in any rule.
    pub fn herbrand_base(&self) -> BTreeSet<Atom> {
        let mut base = BTreeSet::new();
        for rule in &self.rules {
            base.extend(rule.head_atoms());
            base.extend(rule.body.iter().map(|l| l.atom));
        }
        base
    }

    /// Head atoms, counting every atom of a choice head.
    pub fn heads(&self) -> BTreeSet<Atom> {
        self.rules.iter().flat_map(|r| r.head_atoms()).collect()
    }

    /// Atoms asserted by facts (normal rules with empty bodies).
    pub fn fact_atoms(&self) -> BTreeSet<Atom> {
        self.rules
            .iter()
            .filter(|r| r.is_fact())
            .flat_map(|r| r.head_atoms())
            .collect()
    }

    pub fn is_normal(&self) -> bool {
        self.rules.iter().all(|r| r.is_normal())
    }

    /// Eliminate choice rules and constraints, leaving only normal rules.
    /// Idempotent; fresh atoms are recorded in the returned symbol table.
    pub fn desugar(&self) -> Program {
        let mut symbols = self.symbols.clone();
        let rules = desugar_rules(&self.rules, &mut symbols);
        Program { rules, symbols }
    }

    pub fn dependency_graph(&self) -> DepGraph {
        dependency_graph(self)
    }

    pub fn is_stratified(&self) -> bool {
        self.dependency_graph().is_stratified()
    }
}

/// Rewrite choice rules and constraints into normal rules, minting fresh
/// atoms in `symbols`:
/// `{a1;...;am} :- B` becomes `ai :- not _na_ai, B` and `_na_ai :- not ai`;
/// `:- B` becomes `_t_k :- B, not _t_k`.
pub fn desugar_rules(rules: &[Rule], symbols: &mut SymbolTable) -> Vec<Rule> {
    let mut out = Vec::with_capacity(rules.len());
    for rule in rules {
        match &rule.head {
            Head::Atom(_) => out.push(rule.clone()),
            Head::Choice(atoms) => {
                for &a in atoms {
                    let na = symbols.fresh(&format!("_na_{}", symbols.name(a).to_owned()));
                    let mut body = vec![Literal::neg(na)];
                    body.extend(rule.body.iter().copied());
                    out.push(Rule::normal(a, body));
                    out.push(Rule::normal(na, vec![Literal::neg(a)]));
                }
            }
            Head::None => {
                let marker = symbols.fresh_marker();
                let mut body = rule.body.clone();
                body.push(Literal::neg(marker));
                out.push(Rule::normal(marker, body));
            }
        }
    }
    out
}

/// Labeled dependency graph: a positive (negative) arc (a, b) records that
/// `a` (`not a`) occurs in the body of a rule with `b` among its head atoms.
/// Constraints contribute no arcs.
#[derive(Clone, Debug)]
pub struct DepGraph {
    pub nodes: Vec<Atom>,
    pub pos_edges: BTreeSet<(Atom, Atom)>,
    pub neg_edges: BTreeSet<(Atom, Atom)>,
}

impl DepGraph {
    /// True iff no cycle contains a negative arc, i.e. no negative arc has
    /// both endpoints in the same strongly connected component.
    pub fn is_stratified(&self) -> bool {
        let pos: Vec<(Atom, Atom)> = self.pos_edges.iter().copied().collect();
        let neg: Vec<(Atom, Atom)> = self.neg_edges.iter().copied().collect();
        let idx: BTreeMap<Atom, usize> =
            self.nodes.iter().enumerate().map(|(i, &a)| (a, i)).collect();
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (from, to) in pos.iter().chain(neg.iter()) {
            adj[idx[from]].push(idx[to]);
        }
        let comp = strongly_connected_components(&adj);
        self.neg_edges
            .iter()
            .all(|(from, to)| comp[idx[from]] != comp[idx[to]])
    }
}

pub fn dependency_graph(program: &Program) -> DepGraph {
    let nodes: Vec<Atom> = program.herbrand_base().into_iter().collect();
    let mut pos_edges = BTreeSet::new();
    let mut neg_edges = BTreeSet::new();
    for rule in &program.rules {
        for head in rule.head_atoms() {
            for lit in &rule.body {
                if lit.positive {
                    pos_edges.insert((lit.atom, head));
                } else {
                    neg_edges.insert((lit.atom, head));
                }
            }
        }
    }
    DepGraph { nodes, pos_edges, neg_edges }
}

/// Three-valued truth.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum Truth {
    True,
    False,
    Undef,
}

/// A consistent partial assignment over a fixed Herbrand base. Consistency
/// is structural: there is at most one value per atom.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PartialInterpretation {
    base: BTreeSet<Atom>,
    values: BTreeMap<Atom, bool>,
}

impl PartialInterpretation {
    pub fn new(base: BTreeSet<Atom>) -> Self {
        PartialInterpretation { base, values: BTreeMap::new() }
    }

    /// Total interpretation: atoms in `true_atoms` are true, the rest of
    /// `base` is false.
    pub fn total(base: BTreeSet<Atom>, true_atoms: &BTreeSet<Atom>) -> Self {
        let values = base
            .iter()
            .map(|&a| (a, true_atoms.contains(&a)))
            .collect();
        PartialInterpretation { base, values }
    }

    pub fn base(&self) -> &BTreeSet<Atom> {
        &self.base
    }

    pub fn truth(&self, atom: Atom) -> Truth {
        match self.values.get(&atom) {
            Some(true) => Truth::True,
            Some(false) => Truth::False,
            None => Truth::Undef,
        }
    }

    pub fn assign(&mut self, atom: Atom, value: bool) {
        debug_assert!(self.base.contains(&atom));
        self.values.insert(atom, value);
    }

    pub fn is_total(&self) -> bool {
        self.base.iter().all(|a| self.values.contains_key(a))
    }

    pub fn true_atoms(&self) -> BTreeSet<Atom> {
        self.values
            .iter()
            .filter_map(|(&a, &v)| v.then_some(a))
            .collect()
    }

    pub fn false_atoms(&self) -> BTreeSet<Atom> {
        self.values
            .iter()
            .filter_map(|(&a, &v)| (!v).then_some(a))
            .collect()
    }

    pub fn decided(&self) -> usize {
        self.values.len()
    }

    pub fn literal_truth(&self, lit: Literal) -> Truth {
        match (self.truth(lit.atom), lit.positive) {
            (Truth::Undef, _) => Truth::Undef,
            (Truth::True, true) | (Truth::False, false) => Truth::True,
            _ => Truth::False,
        }
    }

    /// Conjunctive body truth: true iff all literals true, false iff some
    /// literal false, undefined otherwise.
    pub fn body_truth(&self, body: &[Literal]) -> Truth {
        let mut all_true = true;
        for &lit in body {
            match self.literal_truth(lit) {
                Truth::False => return Truth::False,
                Truth::Undef => all_true = false,
                Truth::True => {}
            }
        }
        if all_true {
            Truth::True
        } else {
            Truth::Undef
        }
    }

    /// Containment on decided atoms.
    pub fn subset_of(&self, other: &PartialInterpretation) -> bool {
        self.values
            .iter()
            .all(|(a, v)| other.values.get(a) == Some(v))
    }
}

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum Quantifier {
    Exists,
    Forall,
}

impl Quantifier {
    pub fn is_exists(self) -> bool {
        matches!(self, Quantifier::Exists)
    }
}

/// A quantifier-prefixed program `Q1 P1 ... Qn Pn : C` with a shared symbol
/// table. `C` must be stratified; the level list must be non-empty.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QuantifiedProgram {
    pub levels: Vec<(Quantifier, Vec<Rule>)>,
    pub constraint: Vec<Rule>,
    pub symbols: SymbolTable,
}

impl QuantifiedProgram {
    pub fn new(
        levels: Vec<(Quantifier, Vec<Rule>)>,
        constraint: Vec<Rule>,
        symbols: SymbolTable,
    ) -> Result<Self, ModelError> {
        if levels.is_empty() {
            return Err(ModelError::EmptyQuantifierList);
        }
        let qp = QuantifiedProgram { levels, constraint, symbols };
        if !qp.constraint_program().is_stratified() {
            return Err(ModelError::UnstratifiedConstraint);
        }
        Ok(qp)
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Level program `Pi`, 1-based.
    pub fn level_program(&self, i: usize) -> Program {
        Program::new(self.levels[i - 1].1.clone(), self.symbols.clone())
    }

    pub fn quantifier(&self, i: usize) -> Quantifier {
        self.levels[i - 1].0
    }

    pub fn constraint_program(&self) -> Program {
        Program::new(self.constraint.clone(), self.symbols.clone())
    }

    /// Subprogram at position `i` in 1..=n+1, where n+1 denotes `C`.
    pub fn subprogram(&self, i: usize) -> Result<Program, ModelError> {
        let n = self.level_count();
        if i == 0 || i > n + 1 {
            return Err(ModelError::LevelOutOfRange { index: i, levels: n });
        }
        if i == n + 1 {
            Ok(self.constraint_program())
        } else {
            Ok(self.level_program(i))
        }
    }

    /// Union of the subprograms `P1 ... Pi` over the shared symbol table.
    pub fn prefix_union(&self, i: usize) -> Result<Program, ModelError> {
        let n = self.level_count();
        if i == 0 || i > n {
            return Err(ModelError::LevelOutOfRange { index: i, levels: n });
        }
        let rules = self.levels[..i]
            .iter()
            .flat_map(|(_, rules)| rules.iter().cloned())
            .collect();
        Ok(Program::new(rules, self.symbols.clone()))
    }
}

/// `fix_P(I)`: the facts and constraints pinning a total model of `program`.
pub fn fix(program: &Program, model: &PartialInterpretation) -> Result<Program, ModelError> {
    let base = program.herbrand_base();
    let mut rules = Vec::with_capacity(base.len());
    for &a in &base {
        match model.truth(a) {
            Truth::True => rules.push(Rule::fact(a)),
            Truth::False => rules.push(Rule::constraint(vec![Literal::pos(a)])),
            Truth::Undef => return Err(ModelError::NonTotalModel),
        }
    }
    Ok(Program::new(rules, program.symbols.clone()))
}

/// Atoms common to the bases of two programs.
pub fn interface_atoms(p: &Program, q: &Program) -> BTreeSet<Atom> {
    p.herbrand_base()
        .intersection(&q.herbrand_base())
        .copied()
        .collect()
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ModelError {
    NonTotalModel,
    LevelOutOfRange { index: usize, levels: usize },
    EmptyQuantifierList,
    UnstratifiedConstraint,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::NonTotalModel => write!(f, "model is not total over the program base"),
            ModelError::LevelOutOfRange { index, levels } => {
                write!(f, "level index {index} out of range (program has {levels} levels)")
            }
            ModelError::EmptyQuantifierList => write!(f, "quantifier list is empty"),
            ModelError::UnstratifiedConstraint => {
                write!(f, "constraint program is not stratified")
            }
        }
    }
}

impl std::error::Error for ModelError {}
