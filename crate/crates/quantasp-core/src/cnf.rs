//! Clause-level encoding of normal programs: Clark completion plus explicit
//! loop formulas, so that models of the encoding correspond one-to-one to
//! the answer sets of the program over its base. Constraint-marker atoms
//! and other functionally determined plumbing variables are propagated away
//! before the formula is handed out.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::graph::strongly_connected_components;
use crate::model::{Atom, Head, Program, SymbolTable};

/// 1-based variable index.
pub type Var = u32;
/// Signed variable; positive for the variable, negative for its negation.
pub type Lit = i32;

pub fn lit(var: Var, positive: bool) -> Lit {
    if positive {
        var as Lit
    } else {
        -(var as Lit)
    }
}

pub fn lit_var(l: Lit) -> Var {
    l.unsigned_abs()
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CnfVarKind {
    /// A program atom.
    Atom(Atom),
    /// Conjunction variable for the `index`-th multi-literal body of `head`.
    Body { head: Atom, index: u32 },
    /// Free-form auxiliary (gate selectors and similar).
    Named(String),
}

/// A clause set with its variable table. Clauses are kept normalized: sorted
/// by variable, duplicate literals removed, tautologies and duplicate
/// clauses dropped. An unsatisfiable propagation result is canonicalized to
/// the single empty clause.
#[derive(Clone, Debug, Default)]
pub struct CnfFormula {
    clauses: Vec<Vec<Lit>>,
    vars: Vec<CnfVarKind>,
    atom_var: HashMap<Atom, Var>,
    seen: HashSet<Vec<Lit>>,
}

impl CnfFormula {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn var_kind(&self, var: Var) -> &CnfVarKind {
        &self.vars[(var - 1) as usize]
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> {
        (1..=self.vars.len() as Var).into_iter()
    }

    pub fn var_of_atom(&self, atom: Atom) -> Option<Var> {
        self.atom_var.get(&atom).copied()
    }

    /// Variables that do not stand for a program atom.
    pub fn aux_vars(&self) -> Vec<Var> {
        self.vars()
            .filter(|&v| !matches!(self.var_kind(v), CnfVarKind::Atom(_)))
            .collect()
    }

    pub fn atom_of_var(&self, var: Var) -> Option<Atom> {
        match self.var_kind(var) {
            CnfVarKind::Atom(a) => Some(*a),
            _ => None,
        }
    }

    pub fn var_name(&self, var: Var, symbols: &SymbolTable) -> String {
        match self.var_kind(var) {
            CnfVarKind::Atom(a) => symbols.name(*a).to_string(),
            CnfVarKind::Body { head, index } => {
                format!("_t_{}_{}", symbols.name(*head), index)
            }
            CnfVarKind::Named(name) => name.clone(),
        }
    }

    pub fn intern_atom(&mut self, atom: Atom) -> Var {
        if let Some(&v) = self.atom_var.get(&atom) {
            return v;
        }
        self.vars.push(CnfVarKind::Atom(atom));
        let v = self.vars.len() as Var;
        self.atom_var.insert(atom, v);
        v
    }

    pub fn add_var(&mut self, kind: CnfVarKind) -> Var {
        if let CnfVarKind::Atom(a) = kind {
            return self.intern_atom(a);
        }
        self.vars.push(kind);
        self.vars.len() as Var
    }

    fn body_var(&self, head: Atom, index: u32) -> Option<Var> {
        self.vars.iter().position(|k| match k {
            CnfVarKind::Body { head: h, index: i } => *h == head && *i == index,
            _ => false,
        })
        .map(|p| (p + 1) as Var)
    }

    /// Normalize and add a clause; tautologies and repeats are ignored.
    /// Returns whether the clause was kept.
    pub fn push_clause(&mut self, clause: Vec<Lit>) -> bool {
        let mut clause = clause;
        clause.sort_by_key(|&l| (lit_var(l), l < 0));
        clause.dedup();
        let tautology = clause
            .windows(2)
            .any(|w| lit_var(w[0]) == lit_var(w[1]));
        if tautology {
            return false;
        }
        debug_assert!(clause.iter().all(|&l| lit_var(l) as usize <= self.vars.len()));
        if self.seen.insert(clause.clone()) {
            self.clauses.push(clause);
            true
        } else {
            false
        }
    }

    /// Replace the clause set with the canonical unsatisfiable formula.
    fn mark_unsat(&mut self) {
        self.clauses = vec![Vec::new()];
        self.seen.clear();
        self.seen.insert(Vec::new());
    }

    pub fn is_canonically_unsat(&self) -> bool {
        self.clauses.iter().any(|c| c.is_empty())
    }

    /// Drop variables that occur in no clause and renumber densely,
    /// preserving relative order.
    fn compact(&mut self) {
        let mut used = vec![false; self.vars.len()];
        for clause in &self.clauses {
            for &l in clause {
                used[(lit_var(l) - 1) as usize] = true;
            }
        }
        let mut remap: Vec<Option<Var>> = vec![None; self.vars.len()];
        let mut kept = Vec::new();
        for (i, kind) in self.vars.iter().enumerate() {
            if used[i] {
                kept.push(kind.clone());
                remap[i] = Some(kept.len() as Var);
            }
        }
        for clause in &mut self.clauses {
            for l in clause.iter_mut() {
                let v = remap[(lit_var(*l) - 1) as usize].expect("used var survives");
                *l = lit(v, *l > 0);
            }
        }
        self.vars = kept;
        self.atom_var = self
            .vars
            .iter()
            .enumerate()
            .filter_map(|(i, k)| match k {
                CnfVarKind::Atom(a) => Some((*a, (i + 1) as Var)),
                _ => None,
            })
            .collect();
        self.seen = self.clauses.iter().cloned().collect();
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CnfError {
    NonNormalRule,
    SccTooLarge { atoms: Vec<String>, bound: usize },
}

impl fmt::Display for CnfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CnfError::NonNormalRule => write!(f, "encoder requires a desugared (normal) program"),
            CnfError::SccTooLarge { atoms, bound } => write!(
                f,
                "non-tight component too large for loop enumeration (bound {bound}): {{{}}}",
                atoms.join(", ")
            ),
        }
    }
}

impl std::error::Error for CnfError {}

/// Default cap on the size of a strongly connected component for explicit
/// loop enumeration.
pub const DEFAULT_SCC_BOUND: usize = 12;

/// How a rule body is referenced inside the encoding.
enum BodyRef {
    True,
    Literal(Lit),
    Aux(Var),
}

/// Clark completion. Every atom `a` with rule bodies `B1..Bk` contributes
/// `a <-> (d1 | ... | dk)` where each multi-literal body gets a defining
/// conjunction variable; single-literal bodies are referenced directly and
/// a fact collapses the completion to a unit clause.
pub fn clark_completion(program: &Program) -> Result<CnfFormula, CnfError> {
    if !program.is_normal() {
        return Err(CnfError::NonNormalRule);
    }
    let base = program.herbrand_base();
    let mut cnf = CnfFormula::new();
    for &a in &base {
        cnf.intern_atom(a);
    }
    for &a in &base {
        let bodies: Vec<&Vec<crate::model::Literal>> = program
            .rules
            .iter()
            .filter(|r| matches!(r.head, Head::Atom(h) if h == a))
            .map(|r| &r.body)
            .collect();
        let head_var = cnf.var_of_atom(a).expect("base atom interned");
        if bodies.iter().any(|b| b.is_empty()) {
            cnf.push_clause(vec![lit(head_var, true)]);
            continue;
        }
        if bodies.is_empty() {
            cnf.push_clause(vec![lit(head_var, false)]);
            continue;
        }
        if bodies.len() == 1 && bodies[0].len() > 1 {
            // single defining rule: a <-> (l1 & ... & lk), no body variable
            let body = bodies[0];
            let mut closing = vec![lit(head_var, true)];
            for &l in body.iter() {
                let v = cnf.intern_atom(l.atom);
                cnf.push_clause(vec![lit(head_var, false), lit(v, l.positive)]);
                closing.push(lit(v, !l.positive));
            }
            cnf.push_clause(closing);
            continue;
        }
        let mut disjuncts = Vec::with_capacity(bodies.len());
        let mut multi_index = 0u32;
        for body in &bodies {
            if body.len() == 1 {
                let l = body[0];
                let v = cnf.intern_atom(l.atom);
                disjuncts.push(lit(v, l.positive));
            } else {
                multi_index += 1;
                let t = define_body_var(&mut cnf, a, multi_index, body);
                disjuncts.push(lit(t, true));
            }
        }
        let mut support = vec![lit(head_var, false)];
        support.extend(disjuncts.iter().copied());
        cnf.push_clause(support);
        for &d in &disjuncts {
            cnf.push_clause(vec![lit(head_var, true), -d]);
        }
    }
    Ok(cnf)
}

/// Add a loop formula for every loop of the positive dependency graph:
/// each non-empty atom set inducing a strongly connected positive subgraph
/// gets `(a -> external supports)` clauses for each of its atoms. Loops are
/// enumerated per strongly connected component; a component larger than
/// `bound` is an error rather than a blowup.
pub fn loop_formulas(
    program: &Program,
    completion: &CnfFormula,
    bound: usize,
) -> Result<CnfFormula, CnfError> {
    if !program.is_normal() {
        return Err(CnfError::NonNormalRule);
    }
    let mut cnf = completion.clone();
    let base: Vec<Atom> = program.herbrand_base().into_iter().collect();
    let index: BTreeMap<Atom, usize> = base.iter().enumerate().map(|(i, &a)| (a, i)).collect();

    let mut adj = vec![Vec::new(); base.len()];
    let mut edge_set = HashSet::new();
    for rule in &program.rules {
        if let Head::Atom(head) = rule.head {
            for l in rule.body.iter().filter(|l| l.positive) {
                if edge_set.insert((l.atom, head)) {
                    adj[index[&l.atom]].push(index[&head]);
                }
            }
        }
    }
    for targets in &mut adj {
        targets.sort_unstable();
    }
    let comp = strongly_connected_components(&adj);

    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (node, &c) in comp.iter().enumerate() {
        components.entry(c).or_default().push(node);
    }

    // fact heads never need loop support
    let fact_heads = program.fact_atoms();

    let mut scc_list: Vec<Vec<usize>> = components.into_values().collect();
    scc_list.sort_by_key(|nodes| nodes[0]);
    for nodes in scc_list {
        let has_self_loop = nodes.len() == 1 && adj[nodes[0]].contains(&nodes[0]);
        if nodes.len() == 1 && !has_self_loop {
            continue;
        }
        if nodes.len() > bound {
            return Err(CnfError::SccTooLarge {
                atoms: nodes
                    .iter()
                    .map(|&n| program.symbols.name(base[n]).to_string())
                    .collect(),
                bound,
            });
        }
        for mask in 1u32..(1u32 << nodes.len()) {
            let members: Vec<usize> = (0..nodes.len())
                .filter(|&i| mask & (1 << i) != 0)
                .map(|i| nodes[i])
                .collect();
            if !induces_cycle(&members, &adj) {
                continue;
            }
            let loop_atoms: BTreeSet<Atom> = members.iter().map(|&n| base[n]).collect();
            if loop_atoms.iter().any(|a| fact_heads.contains(a)) {
                continue;
            }
            let mut supports = Vec::new();
            let mut trivially_supported = false;
            for a in &loop_atoms {
                let mut multi_index = 0u32;
                for rule in program.rules.iter() {
                    let head = match rule.head {
                        Head::Atom(h) => h,
                        _ => continue,
                    };
                    if head != *a {
                        continue;
                    }
                    let is_multi = rule.body.len() > 1;
                    if is_multi {
                        multi_index += 1;
                    }
                    if rule
                        .body
                        .iter()
                        .any(|l| l.positive && loop_atoms.contains(&l.atom))
                    {
                        continue;
                    }
                    match body_reference(&mut cnf, rule, head, multi_index) {
                        BodyRef::True => {
                            trivially_supported = true;
                            break;
                        }
                        BodyRef::Literal(l) => supports.push(l),
                        BodyRef::Aux(v) => supports.push(lit(v, true)),
                    }
                }
                if trivially_supported {
                    break;
                }
            }
            if trivially_supported {
                continue;
            }
            supports.sort_unstable();
            supports.dedup();
            for a in &loop_atoms {
                let head_var = cnf.var_of_atom(*a).expect("loop atom interned");
                let mut clause = vec![lit(head_var, false)];
                clause.extend(supports.iter().copied());
                cnf.push_clause(clause);
            }
        }
    }
    Ok(cnf)
}

/// Variable defined as the conjunction of `body`, with both implication
/// directions so it stays functionally determined.
fn define_body_var(
    cnf: &mut CnfFormula,
    head: Atom,
    index: u32,
    body: &[crate::model::Literal],
) -> Var {
    let t = cnf.add_var(CnfVarKind::Body { head, index });
    let mut closing = vec![lit(t, true)];
    for &l in body {
        let v = cnf.intern_atom(l.atom);
        cnf.push_clause(vec![lit(t, false), lit(v, l.positive)]);
        closing.push(lit(v, !l.positive));
    }
    cnf.push_clause(closing);
    t
}

fn body_reference(
    cnf: &mut CnfFormula,
    rule: &crate::model::Rule,
    head: Atom,
    multi_index: u32,
) -> BodyRef {
    match rule.body.len() {
        0 => BodyRef::True,
        1 => {
            let l = rule.body[0];
            let v = cnf.intern_atom(l.atom);
            BodyRef::Literal(lit(v, l.positive))
        }
        // bodies the completion referenced directly (single defining rule or
        // a head that also has a fact) get their variable on first demand
        _ => match cnf.body_var(head, multi_index) {
            Some(v) => BodyRef::Aux(v),
            None => BodyRef::Aux(define_body_var(cnf, head, multi_index, &rule.body)),
        },
    }
}

/// Whether the induced positive subgraph on `members` is a loop: strongly
/// connected, with a singleton requiring a self-edge.
fn induces_cycle(members: &[usize], adj: &[Vec<usize>]) -> bool {
    if members.len() == 1 {
        return adj[members[0]].contains(&members[0]);
    }
    let inside: HashSet<usize> = members.iter().copied().collect();
    // reachability inside the set from the first member, then in reverse
    for reversed in [false, true] {
        let mut seen = HashSet::new();
        let mut stack = vec![members[0]];
        seen.insert(members[0]);
        while let Some(n) = stack.pop() {
            let next: Vec<usize> = if reversed {
                members
                    .iter()
                    .copied()
                    .filter(|&m| adj[m].contains(&n))
                    .collect()
            } else {
                adj[n].iter().copied().filter(|m| inside.contains(m)).collect()
            };
            for m in next {
                if seen.insert(m) {
                    stack.push(m);
                }
            }
        }
        if seen.len() != members.len() {
            return false;
        }
    }
    true
}

/// Full encoding: completion, loop formulas, then propagation of plumbing
/// variables (body conjunction variables and constraint markers), whose
/// values are functionally determined and carry no model information.
pub fn cnf_encode(program: &Program) -> Result<CnfFormula, CnfError> {
    cnf_encode_bounded(program, DEFAULT_SCC_BOUND)
}

pub fn cnf_encode_bounded(program: &Program, scc_bound: usize) -> Result<CnfFormula, CnfError> {
    let completion = clark_completion(program)?;
    let mut cnf = loop_formulas(program, &completion, scc_bound)?;
    eliminate_plumbing_units(&mut cnf, &program.symbols);
    cnf.compact();
    Ok(cnf)
}

fn is_plumbing(kind: &CnfVarKind, symbols: &SymbolTable) -> bool {
    match kind {
        CnfVarKind::Body { .. } | CnfVarKind::Named(_) => true,
        CnfVarKind::Atom(a) => symbols.name(*a).starts_with("_t_"),
    }
}

fn eliminate_plumbing_units(cnf: &mut CnfFormula, symbols: &SymbolTable) {
    let mut assignment: HashMap<Var, bool> = HashMap::new();
    loop {
        let mut changed = false;
        for clause in &cnf.clauses {
            if clause.len() != 1 {
                continue;
            }
            let l = clause[0];
            let v = lit_var(l);
            if !is_plumbing(cnf.var_kind(v), symbols) {
                continue;
            }
            match assignment.get(&v) {
                Some(&val) if val != (l > 0) => {
                    cnf.mark_unsat();
                    return;
                }
                Some(_) => {}
                None => {
                    assignment.insert(v, l > 0);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
        let old = std::mem::take(&mut cnf.clauses);
        cnf.seen.clear();
        let mut conflict = false;
        'clauses: for clause in old {
            let mut rewritten = Vec::with_capacity(clause.len());
            for l in clause {
                match assignment.get(&lit_var(l)) {
                    Some(&val) if val == (l > 0) => continue 'clauses,
                    Some(_) => {}
                    None => rewritten.push(l),
                }
            }
            if rewritten.is_empty() {
                conflict = true;
                break;
            }
            if cnf.seen.insert(rewritten.clone()) {
                cnf.clauses.push(rewritten);
            }
        }
        if conflict {
            cnf.mark_unsat();
            return;
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum IncoherenceVerdict {
    /// The formula is unsatisfiable.
    Incoherent,
    /// A model was found.
    Coherent,
    /// Propagation was silent and the formula is over the search limit.
    Unknown,
}

/// Best-effort unsatisfiability check: unit propagation always runs, and an
/// exhaustive search decides exactly when the variable count is within
/// `var_limit`.
pub fn bounded_incoherence_check(cnf: &CnfFormula, var_limit: usize) -> IncoherenceVerdict {
    match propagate_units(cnf) {
        Propagation::Conflict => return IncoherenceVerdict::Incoherent,
        Propagation::Satisfied => return IncoherenceVerdict::Coherent,
        Propagation::Open => {}
    }
    if cnf.num_vars() <= var_limit {
        if dpll_sat(cnf) {
            IncoherenceVerdict::Coherent
        } else {
            IncoherenceVerdict::Incoherent
        }
    } else {
        IncoherenceVerdict::Unknown
    }
}

pub const DEFAULT_INCOHERENCE_VAR_LIMIT: usize = 20;

enum Propagation {
    Conflict,
    Satisfied,
    Open,
}

fn propagate_units(cnf: &CnfFormula) -> Propagation {
    let mut assignment: HashMap<Var, bool> = HashMap::new();
    let mut clauses: Vec<Vec<Lit>> = cnf.clauses.clone();
    loop {
        let mut unit = None;
        for clause in &clauses {
            if clause.is_empty() {
                return Propagation::Conflict;
            }
            if clause.len() == 1 {
                unit = Some(clause[0]);
                break;
            }
        }
        let Some(l) = unit else {
            return if clauses.is_empty() {
                Propagation::Satisfied
            } else {
                Propagation::Open
            };
        };
        match assignment.get(&lit_var(l)) {
            Some(&v) if v != (l > 0) => return Propagation::Conflict,
            _ => {}
        }
        assignment.insert(lit_var(l), l > 0);
        let mut next = Vec::with_capacity(clauses.len());
        'clauses: for clause in clauses {
            let mut rewritten = Vec::with_capacity(clause.len());
            for x in clause {
                match assignment.get(&lit_var(x)) {
                    Some(&v) if v == (x > 0) => continue 'clauses,
                    Some(_) => {}
                    None => rewritten.push(x),
                }
            }
            if rewritten.is_empty() {
                return Propagation::Conflict;
            }
            next.push(rewritten);
        }
        clauses = next;
    }
}

fn dpll_sat(cnf: &CnfFormula) -> bool {
    fn solve(clauses: &[Vec<Lit>]) -> bool {
        // unit propagation
        let mut clauses: Vec<Vec<Lit>> = clauses.to_vec();
        let mut assigned: HashMap<Var, bool> = HashMap::new();
        loop {
            let unit = clauses.iter().find(|c| c.len() == 1).map(|c| c[0]);
            let Some(l) = unit else { break };
            assigned.insert(lit_var(l), l > 0);
            let mut next = Vec::with_capacity(clauses.len());
            'clauses: for clause in clauses {
                let mut rewritten = Vec::with_capacity(clause.len());
                for x in clause {
                    match assigned.get(&lit_var(x)) {
                        Some(&v) if v == (x > 0) => continue 'clauses,
                        Some(_) => {}
                        None => rewritten.push(x),
                    }
                }
                if rewritten.is_empty() {
                    return false;
                }
                next.push(rewritten);
            }
            clauses = next;
        }
        if clauses.is_empty() {
            return true;
        }
        let branch = clauses[0][0];
        for value in [branch, -branch] {
            let mut with = clauses.clone();
            with.push(vec![value]);
            if solve(&with) {
                return true;
            }
        }
        false
    }
    solve(&cnf.clauses)
}
