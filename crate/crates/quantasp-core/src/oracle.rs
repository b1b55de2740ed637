//! Brute-force reference semantics: answer-set enumeration through the
//! reduct definition and recursive coherence of quantified programs. Slow by
//! design and used as ground truth by the test suites and the `check`
//! command.

use std::collections::BTreeSet;
use std::fmt;

use crate::model::{
    fix, Atom, Head, Literal, PartialInterpretation, Program, QuantifiedProgram, Quantifier, Rule,
};

#[derive(Clone, Debug)]
pub struct OracleLimits {
    /// Largest Herbrand base answer-set enumeration will accept.
    pub max_base_atoms: usize,
    /// Total budget on enumerated candidate interpretations across one call.
    pub max_steps: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_base_atoms: 20, max_steps: 1 << 18 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleError {
    BaseTooLarge { atoms: usize, limit: usize },
    BudgetExceeded { limit: u64 },
    NotExistential,
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::BaseTooLarge { atoms, limit } => {
                write!(f, "herbrand base has {atoms} atoms, enumeration limit is {limit}")
            }
            OracleError::BudgetExceeded { limit } => {
                write!(f, "oracle step budget of {limit} exceeded")
            }
            OracleError::NotExistential => {
                write!(f, "quantified answer sets are defined for existential programs only")
            }
        }
    }
}

impl std::error::Error for OracleError {}

/// All answer sets of a program, as sets of true atoms over `base`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnswerSetCollection {
    pub base: BTreeSet<Atom>,
    pub models: BTreeSet<BTreeSet<Atom>>,
}

struct Budget<'a> {
    limits: &'a OracleLimits,
    steps: u64,
}

impl<'a> Budget<'a> {
    fn spend(&mut self, steps: u64) -> Result<(), OracleError> {
        self.steps += steps;
        if self.steps > self.limits.max_steps {
            Err(OracleError::BudgetExceeded { limit: self.limits.max_steps })
        } else {
            Ok(())
        }
    }
}

/// Enumerate all total interpretations and keep those that are models whose
/// positive part is a minimal model of the reduct. Minimality is checked
/// two ways, by subset enumeration and by the least fixpoint of the positive
/// reduct; a disagreement would mean the oracle itself is broken.
pub fn answer_sets(program: &Program, limits: &OracleLimits) -> Result<AnswerSetCollection, OracleError> {
    let mut budget = Budget { limits, steps: 0 };
    answer_sets_budgeted(program, &mut budget)
}

fn answer_sets_budgeted(
    program: &Program,
    budget: &mut Budget<'_>,
) -> Result<AnswerSetCollection, OracleError> {
    let base = program.herbrand_base();
    if base.len() > budget.limits.max_base_atoms {
        return Err(OracleError::BaseTooLarge {
            atoms: base.len(),
            limit: budget.limits.max_base_atoms,
        });
    }

    // Facts force membership and single-literal positive constraints force
    // absence in every (classical) model, so interpretations violating them
    // can be skipped instead of enumerated and rejected.
    let mut forced_true = BTreeSet::new();
    let mut forced_false = BTreeSet::new();
    for rule in &program.rules {
        if rule.is_fact() {
            forced_true.extend(rule.head_atoms());
        }
        if rule.is_constraint() && rule.body.len() == 1 && rule.body[0].positive {
            forced_false.insert(rule.body[0].atom);
        }
    }
    let mut models = BTreeSet::new();
    if forced_true.intersection(&forced_false).next().is_some() {
        return Ok(AnswerSetCollection { base, models });
    }
    let free: Vec<Atom> = base
        .iter()
        .copied()
        .filter(|a| !forced_true.contains(a) && !forced_false.contains(a))
        .collect();

    for mask in 0u64..(1u64 << free.len()) {
        budget.spend(1)?;
        let mut true_atoms: BTreeSet<Atom> = forced_true.clone();
        for (i, &a) in free.iter().enumerate() {
            if mask & (1 << i) != 0 {
                true_atoms.insert(a);
            }
        }
        if !is_model(program, &true_atoms) {
            continue;
        }
        let reduct = gl_reduct(program, &true_atoms);
        let least = positive_least_model(&reduct, &base);
        let fixpoint_minimal = least == true_atoms;
        if true_atoms.len() <= 12 {
            let subset_minimal = subset_minimal_model(&reduct, &true_atoms, budget)?;
            assert_eq!(
                subset_minimal, fixpoint_minimal,
                "oracle self-check: minimality routes disagree"
            );
        }
        if fixpoint_minimal {
            models.insert(true_atoms);
        }
    }
    Ok(AnswerSetCollection { base, models })
}

/// Classical model check. Choice heads never falsify a rule; a constraint is
/// satisfied unless its body is true.
fn is_model(program: &Program, true_atoms: &BTreeSet<Atom>) -> bool {
    program.rules.iter().all(|rule| {
        let body_true = body_true(&rule.body, true_atoms);
        match &rule.head {
            Head::Atom(a) => !body_true || true_atoms.contains(a),
            Head::Choice(_) => true,
            Head::None => !body_true,
        }
    })
}

fn body_true(body: &[Literal], true_atoms: &BTreeSet<Atom>) -> bool {
    body.iter()
        .all(|l| true_atoms.contains(&l.atom) == l.positive)
}

/// Positive rules surviving the Gelfond-Lifschitz transformation. A choice
/// rule contributes `a <- body+` for each chosen atom, so chosen atoms are
/// self-supported; constraints contribute nothing.
fn gl_reduct(program: &Program, true_atoms: &BTreeSet<Atom>) -> Vec<(Atom, Vec<Atom>)> {
    let mut reduct = Vec::new();
    for rule in &program.rules {
        let negative_part_true = rule
            .body
            .iter()
            .filter(|l| !l.positive)
            .all(|l| !true_atoms.contains(&l.atom));
        if !negative_part_true {
            continue;
        }
        let positive_body: Vec<Atom> = rule
            .body
            .iter()
            .filter(|l| l.positive)
            .map(|l| l.atom)
            .collect();
        match &rule.head {
            Head::Atom(a) => reduct.push((*a, positive_body.clone())),
            Head::Choice(atoms) => {
                for a in atoms {
                    if true_atoms.contains(a) {
                        reduct.push((*a, positive_body.clone()));
                    }
                }
            }
            Head::None => {}
        }
    }
    reduct
}

fn positive_least_model(reduct: &[(Atom, Vec<Atom>)], _base: &BTreeSet<Atom>) -> BTreeSet<Atom> {
    let mut derived = BTreeSet::new();
    loop {
        let mut changed = false;
        for (head, body) in reduct {
            if !derived.contains(head) && body.iter().all(|a| derived.contains(a)) {
                derived.insert(*head);
                changed = true;
            }
        }
        if !changed {
            return derived;
        }
    }
}

/// `candidate` is a minimal model of the positive reduct: it satisfies every
/// rule and no proper subset does.
fn subset_minimal_model(
    reduct: &[(Atom, Vec<Atom>)],
    candidate: &BTreeSet<Atom>,
    budget: &mut Budget<'_>,
) -> Result<bool, OracleError> {
    let satisfies = |atoms: &BTreeSet<Atom>| {
        reduct
            .iter()
            .all(|(head, body)| !body.iter().all(|a| atoms.contains(a)) || atoms.contains(head))
    };
    if !satisfies(candidate) {
        return Ok(false);
    }
    let members: Vec<Atom> = candidate.iter().copied().collect();
    let subsets = 1u64 << members.len();
    budget.spend(subsets)?;
    for mask in 0..subsets - 1 {
        let subset: BTreeSet<Atom> = members
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &a)| a)
            .collect();
        if satisfies(&subset) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Coherence of a quantified program by direct recursion on its definition:
/// an existential level needs some answer set whose fixing leaves the rest
/// coherent, a universal level needs that for every answer set.
pub fn coherence(qp: &QuantifiedProgram, limits: &OracleLimits) -> Result<bool, OracleError> {
    let mut budget = Budget { limits, steps: 0 };
    let first = qp.level_program(1);
    coherence_from(qp, 1, first, &mut budget)
}

fn coherence_from(
    qp: &QuantifiedProgram,
    level: usize,
    program: Program,
    budget: &mut Budget<'_>,
) -> Result<bool, OracleError> {
    let n = qp.level_count();
    let collection = answer_sets_budgeted(&program, budget)?;
    let quantifier = qp.quantifier(level);
    for model in &collection.models {
        let interp = PartialInterpretation::total(collection.base.clone(), model);
        let fixing = fix(&program, &interp).expect("enumerated models are total");
        let next = if level == n {
            extend(&qp.constraint_program(), &fixing)
        } else {
            extend(&qp.level_program(level + 1), &fixing)
        };
        let holds = if level == n {
            !answer_sets_budgeted(&next, budget)?.models.is_empty()
        } else {
            coherence_from(qp, level + 1, next, budget)?
        };
        match quantifier {
            Quantifier::Exists if holds => return Ok(true),
            Quantifier::Forall if !holds => return Ok(false),
            _ => {}
        }
    }
    Ok(matches!(quantifier, Quantifier::Forall))
}

fn extend(program: &Program, fixing: &Program) -> Program {
    let mut rules: Vec<Rule> = program.rules.clone();
    rules.extend(fixing.rules.iter().cloned());
    Program::new(rules, program.symbols.clone())
}

/// Quantified answer sets of an existential program: the first-level answer
/// sets whose fixing leaves the remaining program coherent.
pub fn quantified_answer_sets(
    qp: &QuantifiedProgram,
    limits: &OracleLimits,
) -> Result<BTreeSet<BTreeSet<Atom>>, OracleError> {
    if qp.quantifier(1) != Quantifier::Exists {
        return Err(OracleError::NotExistential);
    }
    let mut budget = Budget { limits, steps: 0 };
    let first = qp.level_program(1);
    let collection = answer_sets_budgeted(&first, &mut budget)?;
    let n = qp.level_count();
    let mut witnesses = BTreeSet::new();
    for model in &collection.models {
        let interp = PartialInterpretation::total(collection.base.clone(), model);
        let fixing = fix(&first, &interp).expect("enumerated models are total");
        let next = if n == 1 {
            extend(&qp.constraint_program(), &fixing)
        } else {
            extend(&qp.level_program(2), &fixing)
        };
        let holds = if n == 1 {
            !answer_sets_budgeted(&next, &mut budget)?.models.is_empty()
        } else {
            coherence_from(qp, 2, next, &mut budget)?
        };
        if holds {
            witnesses.insert(model.clone());
        }
    }
    Ok(witnesses)
}
