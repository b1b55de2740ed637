//! Guess&Check detection and rewriting: splitting a level into a choice-only
//! guess and a stratified check, moving the check into the next level behind
//! a fresh unsatisfiability witness atom, and chaining that rewrite until
//! every universal level is a plain choice program.

use std::collections::BTreeSet;
use std::fmt;

use crate::model::{
    interface_atoms, Atom, Head, Literal, ModelError, Program, QuantifiedProgram, Quantifier, Rule,
};

/// Partition of a program into a guess of empty-body choice rules and a
/// stratified check whose heads are disjoint from the guessed atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GcSplit {
    pub guess: Program,
    pub check: Program,
    /// The fresh witness atom, once the constraint-to-witness rewrite ran.
    pub unsat_atom: Option<Atom>,
}

/// Why a program is not Guess&Check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NotGc {
    BodiedChoiceRule,
    CheckDefinesGuessedAtom { atom: String },
    CheckNotStratified,
}

impl fmt::Display for NotGc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NotGc::BodiedChoiceRule => write!(f, "guess part contains a choice rule with a body"),
            NotGc::CheckDefinesGuessedAtom { atom } => {
                write!(f, "check part defines guessed atom `{atom}`")
            }
            NotGc::CheckNotStratified => write!(f, "check part is not stratified"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GcError {
    NotGuessCheck { level: usize, reason: NotGc },
    WrongQuantifier { level: usize },
    QuantifiersNotAlternating { level: usize },
    LevelOutOfRange { index: usize, levels: usize },
    WitnessCollision { name: String },
    Rebuild(ModelError),
}

impl fmt::Display for GcError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GcError::NotGuessCheck { level, reason } => {
                write!(f, "level {level} is not Guess&Check: {reason}")
            }
            GcError::WrongQuantifier { level } => {
                write!(f, "level {level} is not universally quantified")
            }
            GcError::QuantifiersNotAlternating { level } => {
                write!(f, "quantifiers do not alternate at level {level}")
            }
            GcError::LevelOutOfRange { index, levels } => {
                write!(f, "level index {index} out of range (program has {levels} levels)")
            }
            GcError::WitnessCollision { name } => {
                write!(f, "witness atom `{name}` already occurs in the program")
            }
            GcError::Rebuild(e) => write!(f, "rewritten program is ill-formed: {e}"),
        }
    }
}

impl std::error::Error for GcError {}

/// Report on whether a level can be elided from the matrix.
#[derive(Clone, Debug)]
pub struct TrivialityReport {
    pub level: usize,
    /// Sufficient syntactic criterion: the level consists solely of
    /// empty-body choice rules and its earlier interfaces are facts there.
    pub syntactically_trivial: bool,
    /// Head atoms of the level shared with any later subprogram.
    pub ext_atoms: BTreeSet<Atom>,
    /// Every atom shared with an earlier level is a fact at that level.
    pub interface_ok: bool,
}

/// Head atoms of level `i` that occur in any later level or the constraint
/// program.
pub fn ext_atoms(qp: &QuantifiedProgram, i: usize) -> Result<BTreeSet<Atom>, GcError> {
    let n = qp.level_count();
    if i == 0 || i > n {
        return Err(GcError::LevelOutOfRange { index: i, levels: n });
    }
    let level = qp.level_program(i);
    let heads = level.heads();
    let mut shared_later = BTreeSet::new();
    for j in (i + 1)..=(n + 1) {
        let later = qp.subprogram(j).expect("in range");
        shared_later.extend(interface_atoms(&level, &later));
    }
    Ok(heads.intersection(&shared_later).copied().collect())
}

pub fn check_trivial(qp: &QuantifiedProgram, i: usize) -> Result<TrivialityReport, GcError> {
    let ext = ext_atoms(qp, i)?;
    let level = qp.level_program(i);
    let mut interface_ok = true;
    for j in 1..i {
        let earlier = qp.level_program(j);
        let shared = interface_atoms(&level, &earlier);
        if !shared.is_subset(&earlier.fact_atoms()) {
            interface_ok = false;
            break;
        }
    }
    let only_choices = level
        .rules
        .iter()
        .all(|r| r.is_choice() && r.body.is_empty());
    let covers_ext = ext.is_subset(&level.heads());
    let syntactically_trivial = interface_ok && only_choices && covers_ext;
    Ok(TrivialityReport { level: i, syntactically_trivial, ext_atoms: ext, interface_ok })
}

/// Split into choice-only guess and stratified check with disjoint heads.
pub fn split_guess_check(program: &Program) -> Result<GcSplit, NotGc> {
    let mut guess_rules = Vec::new();
    let mut check_rules = Vec::new();
    for rule in &program.rules {
        if rule.is_choice() {
            if !rule.body.is_empty() {
                return Err(NotGc::BodiedChoiceRule);
            }
            guess_rules.push(rule.clone());
        } else {
            check_rules.push(rule.clone());
        }
    }
    let guess = Program::new(guess_rules, program.symbols.clone());
    let check = Program::new(check_rules, program.symbols.clone());
    let guessed = guess.herbrand_base();
    for atom in check.heads() {
        if guessed.contains(&atom) {
            return Err(NotGc::CheckDefinesGuessedAtom {
                atom: program.symbols.name(atom).to_string(),
            });
        }
    }
    if !check.is_stratified() {
        return Err(NotGc::CheckNotStratified);
    }
    Ok(GcSplit { guess, check, unsat_atom: None })
}

/// Check rules keep their heads; check constraints derive the witness atom.
pub fn tau(unsat: Atom, split: &GcSplit) -> Vec<Rule> {
    split
        .check
        .rules
        .iter()
        .map(|rule| match &rule.head {
            Head::None => Rule::normal(unsat, rule.body.clone()),
            _ => rule.clone(),
        })
        .collect()
}

/// Guard every rule (constraints included) with the witness being false.
pub fn rho(unsat: Atom, rules: &[Rule]) -> Vec<Rule> {
    rules
        .iter()
        .map(|rule| {
            let mut body = rule.body.clone();
            body.push(Literal::neg(unsat));
            Rule { head: rule.head.clone(), body }
        })
        .collect()
}

/// `tau` of the rewritten level followed by `rho` of its successor.
pub fn sigma(unsat: Atom, split: &GcSplit, next: &[Rule]) -> Vec<Rule> {
    let mut rules = tau(unsat, split);
    rules.extend(rho(unsat, next));
    rules
}

/// Rewrite universal Guess&Check level `i`: the level keeps only its guess,
/// the check moves behind a fresh witness atom into the next program, and
/// two levels down the witness is forbidden outright.
pub fn gc_rewrite_level(qp: &QuantifiedProgram, i: usize) -> Result<QuantifiedProgram, GcError> {
    let n = qp.level_count();
    if i == 0 || i > n {
        return Err(GcError::LevelOutOfRange { index: i, levels: n });
    }
    if qp.quantifier(i) != Quantifier::Forall {
        return Err(GcError::WrongQuantifier { level: i });
    }
    let level = qp.level_program(i);
    let split =
        split_guess_check(&level).map_err(|reason| GcError::NotGuessCheck { level: i, reason })?;

    let mut symbols = qp.symbols.clone();
    let stem = format!("_u_{i}");
    if symbols.lookup(&stem).is_some() {
        // fresh() would disambiguate, but a collision here means generated
        // names leaked into user input and deserves a hard error
        return Err(GcError::WitnessCollision { name: stem });
    }
    let unsat = symbols.fresh(&stem);

    let mut levels = qp.levels.clone();
    let mut constraint = qp.constraint.clone();
    levels[i - 1] = (Quantifier::Forall, split.guess.rules.clone());
    if i == n {
        constraint = sigma(unsat, &split, &constraint);
    } else if i == n - 1 {
        levels[i] = (Quantifier::Exists, sigma(unsat, &split, &levels[i].1.clone()));
        constraint = rho(unsat, &constraint);
    } else {
        levels[i] = (Quantifier::Exists, sigma(unsat, &split, &levels[i].1.clone()));
        levels[i + 1].1.push(Rule::constraint(vec![Literal::pos(unsat)]));
    }
    QuantifiedProgram::new(levels, constraint, symbols).map_err(GcError::Rebuild)
}

/// Whether the program is Guess&Check as a whole: alternating quantifiers
/// and every universal level splits.
pub fn is_guess_check(qp: &QuantifiedProgram) -> Result<(), GcError> {
    for i in 2..=qp.level_count() {
        if qp.quantifier(i) == qp.quantifier(i - 1) {
            return Err(GcError::QuantifiersNotAlternating { level: i });
        }
    }
    for i in 1..=qp.level_count() {
        if qp.quantifier(i) == Quantifier::Forall {
            split_guess_check(&qp.level_program(i))
                .map_err(|reason| GcError::NotGuessCheck { level: i, reason })?;
        }
    }
    Ok(())
}

/// Fold the level rewrite over every universal level, producing a program
/// in which each universal level is a pure choice program.
pub fn gc_chain(qp: &QuantifiedProgram) -> Result<QuantifiedProgram, GcError> {
    is_guess_check(qp)?;
    let mut current = qp.clone();
    for i in 1..=qp.level_count() {
        if current.quantifier(i) == Quantifier::Forall {
            current = gc_rewrite_level(&current, i)?;
        }
    }
    Ok(current)
}
