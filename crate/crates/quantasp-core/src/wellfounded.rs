//! Well-founded operator, residual program extraction, and the well-founded
//! choice interface used when propagating derived truths between levels.

use std::collections::BTreeSet;
use std::fmt;

use crate::model::{
    interface_atoms, Atom, PartialInterpretation, Program, Rule, Truth,
};

/// Outcome of the well-founded fixpoint on one program.
#[derive(Clone, Debug)]
pub struct WfResult {
    /// The (partial) well-founded model over the program base.
    pub model: PartialInterpretation,
    /// The program simplified by the model: rules with a false body dropped,
    /// true body literals deleted. Derived truths remain as facts.
    pub residual: Program,
    /// Set when the fixpoint assigns both values to some atom, which cannot
    /// happen for normal programs, or when a caller's incoherence check
    /// fires on the residual.
    pub trivially_incoherent: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WfError {
    NonNormalProgram,
}

impl fmt::Display for WfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WfError::NonNormalProgram => {
                write!(f, "well-founded operator requires a desugared (normal) program")
            }
        }
    }
}

impl std::error::Error for WfError {}

/// Immediate-consequence step: atoms with some rule whose body is true.
pub fn tp_step(program: &Program, interp: &PartialInterpretation) -> BTreeSet<Atom> {
    let mut derived = BTreeSet::new();
    for rule in &program.rules {
        if let crate::model::Head::Atom(head) = rule.head {
            if interp.body_truth(&rule.body) == Truth::True {
                derived.insert(head);
            }
        }
    }
    derived
}

/// Greatest unfounded set w.r.t. `interp`, computed as the complement of the
/// least fixpoint of externally supportable atoms: an atom leaves the
/// candidate set once it has a rule whose body is not false and whose
/// positive body atoms have all left already.
pub fn greatest_unfounded(program: &Program, interp: &PartialInterpretation) -> BTreeSet<Atom> {
    let base = program.herbrand_base();
    let mut supported: BTreeSet<Atom> = BTreeSet::new();
    loop {
        let mut changed = false;
        for rule in &program.rules {
            let head = match rule.head {
                crate::model::Head::Atom(a) => a,
                _ => continue,
            };
            if supported.contains(&head) {
                continue;
            }
            if interp.body_truth(&rule.body) == Truth::False {
                continue;
            }
            let positive_ok = rule
                .body
                .iter()
                .filter(|l| l.positive)
                .all(|l| supported.contains(&l.atom));
            if positive_ok {
                supported.insert(head);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    base.difference(&supported).copied().collect()
}

/// Least fixpoint of `I -> T_P(I) + not U_P(I)` from the empty interpretation,
/// plus the residual simplification of the program by that fixpoint.
pub fn well_founded_model(program: &Program) -> Result<WfResult, WfError> {
    if !program.is_normal() {
        return Err(WfError::NonNormalProgram);
    }
    let base = program.herbrand_base();
    let mut interp = PartialInterpretation::new(base.clone());
    let mut trivially_incoherent = false;
    // the sequence is inclusion-increasing, so |base| iterations suffice
    for _ in 0..=base.len() {
        let derived = tp_step(program, &interp);
        let unfounded = greatest_unfounded(program, &interp);
        if derived.intersection(&unfounded).next().is_some() {
            trivially_incoherent = true;
            break;
        }
        let mut next = PartialInterpretation::new(base.clone());
        for &a in &derived {
            next.assign(a, true);
        }
        for &a in &unfounded {
            next.assign(a, false);
        }
        debug_assert!(interp.subset_of(&next), "well-founded sequence must be increasing");
        if next == interp {
            break;
        }
        interp = next;
    }
    let residual = residual_program(program, &interp);
    Ok(WfResult { model: interp, residual, trivially_incoherent })
}

fn residual_program(program: &Program, model: &PartialInterpretation) -> Program {
    let mut rules = Vec::new();
    'rules: for rule in &program.rules {
        let mut body = Vec::with_capacity(rule.body.len());
        for &lit in &rule.body {
            match model.literal_truth(lit) {
                Truth::False => continue 'rules,
                Truth::True => {}
                Truth::Undef => body.push(lit),
            }
        }
        rules.push(Rule { head: rule.head.clone(), body });
    }
    Program::new(rules, program.symbols.clone())
}

/// Choice interface informed by the well-founded model of the lower levels:
/// a choice rule for each shared atom still undefined, a fact for each
/// shared atom derived true, and nothing for shared atoms derived false.
/// With an empty model this is the plain choice interface over the shared
/// atoms.
pub fn wf_choice_interface(
    lower: &Program,
    upper: &Program,
    w_lower: &PartialInterpretation,
) -> Program {
    let shared = interface_atoms(lower, upper);
    let mut rules = Vec::new();
    let undecided: Vec<Atom> = shared
        .iter()
        .copied()
        .filter(|&a| w_lower.truth(a) == Truth::Undef)
        .collect();
    if !undecided.is_empty() {
        rules.push(Rule::choice(undecided, vec![]));
    }
    for &a in &shared {
        if w_lower.truth(a) == Truth::True {
            rules.push(Rule::fact(a));
        }
    }
    Program::new(rules, upper.symbols.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Literal, SymbolTable};

    fn program(text: &str) -> Program {
        let qp = crate::textio::parse(&format!("%@exists\n{text}\n%@constraint\n")).unwrap();
        qp.level_program(1).desugar()
    }

    fn atom(p: &Program, name: &str) -> Atom {
        p.symbols.lookup(name).unwrap()
    }

    #[test]
    fn tp_step_examples() {
        // a. b :- a.
        let p = program("a. b :- a.");
        let empty = PartialInterpretation::new(p.herbrand_base());
        assert_eq!(tp_step(&p, &empty), [atom(&p, "a")].into_iter().collect());

        let mut i = PartialInterpretation::new(p.herbrand_base());
        i.assign(atom(&p, "a"), true);
        assert_eq!(
            tp_step(&p, &i),
            [atom(&p, "a"), atom(&p, "b")].into_iter().collect()
        );

        let q = program("b :- a.");
        let empty = PartialInterpretation::new(q.herbrand_base());
        assert!(tp_step(&q, &empty).is_empty());
    }

    #[test]
    fn unfounded_set_examples() {
        // a :- a.  the self-supporting loop is unfounded
        let p = program("a :- a.");
        let empty = PartialInterpretation::new(p.herbrand_base());
        assert_eq!(greatest_unfounded(&p, &empty), [atom(&p, "a")].into_iter().collect());

        // p :- not p.  negative literals do not make a set unfounded
        let p = program("p :- not p.");
        let empty = PartialInterpretation::new(p.herbrand_base());
        assert!(greatest_unfounded(&p, &empty).is_empty());

        // a fact is supported
        let p = program("a.");
        let empty = PartialInterpretation::new(p.herbrand_base());
        assert!(greatest_unfounded(&p, &empty).is_empty());
    }

    #[test]
    fn wf_simplifies_self_loop_level() {
        // a :- a. p :- not a, not p.  =>  W = {not a}, residual p :- not p.
        let p = program("a :- a. p :- not a, not p.");
        let wf = well_founded_model(&p).unwrap();
        assert_eq!(wf.model.truth(atom(&p, "a")), Truth::False);
        assert_eq!(wf.model.truth(atom(&p, "p")), Truth::Undef);
        assert_eq!(
            wf.residual.rules,
            vec![Rule::normal(atom(&p, "p"), vec![Literal::neg(atom(&p, "p"))])]
        );
        assert!(!wf.trivially_incoherent);
    }

    #[test]
    fn wf_keeps_facts() {
        let p = program("a.");
        let wf = well_founded_model(&p).unwrap();
        assert_eq!(wf.model.truth(atom(&p, "a")), Truth::True);
        assert_eq!(wf.residual.rules, vec![Rule::fact(atom(&p, "a"))]);
    }

    #[test]
    fn wf_leaves_even_loop_undefined() {
        let p = program("a :- not b. b :- not a.");
        let wf = well_founded_model(&p).unwrap();
        assert_eq!(wf.model.decided(), 0);
        assert_eq!(wf.residual.rules, p.rules);
    }

    #[test]
    fn wf_rejects_non_desugared_input() {
        let qp = crate::textio::parse("%@exists\n{a}.\n%@constraint\n").unwrap();
        let raw = qp.level_program(1);
        assert_eq!(well_founded_model(&raw).unwrap_err(), WfError::NonNormalProgram);
    }

    #[test]
    fn wf_decided_values_are_reproduced() {
        let p = program("a :- a. b :- not a. c :- b, not d. d :- not c.");
        let wf = well_founded_model(&p).unwrap();
        let again = well_founded_model(&p).unwrap();
        assert_eq!(wf.model, again.model);
        // no decided atom appears in a residual body
        for rule in &wf.residual.rules {
            for lit in &rule.body {
                assert_eq!(wf.model.truth(lit.atom), Truth::Undef);
            }
        }
    }

    #[test]
    fn choice_interface_cases() {
        let mut symbols = SymbolTable::new();
        let a = symbols.intern("a");
        let b = symbols.intern("b");
        let c = symbols.intern("c");
        let lower = Program::new(
            vec![Rule::fact(a), Rule::normal(b, vec![Literal::pos(c)]), Rule::normal(c, vec![Literal::pos(b)])],
            symbols.clone(),
        );
        let upper = Program::new(
            vec![Rule::constraint(vec![
                Literal::pos(a),
                Literal::pos(b),
                Literal::pos(c),
            ])],
            symbols.clone(),
        );
        // Int = {a, b, c}, W = {a true, b false} => { {c}. a. }
        let mut w = PartialInterpretation::new(lower.herbrand_base());
        w.assign(a, true);
        w.assign(b, false);
        let interface = wf_choice_interface(&lower, &upper, &w);
        assert_eq!(
            interface.rules,
            vec![Rule::choice(vec![c], vec![]), Rule::fact(a)]
        );

        // empty interface
        let disjoint = Program::new(vec![], symbols.clone());
        let w0 = PartialInterpretation::new(BTreeSet::new());
        assert!(wf_choice_interface(&disjoint, &upper, &w0).rules.is_empty());

        // empty model: plain choice interface over the shared atoms
        let w_empty = PartialInterpretation::new(lower.herbrand_base());
        let plain = wf_choice_interface(&lower, &upper, &w_empty);
        assert_eq!(plain.rules, vec![Rule::choice(vec![a, b, c], vec![])]);
    }
}
