//! Syntactic feature extraction over the desugared program, the input to
//! back-end selection. Counts cover every subprogram including the
//! constraint program; the per-quantifier atom counts cover the quantified
//! levels only. Ratios are zero when their denominator is zero.

use serde::Serialize;

use quantasp_core::model::{desugar_rules, Program, Rule};
use quantasp_core::{QuantifiedProgram, Quantifier};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeatureVector {
    /// Rule count.
    #[serde(rename = "R")]
    pub rules: u64,
    /// Atom count.
    #[serde(rename = "A")]
    pub atoms: u64,
    #[serde(rename = "RA")]
    pub rules_per_atom: f64,
    #[serde(rename = "RA2")]
    pub rules_per_atom_sq: f64,
    #[serde(rename = "RA3")]
    pub rules_per_atom_cube: f64,
    #[serde(rename = "AR")]
    pub atoms_per_rule: f64,
    #[serde(rename = "AR2")]
    pub atoms_per_rule_sq: f64,
    #[serde(rename = "AR3")]
    pub atoms_per_rule_cube: f64,
    /// Rules with a body of length 1, 2, and 3.
    #[serde(rename = "R1")]
    pub body_len_1: u64,
    #[serde(rename = "R2")]
    pub body_len_2: u64,
    #[serde(rename = "R3")]
    pub body_len_3: u64,
    /// Rules without negative body literals.
    #[serde(rename = "PR")]
    pub positive_rules: u64,
    /// Fact count.
    #[serde(rename = "F")]
    pub facts: u64,
    /// Disjunctive fact count (always zero here; no disjunction in scope).
    #[serde(rename = "DF")]
    pub disjunctive_facts: u64,
    /// Normal rule count.
    #[serde(rename = "NR")]
    pub normal_rules: u64,
    /// Constraint count before desugaring.
    #[serde(rename = "NC")]
    pub constraints: u64,
    /// Atoms in universally quantified levels.
    #[serde(rename = "VF")]
    pub universal_atoms: u64,
    /// Atoms in existentially quantified levels.
    #[serde(rename = "VE")]
    pub existential_atoms: u64,
    /// Universal level count.
    #[serde(rename = "QF")]
    pub universal_levels: u64,
    /// Existential level count.
    #[serde(rename = "QE")]
    pub existential_levels: u64,
    /// Quantification level count.
    #[serde(rename = "QL")]
    pub quantification_levels: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn extract_features(qp: &QuantifiedProgram) -> FeatureVector {
    let mut symbols = qp.symbols.clone();
    let mut desugared: Vec<Rule> = Vec::new();
    let mut constraints = 0u64;
    let mut universal_atoms = 0u64;
    let mut existential_atoms = 0u64;
    let mut universal_levels = 0u64;
    let mut existential_levels = 0u64;

    for (quantifier, rules) in &qp.levels {
        constraints += rules.iter().filter(|r| r.is_constraint()).count() as u64;
        let level = desugar_rules(rules, &mut symbols);
        let base = Program::new(level.clone(), symbols.clone()).herbrand_base().len() as u64;
        match quantifier {
            Quantifier::Forall => {
                universal_levels += 1;
                universal_atoms += base;
            }
            Quantifier::Exists => {
                existential_levels += 1;
                existential_atoms += base;
            }
        }
        desugared.extend(level);
    }
    constraints += qp.constraint.iter().filter(|r| r.is_constraint()).count() as u64;
    desugared.extend(desugar_rules(&qp.constraint, &mut symbols));

    let whole = Program::new(desugared, symbols);
    let rules = whole.rules.len() as u64;
    let atoms = whole.herbrand_base().len() as u64;
    let count_len = |len: usize| whole.rules.iter().filter(|r| r.body.len() == len).count() as u64;
    let positive_rules = whole
        .rules
        .iter()
        .filter(|r| r.body.iter().all(|l| l.positive))
        .count() as u64;
    let facts = whole.rules.iter().filter(|r| r.is_fact()).count() as u64;
    let normal_rules = whole.rules.iter().filter(|r| r.is_normal()).count() as u64;

    FeatureVector {
        rules,
        atoms,
        rules_per_atom: ratio(rules, atoms),
        rules_per_atom_sq: ratio(rules, atoms).powi(2),
        rules_per_atom_cube: ratio(rules, atoms).powi(3),
        atoms_per_rule: ratio(atoms, rules),
        atoms_per_rule_sq: ratio(atoms, rules).powi(2),
        atoms_per_rule_cube: ratio(atoms, rules).powi(3),
        body_len_1: count_len(1),
        body_len_2: count_len(2),
        body_len_3: count_len(3),
        positive_rules,
        facts,
        disjunctive_facts: 0,
        normal_rules,
        constraints,
        universal_atoms,
        existential_atoms,
        universal_levels,
        existential_levels,
        quantification_levels: universal_levels + existential_levels,
    }
}

impl FeatureVector {
    /// Feature value by its table name, for selection predicates.
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "R" => self.rules as f64,
            "A" => self.atoms as f64,
            "RA" => self.rules_per_atom,
            "RA2" => self.rules_per_atom_sq,
            "RA3" => self.rules_per_atom_cube,
            "AR" => self.atoms_per_rule,
            "AR2" => self.atoms_per_rule_sq,
            "AR3" => self.atoms_per_rule_cube,
            "R1" => self.body_len_1 as f64,
            "R2" => self.body_len_2 as f64,
            "R3" => self.body_len_3 as f64,
            "PR" => self.positive_rules as f64,
            "F" => self.facts as f64,
            "DF" => self.disjunctive_facts as f64,
            "NR" => self.normal_rules as f64,
            "NC" => self.constraints as f64,
            "VF" => self.universal_atoms as f64,
            "VE" => self.existential_atoms as f64,
            "QF" => self.universal_levels as f64,
            "QE" => self.existential_levels as f64,
            "QL" => self.quantification_levels as f64,
            _ => return None,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("feature vector serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use quantasp_core::textio::parse;

    #[test]
    fn even_loop_features() {
        let qp = parse("%@exists\na :- not b.\nb :- not a.\n%@constraint\n").unwrap();
        let f = extract_features(&qp);
        assert_eq!(f.rules, 2);
        assert_eq!(f.atoms, 2);
        assert_eq!(f.body_len_1, 2);
        assert_eq!(f.positive_rules, 0);
        assert_eq!(f.facts, 0);
        assert_eq!(f.normal_rules, 2);
        assert_eq!(f.constraints, 0);
        assert_eq!(f.existential_atoms, 2);
        assert_eq!(f.universal_atoms, 0);
        assert_eq!(f.existential_levels, 1);
        assert_eq!(f.universal_levels, 0);
        assert_eq!(f.quantification_levels, 1);
        assert_eq!(f.rules_per_atom, 1.0);
    }

    #[test]
    fn empty_levels_use_the_zero_ratio_convention() {
        let qp = parse("%@exists\n%@constraint\n").unwrap();
        let f = extract_features(&qp);
        assert_eq!(f.rules, 0);
        assert_eq!(f.atoms, 0);
        assert_eq!(f.rules_per_atom, 0.0);
        assert_eq!(f.atoms_per_rule, 0.0);
        assert_eq!(f.quantification_levels, 1);
    }

    #[test]
    fn json_has_exactly_the_21_keys_in_order() {
        let qp = parse("%@exists\na.\n%@constraint\n").unwrap();
        let json = extract_features(&qp).to_json();
        let expected = [
            "R", "A", "RA", "RA2", "RA3", "AR", "AR2", "AR3", "R1", "R2", "R3", "PR", "F", "DF",
            "NR", "NC", "VF", "VE", "QF", "QE", "QL",
        ];
        let positions: Vec<usize> = expected
            .iter()
            .map(|k| json.find(&format!("\"{k}\":")).unwrap_or_else(|| panic!("missing key {k}")))
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "keys out of order:\n{json}");
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value.as_object().unwrap().len(), 21);
    }

    #[test]
    fn extraction_is_deterministic() {
        let qp = parse("%@exists\n{a;b}. c :- a, not b.\n%@forall\n{d}.\n%@constraint\n:- c, d.\n")
            .unwrap();
        assert_eq!(extract_features(&qp).to_json(), extract_features(&qp).to_json());
    }
}
