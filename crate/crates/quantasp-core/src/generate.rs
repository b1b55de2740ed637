//! Seeded random program generators for property tests, fuzzing, and the
//! bundled smoke corpus.
//!
//! Quantified programs are generated in the definitional style the encodings
//! target: each level's heads come from a pool of atoms fresh to that level,
//! while bodies may also reference atoms of earlier levels, which is what
//! creates the interfaces. Constraint programs are stratified by
//! construction (negation only reaches backward in a fixed atom order).

use rand::prelude::IndexedRandom;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

use crate::model::{
    Atom, Literal, Program, QuantifiedProgram, Quantifier, Rule, SymbolTable,
};

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub max_levels: usize,
    pub max_atoms_per_level: usize,
    pub max_rules_per_level: usize,
    pub max_body_len: usize,
    pub constraints: bool,
    pub choices: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_levels: 3,
            max_atoms_per_level: 5,
            max_rules_per_level: 7,
            max_body_len: 3,
            constraints: true,
            choices: true,
        }
    }
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn body(rng: &mut StdRng, visible: &[Atom], max_len: usize) -> Vec<Literal> {
    let len = rng.random_range(0..=max_len.min(visible.len()));
    (0..len)
        .map(|_| {
            let atom = *visible.choose(rng).expect("visible atoms non-empty");
            if rng.random_bool(0.5) {
                Literal::pos(atom)
            } else {
                Literal::neg(atom)
            }
        })
        .collect()
}

fn level_rules(
    rng: &mut StdRng,
    own: &[Atom],
    visible: &[Atom],
    cfg: &GenConfig,
) -> Vec<Rule> {
    let count = rng.random_range(0..=cfg.max_rules_per_level);
    let mut rules = Vec::with_capacity(count);
    for _ in 0..count {
        let roll: f64 = rng.random();
        if cfg.choices && roll < 0.25 {
            let width = rng.random_range(1..=own.len().min(3));
            let mut atoms: Vec<Atom> = Vec::new();
            for _ in 0..width {
                atoms.push(*own.choose(rng).unwrap());
            }
            let choice_body = if rng.random_bool(0.3) {
                body(rng, visible, cfg.max_body_len.min(2))
            } else {
                Vec::new()
            };
            rules.push(Rule::choice(atoms, choice_body));
        } else if cfg.constraints && roll < 0.4 {
            let mut b = body(rng, visible, cfg.max_body_len);
            if b.is_empty() {
                b = vec![Literal::neg(*visible.choose(rng).unwrap())];
            }
            rules.push(Rule::constraint(b));
        } else {
            let head = *own.choose(rng).unwrap();
            rules.push(Rule::normal(head, body(rng, visible, cfg.max_body_len)));
        }
    }
    rules
}

/// Stratified rules over `own` heads: positive recursion follows the pool
/// order and negation only reaches strictly earlier atoms, so no cycle can
/// carry a negative arc.
fn stratified_rules(
    rng: &mut StdRng,
    own: &[Atom],
    earlier: &[Atom],
    max_rules: usize,
    max_body_len: usize,
    constraints: bool,
) -> Vec<Rule> {
    let count = rng.random_range(0..=max_rules);
    let mut rules = Vec::with_capacity(count);
    for _ in 0..count {
        if constraints && !earlier.is_empty() && rng.random_bool(0.4) {
            let mut b = body(rng, earlier, max_body_len);
            if b.is_empty() {
                b = vec![Literal::pos(*earlier.choose(rng).unwrap())];
            }
            rules.push(Rule::constraint(b));
            continue;
        }
        if own.is_empty() {
            continue;
        }
        let head_pos = rng.random_range(0..own.len());
        let head = own[head_pos];
        let len = rng.random_range(0..=max_body_len);
        let mut b = Vec::new();
        for _ in 0..len {
            // positive literals may reach anything earlier or equal in rank,
            // negative literals only strictly earlier atoms
            let positive = rng.random_bool(0.6);
            let mut candidates: Vec<Atom> = earlier.to_vec();
            if positive {
                candidates.extend_from_slice(&own[..=head_pos]);
            } else {
                candidates.extend_from_slice(&own[..head_pos]);
            }
            if candidates.is_empty() {
                continue;
            }
            let atom = *candidates.choose(rng).unwrap();
            b.push(if positive { Literal::pos(atom) } else { Literal::neg(atom) });
        }
        rules.push(Rule::normal(head, b));
    }
    rules
}

/// A single program over up to `atoms` atoms: any rule shapes, including
/// self-referential heads. Not layered; exercises the single-program
/// operators on the full rule space.
pub fn random_program(rng: &mut StdRng, atoms: usize, rules: usize, cfg: &GenConfig) -> Program {
    let mut symbols = SymbolTable::new();
    let pool: Vec<Atom> = (0..atoms.max(1))
        .map(|i| symbols.intern(&format!("a{i}")))
        .collect();
    let mut generated = Vec::new();
    let count = rng.random_range(0..=rules);
    for _ in 0..count {
        let roll: f64 = rng.random();
        if cfg.choices && roll < 0.2 {
            let atoms = vec![*pool.choose(rng).unwrap()];
            generated.push(Rule::choice(atoms, body(rng, &pool, cfg.max_body_len)));
        } else if cfg.constraints && roll < 0.35 {
            let mut b = body(rng, &pool, cfg.max_body_len);
            if b.is_empty() {
                b = vec![Literal::pos(*pool.choose(rng).unwrap())];
            }
            generated.push(Rule::constraint(b));
        } else {
            let head = *pool.choose(rng).unwrap();
            generated.push(Rule::normal(head, body(rng, &pool, cfg.max_body_len)));
        }
    }
    Program::new(generated, symbols)
}

/// A stratified normal program (no constraints, no choices).
pub fn random_stratified_program(rng: &mut StdRng, atoms: usize, rules: usize) -> Program {
    let mut symbols = SymbolTable::new();
    let pool: Vec<Atom> = (0..atoms.max(1))
        .map(|i| symbols.intern(&format!("a{i}")))
        .collect();
    let generated = stratified_rules(rng, &pool, &[], rules, 3, false);
    Program::new(generated, symbols)
}

/// A layered quantified program: level heads are fresh per level, bodies see
/// every earlier atom, and the constraint program is stratified.
pub fn random_quantified(rng: &mut StdRng, cfg: &GenConfig) -> QuantifiedProgram {
    let mut symbols = SymbolTable::new();
    let levels_count = rng.random_range(1..=cfg.max_levels);
    let mut levels = Vec::with_capacity(levels_count);
    let mut earlier: Vec<Atom> = Vec::new();
    for level in 1..=levels_count {
        let quantifier = if rng.random_bool(0.5) {
            Quantifier::Exists
        } else {
            Quantifier::Forall
        };
        let own: Vec<Atom> = (0..rng.random_range(1..=cfg.max_atoms_per_level))
            .map(|i| symbols.intern(&format!("x{level}_{i}")))
            .collect();
        let mut visible = earlier.clone();
        visible.extend_from_slice(&own);
        let rules = level_rules(rng, &own, &visible, cfg);
        earlier = visible;
        levels.push((quantifier, rules));
    }
    let c_own: Vec<Atom> = (0..rng.random_range(0..=2))
        .map(|i| symbols.intern(&format!("c{i}")))
        .collect();
    let constraint = stratified_rules(rng, &c_own, &earlier, cfg.max_rules_per_level, cfg.max_body_len, true);
    QuantifiedProgram::new(levels, constraint, symbols)
        .expect("generator output is well-formed by construction")
}

/// A quantified program with no layering discipline: every level draws
/// heads and bodies from one shared pool, so later levels may (re)define
/// atoms of earlier ones. The well-founded interface is not sound for this
/// class; the base translation is, and is tested against it.
pub fn random_unrestricted_quantified(rng: &mut StdRng, cfg: &GenConfig) -> QuantifiedProgram {
    let mut symbols = SymbolTable::new();
    let pool: Vec<Atom> = (0..cfg.max_atoms_per_level.max(2))
        .map(|i| symbols.intern(&format!("a{i}")))
        .collect();
    let levels_count = rng.random_range(1..=cfg.max_levels);
    let mut levels = Vec::with_capacity(levels_count);
    for _ in 0..levels_count {
        let quantifier = if rng.random_bool(0.5) {
            Quantifier::Exists
        } else {
            Quantifier::Forall
        };
        levels.push((quantifier, level_rules(rng, &pool, &pool, cfg)));
    }
    let c_own: Vec<Atom> = (0..rng.random_range(0..=2))
        .map(|i| symbols.intern(&format!("c{i}")))
        .collect();
    let constraint =
        stratified_rules(rng, &c_own, &pool, cfg.max_rules_per_level, cfg.max_body_len, true);
    QuantifiedProgram::new(levels, constraint, symbols)
        .expect("generator output is well-formed by construction")
}

/// An alternating Guess&Check program: universal levels are empty-body
/// choices plus a stratified check with fresh heads, existential levels are
/// ordinary layered programs.
pub fn random_gc_quantified(rng: &mut StdRng, cfg: &GenConfig) -> QuantifiedProgram {
    let mut symbols = SymbolTable::new();
    let levels_count = rng.random_range(1..=cfg.max_levels);
    let first_forall = rng.random_bool(0.5);
    let mut levels = Vec::with_capacity(levels_count);
    let mut earlier: Vec<Atom> = Vec::new();
    for level in 1..=levels_count {
        let forall = first_forall == (level % 2 == 1);
        let own: Vec<Atom> = (0..rng.random_range(1..=cfg.max_atoms_per_level.max(2)))
            .map(|i| symbols.intern(&format!("x{level}_{i}")))
            .collect();
        let rules = if forall {
            let mut rules = vec![Rule::choice(own.clone(), Vec::new())];
            let check_own: Vec<Atom> = (0..rng.random_range(0..=2))
                .map(|i| symbols.intern(&format!("k{level}_{i}")))
                .collect();
            let mut guess_and_earlier = earlier.clone();
            guess_and_earlier.extend_from_slice(&own);
            rules.extend(stratified_rules(
                rng,
                &check_own,
                &guess_and_earlier,
                cfg.max_rules_per_level.saturating_sub(1),
                cfg.max_body_len,
                true,
            ));
            earlier.extend_from_slice(&own);
            earlier.extend_from_slice(&check_own);
            rules
        } else {
            let mut visible = earlier.clone();
            visible.extend_from_slice(&own);
            let rules = level_rules(rng, &own, &visible, cfg);
            earlier = visible;
            rules
        };
        levels.push((if forall { Quantifier::Forall } else { Quantifier::Exists }, rules));
    }
    let c_own: Vec<Atom> = (0..rng.random_range(0..=2))
        .map(|i| symbols.intern(&format!("c{i}")))
        .collect();
    let constraint =
        stratified_rules(rng, &c_own, &earlier, cfg.max_rules_per_level, cfg.max_body_len, true);
    QuantifiedProgram::new(levels, constraint, symbols)
        .expect("generator output is well-formed by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gc::is_guess_check;

    #[test]
    fn quantified_generator_is_deterministic_per_seed() {
        let cfg = GenConfig::default();
        let a = random_quantified(&mut rng(7), &cfg);
        let b = random_quantified(&mut rng(7), &cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn constraint_sections_are_stratified() {
        let cfg = GenConfig::default();
        for seed in 0..200 {
            let qp = random_quantified(&mut rng(seed), &cfg);
            assert!(qp.constraint_program().is_stratified(), "seed {seed}");
        }
    }

    #[test]
    fn gc_generator_produces_guess_check_programs() {
        let cfg = GenConfig::default();
        for seed in 0..200 {
            let qp = random_gc_quantified(&mut rng(seed), &cfg);
            assert!(is_guess_check(&qp).is_ok(), "seed {seed}");
        }
    }

    #[test]
    fn level_heads_are_fresh_per_level() {
        let cfg = GenConfig::default();
        for seed in 0..100 {
            let qp = random_quantified(&mut rng(seed), &cfg);
            let mut lower_base = std::collections::BTreeSet::new();
            for i in 1..=qp.level_count() {
                let level = qp.level_program(i);
                for head in level.heads() {
                    assert!(!lower_base.contains(&head), "seed {seed} level {i}");
                }
                lower_base.extend(level.herbrand_base());
            }
        }
    }
}
