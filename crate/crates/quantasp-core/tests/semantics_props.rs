//! Properties of the reference semantics and the well-founded machinery on
//! seeded random programs: residual equivalence, containment of the
//! well-founded model in every answer set, desugaring faithfulness, and
//! totality on stratified programs.

use std::collections::BTreeSet;

use quantasp_core::generate::{random_program, random_stratified_program, rng, GenConfig};
use quantasp_core::model::{Atom, PartialInterpretation, Program, Truth};
use quantasp_core::oracle::{self, OracleLimits};
use quantasp_core::textio::render_program;
use quantasp_core::wellfounded::{well_founded_model, wf_choice_interface};

fn limits() -> OracleLimits {
    OracleLimits { max_base_atoms: 24, max_steps: 1 << 22 }
}

fn answer_sets(p: &Program) -> BTreeSet<BTreeSet<Atom>> {
    oracle::answer_sets(p, &limits()).expect("small program").models
}

#[test]
fn desugaring_preserves_answer_sets_modulo_fresh_atoms() {
    let cfg = GenConfig::default();
    for seed in 0..300 {
        let p = random_program(&mut rng(seed), 6, 6, &cfg);
        let native = answer_sets(&p);
        let desugared = p.desugar();
        let user_base = p.herbrand_base();
        let projected: BTreeSet<BTreeSet<Atom>> = answer_sets(&desugared)
            .into_iter()
            .map(|m| m.intersection(&user_base).copied().collect())
            .collect();
        assert_eq!(native, projected, "seed {seed}:\n{}", render_program(&p));
    }
}

#[test]
fn residual_preserves_answer_sets() {
    // answer sets of the program equal those of its residual, extended by
    // the atoms the well-founded model decided true
    let cfg = GenConfig::default();
    for seed in 0..400 {
        let p = random_program(&mut rng(7000 + seed), 8, 8, &cfg).desugar();
        let wf = well_founded_model(&p).unwrap();
        assert!(!wf.trivially_incoherent);
        let original = answer_sets(&p);
        let residual_models = answer_sets(&wf.residual);
        let base = p.herbrand_base();
        let extended: BTreeSet<BTreeSet<Atom>> = residual_models
            .into_iter()
            .map(|m| m.intersection(&base).copied().collect())
            .collect();
        assert_eq!(original, extended, "seed {seed}:\n{}", render_program(&p));
    }
}

#[test]
fn well_founded_model_is_contained_in_every_answer_set() {
    let cfg = GenConfig::default();
    for seed in 0..300 {
        let p = random_program(&mut rng(11_000 + seed), 7, 7, &cfg).desugar();
        let wf = well_founded_model(&p).unwrap();
        for model in answer_sets(&p) {
            for atom in p.herbrand_base() {
                match wf.model.truth(atom) {
                    Truth::True => assert!(model.contains(&atom), "seed {seed}"),
                    Truth::False => assert!(!model.contains(&atom), "seed {seed}"),
                    Truth::Undef => {}
                }
            }
        }
    }
}

#[test]
fn stratified_programs_have_total_well_founded_models() {
    for seed in 0..300 {
        let p = random_stratified_program(&mut rng(23_000 + seed), 7, 8);
        assert!(p.is_stratified(), "seed {seed}");
        let wf = well_founded_model(&p).unwrap();
        assert!(wf.model.is_total(), "seed {seed}:\n{}", render_program(&p));
    }
}

#[test]
fn fixing_forces_agreement_on_the_fixed_base() {
    let cfg = GenConfig::default();
    for seed in 0..150 {
        let mut r = rng(31_000 + seed);
        let p = random_program(&mut r, 5, 5, &cfg);
        let q = random_program(&mut r, 5, 5, &cfg);
        // move q onto p's symbol table so atoms overlap
        let q = Program::new(q.rules.clone(), p.symbols.clone());
        let p_models = answer_sets(&p);
        for model in p_models.into_iter().take(2) {
            let interp = PartialInterpretation::total(p.herbrand_base(), &model);
            let fixing = quantasp_core::model::fix(&p, &interp).unwrap();
            let mut combined_rules = q.rules.clone();
            combined_rules.extend(fixing.rules.clone());
            let combined = Program::new(combined_rules, q.symbols.clone());
            for m in answer_sets(&combined) {
                for atom in p.herbrand_base() {
                    assert_eq!(
                        m.contains(&atom),
                        model.contains(&atom),
                        "seed {seed}: fixed atom must keep its value"
                    );
                }
            }
        }
    }
}

#[test]
fn interface_atoms_symmetric_and_monotone() {
    let cfg = GenConfig::default();
    for seed in 0..100 {
        let mut r = rng(41_000 + seed);
        let p = random_program(&mut r, 5, 5, &cfg);
        let q = Program::new(random_program(&mut r, 5, 5, &cfg).rules, p.symbols.clone());
        let extra = Program::new(random_program(&mut r, 4, 4, &cfg).rules, p.symbols.clone());
        let pq = quantasp_core::model::interface_atoms(&p, &q);
        let qp = quantasp_core::model::interface_atoms(&q, &p);
        assert_eq!(pq, qp);
        let mut union_rules = p.rules.clone();
        union_rules.extend(extra.rules.clone());
        let union = Program::new(union_rules, p.symbols.clone());
        let bigger = quantasp_core::model::interface_atoms(&union, &q);
        assert!(pq.is_subset(&bigger), "seed {seed}");
    }
}

#[test]
fn wf_interface_with_empty_model_is_plain_choice_interface() {
    let cfg = GenConfig::default();
    for seed in 0..100 {
        let mut r = rng(51_000 + seed);
        let p = random_program(&mut r, 5, 5, &cfg);
        let q = Program::new(random_program(&mut r, 5, 5, &cfg).rules, p.symbols.clone());
        let empty = PartialInterpretation::new(p.herbrand_base());
        let interface = wf_choice_interface(&p, &q, &empty);
        let shared = quantasp_core::model::interface_atoms(&p, &q);
        if shared.is_empty() {
            assert!(interface.rules.is_empty());
        } else {
            assert_eq!(interface.rules.len(), 1);
            assert!(interface.rules[0].is_choice());
            let opened: BTreeSet<Atom> = interface.rules[0].head_atoms().into_iter().collect();
            assert_eq!(opened, shared);
        }
    }
}
