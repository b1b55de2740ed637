//! Regenerate the bundled smoke corpus under `corpus/`: small seeded random
//! programs sized so that `quantasp check` decides each one with its default
//! limits. Run from the workspace root:
//!
//!     cargo run -p quantasp-cli --example gen_corpus

use std::fs;
use std::path::Path;

use quantasp_core::generate::{random_gc_quantified, random_quantified, rng, GenConfig};
use quantasp_core::oracle::{self, OracleLimits};
use quantasp_core::qbf::base_circuit;
use quantasp_core::textio::render;

fn main() {
    let out_dir = Path::new("corpus");
    fs::create_dir_all(out_dir).expect("create corpus dir");
    let cfg = GenConfig {
        max_levels: 2,
        max_atoms_per_level: 3,
        max_rules_per_level: 4,
        ..GenConfig::default()
    };
    let limits = OracleLimits { max_base_atoms: 22, max_steps: 1 << 20 };
    let mut written = 0usize;
    let mut seed = 0u64;
    while written < 20 {
        seed += 1;
        let qp = if written % 4 == 3 {
            random_gc_quantified(&mut rng(seed), &cfg)
        } else {
            random_quantified(&mut rng(seed), &cfg)
        };
        // keep only instances the default check limits can decide
        let Ok(circuit) = base_circuit(&qp) else { continue };
        let used = circuit
            .prefix
            .iter()
            .map(|(_, vars)| vars.len())
            .sum::<usize>();
        if used > 40 {
            continue;
        }
        if oracle::coherence(&qp, &limits).is_err() {
            continue;
        }
        let path = out_dir.join(format!("random_{written:02}.aspq"));
        fs::write(&path, render(&qp)).expect("write corpus file");
        println!("wrote {}", path.display());
        written += 1;
    }
}
