//! Library surface of the command-line front end: feature extraction,
//! back-end selection, and the compile pipeline shared by the subcommands.

pub mod features;
pub mod select;

use quantasp_backend::solver::Formula;
use quantasp_core::gc::{gc_chain, is_guess_check};
use quantasp_core::qbf::{base_circuit, direct_cnf, wf_circuit, EncodeError, EncodingReport};
use quantasp_core::QuantifiedProgram;

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum Encoding {
    Base,
    WellFounded,
    WellFoundedGc,
}

#[derive(Debug)]
pub struct CompiledFormula {
    pub formula: Formula,
    pub report: Option<EncodingReport>,
    /// Whether the Guess&Check chain actually ran.
    pub used_gc: bool,
    pub warnings: Vec<String>,
}

/// Build the requested encoding. `wf+gc` applies the Guess&Check chain and
/// the direct CNF form when the program is eligible, otherwise it falls
/// back to the well-founded circuit with a warning; `no_gc` forces the
/// fallback.
pub fn compile_formula(
    qp: &QuantifiedProgram,
    encoding: Encoding,
    no_gc: bool,
) -> Result<CompiledFormula, EncodeError> {
    match encoding {
        Encoding::Base => Ok(CompiledFormula {
            formula: Formula::Circuit(base_circuit(qp)?),
            report: None,
            used_gc: false,
            warnings: Vec::new(),
        }),
        Encoding::WellFounded => {
            let encoded = wf_circuit(qp)?;
            Ok(CompiledFormula {
                formula: Formula::Circuit(encoded.circuit),
                report: Some(encoded.report),
                used_gc: false,
                warnings: Vec::new(),
            })
        }
        Encoding::WellFoundedGc => {
            let mut warnings = Vec::new();
            if no_gc {
                warnings.push("Guess&Check rewriting disabled (--no-gc); using wf".to_string());
            } else {
                match is_guess_check(qp) {
                    Ok(()) => {
                        let chained = gc_chain(qp)?;
                        return Ok(CompiledFormula {
                            formula: Formula::Prenex(direct_cnf(&chained)?),
                            report: None,
                            used_gc: true,
                            warnings,
                        });
                    }
                    Err(reason) => {
                        warnings.push(format!(
                            "not a Guess&Check program ({reason}); falling back to wf"
                        ));
                    }
                }
            }
            let encoded = wf_circuit(qp)?;
            Ok(CompiledFormula {
                formula: Formula::Circuit(encoded.circuit),
                report: Some(encoded.report),
                used_gc: false,
                warnings,
            })
        }
    }
}
