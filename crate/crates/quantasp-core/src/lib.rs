//! Core model and encodings for propositional quantified answer set
//! programs: parsing, well-founded simplification, Guess&Check rewriting,
//! QBF circuit construction, and a brute-force reference semantics.

mod graph;

pub mod cnf;
pub mod gc;
pub mod generate;
pub mod model;
pub mod oracle;
pub mod qbf;
pub mod textio;
pub mod wellfounded;

pub use model::{
    Atom, Head, Literal, PartialInterpretation, Program, QuantifiedProgram, Quantifier, Rule,
    SymbolTable, Truth,
};
