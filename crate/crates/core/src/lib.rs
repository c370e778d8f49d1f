//! Parameterized model checking for first-order logic over finite relational
//! structures: brute-force oracles, fixed-parameter-tractable engines
//! (Fagin-definability solving, tree-decomposition homomorphism DP, color
//! coding), and constructive reductions between model checking, clique,
//! alternating Turing machine acceptance, and weighted satisfiability.

pub mod colorcode;
pub mod encode;
pub mod fagin;
pub mod formula;
pub mod gen;
pub mod hom;
pub mod oracle;
pub mod parse;
pub mod prop;
pub mod structure;
pub mod treewidth;

pub use formula::{classify, Formula, FragmentClass, FragmentInfo, LogicError};
pub use oracle::{Assignment, Limits, OracleError};
pub use structure::{Element, Graph, Structure, StructureError, Tuple, Vocabulary};
