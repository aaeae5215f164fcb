//! Structured d-DNNF to SDD compilation with auxiliary variables, together
//! with vtree utilities, validators and brute-force oracles.

pub mod circuit;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod hwb;
pub mod io;
pub mod oracle;
pub mod simulation;
pub mod transforms;
pub mod validators;
pub mod varset;
pub mod vtree;

pub use circuit::{Assignment, Circuit, CircuitBuilder, Gate, Lit, NodeId, Var};
pub use error::{Error, Result};
pub use varset::VarSet;
pub use vtree::{Vtree, VtreeId};
