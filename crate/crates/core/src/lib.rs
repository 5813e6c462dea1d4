//! Set-constraint satisfaction (SetCSP) and the approximately-clean
//! approximate-connected-component (ACAC) problem, at desk scale.
//!
//! The crate is organised bottom-up:
//!
//! - [`bits`]: fixed-width bitstrings with index 0 leftmost.
//! - [`setcsp`]: set-constraints, bad/longing/neighbor semantics and the
//!   exact `set-unsat` measure, plus the embedding of classical CSPs.
//! - [`circuit`]: reversible circuits over NOT/CNOT/CCNOT and the unary clock.
//! - [`compiler`]: circuit-to-SetCSP compilation with history-set witnesses.
//! - [`acac`]: constraint graphs, succinct neighbor/mark oracles and explicit
//!   graphs.
//! - [`oracle`]: exhaustive ground truth (minimisation, clean components,
//!   conductance, boundary ratios).
//! - [`walk`]: the lazy random-walk verifier and exact hitting probabilities.

pub mod acac;
pub mod bits;
pub mod circuit;
pub mod compiler;
pub mod error;
pub mod oracle;
pub mod rational;
pub mod setcsp;
pub mod walk;

pub use acac::{reduce, AcacGraph, AcacInstance, ConstraintGraph, ExplicitGraph};
pub use bits::BitString;
pub use circuit::{unary, Gate, MaCircuitSpec, ReversibleCircuit};
pub use compiler::{compile, history_set, soundness_bound, CompiledInstance, ConstraintLabel};
pub use error::{Error, Result};
pub use rational::Rational;
pub use setcsp::{
    embed_csp, set_unsat, ClassicalConstraint, ClassicalCsp, FrustrationReport, SetConstraint,
    SetCspInstance, StringSet,
};
