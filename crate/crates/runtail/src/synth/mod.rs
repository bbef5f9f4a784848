//! Linear template synthesis: per-location affine K-tuples, pre-expectation
//! constraints, Farkas reduction to a single LP, and witness extraction.

pub mod constraints;
pub mod expr;
pub mod solve;
pub mod verify;

pub use constraints::{
    generate_constraints, monomial_basis, objective, Constraint, GenError, GenOptions, Template,
    Witness,
};
pub use expr::{PolyU, UAff};
pub use solve::{
    build_lp, emit_lp_text, farkas_reduce, synthesize, LpStats, SynthError, SynthOptions,
    Synthesis,
};
pub use verify::{pre_expectation_at, verify_witness, VerifyReport};
