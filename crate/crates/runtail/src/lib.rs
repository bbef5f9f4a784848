//! Static analysis of runtime tail probabilities for randomized imperative
//! programs.
//!
//! The pipeline has two steps: synthesize a vector of per-location affine (or
//! polynomial) functions whose components bound the first K moments of the
//! program runtime, then turn those moment bounds into a tail bound
//! `P(T >= d) <= min_k u_k / d^k`.
//!
//! Modules follow the pipeline: [`syntax`] parses and validates programs,
//! [`pcfg`] compiles them to probabilistic control flow graphs, [`synth`]
//! generates and solves the moment constraints through the [`lp`] simplex
//! solver, [`sos`] exports the polynomial variant as semidefinite problems,
//! [`tail`] evaluates tail bounds, and [`sim`]/[`oracle`] provide Monte Carlo
//! estimation and finite-state ground truth for validation.

pub mod num;
pub mod syntax;
pub mod pcfg;
pub mod sim;
pub mod oracle;
pub mod lp;
pub mod synth;
pub mod sos;
pub mod tail;

pub(crate) mod par;
