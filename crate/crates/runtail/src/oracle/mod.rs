//! Ground-truth engine on finite-state instances: value iteration of the
//! moment operator, exact Markov-chain moments via linear solves, and
//! exhaustive memoryless-scheduler sweeps.

pub mod graph;
pub mod markov;
pub mod sweep;
pub mod value_iter;

pub use graph::{enumerate_states, EnumerateError, FiniteStateGraph, StateId, StateKind};
pub use markov::{exact_moments_markov, MarkovError};
pub use sweep::{scheduler_sweep, SweepError, SweepResult};
pub use value_iter::{value_iterate, ValueIterError};
