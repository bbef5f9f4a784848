//! Probabilistic control flow graph: locations partitioned into
//! deterministic, probabilistic, nondeterministic and assignment kinds, with
//! guarded or weighted transitions and per-location rewards.

use crate::num::Rat;
use crate::syntax::{DistExpr, Poly, Predicate, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocId(pub u32);

#[derive(Debug, Clone, PartialEq)]
pub enum Update {
    /// Deterministic assignment from a (polynomial) expression.
    Expr(Poly),
    /// Draw from a distribution.
    Sample(DistExpr),
    /// Nondeterministic choice constrained by a predicate over the assigned
    /// variable.
    Choose(Predicate),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LocKind {
    /// Guards of distinct successors partition the valuation space.
    Det { edges: Vec<(Predicate, LocId)> },
    /// Successors weighted by probabilities summing to one.
    Prob { edges: Vec<(Rat, LocId)> },
    /// Successor chosen by the scheduler.
    Nondet { succs: Vec<LocId> },
    /// Single successor; the transition applies the update.
    Assign {
        var: VarId,
        update: Update,
        succ: LocId,
    },
}

#[derive(Debug, Clone)]
pub struct Location {
    pub kind: LocKind,
    /// Human-readable label for diagnostics and dumps.
    pub label: String,
    /// Per-step reward accumulated when leaving this location (1 everywhere
    /// except the terminal self-loop, which carries 0).
    pub reward: Rat,
}

impl Location {
    pub fn successors(&self) -> Vec<LocId> {
        match &self.kind {
            LocKind::Det { edges } => edges.iter().map(|(_, l)| *l).collect(),
            LocKind::Prob { edges } => edges.iter().map(|(_, l)| *l).collect(),
            LocKind::Nondet { succs } => succs.clone(),
            LocKind::Assign { succ, .. } => vec![*succ],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Pcfg {
    pub var_names: Vec<String>,
    pub locations: Vec<Location>,
    pub init_loc: LocId,
    /// Initial valuation, one entry per variable.
    pub init_vals: Vec<Rat>,
    pub exit_loc: LocId,
}

impl Pcfg {
    pub fn loc(&self, l: LocId) -> &Location {
        &self.locations[l.0 as usize]
    }

    pub fn num_locs(&self) -> usize {
        self.locations.len()
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.var_names[v.0 as usize]
    }

    pub fn loc_ids(&self) -> impl Iterator<Item = LocId> {
        (0..self.locations.len() as u32).map(LocId)
    }
}

/// Per-location invariant predicates (the set `I`).
#[derive(Debug, Clone)]
pub struct InvariantMap(pub Vec<Predicate>);

impl InvariantMap {
    pub fn at(&self, l: LocId) -> &Predicate {
        &self.0[l.0 as usize]
    }
}

/// Per-location terminal predicates (the destination set `C`). The program
/// exit location maps to `true`; all other locations map to `false`.
#[derive(Debug, Clone)]
pub struct TerminalSet(pub Vec<Predicate>);

impl TerminalSet {
    pub fn at(&self, l: LocId) -> &Predicate {
        &self.0[l.0 as usize]
    }

    pub fn contains_f64(&self, l: LocId, val: &dyn Fn(VarId) -> f64) -> bool {
        self.at(l).holds_f64(val)
    }
}

/// Compiler output bundle.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub pcfg: Pcfg,
    pub invariants: InvariantMap,
    pub terminals: TerminalSet,
}
