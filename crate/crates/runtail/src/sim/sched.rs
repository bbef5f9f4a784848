//! Schedulers resolve nondeterministic branching and nondeterministic
//! assignments. Built-ins: fixed-choice tables, uniform random, and
//! per-location Bernoulli choices.

use super::rng::SplitMix64;
use crate::num::rat_to_f64;
use crate::pcfg::LocId;
use crate::syntax::{AtomOp, Predicate, VarId};
use std::collections::BTreeMap;

/// Which end of a nondeterministic assignment's feasible interval to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValuePolicy {
    Low,
    High,
    Uniform,
}

pub trait Scheduler: Sync {
    /// Chooses a successor index at a nondeterministic location.
    fn choose_branch(
        &self,
        loc: LocId,
        n_succs: usize,
        vals: &[f64],
        rng: &mut SplitMix64,
    ) -> usize;

    /// Chooses a value for `var := ndet(pred)`; must satisfy `pred`.
    fn choose_value(
        &self,
        loc: LocId,
        pred: &Predicate,
        var: VarId,
        vals: &[f64],
        rng: &mut SplitMix64,
    ) -> f64 {
        let _ = loc;
        pick_in_pred(pred, var, vals, ValuePolicy::Uniform, rng)
    }

    fn name(&self) -> String;
}

/// Fixed branch table (default branch for unlisted locations) and a fixed
/// value policy for nondeterministic assignments.
#[derive(Debug, Clone)]
pub struct FixedChoice {
    pub default_branch: usize,
    pub table: BTreeMap<LocId, usize>,
    pub values: ValuePolicy,
}

impl FixedChoice {
    pub fn branch(ix: usize) -> Self {
        FixedChoice {
            default_branch: ix,
            table: BTreeMap::new(),
            values: ValuePolicy::Low,
        }
    }
}

impl Scheduler for FixedChoice {
    fn choose_branch(&self, loc: LocId, n_succs: usize, _: &[f64], _: &mut SplitMix64) -> usize {
        self.table
            .get(&loc)
            .copied()
            .unwrap_or(self.default_branch)
            .min(n_succs - 1)
    }

    fn choose_value(
        &self,
        _loc: LocId,
        pred: &Predicate,
        var: VarId,
        vals: &[f64],
        rng: &mut SplitMix64,
    ) -> f64 {
        pick_in_pred(pred, var, vals, self.values, rng)
    }

    fn name(&self) -> String {
        format!("fixed-{}", self.default_branch)
    }
}

/// Uniformly random branch and value choices.
#[derive(Debug, Clone, Copy)]
pub struct UniformRandom;

impl Scheduler for UniformRandom {
    fn choose_branch(
        &self,
        _: LocId,
        n_succs: usize,
        _: &[f64],
        rng: &mut SplitMix64,
    ) -> usize {
        (rng.next_u64() % n_succs as u64) as usize
    }

    fn name(&self) -> String {
        "uniform".into()
    }
}

/// Takes the first branch with probability `p` at every nondeterministic
/// location (per-location overrides allowed).
#[derive(Debug, Clone)]
pub struct Bernoulli {
    pub p: f64,
    pub per_loc: BTreeMap<LocId, f64>,
    pub values: ValuePolicy,
}

impl Bernoulli {
    pub fn new(p: f64) -> Self {
        Bernoulli {
            p,
            per_loc: BTreeMap::new(),
            values: ValuePolicy::Uniform,
        }
    }
}

impl Scheduler for Bernoulli {
    fn choose_branch(
        &self,
        loc: LocId,
        n_succs: usize,
        _: &[f64],
        rng: &mut SplitMix64,
    ) -> usize {
        let p = self.per_loc.get(&loc).copied().unwrap_or(self.p);
        if rng.next_f64() < p {
            0
        } else {
            1.min(n_succs - 1)
        }
    }

    fn choose_value(
        &self,
        _loc: LocId,
        pred: &Predicate,
        var: VarId,
        vals: &[f64],
        rng: &mut SplitMix64,
    ) -> f64 {
        pick_in_pred(pred, var, vals, self.values, rng)
    }

    fn name(&self) -> String {
        format!("bernoulli-{}", self.p)
    }
}

const NDET_DEFAULT_BOUND: f64 = 1.0e6;

/// Extracts the feasible interval of `var` from the first satisfiable
/// disjunct (other variables fixed to the current valuation) and picks a
/// point according to the policy.
pub fn pick_in_pred(
    pred: &Predicate,
    var: VarId,
    vals: &[f64],
    policy: ValuePolicy,
    rng: &mut SplitMix64,
) -> f64 {
    for conj in &pred.disjuncts {
        let mut lo = -NDET_DEFAULT_BOUND;
        let mut hi = NDET_DEFAULT_BOUND;
        let mut feasible = true;
        for atom in conj {
            // Substitute current values for the other variables, leaving a
            // univariate linear function a*var + b.
            let mut a = 0.0;
            let mut b = 0.0;
            let mut linear = true;
            for (m, c) in &atom.poly.terms {
                let exp = m.exponent_of(var);
                let mut coef = rat_to_f64(c);
                for &(w, e) in &m.0 {
                    if w != var {
                        coef *= vals[w.0 as usize].powi(e as i32);
                    }
                }
                match exp {
                    0 => b += coef,
                    1 => a += coef,
                    _ => linear = false,
                }
            }
            if !linear {
                continue; // best effort: ignore nonlinear atoms for bounds
            }
            match atom.op {
                AtomOp::Ge | AtomOp::Gt => {
                    if a > 1e-12 {
                        lo = lo.max(-b / a);
                    } else if a < -1e-12 {
                        hi = hi.min(-b / a);
                    } else if b < 0.0 {
                        feasible = false;
                    }
                }
                AtomOp::Eq => {
                    if a.abs() > 1e-12 {
                        lo = lo.max(-b / a);
                        hi = hi.min(-b / a);
                    } else if b != 0.0 {
                        feasible = false;
                    }
                }
            }
        }
        if !feasible || lo > hi {
            continue;
        }
        let x = match policy {
            ValuePolicy::Low => lo,
            ValuePolicy::High => hi,
            ValuePolicy::Uniform => lo + (hi - lo) * rng.next_f64(),
        };
        let mut probe = vals.to_vec();
        if (var.0 as usize) < probe.len() {
            probe[var.0 as usize] = x;
        }
        if pred.holds_f64(&|w| {
            if w == var {
                x
            } else {
                vals[w.0 as usize]
            }
        }) {
            return x;
        }
        let _ = probe;
    }
    // Fall back to the midpoint of the default box; callers detect the
    // contract violation when the predicate fails to hold.
    0.0
}
