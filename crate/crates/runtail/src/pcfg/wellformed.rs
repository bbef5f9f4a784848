//! Structural and sampled diagnostics for compiled pCFGs.

use super::model::*;
use crate::num::{rat_to_f64, Rat};
use crate::sim::rng::SplitMix64;
use crate::sim::sched::UniformRandom;
use crate::syntax::{AtomOp, Predicate, VarId};
use num_traits::{One, Zero};

#[derive(Debug, Clone)]
pub struct Report {
    pub violations: Vec<String>,
}

impl Report {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

pub struct CheckOptions {
    pub samples_per_location: usize,
    pub trajectories: usize,
    pub trajectory_steps: usize,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            samples_per_location: 1000,
            trajectories: 100,
            trajectory_steps: 500,
            seed: 0x5eed,
        }
    }
}

pub fn check_wellformed(c: &Compiled) -> Report {
    check_wellformed_with(c, CheckOptions::default())
}

pub fn check_wellformed_with(c: &Compiled, opts: CheckOptions) -> Report {
    let mut violations = Vec::new();
    let pcfg = &c.pcfg;

    // Total transition relation.
    for l in pcfg.loc_ids() {
        if pcfg.loc(l).successors().is_empty() {
            violations.push(format!("location l{} has no successor", l.0));
        }
    }

    // Probability mass and support at probabilistic locations.
    for l in pcfg.loc_ids() {
        if let LocKind::Prob { edges } = &pcfg.loc(l).kind {
            let total: Rat = edges.iter().map(|(p, _)| *p).sum();
            if total != Rat::one() {
                violations.push(format!("l{}: prob mass {} != 1", l.0, total));
            }
            for (p, _) in edges {
                if p.is_zero() {
                    violations.push(format!("l{}: zero-probability edge in support", l.0));
                }
            }
        }
    }

    // Initial configuration inside its invariant.
    if !c
        .invariants
        .at(pcfg.init_loc)
        .holds_rat(&|v| pcfg.init_vals[v.0 as usize])
    {
        violations.push("initial configuration violates the invariant".to_string());
    }

    // Guard partition at deterministic locations, sampled from the invariant.
    let mut rng = SplitMix64::new(opts.seed);
    for l in pcfg.loc_ids() {
        if let LocKind::Det { edges } = &pcfg.loc(l).kind {
            if edges.len() <= 1 {
                continue;
            }
            let inv = c.invariants.at(l);
            let box_bounds = invariant_box(pcfg, inv);
            let mut checked = 0usize;
            let mut tries = 0usize;
            while checked < opts.samples_per_location && tries < opts.samples_per_location * 20 {
                tries += 1;
                let vals: Vec<f64> = box_bounds
                    .iter()
                    .map(|(lo, hi)| lo + (hi - lo) * rng.next_f64())
                    .collect();
                if !inv.holds_f64(&|v| vals[v.0 as usize]) {
                    continue;
                }
                checked += 1;
                let hits = edges
                    .iter()
                    .filter(|(g, _)| g.holds_f64(&|v| vals[v.0 as usize]))
                    .count();
                if hits != 1 {
                    violations.push(format!(
                        "l{}: guard partition violated at sampled valuation {:?} ({} guards hold)",
                        l.0, vals, hits
                    ));
                    break;
                }
            }
        }
    }

    // Invariant inductiveness along simulated trajectories: every reached
    // configuration must satisfy its location invariant. Sampling reachable
    // states keeps the check meaningful for annotations that over-approximate
    // only the reachable region.
    let sched = UniformRandom;
    for t in 0..opts.trajectories {
        let mut rng = SplitMix64::new(opts.seed ^ (t as u64).wrapping_mul(0x9e3779b97f4a7c15));
        let mut loc = pcfg.init_loc;
        let mut vals: Vec<f64> = pcfg.init_vals.iter().map(rat_to_f64).collect();
        for _ in 0..opts.trajectory_steps {
            if !c.invariants.at(loc).holds_f64(&|v| vals[v.0 as usize]) {
                violations.push(format!(
                    "invariant violated on a reachable configuration at l{} ({:?})",
                    loc.0, vals
                ));
                break;
            }
            if c.terminals.contains_f64(loc, &|v| vals[v.0 as usize]) {
                break;
            }
            match crate::sim::run::step(pcfg, loc, &mut vals, &sched, &mut rng) {
                Ok(next) => loc = next,
                Err(e) => {
                    violations.push(format!("step failed during inductiveness check: {e}"));
                    break;
                }
            }
        }
    }

    violations.dedup();
    Report { violations }
}

/// Extracts a sampling box from single-variable bound atoms of the first
/// disjunct; variables without bounds get a default range.
pub fn invariant_box(pcfg: &Pcfg, inv: &Predicate) -> Vec<(f64, f64)> {
    let mut bounds = vec![(-10.0f64, 10.0f64); pcfg.num_vars()];
    if let Some(conj) = inv.disjuncts.first() {
        for atom in conj {
            if atom.op == AtomOp::Eq {
                continue;
            }
            let vars = atom.poly.vars();
            if vars.len() != 1 || !atom.poly.is_linear() {
                continue;
            }
            let v = vars[0];
            let a = rat_to_f64(&atom.poly.linear_coeff(v));
            let b = rat_to_f64(&atom.poly.constant_part());
            // a*x + b >= 0
            if a > 0.0 {
                bounds[v.0 as usize].0 = bounds[v.0 as usize].0.max(-b / a);
            } else if a < 0.0 {
                bounds[v.0 as usize].1 = bounds[v.0 as usize].1.min(-b / a);
            }
        }
    }
    for (lo, hi) in bounds.iter_mut() {
        if *lo > *hi {
            std::mem::swap(lo, hi);
        }
        if !lo.is_finite() {
            *lo = -10.0;
        }
        if !hi.is_finite() {
            *hi = 10.0;
        }
        if *hi - *lo < 1e-9 {
            *hi = *lo + 1.0;
        }
    }
    let _ = VarId(0);
    bounds
}
