//! Numeric spot-check of a solved witness, independent of the LP: at sampled
//! reachable configurations the witness must satisfy the decrease condition
//! `eta_k(c) >= X(el . eta)_k(c)` outside the terminal set and be nonnegative
//! everywhere on the invariant.

use super::constraints::Witness;
use crate::num::rat_to_f64;
use crate::pcfg::{Compiled, LocId, LocKind, Update};
use crate::sim::rng::SplitMix64;
use crate::sim::sched::{pick_in_pred, ValuePolicy};
use crate::sim::{Bernoulli, Scheduler, UniformRandom};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub configurations: usize,
    pub max_decrease_violation: f64,
    pub max_nonneg_violation: f64,
    pub ok: bool,
}

fn binom(n: u32, k: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc *= (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// `el_a^{K,k}` applied to the witness vector at a successor configuration.
fn elapse_eval(w: &Witness, l: LocId, k: u32, a: f64, vals: &[f64]) -> f64 {
    let mut acc = a.powi(k as i32);
    for j in 1..=k {
        acc += binom(k, j) * a.powi((k - j) as i32) * w.eval(l, j, vals);
    }
    acc
}

/// Expectation of `el . eta` after resampling variable `v`: expands witness
/// monomials in powers of `v` and substitutes exact distribution moments.
fn elapse_expect(
    w: &Witness,
    l: LocId,
    k: u32,
    a: f64,
    vals: &[f64],
    v: crate::syntax::VarId,
    dist: &crate::syntax::DistExpr,
) -> f64 {
    let mut acc = a.powi(k as i32);
    for j in 1..=k {
        let mut e = 0.0;
        for (m, c) in w.basis.iter().zip(&w.coeffs[l.0 as usize][j as usize - 1]) {
            let (exp, rest) = m.without(v);
            let mut x = *c * rat_to_f64(&dist.raw_moment(exp));
            for &(rv, re) in &rest.0 {
                x *= vals[rv.0 as usize].powi(re as i32);
            }
            e += x;
        }
        acc += binom(k, j) * a.powi((k - j) as i32) * e;
    }
    acc
}

/// Pre-expectation of `el . eta` at a configuration (demonic at
/// nondeterministic locations; suprema over ndet assignments approximated on
/// endpoints plus a grid, which can only under-estimate and therefore never
/// rejects a genuine witness).
pub fn pre_expectation_at(
    c: &Compiled,
    w: &Witness,
    loc: LocId,
    k: u32,
    vals: &[f64],
) -> Option<f64> {
    let pcfg = &c.pcfg;
    let a = rat_to_f64(&pcfg.loc(loc).reward);
    match &pcfg.loc(loc).kind {
        LocKind::Det { edges } => {
            for (g, succ) in edges {
                if g.holds_f64(&|v| vals[v.0 as usize]) {
                    return Some(elapse_eval(w, *succ, k, a, vals));
                }
            }
            None
        }
        LocKind::Prob { edges } => Some(
            edges
                .iter()
                .map(|(p, succ)| rat_to_f64(p) * elapse_eval(w, *succ, k, a, vals))
                .sum(),
        ),
        LocKind::Nondet { succs } => Some(
            succs
                .iter()
                .map(|succ| elapse_eval(w, *succ, k, a, vals))
                .fold(f64::NEG_INFINITY, f64::max),
        ),
        LocKind::Assign { var, update, succ } => match update {
            Update::Expr(e) => {
                let mut nv = vals.to_vec();
                nv[var.0 as usize] = e.eval_f64(&|v| vals[v.0 as usize]);
                Some(elapse_eval(w, *succ, k, a, &nv))
            }
            Update::Sample(d) => Some(elapse_expect(w, *succ, k, a, vals, *var, d)),
            Update::Choose(pred) => {
                let mut rng = SplitMix64::new(7);
                let lo = pick_in_pred(pred, *var, vals, ValuePolicy::Low, &mut rng);
                let hi = pick_in_pred(pred, *var, vals, ValuePolicy::High, &mut rng);
                let mut best = f64::NEG_INFINITY;
                let steps = 32;
                for i in 0..=steps {
                    let y = lo + (hi - lo) * i as f64 / steps as f64;
                    if !pred.holds_f64(&|v| {
                        if v == *var {
                            y
                        } else {
                            vals[v.0 as usize]
                        }
                    }) {
                        continue;
                    }
                    let mut nv = vals.to_vec();
                    nv[var.0 as usize] = y;
                    best = best.max(elapse_eval(w, *succ, k, a, &nv));
                }
                Some(best)
            }
        },
    }
}

/// Samples reachable configurations under several built-in schedulers and
/// checks the witness conditions at each.
pub fn verify_witness(
    c: &Compiled,
    w: &Witness,
    target_samples: usize,
    tol: f64,
    seed: u64,
) -> VerifyReport {
    let pcfg = &c.pcfg;
    let scheds: Vec<Box<dyn Scheduler>> = vec![
        Box::new(UniformRandom),
        Box::new(Bernoulli::new(0.9)),
        Box::new(Bernoulli::new(0.1)),
    ];
    let mut configurations = 0usize;
    let mut max_dec: f64 = 0.0;
    let mut max_nonneg: f64 = 0.0;
    let mut trajectory = 0u64;
    'outer: while configurations < target_samples {
        let sched = &scheds[(trajectory % scheds.len() as u64) as usize];
        let mut rng = SplitMix64::for_trial(seed, trajectory);
        trajectory += 1;
        if trajectory > 4 * target_samples as u64 {
            break;
        }
        let mut loc = pcfg.init_loc;
        let mut vals: Vec<f64> = pcfg.init_vals.iter().map(rat_to_f64).collect();
        for _ in 0..10_000 {
            let in_terminal = c.terminals.contains_f64(loc, &|v| vals[v.0 as usize]);
            for k in 1..=w.k_max {
                let eta = w.eval(loc, k, &vals);
                max_nonneg = max_nonneg.max(-eta);
                if !in_terminal {
                    if let Some(pre) = pre_expectation_at(c, w, loc, k, &vals) {
                        max_dec = max_dec.max(pre - eta);
                    }
                }
            }
            configurations += 1;
            if configurations >= target_samples {
                break 'outer;
            }
            if in_terminal {
                break;
            }
            match crate::sim::run::step(pcfg, loc, &mut vals, sched.as_ref(), &mut rng) {
                Ok(next) => loc = next,
                Err(_) => break,
            }
        }
    }
    VerifyReport {
        configurations,
        max_decrease_violation: max_dec,
        max_nonneg_violation: max_nonneg,
        ok: max_dec <= tol && max_nonneg <= tol,
    }
}
