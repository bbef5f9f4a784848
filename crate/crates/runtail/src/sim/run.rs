//! Operational semantics and Monte Carlo estimation.

use super::rng::SplitMix64;
use super::sched::Scheduler;
use crate::num::rat_to_f64;
use crate::par;
use crate::pcfg::{Compiled, LocId, LocKind, Pcfg, Update};
use crate::syntax::DistExpr;
use serde::Serialize;

#[derive(Debug, Clone, thiserror::Error)]
pub enum StepError {
    #[error("no guard holds at l{0} (guard partition violated)")]
    NoGuard(u32),
    #[error("scheduler chose a value outside the ndet predicate at l{0}")]
    BadNdetValue(u32),
}

/// One transition of the successor relation. Mutates the valuation in place
/// and returns the next location.
pub fn step(
    pcfg: &Pcfg,
    loc: LocId,
    vals: &mut [f64],
    sched: &dyn Scheduler,
    rng: &mut SplitMix64,
) -> Result<LocId, StepError> {
    match &pcfg.loc(loc).kind {
        LocKind::Det { edges } => {
            for (guard, target) in edges {
                if guard.holds_f64(&|v| vals[v.0 as usize]) {
                    return Ok(*target);
                }
            }
            Err(StepError::NoGuard(loc.0))
        }
        LocKind::Prob { edges } => {
            let u = rng.next_f64();
            let mut acc = 0.0;
            for (p, target) in edges {
                acc += rat_to_f64(p);
                if u < acc {
                    return Ok(*target);
                }
            }
            Ok(edges.last().expect("probabilistic location with no edges").1)
        }
        LocKind::Nondet { succs } => {
            let ix = sched.choose_branch(loc, succs.len(), vals, rng);
            Ok(succs[ix.min(succs.len() - 1)])
        }
        LocKind::Assign { var, update, succ } => {
            let new = match update {
                Update::Expr(e) => e.eval_f64(&|v| vals[v.0 as usize]),
                Update::Sample(d) => sample_dist(d, rng),
                Update::Choose(pred) => {
                    let x = sched.choose_value(loc, pred, *var, vals, rng);
                    let ok = pred.holds_f64(&|w| {
                        if w == *var {
                            x
                        } else {
                            vals[w.0 as usize]
                        }
                    });
                    if !ok {
                        return Err(StepError::BadNdetValue(loc.0));
                    }
                    x
                }
            };
            vals[var.0 as usize] = new;
            Ok(*succ)
        }
    }
}

pub fn sample_dist(d: &DistExpr, rng: &mut SplitMix64) -> f64 {
    match d {
        // Inverse CDF of the uniform distribution.
        DistExpr::Uniform(a, b) => {
            let (a, b) = (rat_to_f64(a), rat_to_f64(b));
            a + (b - a) * rng.next_f64()
        }
        DistExpr::Normal(m, s) => rat_to_f64(m) + rat_to_f64(s) * rng.next_normal(),
        // Linear scan over the cumulative weights.
        DistExpr::Discrete(pairs) => {
            let u = rng.next_f64();
            let mut acc = 0.0;
            for (v, p) in pairs {
                acc += rat_to_f64(p);
                if u < acc {
                    return rat_to_f64(v);
                }
            }
            rat_to_f64(&pairs.last().expect("empty discrete distribution").0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSample {
    /// First index whose configuration lies in the terminal set, or `None`
    /// if the run did not terminate within the cutoff.
    pub steps: Option<u64>,
    pub accumulated_reward: f64,
}

/// Runs the chain from the initial configuration until it enters the
/// terminal set or exceeds `cutoff` steps.
pub fn sample_runtime(
    c: &Compiled,
    sched: &dyn Scheduler,
    rng: &mut SplitMix64,
    cutoff: u64,
) -> Result<RunSample, StepError> {
    let pcfg = &c.pcfg;
    let mut loc = pcfg.init_loc;
    let mut vals: Vec<f64> = pcfg.init_vals.iter().map(rat_to_f64).collect();
    let mut reward = 0.0;
    for i in 0..=cutoff {
        if c.terminals.contains_f64(loc, &|v| vals[v.0 as usize]) {
            return Ok(RunSample {
                steps: Some(i),
                accumulated_reward: reward,
            });
        }
        if i == cutoff {
            break;
        }
        reward += rat_to_f64(&pcfg.loc(loc).reward);
        loc = step(pcfg, loc, &mut vals, sched, rng)?;
    }
    Ok(RunSample {
        steps: None,
        accumulated_reward: reward,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentStat {
    pub k: u32,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentsEstimate {
    pub trials: u64,
    pub timeouts: u64,
    pub moments: Vec<MomentStat>,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Step(#[from] StepError),
    #[error("all {0} runs timed out")]
    AllTimedOut(u64),
}

/// Collects per-trial step counts; trial `i` always uses the same stream so
/// results are identical regardless of parallelism.
pub fn collect_steps(
    c: &Compiled,
    sched: &dyn Scheduler,
    trials: u64,
    cutoff: u64,
    seed: u64,
) -> Result<Vec<Option<u64>>, StepError> {
    let results = par::map_indexed(trials as usize, |i| {
        let mut rng = SplitMix64::for_trial(seed, i as u64);
        sample_runtime(c, sched, &mut rng, cutoff).map(|r| r.steps)
    });
    results.into_iter().collect()
}

/// Sequential twin of [`collect_steps`] (benchmark comparison path).
pub fn collect_steps_seq(
    c: &Compiled,
    sched: &dyn Scheduler,
    trials: u64,
    cutoff: u64,
    seed: u64,
) -> Result<Vec<Option<u64>>, StepError> {
    let results = par::map_indexed_seq(trials as usize, |i| {
        let mut rng = SplitMix64::for_trial(seed, i as u64);
        sample_runtime(c, sched, &mut rng, cutoff).map(|r| r.steps)
    });
    results.into_iter().collect()
}

/// Pairwise summation over a fixed-order slice: order-independent of how the
/// values were produced.
fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

pub fn moments_from_steps(steps: &[Option<u64>], k_max: u32) -> Result<MomentsEstimate, SimError> {
    let trials = steps.len() as u64;
    let finished: Vec<u64> = steps.iter().copied().flatten().collect();
    let timeouts = trials - finished.len() as u64;
    if finished.is_empty() {
        return Err(SimError::AllTimedOut(trials));
    }
    let n = finished.len() as f64;
    let mut moments = Vec::new();
    for k in 1..=k_max {
        let pows: Vec<f64> = finished
            .iter()
            .map(|&s| (s as f64).powi(k as i32))
            .collect();
        let mean = pairwise_sum(&pows) / n;
        let sq: Vec<f64> = pows.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&sq) / n.max(2.0);
        let stderr = (var / n).sqrt();
        moments.push(MomentStat { k, mean, stderr });
    }
    Ok(MomentsEstimate {
        trials,
        timeouts,
        moments,
    })
}

/// Monte Carlo estimate of the first `k_max` runtime moments. Timeout runs
/// are excluded from the means but reported, so results read as lower
/// estimates when `timeouts > 0`.
pub fn estimate_moments(
    c: &Compiled,
    sched: &dyn Scheduler,
    trials: u64,
    k_max: u32,
    cutoff: u64,
    seed: u64,
) -> Result<MomentsEstimate, SimError> {
    let steps = collect_steps(c, sched, trials, cutoff, seed)?;
    moments_from_steps(&steps, k_max)
}

#[derive(Debug, Clone, Serialize)]
pub struct TailEstimate {
    pub deadline: u64,
    pub p_hat: f64,
    pub stderr: f64,
    pub trials: u64,
    pub timeouts: u64,
}

/// Empirical tail probability `P(T >= d)`. Runs that hit the cutoff count as
/// `T >= d` whenever the cutoff is at least `d`, keeping the estimate
/// conservative.
pub fn estimate_tail(
    c: &Compiled,
    sched: &dyn Scheduler,
    trials: u64,
    deadline: u64,
    cutoff: u64,
    seed: u64,
) -> Result<TailEstimate, SimError> {
    let steps = collect_steps(c, sched, trials, cutoff, seed)?;
    Ok(tail_from_steps(&steps, deadline))
}

pub fn tail_from_steps(steps: &[Option<u64>], deadline: u64) -> TailEstimate {
    let trials = steps.len() as u64;
    let mut hits = 0u64;
    let mut timeouts = 0u64;
    for s in steps {
        match s {
            Some(t) if *t >= deadline => hits += 1,
            Some(_) => {}
            None => {
                timeouts += 1;
                hits += 1;
            }
        }
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    TailEstimate {
        deadline,
        p_hat: p,
        stderr: (p * (1.0 - p) / n).sqrt(),
        trials,
        timeouts,
    }
}
