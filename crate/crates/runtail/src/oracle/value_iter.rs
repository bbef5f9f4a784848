//! Kleene iteration of the K-moment operator on a finite graph.
//!
//! Each sweep applies the time-elapse map
//! `el_a^{K,k}(x_1..x_K) = a^k + sum_{j=1..k} C(k,j) a^{k-j} x_j`
//! to every successor value vector, then combines: weighted average at
//! probabilistic states, componentwise max at nondeterministic states, copy
//! at deterministic states. Terminal states stay at zero. The sweeps are
//! componentwise nondecreasing and converge to the least fixed point.

use super::graph::{FiniteStateGraph, StateKind};

const OVERFLOW_GUARD: f64 = 1e300;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ValueIterError {
    #[error("moments unbounded up to horizon (value exceeded overflow guard)")]
    Diverged,
}

/// Per-state moment vectors: `out[state][k-1]` bounds the k-th moment.
pub type StateMoments = Vec<Vec<f64>>;

fn binom(n: u32, k: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc *= (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// `el_a^{K,k}` applied to a successor's moment vector.
pub fn time_elapse(a: f64, k: u32, succ: &[f64]) -> f64 {
    let mut acc = a.powi(k as i32);
    for j in 1..=k {
        acc += binom(k, j) * a.powi((k - j) as i32) * succ[(j - 1) as usize];
    }
    acc
}

pub fn value_iterate(
    g: &FiniteStateGraph,
    k_max: u32,
    max_iters: usize,
    tol: f64,
) -> Result<StateMoments, ValueIterError> {
    let n = g.len();
    let kk = k_max as usize;
    let mut cur: StateMoments = vec![vec![0.0; kk]; n];
    let mut next: StateMoments = vec![vec![0.0; kk]; n];
    for _ in 0..max_iters {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            let a = g.rewards[s];
            for k in 1..=k_max {
                let v = match &g.kinds[s] {
                    StateKind::Terminal => 0.0,
                    StateKind::Det(t) => time_elapse(a, k, &cur[t.0 as usize]),
                    StateKind::Prob(edges) => edges
                        .iter()
                        .map(|(p, t)| {
                            crate::num::rat_to_f64(p) * time_elapse(a, k, &cur[t.0 as usize])
                        })
                        .sum(),
                    StateKind::Nondet(succs) => succs
                        .iter()
                        .map(|t| time_elapse(a, k, &cur[t.0 as usize]))
                        .fold(0.0, f64::max),
                };
                if v > OVERFLOW_GUARD {
                    return Err(ValueIterError::Diverged);
                }
                delta = delta.max((v - cur[s][(k - 1) as usize]).abs());
                next[s][(k - 1) as usize] = v;
            }
        }
        std::mem::swap(&mut cur, &mut next);
        if delta < tol {
            return Ok(cur);
        }
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::graph::{StateId, StateKind};

    fn chain(kinds: Vec<StateKind>) -> FiniteStateGraph {
        let n = kinds.len();
        FiniteStateGraph {
            kinds,
            rewards: vec![1.0; n],
            configs: vec![(crate::pcfg::LocId(0), vec![]); n],
            init: StateId(0),
        }
    }

    #[test]
    fn terminal_state_is_zero() {
        let g = chain(vec![StateKind::Terminal]);
        let m = value_iterate(&g, 3, 100, 1e-12).unwrap();
        assert_eq!(m[0], vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn deterministic_chain_counts_steps() {
        // s0 -> s1 -> terminal: two steps, so moments (2, 4, 8).
        let g = chain(vec![
            StateKind::Det(StateId(1)),
            StateKind::Det(StateId(2)),
            StateKind::Terminal,
        ]);
        let m = value_iterate(&g, 3, 100, 1e-12).unwrap();
        assert_eq!(m[0], vec![2.0, 4.0, 8.0]);
    }

    #[test]
    fn overflow_guard_reports_divergence() {
        let mut g = chain(vec![StateKind::Det(StateId(0))]);
        g.rewards = vec![1e200];
        assert!(matches!(
            value_iterate(&g, 2, 100, 1e-12),
            Err(ValueIterError::Diverged)
        ));
    }

    #[test]
    fn non_terminating_loop_grows_monotonically_to_the_horizon() {
        let g = chain(vec![StateKind::Det(StateId(0))]);
        let m = value_iterate(&g, 1, 1000, 1e-12).unwrap();
        assert_eq!(m[0][0], 1000.0);
    }
}
