//! Exact reaching-time moments on Markov chains (no nondeterminism) by
//! solving one linear system per moment order, lowest first.
//!
//! For each k the unknowns satisfy
//! `m_k(s) = sum_t P(s,t) * (a^k + sum_{j<=k} C(k,j) a^{k-j} m_j(t))`
//! with `m_k = 0` on terminal states; moving the `m_k(t)` terms to the left
//! leaves a linear system over the transient states whose right-hand side
//! uses only already-computed lower moments.

use super::graph::{FiniteStateGraph, StateKind};
use super::value_iter::StateMoments;
use crate::num::rat_to_f64;

#[derive(Debug, Clone, thiserror::Error)]
pub enum MarkovError {
    #[error("graph has nondeterministic states")]
    HasNondet,
    #[error("singular system: the chain does not reach the destination almost surely")]
    Singular,
}

fn binom(n: u32, k: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc *= (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

pub fn exact_moments_markov(g: &FiniteStateGraph, k_max: u32) -> Result<StateMoments, MarkovError> {
    let n = g.len();
    if !g.nondet_states().is_empty() {
        return Err(MarkovError::HasNondet);
    }
    // Transition rows as (prob, target) lists.
    let rows: Vec<Vec<(f64, usize)>> = g
        .kinds
        .iter()
        .map(|k| match k {
            StateKind::Terminal => Vec::new(),
            StateKind::Det(t) => vec![(1.0, t.0 as usize)],
            StateKind::Prob(edges) => edges
                .iter()
                .map(|(p, t)| (rat_to_f64(p), t.0 as usize))
                .collect(),
            StateKind::Nondet(_) => unreachable!(),
        })
        .collect();

    let transient: Vec<usize> = (0..n)
        .filter(|&s| !matches!(g.kinds[s], StateKind::Terminal))
        .collect();
    let index_of: Vec<Option<usize>> = {
        let mut ix = vec![None; n];
        for (i, &s) in transient.iter().enumerate() {
            ix[s] = Some(i);
        }
        ix
    };
    let m = transient.len();
    let mut moments: StateMoments = vec![vec![0.0; k_max as usize]; n];

    for k in 1..=k_max {
        // Assemble (I - P) x = rhs over transient states.
        let mut a = vec![vec![0.0f64; m]; m];
        let mut b = vec![0.0f64; m];
        for (i, &s) in transient.iter().enumerate() {
            a[i][i] = 1.0;
            let rew = g.rewards[s];
            for (p, t) in &rows[s] {
                if let Some(j) = index_of[*t] {
                    a[i][j] -= p;
                }
                let mut lower = rew.powi(k as i32);
                for j in 1..k {
                    lower += binom(k, j) * rew.powi((k - j) as i32)
                        * moments[*t][(j - 1) as usize];
                }
                b[i] += p * lower;
            }
        }
        let x = gauss_solve(a, b).ok_or(MarkovError::Singular)?;
        for (i, &s) in transient.iter().enumerate() {
            moments[s][(k - 1) as usize] = x[i];
        }
    }
    Ok(moments)
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;
    use crate::oracle::graph::{StateId, StateKind};
    use crate::pcfg::LocId;

    fn graph(kinds: Vec<StateKind>) -> FiniteStateGraph {
        let n = kinds.len();
        FiniteStateGraph {
            kinds,
            rewards: vec![1.0; n],
            configs: vec![(LocId(0), vec![]); n],
            init: StateId(0),
        }
    }

    #[test]
    fn one_step_chain() {
        let g = graph(vec![StateKind::Det(StateId(1)), StateKind::Terminal]);
        let m = exact_moments_markov(&g, 2).unwrap();
        assert_eq!(m[0], vec![1.0, 1.0]);
    }

    #[test]
    fn geometric_loop_has_known_moments() {
        // Stay with probability 1/2, exit with probability 1/2:
        // T ~ Geometric(1/2) with E[T] = 2 and E[T^2] = 6.
        let g = graph(vec![
            StateKind::Prob(vec![(rat(1, 2), StateId(0)), (rat(1, 2), StateId(1))]),
            StateKind::Terminal,
        ]);
        let m = exact_moments_markov(&g, 3).unwrap();
        assert!((m[0][0] - 2.0).abs() < 1e-9);
        assert!((m[0][1] - 6.0).abs() < 1e-9);
        // E[T^3] for Geometric(1/2) is 26.
        assert!((m[0][2] - 26.0).abs() < 1e-9);
    }

    #[test]
    fn non_terminating_chain_is_singular() {
        let g = graph(vec![StateKind::Det(StateId(0)), StateKind::Terminal]);
        assert!(matches!(
            exact_moments_markov(&g, 1),
            Err(MarkovError::Singular)
        ));
    }
}
