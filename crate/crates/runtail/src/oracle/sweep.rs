//! Exhaustive sweep over memoryless deterministic schedulers: every
//! assignment of a fixed successor to each nondeterministic state induces a
//! Markov chain whose exact moments are computed; the result is the
//! componentwise maximum with the argmax schedulers.

use super::graph::{FiniteStateGraph, StateId};
use super::markov::{exact_moments_markov, MarkovError};
use crate::par;
use std::collections::BTreeMap;

#[derive(Debug, Clone, thiserror::Error)]
pub enum SweepError {
    #[error("scheduler product {0} exceeds the configured limit {1}")]
    TooManySchedulers(u128, u128),
    #[error(transparent)]
    Markov(#[from] MarkovError),
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Componentwise maxima of the initial-state moments, k = 1..K.
    pub max_moments: Vec<f64>,
    /// For each k, the scheduler (choice per nondeterministic state)
    /// attaining the maximum.
    pub argmax: Vec<BTreeMap<StateId, usize>>,
    pub schedulers_tried: u128,
}

pub fn scheduler_sweep(
    g: &FiniteStateGraph,
    k_max: u32,
    limit: u128,
) -> Result<SweepResult, SweepError> {
    let nd = g.nondet_states();
    let fanouts: Vec<usize> = nd
        .iter()
        .map(|s| match &g.kinds[s.0 as usize] {
            super::graph::StateKind::Nondet(succs) => succs.len(),
            _ => unreachable!(),
        })
        .collect();
    let total: u128 = fanouts.iter().map(|&f| f as u128).product();
    if total > limit {
        return Err(SweepError::TooManySchedulers(total, limit));
    }

    let per_sched = par::map_indexed(total as usize, |ix| {
        let mut rest = ix as u128;
        let mut choices = BTreeMap::new();
        for (s, f) in nd.iter().zip(&fanouts) {
            choices.insert(*s, (rest % *f as u128) as usize);
            rest /= *f as u128;
        }
        let chain = g.resolve(&choices);
        exact_moments_markov(&chain, k_max).map(|m| (choices, m[g.init.0 as usize].clone()))
    });

    let mut max_moments = vec![f64::NEG_INFINITY; k_max as usize];
    let mut argmax: Vec<BTreeMap<StateId, usize>> = vec![BTreeMap::new(); k_max as usize];
    for entry in per_sched {
        let (choices, moments) = entry?;
        for k in 0..k_max as usize {
            if moments[k] > max_moments[k] {
                max_moments[k] = moments[k];
                argmax[k] = choices.clone();
            }
        }
    }
    Ok(SweepResult {
        max_moments,
        argmax,
        schedulers_tried: total,
    })
}
