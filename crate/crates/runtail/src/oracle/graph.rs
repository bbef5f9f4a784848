//! Explicit finite-state expansion of a pCFG with exact rational valuations.

use crate::num::{rat_to_f64, Rat};
use crate::pcfg::{Compiled, LocId, LocKind, Update};
use crate::syntax::{DistExpr, VarId};
use std::collections::{BTreeMap, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub u32);

#[derive(Debug, Clone, PartialEq)]
pub enum StateKind {
    Terminal,
    /// Single successor (deterministic transition or resolved assignment).
    Det(StateId),
    /// Probabilistic successors with exact weights.
    Prob(Vec<(Rat, StateId)>),
    /// Scheduler-resolved successors.
    Nondet(Vec<StateId>),
}

#[derive(Debug, Clone)]
pub struct FiniteStateGraph {
    pub kinds: Vec<StateKind>,
    pub rewards: Vec<f64>,
    /// Back-pointers into the pCFG for diagnostics.
    pub configs: Vec<(LocId, Vec<Rat>)>,
    pub init: StateId,
}

impl FiniteStateGraph {
    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn nondet_states(&self) -> Vec<StateId> {
        (0..self.kinds.len() as u32)
            .map(StateId)
            .filter(|s| matches!(self.kinds[s.0 as usize], StateKind::Nondet(_)))
            .collect()
    }

    /// Replaces every nondeterministic state by a fixed successor choice.
    pub fn resolve(&self, choices: &BTreeMap<StateId, usize>) -> FiniteStateGraph {
        let kinds = self
            .kinds
            .iter()
            .enumerate()
            .map(|(i, k)| match k {
                StateKind::Nondet(succs) => {
                    let ix = choices.get(&StateId(i as u32)).copied().unwrap_or(0);
                    StateKind::Det(succs[ix.min(succs.len() - 1)])
                }
                other => other.clone(),
            })
            .collect();
        FiniteStateGraph {
            kinds,
            rewards: self.rewards.clone(),
            configs: self.configs.clone(),
            init: self.init,
        }
    }

    /// Replaces every two-way nondeterministic state by a coin flip taking
    /// the first successor with probability `p`.
    pub fn bernoulli(&self, p: Rat) -> FiniteStateGraph {
        use num_traits::One;
        let kinds = self
            .kinds
            .iter()
            .map(|k| match k {
                StateKind::Nondet(succs) if succs.len() == 1 => StateKind::Det(succs[0]),
                StateKind::Nondet(succs) => {
                    let q = Rat::one() - p;
                    let mut edges = vec![(p, succs[0])];
                    // Remaining mass on the second successor.
                    edges.push((q, succs[1]));
                    StateKind::Prob(edges)
                }
                other => other.clone(),
            })
            .collect();
        FiniteStateGraph {
            kinds,
            rewards: self.rewards.clone(),
            configs: self.configs.clone(),
            init: self.init,
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum EnumerateError {
    #[error("state space not finite/boundable: continuous support at l{0}")]
    ContinuousSupport(u32),
    #[error("state space not finite/boundable: nondeterministic assignment at l{0}")]
    NdetAssignment(u32),
    #[error("reachable state count exceeds bound {0}")]
    TooManyStates(usize),
    #[error("no guard holds at l{0} during enumeration")]
    StuckGuard(u32),
}

/// BFS over successors from the initial configuration with exact rational
/// arithmetic. Fails when the reachable set exceeds `count_bound` or when a
/// sampled/nondeterministic assignment has non-finite support.
pub fn enumerate_states(
    c: &Compiled,
    step_bound: usize,
    count_bound: usize,
) -> Result<FiniteStateGraph, EnumerateError> {
    let pcfg = &c.pcfg;
    let mut ids: BTreeMap<(LocId, Vec<Rat>), StateId> = BTreeMap::new();
    let mut kinds: Vec<StateKind> = Vec::new();
    let mut rewards: Vec<f64> = Vec::new();
    let mut configs: Vec<(LocId, Vec<Rat>)> = Vec::new();
    let mut queue: VecDeque<(StateId, usize)> = VecDeque::new();

    let mut intern =
        |loc: LocId,
         vals: Vec<Rat>,
         kinds: &mut Vec<StateKind>,
         rewards: &mut Vec<f64>,
         configs: &mut Vec<(LocId, Vec<Rat>)>,
         queue: &mut VecDeque<(StateId, usize)>,
         depth: usize|
         -> Result<StateId, EnumerateError> {
            if let Some(id) = ids.get(&(loc, vals.clone())) {
                return Ok(*id);
            }
            let id = StateId(kinds.len() as u32);
            if kinds.len() >= count_bound {
                return Err(EnumerateError::TooManyStates(count_bound));
            }
            ids.insert((loc, vals.clone()), id);
            kinds.push(StateKind::Terminal); // placeholder
            rewards.push(rat_to_f64(&pcfg.loc(loc).reward));
            configs.push((loc, vals));
            queue.push_back((id, depth));
            Ok(id)
        };

    let init = intern(
        pcfg.init_loc,
        pcfg.init_vals.clone(),
        &mut kinds,
        &mut rewards,
        &mut configs,
        &mut queue,
        0,
    )?;

    while let Some((sid, depth)) = queue.pop_front() {
        let (loc, vals) = configs[sid.0 as usize].clone();
        let value = |v: VarId| vals[v.0 as usize];
        if c.terminals.at(loc).holds_rat(&value) {
            kinds[sid.0 as usize] = StateKind::Terminal;
            rewards[sid.0 as usize] = 0.0;
            continue;
        }
        if depth >= step_bound {
            // Beyond the horizon: treat as absorbing to keep the graph
            // well-defined; callers choose bounds large enough to converge.
            kinds[sid.0 as usize] = StateKind::Det(sid);
            continue;
        }
        let kind = match &pcfg.loc(loc).kind {
            LocKind::Det { edges } => {
                let mut target = None;
                for (g, t) in edges {
                    if g.holds_rat(&value) {
                        target = Some(*t);
                        break;
                    }
                }
                let t = target.ok_or(EnumerateError::StuckGuard(loc.0))?;
                StateKind::Det(intern(
                    t,
                    vals.clone(),
                    &mut kinds,
                    &mut rewards,
                    &mut configs,
                    &mut queue,
                    depth + 1,
                )?)
            }
            LocKind::Prob { edges } => {
                let mut out = Vec::new();
                for (p, t) in edges {
                    let id = intern(
                        *t,
                        vals.clone(),
                        &mut kinds,
                        &mut rewards,
                        &mut configs,
                        &mut queue,
                        depth + 1,
                    )?;
                    out.push((*p, id));
                }
                StateKind::Prob(out)
            }
            LocKind::Nondet { succs } => {
                let mut out = Vec::new();
                for t in succs {
                    out.push(intern(
                        *t,
                        vals.clone(),
                        &mut kinds,
                        &mut rewards,
                        &mut configs,
                        &mut queue,
                        depth + 1,
                    )?);
                }
                StateKind::Nondet(out)
            }
            LocKind::Assign { var, update, succ } => match update {
                Update::Expr(e) => {
                    let mut nv = vals.clone();
                    nv[var.0 as usize] = e.eval_rat(&value);
                    StateKind::Det(intern(
                        *succ,
                        nv,
                        &mut kinds,
                        &mut rewards,
                        &mut configs,
                        &mut queue,
                        depth + 1,
                    )?)
                }
                Update::Sample(DistExpr::Discrete(pairs)) => {
                    let mut out = Vec::new();
                    for (v, p) in pairs {
                        let mut nv = vals.clone();
                        nv[var.0 as usize] = *v;
                        let id = intern(
                            *succ,
                            nv,
                            &mut kinds,
                            &mut rewards,
                            &mut configs,
                            &mut queue,
                            depth + 1,
                        )?;
                        out.push((*p, id));
                    }
                    StateKind::Prob(out)
                }
                Update::Sample(_) => {
                    return Err(EnumerateError::ContinuousSupport(loc.0));
                }
                Update::Choose(_) => {
                    return Err(EnumerateError::NdetAssignment(loc.0));
                }
            },
        };
        kinds[sid.0 as usize] = kind;
    }

    Ok(FiniteStateGraph {
        kinds,
        rewards,
        configs,
        init,
    })
}
