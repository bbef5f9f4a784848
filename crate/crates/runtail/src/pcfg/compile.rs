//! AST to pCFG compilation.
//!
//! One location per statement plus a terminal location with a self-loop.
//! `while`/`if` over predicates become deterministic locations with
//! guard/negated-guard edges, `if prob(p)` a probabilistic location, `if *` a
//! nondeterministic location, assignments assignment locations, and
//! `refute(phi)` a deterministic location routing `phi`-states to the
//! terminal location.

use super::model::*;
use crate::num::Rat;
use crate::syntax::{printer, LoopCond, Poly, Predicate, Program, Stmt, Validated};
use num_traits::{One, Zero};

const NEGATION_LIMIT: usize = 256;

#[derive(Debug, Clone, thiserror::Error)]
pub enum CompileError {
    #[error("guard negation too large: {0}")]
    NegationTooLarge(String),
    #[error("initial valuation violates the invariant at the initial location")]
    InitOutsideInvariant,
}

#[derive(Debug, Clone, Copy)]
pub struct CompileOptions {
    /// Fold the maximal prefix of constant assignments into the initial
    /// valuation instead of emitting locations for them.
    pub fold_init_prefix: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            fold_init_prefix: true,
        }
    }
}

pub fn compile(v: &Validated) -> Result<Compiled, CompileError> {
    compile_with(v, CompileOptions::default())
}

struct Builder<'a> {
    prog: &'a Program,
    locations: Vec<Location>,
    /// Local invariant annotations collected for loop-head locations.
    local_inv: Vec<Option<Predicate>>,
}

impl<'a> Builder<'a> {
    fn reserve(&mut self, label: String) -> LocId {
        self.locations.push(Location {
            kind: LocKind::Nondet { succs: Vec::new() },
            label,
            reward: Rat::one(),
        });
        self.local_inv.push(None);
        LocId((self.locations.len() - 1) as u32)
    }

    fn set_kind(&mut self, l: LocId, kind: LocKind) {
        self.locations[l.0 as usize].kind = kind;
    }

    fn negate(&self, p: &Predicate) -> Result<Predicate, CompileError> {
        p.negate(NEGATION_LIMIT)
            .map_err(CompileError::NegationTooLarge)
    }

    /// Compiles a statement sequence so that control continues at `next`.
    /// Returns the entry location.
    fn seq(&mut self, stmts: &[Stmt], next: LocId, exit: LocId) -> Result<LocId, CompileError> {
        let mut cont = next;
        for s in stmts.iter().rev() {
            cont = self.stmt(s, cont, exit)?;
        }
        Ok(cont)
    }

    fn stmt(&mut self, s: &Stmt, next: LocId, exit: LocId) -> Result<LocId, CompileError> {
        match s {
            Stmt::Skip => {
                let l = self.reserve("skip".into());
                self.set_kind(
                    l,
                    LocKind::Det {
                        edges: vec![(Predicate::truth(), next)],
                    },
                );
                Ok(l)
            }
            Stmt::Assign(v, e) => {
                let l = self.reserve(format!(
                    "{} := {}",
                    self.prog.var_name(*v),
                    printer::poly_to_string(self.prog, e)
                ));
                self.set_kind(
                    l,
                    LocKind::Assign {
                        var: *v,
                        update: Update::Expr(e.clone()),
                        succ: next,
                    },
                );
                Ok(l)
            }
            Stmt::Sample(v, d) => {
                let l = self.reserve(format!("{} := sample", self.prog.var_name(*v)));
                self.set_kind(
                    l,
                    LocKind::Assign {
                        var: *v,
                        update: Update::Sample(d.clone()),
                        succ: next,
                    },
                );
                Ok(l)
            }
            Stmt::NdetAssign(v, p) => {
                let l = self.reserve(format!("{} := ndet", self.prog.var_name(*v)));
                self.set_kind(
                    l,
                    LocKind::Assign {
                        var: *v,
                        update: Update::Choose(p.clone()),
                        succ: next,
                    },
                );
                Ok(l)
            }
            Stmt::Refute(p, inv) => {
                let l = self.reserve(format!(
                    "refute ({})",
                    printer::pred_to_string(self.prog, p)
                ));
                self.local_inv[l.0 as usize] = inv.clone();
                let neg = self.negate(p)?;
                let mut edges = Vec::new();
                if !p.is_falsity() {
                    edges.push((p.clone(), exit));
                }
                if !neg.is_falsity() {
                    edges.push((neg, next));
                }
                self.set_kind(l, LocKind::Det { edges });
                Ok(l)
            }
            Stmt::IfCond(c, t, e) => {
                let l = self.reserve("if".into());
                let then_entry = self.seq(t, next, exit)?;
                let else_entry = self.seq(e, next, exit)?;
                let neg = self.negate(c)?;
                let mut edges = Vec::new();
                if !c.is_falsity() {
                    edges.push((c.clone(), then_entry));
                }
                if !neg.is_falsity() {
                    edges.push((neg, else_entry));
                }
                self.set_kind(l, LocKind::Det { edges });
                Ok(l)
            }
            Stmt::IfProb(p, t, e) => {
                let l = self.reserve(format!("if prob({p})"));
                let then_entry = self.seq(t, next, exit)?;
                let else_entry = self.seq(e, next, exit)?;
                let mut edges = Vec::new();
                if !p.is_zero() {
                    edges.push((*p, then_entry));
                }
                let q = Rat::one() - p;
                if !q.is_zero() {
                    edges.push((q, else_entry));
                }
                self.set_kind(l, LocKind::Prob { edges });
                Ok(l)
            }
            Stmt::IfNdet(t, e) => {
                let l = self.reserve("if *".into());
                let then_entry = self.seq(t, next, exit)?;
                let else_entry = self.seq(e, next, exit)?;
                self.set_kind(
                    l,
                    LocKind::Nondet {
                        succs: vec![then_entry, else_entry],
                    },
                );
                Ok(l)
            }
            Stmt::While(cond, inv, body) => {
                let head = self.reserve("while".into());
                self.local_inv[head.0 as usize] = inv.clone();
                let body_entry = self.seq(body, head, exit)?;
                match cond {
                    LoopCond::Pred(c) => {
                        let neg = self.negate(c)?;
                        let mut edges = Vec::new();
                        if !c.is_falsity() {
                            edges.push((c.clone(), body_entry));
                        }
                        if !neg.is_falsity() {
                            edges.push((neg, next));
                        }
                        self.set_kind(head, LocKind::Det { edges });
                    }
                    LoopCond::Prob(p) => {
                        let mut edges = Vec::new();
                        if !p.is_zero() {
                            edges.push((*p, body_entry));
                        }
                        let q = Rat::one() - p;
                        if !q.is_zero() {
                            edges.push((q, next));
                        }
                        self.set_kind(head, LocKind::Prob { edges });
                    }
                    LoopCond::Ndet => {
                        self.set_kind(
                            head,
                            LocKind::Nondet {
                                succs: vec![body_entry, next],
                            },
                        );
                    }
                }
                Ok(head)
            }
        }
    }
}

pub fn compile_with(v: &Validated, opts: CompileOptions) -> Result<Compiled, CompileError> {
    let prog = &v.program;
    let n_vars = prog.num_vars();
    let mut init_vals = vec![Rat::zero(); n_vars];

    // Fold the leading run of constant assignments into the initial valuation.
    let mut body: &[Stmt] = &prog.body;
    if opts.fold_init_prefix {
        let mut folded = std::collections::BTreeSet::new();
        let mut k = 0;
        for s in prog.body.iter() {
            match s {
                Stmt::Assign(v, e) if e.vars().iter().all(|w| folded.contains(w)) => {
                    init_vals[v.0 as usize] =
                        e.eval_rat(&|w| init_vals[w.0 as usize]);
                    folded.insert(*v);
                    k += 1;
                }
                _ => break,
            }
        }
        body = &prog.body[k..];
    }

    let mut b = Builder {
        prog,
        locations: Vec::new(),
        local_inv: Vec::new(),
    };
    let exit = b.reserve("exit".into());
    b.set_kind(
        exit,
        LocKind::Det {
            edges: vec![(Predicate::truth(), exit)],
        },
    );
    b.locations[exit.0 as usize].reward = Rat::zero();
    let entry = b.seq(body, exit, exit)?;

    // Renumber so locations appear in program order with the exit last.
    let order = renumber(&b.locations, entry, exit);
    let remap = |l: LocId| order[l.0 as usize];
    let mut locations: Vec<Location> = vec![
        Location {
            kind: LocKind::Nondet { succs: vec![] },
            label: String::new(),
            reward: Rat::one(),
        };
        b.locations.len()
    ];
    let mut local_inv: Vec<Option<Predicate>> = vec![None; b.locations.len()];
    for (i, loc) in b.locations.iter().enumerate() {
        let kind = match &loc.kind {
            LocKind::Det { edges } => LocKind::Det {
                edges: edges.iter().map(|(g, l)| (g.clone(), remap(*l))).collect(),
            },
            LocKind::Prob { edges } => LocKind::Prob {
                edges: edges.iter().map(|(p, l)| (*p, remap(*l))).collect(),
            },
            LocKind::Nondet { succs } => LocKind::Nondet {
                succs: succs.iter().map(|l| remap(*l)).collect(),
            },
            LocKind::Assign { var, update, succ } => LocKind::Assign {
                var: *var,
                update: update.clone(),
                succ: remap(*succ),
            },
        };
        let ni = remap(LocId(i as u32)).0 as usize;
        locations[ni] = Location {
            kind,
            label: loc.label.clone(),
            reward: loc.reward,
        };
        local_inv[ni] = b.local_inv[i].clone();
    }
    let init_loc = remap(entry);
    let exit_loc = remap(exit);

    let pcfg = Pcfg {
        var_names: prog.var_names.clone(),
        locations,
        init_loc,
        init_vals,
        exit_loc,
    };

    // Invariants: global annotation everywhere, loop-local annotations
    // override at their heads, and the terminal location is unconstrained so
    // that C is contained in I.
    let global = prog
        .global_invariant
        .clone()
        .unwrap_or_else(Predicate::truth);
    let mut inv: Vec<Predicate> = Vec::with_capacity(pcfg.num_locs());
    for l in pcfg.loc_ids() {
        if l == exit_loc {
            inv.push(Predicate::truth());
        } else if let Some(local) = &local_inv[l.0 as usize] {
            inv.push(local.clone());
        } else {
            inv.push(global.clone());
        }
    }
    let invariants = InvariantMap(inv);

    let mut term: Vec<Predicate> = vec![Predicate::falsity(); pcfg.num_locs()];
    term[exit_loc.0 as usize] = Predicate::truth();
    let terminals = TerminalSet(term);

    // The initial configuration must satisfy its invariant (exact check).
    let iv = invariants.at(init_loc);
    if !iv.holds_rat(&|w| pcfg.init_vals[w.0 as usize]) {
        return Err(CompileError::InitOutsideInvariant);
    }

    Ok(Compiled {
        pcfg,
        invariants,
        terminals,
    })
}

/// BFS order from the entry, exit forced last.
fn renumber(locations: &[Location], entry: LocId, exit: LocId) -> Vec<LocId> {
    let n = locations.len();
    let mut order = vec![LocId(u32::MAX); n];
    let mut next_id = 0u32;
    let mut queue = std::collections::VecDeque::new();
    let mut seen = vec![false; n];
    queue.push_back(entry);
    seen[entry.0 as usize] = true;
    let mut sequence = Vec::new();
    while let Some(l) = queue.pop_front() {
        sequence.push(l);
        for s in locations[l.0 as usize].successors() {
            if !seen[s.0 as usize] {
                seen[s.0 as usize] = true;
                queue.push_back(s);
            }
        }
    }
    for l in sequence {
        if l != exit {
            order[l.0 as usize] = LocId(next_id);
            next_id += 1;
        }
    }
    // Unreachable locations (if any) keep a stable order after the reachable
    // ones, before the exit.
    for i in 0..n {
        if LocId(i as u32) != exit && order[i] == LocId(u32::MAX) {
            order[i] = LocId(next_id);
            next_id += 1;
        }
    }
    order[exit.0 as usize] = LocId(next_id);
    order
}

/// Converts a polynomial to a constant when possible (used by folding).
#[allow(dead_code)]
fn const_of(p: &Poly) -> Option<Rat> {
    p.is_constant()
}
