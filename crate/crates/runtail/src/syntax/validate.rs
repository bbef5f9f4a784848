//! Semantic checks and linear/polynomial classification.

use super::ast::*;
use std::collections::BTreeSet;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ValidateError {
    #[error("variable `{0}` is read before any assignment and is unconstrained by the invariant")]
    UseBeforeAssign(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fragment {
    /// All guards, updates and annotations have degree <= 1.
    Linear,
    /// Some construct is genuinely polynomial.
    PolynomialOnly,
}

/// A validated program: the AST plus derived facts the back ends rely on.
#[derive(Debug, Clone)]
pub struct Validated {
    pub program: Program,
    pub fragment: Fragment,
}

pub fn validate(program: &Program) -> Result<Validated, ValidateError> {
    // Variables mentioned by the global invariant count as declared: the
    // analysis treats them as arbitrary values satisfying the invariant.
    let mut declared: BTreeSet<VarId> = program
        .global_invariant
        .as_ref()
        .map(|p| p.vars().into_iter().collect())
        .unwrap_or_default();
    check_uses(program, &program.body, &mut declared)?;

    let fragment = if max_degree(program) <= 1 {
        Fragment::Linear
    } else {
        Fragment::PolynomialOnly
    };
    Ok(Validated {
        program: program.clone(),
        fragment,
    })
}

fn check_uses(
    prog: &Program,
    stmts: &[Stmt],
    assigned: &mut BTreeSet<VarId>,
) -> Result<(), ValidateError> {
    for s in stmts {
        check_stmt(prog, s, assigned)?;
    }
    Ok(())
}

fn require(prog: &Program, vars: &[VarId], assigned: &BTreeSet<VarId>) -> Result<(), ValidateError> {
    for v in vars {
        if !assigned.contains(v) {
            return Err(ValidateError::UseBeforeAssign(
                prog.var_name(*v).to_string(),
            ));
        }
    }
    Ok(())
}

fn check_stmt(
    prog: &Program,
    s: &Stmt,
    assigned: &mut BTreeSet<VarId>,
) -> Result<(), ValidateError> {
    match s {
        Stmt::Assign(v, e) => {
            require(prog, &e.vars(), assigned)?;
            assigned.insert(*v);
        }
        Stmt::Sample(v, _) => {
            assigned.insert(*v);
        }
        Stmt::NdetAssign(v, p) => {
            // Within the choice predicate, the assigned variable refers to the
            // new value; other variables must be defined.
            let mut other: Vec<VarId> = p.vars().into_iter().filter(|w| w != v).collect();
            other.dedup();
            require(prog, &other, assigned)?;
            assigned.insert(*v);
        }
        Stmt::IfProb(_, t, e) | Stmt::IfNdet(t, e) => {
            let mut a = assigned.clone();
            check_uses(prog, t, &mut a)?;
            let mut b = assigned.clone();
            check_uses(prog, e, &mut b)?;
            // Variables definitely assigned on both branches stay assigned.
            *assigned = a.intersection(&b).copied().collect();
        }
        Stmt::IfCond(c, t, e) => {
            require(prog, &c.vars(), assigned)?;
            let mut a = assigned.clone();
            check_uses(prog, t, &mut a)?;
            let mut b = assigned.clone();
            check_uses(prog, e, &mut b)?;
            *assigned = a.intersection(&b).copied().collect();
        }
        Stmt::While(cond, inv, body) => {
            if let LoopCond::Pred(p) = cond {
                require(prog, &p.vars(), assigned)?;
            }
            if let Some(i) = inv {
                require(prog, &i.vars(), assigned)?;
            }
            let mut inner = assigned.clone();
            check_uses(prog, body, &mut inner)?;
            // The loop may run zero times: no new definite assignments.
        }
        Stmt::Refute(p, inv) => {
            require(prog, &p.vars(), assigned)?;
            if let Some(i) = inv {
                require(prog, &i.vars(), assigned)?;
            }
        }
        Stmt::Skip => {}
    }
    Ok(())
}

fn max_degree(prog: &Program) -> u32 {
    let mut d = prog
        .global_invariant
        .as_ref()
        .map(|p| p.max_degree())
        .unwrap_or(0);
    fn walk(stmts: &[Stmt], d: &mut u32) {
        for s in stmts {
            match s {
                Stmt::Assign(_, e) => *d = (*d).max(e.degree()),
                Stmt::NdetAssign(_, p) => *d = (*d).max(p.max_degree()),
                Stmt::Sample(_, _) | Stmt::Skip => {}
                Stmt::Refute(p, inv) => {
                    *d = (*d).max(p.max_degree());
                    if let Some(i) = inv {
                        *d = (*d).max(i.max_degree());
                    }
                }
                Stmt::IfProb(_, t, e) | Stmt::IfNdet(t, e) => {
                    walk(t, d);
                    walk(e, d);
                }
                Stmt::IfCond(c, t, e) => {
                    *d = (*d).max(c.max_degree());
                    walk(t, d);
                    walk(e, d);
                }
                Stmt::While(c, inv, b) => {
                    if let LoopCond::Pred(p) = c {
                        *d = (*d).max(p.max_degree());
                    }
                    if let Some(i) = inv {
                        *d = (*d).max(i.max_degree());
                    }
                    walk(b, d);
                }
            }
        }
    }
    walk(&prog.body, &mut d);
    d
}
