//! Pretty printer. Printing and re-parsing yields a structurally equal AST.

use super::ast::*;
use crate::num::{rat_display, Rat};
use num_traits::{One, Signed};

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    if let Some(inv) = &p.global_invariant {
        out.push_str("$ ");
        out.push_str(&pred_to_string(p, inv));
        out.push('\n');
    }
    out.push_str(&stmts_to_string(p, &p.body, 0));
    out.push('\n');
    out
}

fn indent(depth: usize) -> String {
    "  ".repeat(depth)
}

fn stmts_to_string(p: &Program, stmts: &[Stmt], depth: usize) -> String {
    stmts
        .iter()
        .map(|s| stmt_to_string(p, s, depth))
        .collect::<Vec<_>>()
        .join(";\n")
}

fn stmt_to_string(p: &Program, s: &Stmt, depth: usize) -> String {
    let pad = indent(depth);
    match s {
        Stmt::Skip => format!("{pad}skip"),
        Stmt::Refute(pred, inv) => {
            let inv_str = match inv {
                Some(i) => format!(" {{ {} }}", pred_to_string(p, i)),
                None => String::new(),
            };
            format!("{pad}refute ({}){inv_str}", pred_to_string(p, pred))
        }
        Stmt::Assign(v, e) => {
            format!("{pad}{} := {}", p.var_name(*v), poly_to_string(p, e))
        }
        Stmt::Sample(v, d) => format!("{pad}{} := {}", p.var_name(*v), dist_to_string(d)),
        Stmt::NdetAssign(v, pred) => format!(
            "{pad}{} := ndet({})",
            p.var_name(*v),
            pred_to_string(p, pred)
        ),
        Stmt::IfProb(q, t, e) => format!(
            "{pad}if prob({}) then\n{}\n{pad}else\n{}\n{pad}fi",
            rat_display(q),
            stmts_to_string(p, t, depth + 1),
            stmts_to_string(p, e, depth + 1)
        ),
        Stmt::IfNdet(t, e) => format!(
            "{pad}if * then\n{}\n{pad}else\n{}\n{pad}fi",
            stmts_to_string(p, t, depth + 1),
            stmts_to_string(p, e, depth + 1)
        ),
        Stmt::IfCond(c, t, e) => format!(
            "{pad}if {} then\n{}\n{pad}else\n{}\n{pad}fi",
            pred_to_string(p, c),
            stmts_to_string(p, t, depth + 1),
            stmts_to_string(p, e, depth + 1)
        ),
        Stmt::While(cond, inv, body) => {
            let cond_str = match cond {
                LoopCond::Pred(c) => pred_to_string(p, c),
                LoopCond::Prob(q) => format!("prob({})", rat_display(q)),
                LoopCond::Ndet => "*".to_string(),
            };
            let inv_str = match inv {
                Some(i) => format!(" {{ {} }}", pred_to_string(p, i)),
                None => String::new(),
            };
            format!(
                "{pad}while {cond_str}{inv_str} do\n{}\n{pad}od",
                stmts_to_string(p, body, depth + 1)
            )
        }
    }
}

fn dist_to_string(d: &DistExpr) -> String {
    match d {
        DistExpr::Uniform(a, b) => format!("Unif({}, {})", rat_display(a), rat_display(b)),
        DistExpr::Normal(m, s) => format!("Norm({}, {})", rat_display(m), rat_display(s)),
        DistExpr::Discrete(pairs) => {
            let body = pairs
                .iter()
                .map(|(v, q)| format!("{}: {}", rat_display(v), rat_display(q)))
                .collect::<Vec<_>>()
                .join(", ");
            format!("Disc({body})")
        }
    }
}

pub fn pred_to_string(p: &Program, pred: &Predicate) -> String {
    if pred.is_falsity() {
        return "false".to_string();
    }
    if pred.disjuncts.len() == 1 && pred.disjuncts[0].is_empty() {
        return "true".to_string();
    }
    pred.disjuncts
        .iter()
        .map(|conj| {
            if conj.is_empty() {
                "true".to_string()
            } else {
                conj.iter()
                    .map(|a| atom_to_string(p, a))
                    .collect::<Vec<_>>()
                    .join(" and ")
            }
        })
        .collect::<Vec<_>>()
        .join(" or ")
}

fn atom_to_string(p: &Program, a: &Atom) -> String {
    let lhs = poly_to_string(p, &a.poly);
    match a.op {
        AtomOp::Ge => format!("{lhs} >= 0"),
        AtomOp::Gt => format!("{lhs} > 0"),
        AtomOp::Eq => format!("{lhs} = 0"),
    }
}

pub fn poly_to_string(p: &Program, poly: &Poly) -> String {
    poly_to_string_with(poly, &|v| p.var_name(v).to_string())
}

/// Debug form with `v<i>` variable names.
pub fn poly_to_string_raw(poly: &Poly) -> String {
    poly_to_string_with(poly, &|v| format!("v{}", v.0))
}

pub fn poly_to_string_with(poly: &Poly, name: &dyn Fn(VarId) -> String) -> String {
    if poly.terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (m, c)) in poly.terms.iter().rev().enumerate() {
        let neg = c.is_negative();
        let mag = if neg { -*c } else { *c };
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else if neg {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        out.push_str(&term_to_string(m, &mag, name));
    }
    out
}

fn term_to_string(m: &Monomial, mag: &Rat, name: &dyn Fn(VarId) -> String) -> String {
    let mut factors: Vec<String> = Vec::new();
    if !mag.is_one() || m.0.is_empty() {
        factors.push(rat_display(mag));
    }
    for &(v, e) in &m.0 {
        for _ in 0..e {
            factors.push(name(v));
        }
    }
    factors.join("*")
}
