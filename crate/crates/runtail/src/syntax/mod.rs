//! Front end: surface syntax, typed AST, printer, and validation.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod validate;

pub use ast::{Atom, AtomOp, DistExpr, LoopCond, Monomial, Poly, Predicate, Program, Stmt, VarId};
pub use lexer::SyntaxError;
pub use parser::parse;
pub use printer::print_program;
pub use validate::{validate, Fragment, Validated};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{rat, rat_int};

    pub const FIG_EXAMPLE: &str = "
# two-variable walk with a nondeterministic target choice
x := 2;
y := 2;
while x > 0 and y > 0 do
  z := Unif(-2, 1);
  if * then
    x := x + z
  else
    y := y + z
  fi
od
";

    pub const NONLINEAR_EXAMPLE: &str = "
$ 0 <= r and r <= 1 and 0 <= n
n := 1;
r := Unif(0, 1);
while r * (n + 1) * (n + 1) <= n * n do
  r := Unif(0, 1);
  n := n + 1
od
";

    #[test]
    fn parses_two_variable_walk() {
        let p = parse(FIG_EXAMPLE).unwrap();
        assert_eq!(p.var_names, vec!["x", "y", "z"]);
        let whiles = p
            .body
            .iter()
            .filter(|s| matches!(s, Stmt::While(..)))
            .count();
        assert_eq!(whiles, 1);
        fn count_ndet(stmts: &[Stmt]) -> usize {
            stmts
                .iter()
                .map(|s| match s {
                    Stmt::IfNdet(t, e) => 1 + count_ndet(t) + count_ndet(e),
                    Stmt::IfProb(_, t, e) | Stmt::IfCond(_, t, e) => {
                        count_ndet(t) + count_ndet(e)
                    }
                    Stmt::While(_, _, b) => count_ndet(b),
                    _ => 0,
                })
                .sum()
        }
        assert_eq!(count_ndet(&p.body), 1);
        fn count_unif(stmts: &[Stmt]) -> usize {
            stmts
                .iter()
                .map(|s| match s {
                    Stmt::Sample(_, DistExpr::Uniform(..)) => 1,
                    Stmt::IfNdet(t, e) | Stmt::IfProb(_, t, e) | Stmt::IfCond(_, t, e) => {
                        count_unif(t) + count_unif(e)
                    }
                    Stmt::While(_, _, b) => count_unif(b),
                    _ => 0,
                })
                .sum()
        }
        assert_eq!(count_unif(&p.body), 1);
    }

    #[test]
    fn smallest_program() {
        let p = parse("skip").unwrap();
        assert_eq!(p.body, vec![Stmt::Skip]);
        assert!(p.global_invariant.is_none());
    }

    #[test]
    fn nonlinear_guard_is_flagged() {
        let p = parse(NONLINEAR_EXAMPLE).unwrap();
        let v = validate(&p).unwrap();
        assert_eq!(v.fragment, Fragment::PolynomialOnly);
    }

    #[test]
    fn linear_classification_and_vars() {
        let p = parse(FIG_EXAMPLE).unwrap();
        let v = validate(&p).unwrap();
        assert_eq!(v.fragment, Fragment::Linear);
        assert_eq!(p.num_vars(), 3);
    }

    #[test]
    fn undeclared_variable_is_rejected() {
        let p = parse("x := 1; while w > 0 do x := x - 1 od").unwrap();
        assert!(matches!(
            validate(&p),
            Err(validate::ValidateError::UseBeforeAssign(name)) if name == "w"
        ));
    }

    #[test]
    fn probability_out_of_range_is_a_syntax_error() {
        let err = parse("if prob(1.5) then skip else skip fi").unwrap_err();
        assert!(err.msg.contains("outside [0, 1]"), "{err}");
        assert!(err.pos.line >= 1);
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse("x := ;").unwrap_err();
        assert_eq!(err.pos.line, 1);
        assert!(err.pos.col >= 5);
    }

    #[test]
    fn discrete_probabilities_must_sum_to_one() {
        assert!(parse("d := Disc(0: 0.5, 1: 0.4)").is_err());
        let p = parse("d := Disc(0: 1/3, 1: 1/3, 2: 1/3)").unwrap();
        match &p.body[0] {
            Stmt::Sample(_, DistExpr::Discrete(pairs)) => {
                let total: crate::num::Rat = pairs.iter().map(|(_, q)| *q).sum();
                assert_eq!(total, rat_int(1));
                assert_eq!(pairs[0].1, rat(1, 3));
            }
            other => panic!("unexpected statement {other:?}"),
        }
    }

    #[test]
    fn round_trip_fixed_point() {
        for src in [
            FIG_EXAMPLE,
            NONLINEAR_EXAMPLE,
            "skip",
            "x := 2; while true do if prob(0.7) then z := Unif(0,1); x := x - z else z := Unif(0,1); x := x + z fi; refute (x < 0) od",
            "x := 0; while x < 3 { 0 <= x and x <= 3 } do if * then x := x + 1 else x := x + 2 fi od",
            "y := ndet(0 <= y and y <= 2); x := y + 1",
            "x := 1; while prob(0.5) do x := x + 1 od",
        ] {
            let a1 = parse(src).unwrap();
            let p1 = print_program(&a1);
            let a2 = parse(&p1).unwrap_or_else(|e| panic!("reprint failed for {p1}: {e}"));
            assert_eq!(a1, a2, "round trip mismatch for:\n{src}\nprinted:\n{p1}");
            let p2 = print_program(&a2);
            assert_eq!(p1, p2);
        }
    }

    #[test]
    fn negation_produces_dnf() {
        let p = parse("x := 0; refute (not (x >= 0 and x <= 2))").unwrap();
        match &p.body[1] {
            Stmt::Refute(pred, _) => {
                assert_eq!(pred.disjuncts.len(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
