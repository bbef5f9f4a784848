//! pCFG data model, AST compiler, invariant map, terminal set and
//! diagnostics.

pub mod compile;
pub mod dump;
pub mod model;
pub mod wellformed;

pub use compile::{compile, compile_with, CompileError, CompileOptions};
pub use model::{Compiled, InvariantMap, LocId, LocKind, Location, Pcfg, TerminalSet, Update};
pub use wellformed::{check_wellformed, check_wellformed_with, Report};

use crate::syntax::{parse, validate, SyntaxError};

#[derive(Debug, thiserror::Error)]
pub enum FrontendError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Validate(#[from] crate::syntax::validate::ValidateError),
    #[error(transparent)]
    Compile(#[from] CompileError),
}

/// Front-end convenience: parse, validate and compile in one call.
pub fn load_program(src: &str) -> Result<(crate::syntax::Validated, Compiled), FrontendError> {
    let prog = parse(src)?;
    let v = validate(&prog)?;
    let c = compile(&v)?;
    Ok((v, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat_int;
    use crate::syntax::parse;

    const FIG_EXAMPLE: &str = "
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

    #[test]
    fn fig_example_unfolded_matches_figure_layout() {
        let prog = parse(FIG_EXAMPLE).unwrap();
        let v = validate(&prog).unwrap();
        let c = compile_with(
            &v,
            CompileOptions {
                fold_init_prefix: false,
            },
        )
        .unwrap();
        // One location per statement plus the terminal: x:=2, y:=2, while,
        // z:=Unif, if *, x:=x+z, y:=y+z, exit.
        assert_eq!(c.pcfg.num_locs(), 8);
        let n_count = c
            .pcfg
            .loc_ids()
            .filter(|l| matches!(c.pcfg.loc(*l).kind, LocKind::Nondet { .. }))
            .count();
        assert_eq!(n_count, 1);
        // Terminal has a self-loop with reward zero.
        let exit = c.pcfg.exit_loc;
        assert_eq!(c.pcfg.loc(exit).successors(), vec![exit]);
        assert_eq!(c.pcfg.loc(exit).reward, rat_int(0));
        assert!(c.terminals.at(exit).is_truth());
        // Location count bound from the statement count.
        assert!(c.pcfg.num_locs() <= 2 * 7 + 2);
        let report = check_wellformed(&c);
        // Guard partition and probability mass hold for compiler output.
        assert!(
            report
                .violations
                .iter()
                .all(|v| v.contains("invariant")),
            "{:?}",
            report.violations
        );
    }

    #[test]
    fn fig_example_folds_constants_into_init() {
        let (_, c) = load_program(FIG_EXAMPLE).unwrap();
        assert_eq!(c.pcfg.num_locs(), 6);
        let x = c.pcfg.var_names.iter().position(|v| v == "x").unwrap();
        assert_eq!(c.pcfg.init_vals[x], rat_int(2));
    }

    #[test]
    fn skip_compiles_to_two_locations() {
        let (_, c) = load_program("skip").unwrap();
        assert_eq!(c.pcfg.num_locs(), 2);
        assert_eq!(
            c.pcfg.loc(c.pcfg.init_loc).successors(),
            vec![c.pcfg.exit_loc]
        );
    }

    #[test]
    fn hand_built_bad_probabilities_are_reported() {
        let (_, mut c) = load_program("x := 0; if prob(0.5) then x := 1 else x := 2 fi").unwrap();
        // Corrupt a probabilistic location so its mass is 0.9.
        for l in c.pcfg.loc_ids().collect::<Vec<_>>() {
            let loc = &mut c.pcfg.locations[l.0 as usize];
            if let LocKind::Prob { edges } = &mut loc.kind {
                edges[0].0 = crate::num::rat(4, 10);
            }
        }
        let report = check_wellformed(&c);
        assert!(report.violations.iter().any(|v| v.contains("prob mass")));
    }

    #[test]
    fn overlapping_guards_are_detected_by_sampling() {
        let (_, mut c) =
            load_program("x := 0; while x < 2 do x := x + 1 od").unwrap();
        // Make the exit guard overlap the loop guard.
        let head = c
            .pcfg
            .loc_ids()
            .find(|l| matches!(&c.pcfg.loc(*l).kind, LocKind::Det { edges } if edges.len() == 2))
            .unwrap();
        if let LocKind::Det { edges } = &mut c.pcfg.locations[head.0 as usize].kind {
            let g = edges[0].0.clone();
            edges[1].0 = g; // both edges now share a guard
        }
        let report = check_wellformed(&c);
        assert!(
            report
                .violations
                .iter()
                .any(|v| v.contains("guard partition")),
            "{:?}",
            report.violations
        );
    }

    #[test]
    fn refute_routes_to_terminal() {
        let (_, c) = load_program(
            "x := 1; while true do x := x - 1; refute (x < 0) od",
        )
        .unwrap();
        let refute_loc = c
            .pcfg
            .loc_ids()
            .find(|l| c.pcfg.loc(*l).label.starts_with("refute"))
            .unwrap();
        match &c.pcfg.loc(refute_loc).kind {
            LocKind::Det { edges } => {
                assert!(edges.iter().any(|(_, t)| *t == c.pcfg.exit_loc));
            }
            other => panic!("refute compiled to {other:?}"),
        }
    }
}
