//! Farkas reduction of implication constraints and the LP synthesis driver.

use super::constraints::{
    generate_constraints, init_values, objective, Constraint, GenError, GenOptions, Template,
    Witness,
};
use super::expr::UAff;
use crate::lp::{self, Cmp, Lp, LpRow, LpStatus};
use crate::num::{rat_to_f64, Rat};
use crate::pcfg::Compiled;
use crate::syntax::VarId;
use serde::Serialize;

/// Farkas rows produced from one implication constraint: for the context
/// `{phi_i >= 0}` and consequent `psi >= 0`, emit the identity
/// `psi = sum_i y_i phi_i + y0` coefficientwise: one equality per variable
/// and one inequality for the constant, with multipliers `y >= 0`.
pub struct FarkasRows {
    /// Each row: coefficients over parameters, coefficients over this
    /// constraint's multipliers, comparison and rational right-hand side.
    pub rows: Vec<(Vec<(usize, Rat)>, Vec<(usize, Rat)>, Cmp, Rat)>,
    pub num_multipliers: usize,
}

pub fn farkas_reduce(c: &Constraint, num_base_vars: usize) -> FarkasRows {
    let num_vars = num_base_vars + c.extra_vars;
    let m = c.context.len();
    let mut rows = Vec::with_capacity(num_vars + 1);
    let (coeffs, konst) = c
        .consequent
        .linear_view()
        .expect("farkas_reduce requires a linear consequent");

    // Per-variable equalities: psi_v - sum_i y_i * phi_i_v = 0.
    for v in 0..num_vars as u32 {
        let v = VarId(v);
        let psi_v = coeffs.get(&v).cloned().unwrap_or_default();
        let mut yrow = Vec::new();
        for (i, phi) in c.context.iter().enumerate() {
            let a = phi.linear_coeff(v);
            if !num_traits::Zero::is_zero(&a) {
                yrow.push((i, -a));
            }
        }
        if psi_v.terms.is_empty() && psi_v.konst == Rat::from_integer(0) && yrow.is_empty() {
            continue;
        }
        let urow: Vec<(usize, Rat)> = psi_v.terms.iter().map(|(p, c)| (*p, *c)).collect();
        rows.push((urow, yrow, Cmp::Eq, -psi_v.konst));
    }

    // Constant inequality: psi_0 - sum_i y_i * phi_i_0 >= 0.
    let mut yrow = Vec::new();
    for (i, phi) in c.context.iter().enumerate() {
        let b = phi.constant_part();
        if !num_traits::Zero::is_zero(&b) {
            yrow.push((i, -b));
        }
    }
    let urow: Vec<(usize, Rat)> = konst.terms.iter().map(|(p, c)| (*p, *c)).collect();
    rows.push((urow, yrow, Cmp::Ge, -konst.konst));

    FarkasRows {
        rows,
        num_multipliers: m,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LpStats {
    pub parameters: usize,
    pub constraints: usize,
    pub lp_rows: usize,
    pub lp_cols: usize,
    pub pivots: usize,
}

#[derive(Debug, Clone)]
pub enum Synthesis {
    Solved {
        witness: Witness,
        stats: LpStats,
    },
    Infeasible {
        stats: LpStats,
        /// Locations whose constraint groups could not be satisfied, when the
        /// cheap localization pass identifies any.
        suspects: Vec<String>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Lp(#[from] crate::lp::LpError),
    #[error("internal inconsistency: synthesis LP unbounded")]
    Unbounded,
}

pub struct SynthOptions {
    pub tol: f64,
    /// After minimizing the top component, re-solve fixing it to also
    /// minimize the lower components in turn.
    pub lexicographic: bool,
    pub gen: GenOptions,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            tol: 1e-9,
            lexicographic: false,
            gen: GenOptions::default(),
        }
    }
}

/// Assembles the synthesis LP: split parameters (free) into nonnegative
/// pairs, append one multiplier block per constraint, equilibrate rows.
fn assemble(
    t: &Template,
    constraints: &[Constraint],
    num_base_vars: usize,
    obj: &UAff,
) -> (Lp, usize) {
    let p = t.num_params();
    // Columns: 2 per parameter (plus/minus), then multipliers per constraint.
    let mut col_names: Vec<String> = Vec::new();
    for name in &t.param_names {
        col_names.push(format!("{name}+"));
        col_names.push(format!("{name}-"));
    }
    let mut rows = Vec::new();
    let mut next_col = 2 * p;
    for c in constraints {
        let f = farkas_reduce(c, num_base_vars);
        let y_base = next_col;
        for i in 0..f.num_multipliers {
            col_names.push(format!("y[{}][{}]", c.tag, i));
            let _ = i;
        }
        next_col += f.num_multipliers;
        for (ri, (urow, yrow, cmp, rhs)) in f.rows.iter().enumerate() {
            let mut coeffs: Vec<(usize, f64)> = Vec::new();
            for (pid, coef) in urow {
                let v = rat_to_f64(coef);
                coeffs.push((2 * pid, v));
                coeffs.push((2 * pid + 1, -v));
            }
            for (yi, coef) in yrow {
                coeffs.push((y_base + yi, rat_to_f64(coef)));
            }
            // Row equilibration against large benchmark coefficients.
            let mut scale = coeffs
                .iter()
                .map(|(_, v)| v.abs())
                .fold(rat_to_f64(rhs).abs(), f64::max);
            if scale < 1e-12 {
                scale = 1.0;
            }
            let coeffs: Vec<(usize, f64)> =
                coeffs.into_iter().map(|(j, v)| (j, v / scale)).collect();
            rows.push(LpRow {
                coeffs,
                cmp: *cmp,
                rhs: rat_to_f64(rhs) / scale,
                name: format!("{}#{}", c.tag, ri),
            });
        }
    }
    let objective: Vec<(usize, f64)> = obj
        .terms
        .iter()
        .flat_map(|(pid, coef)| {
            let v = rat_to_f64(coef);
            [(2 * pid, v), (2 * pid + 1, -v)]
        })
        .collect();
    (
        Lp {
            num_vars: next_col,
            rows,
            objective,
            col_names,
        },
        p,
    )
}

fn params_from_solution(x: &[f64], p: usize) -> Vec<f64> {
    (0..p).map(|i| x[2 * i] - x[2 * i + 1]).collect()
}

/// Synthesizes a linear ranking supermartingale for K-th moments and the
/// induced moment bounds, minimizing `eta_K(l_init, x_init)`.
pub fn synthesize(c: &Compiled, k_max: u32, opts: &SynthOptions) -> Result<Synthesis, SynthError> {
    let t = Template::new(c, k_max, 1);
    let constraints = generate_constraints(c, &t, &opts.gen)?;
    let nonlinear = constraints
        .iter()
        .find(|cn| !cn.consequent.is_linear() || cn.context.iter().any(|r| !r.is_linear()));
    if nonlinear.is_some() {
        return Err(SynthError::Gen(GenError::NonlinearConstruct(0)));
    }
    let obj = objective(c, &t);
    let (mut lp, p) = assemble(&t, &constraints, c.pcfg.num_vars(), &obj);
    let sol = lp::solve(&lp, opts.tol)?;
    let mut stats = LpStats {
        parameters: t.num_params(),
        constraints: constraints.len(),
        lp_rows: lp.rows.len(),
        lp_cols: lp.num_vars,
        pivots: sol.iterations,
    };
    match sol.status {
        LpStatus::Infeasible => {
            let suspects = localize_infeasibility(&t, &constraints, c, &obj, opts);
            Ok(Synthesis::Infeasible { stats, suspects })
        }
        LpStatus::Unbounded => Err(SynthError::Unbounded),
        LpStatus::Optimal => {
            let mut params = params_from_solution(&sol.x, p);
            if opts.lexicographic && k_max > 1 {
                // Fix each minimized component (within tolerance) and
                // re-minimize the next lower one.
                for k in (1..k_max).rev() {
                    let fixed = init_values(c, &t, &params);
                    for (kk, val) in fixed.iter().enumerate().skip(k as usize) {
                        let target = t
                            .eta(c.pcfg.init_loc, kk as u32 + 1)
                            .eval_vars(&|v| c.pcfg.init_vals[v.0 as usize]);
                        let coeffs: Vec<(usize, f64)> = target
                            .terms
                            .iter()
                            .flat_map(|(pid, coef)| {
                                let v = rat_to_f64(coef);
                                [(2 * pid, v), (2 * pid + 1, -v)]
                            })
                            .collect();
                        lp.rows.push(LpRow {
                            coeffs,
                            cmp: Cmp::Le,
                            rhs: *val - rat_to_f64(&target.konst)
                                + opts.tol * (1.0 + val.abs()),
                            name: format!("lex-fix-k{}", kk + 1),
                        });
                    }
                    let lower = t
                        .eta(c.pcfg.init_loc, k)
                        .eval_vars(&|v| c.pcfg.init_vals[v.0 as usize]);
                    lp.objective = lower
                        .terms
                        .iter()
                        .flat_map(|(pid, coef)| {
                            let v = rat_to_f64(coef);
                            [(2 * pid, v), (2 * pid + 1, -v)]
                        })
                        .collect();
                    let again = lp::solve(&lp, opts.tol)?;
                    if again.status == LpStatus::Optimal {
                        params = params_from_solution(&again.x, p);
                        stats.pivots += again.iterations;
                    }
                }
            }
            let witness = Witness::from_params(c, &t, &params);
            Ok(Synthesis::Solved { witness, stats })
        }
    }
}

/// Cheap infeasibility localization: drop one location's constraint group at
/// a time and report groups whose removal makes the system feasible.
fn localize_infeasibility(
    t: &Template,
    constraints: &[Constraint],
    c: &Compiled,
    obj: &UAff,
    opts: &SynthOptions,
) -> Vec<String> {
    let mut groups: Vec<String> = constraints
        .iter()
        .map(|cn| cn.tag.split('/').next().unwrap_or("").to_string())
        .collect();
    groups.sort();
    groups.dedup();
    if groups.len() > 24 {
        return Vec::new();
    }
    let mut suspects = Vec::new();
    for g in &groups {
        let subset: Vec<Constraint> = constraints
            .iter()
            .filter(|cn| !cn.tag.starts_with(&format!("{g}/")))
            .cloned()
            .collect();
        let (lp, _) = assemble(t, &subset, c.pcfg.num_vars(), obj);
        if let Ok(sol) = lp::solve(&lp, opts.tol) {
            if sol.status != LpStatus::Infeasible {
                suspects.push(g.clone());
            }
        }
    }
    suspects
}

/// Writes an LP in the plain-text exchange format: a `min` line listing
/// `coef*col` terms, then one line per row: `name: terms <=|=|>= rhs`.
pub fn emit_lp_text(lp: &Lp) -> String {
    let mut out = String::new();
    let term = |j: usize, v: f64| -> String {
        let name = lp
            .col_names
            .get(j)
            .cloned()
            .unwrap_or_else(|| format!("c{j}"));
        format!("{v}*{name}")
    };
    out.push_str("min ");
    out.push_str(
        &lp.objective
            .iter()
            .map(|&(j, v)| term(j, v))
            .collect::<Vec<_>>()
            .join(" + "),
    );
    out.push('\n');
    for row in &lp.rows {
        let body = row
            .coeffs
            .iter()
            .map(|&(j, v)| term(j, v))
            .collect::<Vec<_>>()
            .join(" + ");
        let cmp = match row.cmp {
            Cmp::Le => "<=",
            Cmp::Eq => "=",
            Cmp::Ge => ">=",
        };
        out.push_str(&format!("{}: {} {} {}\n", row.name, body, cmp, row.rhs));
    }
    out
}

/// Builds the synthesis LP without solving (for `--emit-lp`).
pub fn build_lp(c: &Compiled, k_max: u32, opts: &SynthOptions) -> Result<Lp, SynthError> {
    let t = Template::new(c, k_max, 1);
    let constraints = generate_constraints(c, &t, &opts.gen)?;
    let obj = objective(c, &t);
    Ok(assemble(&t, &constraints, c.pcfg.num_vars(), &obj).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcfg::load_program;
    use crate::sim::rng::SplitMix64;
    use crate::syntax::{Atom, AtomOp, Monomial, Poly};

    #[test]
    fn hand_checkable_reduction() {
        // context {x >= 0} implies {x + 1 >= 0}: y = 1, y' = 1 works, so the
        // reduced system must be feasible.
        let c = Constraint {
            context: vec![Poly::var(VarId(0))],
            consequent: {
                let mut p = super::super::expr::PolyU::from_poly(&Poly::var(VarId(0)));
                p.add_term(Monomial::one(), UAff::constant(Rat::from_integer(1)));
                p
            },
            tag: "test".into(),
            extra_vars: 0,
        };
        let f = farkas_reduce(&c, 1);
        // One equality (x coefficient) and one inequality (constant).
        assert_eq!(f.rows.len(), 2);
        assert_eq!(f.num_multipliers, 1);
        // x row: 0*u - 1*y0 = -1  =>  y0 = 1
        let (u, y, cmp, rhs) = &f.rows[0];
        assert!(u.is_empty());
        assert_eq!(y.as_slice(), &[(0usize, Rat::from_integer(-1))]);
        assert_eq!(*cmp, Cmp::Eq);
        assert_eq!(*rhs, Rat::from_integer(-1));
        // constant row: -0*y >= -1  =>  feasible with slack 1
        let (_, y, cmp, rhs) = &f.rows[1];
        assert!(y.is_empty());
        assert_eq!(*cmp, Cmp::Ge);
        assert_eq!(*rhs, Rat::from_integer(-1));
    }

    #[test]
    fn empty_context_reduces_to_a_sign_condition() {
        // true implies {b >= 0} forces the variable coefficients to vanish.
        let c = Constraint {
            context: vec![],
            consequent: super::super::expr::PolyU::constant(UAff::param(0)),
            tag: "test".into(),
            extra_vars: 0,
        };
        let f = farkas_reduce(&c, 1);
        assert_eq!(f.num_multipliers, 0);
        assert_eq!(f.rows.len(), 1);
        let (u, y, cmp, rhs) = &f.rows[0];
        assert_eq!(u.as_slice(), &[(0usize, Rat::from_integer(1))]);
        assert!(y.is_empty());
        assert_eq!(*cmp, Cmp::Ge);
        assert_eq!(*rhs, Rat::from_integer(0));
    }

    #[test]
    fn one_step_program_has_unit_bound() {
        let (_, c) = load_program("skip").unwrap();
        let out = synthesize(&c, 1, &SynthOptions::default()).unwrap();
        match out {
            Synthesis::Solved { witness, .. } => {
                assert!((witness.bounds[0] - 1.0).abs() < 1e-6, "{:?}", witness.bounds);
            }
            other => panic!("expected a solution, got {other:?}"),
        }
    }

    #[test]
    fn random_reductions_imply_the_implication() {
        // Solve tiny systems built from one random implication constraint;
        // whatever parameter values the LP picks must make the implication
        // hold at sampled points of the polyhedron.
        let mut rng = SplitMix64::new(99);
        for case in 0..40 {
            // Context: box 0 <= x_i <= 5 plus a random extra row.
            let mut context = vec![Poly::var(VarId(0)), Poly::var(VarId(1))];
            context.push(Poly::constant(Rat::from_integer(5)).sub(&Poly::var(VarId(0))));
            context.push(Poly::constant(Rat::from_integer(5)).sub(&Poly::var(VarId(1))));
            let mut extra = Poly::constant(Rat::from_integer(
                (rng.next_u64() % 6) as i64,
            ));
            extra = extra.add(&Poly::var(VarId(0)).scale(&Rat::from_integer(
                (rng.next_u64() % 5) as i64 - 2,
            )));
            extra = extra.add(&Poly::var(VarId(1)).scale(&Rat::from_integer(
                (rng.next_u64() % 5) as i64 - 2,
            )));
            context.push(extra);
            // Consequent u0*x0 + u1*x1 + u2 >= 0 with a random anchor row
            // forcing the parameters away from zero: u0 = r.
            let mut consequent = super::super::expr::PolyU::zero();
            consequent.add_term(Monomial::var(VarId(0)), UAff::param(0));
            consequent.add_term(Monomial::var(VarId(1)), UAff::param(1));
            consequent.add_term(Monomial::one(), UAff::param(2));
            let cons = Constraint {
                context: context.clone(),
                consequent,
                tag: "rand".into(),
                extra_vars: 0,
            };
            let f = farkas_reduce(&cons, 2);
            let mut rows = Vec::new();
            let y_base = 6usize; // 3 params split into 6 columns
            for (urow, yrow, cmp, rhs) in &f.rows {
                let mut coeffs: Vec<(usize, f64)> = Vec::new();
                for (p, v) in urow {
                    coeffs.push((2 * p, rat_to_f64(v)));
                    coeffs.push((2 * p + 1, -rat_to_f64(v)));
                }
                for (y, v) in yrow {
                    coeffs.push((y_base + y, rat_to_f64(v)));
                }
                rows.push(crate::lp::LpRow {
                    coeffs,
                    cmp: *cmp,
                    rhs: rat_to_f64(rhs),
                    name: "r".into(),
                });
            }
            // Anchor: u0 = random value in [-2, 2].
            let anchor = (rng.next_f64() * 4.0 - 2.0).round();
            rows.push(crate::lp::LpRow {
                coeffs: vec![(0, 1.0), (1, -1.0)],
                cmp: Cmp::Eq,
                rhs: anchor,
                name: "anchor".into(),
            });
            let lp = Lp {
                num_vars: y_base + f.num_multipliers,
                rows,
                objective: vec![(4, 1.0), (5, -1.0)], // minimize the intercept
                col_names: vec![],
            };
            let sol = lp::solve(&lp, 1e-9).unwrap();
            if sol.status != LpStatus::Optimal {
                continue;
            }
            let u = [
                sol.x[0] - sol.x[1],
                sol.x[2] - sol.x[3],
                sol.x[4] - sol.x[5],
            ];
            for _ in 0..1000 {
                let x0 = rng.next_f64() * 5.0;
                let x1 = rng.next_f64() * 5.0;
                let in_context = context.iter().all(|p| {
                    p.eval_f64(&|v| if v == VarId(0) { x0 } else { x1 }) >= -1e-9
                });
                if !in_context {
                    continue;
                }
                let val = u[0] * x0 + u[1] * x1 + u[2];
                assert!(
                    val >= -1e-7,
                    "case {case}: implication violated at ({x0}, {x1}): {val}"
                );
            }
        }
    }

    #[test]
    fn deterministic_loop_bound_is_exact() {
        // while x > 0 with unit decrements from 3: runtime 3 rounds of 2
        // steps plus the exit check.
        let (_, c) = load_program(
            "$ 0 <= x and x <= 3
x := 3;
while x > 0 do
  x := x - 1
od",
        )
        .unwrap();
        let out = synthesize(&c, 1, &SynthOptions::default()).unwrap();
        match out {
            Synthesis::Solved { witness, .. } => {
                assert!(
                    (witness.bounds[0] - 7.0).abs() < 1e-6,
                    "bound {:?}",
                    witness.bounds
                );
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn atom_relaxation_is_nonstrict() {
        let a = Atom {
            poly: Poly::var(VarId(0)),
            op: AtomOp::Gt,
        };
        let rows = super::super::constraints::relax_rows_for_test(&a);
        assert_eq!(rows.len(), 1);
    }
}
