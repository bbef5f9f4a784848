//! Template construction and generation of the implication constraints that
//! make a per-location K-tuple of forms a ranking supermartingale for K-th
//! moments: decrease by the time-elapse of the pre-expectation on I \ C, and
//! nonnegativity on I.

use super::expr::{PolyU, UAff};
use crate::num::{binomial, rat_pow, Rat};
use crate::pcfg::{Compiled, LocId, LocKind, Update};
use crate::syntax::{Atom, AtomOp, Monomial, Poly, VarId};
use std::collections::BTreeMap;

/// Monomial basis of total degree <= `degree` over `num_vars` variables, in
/// graded lexicographic order.
pub fn monomial_basis(num_vars: usize, degree: u32) -> Vec<Monomial> {
    let mut out = vec![Monomial::one()];
    let mut frontier = vec![Monomial::one()];
    for _ in 0..degree {
        let mut next = Vec::new();
        for m in &frontier {
            let start = m.0.last().map(|(v, _)| v.0).unwrap_or(0);
            for v in start..num_vars as u32 {
                next.push(m.mul(&Monomial::var(VarId(v))));
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.sort();
    out.dedup();
    out
}

/// Per-location template: for each location and component k, one unknown
/// coefficient per basis monomial. Degree 1 is the linear template.
#[derive(Debug, Clone)]
pub struct Template {
    pub k_max: u32,
    pub num_locs: usize,
    pub num_vars: usize,
    pub basis: Vec<Monomial>,
    pub param_names: Vec<String>,
}

impl Template {
    pub fn new(c: &Compiled, k_max: u32, degree: u32) -> Template {
        let num_locs = c.pcfg.num_locs();
        let num_vars = c.pcfg.num_vars();
        let basis = monomial_basis(num_vars, degree);
        let mut param_names = Vec::with_capacity(num_locs * k_max as usize * basis.len());
        for l in 0..num_locs {
            for k in 1..=k_max {
                for m in &basis {
                    let mname = if m.degree() == 0 {
                        "1".to_string()
                    } else {
                        m.0.iter()
                            .map(|(v, e)| {
                                let n = c.pcfg.var_name(*v);
                                if *e == 1 {
                                    n.to_string()
                                } else {
                                    format!("{n}^{e}")
                                }
                            })
                            .collect::<Vec<_>>()
                            .join("*")
                    };
                    param_names.push(format!("a[l{l}][k{k}][{mname}]"));
                }
            }
        }
        Template {
            k_max,
            num_locs,
            num_vars,
            basis,
            param_names,
        }
    }

    pub fn num_params(&self) -> usize {
        self.num_locs * self.k_max as usize * self.basis.len()
    }

    pub fn param(&self, l: LocId, k: u32, basis_ix: usize) -> usize {
        ((l.0 as usize * self.k_max as usize) + (k as usize - 1)) * self.basis.len() + basis_ix
    }

    /// The template form `eta_k` at location `l` as a parameter-affine
    /// polynomial over the program variables.
    pub fn eta(&self, l: LocId, k: u32) -> PolyU {
        let mut out = PolyU::zero();
        for (i, m) in self.basis.iter().enumerate() {
            out.add_term(m.clone(), UAff::param(self.param(l, k, i)));
        }
        out
    }
}

/// Context row `poly >= 0` (parameter-free, strictness already relaxed).
pub type ContextRow = Poly;

/// `context ==> consequent >= 0` with the consequent affine in the template
/// parameters.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub context: Vec<ContextRow>,
    pub consequent: PolyU,
    /// Provenance: location, condition, disjunct and case indices.
    pub tag: String,
    /// Number of universally quantified helper variables appended after the
    /// program variables (from nondeterministic assignments).
    pub extra_vars: usize,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum GenError {
    #[error("nonlinear construct at l{0} but the template is linear")]
    NonlinearConstruct(u32),
    #[error("predicate negation exceeded the disjunct limit: {0}")]
    Negation(String),
    #[error("distribution at l{0} lacks required moments")]
    BadDistribution(u32),
}

/// Relaxes an atom to non-strict rows (`poly >= 0`; equalities become two
/// rows).
fn relax_atom(a: &Atom) -> Vec<Poly> {
    match a.op {
        AtomOp::Ge | AtomOp::Gt => vec![a.poly.clone()],
        AtomOp::Eq => vec![a.poly.clone(), a.poly.neg()],
    }
}

fn relax_conj(conj: &[Atom]) -> Vec<Poly> {
    conj.iter().flat_map(relax_atom).collect()
}

/// Time-elapse composed with the successor templates:
/// `el_a^{K,k}(eta(l')) = a^k + sum_{j=1..k} C(k,j) a^{k-j} eta_j(l')`.
fn elapse(t: &Template, succ: LocId, k: u32, reward: &Rat) -> PolyU {
    let mut out = PolyU::constant(UAff::constant(rat_pow(reward, k)));
    for j in 1..=k {
        let coef = binomial(k, j) * rat_pow(reward, k - j);
        out = out.add(&t.eta(succ, j).scale(&coef));
    }
    out
}

/// One successor case of the pre-expectation at a location, before combining
/// with probabilities or suprema.
pub struct Case {
    /// Extra context rows (relaxed guard or ndet-predicate rows).
    pub rows: Vec<Poly>,
    /// The transformed `el . eta` term.
    pub value: PolyU,
    pub label: String,
}

/// Symbolic pre-expectation of `el_a^{K,k} . eta` at location `l`: one case
/// per deterministic guard disjunct / nondeterministic successor / ndet bound
/// case; probabilistic locations mix into a single case.
pub fn pre_expectation_cases(
    c: &Compiled,
    t: &Template,
    l: LocId,
    k: u32,
    next_extra: &mut usize,
) -> Result<Vec<Case>, GenError> {
    let pcfg = &c.pcfg;
    let reward = pcfg.loc(l).reward;
    let mut cases = Vec::new();
    match &pcfg.loc(l).kind {
        LocKind::Det { edges } => {
            for (ei, (guard, succ)) in edges.iter().enumerate() {
                let value = elapse(t, *succ, k, &reward);
                for (di, conj) in guard.disjuncts.iter().enumerate() {
                    cases.push(Case {
                        rows: relax_conj(conj),
                        value: value.clone(),
                        label: format!("edge{ei}.g{di}"),
                    });
                }
            }
        }
        LocKind::Prob { edges } => {
            let mut value = PolyU::zero();
            for (p, succ) in edges {
                value = value.add(&elapse(t, *succ, k, &reward).scale(p));
            }
            cases.push(Case {
                rows: Vec::new(),
                value,
                label: "mix".to_string(),
            });
        }
        LocKind::Nondet { succs } => {
            // One constraint per successor encodes the supremum.
            for (si, succ) in succs.iter().enumerate() {
                cases.push(Case {
                    rows: Vec::new(),
                    value: elapse(t, *succ, k, &reward),
                    label: format!("sup{si}"),
                });
            }
        }
        LocKind::Assign { var, update, succ } => {
            let base = elapse(t, *succ, k, &reward);
            match update {
                Update::Expr(e) => {
                    cases.push(Case {
                        rows: Vec::new(),
                        value: base.substitute(*var, e),
                        label: "subst".to_string(),
                    });
                }
                Update::Sample(dist) => {
                    cases.push(Case {
                        rows: Vec::new(),
                        value: base.expect_over(*var, dist),
                        label: "expect".to_string(),
                    });
                }
                Update::Choose(pred) => {
                    // The chosen value becomes a fresh universally
                    // quantified variable constrained by the predicate.
                    let y = VarId((t.num_vars + *next_extra) as u32);
                    *next_extra += 1;
                    let ypoly = Poly::var(y);
                    let value = base.substitute(*var, &ypoly);
                    for (di, conj) in pred.disjuncts.iter().enumerate() {
                        let rows: Vec<Poly> = relax_conj(conj)
                            .into_iter()
                            .map(|p| p.substitute(*var, &ypoly))
                            .collect();
                        cases.push(Case {
                            rows,
                            value: value.clone(),
                            label: format!("choose{di}"),
                        });
                    }
                }
            }
        }
    }
    Ok(cases)
}

pub struct GenOptions {
    pub negation_limit: usize,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            negation_limit: 64,
        }
    }
}

/// Generates the full constraint list: one decrease constraint per
/// (location, invariant disjunct, not-C disjunct, pre-expectation case, k)
/// and one nonnegativity constraint per (location, invariant disjunct, k).
pub fn generate_constraints(
    c: &Compiled,
    t: &Template,
    opts: &GenOptions,
) -> Result<Vec<Constraint>, GenError> {
    let pcfg = &c.pcfg;
    let mut out = Vec::new();
    for l in pcfg.loc_ids() {
        let inv = c.invariants.at(l);
        let term = c.terminals.at(l);
        let not_term = term
            .negate(opts.negation_limit)
            .map_err(GenError::Negation)?;

        for k in 1..=t.k_max {
            // Decrease on I \ C.
            if !not_term.is_falsity() {
                let mut extra = 0usize;
                let cases = pre_expectation_cases(c, t, l, k, &mut extra)?;
                for (ii, iconj) in inv.disjuncts.iter().enumerate() {
                    for (ni, nconj) in not_term.disjuncts.iter().enumerate() {
                        for case in &cases {
                            let mut context = relax_conj(iconj);
                            context.extend(relax_conj(nconj));
                            context.extend(case.rows.clone());
                            let consequent = t.eta(l, k).sub(&case.value);
                            out.push(Constraint {
                                context,
                                consequent,
                                tag: format!(
                                    "l{}/k{k}/dec/i{ii}/c{ni}/{}",
                                    l.0, case.label
                                ),
                                extra_vars: extra,
                            });
                        }
                    }
                }
            }
            // Nonnegativity on I.
            for (ii, iconj) in inv.disjuncts.iter().enumerate() {
                out.push(Constraint {
                    context: relax_conj(iconj),
                    consequent: t.eta(l, k),
                    tag: format!("l{}/k{k}/nonneg/i{ii}", l.0),
                    extra_vars: 0,
                });
            }
        }
    }
    Ok(out)
}

/// The synthesis objective `eta_K(l_init, x_init)` as an affine form over
/// the parameters.
pub fn objective(c: &Compiled, t: &Template) -> UAff {
    t.eta(c.pcfg.init_loc, t.k_max)
        .eval_vars(&|v| c.pcfg.init_vals[v.0 as usize])
}

/// Evaluates `eta_k(l_init, x_init)` for every k against solved parameters.
pub fn init_values(c: &Compiled, t: &Template, params: &[f64]) -> Vec<f64> {
    (1..=t.k_max)
        .map(|k| {
            t.eta(c.pcfg.init_loc, k)
                .eval_vars(&|v| c.pcfg.init_vals[v.0 as usize])
                .eval(params)
        })
        .collect()
}

/// Solved witness: per location and component, the monomial coefficients.
#[derive(Debug, Clone)]
pub struct Witness {
    pub k_max: u32,
    pub basis: Vec<Monomial>,
    /// `coeffs[loc][k-1][basis_ix]`
    pub coeffs: Vec<Vec<Vec<f64>>>,
    /// `u_k = eta_k(l_init, x_init)`
    pub bounds: Vec<f64>,
}

impl Witness {
    pub fn from_params(c: &Compiled, t: &Template, params: &[f64]) -> Witness {
        let coeffs = (0..t.num_locs)
            .map(|l| {
                (1..=t.k_max)
                    .map(|k| {
                        (0..t.basis.len())
                            .map(|i| params[t.param(LocId(l as u32), k, i)])
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Witness {
            k_max: t.k_max,
            basis: t.basis.clone(),
            coeffs,
            bounds: init_values(c, t, params),
        }
    }

    /// Evaluates `eta_k` at a concrete configuration.
    pub fn eval(&self, l: LocId, k: u32, vals: &[f64]) -> f64 {
        self.basis
            .iter()
            .zip(&self.coeffs[l.0 as usize][k as usize - 1])
            .map(|(m, c)| {
                let mut x = *c;
                for &(v, e) in &m.0 {
                    x *= vals[v.0 as usize].powi(e as i32);
                }
                x
            })
            .sum()
    }
}

/// Helper for tests: a map view of a linear consequent.
pub fn linear_coeff_map(p: &PolyU) -> Option<(BTreeMap<VarId, UAff>, UAff)> {
    p.linear_view()
}

#[cfg(test)]
pub fn relax_rows_for_test(a: &Atom) -> Vec<Poly> {
    relax_atom(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcfg::load_program;
    use crate::syntax::DistExpr;

    #[test]
    fn parameter_count_matches_locations_times_vars() {
        // Unfolded, the two-variable walk has 8 locations and 3 variables;
        // K=2 gives 8 * 2 * 4 parameters.
        let prog = crate::syntax::parse(
            "x := 2; y := 2;
             while x > 0 and y > 0 do
               z := Unif(-2, 1);
               if * then x := x + z else y := y + z fi
             od",
        )
        .unwrap();
        let v = crate::syntax::validate(&prog).unwrap();
        let c = crate::pcfg::compile_with(
            &v,
            crate::pcfg::CompileOptions {
                fold_init_prefix: false,
            },
        )
        .unwrap();
        let t = Template::new(&c, 2, 1);
        assert_eq!(t.num_params(), 8 * 2 * 4);
    }

    #[test]
    fn degenerate_k_is_the_classic_template() {
        let (_, c) = load_program("x := 1; while x > 0 do x := x - 1 od").unwrap();
        let t = Template::new(&c, 1, 1);
        assert_eq!(t.num_params(), c.pcfg.num_locs() * (c.pcfg.num_vars() + 1));
    }

    #[test]
    fn time_elapse_couples_lower_components() {
        // K=2, k=2, reward 1: el(eta) = 1 + 2*eta_1 + eta_2.
        let (_, c) = load_program("skip").unwrap();
        let t = Template::new(&c, 2, 1);
        let succ = c.pcfg.exit_loc;
        let e = elapse(&t, succ, 2, &Rat::one());
        let konst = e.terms.get(&Monomial::one()).unwrap();
        assert_eq!(konst.konst, Rat::one());
        let p1 = t.param(succ, 1, 0);
        let p2 = t.param(succ, 2, 0);
        // basis[0] is the constant monomial for a variable-free program
        assert_eq!(konst.terms.get(&p1), Some(&Rat::from_integer(2)));
        assert_eq!(konst.terms.get(&p2), Some(&Rat::one()));
    }

    #[test]
    fn sampling_substitutes_the_mean() {
        // eta over z after `z := Unif(-2, 1)` sees E[z] = -1/2.
        let d = DistExpr::Uniform(crate::num::rat_int(-2), crate::num::rat_int(1));
        let z = VarId(0);
        let mut p = PolyU::zero();
        p.add_term(Monomial::var(z), UAff::constant(Rat::one()));
        let e = p.expect_over(z, &d);
        assert_eq!(
            e.terms.get(&Monomial::one()).unwrap().konst,
            crate::num::rat(-1, 2)
        );
    }

    #[test]
    fn nondet_locations_emit_one_case_per_successor() {
        let (_, c) = load_program(
            "x := 2;
             while x > 0 do
               if * then x := x - 1 else x := x - 2 fi
             od",
        )
        .unwrap();
        let t = Template::new(&c, 1, 1);
        let ndet = c
            .pcfg
            .loc_ids()
            .find(|l| matches!(c.pcfg.loc(*l).kind, LocKind::Nondet { .. }))
            .unwrap();
        let mut extra = 0;
        let cases = pre_expectation_cases(&c, &t, ndet, 1, &mut extra).unwrap();
        assert_eq!(cases.len(), 2);
    }

    #[test]
    fn constraint_generation_is_deterministic() {
        let src = "
x := 10;
while x > 0 do
  if prob(0.75) then x := x - 1 else x := x + 1 fi
od";
        let (_, c) = load_program(src).unwrap();
        let t = Template::new(&c, 3, 1);
        let a = generate_constraints(&c, &t, &GenOptions::default()).unwrap();
        let b = generate_constraints(&c, &t, &GenOptions::default()).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.tag, y.tag);
            assert_eq!(x.consequent, y.consequent);
        }
    }
}
