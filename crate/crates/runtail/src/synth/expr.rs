//! Parameter-affine expressions: polynomials over (extended) program
//! variables whose coefficients are affine forms in the unknown template
//! parameters. Everything stays in exact rational arithmetic until the
//! numbers enter a solver.

use crate::num::Rat;
use crate::syntax::{DistExpr, Monomial, Poly, VarId};
use num_traits::Zero;
use std::collections::BTreeMap;

/// Affine form over template parameters: `sum c_p * u_p + konst`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UAff {
    pub terms: BTreeMap<usize, Rat>,
    pub konst: Rat,
}

impl UAff {
    pub fn constant(c: Rat) -> Self {
        UAff {
            terms: BTreeMap::new(),
            konst: c,
        }
    }

    pub fn param(p: usize) -> Self {
        UAff {
            terms: [(p, Rat::from_integer(1))].into_iter().collect(),
            konst: Rat::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.konst.is_zero()
    }

    pub fn add(&self, other: &UAff) -> UAff {
        let mut out = self.clone();
        for (p, c) in &other.terms {
            let e = out.terms.entry(*p).or_insert_with(Rat::zero);
            *e += c;
            if e.is_zero() {
                out.terms.remove(p);
            }
        }
        out.konst += other.konst;
        out
    }

    pub fn sub(&self, other: &UAff) -> UAff {
        self.add(&other.scale(&Rat::from_integer(-1)))
    }

    pub fn scale(&self, k: &Rat) -> UAff {
        if k.is_zero() {
            return UAff::default();
        }
        UAff {
            terms: self.terms.iter().map(|(p, c)| (*p, c * k)).collect(),
            konst: self.konst * k,
        }
    }

    /// Evaluates against solved parameter values.
    pub fn eval(&self, params: &[f64]) -> f64 {
        crate::num::rat_to_f64(&self.konst)
            + self
                .terms
                .iter()
                .map(|(p, c)| crate::num::rat_to_f64(c) * params[*p])
                .sum::<f64>()
    }
}

/// Polynomial over variables with [`UAff`] coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolyU {
    pub terms: BTreeMap<Monomial, UAff>,
}

impl PolyU {
    pub fn zero() -> Self {
        PolyU::default()
    }

    pub fn constant(c: UAff) -> Self {
        let mut out = PolyU::default();
        if !c.is_zero() {
            out.terms.insert(Monomial::one(), c);
        }
        out
    }

    pub fn from_poly(p: &Poly) -> Self {
        PolyU {
            terms: p
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), UAff::constant(*c)))
                .collect(),
        }
    }

    pub fn add_term(&mut self, m: Monomial, c: UAff) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m.clone()).or_default();
        *entry = entry.add(&c);
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &PolyU) -> PolyU {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &PolyU) -> PolyU {
        self.add(&other.scale(&Rat::from_integer(-1)))
    }

    pub fn scale(&self, k: &Rat) -> PolyU {
        if k.is_zero() {
            return PolyU::zero();
        }
        PolyU {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.scale(k)))
                .collect(),
        }
    }

    /// Multiplies by a parameter-free polynomial.
    pub fn mul_poly(&self, p: &Poly) -> PolyU {
        let mut out = PolyU::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &p.terms {
                out.add_term(m1.mul(m2), c1.scale(c2));
            }
        }
        out
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn is_linear(&self) -> bool {
        self.degree() <= 1
    }

    /// Substitutes a parameter-free polynomial for a variable.
    pub fn substitute(&self, v: VarId, e: &Poly) -> PolyU {
        let mut out = PolyU::zero();
        for (m, c) in &self.terms {
            let (exp, rest) = m.without(v);
            // rest * e^exp with coefficient c
            let mut powered = Poly::constant(Rat::from_integer(1));
            for _ in 0..exp {
                powered = powered.mul(e);
            }
            for (pm, pc) in &powered.terms {
                out.add_term(rest.mul(pm), c.scale(pc));
            }
        }
        out
    }

    /// Integrates out `v` against a distribution: every power `v^n` becomes
    /// the exact n-th raw moment.
    pub fn expect_over(&self, v: VarId, dist: &DistExpr) -> PolyU {
        let mut out = PolyU::zero();
        for (m, c) in &self.terms {
            let (exp, rest) = m.without(v);
            let moment = dist.raw_moment(exp);
            out.add_term(rest, c.scale(&moment));
        }
        out
    }

    /// Linear view: per-variable coefficients plus the constant coefficient.
    /// Returns `None` when the polynomial has degree above one.
    pub fn linear_view(&self) -> Option<(BTreeMap<VarId, UAff>, UAff)> {
        let mut coeffs = BTreeMap::new();
        let mut konst = UAff::default();
        for (m, c) in &self.terms {
            match m.degree() {
                0 => konst = konst.add(c),
                1 => {
                    let v = m.0[0].0;
                    let e = coeffs.entry(v).or_insert_with(UAff::default);
                    *e = e.add(c);
                }
                _ => return None,
            }
        }
        Some((coeffs, konst))
    }

    /// Evaluates the variable part at a rational valuation, leaving an
    /// affine form over the parameters.
    pub fn eval_vars(&self, val: &dyn Fn(VarId) -> Rat) -> UAff {
        let mut out = UAff::default();
        for (m, c) in &self.terms {
            let mut x = Rat::from_integer(1);
            for &(v, e) in &m.0 {
                for _ in 0..e {
                    x *= val(v);
                }
            }
            out = out.add(&c.scale(&x));
        }
        out
    }
}
