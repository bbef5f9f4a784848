//! Typed AST for the annotated surface language.

use crate::num::{rat_display, rat_to_f64, Rat};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

/// Power product over program variables, kept sorted by variable id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(pub Vec<(VarId, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: VarId) -> Self {
        Monomial(vec![(v, 1)])
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out: BTreeMap<VarId, u32> = BTreeMap::new();
        for &(v, e) in self.0.iter().chain(other.0.iter()) {
            *out.entry(v).or_insert(0) += e;
        }
        Monomial(out.into_iter().collect())
    }

    pub fn exponent_of(&self, v: VarId) -> u32 {
        self.0
            .iter()
            .find(|(w, _)| *w == v)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    /// Removes `v` from the power product, returning its exponent.
    pub fn without(&self, v: VarId) -> (u32, Monomial) {
        let e = self.exponent_of(v);
        let rest = Monomial(self.0.iter().copied().filter(|(w, _)| *w != v).collect());
        (e, rest)
    }
}

// Graded lexicographic order: total degree first, then variable powers.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Polynomial over program variables with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, Rat>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: Rat) -> Self {
        let mut p = Poly::default();
        if !c.is_zero() {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn var(v: VarId) -> Self {
        let mut p = Poly::default();
        p.terms.insert(Monomial::var(v), Rat::one());
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            let key = self
                .terms
                .iter()
                .find(|(_, v)| v.is_zero())
                .map(|(k, _)| k.clone());
            if let Some(k) = key {
                self.terms.remove(&k);
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -*c);
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -*c)).collect(),
        }
    }

    pub fn scale(&self, k: &Rat) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
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

    pub fn is_constant(&self) -> Option<Rat> {
        if self.terms.is_empty() {
            return Some(Rat::zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&Monomial::one()) {
                return Some(*c);
            }
        }
        None
    }

    pub fn constant_part(&self) -> Rat {
        self.terms
            .get(&Monomial::one())
            .copied()
            .unwrap_or_else(Rat::zero)
    }

    /// Coefficient of the degree-one term in `v` (for linear polynomials).
    pub fn linear_coeff(&self, v: VarId) -> Rat {
        self.terms
            .get(&Monomial::var(v))
            .copied()
            .unwrap_or_else(Rat::zero)
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut vs: Vec<VarId> = self
            .terms
            .keys()
            .flat_map(|m| m.0.iter().map(|(v, _)| *v))
            .collect();
        vs.sort();
        vs.dedup();
        vs
    }

    /// Substitutes polynomial `e` for variable `v`.
    pub fn substitute(&self, v: VarId, e: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let (exp, rest) = m.without(v);
            let mut term = Poly {
                terms: [(rest, *c)].into_iter().collect(),
            };
            for _ in 0..exp {
                term = term.mul(e);
            }
            out = out.add(&term);
        }
        out
    }

    pub fn eval_f64(&self, val: &dyn Fn(VarId) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut x = rat_to_f64(c);
                for &(v, e) in &m.0 {
                    x *= val(v).powi(e as i32);
                }
                x
            })
            .sum()
    }

    pub fn eval_rat(&self, val: &dyn Fn(VarId) -> Rat) -> Rat {
        let mut acc = Rat::zero();
        for (m, c) in &self.terms {
            let mut x = *c;
            for &(v, e) in &m.0 {
                for _ in 0..e {
                    x *= val(v);
                }
            }
            acc += x;
        }
        acc
    }
}

/// Comparison of a polynomial against zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomOp {
    /// `poly >= 0`
    Ge,
    /// `poly > 0`
    Gt,
    /// `poly = 0`
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub poly: Poly,
    pub op: AtomOp,
}

impl Atom {
    pub fn holds_f64(&self, val: &dyn Fn(VarId) -> f64) -> bool {
        let x = self.poly.eval_f64(val);
        match self.op {
            AtomOp::Ge => x >= 0.0,
            AtomOp::Gt => x > 0.0,
            AtomOp::Eq => x == 0.0,
        }
    }

    pub fn holds_rat(&self, val: &dyn Fn(VarId) -> Rat) -> bool {
        let x = self.poly.eval_rat(val);
        match self.op {
            AtomOp::Ge => !x.is_negative(),
            AtomOp::Gt => x.is_positive(),
            AtomOp::Eq => x.is_zero(),
        }
    }

    /// Negation as a disjunction of atoms.
    pub fn negate(&self) -> Vec<Atom> {
        match self.op {
            AtomOp::Ge => vec![Atom {
                poly: self.poly.neg(),
                op: AtomOp::Gt,
            }],
            AtomOp::Gt => vec![Atom {
                poly: self.poly.neg(),
                op: AtomOp::Ge,
            }],
            AtomOp::Eq => vec![
                Atom {
                    poly: self.poly.clone(),
                    op: AtomOp::Gt,
                },
                Atom {
                    poly: self.poly.neg(),
                    op: AtomOp::Gt,
                },
            ],
        }
    }
}

/// Conjunction of atoms. An empty list means `true`.
pub type Conj = Vec<Atom>;

/// Predicate in disjunctive normal form. No disjuncts means `false`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    pub disjuncts: Vec<Conj>,
}

impl Predicate {
    pub fn truth() -> Self {
        Predicate {
            disjuncts: vec![Vec::new()],
        }
    }

    pub fn falsity() -> Self {
        Predicate {
            disjuncts: Vec::new(),
        }
    }

    pub fn atom(a: Atom) -> Self {
        Predicate {
            disjuncts: vec![vec![a]],
        }
    }

    pub fn is_truth(&self) -> bool {
        self.disjuncts.iter().any(|c| c.is_empty())
    }

    pub fn is_falsity(&self) -> bool {
        self.disjuncts.is_empty()
    }

    pub fn or(&self, other: &Predicate) -> Predicate {
        let mut disjuncts = self.disjuncts.clone();
        disjuncts.extend(other.disjuncts.clone());
        Predicate { disjuncts }
    }

    pub fn and(&self, other: &Predicate) -> Predicate {
        let mut disjuncts = Vec::new();
        for a in &self.disjuncts {
            for b in &other.disjuncts {
                let mut c = a.clone();
                c.extend(b.clone());
                disjuncts.push(c);
            }
        }
        Predicate { disjuncts }
    }

    /// De-Morgan negation, re-normalized to DNF. Errors if the number of
    /// disjuncts would exceed `limit`.
    pub fn negate(&self, limit: usize) -> Result<Predicate, String> {
        // not (D1 or D2 or ...) = (not D1) and (not D2) and ...
        let mut acc = Predicate::truth();
        for conj in &self.disjuncts {
            // not (a1 and a2 ...) = not a1 or not a2 or ...
            let mut clause = Predicate::falsity();
            for atom in conj {
                for na in atom.negate() {
                    clause = clause.or(&Predicate::atom(na));
                }
            }
            acc = acc.and(&clause);
            if acc.disjuncts.len() > limit {
                return Err(format!(
                    "predicate negation exceeds {limit} disjuncts"
                ));
            }
        }
        Ok(acc)
    }

    pub fn holds_f64(&self, val: &dyn Fn(VarId) -> f64) -> bool {
        self.disjuncts
            .iter()
            .any(|c| c.iter().all(|a| a.holds_f64(val)))
    }

    pub fn holds_rat(&self, val: &dyn Fn(VarId) -> Rat) -> bool {
        self.disjuncts
            .iter()
            .any(|c| c.iter().all(|a| a.holds_rat(val)))
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut vs: Vec<VarId> = self
            .disjuncts
            .iter()
            .flat_map(|c| c.iter().flat_map(|a| a.poly.vars()))
            .collect();
        vs.sort();
        vs.dedup();
        vs
    }

    pub fn max_degree(&self) -> u32 {
        self.disjuncts
            .iter()
            .flat_map(|c| c.iter().map(|a| a.poly.degree()))
            .max()
            .unwrap_or(0)
    }

    pub fn substitute(&self, v: VarId, e: &Poly) -> Predicate {
        Predicate {
            disjuncts: self
                .disjuncts
                .iter()
                .map(|c| {
                    c.iter()
                        .map(|a| Atom {
                            poly: a.poly.substitute(v, e),
                            op: a.op,
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DistExpr {
    /// Uniform on `[lo, hi]`, `lo < hi`.
    Uniform(Rat, Rat),
    /// Normal with the given mean and standard deviation (> 0).
    Normal(Rat, Rat),
    /// Finitely supported distribution; probabilities sum to one exactly.
    Discrete(Vec<(Rat, Rat)>),
}

impl DistExpr {
    pub fn mean(&self) -> Rat {
        match self {
            DistExpr::Uniform(a, b) => (*a + *b) / Rat::from_integer(2),
            DistExpr::Normal(m, _) => *m,
            DistExpr::Discrete(pairs) => {
                pairs.iter().map(|(v, p)| v * p).sum()
            }
        }
    }

    /// Exact n-th raw moment.
    pub fn raw_moment(&self, n: u32) -> Rat {
        use crate::num::{binomial, rat_int, rat_pow};
        if n == 0 {
            return Rat::one();
        }
        match self {
            // E[X^n] = (b^{n+1} - a^{n+1}) / ((n+1)(b-a))
            DistExpr::Uniform(a, b) => {
                (rat_pow(b, n + 1) - rat_pow(a, n + 1))
                    / (rat_int((n + 1) as i64) * (*b - *a))
            }
            // Raw moments from central moments of N(0, s^2):
            // E[(m+Z)^n] = sum_k C(n,k) m^{n-k} E[Z^k], E[Z^k] = (k-1)!! s^k for even k.
            DistExpr::Normal(m, s) => {
                let var = s * s;
                let mut acc = Rat::zero();
                for k in (0..=n).step_by(2) {
                    // double factorial (k-1)!! for even k
                    let mut dfac = Rat::one();
                    let mut j = k as i64 - 1;
                    while j > 1 {
                        dfac *= rat_int(j);
                        j -= 2;
                    }
                    let central = dfac * rat_pow(&var, k / 2);
                    acc += binomial(n, k) * rat_pow(m, n - k) * central;
                }
                acc
            }
            DistExpr::Discrete(pairs) => pairs
                .iter()
                .map(|(v, p)| rat_pow(v, n) * p)
                .sum(),
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, DistExpr::Discrete(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoopCond {
    Pred(Predicate),
    Prob(Rat),
    Ndet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Assign(VarId, Poly),
    Sample(VarId, DistExpr),
    /// `v := ndet(pred)` where the predicate constrains the assigned variable.
    NdetAssign(VarId, Predicate),
    IfProb(Rat, Vec<Stmt>, Vec<Stmt>),
    IfNdet(Vec<Stmt>, Vec<Stmt>),
    IfCond(Predicate, Vec<Stmt>, Vec<Stmt>),
    /// Loop with an optional local invariant annotation at the head.
    While(LoopCond, Option<Predicate>, Vec<Stmt>),
    Refute(Predicate, Option<Predicate>),
    Skip,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub var_names: Vec<String>,
    pub global_invariant: Option<Predicate>,
    pub body: Vec<Stmt>,
}

impl Program {
    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.var_names
            .iter()
            .position(|n| n == name)
            .map(|i| VarId(i as u32))
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.var_names[v.0 as usize]
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", super::printer::poly_to_string_raw(self))
    }
}

pub fn rat_literal(r: &Rat) -> String {
    rat_display(r)
}
