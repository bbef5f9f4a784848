//! Recursive-descent parser for the annotated surface language.
//!
//! Grammar (whitespace-insensitive, `#` line comments):
//!
//! ```text
//! program  := [ "$" pred ] stmt
//! stmt     := stmt ";" stmt | var ":=" aexpr | var ":=" dist
//!           | var ":=" "ndet" "(" pred ")"
//!           | "if" cond "then" stmt "else" stmt "fi"
//!           | "while" cond [ "{" pred "}" ] "do" stmt "od"
//!           | "refute" "(" pred ")" | "skip"
//! cond     := "prob" "(" number ")" | "*" | pred
//! dist     := "Unif" "(" number "," number ")" | "Norm" "(" number "," number ")"
//!           | "Disc" "(" number ":" number { "," number ":" number } ")"
//! pred     := boolean combinations of aexpr (<|<=|>|>=|=) aexpr with and/or/not
//! ```

use super::ast::*;
use super::lexer::{lex, Lexed, Pos, SyntaxError, Tok};
use crate::num::Rat;
use num_traits::{One, Signed, Zero};

const NEGATION_LIMIT: usize = 256;

struct Parser {
    toks: Vec<Lexed>,
    idx: usize,
    vars: Vec<String>,
}

pub fn parse(src: &str) -> Result<Program, SyntaxError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        idx: 0,
        vars: Vec::new(),
    };
    let global_invariant = if p.peek() == &Tok::Dollar {
        p.bump();
        Some(p.pred()?)
    } else {
        None
    };
    let body = p.stmt_seq()?;
    p.expect(Tok::Eof)?;
    let prog = Program {
        var_names: p.vars,
        global_invariant,
        body,
    };
    Ok(canonicalize_vars(prog))
}

/// Renumbers variables so that ids follow sorted name order. This makes
/// parse/print round trips id-stable and downstream output deterministic.
fn canonicalize_vars(p: Program) -> Program {
    let mut sorted = p.var_names.clone();
    sorted.sort();
    let remap: Vec<VarId> = p
        .var_names
        .iter()
        .map(|n| VarId(sorted.iter().position(|s| s == n).unwrap() as u32))
        .collect();
    let f = |v: VarId| remap[v.0 as usize];
    Program {
        var_names: sorted,
        global_invariant: p.global_invariant.map(|i| remap_pred(&i, &f)),
        body: p.body.iter().map(|s| remap_stmt(s, &f)).collect(),
    }
}

fn remap_poly(poly: &Poly, f: &dyn Fn(VarId) -> VarId) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in &poly.terms {
        let mut vars: Vec<(VarId, u32)> = m.0.iter().map(|&(v, e)| (f(v), e)).collect();
        vars.sort();
        out.add_term(Monomial(vars), *c);
    }
    out
}

fn remap_pred(pred: &Predicate, f: &dyn Fn(VarId) -> VarId) -> Predicate {
    Predicate {
        disjuncts: pred
            .disjuncts
            .iter()
            .map(|c| {
                c.iter()
                    .map(|a| Atom {
                        poly: remap_poly(&a.poly, f),
                        op: a.op,
                    })
                    .collect()
            })
            .collect(),
    }
}

fn remap_stmt(s: &Stmt, f: &dyn Fn(VarId) -> VarId) -> Stmt {
    let walk = |body: &[Stmt]| body.iter().map(|s| remap_stmt(s, f)).collect::<Vec<_>>();
    match s {
        Stmt::Assign(v, e) => Stmt::Assign(f(*v), remap_poly(e, f)),
        Stmt::Sample(v, d) => Stmt::Sample(f(*v), d.clone()),
        Stmt::NdetAssign(v, p) => Stmt::NdetAssign(f(*v), remap_pred(p, f)),
        Stmt::IfProb(q, t, e) => Stmt::IfProb(*q, walk(t), walk(e)),
        Stmt::IfNdet(t, e) => Stmt::IfNdet(walk(t), walk(e)),
        Stmt::IfCond(c, t, e) => Stmt::IfCond(remap_pred(c, f), walk(t), walk(e)),
        Stmt::While(c, inv, b) => {
            let lc = match c {
                LoopCond::Pred(p) => LoopCond::Pred(remap_pred(p, f)),
                other => other.clone(),
            };
            Stmt::While(lc, inv.as_ref().map(|i| remap_pred(i, f)), walk(b))
        }
        Stmt::Refute(p, inv) => Stmt::Refute(remap_pred(p, f), inv.as_ref().map(|i| remap_pred(i, f))),
        Stmt::Skip => Stmt::Skip,
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.idx].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.idx + 1).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.idx].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.idx].tok.clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, t: Tok) -> Result<(), SyntaxError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {t}, found {}", self.peek()))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), SyntaxError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            other => self.err(format!("expected `{kw}`, found {other}")),
        }
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn intern(&mut self, name: &str) -> VarId {
        if let Some(i) = self.vars.iter().position(|v| v == name) {
            VarId(i as u32)
        } else {
            self.vars.push(name.to_string());
            VarId((self.vars.len() - 1) as u32)
        }
    }

    fn number(&mut self) -> Result<Rat, SyntaxError> {
        let neg = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let n = match self.bump() {
            Tok::Number(n) => n,
            other => return self.err(format!("expected number, found {other}")),
        };
        let mut val = n;
        if *self.peek() == Tok::Slash {
            self.bump();
            match self.bump() {
                Tok::Number(d) => {
                    if d.is_zero() {
                        return self.err("zero denominator in rational literal");
                    }
                    val /= d;
                }
                other => return self.err(format!("expected denominator, found {other}")),
            }
        }
        Ok(if neg { -val } else { val })
    }

    // ---- statements ----

    fn stmt_seq(&mut self) -> Result<Vec<Stmt>, SyntaxError> {
        let mut out = vec![self.stmt()?];
        while *self.peek() == Tok::Semi {
            self.bump();
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn stmt(&mut self) -> Result<Stmt, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(kw) if kw == "skip" => {
                self.bump();
                Ok(Stmt::Skip)
            }
            Tok::Ident(kw) if kw == "refute" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let p = self.pred()?;
                self.expect(Tok::RParen)?;
                // Optional local invariant annotation, as on loop heads.
                let inv = if *self.peek() == Tok::LBrace {
                    self.bump();
                    let i = self.pred()?;
                    self.expect(Tok::RBrace)?;
                    Some(i)
                } else {
                    None
                };
                Ok(Stmt::Refute(p, inv))
            }
            Tok::Ident(kw) if kw == "if" => {
                self.bump();
                let cond = self.cond()?;
                self.expect_kw("then")?;
                let then_branch = self.stmt_seq()?;
                self.expect_kw("else")?;
                let else_branch = self.stmt_seq()?;
                self.expect_kw("fi")?;
                Ok(match cond {
                    Cond::Prob(p) => Stmt::IfProb(p, then_branch, else_branch),
                    Cond::Ndet => Stmt::IfNdet(then_branch, else_branch),
                    Cond::Pred(p) => Stmt::IfCond(p, then_branch, else_branch),
                })
            }
            Tok::Ident(kw) if kw == "while" => {
                self.bump();
                let cond = self.cond()?;
                let inv = if *self.peek() == Tok::LBrace {
                    self.bump();
                    let p = self.pred()?;
                    self.expect(Tok::RBrace)?;
                    Some(p)
                } else {
                    None
                };
                self.expect_kw("do")?;
                let body = self.stmt_seq()?;
                self.expect_kw("od")?;
                let lc = match cond {
                    Cond::Prob(p) => LoopCond::Prob(p),
                    Cond::Ndet => LoopCond::Ndet,
                    Cond::Pred(p) => LoopCond::Pred(p),
                };
                Ok(Stmt::While(lc, inv, body))
            }
            Tok::Ident(name) => {
                // assignment forms
                if self.is_keyword(&name) {
                    return self.err(format!("unexpected keyword `{name}`"));
                }
                self.bump();
                let v = self.intern(&name);
                self.expect(Tok::Assign)?;
                match self.peek().clone() {
                    Tok::Ident(d) if d == "Unif" || d == "Norm" || d == "Disc" => {
                        let dist = self.dist(&d)?;
                        Ok(Stmt::Sample(v, dist))
                    }
                    Tok::Ident(d) if d == "ndet" => {
                        self.bump();
                        self.expect(Tok::LParen)?;
                        let p = self.pred()?;
                        self.expect(Tok::RParen)?;
                        Ok(Stmt::NdetAssign(v, p))
                    }
                    _ => {
                        let e = self.aexpr()?;
                        Ok(Stmt::Assign(v, e))
                    }
                }
            }
            other => self.err(format!("expected statement, found {other}")),
        }
    }

    fn is_keyword(&self, s: &str) -> bool {
        matches!(
            s,
            "if" | "then"
                | "else"
                | "fi"
                | "while"
                | "do"
                | "od"
                | "refute"
                | "skip"
                | "prob"
                | "ndet"
                | "and"
                | "or"
                | "not"
                | "true"
                | "false"
                | "Unif"
                | "Norm"
                | "Disc"
        )
    }

    fn cond(&mut self) -> Result<Cond, SyntaxError> {
        if self.at_kw("prob") {
            self.bump();
            self.expect(Tok::LParen)?;
            let pos = self.pos();
            let p = self.number()?;
            self.expect(Tok::RParen)?;
            if p.is_negative() || p > Rat::one() {
                return Err(SyntaxError {
                    pos,
                    msg: format!("probability literal {p} outside [0, 1]"),
                });
            }
            Ok(Cond::Prob(p))
        } else if *self.peek() == Tok::Star {
            self.bump();
            Ok(Cond::Ndet)
        } else {
            Ok(Cond::Pred(self.pred()?))
        }
    }

    fn dist(&mut self, kind: &str) -> Result<DistExpr, SyntaxError> {
        let pos = self.pos();
        self.bump(); // kind keyword
        self.expect(Tok::LParen)?;
        match kind {
            "Unif" => {
                let a = self.number()?;
                self.expect(Tok::Comma)?;
                let b = self.number()?;
                self.expect(Tok::RParen)?;
                if a >= b {
                    return Err(SyntaxError {
                        pos,
                        msg: "Unif(a, b) requires a < b".into(),
                    });
                }
                Ok(DistExpr::Uniform(a, b))
            }
            "Norm" => {
                let m = self.number()?;
                self.expect(Tok::Comma)?;
                let s = self.number()?;
                self.expect(Tok::RParen)?;
                if !s.is_positive() {
                    return Err(SyntaxError {
                        pos,
                        msg: "Norm(mean, stddev) requires stddev > 0".into(),
                    });
                }
                Ok(DistExpr::Normal(m, s))
            }
            "Disc" => {
                let mut pairs = Vec::new();
                loop {
                    let v = self.number()?;
                    self.expect(Tok::Colon)?;
                    let p = self.number()?;
                    if p.is_negative() {
                        return Err(SyntaxError {
                            pos,
                            msg: "Disc probabilities must be nonnegative".into(),
                        });
                    }
                    pairs.push((v, p));
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RParen)?;
                let total: Rat = pairs.iter().map(|(_, p)| *p).sum();
                if total != Rat::one() {
                    return Err(SyntaxError {
                        pos,
                        msg: format!("Disc probabilities sum to {total}, expected 1"),
                    });
                }
                Ok(DistExpr::Discrete(pairs))
            }
            _ => unreachable!(),
        }
    }

    // ---- predicates ----

    fn pred(&mut self) -> Result<Predicate, SyntaxError> {
        let mut acc = self.pred_and()?;
        while self.at_kw("or") {
            self.bump();
            let rhs = self.pred_and()?;
            acc = acc.or(&rhs);
        }
        Ok(acc)
    }

    fn pred_and(&mut self) -> Result<Predicate, SyntaxError> {
        let mut acc = self.pred_not()?;
        while self.at_kw("and") {
            self.bump();
            let rhs = self.pred_not()?;
            acc = acc.and(&rhs);
        }
        Ok(acc)
    }

    fn pred_not(&mut self) -> Result<Predicate, SyntaxError> {
        if self.at_kw("not") {
            let pos = self.pos();
            self.bump();
            let inner = self.pred_not()?;
            inner.negate(NEGATION_LIMIT).map_err(|msg| SyntaxError { pos, msg })
        } else {
            self.pred_atom()
        }
    }

    fn pred_atom(&mut self) -> Result<Predicate, SyntaxError> {
        if self.at_kw("true") {
            self.bump();
            return Ok(Predicate::truth());
        }
        if self.at_kw("false") {
            self.bump();
            return Ok(Predicate::falsity());
        }
        if *self.peek() == Tok::LParen {
            // Could be a parenthesized predicate or a parenthesized arithmetic
            // expression starting a comparison; try the predicate first.
            let save = self.idx;
            let save_vars = self.vars.len();
            self.bump();
            if let Ok(p) = self.pred() {
                if *self.peek() == Tok::RParen {
                    // Make sure this is not actually `(aexpr) < ...`.
                    if !matches!(
                        self.peek2(),
                        Tok::Le | Tok::Lt | Tok::Ge | Tok::Gt | Tok::Eq
                    ) {
                        self.bump();
                        return Ok(p);
                    }
                }
            }
            self.idx = save;
            self.vars.truncate(save_vars);
        }
        let lhs = self.aexpr()?;
        let op = self.bump();
        let rhs = self.aexpr()?;
        let atom = match op {
            // e1 <= e2  ==>  e2 - e1 >= 0
            Tok::Le => Atom {
                poly: rhs.sub(&lhs),
                op: AtomOp::Ge,
            },
            Tok::Lt => Atom {
                poly: rhs.sub(&lhs),
                op: AtomOp::Gt,
            },
            Tok::Ge => Atom {
                poly: lhs.sub(&rhs),
                op: AtomOp::Ge,
            },
            Tok::Gt => Atom {
                poly: lhs.sub(&rhs),
                op: AtomOp::Gt,
            },
            Tok::Eq => Atom {
                poly: lhs.sub(&rhs),
                op: AtomOp::Eq,
            },
            other => return self.err(format!("expected comparison operator, found {other}")),
        };
        Ok(Predicate::atom(atom))
    }

    // ---- arithmetic expressions ----

    fn aexpr(&mut self) -> Result<Poly, SyntaxError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let t = self.term()?;
                    acc = acc.add(&t);
                }
                Tok::Minus => {
                    self.bump();
                    let t = self.term()?;
                    acc = acc.sub(&t);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Poly, SyntaxError> {
        let mut acc = self.factor()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let f = self.factor()?;
            acc = acc.mul(&f);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Poly, SyntaxError> {
        match self.peek().clone() {
            Tok::Minus => {
                self.bump();
                Ok(self.factor()?.neg())
            }
            Tok::Number(_) => {
                let n = self.number()?;
                Ok(Poly::constant(n))
            }
            Tok::LParen => {
                self.bump();
                let e = self.aexpr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.is_keyword(&name) {
                    return self.err(format!("unexpected keyword `{name}` in expression"));
                }
                self.bump();
                let v = self.intern(&name);
                Ok(Poly::var(v))
            }
            other => self.err(format!("expected expression, found {other}")),
        }
    }
}

enum Cond {
    Prob(Rat),
    Ndet,
    Pred(Predicate),
}
