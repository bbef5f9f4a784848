//! Dense two-phase simplex over standard-form problems
//! `min c^T x  s.t.  A x {<=,=,>=} b,  x >= 0`.
//!
//! Free variables are handled upstream by splitting into nonnegative pairs.
//! Dantzig pricing switches to Bland's rule after a stall threshold to
//! guarantee termination; Optimal solutions satisfy the row residual bound
//! `|Ax - b| <= tol * (1 + |b|_inf)`.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
    pub name: String,
}

#[derive(Debug, Clone, Default)]
pub struct Lp {
    pub num_vars: usize,
    pub rows: Vec<LpRow>,
    /// Minimized objective, sparse over variables.
    pub objective: Vec<(usize, f64)>,
    pub col_names: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum LpError {
    #[error("numeric breakdown: pivot below 1e-12 in row {0}")]
    Breakdown(usize),
    #[error("iteration limit exceeded ({0} pivots)")]
    IterationLimit(usize),
}

const PIVOT_EPS: f64 = 1e-12;
/// Minimum entry magnitude admitted as a pivot by the ratio test. Data is
/// equilibrated to unit scale, so smaller entries are elimination noise and
/// pivoting on them destroys the tableau.
const RATIO_EPS: f64 = 1e-7;
const STALL_THRESHOLD: usize = 4000;
const MAX_PIVOTS: usize = 200_000;

struct Tableau {
    /// m x (n + 1); the last column is the right-hand side.
    rows: Vec<Vec<f64>>,
    /// Objective row (reduced costs), length n + 1.
    obj: Vec<f64>,
    basis: Vec<usize>,
    n: usize,
    pivots: usize,
    stalled: usize,
    last_obj: f64,
    /// Sticky anti-cycling mode engaged after a stall.
    bland: bool,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) -> Result<(), LpError> {
        let piv = self.rows[row][col];
        if piv.abs() < PIVOT_EPS {
            return Err(LpError::Breakdown(row));
        }
        let inv = 1.0 / piv;
        for v in self.rows[row].iter_mut() {
            *v *= inv;
        }
        let pivot_row = self.rows[row].clone();
        for (r, target) in self.rows.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let f = target[col];
            if f != 0.0 {
                for (t, p) in target.iter_mut().zip(&pivot_row) {
                    *t -= f * p;
                }
            }
        }
        let f = self.obj[col];
        if f != 0.0 {
            for (t, p) in self.obj.iter_mut().zip(&pivot_row) {
                *t -= f * p;
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
        Ok(())
    }

    /// Lexicographic comparison of candidate leaving rows `r` (scaled by its
    /// pivot entry) against `l`: decides degenerate ratio-test ties so the
    /// simplex cannot cycle.
    fn lex_less(&self, r: usize, l: usize, col: usize) -> bool {
        let ar = self.rows[r][col];
        let al = self.rows[l][col];
        for j in (0..=self.n).rev() {
            let vr = self.rows[r][j] / ar;
            let vl = self.rows[l][j] / al;
            if (vr - vl).abs() > 1e-11 {
                return vr < vl;
            }
        }
        self.basis[r] < self.basis[l]
    }

    /// One simplex phase on the current objective row. Returns true when the
    /// problem is unbounded in this phase.
    fn run(&mut self, tol: f64, allowed_cols: usize) -> Result<bool, LpError> {
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(LpError::IterationLimit(self.pivots));
            }
            let obj_now = self.obj[self.n];
            if obj_now < self.last_obj - tol * (1.0 + obj_now.abs()) {
                self.stalled = 0;
            } else {
                self.stalled += 1;
            }
            self.last_obj = obj_now;
            if self.stalled > STALL_THRESHOLD {
                self.bland = true;
            }

            // Entering column: most negative reduced cost, or the first
            // negative index once Bland's rule is engaged.
            let mut enter = None;
            if self.bland {
                for j in 0..allowed_cols {
                    if self.obj[j] < -tol {
                        enter = Some(j);
                        break;
                    }
                }
            } else {
                let mut best = -tol;
                for j in 0..allowed_cols {
                    if self.obj[j] < best {
                        best = self.obj[j];
                        enter = Some(j);
                    }
                }
            }
            let Some(col) = enter else {
                return Ok(false);
            };

            // Ratio test with lexicographic tie-breaking.
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][col];
                if a > RATIO_EPS {
                    let ratio = self.rows[r][self.n] / a;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, lv)) => {
                            let tie = 1e-10 * (1.0 + lv.abs());
                            if ratio < lv - tie {
                                leave = Some((r, ratio));
                            } else if ratio < lv + tie && self.lex_less(r, lr, col) {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Ok(true);
            };
            self.pivot(row, col)?;
        }
    }
}

pub fn solve(lp: &Lp, tol: f64) -> Result<LpSolution, LpError> {
    let n_struct = lp.num_vars;
    let m = lp.rows.len();

    // Ruiz-style equilibration: alternately scale rows and columns toward
    // unit max-magnitude. Column scales are undone on the solution; row
    // scales only affect internal conditioning.
    let mut col_scale = vec![1.0f64; n_struct];
    let mut scaled: Vec<(Vec<(usize, f64)>, Cmp, f64)> = lp
        .rows
        .iter()
        .map(|r| (r.coeffs.clone(), r.cmp, r.rhs))
        .collect();
    for _ in 0..4 {
        // Row pass.
        for (coeffs, _, rhs) in scaled.iter_mut() {
            let mx = coeffs
                .iter()
                .map(|(_, v)| v.abs())
                .fold(rhs.abs(), f64::max);
            if mx > 1e-12 && (mx > 4.0 || mx < 0.25) {
                let s = 1.0 / mx;
                for (_, v) in coeffs.iter_mut() {
                    *v *= s;
                }
                *rhs *= s;
            }
        }
        // Column pass.
        let mut col_max = vec![0.0f64; n_struct];
        for (coeffs, _, _) in &scaled {
            for &(j, v) in coeffs {
                col_max[j] = col_max[j].max(v.abs());
            }
        }
        for (j, mx) in col_max.iter().enumerate() {
            if *mx > 1e-12 && (*mx > 4.0 || *mx < 0.25) {
                let s = 1.0 / mx;
                col_scale[j] *= s;
                for (coeffs, _, _) in scaled.iter_mut() {
                    for (jj, v) in coeffs.iter_mut() {
                        if *jj == j {
                            *v *= s;
                        }
                    }
                }
            }
        }
    }

    // Normalize right-hand sides to be nonnegative.
    let mut normalized: Vec<(Vec<(usize, f64)>, Cmp, f64)> = Vec::with_capacity(m);
    for (coeffs, cmp, rhs) in scaled {
        if rhs < 0.0 {
            let coeffs = coeffs.iter().map(|&(j, v)| (j, -v)).collect();
            let cmp = match cmp {
                Cmp::Le => Cmp::Ge,
                Cmp::Ge => Cmp::Le,
                Cmp::Eq => Cmp::Eq,
            };
            normalized.push((coeffs, cmp, -rhs));
        } else {
            normalized.push((coeffs, cmp, rhs));
        }
    }

    let n_slack = normalized.iter().filter(|(_, c, _)| *c != Cmp::Eq).count();
    let n_art = normalized.iter().filter(|(_, c, _)| *c != Cmp::Le).count();
    let n_total = n_struct + n_slack + n_art;

    let mut rows: Vec<Vec<f64>> = vec![vec![0.0; n_total + 1]; m];
    let mut basis = vec![usize::MAX; m];
    let mut slack_at = n_struct;
    let mut art_at = n_struct + n_slack;
    let mut is_artificial = vec![false; n_total];

    for (r, (coeffs, cmp, rhs)) in normalized.iter().enumerate() {
        for &(j, v) in coeffs {
            rows[r][j] += v;
        }
        rows[r][n_total] = *rhs;
        match cmp {
            Cmp::Le => {
                rows[r][slack_at] = 1.0;
                basis[r] = slack_at;
                slack_at += 1;
            }
            Cmp::Ge => {
                rows[r][slack_at] = -1.0;
                slack_at += 1;
                rows[r][art_at] = 1.0;
                basis[r] = art_at;
                is_artificial[art_at] = true;
                art_at += 1;
            }
            Cmp::Eq => {
                rows[r][art_at] = 1.0;
                basis[r] = art_at;
                is_artificial[art_at] = true;
                art_at += 1;
            }
        }
    }

    let mut t = Tableau {
        rows,
        obj: vec![0.0; n_total + 1],
        basis,
        n: n_total,
        pivots: 0,
        stalled: 0,
        last_obj: f64::INFINITY,
        bland: false,
    };

    // Phase 1: minimize the sum of artificials.
    if n_art > 0 {
        for (c, art) in is_artificial.iter().enumerate() {
            if *art {
                t.obj[c] = 1.0;
            }
        }
        for r in 0..m {
            if is_artificial[t.basis[r]] {
                let row = t.rows[r].clone();
                for (o, v) in t.obj.iter_mut().zip(&row) {
                    *o -= v;
                }
            }
        }
        // Phase 1 is bounded below by zero; an unbounded signal can only be
        // numerical noise in a near-zero column, so the objective value
        // decides feasibility either way.
        let hit_unbounded = t.run(tol, n_total)?;
        let phase1 = -t.obj[n_total];
        if std::env::var("LP_DEBUG").is_ok() {
            eprintln!("phase1 obj {} unbounded-branch {} pivots {}", phase1, hit_unbounded, t.pivots);
        }
        if phase1 > tol * 10.0 {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n_struct],
                objective: f64::INFINITY,
                iterations: t.pivots,
            });
        }
        // Drive leftover degenerate artificials out of the basis on the
        // largest available pivot; rows with no usable pivot are redundant
        // and get dropped so a basic artificial can never drift positive
        // during phase 2.
        let mut drop_rows = Vec::new();
        for r in 0..m {
            if is_artificial[t.basis[r]] {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..n_struct + n_slack {
                    let a = t.rows[r][j].abs();
                    if a > best.map(|(_, v)| v).unwrap_or(1e-7) {
                        best = Some((j, a));
                    }
                }
                match best {
                    Some((c, _)) => t.pivot(r, c)?,
                    None => drop_rows.push(r),
                }
            }
        }
        for &r in drop_rows.iter().rev() {
            t.rows.remove(r);
            t.basis.remove(r);
        }
    }

    // Phase 2: real objective priced against the current basis; artificial
    // columns are never allowed to re-enter.
    t.obj = vec![0.0; n_total + 1];
    for &(j, v) in &lp.objective {
        t.obj[j] += v * col_scale[j];
    }
    for r in 0..t.rows.len() {
        let b = t.basis[r];
        let cost = if b < n_total { t.obj[b] } else { 0.0 };
        if cost != 0.0 {
            let row = t.rows[r].clone();
            for (o, v) in t.obj.iter_mut().zip(&row) {
                *o -= cost * v;
            }
        }
    }
    let phase2_cols = n_struct + n_slack;
    t.stalled = 0;
    t.last_obj = f64::INFINITY;
    t.bland = false;
    let unbounded = t.run(tol, phase2_cols)?;
    if unbounded {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![0.0; n_struct],
            objective: f64::NEG_INFINITY,
            iterations: t.pivots,
        });
    }

    let mut x = vec![0.0; n_struct];
    for r in 0..t.rows.len() {
        let b = t.basis[r];
        if b < n_struct {
            x[b] = t.rows[r][n_total] * col_scale[b];
        }
    }
    let objective: f64 = lp.objective.iter().map(|&(j, v)| v * x[j]).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        iterations: t.pivots,
    })
}

/// Rowwise residual check for Optimal solutions.
pub fn residuals_ok(lp: &Lp, x: &[f64], tol: f64) -> bool {
    let bmax = lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0f64, f64::max);
    for row in &lp.rows {
        let lhs: f64 = row.coeffs.iter().map(|&(j, v)| v * x[j]).sum();
        let slack = lhs - row.rhs;
        let bad = match row.cmp {
            Cmp::Le => slack > tol * (1.0 + bmax),
            Cmp::Ge => slack < -tol * (1.0 + bmax),
            Cmp::Eq => slack.abs() > tol * (1.0 + bmax),
        };
        if bad {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::rng::SplitMix64;

    fn lp(
        num_vars: usize,
        rows: Vec<(Vec<(usize, f64)>, Cmp, f64)>,
        objective: Vec<(usize, f64)>,
    ) -> Lp {
        Lp {
            num_vars,
            rows: rows
                .into_iter()
                .enumerate()
                .map(|(i, (coeffs, cmp, rhs))| LpRow {
                    coeffs,
                    cmp,
                    rhs,
                    name: format!("r{i}"),
                })
                .collect(),
            objective,
            col_names: (0..num_vars).map(|i| format!("x{i}")).collect(),
        }
    }

    #[test]
    fn maximizes_along_a_bound() {
        // minimize -x subject to x <= 3
        let p = lp(1, vec![(vec![(0, 1.0)], Cmp::Le, 3.0)], vec![(0, -1.0)]);
        let s = solve(&p, 1e-9).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 3.0).abs() < 1e-9);
        assert!((s.objective + 3.0).abs() < 1e-9);
        assert!(residuals_ok(&p, &s.x, 1e-9));
    }

    #[test]
    fn detects_infeasibility() {
        // x <= -1 with x >= 0
        let p = lp(1, vec![(vec![(0, 1.0)], Cmp::Le, -1.0)], vec![(0, 1.0)]);
        let s = solve(&p, 1e-9).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        // minimize -x with only x >= 1
        let p = lp(1, vec![(vec![(0, 1.0)], Cmp::Ge, 1.0)], vec![(0, -1.0)]);
        let s = solve(&p, 1e-9).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_rows_are_respected() {
        // min x + y s.t. x + y = 2, x - y <= 0
        let p = lp(
            2,
            vec![
                (vec![(0, 1.0), (1, 1.0)], Cmp::Eq, 2.0),
                (vec![(0, 1.0), (1, -1.0)], Cmp::Le, 0.0),
            ],
            vec![(0, 1.0), (1, 1.0)],
        );
        let s = solve(&p, 1e-9).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-8);
    }

    /// Brute-force oracle: enumerate candidate vertices (choices of n active
    /// planes among the rows and nonnegativity bounds) and take the best
    /// feasible one.
    fn brute_force(p: &Lp) -> Option<f64> {
        let n = p.num_vars;
        let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
        for row in &p.rows {
            let mut a = vec![0.0; n];
            for &(j, v) in &row.coeffs {
                a[j] += v;
            }
            planes.push((a, row.rhs));
        }
        for j in 0..n {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            planes.push((a, 0.0));
        }

        fn feasible(p: &Lp, x: &[f64]) -> bool {
            x.iter().all(|&v| v >= -1e-7)
                && p.rows.iter().all(|row| {
                    let lhs: f64 = row.coeffs.iter().map(|&(j, v)| v * x[j]).sum();
                    match row.cmp {
                        Cmp::Le => lhs <= row.rhs + 1e-7,
                        Cmp::Ge => lhs >= row.rhs - 1e-7,
                        Cmp::Eq => (lhs - row.rhs).abs() <= 1e-7,
                    }
                })
        }

        fn rec(
            n: usize,
            start: usize,
            depth: usize,
            combo: &mut Vec<usize>,
            planes: &[(Vec<f64>, f64)],
            p: &Lp,
            best: &mut Option<f64>,
        ) {
            if depth == n {
                let a: Vec<Vec<f64>> = combo.iter().map(|&i| planes[i].0.clone()).collect();
                let b: Vec<f64> = combo.iter().map(|&i| planes[i].1).collect();
                if let Some(x) = crate::oracle::markov::gauss_solve(a, b) {
                    if feasible(p, &x) {
                        let obj: f64 = p.objective.iter().map(|&(j, v)| v * x[j]).sum();
                        *best = Some(best.map_or(obj, |b: f64| b.min(obj)));
                    }
                }
                return;
            }
            for i in start..planes.len() {
                combo[depth] = i;
                rec(n, i + 1, depth + 1, combo, planes, p, best);
            }
        }

        let mut best = None;
        let mut combo = vec![0usize; n];
        rec(n, 0, 0, &mut combo, &planes, p, &mut best);
        best
    }

    #[test]
    fn random_lps_match_vertex_enumeration() {
        let mut rng = SplitMix64::new(2024);
        let mut compared = 0;
        for case in 0..200 {
            let n = 2 + (rng.next_u64() % 5) as usize; // up to 6 vars
            let m = 2 + (rng.next_u64() % 7) as usize; // up to 8 rows
            let mut rows = Vec::new();
            for _ in 0..m {
                let coeffs: Vec<(usize, f64)> = (0..n)
                    .map(|j| (j, (rng.next_f64() * 4.0 - 2.0).round()))
                    .filter(|&(_, v)| v != 0.0)
                    .collect();
                let cmp = match rng.next_u64() % 4 {
                    0 => Cmp::Ge,
                    1 => Cmp::Eq,
                    _ => Cmp::Le,
                };
                let rhs = (rng.next_f64() * 10.0 - 2.0).round();
                rows.push((coeffs, cmp, rhs));
            }
            // Bound the region so unboundedness stays rare.
            let all: Vec<(usize, f64)> = (0..n).map(|j| (j, 1.0)).collect();
            rows.push((all, Cmp::Le, 20.0));
            let objective: Vec<(usize, f64)> = (0..n)
                .map(|j| (j, (rng.next_f64() * 4.0 - 2.0).round()))
                .collect();
            let p = lp(n, rows, objective);
            let s = solve(&p, 1e-9).unwrap_or_else(|e| panic!("case {case}: {e}"));
            assert!(s.iterations <= 10_000, "case {case}: {} pivots", s.iterations);
            let oracle = brute_force(&p);
            match (s.status, oracle) {
                (LpStatus::Optimal, Some(best)) => {
                    assert!(
                        (s.objective - best).abs() <= 1e-7 * (1.0 + best.abs()),
                        "case {case}: simplex {} vs brute force {best}",
                        s.objective
                    );
                    assert!(residuals_ok(&p, &s.x, 1e-9));
                    compared += 1;
                }
                (LpStatus::Infeasible, None) => {}
                (LpStatus::Unbounded, _) => {}
                (LpStatus::Optimal, None) => {
                    assert!(residuals_ok(&p, &s.x, 1e-9), "case {case}");
                }
                (LpStatus::Infeasible, Some(v)) => {
                    panic!("case {case}: solver says infeasible, oracle found {v}")
                }
            }
        }
        assert!(compared > 50, "only {compared} optimal cases compared");
    }

    #[test]
    fn identical_input_gives_identical_pivots() {
        let p = lp(
            3,
            vec![
                (vec![(0, 1.0), (1, 2.0)], Cmp::Le, 4.0),
                (vec![(1, 1.0), (2, 1.0)], Cmp::Ge, 1.0),
                (vec![(0, 1.0), (2, -1.0)], Cmp::Eq, 0.0),
            ],
            vec![(0, 1.0), (1, -1.0), (2, 2.0)],
        );
        let a = solve(&p, 1e-9).unwrap();
        let b = solve(&p, 1e-9).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.x, b.x);
    }
}
