//! Step two of the pipeline: turn moment bounds into tail probability
//! bounds via `P(T >= d) <= min_{0<=k<=K} u_k / d^k` (with `u_0 = 1`), plus
//! tightness witnesses, deadline solving and curve emission.

use serde::Serialize;

/// Bounds on the first K raw moments; `u_0 = 1` is implicit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentBounds {
    pub bounds: Vec<f64>,
}

impl MomentBounds {
    pub fn new(bounds: Vec<f64>) -> Self {
        MomentBounds { bounds }
    }

    pub fn k_max(&self) -> u32 {
        self.bounds.len() as u32
    }
}

/// `min_k u_k / d^k` over k = 0..K; always in [0, 1].
pub fn bound_at(u: &MomentBounds, d: f64) -> f64 {
    assert!(d > 0.0, "deadline must be positive");
    let mut best = 1.0f64; // k = 0 term
    for (i, uk) in u.bounds.iter().enumerate() {
        let k = (i + 1) as i32;
        best = best.min(uk / d.powi(k));
    }
    best.max(0.0)
}

/// Index k attaining the minimum in [`bound_at`] (0 for the trivial term).
pub fn argmin_k(u: &MomentBounds, d: f64) -> u32 {
    let mut best = 1.0f64;
    let mut arg = 0u32;
    for (i, uk) in u.bounds.iter().enumerate() {
        let k = (i + 1) as i32;
        let v = uk / d.powi(k);
        if v < best {
            best = v;
            arg = k as u32;
        }
    }
    arg
}

/// The two-point distribution `p at d, (1-p) at 0` with `p = u_k / d^k`
/// showing the single-moment bound is attained exactly.
#[derive(Debug, Clone, Serialize)]
pub struct TwoPointWitness {
    pub at: f64,
    pub p: f64,
}

impl TwoPointWitness {
    /// `E[X^j]` of the witness distribution.
    pub fn moment(&self, j: u32) -> f64 {
        self.p * self.at.powi(j as i32)
    }

    /// `P(X >= d)`; equals `p` whenever `d <= at`.
    pub fn tail(&self, d: f64) -> f64 {
        if d <= self.at {
            self.p
        } else {
            0.0
        }
    }
}

pub fn tightness_witness(u_k: f64, k: u32, d: f64) -> TwoPointWitness {
    let p = if k == 0 {
        1.0
    } else {
        (u_k / d.powi(k as i32)).min(1.0)
    };
    TwoPointWitness { at: d, p }
}

/// Smallest deadline whose bound drops to `target`, from the per-segment
/// closed form `d = (u_k / target)^(1/k)` minimized over k.
pub fn deadline_for(u: &MomentBounds, target: f64) -> f64 {
    assert!(target > 0.0 && target < 1.0, "target must be in (0, 1)");
    let mut best = f64::INFINITY;
    for (i, uk) in u.bounds.iter().enumerate() {
        let k = (i + 1) as f64;
        let d = (uk / target).powf(1.0 / k);
        if d.is_finite() {
            best = best.min(d);
        }
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub d: f64,
    pub per_k: Vec<f64>,
    pub envelope: f64,
}

/// Log-spaced tail curve: one column per moment and the envelope.
pub fn curve(u: &MomentBounds, d_min: f64, d_max: f64, points: usize) -> Vec<CurvePoint> {
    assert!(0.0 < d_min && d_min < d_max);
    let n = points.max(2);
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            let d = d_min * (d_max / d_min).powf(t);
            let per_k: Vec<f64> = u
                .bounds
                .iter()
                .enumerate()
                .map(|(j, uk)| uk / d.powi((j + 1) as i32))
                .collect();
            CurvePoint {
                d,
                per_k,
                envelope: bound_at(u, d),
            }
        })
        .collect()
}

pub fn curve_csv(u: &MomentBounds, d_min: f64, d_max: f64, points: usize) -> String {
    let mut out = String::from("d");
    for k in 1..=u.k_max() {
        out.push_str(&format!(",curve_{k}"));
    }
    out.push_str(",envelope\n");
    for p in curve(u, d_min, d_max, points) {
        out.push_str(&format!("{:.12e}", p.d));
        for v in &p.per_k {
            out.push_str(&format!(",{:.12e}", v));
        }
        out.push_str(&format!(",{:.12e}\n", p.envelope));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::rng::SplitMix64;

    const COUPON4_BOUNDS: [f64; 5] = [68.0, 3124.0, 171932.0, 12049876.0, 1048131068.0];

    #[test]
    fn high_moments_win_at_large_deadlines() {
        let u = MomentBounds::new(COUPON4_BOUNDS.to_vec());
        let b = bound_at(&u, 100.0);
        // The fifth-moment term 1048131068 / 10^10 ~ 0.105 attains the min.
        assert!((b - 0.1048131068).abs() < 1e-9, "bound {b}");
        assert_eq!(argmin_k(&u, 100.0), 5);
        // With only the first moment the bound is 0.68.
        let u1 = MomentBounds::new(vec![68.0]);
        assert_eq!(bound_at(&u1, 100.0), 0.68);
    }

    #[test]
    fn trivial_term_caps_at_one() {
        let u = MomentBounds::new(vec![13.0, 201.0]);
        assert_eq!(bound_at(&u, 1.0), 1.0);
        assert_eq!(argmin_k(&u, 1.0), 0);
    }

    #[test]
    fn coupon_bounds_at_long_deadline() {
        let u = MomentBounds::new(vec![13.0, 201.0, 3829.0]);
        let b = bound_at(&u, 1000.0);
        assert!((b - 3.829e-6).abs() < 1e-12);
    }

    #[test]
    fn witness_attains_the_single_moment_bound() {
        let w = tightness_witness(5.0, 1, 10.0);
        assert_eq!(w.p, 0.5);
        assert_eq!(w.moment(1), 5.0);
        assert_eq!(w.tail(10.0), 0.5);

        let w2 = tightness_witness(3829.0, 2, 1000.0);
        assert!((w2.p - 3.829e-3).abs() < 1e-12);

        let w0 = tightness_witness(1.0, 0, 7.0);
        assert_eq!(w0.p, 1.0);
        assert_eq!(w0.at, 7.0);
    }

    #[test]
    fn deadline_inverts_the_bound() {
        let u = MomentBounds::new(COUPON4_BOUNDS.to_vec());
        let d = deadline_for(&u, 0.105);
        assert!((d - 100.0).abs() < 0.5, "deadline {d}");
        assert!(bound_at(&u, d) <= 0.105 + 1e-12);

        let u1 = MomentBounds::new(vec![1.0]);
        assert_eq!(deadline_for(&u1, 0.5), 2.0);
    }

    #[test]
    fn deadline_matches_bisection_on_random_inputs() {
        let mut rng = SplitMix64::new(77);
        for _ in 0..200 {
            let k = 1 + (rng.next_u64() % 4) as usize;
            let mut bounds = Vec::new();
            let mut scale = 1.0 + rng.next_f64() * 50.0;
            for _ in 0..k {
                bounds.push(scale);
                scale *= 5.0 + rng.next_f64() * 100.0;
            }
            let u = MomentBounds::new(bounds);
            let target = 0.001 + rng.next_f64() * 0.9;
            let d = deadline_for(&u, target);
            assert!(bound_at(&u, d * 1.0000001) <= target * 1.0000001);
            if d > 1.0 {
                assert!(
                    bound_at(&u, d * 0.99) > target * (1.0 - 1e-9),
                    "bound below target before the deadline"
                );
            }
        }
    }

    #[test]
    fn bound_is_nonincreasing_and_envelope_crosses_to_top_moment() {
        let u = MomentBounds::new(COUPON4_BOUNDS.to_vec());
        let pts = curve(&u, 1.0, 1e6, 128);
        for w in pts.windows(2) {
            assert!(w[1].envelope <= w[0].envelope + 1e-15);
            assert!(w[0].envelope <= 1.0);
        }
        // At the largest grid point the top moment attains the minimum.
        let last = pts.last().unwrap();
        assert_eq!(argmin_k(&u, last.d), u.k_max());
    }

    #[test]
    fn single_moment_curve_is_that_curve_capped() {
        let u = MomentBounds::new(vec![5_000_000_025.0]);
        let b = bound_at(&u, 1e11);
        assert!((b - 0.05000000025).abs() < 1e-15);
        for p in curve(&u, 1.0, 1e12, 64) {
            assert_eq!(p.envelope, p.per_k[0].min(1.0).max(0.0));
        }
    }

    #[test]
    fn csv_has_one_column_per_moment() {
        let u = MomentBounds::new(vec![13.0, 201.0]);
        let csv = curve_csv(&u, 1.0, 100.0, 16);
        let header = csv.lines().next().unwrap();
        assert_eq!(header, "d,curve_1,curve_2,envelope");
        assert_eq!(csv.lines().count(), 17);
    }
}
