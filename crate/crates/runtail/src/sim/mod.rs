//! Operational semantics with pluggable schedulers and Monte Carlo
//! estimation of runtime moments and tail probabilities.

pub mod rng;
pub mod run;
pub mod sched;

pub use run::{
    collect_steps, collect_steps_seq, estimate_moments, estimate_tail, moments_from_steps,
    sample_runtime, step, tail_from_steps, MomentsEstimate, RunSample, SimError, TailEstimate,
};
pub use sched::{Bernoulli, FixedChoice, Scheduler, UniformRandom, ValuePolicy};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcfg::{load_program, LocKind};
    use crate::sim::rng::SplitMix64;

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
    fn fixed_scheduler_takes_the_left_branch() {
        let (_, c) = load_program(FIG_EXAMPLE).unwrap();
        let ndet = c
            .pcfg
            .loc_ids()
            .find(|l| matches!(c.pcfg.loc(*l).kind, LocKind::Nondet { .. }))
            .unwrap();
        let succs = c.pcfg.loc(ndet).successors();
        let mut vals = vec![2.0, 2.0, 0.5];
        let mut rng = SplitMix64::new(1);
        let next = step(
            &c.pcfg,
            ndet,
            &mut vals,
            &FixedChoice::branch(0),
            &mut rng,
        )
        .unwrap();
        assert_eq!(next, succs[0]);
        assert_eq!(vals, vec![2.0, 2.0, 0.5], "branching does not change values");
    }

    #[test]
    fn terminal_self_loop_is_absorbing() {
        let (_, c) = load_program("skip").unwrap();
        let mut vals: Vec<f64> = vec![];
        let mut rng = SplitMix64::new(1);
        let next = step(&c.pcfg, c.pcfg.exit_loc, &mut vals, &UniformRandom, &mut rng).unwrap();
        assert_eq!(next, c.pcfg.exit_loc);
    }

    #[test]
    fn uniform_sample_mean_matches_closed_form() {
        // z := Unif(-2, 1) has mean -1/2; check the sampler against it.
        let (_, c) = load_program("z := Unif(-2, 1)").unwrap();
        let sample_loc = c.pcfg.init_loc;
        let n = 1_000_000u64;
        let mut sum = 0.0;
        let mut rng = SplitMix64::new(42);
        for _ in 0..n {
            let mut vals = vec![0.0];
            let _ = step(&c.pcfg, sample_loc, &mut vals, &UniformRandom, &mut rng).unwrap();
            sum += vals[0];
        }
        let mean = sum / n as f64;
        // stddev of Unif(-2,1) is 3/sqrt(12); three sigma of the mean.
        let sigma = 3.0 / (12.0f64).sqrt() / (n as f64).sqrt();
        assert!((mean + 0.5).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn skip_program_takes_one_step() {
        let (_, c) = load_program("skip").unwrap();
        let mut rng = SplitMix64::new(3);
        let run = sample_runtime(&c, &UniformRandom, &mut rng, 100).unwrap();
        assert_eq!(run.steps, Some(1));
        let est = estimate_moments(&c, &UniformRandom, 500, 3, 100, 9).unwrap();
        for m in &est.moments {
            assert_eq!(m.mean, 1.0);
            assert_eq!(m.stderr, 0.0);
        }
    }

    #[test]
    fn long_runtime_program_times_out() {
        // Variant of the real-valued walk with a huge initial value: expected
        // runtime around 5e9, so a 1000-step cutoff always times out.
        let src = "
x := 200000000;
while true do
  if prob(0.7) then
    z := Unif(0, 1);
    x := x - z
  else
    z := Unif(0, 1);
    x := x + z
  fi;
  refute (x < 0)
od
";
        let (_, c) = load_program(src).unwrap();
        let mut rng = SplitMix64::new(5);
        let run = sample_runtime(&c, &UniformRandom, &mut rng, 1000).unwrap();
        assert_eq!(run.steps, None);
    }

    #[test]
    fn deadline_zero_tail_is_one() {
        let (_, c) = load_program("skip").unwrap();
        let t = estimate_tail(&c, &UniformRandom, 100, 0, 50, 11).unwrap();
        assert_eq!(t.p_hat, 1.0);
    }

    #[test]
    fn same_seed_same_results() {
        let (_, c) = load_program(FIG_EXAMPLE).unwrap();
        let a = estimate_moments(&c, &Bernoulli::new(0.5), 2000, 2, 10_000, 77).unwrap();
        let b = estimate_moments(&c, &Bernoulli::new(0.5), 2000, 2, 10_000, 77).unwrap();
        assert_eq!(a.moments[0].mean, b.moments[0].mean);
        assert_eq!(a.moments[1].stderr, b.moments[1].stderr);
        // Parallel and sequential collection agree exactly.
        let pa = collect_steps(&c, &Bernoulli::new(0.5), 2000, 10_000, 77).unwrap();
        let sa = collect_steps_seq(&c, &Bernoulli::new(0.5), 2000, 10_000, 77).unwrap();
        assert_eq!(pa, sa);
    }

    #[test]
    fn sample_mean_squared_is_below_second_moment() {
        let (_, c) = load_program(FIG_EXAMPLE).unwrap();
        let est = estimate_moments(&c, &UniformRandom, 5000, 2, 100_000, 13).unwrap();
        let m1 = est.moments[0].mean;
        let m2 = est.moments[1].mean;
        assert!(m1 * m1 <= m2 + 1e-9, "Cauchy-Schwarz violated: {m1}^2 > {m2}");
    }
}
