use runtail::pcfg::load_program;
use runtail::synth::{build_lp, SynthOptions};
use runtail::lp;

fn main() {
    let src = std::fs::read_to_string(std::env::args().nth(1).unwrap()).unwrap();
    let k: u32 = std::env::args().nth(2).unwrap().parse().unwrap();
    let (_, c) = load_program(&src).unwrap();
    let p = build_lp(&c, k, &SynthOptions::default()).unwrap();
    eprintln!("rows {} cols {}", p.rows.len(), p.num_vars);
    for tol in [1e-9, 1e-8, 1e-10, 1e-7] {
        match lp::solve(&p, tol) {
            Ok(s) => eprintln!("tol {tol}: {:?} obj {} iters {}", s.status, s.objective, s.iterations),
            Err(e) => eprintln!("tol {tol}: err {e}"),
        }
    }
}
