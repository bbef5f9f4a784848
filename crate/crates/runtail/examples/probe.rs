//! Scratch driver for benchmark calibration: prints the linear-template
//! bounds for a program file or inline source passed on the command line.

use runtail::pcfg::load_program;
use runtail::synth::{synthesize, SynthOptions, Synthesis};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let src = if args.len() > 1 && std::path::Path::new(&args[1]).exists() {
        std::fs::read_to_string(&args[1]).unwrap()
    } else if args.len() > 1 {
        args[1].clone()
    } else {
        eprintln!("usage: probe <file-or-source> [K]");
        std::process::exit(2);
    };
    let k_max: u32 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let (_, c) = match load_program(&src) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("load error: {e}");
            std::process::exit(2);
        }
    };
    eprintln!(
        "locations: {}  vars: {:?}  init: l{} {:?}",
        c.pcfg.num_locs(),
        c.pcfg.var_names,
        c.pcfg.init_loc.0,
        c.pcfg.init_vals
    );
    for k in 1..=k_max {
        match synthesize(&c, k, &SynthOptions::default()) {
            Ok(Synthesis::Solved { witness, stats }) => {
                println!(
                    "K={k}: bounds {:?} (rows {}, pivots {})",
                    witness.bounds, stats.lp_rows, stats.pivots
                );
            }
            Ok(Synthesis::Infeasible { suspects, .. }) => {
                println!("K={k}: infeasible (suspects: {suspects:?})");
            }
            Err(e) => println!("K={k}: error {e}"),
        }
    }
}
