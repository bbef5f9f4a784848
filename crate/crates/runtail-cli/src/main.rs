//! Command line driver: parse/compile/analyze/simulate/oracle/tail plus the
//! SDP export/check pair, all with machine-readable JSON output.
//!
//! Exit codes: 0 success, 1 analysis infeasible or certificate rejected,
//! 2 usage error, 3 internal error.

use clap::{Args, Parser, Subcommand};
use runtail::oracle;
use runtail::pcfg::{self, check_wellformed, load_program};
use runtail::sim::{self, Bernoulli, FixedChoice, Scheduler, UniformRandom};
use runtail::sos;
use runtail::synth::{self, SynthOptions, Synthesis};
use runtail::tail::{self, MomentBounds};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "runtail",
    about = "Moment-based runtime tail bounds for randomized programs",
    long_about = "Analyzes annotated randomized imperative programs: synthesizes \
per-location moment bounds for the runtime, converts them into guaranteed \
tail probability bounds, simulates programs, and provides finite-state \
ground truth.\n\nProgram grammar (whitespace-insensitive, `#` comments):\n  \
program  := [ \"$\" pred ] stmt\n  \
stmt     := stmt \";\" stmt | var \":=\" aexpr | var \":=\" dist\n            \
| var \":=\" \"ndet\" \"(\" pred \")\"\n            \
| \"if\" cond \"then\" stmt \"else\" stmt \"fi\"\n            \
| \"while\" cond [ \"{\" pred \"}\" ] \"do\" stmt \"od\"\n            \
| \"refute\" \"(\" pred \")\" [ \"{\" pred \"}\" ] | \"skip\"\n  \
cond     := \"prob\" \"(\" number \")\" | \"*\" | pred\n  \
dist     := \"Unif\" \"(\" number \",\" number \")\" | \"Norm\" \"(\" number \",\" number \")\"\n            \
| \"Disc\" \"(\" number \":\" number { \",\" number \":\" number } \")\"\n  \
pred     := boolean combinations of aexpr (<|<=|>|>=|=) aexpr with and/or/not"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize moment bounds for a program.
    Analyze(AnalyzeArgs),
    /// Monte Carlo estimation of runtime moments and tail probabilities.
    Simulate(SimulateArgs),
    /// Finite-state ground truth: value iteration, exact chain moments and
    /// memoryless scheduler sweeps.
    Oracle(OracleArgs),
    /// Tail bounds from moment bounds.
    Tail(TailArgs),
    /// Dump the compiled control flow graph as JSON.
    Dump(DumpArgs),
    /// Export the polynomial-template constraint system in SDPA sparse form.
    SdpExport(SdpExportArgs),
    /// Check an externally produced certificate against an export.
    SdpCheck(SdpCheckArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    program: PathBuf,
    /// Highest runtime moment to bound.
    #[arg(long, default_value_t = 1)]
    max_moment: u32,
    /// Template kind: `linear` or `poly` (poly only reports the export path).
    #[arg(long, default_value = "linear")]
    template: String,
    /// Polynomial template degree (with --template poly).
    #[arg(long)]
    degree: Option<u32>,
    /// Write the reduced LP in plain text.
    #[arg(long)]
    emit_lp: Option<PathBuf>,
    /// After minimizing the top moment, re-minimize lower components.
    #[arg(long)]
    lexicographic: bool,
    /// Spot-check the witness on sampled configurations.
    #[arg(long)]
    check_witness: bool,
    /// Report bounds for every K from 1 to max-moment (one solve each),
    /// mirroring per-moment result tables.
    #[arg(long)]
    per_moment: bool,
}

#[derive(Args)]
struct SimulateArgs {
    program: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    cutoff: u64,
    #[arg(long, default_value_t = 1)]
    max_moment: u32,
    /// Also estimate P(T >= deadline).
    #[arg(long)]
    deadline: Option<u64>,
    /// Scheduler: uniform | first | second | bernoulli:<p>
    #[arg(long, default_value = "uniform")]
    scheduler: String,
    /// Write one `trial,steps` line per run.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    program: PathBuf,
    #[arg(long, default_value_t = 2)]
    max_moment: u32,
    #[arg(long, default_value_t = 100_000)]
    step_bound: usize,
    #[arg(long, default_value_t = 100_000)]
    count_bound: usize,
    /// Enumerate all memoryless deterministic schedulers.
    #[arg(long)]
    sweep: bool,
    /// Resolve nondeterminism by a Bernoulli(p) coin and solve exactly.
    #[arg(long)]
    bernoulli: Option<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct TailArgs {
    /// Comma-separated moment bounds u1,u2,...
    #[arg(long, value_delimiter = ',')]
    moments: Vec<f64>,
    /// Read bounds from an analyze JSON output.
    #[arg(long)]
    from: Option<PathBuf>,
    #[arg(long)]
    deadline: Option<f64>,
    /// Find the smallest deadline with bound <= target.
    #[arg(long)]
    target: Option<f64>,
    /// Emit a log-spaced curve over [min, max].
    #[arg(long, num_args = 2)]
    curve: Option<Vec<f64>>,
    #[arg(long, default_value_t = 256)]
    points: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    program: PathBuf,
    /// Output format (only `json`).
    #[arg(long, default_value = "json")]
    format: String,
    /// Include well-formedness diagnostics.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct SdpExportArgs {
    program: PathBuf,
    #[arg(long, default_value_t = 1)]
    max_moment: u32,
    #[arg(long, default_value_t = 2)]
    degree: u32,
    /// Extra multiplier degree beyond the automatic minimum.
    #[arg(long, default_value_t = 2)]
    multiplier_degree: u32,
    /// Base path; writes <base>.dat-s and <base>.map.json.
    #[arg(long)]
    out_base: PathBuf,
}

#[derive(Args)]
struct SdpCheckArgs {
    program: PathBuf,
    /// Certificate JSON produced from the external solver's solution.
    certificate: PathBuf,
    #[arg(long, default_value_t = 1)]
    max_moment: u32,
    #[arg(long, default_value_t = 2)]
    degree: u32,
    #[arg(long, default_value_t = 2)]
    multiplier_degree: u32,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.clone();
    match run(cli) {
        Ok((value, code)) => {
            let text = serde_json::to_string_pretty(&value).expect("serializable");
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, text + "\n") {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(3);
                    }
                }
                None => println!("{text}"),
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = if e.to_string().contains("usage") { 2 } else { 3 };
            ExitCode::from(code)
        }
    }
}

fn load(path: &PathBuf) -> anyhow::Result<(runtail::syntax::Validated, pcfg::Compiled)> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("usage: cannot read {}: {e}", path.display()))?;
    load_program(&src).map_err(|e| anyhow::anyhow!("usage: {e}"))
}

fn scheduler_from(name: &str) -> anyhow::Result<Box<dyn Scheduler>> {
    if let Some(p) = name.strip_prefix("bernoulli:") {
        let p: f64 = p
            .parse()
            .map_err(|e| anyhow::anyhow!("usage: bad bernoulli probability: {e}"))?;
        return Ok(Box::new(Bernoulli::new(p)));
    }
    match name {
        "uniform" => Ok(Box::new(UniformRandom)),
        "first" => Ok(Box::new(FixedChoice::branch(0))),
        "second" => Ok(Box::new(FixedChoice::branch(1))),
        other => Err(anyhow::anyhow!("usage: unknown scheduler `{other}`")),
    }
}

fn run(cli: Cli) -> anyhow::Result<(Value, u8)> {
    match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Simulate(a) => simulate(a),
        Command::Oracle(a) => oracle_cmd(a),
        Command::Tail(a) => tail_cmd(a),
        Command::Dump(a) => dump_cmd(a),
        Command::SdpExport(a) => sdp_export(a),
        Command::SdpCheck(a) => sdp_check(a),
    }
}

fn analyze(a: AnalyzeArgs) -> anyhow::Result<(Value, u8)> {
    if a.max_moment < 1 {
        anyhow::bail!("usage: --max-moment must be at least 1");
    }
    if a.template == "poly" {
        anyhow::bail!(
            "usage: polynomial templates are export-only; use `sdp-export` and `sdp-check`"
        );
    }
    if a.template != "linear" {
        anyhow::bail!("usage: unknown template `{}`", a.template);
    }
    if a.degree.is_some() {
        anyhow::bail!("usage: --degree only applies to the polynomial template");
    }
    let (_, c) = load(&a.program)?;
    let opts = SynthOptions {
        lexicographic: a.lexicographic,
        ..SynthOptions::default()
    };
    if let Some(path) = &a.emit_lp {
        let lp = synth::build_lp(&c, a.max_moment, &opts)?;
        std::fs::write(path, synth::emit_lp_text(&lp))?;
    }

    let ks: Vec<u32> = if a.per_moment {
        (1..=a.max_moment).collect()
    } else {
        vec![a.max_moment]
    };
    let mut runs = Vec::new();
    let mut any_infeasible = false;
    let mut last_bounds: Option<Vec<f64>> = None;
    for k in ks {
        match synth::synthesize(&c, k, &opts)? {
            Synthesis::Solved { witness, stats } => {
                let verify = if a.check_witness {
                    Some(synth::verify_witness(&c, &witness, 10_000, 1e-6, 0xf1de))
                } else {
                    None
                };
                let witness_json: Value = witness
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(l, per_k)| {
                        (
                            format!("l{l}"),
                            per_k
                                .iter()
                                .enumerate()
                                .map(|(ki, coeffs)| (format!("k{}", ki + 1), json!(coeffs)))
                                .collect::<serde_json::Map<_, _>>(),
                        )
                    })
                    .map(|(k, v)| (k, Value::Object(v)))
                    .collect::<serde_json::Map<_, _>>()
                    .into();
                last_bounds = Some(witness.bounds.clone());
                runs.push(json!({
                    "max_moment": k,
                    "status": "solved",
                    "bounds": witness.bounds,
                    "witness": witness_json,
                    "lp_stats": stats,
                    "witness_check": verify,
                }));
            }
            Synthesis::Infeasible { stats, suspects } => {
                any_infeasible = true;
                runs.push(json!({
                    "max_moment": k,
                    "status": "infeasible",
                    "lp_stats": stats,
                    "suspect_locations": suspects,
                }));
            }
        }
    }
    let result = json!({
        "schema": 1,
        "program": a.program.display().to_string(),
        "template": "linear",
        "bounds": last_bounds,
        "runs": runs,
    });
    Ok((result, if any_infeasible { 1 } else { 0 }))
}

fn simulate(a: SimulateArgs) -> anyhow::Result<(Value, u8)> {
    if a.trials == 0 {
        anyhow::bail!("usage: --trials must be positive");
    }
    if a.max_moment == 0 {
        anyhow::bail!("usage: --max-moment must be at least 1");
    }
    let (_, c) = load(&a.program)?;
    let sched = scheduler_from(&a.scheduler)?;
    let steps = sim::collect_steps(&c, sched.as_ref(), a.trials, a.cutoff, a.seed)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    if let Some(path) = &a.csv {
        let mut csv = String::from("trial,steps\n");
        for (i, s) in steps.iter().enumerate() {
            match s {
                Some(v) => csv.push_str(&format!("{i},{v}\n")),
                None => csv.push_str(&format!("{i},timeout\n")),
            }
        }
        std::fs::write(path, csv)?;
    }
    let moments = sim::moments_from_steps(&steps, a.max_moment)?;
    let tail = a.deadline.map(|d| sim::tail_from_steps(&steps, d));
    Ok((
        json!({
            "schema": 1,
            "program": a.program.display().to_string(),
            "scheduler": sched.name(),
            "seed": a.seed,
            "cutoff": a.cutoff,
            "moments": moments.moments,
            "timeouts": moments.timeouts,
            "trials": moments.trials,
            "tail": tail,
        }),
        0,
    ))
}

fn oracle_cmd(a: OracleArgs) -> anyhow::Result<(Value, u8)> {
    let (_, c) = load(&a.program)?;
    let graph = oracle::enumerate_states(&c, a.step_bound, a.count_bound)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let iterate = oracle::value_iterate(&graph, a.max_moment, a.max_iters, a.tol)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let init = graph.init.0 as usize;
    let mut result = json!({
        "schema": 1,
        "program": a.program.display().to_string(),
        "states": graph.len(),
        "value_iteration": { "init_moments": iterate[init] },
    });
    if graph.nondet_states().is_empty() {
        let exact = oracle::exact_moments_markov(&graph, a.max_moment)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        result["exact_chain"] = json!({ "init_moments": exact[init] });
    }
    if let Some(p) = a.bernoulli {
        let chain = graph.bernoulli(runtail::num::parse_decimal(&p.to_string()).ok_or_else(
            || anyhow::anyhow!("usage: bernoulli probability must be a decimal"),
        )?);
        let exact = oracle::exact_moments_markov(&chain, a.max_moment)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        result["bernoulli"] = json!({ "p": p, "init_moments": exact[init] });
    }
    if a.sweep {
        let sweep = oracle::scheduler_sweep(&graph, a.max_moment, 1 << 20)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        result["sweep"] = json!({
            "max_moments": sweep.max_moments,
            "schedulers_tried": sweep.schedulers_tried.to_string(),
        });
    }
    Ok((result, 0))
}

fn tail_cmd(a: TailArgs) -> anyhow::Result<(Value, u8)> {
    let mut moments = a.moments.clone();
    if let Some(path) = &a.from {
        let text = std::fs::read_to_string(path)?;
        let v: Value = serde_json::from_str(&text)?;
        let bounds = v["bounds"]
            .as_array()
            .ok_or_else(|| anyhow::anyhow!("usage: {} has no bounds", path.display()))?;
        moments = bounds.iter().filter_map(|b| b.as_f64()).collect();
    }
    if moments.is_empty() {
        anyhow::bail!("usage: provide --moments or --from");
    }
    if moments.iter().any(|m| !m.is_finite() || *m < 0.0) {
        anyhow::bail!("usage: moment bounds must be finite and nonnegative");
    }
    let u = MomentBounds::new(moments);
    let mut result = json!({ "schema": 1, "moments": u.bounds });
    if let Some(d) = a.deadline {
        if d <= 0.0 {
            anyhow::bail!("usage: --deadline must be positive");
        }
        let b = tail::bound_at(&u, d);
        result["bound"] = json!({
            "deadline": d,
            "probability": format!("{b:.12e}").parse::<f64>().unwrap_or(b),
            "attained_by_moment": tail::argmin_k(&u, d),
        });
    }
    if let Some(t) = a.target {
        if !(0.0 < t && t < 1.0) {
            anyhow::bail!("usage: --target must be in (0, 1)");
        }
        let d = tail::deadline_for(&u, t);
        result["deadline_for"] = json!({ "target": t, "deadline": d });
    }
    if let Some(range) = &a.curve {
        let (lo, hi) = (range[0], range[1]);
        if !(0.0 < lo && lo < hi) {
            anyhow::bail!("usage: --curve needs 0 < min < max");
        }
        let csv = tail::curve_csv(&u, lo, hi, a.points);
        match &a.csv {
            Some(path) => std::fs::write(path, csv)?,
            None => result["curve_csv"] = json!(csv),
        }
    }
    Ok((result, 0))
}

fn dump_cmd(a: DumpArgs) -> anyhow::Result<(Value, u8)> {
    if a.format != "json" {
        anyhow::bail!("usage: unknown dump format `{}`", a.format);
    }
    let (v, c) = load(&a.program)?;
    let mut value = serde_json::to_value(pcfg::dump::dump(&c, &v.program))?;
    if a.check {
        let report = check_wellformed(&c);
        value["diagnostics"] = json!(report.violations);
    }
    Ok((value, 0))
}

fn sdp_export(a: SdpExportArgs) -> anyhow::Result<(Value, u8)> {
    let (_, c) = load(&a.program)?;
    let (t, programs) = sos::reduce_program(&c, a.max_moment, a.degree, a.multiplier_degree)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let obj = synth::objective(&c, &t);
    let (file, mapping) = sos::build_sdpa(&t, &programs, &obj);
    let dat = a.out_base.with_extension("dat-s");
    let map = a.out_base.with_extension("map.json");
    std::fs::write(&dat, sos::emit_sdpa(&file))?;
    std::fs::write(&map, serde_json::to_string_pretty(&mapping)? + "\n")?;
    Ok((
        json!({
            "schema": 1,
            "program": a.program.display().to_string(),
            "sdpa": dat.display().to_string(),
            "mapping": map.display().to_string(),
            "blocks": file.block_sizes,
            "variables": file.mdim,
        }),
        0,
    ))
}

fn sdp_check(a: SdpCheckArgs) -> anyhow::Result<(Value, u8)> {
    let (_, c) = load(&a.program)?;
    let (t, programs) = sos::reduce_program(&c, a.max_moment, a.degree, a.multiplier_degree)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let cert_text = std::fs::read_to_string(&a.certificate)
        .map_err(|e| anyhow::anyhow!("usage: cannot read {}: {e}", a.certificate.display()))?;
    let cert: sos::Certificate = serde_json::from_str(&cert_text)
        .map_err(|e| anyhow::anyhow!("usage: bad certificate JSON: {e}"))?;
    match sos::check_certificate(&c, &t, &programs, &cert, a.tol) {
        sos::CertOutcome::Verified { bounds, spot_check } => Ok((
            json!({
                "schema": 1,
                "status": "verified",
                "bounds": bounds,
                "spot_check": spot_check,
            }),
            0,
        )),
        sos::CertOutcome::Rejected { reason } => Ok((
            json!({ "schema": 1, "status": "rejected", "reason": reason }),
            1,
        )),
    }
}
