use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cluster_qss::campaign::{run_campaign, Scenario};
use cluster_qss::channel::ChannelConfig;
use cluster_qss::circuit::{check_branches, experiment_circuit, experiment_secret, Circuit};
use cluster_qss::protocol::engine::{replay_transcript, run_seeded, ReconstructionReport};
use cluster_qss::protocol::privacy::scan_transcript_privacy;
use cluster_qss::protocol::session::ConfigFile;
use cluster_qss::protocol::SessionPlan;
use cluster_qss::selftest::{run_selftest, SelftestOptions};

const FIDELITY_FLOOR: f64 = 1.0 - 1e-9;

#[derive(Parser)]
#[command(name = "cqss", version, about = "Threshold quantum multi-secret sharing over cluster states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the (3, 4) example over GF(7) and print every intermediate value.
    Demo {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a session described by a JSON config; writes transcript.jsonl and report.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Monte Carlo attack campaign.
    Attack {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 4)]
        d1: usize,
        #[arg(long, default_value_t = 4)]
        d2: usize,
        #[arg(long, default_value_t = 0)]
        threshold: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the JSONL mirror here instead of after the table.
        #[arg(long)]
        jsonl: Option<PathBuf>,
    },
    /// Emit and sample one of the two five-qubit experiment circuits.
    Circuit {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        which: u8,
        #[arg(long)]
        shots: usize,
        /// Write the QASM text here instead of to stdout.
        #[arg(long)]
        emit: Option<PathBuf>,
        /// Simulate this QASM file instead of the built-in circuit.
        #[arg(long)]
        from: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the invariant suite.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        mutate_cz: bool,
    },
}

/// Single-line failure: `error[kind]: message`.
struct Failure {
    kind: &'static str,
    msg: String,
    code: u8,
}

impl Failure {
    fn new(kind: &'static str, msg: impl ToString) -> Self {
        Failure { kind, msg: msg.to_string().replace('\n', " "), code: 2 }
    }

    fn check(msg: impl ToString) -> Self {
        Failure { code: 1, ..Failure::new("check", msg) }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::new("io", format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Demo { seed } => demo(seed),
        Command::Run { config, out } => run(&config, &out),
        Command::Attack { scenario, trials, d1, d2, threshold, seed, jsonl } => {
            attack(&scenario, trials, ChannelConfig { d1, d2, abort_threshold: threshold }, seed, jsonl.as_deref())
        }
        Command::Circuit { which, shots, emit, from, seed } => circuit(which, shots, emit.as_deref(), from.as_deref(), seed),
        Command::Selftest { seed, mutate_cz } => selftest(seed, mutate_cz),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error[{}]: {}", f.kind, f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn describe_session(plan: &SessionPlan, report: &ReconstructionReport) -> String {
    let cfg = &plan.config;
    let mut out = String::new();
    if let Some(poly) = &report.polynomial {
        writeln!(out, "f(x) = {poly} over GF({}), dealer number s_D = {}", cfg.modulus.q(), poly.dealer_secret()).unwrap();
        let shares: Vec<String> =
            cfg.names.iter().zip(&cfg.x).map(|(n, &x)| format!("{n} x={x} f={}", poly.eval(x))).collect();
        writeln!(out, "shares: {}", shares.join(", ")).unwrap();
    }
    let users: Vec<_> = report.contexts.iter().skip(1).collect();
    if let Some(rec) = users.last() {
        writeln!(out, "participating: {} (reconstructor {})", users.iter().map(|c| c.id.0.as_str()).collect::<Vec<_>>().join(", "), rec.id).unwrap();
    }
    let weights: Vec<String> =
        users.iter().filter_map(|c| c.weight.as_ref()).map(|w| format!("{} {}", w.participant, w.c)).collect();
    writeln!(out, "weights c: {}", weights.join(", ")).unwrap();
    for (j, &w) in cfg.w.iter().enumerate() {
        writeln!(out, "secret {} (w = {w})", j + 1).unwrap();
        let mut gammas = vec![format!("Dealer {}", report.contexts[0].gammas[j])];
        gammas.extend(users.iter().filter_map(|c| c.gammas.get(j).map(|g| format!("{} {g}", c.id))));
        writeln!(out, "  gamma: {}", gammas.join(", ")).unwrap();
        let deltas: Vec<String> =
            users.iter().filter_map(|c| c.deltas.get(j).map(|d| format!("{} {d}", c.id))).collect();
        if !deltas.is_empty() {
            writeln!(out, "  delta: {}", deltas.join(", ")).unwrap();
        }
        if let Some(r) = report.angle_turns.get(j) {
            writeln!(out, "  angle sum = 2π·{r}").unwrap();
        }
        for step in report.trace.iter().filter(|s| s.secret == j) {
            let a = step.state.amplitudes();
            writeln!(
                out,
                "  {:<8} {:<22} ({:+.6}{:+.6}i, {:+.6}{:+.6}i)",
                step.holder.0, step.label, a[0].re, a[0].im, a[1].re, a[1].im
            )
            .unwrap();
        }
        if let Some(f) = report.fidelities.get(j) {
            writeln!(out, "  fidelity {f:.12}").unwrap();
        }
    }
    if let Some(reason) = &report.abort {
        writeln!(out, "aborted: {reason}").unwrap();
    }
    out
}

fn check_fidelities(report: &ReconstructionReport) -> Result<(), Failure> {
    if let Some(reason) = &report.abort {
        return Err(Failure::check(format!("session aborted: {reason}")));
    }
    match report.min_fidelity() {
        Some(f) if f >= FIDELITY_FLOOR => Ok(()),
        Some(f) => Err(Failure::check(format!("fidelity {f:.12} below 1 - 1e-9"))),
        None => Err(Failure::check("no secret recovered")),
    }
}

fn demo(seed: u64) -> Result<String, Failure> {
    let plan = SessionPlan::demo(seed);
    let report = run_seeded(&plan).map_err(|e| Failure::new("session", e))?;
    let mut out = format!("(3, 4) threshold example, seed {seed}\n");
    out.push_str(&describe_session(&plan, &report));
    let replay = replay_transcript(&plan, &report.transcript).map_err(|e| Failure::new("session", e))?;
    let scan = scan_transcript_privacy(&report.transcript, &report, &plan.config.w);
    writeln!(out, "replay: {}", if replay.matched() { "identical" } else { "diverged" }).unwrap();
    writeln!(out, "privacy scan: {} messages, {} findings", scan.messages, scan.violations.len()).unwrap();
    writeln!(out, "transcript:").unwrap();
    out.push_str(&report.transcript.to_jsonl());
    check_fidelities(&report)?;
    if !replay.matched() {
        return Err(Failure::check("replay diverged"));
    }
    Ok(out)
}

fn run(config: &Path, out_dir: &Path) -> Result<String, Failure> {
    let text = fs::read_to_string(config).map_err(io_err(config))?;
    let plan = ConfigFile::parse(&text)
        .map_err(|e| Failure::new("config", e))?
        .into_plan()
        .map_err(|e| Failure::new("config", e))?;
    let report = run_seeded(&plan).map_err(|e| Failure::new("session", e))?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let transcript_path = out_dir.join("transcript.jsonl");
    fs::write(&transcript_path, report.transcript.to_jsonl()).map_err(io_err(&transcript_path))?;
    let report_path = out_dir.join("report.json");
    fs::write(&report_path, format!("{:#}\n", report.to_json())).map_err(io_err(&report_path))?;
    let mut out = describe_session(&plan, &report);
    writeln!(out, "wrote {} and {}", transcript_path.display(), report_path.display()).unwrap();
    check_fidelities(&report)?;
    Ok(out)
}

fn attack(scenario: &str, trials: usize, channel: ChannelConfig, seed: u64, jsonl: Option<&Path>) -> Result<String, Failure> {
    let scenario: Scenario = scenario.parse().map_err(|e| Failure::new("usage", e))?;
    if trials == 0 {
        return Err(Failure::new("usage", "--trials must be at least 1"));
    }
    let report = run_campaign(&[scenario], trials, seed, channel);
    let mut out = report.to_table();
    match jsonl {
        Some(path) => fs::write(path, report.to_jsonl()).map_err(io_err(path))?,
        None => out.push_str(&report.to_jsonl()),
    }
    Ok(out)
}

fn circuit(which: u8, shots: usize, emit: Option<&Path>, from: Option<&Path>, seed: u64) -> Result<String, Failure> {
    if shots == 0 {
        return Err(Failure::new("usage", "--shots must be at least 1"));
    }
    let circuit = match from {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            Circuit::parse_qasm(&text).map_err(|e| Failure::new("qasm", e))?
        }
        None => experiment_circuit(which as usize),
    };
    let mut out = String::new();
    match emit {
        Some(path) => fs::write(path, circuit.to_qasm()).map_err(io_err(path))?,
        None => out.push_str(&circuit.to_qasm()),
    }
    let check = check_branches(&circuit, &experiment_secret(which as usize)).map_err(|e| Failure::new("circuit", e))?;
    writeln!(out, "# exact P(1) = {:.12}, {} branches, min branch fidelity {:.12}", check.exact_one, check.branches, check.min_fidelity)
        .unwrap();
    let hist = circuit.sample(shots, seed).map_err(|e| Failure::new("circuit", e))?;
    writeln!(out, "# final qubit, {shots} shots").unwrap();
    out.push_str(&hist.final_bit().to_text());
    Ok(out)
}

fn selftest(seed: u64, mutate_cz: bool) -> Result<String, Failure> {
    let report = run_selftest(SelftestOptions { seed, mutate_cz });
    let table = report.to_table();
    match report.first_failure() {
        None => Ok(table),
        Some(f) => {
            print!("{table}");
            Err(Failure::check(format!("{} failed: {}", f.name, f.detail)))
        }
    }
}
