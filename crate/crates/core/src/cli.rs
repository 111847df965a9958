//! Command-line front end: `run`, `verify`, `list` and `explain`.
//!
//! Results are written as JSON lines: a header record, optional ledger
//! records and a summary record. Floating-point numbers are printed with 17
//! significant digits so that they read back bit-exactly.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::error::{PhysimError, Result};
use crate::physication::{AssignmentLedger, Mode};
use crate::scenarios::{
    builtin, compile, run_compiled, verify_scenario, CandidateSpec, RunOptions, RunStatistics, ScenarioConfig,
    BUILTINS, DEFAULT_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "physim", version, about = "Collapse-free simulation of quantum observations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample trials and write results as JSON lines
    Run(RunArgs),
    /// Check every invariant exactly, without sampling
    Verify(VerifyArgs),
    /// List built-in scenarios
    List,
    /// Print a scenario's factors, couplings and event schedule
    Explain(ScenarioArgs),
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// built-in name or path to a config file
    #[arg(long)]
    scenario: Option<String>,
    /// config file; takes precedence over --scenario
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    source: ScenarioArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    mode: Option<Mode>,
    /// output file; JSON lines go to stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// write one record per ledger event per trial
    #[arg(long)]
    emit_ledger: bool,
    /// tolerance for the oracle comparison
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// record the elapsed time in the summary (makes output non-reproducible)
    #[arg(long)]
    wall_time: bool,
    /// accumulate and check the product of all unitaries in every trial
    #[arg(long)]
    track_history: bool,
    /// no human-readable summary on stdout when writing to --out
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: ScenarioArgs,
    /// accepted for symmetry with `run`; verification does not sample
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl clap::ValueEnum for Mode {
    fn value_variants<'a>() -> &'a [Self] {
        &[Mode::Free, Mode::Strict]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            Mode::Free => "free",
            Mode::Strict => "strict",
        }))
    }
}

/// Exit status for an error.
pub fn exit_code(e: &PhysimError) -> i32 {
    match e {
        PhysimError::Config(_) | PhysimError::Json(_) => EXIT_CONFIG,
        PhysimError::RelationViolation { .. }
        | PhysimError::ProtectedSectorViolation { .. }
        | PhysimError::StrictModeUnsatisfiable { .. }
        | PhysimError::UnphysicatedSectorExhausted { .. } => EXIT_INVARIANT,
        _ => EXIT_NUMERICAL,
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verify(args) => cmd_verify(args),
        Command::List => cmd_list(),
        Command::Explain(args) => cmd_explain(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn resolve(source: &ScenarioArgs) -> Result<ScenarioConfig> {
    if let Some(path) = &source.config {
        return ScenarioConfig::load(path);
    }
    let name = source.scenario.as_deref().ok_or_else(|| PhysimError::Config("--scenario or --config is required".into()))?;
    if let Some(cfg) = builtin(name) {
        return Ok(cfg);
    }
    let path = PathBuf::from(name);
    if path.exists() {
        return ScenarioConfig::load(&path);
    }
    Err(PhysimError::Config(format!("unknown scenario {name:?}; try `physim list`")))
}

fn open_sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn cmd_run(args: RunArgs) -> Result<i32> {
    let mut config = resolve(&args.source)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(mode) = args.mode {
        config.mode = mode;
    }
    let sc = compile(&config)?;
    let mut opts = RunOptions::from_config(&config);
    opts.tol = args.tol;
    opts.measure_wall_time = args.wall_time;
    opts.track_history = args.track_history;

    let mut writer = ResultWriter::new(open_sink(&args.out)?);
    writer.header(&config)?;
    let stats = if args.emit_ledger {
        let mut sink = |trial: usize, ledger: &AssignmentLedger| writer.ledger(trial, ledger);
        run_compiled(&sc, &opts, Some(&mut sink))?
    } else {
        run_compiled(&sc, &opts, None)?
    };
    writer.summary(&stats)?;
    writer.finish()?;

    let violations = stats.violations(args.tol);
    if args.out.is_some() && !args.quiet {
        print_summary(&stats);
    }
    for v in &violations {
        eprintln!("invariant violated: {v}");
    }
    Ok(if violations.is_empty() { EXIT_OK } else { EXIT_INVARIANT })
}

fn print_summary(stats: &RunStatistics) {
    println!("{}: {} trials, seed {}, mode {}", stats.scenario, stats.trials, stats.seed, stats.mode);
    for (k, p) in &stats.exact_chain {
        let n = stats.empirical_counts.get(k).copied().unwrap_or(0);
        println!("  {k:<24} exact {p:.6}  observed {:.6}", n as f64 / stats.trials as f64);
    }
    for (k, v) in &stats.correlation_estimates {
        println!("  {k} = {v:.6}");
    }
    println!("  tvd {:.3e} (bound {:.3e})", stats.tvd_vs_oracle, stats.tvd_bound);
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let mut config = resolve(&args.source)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let mode = args.mode.unwrap_or(config.mode);
    let report = verify_scenario(&config, mode, args.tol)?;
    for c in &report.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:<24} {:.3e} (limit {:.1e})", c.name, c.value, c.threshold);
    }
    if args.out.is_some() {
        let mut w = ResultWriter::new(open_sink(&args.out)?);
        w.header(&config)?;
        let mut v = serde_json::to_value(&report)?;
        v.as_object_mut().expect("report is an object").insert("record".into(), json!("verify"));
        w.record(&v)?;
        w.finish()?;
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_INVARIANT })
}

fn cmd_list() -> Result<i32> {
    for (name, about) in BUILTINS {
        println!("{name:<26} {about}");
    }
    Ok(EXIT_OK)
}

fn cmd_explain(args: ScenarioArgs) -> Result<i32> {
    let config = resolve(&args)?;
    let sc = compile(&config)?;
    print!("{}", explain(&config, &sc));
    Ok(EXIT_OK)
}

fn explain(config: &ScenarioConfig, sc: &crate::scenarios::CompiledScenario) -> String {
    let mut s = String::new();
    let factor = |i: usize| config.factor_names.get(i).cloned().unwrap_or_else(|| format!("#{i}"));
    let _ = writeln!(s, "scenario {} ({:?}), mode {}", config.name, config.kind, config.mode);
    let dims: Vec<String> = config.factor_dims.iter().enumerate().map(|(i, d)| format!("{}:{d}", factor(i))).collect();
    let _ = writeln!(s, "factors {} (dimension {})", dims.join(" ⊗ "), sc.dim());
    for c in &config.couplings {
        let what = match (&c.pointer_copy, &c.interaction) {
            (Some(p), _) => format!("copy {} along {}° into {}", factor(p.system), p.axis_deg, factor(p.pointer)),
            _ => "explicit interaction".to_string(),
        };
        let _ = writeln!(s, "coupling [{}, {}): {what}", c.window[0], c.window[1]);
    }
    for (i, e) in config.events.iter().enumerate() {
        let what = match &e.candidates {
            CandidateSpec::Pointers { factors, reads } => {
                let f: Vec<String> = factors.iter().map(|&f| factor(f)).collect();
                format!("reads {} (joint readings of {})", factor(*reads), f.join(", "))
            }
            CandidateSpec::Observable { factor: f, axis_deg } => format!("spin of {} along {axis_deg}°", factor(*f)),
            CandidateSpec::MacroOperators(ops) => format!("{} macroscopic operators", ops.len()),
        };
        let ev = &sc.variants[0].events[i];
        let mut names: Vec<&str> = Vec::new();
        for n in &ev.outcome_names {
            if !names.contains(&n.as_str()) {
                names.push(n);
            }
        }
        let _ = writeln!(
            s,
            "event {i} t = {} {}: {what}; {} candidates, outcomes {}",
            e.time,
            e.name,
            ev.candidates.len(),
            names.join("/")
        );
    }
    if let Some(ch) = &config.chsh {
        let _ = writeln!(s, "chsh settings a={} a'={} b={} b'={} ({:?})", ch.a, ch.a_prime, ch.b, ch.b_prime, ch.convention);
    }
    s
}

/// Writes result records as JSON lines.
pub struct ResultWriter<W: Write> {
    out: W,
}

impl<W: Write> ResultWriter<W> {
    pub fn new(out: W) -> Self {
        ResultWriter { out }
    }

    pub fn record(&mut self, value: &Value) -> Result<()> {
        let mut line = String::new();
        write_json(value, &mut line);
        line.push('\n');
        self.out.write_all(line.as_bytes())?;
        Ok(())
    }

    pub fn header(&mut self, config: &ScenarioConfig) -> Result<()> {
        let v = json!({
            "record": "header",
            "version": env!("CARGO_PKG_VERSION"),
            "seed": config.seed,
            "mode": config.mode,
            "trials": config.trials,
            "config": serde_json::to_value(config)?,
        });
        self.record(&v)
    }

    pub fn ledger(&mut self, trial: usize, ledger: &AssignmentLedger) -> Result<()> {
        for (i, e) in ledger.events().iter().enumerate() {
            let image = e.assignment.apply(e.pre_state.amplitudes());
            let fidelity = e.post_state.amplitudes().dotc(&image).norm();
            let labels: Vec<String> = e.candidates.labels().map(|l| l.to_string()).collect();
            let v = json!({
                "record": "ledger",
                "trial": trial,
                "event_index": i,
                "event": e.event,
                "time": e.time,
                "candidates": labels,
                "weights": e.born_weights,
                "chosen": e.chosen,
                "outcome": e.outcome,
                "trivial": e.was_trivial(),
                "fidelity": fidelity,
            });
            self.record(&v)?;
        }
        Ok(())
    }

    pub fn summary(&mut self, stats: &RunStatistics) -> Result<()> {
        let mut v = serde_json::to_value(stats)?;
        let mut obj = Map::new();
        obj.insert("record".into(), json!("summary"));
        obj.extend(v.as_object_mut().expect("statistics are an object").clone());
        self.record(&Value::Object(obj))
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Writes a header, the given ledgers and a summary to `sink`.
pub fn emit_results<W: Write>(
    config: &ScenarioConfig,
    stats: &RunStatistics,
    ledgers: &[(usize, AssignmentLedger)],
    sink: W,
) -> Result<W> {
    let mut w = ResultWriter::new(sink);
    w.header(config)?;
    for (trial, ledger) in ledgers {
        w.ledger(*trial, ledger)?;
    }
    w.summary(stats)?;
    w.finish()
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

fn write_json(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().expect("f64")));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_json(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_json(item, out);
            }
            out.push('}');
        }
    }
}
