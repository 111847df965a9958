//! End-to-end acceptance suite. Runs every criterion, prints one line each
//! and exits nonzero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::*;
use physim::cli::parse_and_dispatch;
use physim::commutant::{commutant_dimension, equivalent_assignment, sample_commuting_unitary, verify_relation_preservation};
use physim::hilbert::{c, CMatrix, HermitianOperator};
use physim::physication::{fresh_observable, verify_ledger, AssignmentLedger, AssignmentUnitary, BornSampler, Mode, World};
use physim::scenarios::{
    analyze_exact, builtin, canonical_chain, collapse_reference_drift, compile, run_compiled, swapped_exact_chain,
    RunOptions, RunStatistics, ScenarioConfig, BUILTINS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn sampled(config: &ScenarioConfig, trials: usize, track_history: bool) -> Result<RunStatistics, String> {
    let sc = compile(config).map_err(|e| e.to_string())?;
    let mut opts = RunOptions::from_config(config);
    opts.trials = trials;
    opts.threads = workers();
    opts.track_history = track_history;
    run_compiled(&sc, &opts, None).map_err(|e| format!("{}: {e}", config.name))
}

/// Built-ins expected to run to completion.
fn runnable() -> Vec<ScenarioConfig> {
    BUILTINS.iter().filter(|(n, _)| *n != "sequential_chain_no_env").map(|(n, _)| builtin(n).unwrap()).collect()
}

fn commutant_law() -> Outcome {
    let failures: Vec<String> = (2..=16usize)
        .into_par_iter()
        .flat_map_iter(|d| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + d as u64);
            (0..50)
                .filter_map(|_| {
                    let mults = random_multiplicities(d, &mut rng);
                    let h = hermitian_with_multiplicities(&mults, &mut rng);
                    let law: usize = mults.iter().map(|m| m * m).sum();
                    let oracle = commutant_oracle_dimension(h.matrix());
                    let got = commutant_dimension(&h);
                    (got != oracle || oracle != law || law < d || law > d * d)
                        .then(|| format!("d={d} {mults:?}: got {got}, oracle {oracle}, Σm² {law}"))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok("750 Hamiltonians, d = 2..16, all equal to the linear-system oracle".into())
}

fn relation_preservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let d = rng.random_range(2..=16);
        let mults = random_multiplicities(d, &mut rng);
        let h = hermitian_with_multiplicities(&mults, &mut rng);
        let ops = vec![h.clone(), random_hermitian(d, &mut rng), random_hermitian(d, &mut rng)];
        let s = sample_commuting_unitary(&h, i);
        let primed = equivalent_assignment(&ops, &s).map_err(|e| e.to_string())?;
        // H as a function of the family: H = a_0, plus an unrelated polynomial
        let functional = |o: &[HermitianOperator]| {
            let m = o[0].matrix() + (o[1].matrix() * o[2].matrix() + o[2].matrix() * o[1].matrix()) * c(0.5, 0.0)
                + o[1].matrix() * o[1].matrix();
            HermitianOperator::new(m).unwrap()
        };
        let r = verify_relation_preservation(&ops, &primed, &s, 1e-9, Some(&functional))
            .map_err(|e| format!("triple {i} (d={d}): {e}"))?;
        ensure(max_abs_diff(primed[0].matrix(), h.matrix()) < 1e-9, || format!("triple {i}: S moved H"))?;
        worst = worst.max(r.conjugation).max(r.spectrum).max(r.commutators).max(r.functional.unwrap_or(0.0));
    }
    Ok(format!("100 triples up to d = 16, worst clause deviation {worst:.1e}"))
}

fn fresh_observable_definiteness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let psi = random_state(2, &mut rng);
        let o = fresh_observable(&psi, &[0.5, -0.5]).map_err(|e| e.to_string())?;
        let res = (o.matrix() * psi.amplitudes() - psi.amplitudes() * c(0.5, 0.0)).norm();
        let ev = o.sorted_eigenvalues();
        let spec = (ev[0] + 0.5).abs().max((ev[1] - 0.5).abs());
        worst = worst.max(res).max(spec);
    }
    ensure(worst <= 1e-10, || format!("deviation {worst:.3e}"))?;
    Ok(format!("1000 qubit states, worst deviation {worst:.1e}"))
}

fn oracle_equivalence() -> Outcome {
    let names = [
        "fresh_spin",
        "prepare_measure_0",
        "prepare_measure_45",
        "prepare_measure_60",
        "prepare_measure_90",
        "epr",
        "epr_same_axis",
        "epr_chsh",
        "sequential_chain",
        "conservation",
        "conservation_textbook",
    ];
    let mut worst: f64 = 0.0;
    let mut sequences = 0;
    for name in names {
        let sc = compile(&builtin(name).unwrap()).map_err(|e| e.to_string())?;
        let a = analyze_exact(&sc, Mode::Free).map_err(|e| format!("{name}: {e}"))?;
        let keys: std::collections::BTreeSet<&String> = a.exact_chain.keys().chain(a.oracle_chain.keys()).collect();
        for k in keys {
            let gap = (a.exact_chain.get(k).unwrap_or(&0.0) - a.oracle_chain.get(k).unwrap_or(&0.0)).abs();
            ensure(gap <= 1e-9, || format!("{name} {k}: gap {gap:.3e}"))?;
            worst = worst.max(gap);
            sequences += 1;
        }
    }
    Ok(format!("{} scenarios, {sequences} sequences, worst gap {worst:.1e}", names.len()))
}

fn chsh_value() -> Outcome {
    let cfg = builtin("epr_chsh").unwrap();
    let target = 2.0 * std::f64::consts::SQRT_2;
    let sc = compile(&cfg).map_err(|e| e.to_string())?;
    let exact = analyze_exact(&sc, Mode::Free).map_err(|e| e.to_string())?.correlations["S"];
    ensure((exact.abs() - target).abs() <= 1e-9, || format!("exact S = {exact}"))?;
    let stats = sampled(&cfg, 100_000, false)?;
    let mc = stats.correlation_estimates["S_mc"];
    ensure((mc.abs() - target).abs() <= 0.05, || format!("Monte Carlo S = {mc}"))?;
    Ok(format!("exact S = {exact:.10}, 1e5 trials S = {mc:.4}"))
}

fn anticorrelation() -> Outcome {
    let cfg = builtin("epr_same_axis").unwrap();
    let sc = compile(&cfg).map_err(|e| e.to_string())?;
    let e = analyze_exact(&sc, Mode::Free).map_err(|e| e.to_string())?.correlations["E"];
    ensure((e + 1.0).abs() <= 1e-12, || format!("E = {e}"))?;
    let stats = sampled(&cfg, 100_000, false)?;
    let same: u64 = ["A+,B+", "A-,B-"].iter().map(|k| stats.empirical_counts.get(*k).copied().unwrap_or(0)).sum();
    ensure(same == 0, || format!("{same} same-outcome trials"))?;
    Ok(format!("E = {e}, 0 same-outcome sequences in 1e5 trials"))
}

fn unitarity() -> Outcome {
    let mut norm: f64 = 0.0;
    let mut hist: f64 = 0.0;
    let mut trials = 0;
    for cfg in runnable() {
        let n = cfg.trials.min(20_000);
        let stats = sampled(&cfg, n, true)?;
        norm = norm.max(stats.checks.max_norm_deviation);
        hist = hist.max(stats.checks.max_history_deviation.unwrap_or(f64::INFINITY));
        trials += n;
    }
    ensure(norm <= 1e-10, || format!("norm deviation {norm:.3e}"))?;
    ensure(hist <= 1e-8, || format!("product unitarity defect {hist:.3e}"))?;
    Ok(format!("{trials} trials, norm drift {norm:.1e}, product defect {hist:.1e}"))
}

fn conservation_contrast() -> Outcome {
    let collapse = collapse_reference_drift().map_err(|e| e.to_string())?;
    ensure(collapse >= 1e-3, || format!("collapse changed ⟨Q⟩ by only {collapse:.3e}"))?;
    let cfg = builtin("conservation").unwrap();
    let sc = compile(&cfg).map_err(|e| e.to_string())?;
    let a = analyze_exact(&sc, Mode::Free).map_err(|e| e.to_string())?;
    ensure(a.assignments_conserve == Some(true), || "assignments do not commute with Q".into())?;
    let drift = a.conserved_drift.unwrap_or(f64::INFINITY);
    ensure(drift <= 1e-9, || format!("physication drift {drift:.3e}"))?;
    let mc = sampled(&cfg, cfg.trials, false)?.conserved_drift.unwrap_or(f64::INFINITY);
    ensure(mc <= 1e-9, || format!("sampled drift {mc:.3e}"))?;
    Ok(format!("collapse |Δ⟨Q⟩| = {collapse:.3}, physication |Δ⟨Q⟩| ≤ {:.1e}", drift.max(mc)))
}

fn ledger_immutability() -> Outcome {
    let mut trials = 0;
    for cfg in runnable() {
        let n = cfg.trials.min(20_000);
        let stats = sampled(&cfg, n, false)?;
        ensure(stats.checks.ledger_failures == 0, || format!("{}: {} ledgers fail", cfg.name, stats.checks.ledger_failures))?;
        trials += n;
    }

    // hand-edit the last assignment of a z, x, z chain to rotate the first record
    let sc = compile(&builtin("sequential_chain").unwrap()).map_err(|e| e.to_string())?;
    let v = &sc.variants[0];
    let mut world = World::new(sc.initial.clone(), 0.0, v.dynamics.clone(), Mode::Free).map_err(|e| e.to_string())?;
    let mut sampler = BornSampler::new(ChaCha8Rng::seed_from_u64(5));
    for ev in &v.events {
        world.step(ev, &mut sampler).map_err(|e| e.to_string())?;
    }
    let ledger = world.into_ledger();
    ensure(verify_ledger(&ledger).ok(), || "untouched ledger fails".into())?;
    let mut events = ledger.into_events();
    let first = events[0].candidates.projector(events[0].chosen).matrix().clone();
    let d = first.nrows();
    let inside = (0..d).find(|&i| first[(i, i)].re > 0.5).unwrap();
    let outside = (0..d).find(|&i| first[(i, i)].re < 0.5).unwrap();
    let mut frame = CMatrix::zeros(d, 2);
    frame[(inside, 0)] = c(1.0, 0.0);
    frame[(outside, 1)] = c(1.0, 0.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let block = CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(-h, 0.0), c(h, 0.0), c(h, 0.0)]);
    events[2].assignment = AssignmentUnitary::from_parts(frame, block).map_err(|e| e.to_string())?;
    let report = verify_ledger(&AssignmentLedger::from_events(events));
    ensure(!report.ok(), || "tampered ledger passed".into())?;
    let why = report.violation.map(|v| format!("event {}: {}", v.event, v.reason)).unwrap_or_default();
    Ok(format!("{trials} trial ledgers verified; tampered ledger rejected ({why})"))
}

fn order_independence() -> Outcome {
    let mut worst: f64 = 0.0;
    for name in ["epr", "epr_same_axis", "epr_chsh"] {
        let sc = compile(&builtin(name).unwrap()).map_err(|e| e.to_string())?;
        let a = analyze_exact(&sc, Mode::Free).map_err(|e| e.to_string())?;
        let fwd = canonical_chain(&a.exact_chain);
        let bwd = canonical_chain(&swapped_exact_chain(&sc, Mode::Free).map_err(|e| e.to_string())?);
        ensure(fwd.keys().eq(bwd.keys()), || format!("{name}: sequence sets differ"))?;
        for (k, p) in &fwd {
            worst = worst.max((p - bwd[k]).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("gap {worst:.3e}"))?;
    Ok(format!("Alice-first and Bob-first chains agree to {worst:.1e}"))
}

fn born_concentration() -> Outcome {
    let mut cfg = builtin("fresh_spin").unwrap();
    cfg.seed = 42;
    let stats = sampled(&cfg, 100_000, false)?;
    let up = stats.empirical_counts.get("up").copied().unwrap_or(0) as f64 / 1e5;
    ensure((up - 0.36).abs() <= 0.0063, || format!("up fraction {up}"))?;
    Ok(format!("up fraction {up:.5} over 1e5 trials"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut bytes = 0;
    for (scenario, trials) in [("epr_chsh", "20000"), ("sequential_chain", "2000"), ("fresh_spin", "5000")] {
        let mut files = Vec::new();
        for run in 0..2 {
            let path = dir.path().join(format!("{scenario}_{run}.jsonl"));
            let code = parse_and_dispatch([
                "physim", "run", "--scenario", scenario, "--seed", "42", "--trials", trials, "--mode", "free", "--emit-ledger",
                "--quiet", "--out", path.to_str().unwrap(),
            ]);
            ensure(code == 0, || format!("{scenario}: exit {code}"))?;
            files.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        ensure(files[0] == files[1], || format!("{scenario}: outputs differ"))?;
        bytes += files[0].len();
    }
    Ok(format!("3 scenarios run twice, {bytes} bytes identical"))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("commutant dimension law", Duration::from_secs(10), commutant_law),
        ("relation preservation", Duration::from_secs(10), relation_preservation),
        ("fresh-observable definiteness", Duration::from_secs(1), fresh_observable_definiteness),
        ("oracle equivalence", Duration::from_secs(30), oracle_equivalence),
        ("CHSH value", Duration::from_secs(60), chsh_value),
        ("anticorrelation", Duration::MAX, anticorrelation),
        ("no-collapse unitarity", Duration::MAX, unitarity),
        ("conservation contrast", Duration::MAX, conservation_contrast),
        ("ledger immutability", Duration::MAX, ledger_immutability),
        ("order independence", Duration::MAX, order_independence),
        ("Born-frequency concentration", Duration::MAX, born_concentration),
        ("determinism", Duration::MAX, determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let result = match result {
            Ok(detail) if took > *limit => Err(format!("{detail}; took {took:.2?}, limit {limit:?}")),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({took:.2?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} ({took:.2?})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
