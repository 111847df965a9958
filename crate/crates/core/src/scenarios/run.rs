use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::collapse_oracle::{chain_distribution, measure_collapse, DEFAULT_ENUMERATION_CAP};
use crate::error::{PhysimError, Result};
use crate::hilbert::{expectation, schmidt_rank, unitarity_deviation, HermitianOperator, StateVector};
use crate::physication::{
    enumerate_branches, verify_ledger, AssignmentLedger, BornSampler, ForcedSampler, Mode, World,
};

use super::builtin::conservation_textbook;
use super::config::{compile, CompiledScenario, ScenarioConfig, ScenarioKind, Variant};

/// Default tolerance for exact-versus-oracle comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;
const CHUNK: usize = 2048;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub trials: usize,
    pub seed: u64,
    pub mode: Mode,
    /// worker threads; results do not depend on it
    pub threads: usize,
    /// accumulate the product of all unitaries in every trial
    pub track_history: bool,
    pub measure_wall_time: bool,
    pub tol: f64,
}

impl RunOptions {
    pub fn from_config(config: &ScenarioConfig) -> Self {
        RunOptions {
            trials: config.trials,
            seed: config.seed,
            mode: config.mode,
            threads: threads_from_env(),
            track_history: false,
            measure_wall_time: false,
            tol: DEFAULT_TOL,
        }
    }
}

/// `PHYSIM_THREADS`, defaulting to 1.
pub fn threads_from_env() -> usize {
    std::env::var("PHYSIM_THREADS").ok().and_then(|s| s.parse().ok()).filter(|&n| n > 0).unwrap_or(1)
}

/// Invariant figures gathered over exact branches and sampled trials.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunChecks {
    /// max |physication − oracle| over outcome sequences
    pub oracle_deviation: f64,
    pub ledger_failures: usize,
    pub max_norm_deviation: f64,
    /// max unitarity defect of the accumulated history
    pub max_history_deviation: Option<f64>,
    /// max change of the exact chain when two events swap order
    pub order_swap_deviation: Option<f64>,
    /// largest Schmidt rank of a final state across the first factor
    pub max_schmidt_rank: Option<usize>,
    /// change of ⟨Q⟩ under textbook collapse of the reference description
    pub collapse_conserved_drift: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunStatistics {
    pub scenario: String,
    pub trials: usize,
    pub seed: u64,
    pub mode: Mode,
    pub exact_chain: BTreeMap<String, f64>,
    pub oracle_chain: BTreeMap<String, f64>,
    pub empirical_counts: BTreeMap<String, u64>,
    pub tvd_vs_oracle: f64,
    /// `5·√(k/N)`
    pub tvd_bound: f64,
    pub conserved_drift: Option<f64>,
    pub correlation_estimates: BTreeMap<String, f64>,
    pub checks: RunChecks,
    pub wall_time: Option<f64>,
}

impl RunStatistics {
    /// Names of violated invariants, empty when all hold.
    pub fn violations(&self, tol: f64) -> Vec<String> {
        let c = &self.checks;
        let mut v = Vec::new();
        if c.oracle_deviation > tol {
            v.push(format!("exact chain differs from the oracle by {:.3e}", c.oracle_deviation));
        }
        if c.ledger_failures > 0 {
            v.push(format!("{} ledgers failed verification", c.ledger_failures));
        }
        if c.max_norm_deviation > 1e-10 {
            v.push(format!("norm drifted by {:.3e}", c.max_norm_deviation));
        }
        if let Some(h) = c.max_history_deviation.filter(|&h| h > 1e-8) {
            v.push(format!("history unitarity defect {h:.3e}"));
        }
        if let Some(d) = c.order_swap_deviation.filter(|&d| d > tol) {
            v.push(format!("event order changes the exact chain by {d:.3e}"));
        }
        if let Some(r) = c.max_schmidt_rank.filter(|&r| r > 1) {
            v.push(format!("final state has Schmidt rank {r}"));
        }
        v
    }
}

/// Outcome-sequence key: names joined by commas, prefixed by the setting.
pub fn sequence_key(label: Option<&str>, names: &[String]) -> String {
    let seq = names.join(",");
    match label {
        Some(l) => format!("{l}|{seq}"),
        None => seq,
    }
}

/// Exact results computed without sampling.
#[derive(Clone, Debug, Default)]
pub struct ExactAnalysis {
    pub exact_chain: BTreeMap<String, f64>,
    pub oracle_chain: BTreeMap<String, f64>,
    pub correlations: BTreeMap<String, f64>,
    pub checks: RunChecks,
    pub conserved_drift: Option<f64>,
    /// whether every applied assignment commutes with the conserved quantity
    pub assignments_conserve: Option<bool>,
}

fn world_for(sc: &CompiledScenario, variant: &Variant, mode: Mode) -> Result<World> {
    World::new(sc.initial.clone(), sc.config.start_time, variant.dynamics.clone(), mode)
}

/// Maps a violation of an earlier macrostate to the exhaustion of the
/// unphysicated sector at `event`.
fn exhausted(e: PhysimError, event: usize, time: f64) -> PhysimError {
    match e {
        PhysimError::ProtectedSectorViolation { .. } => PhysimError::UnphysicatedSectorExhausted { event, time },
        other => other,
    }
}

fn conserved_drift_of(ledger: &AssignmentLedger, initial: &StateVector, q: &HermitianOperator) -> Result<f64> {
    let q0 = expectation(initial, q)?;
    let mut drift: f64 = 0.0;
    for e in ledger.events() {
        drift = drift.max((expectation(&e.pre_state, q)? - q0).abs());
        drift = drift.max((expectation(&e.post_state, q)? - q0).abs());
    }
    Ok(drift)
}

fn check_pointer_moved(sc: &CompiledScenario, ledger: &AssignmentLedger) -> Result<()> {
    for (i, e) in ledger.events().iter().enumerate() {
        let ready: f64 = sc.meta[i].ready.iter().map(|&k| e.born_weights[k]).sum();
        if ready > 1e-9 {
            return Err(PhysimError::Config(format!(
                "coupling before event {} does not entangle its pointer with the observable (ready weight {ready:.3e})",
                e.event
            )));
        }
    }
    Ok(())
}

fn product_value(sc: &CompiledScenario, choices: &[usize]) -> Option<f64> {
    let mut value = 1.0;
    let mut any = false;
    for (i, &c) in choices.iter().enumerate() {
        if let Some(v) = &sc.meta[i].values {
            value *= v[c];
            any = true;
        }
    }
    (any && value.is_finite()).then_some(value)
}

fn correlation_name(variant: &Variant) -> String {
    variant.label.clone().unwrap_or_else(|| "E".into())
}

/// Physication exact chain, oracle chain and every deterministic check.
pub fn analyze_exact(sc: &CompiledScenario, mode: Mode) -> Result<ExactAnalysis> {
    let nv = sc.variants.len() as f64;
    let mut out = ExactAnalysis::default();
    let mut history_dev: f64 = 0.0;
    let mut schmidt: Option<usize> = None;
    let mut drift: Option<f64> = None;
    let mut s_value = 0.0;

    for variant in &sc.variants {
        let world = world_for(sc, variant, mode)?.track_history();
        let branches = enumerate_branches(&world, &variant.events, DEFAULT_ENUMERATION_CAP).map_err(|e| match e {
            PhysimError::ProtectedSectorViolation { .. } => {
                // find the first event that cannot be assigned
                first_exhausted(sc, variant, mode).unwrap_or(e)
            }
            other => other,
        })?;
        let mut corr = 0.0;
        let mut has_corr = false;
        for b in &branches {
            check_pointer_moved(sc, b.world.ledger())?;
            let key = sequence_key(variant.label.as_deref(), &b.names);
            *out.exact_chain.entry(key).or_insert(0.0) += b.probability / nv;
            if !verify_ledger(b.world.ledger()).ok() {
                out.checks.ledger_failures += 1;
            }
            out.checks.max_norm_deviation = out.checks.max_norm_deviation.max(b.world.max_norm_deviation());
            if let Some(h) = b.world.history() {
                history_dev = history_dev.max(unitarity_deviation(h));
            }
            if sc.config.kind == ScenarioKind::PrepareMeasure {
                let r = schmidt_rank(b.world.state(), sc.dims()[0], 1e-8)?;
                schmidt = Some(schmidt.unwrap_or(0).max(r));
            }
            if let Some(q) = &sc.conserved {
                let d = conserved_drift_of(b.world.ledger(), &sc.initial, q)?;
                drift = Some(drift.unwrap_or(0.0).max(d));
                let commutes = b.world.ledger().events().iter().all(|e| e.assignment.commutator_norm(q.matrix()) <= 1e-9);
                out.assignments_conserve = Some(out.assignments_conserve.unwrap_or(true) && commutes);
            }
            if let Some(v) = product_value(sc, &b.choices) {
                corr += b.probability * v;
                has_corr = true;
            }
        }
        if has_corr && variant.events.len() == 2 {
            out.correlations.insert(correlation_name(variant), corr);
            s_value += variant.sign * corr;
        }

        let oracle = chain_distribution(
            &sc.initial,
            sc.config.start_time,
            &variant.dynamics,
            &variant.events,
            DEFAULT_ENUMERATION_CAP,
        )?;
        for entry in oracle {
            let key = sequence_key(variant.label.as_deref(), &entry.names);
            *out.oracle_chain.entry(key).or_insert(0.0) += entry.probability / nv;
        }
    }
    if sc.config.chsh.is_some() {
        out.correlations.insert("S".into(), s_value);
    }

    out.checks.oracle_deviation = max_gap(&out.exact_chain, &out.oracle_chain);
    out.checks.max_history_deviation = Some(history_dev);
    out.checks.max_schmidt_rank = schmidt;
    out.conserved_drift = drift;

    if matches!(sc.config.kind, ScenarioKind::Epr | ScenarioKind::EprChsh) && sc.config.events.len() == 2 {
        out.checks.order_swap_deviation = Some(order_swap_deviation(sc, mode, &out.exact_chain)?);
    }
    if sc.config.kind == ScenarioKind::Conservation {
        out.checks.collapse_conserved_drift = Some(collapse_reference_drift()?);
    }
    Ok(out)
}

fn first_exhausted(sc: &CompiledScenario, variant: &Variant, mode: Mode) -> Option<PhysimError> {
    // replay branch by branch until the violating event is found
    let world = world_for(sc, variant, mode).ok()?;
    let mut frontier = vec![world];
    for (i, event) in variant.events.iter().enumerate() {
        let mut next = Vec::new();
        for mut w in frontier {
            w.advance_to(event.time).ok()?;
            for (k, _) in w.support(event).ok()? {
                let mut child = w.clone();
                match child.observe(event, &mut ForcedSampler::new([k])) {
                    Ok(_) => next.push(child),
                    Err(e) => return Some(exhausted(e, i, event.time)),
                }
            }
        }
        frontier = next;
    }
    None
}

fn max_gap(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let mut gap: f64 = 0.0;
    for (k, p) in a {
        gap = gap.max((p - b.get(k).copied().unwrap_or(0.0)).abs());
    }
    for (k, q) in b {
        if !a.contains_key(k) {
            gap = gap.max(q.abs());
        }
    }
    gap
}

/// Sorts the names within each sequence, so a chain recorded Bob-first is
/// keyed like the Alice-first one.
pub fn canonical_chain(chain: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for (key, p) in chain {
        let (prefix, seq) = match key.split_once('|') {
            Some((l, s)) => (Some(l), s),
            None => (None, key.as_str()),
        };
        let mut names: Vec<String> = seq.split(',').map(str::to_string).collect();
        names.sort();
        *out.entry(sequence_key(prefix, &names)).or_insert(0.0) += p;
    }
    out
}

/// The exact chain with the two events in the opposite order.
pub fn swapped_exact_chain(sc: &CompiledScenario, mode: Mode) -> Result<BTreeMap<String, f64>> {
    let swapped = compile(&sc.config.with_events_swapped(0, 1)?)?;
    let nv = swapped.variants.len() as f64;
    let mut chain = BTreeMap::new();
    for variant in &swapped.variants {
        let world = world_for(&swapped, variant, mode)?;
        for b in enumerate_branches(&world, &variant.events, DEFAULT_ENUMERATION_CAP)? {
            *chain.entry(sequence_key(variant.label.as_deref(), &b.names)).or_insert(0.0) += b.probability / nv;
        }
    }
    Ok(chain)
}

fn order_swap_deviation(sc: &CompiledScenario, mode: Mode, exact: &BTreeMap<String, f64>) -> Result<f64> {
    let swapped = swapped_exact_chain(sc, mode)?;
    Ok(max_gap(&canonical_chain(exact), &canonical_chain(&swapped)))
}

/// Largest change of ⟨Q⟩ across a textbook collapse of the single-spin
/// reference description, over every possible outcome.
pub fn collapse_reference_drift() -> Result<f64> {
    let sc = compile(&conservation_textbook())?;
    let q = sc.conserved.clone().expect("reference has a conserved quantity");
    let variant = &sc.variants[0];
    let event = &variant.events[0];
    let u = variant.dynamics.propagator(sc.config.start_time, event.time)?;
    let before = sc.initial.apply_unitary(&u)?;
    let q_before = expectation(&before, &q)?;
    let mut drift: f64 = 0.0;
    for k in 0..event.candidates.len() {
        let (_, after) = match measure_collapse(&before, &event.candidates, &mut ForcedSampler::new([k])) {
            Ok(x) => x,
            Err(PhysimError::ZeroWeightOutcome { .. }) => continue,
            Err(e) => return Err(e),
        };
        drift = drift.max((expectation(&after, &q)? - q_before).abs());
    }
    Ok(drift)
}

struct TrialOutcome {
    variant: usize,
    names: Vec<String>,
    choices: Vec<usize>,
    ledger_ok: bool,
    norm_deviation: f64,
    history_deviation: Option<f64>,
    schmidt: Option<usize>,
    drift: Option<f64>,
    ledger: Option<AssignmentLedger>,
}

fn run_trial(sc: &CompiledScenario, opts: &RunOptions, trial: usize, keep_ledger: bool) -> Result<TrialOutcome> {
    let vi = trial % sc.variants.len();
    let variant = &sc.variants[vi];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(trial as u64);
    let mut sampler = BornSampler::new(rng);
    let mut world = world_for(sc, variant, opts.mode)?;
    if opts.track_history {
        world = world.track_history();
    }
    let mut names = Vec::with_capacity(variant.events.len());
    let mut choices = Vec::with_capacity(variant.events.len());
    for (i, event) in variant.events.iter().enumerate() {
        let out = world.step(event, &mut sampler).map_err(|e| exhausted(e, i, event.time))?;
        names.push(out.name);
        choices.push(out.index);
    }
    let ledger_ok = verify_ledger(world.ledger()).ok();
    let schmidt = match sc.config.kind {
        ScenarioKind::PrepareMeasure => Some(schmidt_rank(world.state(), sc.dims()[0], 1e-8)?),
        _ => None,
    };
    let drift = match &sc.conserved {
        Some(q) => Some(conserved_drift_of(world.ledger(), &sc.initial, q)?),
        None => None,
    };
    Ok(TrialOutcome {
        variant: vi,
        names,
        choices,
        ledger_ok,
        norm_deviation: world.max_norm_deviation(),
        history_deviation: world.history().map(unitarity_deviation),
        schmidt,
        drift,
        ledger: keep_ledger.then(|| world.into_ledger()),
    })
}

/// Receives each trial's ledger in trial order.
pub type LedgerSink<'a> = dyn FnMut(usize, &AssignmentLedger) -> Result<()> + 'a;

/// Runs every trial and hands each trial's ledger to `sink` in trial order.
pub fn run_compiled(
    sc: &CompiledScenario,
    opts: &RunOptions,
    mut sink: Option<&mut LedgerSink<'_>>,
) -> Result<RunStatistics> {
    if opts.trials == 0 {
        return Err(PhysimError::Config("trials must be positive".into()));
    }
    let start = Instant::now();
    let exact = analyze_exact(sc, opts.mode)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.max(1))
        .build()
        .map_err(|e| PhysimError::Config(format!("thread pool: {e}")))?;

    let nv = sc.variants.len();
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut checks = exact.checks.clone();
    let mut drift = exact.conserved_drift;
    let mut corr_sum = vec![0.0; nv];
    let mut corr_n = vec![0usize; nv];
    let mut history: Option<f64> = checks.max_history_deviation;
    let keep = sink.is_some();

    let mut first = 0;
    while first < opts.trials {
        let last = (first + CHUNK).min(opts.trials);
        let results: Vec<Result<TrialOutcome>> =
            pool.install(|| (first..last).into_par_iter().map(|t| run_trial(sc, opts, t, keep)).collect());
        for (offset, r) in results.into_iter().enumerate() {
            let t = r?;
            let variant = &sc.variants[t.variant];
            *counts.entry(sequence_key(variant.label.as_deref(), &t.names)).or_insert(0) += 1;
            if !t.ledger_ok {
                checks.ledger_failures += 1;
            }
            checks.max_norm_deviation = checks.max_norm_deviation.max(t.norm_deviation);
            if let Some(h) = t.history_deviation {
                history = Some(history.unwrap_or(0.0).max(h));
            }
            if let Some(s) = t.schmidt {
                checks.max_schmidt_rank = Some(checks.max_schmidt_rank.unwrap_or(0).max(s));
            }
            if let Some(d) = t.drift {
                drift = Some(drift.unwrap_or(0.0).max(d));
            }
            if let Some(v) = product_value(sc, &t.choices) {
                corr_sum[t.variant] += v;
                corr_n[t.variant] += 1;
            }
            if let (Some(sink), Some(ledger)) = (sink.as_mut(), t.ledger.as_ref()) {
                sink(first + offset, ledger)?;
            }
        }
        first = last;
    }
    checks.max_history_deviation = history;

    let n = opts.trials as f64;
    let mut tvd = 0.0;
    for (k, p) in &exact.oracle_chain {
        tvd += (counts.get(k).copied().unwrap_or(0) as f64 / n - p).abs();
    }
    for (k, &c) in &counts {
        if !exact.oracle_chain.contains_key(k) {
            tvd += c as f64 / n;
        }
    }
    tvd *= 0.5;
    let k = exact.oracle_chain.len().max(1) as f64;

    let mut correlations = exact.correlations.clone();
    let mut s_mc = 0.0;
    for (i, variant) in sc.variants.iter().enumerate() {
        if corr_n[i] > 0 && variant.events.len() == 2 {
            let e = corr_sum[i] / corr_n[i] as f64;
            correlations.insert(format!("{}_mc", correlation_name(variant)), e);
            s_mc += variant.sign * e;
        }
    }
    if sc.config.chsh.is_some() {
        correlations.insert("S_mc".into(), s_mc);
    }

    Ok(RunStatistics {
        scenario: sc.config.name.clone(),
        trials: opts.trials,
        seed: opts.seed,
        mode: opts.mode,
        exact_chain: exact.exact_chain,
        oracle_chain: exact.oracle_chain,
        empirical_counts: counts,
        tvd_vs_oracle: tvd,
        tvd_bound: 5.0 * (k / n).sqrt(),
        conserved_drift: drift,
        correlation_estimates: correlations,
        checks,
        wall_time: opts.measure_wall_time.then(|| start.elapsed().as_secs_f64()),
    })
}

fn options(config: &ScenarioConfig) -> RunOptions {
    RunOptions::from_config(config)
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(PhysimError::Config(msg.into()))
    }
}

/// Single qubit, single event.
pub fn run_fresh_spin(config: &ScenarioConfig) -> Result<RunStatistics> {
    require(config.total_dim() == 2, "fresh spin needs a single qubit")?;
    require(config.events.len() == 1, "fresh spin has exactly one event")?;
    run_compiled(&compile(config)?, &options(config), None)
}

/// Preparation then measurement through pointer couplings. Final states
/// must be products across the first factor.
pub fn run_prepare_measure(config: &ScenarioConfig) -> Result<RunStatistics> {
    require(config.factor_dims.len() >= 2, "prepare/measure needs a system and an environment")?;
    require(config.kind == ScenarioKind::PrepareMeasure, "config kind must be prepare_measure")?;
    run_compiled(&compile(config)?, &options(config), None)
}

/// Singlet pair observed by Alice and Bob, with or without the CHSH preset.
pub fn run_epr_chsh(config: &ScenarioConfig) -> Result<RunStatistics> {
    require(config.events.len() == 2, "EPR runs have one event for Alice and one for Bob")?;
    require(matches!(config.kind, ScenarioKind::Epr | ScenarioKind::EprChsh), "config kind must be epr or epr_chsh")?;
    run_compiled(&compile(config)?, &options(config), None)
}

/// At least three successive observations of one system.
pub fn run_sequential_chain(config: &ScenarioConfig) -> Result<RunStatistics> {
    require(config.events.len() >= 3, "a sequential chain needs at least three events")?;
    run_compiled(&compile(config)?, &options(config), None)
}

/// Dispatches on the configuration's kind.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunStatistics> {
    match config.kind {
        ScenarioKind::FreshSpin => run_fresh_spin(config),
        ScenarioKind::PrepareMeasure => run_prepare_measure(config),
        ScenarioKind::Epr | ScenarioKind::EprChsh => run_epr_chsh(config),
        ScenarioKind::SequentialChain => run_sequential_chain(config),
        ScenarioKind::Conservation | ScenarioKind::Generic => run_compiled(&compile(config)?, &options(config), None),
    }
}

/// Outcome of one deterministic check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub scenario: String,
    pub mode: Mode,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// The invariant suite without sampling.
pub fn verify_scenario(config: &ScenarioConfig, mode: Mode, tol: f64) -> Result<VerifyReport> {
    let sc = compile(config)?;
    let exact = analyze_exact(&sc, mode)?;
    let c = &exact.checks;
    let mut checks = Vec::new();
    let mut push = |name: &str, value: f64, threshold: f64| {
        checks.push(CheckResult { name: name.into(), passed: value <= threshold, value, threshold });
    };
    let total: f64 = exact.exact_chain.values().sum();
    push("exact_chain_normalized", (total - 1.0).abs(), tol);
    push("oracle_equivalence", c.oracle_deviation, tol);
    push("ledger_failures", c.ledger_failures as f64, 0.0);
    push("norm_deviation", c.max_norm_deviation, 1e-10);
    push("history_unitarity", c.max_history_deviation.unwrap_or(0.0), 1e-8);
    if let Some(d) = c.order_swap_deviation {
        push("order_independence", d, tol);
    }
    if let Some(r) = c.max_schmidt_rank {
        push("product_final_state", r as f64, 1.0);
    }
    // conservation is only promised when Q commutes with H and with every assignment
    if let (Some(d), Some(q), Some(true)) = (exact.conserved_drift, &sc.conserved, exact.assignments_conserve) {
        let h = sc.variants[0].dynamics.hamiltonian();
        if crate::hilbert::commutator_norm(q.matrix(), h.matrix()) < 1e-12 {
            push("conservation", d, 1e-9);
        }
    }
    if let Some(d) = c.collapse_conserved_drift {
        // collapse must visibly break the conservation law
        checks.push(CheckResult { name: "collapse_contrast".into(), passed: d >= 1e-3, value: d, threshold: 1e-3 });
    }
    Ok(VerifyReport { scenario: config.name.clone(), mode, checks })
}
