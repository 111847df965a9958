//! Experiment definitions and the trial runner.
//!
//! A [`ScenarioConfig`] declares the factor structure, the initial state, the
//! Hamiltonian, coupling windows and the observation schedule. Measurements
//! are modelled as controlled shifts that copy a spin component into a
//! pointer register; the pointer readings are the macroscopic properties.

mod builtin;
mod config;
mod run;

pub use builtin::{
    builtin, conservation, conservation_textbook, epr, epr_chsh, fresh_spin, prepare_measure, sequential_chain,
    BUILTINS,
};
pub use config::{
    compile, pointer_copy_interaction, shift_generator, AngleConvention, CandidateSpec, ChshSpec, CompiledScenario,
    CouplingSpec, EventMeta, EventSpec, MatrixSpec, PointerCopySpec, ScenarioConfig, ScenarioKind, Variant,
};
pub use run::{
    analyze_exact, canonical_chain, collapse_reference_drift, run_compiled, run_epr_chsh, run_fresh_spin,
    run_prepare_measure, run_scenario, run_sequential_chain, sequence_key, swapped_exact_chain, threads_from_env,
    verify_scenario, CheckResult, ExactAnalysis, LedgerSink, RunChecks, RunOptions, RunStatistics, VerifyReport, DEFAULT_TOL,
};
