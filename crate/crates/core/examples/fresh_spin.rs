//! A qubit in (0.6, 0.8) observed along z, 100 000 times.
//!
//! ```bash
//! cargo run --release --example fresh_spin
//! ```

use physim::scenarios::{fresh_spin, run_fresh_spin};

fn main() -> physim::Result<()> {
    let mut config = fresh_spin([0.6, 0.8]);
    config.trials = 100_000;
    let stats = run_fresh_spin(&config)?;

    for (outcome, p) in &stats.exact_chain {
        let n = stats.empirical_counts.get(outcome).copied().unwrap_or(0);
        println!("{outcome:>5}: Born {p:.4}, observed {:.4} ({n} of {})", n as f64 / stats.trials as f64, stats.trials);
    }
    println!("largest norm drift over all trials: {:.1e}", stats.checks.max_norm_deviation);
    println!("ledgers failing the audit: {}", stats.checks.ledger_failures);
    Ok(())
}
