//! Successive noncommuting observations z, x, z of one qubit, each recorded
//! into its own pointer. Without pointers there is nowhere left to put the
//! second record and the run stops.

use physim::scenarios::{run_sequential_chain, sequential_chain};

fn main() -> physim::Result<()> {
    let mut config = sequential_chain(&[0.0, 90.0, 0.0], 3);
    config.trials = 20_000;
    let stats = run_sequential_chain(&config)?;
    println!("{:<8} {:>8} {:>8} {:>8}", "outcome", "exact", "oracle", "sampled");
    for (seq, p) in &stats.exact_chain {
        let n = stats.empirical_counts.get(seq).copied().unwrap_or(0);
        println!("{seq:<8} {p:>8.4} {:>8.4} {:>8.4}", stats.oracle_chain[seq], n as f64 / stats.trials as f64);
    }
    println!("tvd {:.4} (bound {:.4})", stats.tvd_vs_oracle, stats.tvd_bound);

    let compatible = sequential_chain(&[0.0, 0.0, 0.0], 3);
    let stats = run_sequential_chain(&compatible)?;
    println!("z,z,z: {:?}", stats.exact_chain);

    match run_sequential_chain(&sequential_chain(&[0.0, 90.0, 0.0], 0)) {
        Ok(_) => println!("unexpectedly succeeded"),
        Err(e) => println!("no environment: {e}"),
    }
    Ok(())
}
