//! Prepare spin-up along z with one pointer, then measure at an angle with a
//! second. After each trial the spin is unentangled from both pointers.

use physim::scenarios::{analyze_exact, compile, prepare_measure};
use physim::physication::Mode;

fn main() -> physim::Result<()> {
    println!("{:>6}  {:>8}  {:>8}  {:>12}  schmidt rank", "theta", "P(+)", "P(-)", "vs oracle");
    for theta in [0.0, 30.0, 45.0, 60.0, 90.0, 135.0, 180.0] {
        let sc = compile(&prepare_measure(theta))?;
        let exact = analyze_exact(&sc, Mode::Free)?;
        let p = |k: &str| exact.exact_chain.get(k).copied().unwrap_or(0.0);
        println!(
            "{theta:>6}  {:>8.5}  {:>8.5}  {:>12.1e}  {}",
            p("up,+"),
            p("up,-"),
            exact.checks.oracle_deviation,
            exact.checks.max_schmidt_rank.unwrap_or(0)
        );
    }
    Ok(())
}
