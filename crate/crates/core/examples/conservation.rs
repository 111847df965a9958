//! A spin S exchanges with a partner E while the total z-spin Q commutes
//! with everything. Observing S moves Q's expectation under a textbook
//! collapse of S alone, but not under assignment on the joint state.

use physim::collapse_oracle::measure_collapse;
use physim::hilbert::expectation;
use physim::physication::{ForcedSampler, Mode};
use physim::scenarios::{analyze_exact, collapse_reference_drift, compile, conservation};

fn main() -> physim::Result<()> {
    let sc = compile(&conservation())?;
    let exact = analyze_exact(&sc, Mode::Free)?;
    println!("joint S⊗E, assignment: outcomes {:?}", exact.exact_chain);
    println!("  |Δ⟨Q⟩| along every branch ≤ {:.1e}", exact.conserved_drift.unwrap_or(0.0));

    // collapsing the joint state also keeps Q: the two pictures agree
    let q = sc.conserved.as_ref().expect("scenario declares Q");
    let event = &sc.variants[0].events[0];
    let psi = sc.variants[0].dynamics.propagator(0.0, event.time)?;
    let psi = sc.initial.apply_unitary(&psi)?;
    let before = expectation(&psi, q)?;
    for k in 0..2 {
        let (i, after) = measure_collapse(&psi, &event.candidates, &mut ForcedSampler::new([k]))?;
        println!("  collapse of S⊗E onto {}: ⟨Q⟩ {before:+.3} → {:+.3}", event.outcome_names[i], expectation(&after, q)?);
    }

    println!("S alone in (1, −i)/√2, textbook collapse: |Δ⟨Q⟩| = {:.3}", collapse_reference_drift()?);
    match analyze_exact(&compile(&conservation())?, Mode::Strict) {
        Ok(a) => println!("strict mode also conserves: drift {:.1e}", a.conserved_drift.unwrap_or(0.0)),
        Err(e) => println!("strict mode: {e}"),
    }
    Ok(())
}
