//! Drive a World by hand through two pointer observations, print its ledger,
//! audit it, then tamper with the second assignment and audit again.

use std::sync::Arc;

use physim::hilbert::{c, CMatrix};
use physim::physication::{verify_ledger, AssignmentLedger, AssignmentUnitary, BornSampler, World};
use physim::scenarios::{compile, prepare_measure};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> physim::Result<()> {
    let sc = compile(&prepare_measure(60.0))?;
    let variant = &sc.variants[0];
    let mut world = World::new(sc.initial.clone(), 0.0, Arc::clone(&variant.dynamics), sc.config.mode)?;
    let mut sampler = BornSampler::new(ChaCha8Rng::seed_from_u64(3));
    for event in &variant.events {
        let out = world.step(event, &mut sampler)?;
        println!("t = {}: {} → {} (Born weight {:.4})", event.time, event.name, out.name, out.weight);
    }

    let ledger = world.into_ledger();
    for (i, e) in ledger.events().iter().enumerate() {
        println!(
            "event {i}: chose {} of {} candidates, weights {:?}, trivial {}",
            e.chosen_label(),
            e.candidates.len(),
            e.born_weights.iter().map(|w| format!("{w:.3}")).collect::<Vec<_>>(),
            e.was_trivial()
        );
    }
    println!("audit: {:?}", verify_ledger(&ledger));

    // swap in a rotation mixing the ready sector with the earlier record
    let mut events = ledger.into_events();
    let dim = events[1].assignment.dim();
    let mut frame = CMatrix::zeros(dim, 2);
    frame[(0, 0)] = c(1.0, 0.0);
    frame[(3, 1)] = c(1.0, 0.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let block = CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(-h, 0.0), c(h, 0.0), c(h, 0.0)]);
    events[1].assignment = AssignmentUnitary::from_parts(frame, block)?;
    let tampered = AssignmentLedger::from_events(events);
    let report = verify_ledger(&tampered);
    println!("tampered audit ok = {}: {:?}", report.ok(), report.violation);
    Ok(())
}
