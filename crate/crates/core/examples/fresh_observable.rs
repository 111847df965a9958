//! Whatever state a spin is found in, there is an observable for which it is
//! an eigenstate with eigenvalue +½.

use physim::hilbert::{c, expectation, StateVector};
use physim::physication::fresh_observable;

fn main() -> physim::Result<()> {
    let states = [
        StateVector::from_real(&[1.0, 0.0])?,
        StateVector::from_real(&[0.6, 0.8])?,
        StateVector::from_slice(&[c(0.5, 0.5), c(0.0, -std::f64::consts::FRAC_1_SQRT_2)])?,
    ];
    for psi in &states {
        let o = fresh_observable(psi, &[0.5, -0.5])?;
        let residual = (o.matrix() * psi.amplitudes() - psi.amplitudes() * c(0.5, 0.0)).norm();
        let amps: Vec<String> = psi.amplitudes().iter().map(|a| format!("{:+.3}{:+.3}i", a.re, a.im)).collect();
        println!("ψ = ({})", amps.join(", "));
        println!("  spectrum {:?}, ⟨O⟩ = {:+.3}, ‖Oψ − ½ψ‖ = {residual:.1e}", o.sorted_eigenvalues(), expectation(psi, &o)?);
    }
    match fresh_observable(&states[0], &[0.5, 0.5]) {
        Ok(_) => println!("degenerate spectrum accepted?"),
        Err(e) => println!("degenerate spectrum: {e}"),
    }
    Ok(())
}
