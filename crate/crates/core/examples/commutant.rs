//! The same Hamiltonian admits many operator assignments. Every unitary in
//! its commutant relabels the operators without changing any relation.

use physim::commutant::{commutant_dimension, equivalent_assignment, sample_commuting_unitary, verify_relation_preservation};
use physim::hilbert::{max_abs, tensor, HermitianOperator};

fn sum(ops: &[HermitianOperator]) -> HermitianOperator {
    ops.iter().skip(1).fold(ops[0].clone(), |acc, o| acc.add(o).expect("same dimension"))
}

fn main() -> physim::Result<()> {
    for diag in [vec![1.0, 2.0], vec![1.0, 1.0], vec![1.0, 1.0, 2.0], vec![0.0, 0.0, 0.0, 3.0]] {
        let h = HermitianOperator::from_real_diagonal(&diag)?;
        println!("H = diag{diag:?}: commutant has real dimension {}", commutant_dimension(&h));
    }

    // Heisenberg exchange on two spins, written as a function of its terms
    let paulis = [HermitianOperator::pauli_x(), HermitianOperator::pauli_y(), HermitianOperator::pauli_z()];
    let terms = paulis.iter().map(|p| tensor(&[p.clone(), p.clone()])).collect::<physim::Result<Vec<_>>>()?;
    let h = sum(&terms);
    println!("exchange H: commutant dimension {} (triplet ⊕ singlet)", commutant_dimension(&h));

    let s = sample_commuting_unitary(&h, 7);
    let primed = equivalent_assignment(&terms, &s)?;
    let functional = |ops: &[HermitianOperator]| sum(ops);
    let report = verify_relation_preservation(&terms, &primed, &s, 1e-9, Some(&functional))?;
    println!("{report:#?}");
    for (i, (a, b)) in terms.iter().zip(&primed).enumerate() {
        println!("term {i}: moved by {:.3} (largest entry)", max_abs(&(b.matrix() - a.matrix())));
    }
    println!("H itself moved by {:.1e}", max_abs(&(sum(&primed).matrix() - h.matrix())));
    Ok(())
}
