mod common;

use common::*;
use physim::commutant::{
    commutant_dimension, equivalent_assignment, sample_commuting_unitary, verify_relation_preservation,
};
use physim::error::{PhysimError, RelationClause};
use physim::hilbert::{c, conjugate, max_abs, CMatrix, HermitianOperator, UnitaryOperator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn diag(v: &[f64]) -> HermitianOperator {
    HermitianOperator::from_real_diagonal(v).unwrap()
}

#[test]
fn oracle_counts_known_cases() {
    assert_eq!(commutant_oracle_dimension(diag(&[1.0, 2.0]).matrix()), 2);
    assert_eq!(commutant_oracle_dimension(diag(&[1.0, 1.0]).matrix()), 4);
    assert_eq!(commutant_oracle_dimension(diag(&[1.0, 1.0, 2.0]).matrix()), 5);
    assert_eq!(commutant_oracle_dimension(HermitianOperator::pauli_x().matrix()), 2);
}

#[test]
fn diagonal_examples_match_oracle() {
    for v in [vec![1.0, 2.0], vec![1.0, 1.0], vec![1.0, 1.0, 2.0], vec![3.0], vec![0.0, 0.0, 0.0, 0.0]] {
        let h = diag(&v);
        assert_eq!(commutant_dimension(&h), commutant_oracle_dimension(h.matrix()), "{v:?}");
    }
}

#[test]
fn planted_multiplicities_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for d in 2..=9 {
        for _ in 0..6 {
            let mults = random_multiplicities(d, &mut rng);
            let h = hermitian_with_multiplicities(&mults, &mut rng);
            let expected: usize = mults.iter().map(|m| m * m).sum();
            assert_eq!(commutant_oracle_dimension(h.matrix()), expected, "{mults:?}");
            assert_eq!(commutant_dimension(&h), expected, "{mults:?}");
            assert!(d <= expected && expected <= d * d);
        }
    }
}

#[test]
fn extremes_of_the_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let generic = random_hermitian(6, &mut rng);
    assert_eq!(commutant_dimension(&generic), 6);
    assert_eq!(commutant_dimension(&HermitianOperator::identity(6).scaled(2.5)), 36);
}

#[test]
fn two_level_sample_is_diagonal_phases() {
    let h = diag(&[1.0, 2.0]);
    for seed in 0..10 {
        let s = sample_commuting_unitary(&h, seed);
        let m = s.matrix();
        assert!(m[(0, 1)].norm() < 1e-12 && m[(1, 0)].norm() < 1e-12);
        assert!((m[(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!((m[(1, 1)].norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn degenerate_block_sample_commutes() {
    let h = diag(&[1.0, 1.0, 2.0]);
    let s = sample_commuting_unitary(&h, 7);
    let m = s.matrix();
    assert!((m * h.matrix() - h.matrix() * m).norm() < 1e-9);
    assert!(m[(0, 2)].norm() < 1e-12 && m[(2, 0)].norm() < 1e-12);
    assert!(m[(1, 2)].norm() < 1e-12 && m[(2, 1)].norm() < 1e-12);
    // genuinely mixes the degenerate pair
    assert!(m[(0, 1)].norm() > 1e-6);
}

#[test]
fn sampling_is_deterministic_in_seed() {
    let h = diag(&[0.0, 0.0, 1.0, 1.0]);
    assert_eq!(sample_commuting_unitary(&h, 9).matrix(), sample_commuting_unitary(&h, 9).matrix());
    assert_ne!(sample_commuting_unitary(&h, 9).matrix(), sample_commuting_unitary(&h, 10).matrix());
}

#[test]
fn hadamard_swaps_x_and_z() {
    let ops = vec![HermitianOperator::pauli_z(), HermitianOperator::pauli_x()];
    let primed = equivalent_assignment(&ops, &UnitaryOperator::hadamard()).unwrap();
    assert!(max_abs_diff(primed[0].matrix(), HermitianOperator::pauli_x().matrix()) < 1e-12);
    assert!(max_abs_diff(primed[1].matrix(), HermitianOperator::pauli_z().matrix()) < 1e-12);
}

#[test]
fn phases_leave_diagonal_operator_unchanged() {
    let a = diag(&[1.0, 2.0]);
    let s = UnitaryOperator::diagonal_phases(&[0.3, -1.9]).unwrap();
    let primed = equivalent_assignment(std::slice::from_ref(&a), &s).unwrap();
    assert!(max_abs_diff(primed[0].matrix(), a.matrix()) < 1e-12);
}

#[test]
fn pauli_triple_passes_all_clauses() {
    let ops = vec![HermitianOperator::pauli_x(), HermitianOperator::pauli_y(), HermitianOperator::pauli_z()];
    let s = UnitaryOperator::hadamard();
    let primed = equivalent_assignment(&ops, &s).unwrap();
    let f = |o: &[HermitianOperator]| o[0].add(&o[2]).unwrap();
    let r = verify_relation_preservation(&ops, &primed, &s, 1e-9, Some(&f)).unwrap();
    assert!(r.conjugation < 1e-12 && r.spectrum < 1e-12 && r.commutators < 1e-12);
    assert!(r.functional.unwrap() < 1e-12);
}

#[test]
fn tampered_entry_fails_conjugation_clause() {
    let ops = vec![HermitianOperator::pauli_x(), HermitianOperator::pauli_z()];
    let s = UnitaryOperator::hadamard();
    let mut primed = equivalent_assignment(&ops, &s).unwrap();
    let mut m: CMatrix = primed[1].matrix().clone();
    m[(0, 0)] += c(1e-3, 0.0);
    primed[1] = HermitianOperator::new(m).unwrap();
    match verify_relation_preservation(&ops, &primed, &s, 1e-9, None) {
        Err(PhysimError::RelationViolation { clause: RelationClause::Conjugation, deviation }) => {
            assert!(deviation > 9e-4)
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn hamiltonian_is_fixed_by_its_commutant() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = hermitian_with_multiplicities(&[2, 1, 3], &mut rng);
    let s = sample_commuting_unitary(&h, 21);
    let id = |o: &[HermitianOperator]| o[0].clone();
    let primed = equivalent_assignment(std::slice::from_ref(&h), &s).unwrap();
    let r = verify_relation_preservation(std::slice::from_ref(&h), &primed, &s, 1e-9, Some(&id)).unwrap();
    assert!(r.functional.unwrap() < 1e-9);
    assert!(max_abs(&(conjugate(&h, &s).unwrap().matrix() - h.matrix())) < 1e-9);
}
