//! Unitaries that commute with a Hamiltonian and the operator families they
//! generate.
//!
//! A unitary `S` with `S H S† = H` maps any family of operators `{a_j}` on
//! which `H` depends to a family `{S a_j S†}` with identical spectra, identical
//! mutual commutators and the same functional form of `H`. Nothing intrinsic to
//! the dynamics distinguishes the two families. The set of such `S` is
//! `⊕_k U(m_k)` over the eigenspaces of `H`, a manifold of real dimension
//! `Σ m_k²`.

use nalgebra::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{PhysimError, RelationClause, Result};
use crate::hilbert::{
    conjugate, max_abs, spectral_decompose, CMatrix, HermitianOperator, UnitaryOperator, C64, DEFAULT_GROUP_TOL,
};

/// Real dimension of the unitary commutant of `h`: `Σ m_k²`.
pub fn commutant_dimension(h: &HermitianOperator) -> usize {
    spectral_decompose(h, DEFAULT_GROUP_TOL).multiplicities().iter().map(|m| m * m).sum()
}

/// Haar-distributed `n × n` unitary from the QR factorization of a complex
/// Ginibre matrix, with the phases of `R`'s diagonal absorbed into `Q`.
pub fn haar_unitary(n: usize, rng: &mut impl rand::Rng) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let z = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex::new(re * scale, im * scale)
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / C64::from(d.norm()) } else { C64::from(1.0) };
        for z in q.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    q
}

/// Samples `S = Σ_k B_k W_k B_k†` with an independent Haar unitary `W_k` on
/// every eigenspace `B_k` of `h`. Deterministic in `seed`.
pub fn sample_commuting_unitary(h: &HermitianOperator, seed: u64) -> UnitaryOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dec = spectral_decompose(h, DEFAULT_GROUP_TOL);
    let n = h.dim();
    let s = dec.groups().iter().fold(CMatrix::zeros(n, n), |acc, g| {
        let w = haar_unitary(g.multiplicity, &mut rng);
        acc + &g.basis * w * g.basis.adjoint()
    });
    UnitaryOperator::new_unchecked(s)
}

/// `(S a_1 S†, S a_2 S†, …)`
pub fn equivalent_assignment(ops: &[HermitianOperator], s: &UnitaryOperator) -> Result<Vec<HermitianOperator>> {
    ops.iter().map(|a| conjugate(a, s)).collect()
}

/// A functional dependence `H = ℋ(a_1, a_2, …)`.
pub type HamiltonianFunctional<'a> = &'a dyn Fn(&[HermitianOperator]) -> HermitianOperator;

/// Largest deviation observed for each clause.
#[derive(Clone, Debug, Default)]
pub struct RelationReport {
    pub conjugation: f64,
    pub spectrum: f64,
    pub commutators: f64,
    pub functional: Option<f64>,
}

/// Checks that `primed` stands in the same relations as `ops` under `S`:
/// (i) `primed_i = S ops_i S†`, (ii) equal sorted spectra,
/// (iii) `[primed_i, primed_j] = S [ops_i, ops_j] S†`, and, when a functional
/// is supplied, (iv) `ℋ(primed) = S ℋ(ops) S†`.
pub fn verify_relation_preservation(
    ops: &[HermitianOperator],
    primed: &[HermitianOperator],
    s: &UnitaryOperator,
    tol: f64,
    functional: Option<HamiltonianFunctional<'_>>,
) -> Result<RelationReport> {
    if ops.len() != primed.len() {
        return Err(PhysimError::dim(format!("{} operators vs {} primed", ops.len(), primed.len())));
    }
    for op in ops.iter().chain(primed) {
        if op.dim() != s.dim() {
            return Err(PhysimError::dim("operator family and unitary differ in dimension"));
        }
    }
    let sm = s.matrix();
    let sa = sm.adjoint();
    let violation = |clause, deviation: f64| -> Result<f64> {
        if deviation > tol {
            Err(PhysimError::RelationViolation { clause, deviation })
        } else {
            Ok(deviation)
        }
    };

    let mut report = RelationReport::default();

    let conj = ops
        .iter()
        .zip(primed)
        .map(|(a, p)| max_abs(&(p.matrix() - sm * a.matrix() * &sa)))
        .fold(0.0, f64::max);
    report.conjugation = violation(RelationClause::Conjugation, conj)?;

    let spec = ops
        .iter()
        .zip(primed)
        .map(|(a, p)| {
            a.sorted_eigenvalues()
                .iter()
                .zip(p.sorted_eigenvalues())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    report.spectrum = violation(RelationClause::Spectrum, spec)?;

    let mut comm = 0.0f64;
    for i in 0..ops.len() {
        for j in i + 1..ops.len() {
            let lhs = primed[i].commutator(&primed[j]);
            let rhs = sm * ops[i].commutator(&ops[j]) * &sa;
            comm = comm.max(max_abs(&(lhs - rhs)));
        }
    }
    report.commutators = violation(RelationClause::Commutators, comm)?;

    if let Some(f) = functional {
        let lhs = f(primed);
        let rhs = sm * f(ops).matrix() * &sa;
        report.functional = Some(violation(RelationClause::Functional, max_abs(&(lhs.matrix() - rhs)))?);
    }
    Ok(report)
}
