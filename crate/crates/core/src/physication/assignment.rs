use crate::error::{PhysimError, Result};
use crate::hilbert::{c, max_abs, unitarity_deviation, CMatrix, CVector, HermitianOperator, StateVector, UnitaryOperator, ONE};

/// Largest `‖P ψ‖` tolerated for a protected projector `P`.
pub const PROTECTED_TOL: f64 = 1e-9;
/// Largest `‖VH − HV‖` accepted in strict mode.
pub const STRICT_TOL: f64 = 1e-9;

const PARALLEL_TOL: f64 = 1e-14;

/// A unitary of the form `V = I + F (B − I) F†`, where the columns of `F`
/// are orthonormal and `B` is a unitary on their span. At most two columns
/// are ever needed, so applying `V` costs `O(d)` instead of `O(d²)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentUnitary {
    dim: usize,
    frame: CMatrix,
    block_minus_identity: CMatrix,
}

impl AssignmentUnitary {
    pub fn identity(dim: usize) -> Self {
        AssignmentUnitary { dim, frame: CMatrix::zeros(dim, 0), block_minus_identity: CMatrix::zeros(0, 0) }
    }

    /// `I + F (B − I) F†` from an orthonormal frame `F` and a unitary block `B`.
    pub fn from_parts(frame: CMatrix, block: CMatrix) -> Result<Self> {
        let k = frame.ncols();
        if block.nrows() != k || block.ncols() != k {
            return Err(PhysimError::dim(format!("{k}-column frame with a {}x{} block", block.nrows(), block.ncols())));
        }
        let gram = frame.adjoint() * &frame;
        if max_abs(&(gram - CMatrix::identity(k, k))) > 1e-10 {
            return Err(PhysimError::Numerical("frame is not orthonormal".into()));
        }
        let deviation = unitarity_deviation(&block);
        if deviation > 1e-10 {
            return Err(PhysimError::NotUnitary { deviation });
        }
        let dim = frame.nrows();
        Ok(AssignmentUnitary { dim, frame, block_minus_identity: block - CMatrix::identity(k, k) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_identity(&self) -> bool {
        self.frame.ncols() == 0
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        if self.is_identity() {
            return v.clone();
        }
        let coords = self.frame.adjoint() * v;
        v + &self.frame * (&self.block_minus_identity * coords)
    }

    /// `V − I` as a dense matrix.
    fn deviation(&self) -> CMatrix {
        &self.frame * &self.block_minus_identity * self.frame.adjoint()
    }

    pub fn to_matrix(&self) -> CMatrix {
        let mut m = self.deviation();
        for i in 0..self.dim {
            m[(i, i)] += ONE;
        }
        m
    }

    pub fn to_unitary(&self) -> UnitaryOperator {
        UnitaryOperator::new_unchecked(self.to_matrix())
    }

    /// Frobenius norm of `[V, A]`.
    pub fn commutator_norm(&self, a: &CMatrix) -> f64 {
        if self.is_identity() {
            return 0.0;
        }
        // [V, A] = [V − I, A] = L (F† A) − (A L) F† with L = F (B − I)
        let l = &self.frame * &self.block_minus_identity;
        let left = &l * (self.frame.adjoint() * a);
        let right = (a * &l) * self.frame.adjoint();
        (left - right).norm()
    }
}

/// Builds a unitary `V` with `V ψ = φ` that acts as the identity on every
/// protected sector. In strict mode `V` must also commute with `strict`.
///
/// `V` rotates the plane spanned by `ψ` and `φ` and fixes its orthogonal
/// complement, which contains every protected sector because both vectors
/// are orthogonal to them.
pub fn construct_assignment_unitary(
    psi: &StateVector,
    phi: &StateVector,
    protected: &[&HermitianOperator],
    strict: Option<&HermitianOperator>,
) -> Result<AssignmentUnitary> {
    let dim = psi.dim();
    if phi.dim() != dim {
        return Err(PhysimError::dim(format!("ψ has dimension {dim}, φ has {}", phi.dim())));
    }
    for v in [psi, phi] {
        let dev = (v.norm() - 1.0).abs();
        if dev > 1e-10 {
            return Err(PhysimError::Numerical(format!("input state off unit norm by {dev:.3e}")));
        }
    }
    for p in protected {
        if p.dim() != dim {
            return Err(PhysimError::dim("protected projector dimension"));
        }
        let overlap = (p.matrix() * psi.amplitudes())
            .norm()
            .max((p.matrix() * phi.amplitudes()).norm());
        if overlap > PROTECTED_TOL {
            return Err(PhysimError::ProtectedSectorViolation { overlap });
        }
    }

    let e1 = psi.amplitudes();
    let overlap = e1.dotc(phi.amplitudes());
    let residual = phi.amplitudes() - e1 * overlap;
    let s = residual.norm();

    let v = if s <= PARALLEL_TOL {
        if (overlap - ONE).norm() <= PARALLEL_TOL {
            AssignmentUnitary::identity(dim)
        } else {
            // a pure phase on ψ
            let phase = overlap / c(overlap.norm(), 0.0);
            AssignmentUnitary {
                dim,
                frame: CMatrix::from_column_slice(dim, 1, e1.as_slice()),
                block_minus_identity: CMatrix::from_element(1, 1, phase - ONE),
            }
        }
    } else {
        let e2 = residual / c(s, 0.0);
        let frame = CMatrix::from_columns(&[e1.clone(), e2]);
        let sc = c(s, 0.0);
        let block = CMatrix::from_row_slice(2, 2, &[overlap, -sc, sc, overlap.conj()]);
        let block_minus_identity = block - CMatrix::identity(2, 2);
        AssignmentUnitary { dim, frame, block_minus_identity }
    };

    let image = v.apply(psi.amplitudes());
    let fidelity = phi.amplitudes().dotc(&image).norm();
    if !(fidelity >= 1.0 - 1e-10) {
        return Err(PhysimError::Numerical(format!("assignment fidelity {fidelity:.12}")));
    }

    if let Some(h) = strict {
        if h.dim() != dim {
            return Err(PhysimError::dim("strict-mode hamiltonian dimension"));
        }
        let norm = v.commutator_norm(h.matrix());
        if !(norm < STRICT_TOL) {
            return Err(PhysimError::StrictModeUnsatisfiable { norm });
        }
    }
    Ok(v)
}

/// An observable with `state` as eigenvector for `spectrum[0]`.
///
/// The orthogonal complement of `state` is completed to a basis by
/// Gram-Schmidt over the computational basis. The first `n − 2` completion
/// vectors take `spectrum[1..n−1]` one each and the rest share the last value.
pub fn fresh_observable(state: &StateVector, spectrum: &[f64]) -> Result<HermitianOperator> {
    let d = state.dim();
    if spectrum.is_empty() || spectrum.len() > d {
        return Err(PhysimError::Spectrum(format!("{} values for dimension {d}", spectrum.len())));
    }
    for (i, a) in spectrum.iter().enumerate() {
        if !a.is_finite() {
            return Err(PhysimError::Spectrum(format!("value {a} is not finite")));
        }
        for b in &spectrum[i + 1..] {
            if (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0) {
                return Err(PhysimError::Spectrum(format!("repeated value {a}")));
            }
        }
    }

    let mut basis: Vec<CVector> = vec![state.amplitudes().clone()];
    for k in 0..d {
        if basis.len() == d {
            break;
        }
        let mut r = CVector::zeros(d);
        r[k] = ONE;
        // two passes keep the completion orthonormal to machine precision
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dotc(&r);
                r -= q * proj;
            }
        }
        let n = r.norm();
        if n > 1e-8 {
            basis.push(r / c(n, 0.0));
        }
    }
    if basis.len() != d {
        return Err(PhysimError::Numerical("basis completion failed".into()));
    }

    let last = *spectrum.last().expect("nonempty");
    let mut m = CMatrix::zeros(d, d);
    for (i, v) in basis.iter().enumerate() {
        let value = if i == 0 || i + 1 < spectrum.len() { spectrum[i] } else { last };
        m += v * v.adjoint() * c(value, 0.0);
    }
    Ok(HermitianOperator::hermitized(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::expectation;

    fn st(v: &[f64]) -> StateVector {
        StateVector::from_real(v).unwrap()
    }

    #[test]
    fn maps_psi_onto_phi() {
        let psi = st(&[0.6, 0.8]);
        let phi = st(&[1.0, 0.0]);
        let v = construct_assignment_unitary(&psi, &phi, &[], None).unwrap();
        let out = v.apply(psi.amplitudes());
        assert!((phi.amplitudes().dotc(&out) - ONE).norm() < 1e-12);
        assert!(unitarity_deviation(&v.to_matrix()) < 1e-12);
    }

    #[test]
    fn identity_when_already_there() {
        let psi = st(&[1.0, 0.0, 0.0]);
        let v = construct_assignment_unitary(&psi, &psi, &[], None).unwrap();
        assert!(v.is_identity());
    }

    #[test]
    fn acts_trivially_on_protected_sector() {
        let psi = st(&[0.0, 0.6, 0.8]);
        let phi = st(&[0.0, 0.0, 1.0]);
        let p = HermitianOperator::from_real_diagonal(&[1.0, 0.0, 0.0]).unwrap();
        let v = construct_assignment_unitary(&psi, &phi, &[&p], None).unwrap();
        let m = v.to_matrix();
        assert!((m[(0, 0)] - ONE).norm() < 1e-12);
        assert!(v.commutator_norm(p.matrix()) < 1e-12);
        assert!(m[(1, 0)].norm() < 1e-12 && m[(2, 0)].norm() < 1e-12);
        assert!(max_abs(&(&m * p.matrix() - p.matrix())) < 1e-12);
    }

    #[test]
    fn protected_overlap_is_rejected() {
        let psi = st(&[0.6, 0.8]);
        let phi = st(&[1.0, 0.0]);
        let p = HermitianOperator::from_real_diagonal(&[1.0, 0.0]).unwrap();
        assert!(matches!(
            construct_assignment_unitary(&psi, &phi, &[&p], None),
            Err(PhysimError::ProtectedSectorViolation { .. })
        ));
    }

    #[test]
    fn strict_mode() {
        let psi = st(&[0.6, 0.8]);
        let phi = st(&[1.0, 0.0]);
        let h = HermitianOperator::pauli_z();
        assert!(matches!(
            construct_assignment_unitary(&psi, &phi, &[], Some(&h)),
            Err(PhysimError::StrictModeUnsatisfiable { .. })
        ));
        // degenerate H: the rotation stays inside one eigenspace
        let h = HermitianOperator::from_real_diagonal(&[1.0, 1.0, 2.0]).unwrap();
        let psi = st(&[0.6, 0.8, 0.0]);
        let v = construct_assignment_unitary(&psi, &phi_in(3), &[], Some(&h)).unwrap();
        assert!(v.commutator_norm(h.matrix()) < 1e-12);
    }

    fn phi_in(d: usize) -> StateVector {
        StateVector::basis(d, 0).unwrap()
    }

    #[test]
    fn fresh_observable_has_state_as_eigenvector() {
        let psi = st(&[0.6, 0.8]);
        let o = fresh_observable(&psi, &[1.0, -1.0]).unwrap();
        let image = o.matrix() * psi.amplitudes();
        assert!((image - psi.amplitudes()).norm() < 1e-12);
        assert!((expectation(&psi, &o).unwrap() - 1.0).abs() < 1e-12);
        let mut ev = o.sorted_eigenvalues();
        ev.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        assert_eq!(ev.len(), 2);
    }

    #[test]
    fn fresh_observable_partial_spectrum() {
        let psi = st(&[0.5, 0.5, 0.5, 0.5]);
        let o = fresh_observable(&psi, &[3.0, 1.0, 2.0]).unwrap();
        let ev = o.sorted_eigenvalues();
        let want = [1.0, 2.0, 2.0, 3.0];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-10, "{ev:?}");
        }
        assert!((expectation(&psi, &o).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn fresh_observable_rejects_repeats() {
        let psi = st(&[1.0, 0.0]);
        assert!(matches!(fresh_observable(&psi, &[1.0, 1.0]), Err(PhysimError::Spectrum(_))));
        assert!(fresh_observable(&psi, &[1.0, 2.0, 3.0]).is_err());
    }
}
