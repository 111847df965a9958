//! Macrostates: maximal joint eigenspaces of a compatible family of
//! macroscopic operators.
//!
//! Each macrostate is labelled by the tuple of eigenvalues `(λ_1(a), λ_2(a), …)`
//! the macroscopic operators take on it, so a label is self-describing and
//! `M_j = Σ_a λ_j(a) P_a` can be rebuilt from the decomposition alone.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{PhysimError, Result};
use crate::hilbert::{
    clustered_eigen, commutator_norm, max_abs, spectral_decompose, CMatrix, CVector, HermitianOperator,
    StateVector, C64, DEFAULT_GROUP_TOL,
};

/// Default threshold on `1 − ‖P_a ψ‖²` for calling a state definite.
pub const DEFAULT_DEFINITE_TOL: f64 = 1e-9;
const PROJECTOR_TOL: f64 = 1e-10;

/// Eigenvalue tuple identifying a macrostate. Ordered lexicographically.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct MacroLabel(pub Vec<f64>);

impl MacroLabel {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Componentwise equality within `tol · max(1, |λ|)`.
    pub fn approx_eq(&self, other: &MacroLabel, tol: f64) -> bool {
        self.0.len() == other.0.len()
            && self.0.iter().zip(&other.0).all(|(a, b)| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0))
    }
}

impl PartialEq for MacroLabel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for MacroLabel {}

impl PartialOrd for MacroLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MacroLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl fmt::Display for MacroLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let r = v.round();
            if (v - r).abs() < 1e-9 {
                write!(f, "{}", r as i64)?;
            } else {
                write!(f, "{v}")?;
            }
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug)]
struct Macrostate {
    label: MacroLabel,
    projector: HermitianOperator,
    /// orthonormal columns spanning the macrostate
    basis: CMatrix,
}

/// Orthogonal decomposition of the state space into labelled macrostates.
#[derive(Clone, Debug)]
pub struct MacrostateDecomposition {
    states: Vec<Macrostate>,
    dim: usize,
    properties: usize,
}

impl MacrostateDecomposition {
    /// Builds a decomposition from explicit projectors, validating
    /// idempotence, mutual orthogonality and completeness.
    pub fn from_parts(labels: Vec<MacroLabel>, projectors: Vec<HermitianOperator>) -> Result<Self> {
        if labels.is_empty() || labels.len() != projectors.len() {
            return Err(PhysimError::Decomposition(format!(
                "{} labels for {} projectors",
                labels.len(),
                projectors.len()
            )));
        }
        let dim = projectors[0].dim();
        let properties = labels[0].0.len();
        if labels.iter().any(|l| l.0.len() != properties) {
            return Err(PhysimError::Decomposition("labels differ in length".into()));
        }
        let mut sum = CMatrix::zeros(dim, dim);
        let mut states = Vec::with_capacity(labels.len());
        for (i, (label, p)) in labels.into_iter().zip(projectors).enumerate() {
            if p.dim() != dim {
                return Err(PhysimError::dim("projectors differ in dimension"));
            }
            if !p.is_projector(PROJECTOR_TOL) {
                return Err(PhysimError::Decomposition(format!("projector {i} is not idempotent")));
            }
            sum += p.matrix();
            let basis = range_basis(&p);
            if basis.ncols() == 0 {
                return Err(PhysimError::Decomposition(format!("projector {label} has rank 0")));
            }
            states.push(Macrostate { label, projector: p, basis });
        }
        if max_abs(&(sum - CMatrix::identity(dim, dim))) > PROJECTOR_TOL {
            return Err(PhysimError::Decomposition("projectors do not sum to the identity".into()));
        }
        for i in 0..states.len() {
            for j in i + 1..states.len() {
                if states[i].label == states[j].label {
                    return Err(PhysimError::Decomposition(format!("duplicate label {}", states[i].label)));
                }
                let overlap = max_abs(&(states[i].projector.matrix() * states[j].projector.matrix()));
                if overlap > PROJECTOR_TOL {
                    return Err(PhysimError::Decomposition(format!(
                        "projectors {} and {} overlap ({overlap:.3e})",
                        states[i].label, states[j].label
                    )));
                }
            }
        }
        states.sort_by(|a, b| a.label.cmp(&b.label));
        Ok(MacrostateDecomposition { states, dim, properties })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Number of macroscopic operators the labels carry values for.
    pub fn property_count(&self) -> usize {
        self.properties
    }

    pub fn labels(&self) -> impl Iterator<Item = &MacroLabel> {
        self.states.iter().map(|s| &s.label)
    }

    pub fn label(&self, index: usize) -> &MacroLabel {
        &self.states[index].label
    }

    pub fn projector(&self, index: usize) -> &HermitianOperator {
        &self.states[index].projector
    }

    pub fn rank(&self, index: usize) -> usize {
        self.states[index].basis.ncols()
    }

    pub fn index_of(&self, label: &MacroLabel, tol: f64) -> Option<usize> {
        self.states.iter().position(|s| s.label.approx_eq(label, tol))
    }

    /// `λ_j(a)`
    pub fn eigenvalue(&self, property: usize, index: usize) -> Result<f64> {
        if property >= self.properties {
            return Err(PhysimError::Index { index: property, len: self.properties });
        }
        let s = self.states.get(index).ok_or(PhysimError::Index { index, len: self.states.len() })?;
        Ok(s.label.0[property])
    }

    /// `‖P_a ψ‖²` for every macrostate, in label order.
    pub fn weights(&self, state: &StateVector) -> Vec<f64> {
        self.states.iter().map(|s| (s.basis.adjoint() * state.amplitudes()).norm_squared()).collect()
    }

    /// `P_a ψ` (unnormalized).
    pub fn project(&self, index: usize, state: &StateVector) -> CVector {
        let b = &self.states[index].basis;
        b * (b.adjoint() * state.amplitudes())
    }

    /// Macrostate entropy `log₂ rank(P_a)`.
    pub fn entropy(&self, index: usize) -> f64 {
        (self.rank(index) as f64).log2()
    }

    /// Whether macrostate `index` has the lowest entropy in the decomposition.
    pub fn has_minimal_entropy(&self, index: usize) -> bool {
        let r = self.rank(index);
        self.states.iter().all(|s| s.basis.ncols() >= r)
    }
}

/// Orthonormal basis of the range of a projector.
fn range_basis(p: &HermitianOperator) -> CMatrix {
    let dec = spectral_decompose(p, 1e-6);
    dec.groups()
        .iter()
        .find(|g| (g.eigenvalue - 1.0).abs() < 1e-6)
        .map(|g| g.basis.clone())
        .unwrap_or_else(|| CMatrix::zeros(p.dim(), 0))
}

fn compatibility_scale(a: &HermitianOperator, b: &HermitianOperator) -> f64 {
    (a.matrix().norm() * b.matrix().norm()).max(1.0)
}

/// True iff every pair of operators commutes within `tol` (Frobenius norm of
/// the commutator).
pub fn check_compatible(ops: &[HermitianOperator], tol: f64) -> bool {
    first_incompatible(ops, tol).is_none()
}

fn first_incompatible(ops: &[HermitianOperator], tol: f64) -> Option<(usize, usize, f64)> {
    for i in 0..ops.len() {
        for j in i + 1..ops.len() {
            let n = commutator_norm(ops[i].matrix(), ops[j].matrix());
            if !(n < tol) {
                return Some((i, j, n));
            }
        }
    }
    None
}

/// Finest decomposition of the space into maximal common eigenspaces of
/// `ops`, labels sorted lexicographically.
pub fn joint_eigenspace_decomposition(ops: &[HermitianOperator]) -> Result<MacrostateDecomposition> {
    let dim = ops.first().map(|o| o.dim()).ok_or_else(|| PhysimError::dim("no macroscopic operators"))?;
    if ops.iter().any(|o| o.dim() != dim) {
        return Err(PhysimError::dim("macroscopic operators differ in dimension"));
    }
    for i in 0..ops.len() {
        for j in i + 1..ops.len() {
            let n = commutator_norm(ops[i].matrix(), ops[j].matrix());
            if n > 1e-9 * compatibility_scale(&ops[i], &ops[j]) {
                return Err(PhysimError::NotCommuting { first: i, second: j, norm: n });
            }
        }
    }

    let mut blocks: Vec<(Vec<f64>, CMatrix)> = vec![(Vec::new(), CMatrix::identity(dim, dim))];
    for op in ops {
        let mut next = Vec::with_capacity(blocks.len());
        for (label, basis) in blocks {
            let restricted = basis.adjoint() * op.matrix() * &basis;
            let restricted = (&restricted + restricted.adjoint()) * C64::from(0.5);
            for (lambda, w) in clustered_eigen(&restricted, DEFAULT_GROUP_TOL) {
                let mut l = label.clone();
                l.push(lambda);
                next.push((l, &basis * w));
            }
        }
        blocks = next;
    }

    let mut states: Vec<Macrostate> = blocks
        .into_iter()
        .map(|(label, basis)| Macrostate {
            label: MacroLabel(label),
            projector: HermitianOperator::hermitized(&basis * basis.adjoint()),
            basis,
        })
        .collect();
    states.sort_by(|a, b| a.label.cmp(&b.label));
    Ok(MacrostateDecomposition { states, dim, properties: ops.len() })
}

/// `M_j = Σ_a λ_j(a) P_a`
pub fn macro_operator(decomp: &MacrostateDecomposition, property: usize) -> Result<HermitianOperator> {
    if property >= decomp.properties {
        return Err(PhysimError::Index { index: property, len: decomp.properties });
    }
    let n = decomp.dim;
    let m = decomp.states.iter().fold(CMatrix::zeros(n, n), |acc, s| {
        acc + s.projector.matrix() * C64::from(s.label.0[property])
    });
    Ok(HermitianOperator::hermitized(m))
}

/// Where a state sits relative to a decomposition.
#[derive(Clone, Debug, PartialEq)]
pub enum Classification {
    /// `‖P_a ψ‖² ≥ 1 − tol` for the macrostate at `index`.
    Definite { index: usize, weight: f64 },
    /// Born weights for every macrostate, in label order.
    Superposed { weights: Vec<f64> },
}

impl Classification {
    pub fn is_definite(&self) -> bool {
        matches!(self, Classification::Definite { .. })
    }
}

pub fn classify(state: &StateVector, decomp: &MacrostateDecomposition, definite_tol: f64) -> Classification {
    let weights = decomp.weights(state);
    match weights.iter().position(|&w| w >= 1.0 - definite_tol) {
        Some(index) => Classification::Definite { index, weight: weights[index] },
        None => Classification::Superposed { weights },
    }
}
