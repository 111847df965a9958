//! Dense complex linear algebra on finite-dimensional state spaces.
//!
//! Everything here works with `ħ = 1`. Operators are dense `DMatrix<Complex<f64>>`
//! values wrapped in newtypes that carry their algebraic guarantee
//! (hermiticity or unitarity), checked once at construction.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{PhysimError, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest supported state-space dimension.
pub const MAX_DIM: usize = 4096;
/// Default relative tolerance for merging eigenvalues into one group.
pub const DEFAULT_GROUP_TOL: f64 = 1e-9;

const HERMITIAN_TOL: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-10;
const UNITARY_IMAGE_NORM_TOL: f64 = 1e-10;
const EXPECTATION_IMAG_TOL: f64 = 1e-8;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(PhysimError::dim("dimension must be at least 1"));
    }
    if dim > MAX_DIM {
        return Err(PhysimError::dim(format!("dimension {dim} exceeds cap {MAX_DIM}")));
    }
    Ok(())
}

fn check_same_dim(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(PhysimError::dim(format!("{what}: {a} vs {b}")));
    }
    Ok(())
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Frobenius norm of `A·B − B·A`.
pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    (a * b - b * a).norm()
}

// ---------------------------------------------------------------------------
// States

/// Unit-norm pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: CVector,
}

impl StateVector {
    /// Normalizes `amplitudes` to unit norm.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let norm = amplitudes.norm();
        if !norm.is_finite() {
            return Err(PhysimError::Numerical("non-finite amplitude".into()));
        }
        if norm == 0.0 {
            return Err(PhysimError::ZeroState);
        }
        Ok(StateVector { amplitudes: amplitudes / C64::from(norm) })
    }

    pub fn from_slice(amplitudes: &[C64]) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(PhysimError::dim("empty amplitude sequence"));
        }
        Self::new(CVector::from_column_slice(amplitudes))
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        let v: Vec<C64> = amplitudes.iter().map(|&x| C64::from(x)).collect();
        Self::from_slice(&v)
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        if index >= dim {
            return Err(PhysimError::Index { index, len: dim });
        }
        let mut v = CVector::zeros(dim);
        v[index] = ONE;
        Ok(StateVector { amplitudes: v })
    }

    /// Wraps the image of a unit vector under a unitary map. The norm is
    /// checked, never rescaled, so accumulated drift stays visible.
    pub fn from_unitary_image(amplitudes: CVector) -> Result<Self> {
        let dev = (amplitudes.norm() - 1.0).abs();
        if !(dev <= UNITARY_IMAGE_NORM_TOL) {
            return Err(PhysimError::Numerical(format!(
                "norm drifted by {dev:.3e} under a unitary map"
            )));
        }
        Ok(StateVector { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|⟨self|other⟩|`
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm()
    }

    pub fn apply_unitary(&self, u: &UnitaryOperator) -> Result<StateVector> {
        check_same_dim(u.dim(), self.dim(), "unitary vs state")?;
        StateVector::from_unitary_image(u.matrix() * &self.amplitudes)
    }

    /// Squared norm of `P·ψ`.
    pub fn weight_in(&self, projector: &HermitianOperator) -> f64 {
        (projector.matrix() * &self.amplitudes).norm_squared()
    }
}

/// Normalizes a sequence of amplitudes.
pub fn make_state(amplitudes: &[C64]) -> Result<StateVector> {
    StateVector::from_slice(amplitudes)
}

// ---------------------------------------------------------------------------
// Operators

/// Dense Hermitian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    /// Checks hermiticity to a tolerance relative to the largest entry and
    /// stores the exactly hermitized matrix.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(PhysimError::dim(format!(
                "operator is {}x{}, not square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        check_dim(matrix.nrows())?;
        let adj = matrix.adjoint();
        let deviation = max_abs(&(&matrix - &adj));
        let scale = max_abs(&matrix).max(1.0);
        if !(deviation <= HERMITIAN_TOL * scale) {
            return Err(PhysimError::NotHermitian { deviation });
        }
        Ok(Self::hermitized(matrix))
    }

    /// Symmetrizes without checking. Callers guarantee near-hermiticity.
    pub(crate) fn hermitized(matrix: CMatrix) -> Self {
        let adj = matrix.adjoint();
        HermitianOperator { matrix: (matrix + adj) * C64::from(0.5) }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        check_dim(diag.len())?;
        let v: Vec<C64> = diag.iter().map(|&x| C64::from(x)).collect();
        Ok(HermitianOperator { matrix: CMatrix::from_diagonal(&CVector::from_vec(v)) })
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOperator { matrix: CMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianOperator { matrix: CMatrix::zeros(dim, dim) }
    }

    pub fn pauli_x() -> Self {
        HermitianOperator { matrix: CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]) }
    }

    pub fn pauli_y() -> Self {
        HermitianOperator { matrix: CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]) }
    }

    pub fn pauli_z() -> Self {
        HermitianOperator { matrix: CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]) }
    }

    /// `|v⟩⟨v|` for a unit vector.
    pub fn projector_onto(v: &StateVector) -> Self {
        let a = v.amplitudes();
        HermitianOperator::hermitized(a * a.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn scaled(&self, s: f64) -> Self {
        HermitianOperator { matrix: &self.matrix * C64::from(s) }
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<Self> {
        check_same_dim(self.dim(), other.dim(), "operator sum")?;
        Ok(HermitianOperator { matrix: &self.matrix + &other.matrix })
    }

    /// `[self, other]`
    pub fn commutator(&self, other: &HermitianOperator) -> CMatrix {
        &self.matrix * &other.matrix - &other.matrix * &self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn sorted_eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// `P² = P` within `tol`.
    pub fn is_projector(&self, tol: f64) -> bool {
        max_abs(&(&self.matrix * &self.matrix - &self.matrix)) <= tol
    }
}

/// Dense unitary operator.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryOperator {
    matrix: CMatrix,
}

impl UnitaryOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(PhysimError::dim("unitary must be square"));
        }
        check_dim(matrix.nrows())?;
        let deviation = unitarity_deviation(&matrix);
        if !(deviation <= UNITARY_TOL) {
            return Err(PhysimError::NotUnitary { deviation });
        }
        Ok(UnitaryOperator { matrix })
    }

    pub(crate) fn new_unchecked(matrix: CMatrix) -> Self {
        UnitaryOperator { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        UnitaryOperator { matrix: CMatrix::identity(dim, dim) }
    }

    pub fn hadamard() -> Self {
        let h = C64::from(std::f64::consts::FRAC_1_SQRT_2);
        UnitaryOperator { matrix: CMatrix::from_row_slice(2, 2, &[h, h, h, -h]) }
    }

    /// `diag(e^{iθ_0}, e^{iθ_1}, …)`
    pub fn diagonal_phases(phases: &[f64]) -> Result<Self> {
        check_dim(phases.len())?;
        let v: Vec<C64> = phases.iter().map(|&t| C64::from_polar(1.0, t)).collect();
        Ok(UnitaryOperator { matrix: CMatrix::from_diagonal(&CVector::from_vec(v)) })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn adjoint(&self) -> UnitaryOperator {
        UnitaryOperator { matrix: self.matrix.adjoint() }
    }

    /// `self · other`
    pub fn then_after(&self, other: &UnitaryOperator) -> Result<UnitaryOperator> {
        check_same_dim(self.dim(), other.dim(), "unitary product")?;
        Ok(UnitaryOperator { matrix: &self.matrix * &other.matrix })
    }
}

/// `max |U U† − I|`
pub fn unitarity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    max_abs(&(m * m.adjoint() - CMatrix::identity(n, n)))
}

// ---------------------------------------------------------------------------
// Spectral decomposition

/// One eigenvalue cluster.
#[derive(Clone, Debug)]
pub struct EigenGroup {
    pub eigenvalue: f64,
    pub multiplicity: usize,
    pub projector: HermitianOperator,
    /// Orthonormal eigenvectors as columns (`dim × multiplicity`).
    pub basis: CMatrix,
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    groups: Vec<EigenGroup>,
    dim: usize,
}

impl SpectralDecomposition {
    pub fn groups(&self) -> &[EigenGroup] {
        &self.groups
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.multiplicity).collect()
    }

    /// `Σ λ_k P_k`
    pub fn reconstruct(&self) -> CMatrix {
        self.groups.iter().fold(CMatrix::zeros(self.dim, self.dim), |acc, g| {
            acc + g.projector.matrix() * C64::from(g.eigenvalue)
        })
    }
}

/// Raw eigenpairs sorted ascending, then clustered.
pub(crate) fn clustered_eigen(m: &CMatrix, group_tol: f64) -> Vec<(f64, CMatrix)> {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &idx in &order {
        let lam = eig.eigenvalues[idx];
        match clusters.last_mut() {
            Some(cl) => {
                let prev = eig.eigenvalues[*cl.last().unwrap()];
                if (lam - prev).abs() <= group_tol * prev.abs().max(lam.abs()).max(1.0) {
                    cl.push(idx);
                } else {
                    clusters.push(vec![idx]);
                }
            }
            None => clusters.push(vec![idx]),
        }
    }

    clusters
        .into_iter()
        .map(|cl| {
            let mean = cl.iter().map(|&i| eig.eigenvalues[i]).sum::<f64>() / cl.len() as f64;
            let cols: Vec<CVector> = cl.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
            (mean, CMatrix::from_columns(&cols))
        })
        .collect()
}

/// Groups the spectrum of `h` into eigenvalue clusters with their projectors.
/// Eigenvalues within `group_tol · max(1, |λ|)` of their neighbour merge.
pub fn spectral_decompose(h: &HermitianOperator, group_tol: f64) -> SpectralDecomposition {
    let dim = h.dim();
    let groups = clustered_eigen(h.matrix(), group_tol)
        .into_iter()
        .map(|(eigenvalue, basis)| EigenGroup {
            eigenvalue,
            multiplicity: basis.ncols(),
            projector: HermitianOperator::hermitized(&basis * basis.adjoint()),
            basis,
        })
        .collect();
    SpectralDecomposition { groups, dim }
}

/// Spectral data of a Hermitian generator, reusable for any duration.
#[derive(Clone, Debug)]
pub struct Propagator {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl Propagator {
    pub fn new(h: &HermitianOperator) -> Self {
        let eig = SymmetricEigen::new(h.matrix().clone());
        Propagator { eigenvalues: eig.eigenvalues.iter().copied().collect(), eigenvectors: eig.eigenvectors }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `exp(−i H t)`
    pub fn unitary(&self, duration: f64) -> UnitaryOperator {
        let phases: Vec<C64> = self.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -l * duration)).collect();
        let mut scaled = self.eigenvectors.clone();
        for (j, p) in phases.iter().enumerate() {
            for z in scaled.column_mut(j).iter_mut() {
                *z *= p;
            }
        }
        UnitaryOperator::new_unchecked(scaled * self.eigenvectors.adjoint())
    }
}

/// `exp(−i H t) |ψ⟩`
pub fn evolve(state: &StateVector, h: &HermitianOperator, duration: f64) -> Result<StateVector> {
    check_same_dim(h.dim(), state.dim(), "hamiltonian vs state")?;
    state.apply_unitary(&Propagator::new(h).unitary(duration))
}

/// `S A S†`
pub fn conjugate(a: &HermitianOperator, s: &UnitaryOperator) -> Result<HermitianOperator> {
    check_same_dim(a.dim(), s.dim(), "operator vs unitary")?;
    Ok(HermitianOperator::hermitized(s.matrix() * a.matrix() * s.matrix().adjoint()))
}

/// `⟨ψ|A|ψ⟩`, rejecting a non-negligible imaginary part.
pub fn expectation(state: &StateVector, a: &HermitianOperator) -> Result<f64> {
    check_same_dim(a.dim(), state.dim(), "operator vs state")?;
    let psi = state.amplitudes();
    let z = psi.dotc(&(a.matrix() * psi));
    if z.im.abs() > EXPECTATION_IMAG_TOL {
        return Err(PhysimError::Numerical(format!("expectation has imaginary part {:.3e}", z.im)));
    }
    Ok(z.re)
}

// ---------------------------------------------------------------------------
// Tensor products

/// Kronecker product. The leftmost factor carries the slowest-varying index.
pub trait Tensor: Sized {
    fn kron_with(&self, other: &Self) -> Self;
}

impl Tensor for CMatrix {
    fn kron_with(&self, other: &Self) -> Self {
        self.kronecker(other)
    }
}

impl Tensor for HermitianOperator {
    fn kron_with(&self, other: &Self) -> Self {
        HermitianOperator { matrix: self.matrix.kronecker(&other.matrix) }
    }
}

impl Tensor for UnitaryOperator {
    fn kron_with(&self, other: &Self) -> Self {
        UnitaryOperator { matrix: self.matrix.kronecker(&other.matrix) }
    }
}

impl Tensor for StateVector {
    fn kron_with(&self, other: &Self) -> Self {
        StateVector { amplitudes: self.amplitudes.kronecker(&other.amplitudes) }
    }
}

pub fn tensor<T: Tensor + Clone>(factors: &[T]) -> Result<T> {
    let (first, rest) = factors.split_first().ok_or_else(|| PhysimError::dim("empty tensor product"))?;
    let out = rest.iter().fold(first.clone(), |acc, f| acc.kron_with(f));
    Ok(out)
}

/// Lifts an operator on factor `factor` of a product space with dimensions
/// `dims` to the whole space.
pub fn embed(local: &CMatrix, factor: usize, dims: &[usize]) -> Result<CMatrix> {
    if factor >= dims.len() {
        return Err(PhysimError::Index { index: factor, len: dims.len() });
    }
    if local.nrows() != dims[factor] || local.ncols() != dims[factor] {
        return Err(PhysimError::dim(format!(
            "local operator is {}x{}, factor {factor} has dimension {}",
            local.nrows(),
            local.ncols(),
            dims[factor]
        )));
    }
    let left: usize = dims[..factor].iter().product();
    let right: usize = dims[factor + 1..].iter().product();
    let l = CMatrix::identity(left, left);
    let r = CMatrix::identity(right, right);
    Ok(l.kronecker(local).kronecker(&r))
}

/// Lifts an operator acting on several factors, taken in the order listed
/// in `factors`, to the whole product space.
pub fn embed_factors(local: &CMatrix, factors: &[usize], dims: &[usize]) -> Result<CMatrix> {
    let mut local_dim = 1;
    for (k, &f) in factors.iter().enumerate() {
        if f >= dims.len() {
            return Err(PhysimError::Index { index: f, len: dims.len() });
        }
        if factors[..k].contains(&f) {
            return Err(PhysimError::dim(format!("factor {f} listed twice")));
        }
        local_dim *= dims[f];
    }
    if local.nrows() != local_dim || local.ncols() != local_dim {
        return Err(PhysimError::dim(format!("local operator is {}x{}, factors span {local_dim}", local.nrows(), local.ncols())));
    }
    let total: usize = dims.iter().product();
    check_dim(total)?;
    // split every global index into (local index, index of the remaining factors)
    let split = |mut i: usize| {
        let mut digits = vec![0; dims.len()];
        for (k, &d) in dims.iter().enumerate().rev() {
            digits[k] = i % d;
            i /= d;
        }
        let li = factors.iter().fold(0, |acc, &f| acc * dims[f] + digits[f]);
        let ri = (0..dims.len()).filter(|k| !factors.contains(k)).fold(0, |acc, k| acc * dims[k] + digits[k]);
        (li, ri)
    };
    let parts: Vec<(usize, usize)> = (0..total).map(split).collect();
    Ok(CMatrix::from_fn(total, total, |i, j| {
        let (li, ri) = parts[i];
        let (lj, rj) = parts[j];
        if ri == rj {
            local[(li, lj)]
        } else {
            ZERO
        }
    }))
}

/// Schmidt coefficients across the cut `left_dim | rest`, descending.
pub fn schmidt_coefficients(state: &StateVector, left_dim: usize) -> Result<Vec<f64>> {
    let n = state.dim();
    if left_dim == 0 || !n.is_multiple_of(left_dim) {
        return Err(PhysimError::dim(format!("cannot cut dimension {n} at {left_dim}")));
    }
    let right = n / left_dim;
    // row index = left index, column index = right index (left is slowest)
    let m = CMatrix::from_fn(left_dim, right, |i, j| state.amplitudes()[i * right + j]);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Number of Schmidt coefficients above `tol`.
pub fn schmidt_rank(state: &StateVector, left_dim: usize, tol: f64) -> Result<usize> {
    Ok(schmidt_coefficients(state, left_dim)?.into_iter().filter(|&s| s > tol).count())
}

/// Spin component along the axis at `angle` radians from `z` in the x–z plane.
pub fn spin_axis(angle: f64) -> HermitianOperator {
    let (s, co) = angle.sin_cos();
    HermitianOperator::hermitized(
        HermitianOperator::pauli_z().matrix() * C64::from(co) + HermitianOperator::pauli_x().matrix() * C64::from(s),
    )
}

/// Eigenprojectors `(Π_+, Π_-)` of [`spin_axis`], built in closed form.
pub fn spin_axis_projectors(angle: f64) -> [HermitianOperator; 2] {
    let n = spin_axis(angle);
    let id = CMatrix::identity(2, 2);
    let half = C64::from(0.5);
    [
        HermitianOperator::hermitized((&id + n.matrix()) * half),
        HermitianOperator::hermitized((&id - n.matrix()) * half),
    ]
}
