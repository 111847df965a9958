#![allow(dead_code)]

use nalgebra::DMatrix;
use physim::commutant::haar_unitary;
use physim::hilbert::{c, CMatrix, CVector, HermitianOperator, StateVector, UnitaryOperator};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Real dimension of `{S unitary : SH = HS}` counted from scratch: the
/// tangent space at the identity is the set of anti-Hermitian `X` with
/// `XH − HX = 0`. Parametrize anti-Hermitian matrices by `d²` real numbers,
/// write the commutator as a real linear map into `2d²` real outputs and
/// count the null space with an SVD.
pub fn commutant_oracle_dimension(h: &CMatrix) -> usize {
    let d = h.nrows();
    let mut basis: Vec<CMatrix> = Vec::with_capacity(d * d);
    for j in 0..d {
        let mut x = CMatrix::zeros(d, d);
        x[(j, j)] = c(0.0, 1.0);
        basis.push(x);
    }
    for j in 0..d {
        for k in j + 1..d {
            let mut x = CMatrix::zeros(d, d);
            x[(j, k)] = c(1.0, 0.0);
            x[(k, j)] = c(-1.0, 0.0);
            basis.push(x);
            let mut y = CMatrix::zeros(d, d);
            y[(j, k)] = c(0.0, 1.0);
            y[(k, j)] = c(0.0, 1.0);
            basis.push(y);
        }
    }
    let mut a = DMatrix::<f64>::zeros(2 * d * d, basis.len());
    for (col, x) in basis.iter().enumerate() {
        let comm = x * h - h * x;
        for (i, z) in comm.iter().enumerate() {
            a[(2 * i, col)] = z.re;
            a[(2 * i + 1, col)] = z.im;
        }
    }
    let sv = a.svd(false, false).singular_values;
    let scale = sv.iter().cloned().fold(1.0, f64::max);
    sv.iter().filter(|&&s| s < 1e-8 * scale).count()
}

pub fn random_state(d: usize, rng: &mut impl Rng) -> StateVector {
    let v = CVector::from_fn(d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    });
    StateVector::new(v).unwrap()
}

pub fn random_hermitian(d: usize, rng: &mut impl Rng) -> HermitianOperator {
    let g = CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    });
    HermitianOperator::new((&g + g.adjoint()) * c(0.5, 0.0)).unwrap()
}

pub fn random_unitary(d: usize, rng: &mut impl Rng) -> UnitaryOperator {
    UnitaryOperator::new(haar_unitary(d, rng)).unwrap()
}

/// Random composition of `d` into positive parts.
pub fn random_multiplicities(d: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut left = d;
    let mut parts = Vec::new();
    while left > 0 {
        let m = rng.random_range(1..=left);
        parts.push(m);
        left -= m;
    }
    parts
}

/// `U diag(λ) U†` with each well-separated `λ_k` repeated `m_k` times and a
/// Haar-random `U`.
pub fn hermitian_with_multiplicities(mults: &[usize], rng: &mut impl Rng) -> HermitianOperator {
    let d: usize = mults.iter().sum();
    let mut diag = Vec::with_capacity(d);
    for (k, &m) in mults.iter().enumerate() {
        let lambda = 2.0 * k as f64 - d as f64 + rng.random_range(0.0..0.5);
        diag.extend(std::iter::repeat_n(lambda, m));
    }
    let u = haar_unitary(d, rng);
    let dm = CMatrix::from_diagonal(&CVector::from_iterator(d, diag.iter().map(|&x| c(x, 0.0))));
    HermitianOperator::new(&u * dm * u.adjoint()).unwrap()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
