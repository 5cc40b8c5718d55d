//! Shared helpers for the unit-test modules.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hermitian::{tensor_product, BipartiteDims, CMatrix, CVector, HermitianMatrix, C64};
use crate::products::ProductVector;
use crate::Result;

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn basis_vec(n: usize, k: usize) -> CVector {
    CVector::from_fn(n, |i, _| {
        if i == k {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

pub(crate) fn random_cvector(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub(crate) fn random_cmatrix(rng: &mut ChaCha8Rng, nr: usize, nc: usize) -> CMatrix {
    CMatrix::from_fn(nr, nc, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub(crate) fn random_hermitian(rng: &mut ChaCha8Rng, dims: BipartiteDims) -> HermitianMatrix {
    let n = dims.n();
    HermitianMatrix::new(dims, random_cmatrix(rng, n, n)).unwrap()
}

/// Random invertible factor matrix with entries O(1).
pub(crate) fn random_gl(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    loop {
        let m = random_cmatrix(rng, n, n);
        if m.determinant().norm() > 0.1 {
            return m;
        }
    }
}

pub(crate) fn random_product_vector(rng: &mut ChaCha8Rng, dims: BipartiteDims) -> ProductVector {
    ProductVector::new(
        random_cvector(rng, dims.na()),
        random_cvector(rng, dims.nb()),
        1.0,
    )
}

/// Mixture of `k` random pure product states: a separable PPT state of
/// generic rank pair (k, k) for k ≤ N.
pub(crate) fn random_separable_state(
    rng: &mut ChaCha8Rng,
    dims: BipartiteDims,
    k: usize,
) -> Result<HermitianMatrix> {
    let n = dims.n();
    let mut m = CMatrix::zeros(n, n);
    for _ in 0..k {
        let u = random_cvector(rng, dims.na());
        let v = random_cvector(rng, dims.nb());
        let mut w = tensor_product(&u, &v);
        w /= C64::new(w.norm(), 0.0);
        let weight: f64 = rng.random_range(0.5..1.5);
        m.gerc(C64::new(weight, 0.0), &w, &w, C64::new(1.0, 0.0));
    }
    HermitianMatrix::new(dims, m)?.normalized_trace()
}

/// Separable rank-(k,k) state resampled until the smallest retained
/// eigenvalues of ρ and ρᴾ exceed `min_retained`; keeps pseudoinverse-based
/// derivatives well conditioned.
pub(crate) fn conditioned_separable_state(
    rng: &mut ChaCha8Rng,
    dims: BipartiteDims,
    k: usize,
    min_retained: f64,
) -> HermitianMatrix {
    let tol = crate::Tolerances::default();
    loop {
        let rho = random_separable_state(rng, dims, k).unwrap();
        let sd = rho.spectral_decompose(&tol);
        let sd_pt = rho.partial_transpose().spectral_decompose(&tol);
        if sd.rank == k
            && sd_pt.rank == k
            && sd.smallest_retained().unwrap_or(0.0) >= min_retained
            && sd_pt.smallest_retained().unwrap_or(0.0) >= min_retained
        {
            return rho;
        }
    }
}
