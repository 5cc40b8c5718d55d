//! Complex and Hermitian linear algebra for bipartite systems.
//!
//! Vectors on ℂ^N = ℂ^{nA}⊗ℂ^{nB} use the row-major index convention
//! I = i·nB + j (0-based), so a product vector u⊗v has components
//! (u⊗v)_{ij} = u_i v_j. The partial transpose acts on the second factor,
//! (Xᴾ)_{ij;kl} = X_{il;kj}.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type C64 = Complex<f64>;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

/// Dimensions (nA, nB) of a bipartite system with N = nA·nB.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteDims {
    na: usize,
    nb: usize,
}

impl BipartiteDims {
    pub fn new(na: usize, nb: usize) -> Result<Self> {
        if na < 2 || nb < 2 {
            return Err(Error::BadDims { na, nb });
        }
        Ok(Self { na, nb })
    }

    pub fn na(&self) -> usize {
        self.na
    }

    pub fn nb(&self) -> usize {
        self.nb
    }

    /// Total dimension N = nA·nB.
    pub fn n(&self) -> usize {
        self.na * self.nb
    }

    /// Flatten a pair (i, j) to the composite index I = i·nB + j.
    pub fn flat(&self, i: usize, j: usize) -> usize {
        i * self.nb + j
    }

    /// Split a composite index back into (i, j).
    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.nb, idx % self.nb)
    }
}

/// Numerical thresholds shared across the crate.
///
/// `zero_tol` is the relative threshold declaring eigenvalues and singular
/// values zero; `pos_tol` is the most negative eigenvalue still accepted as
/// nonnegative when testing positivity.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Tolerances {
    pub zero_tol: f64,
    pub pos_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { zero_tol: 1e-9, pos_tol: -1e-10 }
    }
}

impl Tolerances {
    pub fn new(zero_tol: f64, pos_tol: f64) -> Result<Self> {
        if !(zero_tol > 0.0 && zero_tol < 1.0) {
            return Err(Error::BadTolerances(format!(
                "zero_tol must be in (0, 1), got {zero_tol}"
            )));
        }
        if pos_tol > 0.0 {
            return Err(Error::BadTolerances(format!(
                "pos_tol must be <= 0, got {pos_tol}"
            )));
        }
        Ok(Self { zero_tol, pos_tol })
    }
}

/// Tensor product of two vectors under the index map I = i·nB + j.
pub fn tensor_product(u: &CVector, v: &CVector) -> CVector {
    let nb = v.len();
    CVector::from_fn(u.len() * nb, |idx, _| u[idx / nb] * v[idx % nb])
}

pub(crate) fn partial_transpose_matrix(dims: BipartiteDims, m: &CMatrix) -> CMatrix {
    let (na, nb) = (dims.na, dims.nb);
    let mut out = CMatrix::zeros(dims.n(), dims.n());
    for i in 0..na {
        for j in 0..nb {
            for k in 0..na {
                for l in 0..nb {
                    out[(i * nb + j, k * nb + l)] = m[(i * nb + l, k * nb + j)];
                }
            }
        }
    }
    out
}

/// An N×N Hermitian matrix over a bipartite system.
///
/// Hermiticity is enforced by (X + X†)/2 on construction so that roundoff
/// never leaks into the eigensolvers.
#[derive(Clone, Debug)]
pub struct HermitianMatrix {
    dims: BipartiteDims,
    m: CMatrix,
}

impl HermitianMatrix {
    pub fn new(dims: BipartiteDims, m: CMatrix) -> Result<Self> {
        if m.nrows() != dims.n() || m.ncols() != dims.n() {
            return Err(Error::DimensionMismatch { expected: dims.n(), got: m.nrows() });
        }
        let sym = (&m + m.adjoint()).scale(0.5);
        Ok(Self { dims, m: sym })
    }

    /// Wrap a matrix that is Hermitian by construction, skipping the
    /// symmetrization pass.
    pub(crate) fn from_exact(dims: BipartiteDims, m: CMatrix) -> Self {
        Self { dims, m }
    }

    pub fn zeros(dims: BipartiteDims) -> Self {
        Self { dims, m: CMatrix::zeros(dims.n(), dims.n()) }
    }

    pub fn identity(dims: BipartiteDims) -> Self {
        Self { dims, m: CMatrix::identity(dims.n(), dims.n()) }
    }

    /// The maximally mixed state 1/N.
    pub fn maximally_mixed(dims: BipartiteDims) -> Self {
        Self {
            dims,
            m: CMatrix::identity(dims.n(), dims.n()).scale(1.0 / dims.n() as f64),
        }
    }

    /// Rank-one matrix w w†.
    pub fn outer(dims: BipartiteDims, w: &CVector) -> Result<Self> {
        if w.len() != dims.n() {
            return Err(Error::DimensionMismatch { expected: dims.n(), got: w.len() });
        }
        Ok(Self { dims, m: w * w.adjoint() })
    }

    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    /// Trace inner product (X, Y) = Tr(XY), real for Hermitian arguments.
    pub fn inner(&self, other: &Self) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.m.iter().zip(other.m.iter()) {
            acc += a.re * b.re + a.im * b.im;
        }
        acc
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dims: self.dims, m: self.m.scale(s) }
    }

    /// Normalize to unit trace.
    pub fn normalized_trace(&self) -> Result<Self> {
        let t = self.trace();
        if t.abs() < 1e-12 * self.frobenius_norm().max(1e-300) {
            return Err(Error::ZeroTrace);
        }
        Ok(self.scale(1.0 / t))
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.m * v
    }

    /// v† X v (real up to roundoff for Hermitian X).
    pub fn expectation(&self, v: &CVector) -> C64 {
        let av = &self.m * v;
        v.dotc(&av)
    }

    /// Partial transpose with respect to the second subsystem. Exact entry
    /// rearrangement: applying it twice returns the original matrix bit for
    /// bit, and the Frobenius norm and trace are preserved.
    pub fn partial_transpose(&self) -> Self {
        Self { dims: self.dims, m: partial_transpose_matrix(self.dims, &self.m) }
    }

    /// Eigendecomposition with eigenvalues sorted ascending.
    pub fn spectral_decompose(&self, tol: &Tolerances) -> SpectralData {
        let se = nalgebra::linalg::SymmetricEigen::new(self.m.clone());
        let n = self.dims.n();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
        let eigenvalues = DVector::from_fn(n, |r, _| se.eigenvalues[idx[r]]);
        let eigenvectors = CMatrix::from_fn(n, n, |r, c| se.eigenvectors[(r, idx[c])]);
        let scale = eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let thr = tol.zero_tol * scale;
        let rank = eigenvalues.iter().filter(|v| v.abs() > thr).count();
        SpectralData { eigenvalues, eigenvectors, rank }
    }

    /// Moore–Penrose pseudoinverse through the spectral representation.
    pub fn pseudoinverse(&self, tol: &Tolerances) -> Self {
        let sd = self.spectral_decompose(tol);
        sd.filtered_rebuild(self.dims, |lam| 1.0 / lam)
    }

    /// Orthogonal projectors (P, Q) onto the image and kernel.
    pub fn image_kernel_projectors(&self, tol: &Tolerances) -> (Self, Self) {
        let sd = self.spectral_decompose(tol);
        let p = sd.filtered_rebuild(self.dims, |_| 1.0);
        let q = Self::from_exact(self.dims, CMatrix::identity(self.dims.n(), self.dims.n()) - &p.m);
        (p, q)
    }

    /// Ranks (m, n) of the matrix and its partial transpose.
    pub fn rank_pair(&self, tol: &Tolerances) -> (usize, usize) {
        (
            self.spectral_decompose(tol).rank,
            self.partial_transpose().spectral_decompose(tol).rank,
        )
    }

    pub fn min_eigenvalue(&self, tol: &Tolerances) -> f64 {
        self.spectral_decompose(tol).eigenvalues[0]
    }

    /// True when both the matrix and its partial transpose are positive
    /// semidefinite within `pos_tol`.
    pub fn is_ppt(&self, tol: &Tolerances) -> bool {
        self.min_eigenvalue(tol) >= tol.pos_tol
            && self.partial_transpose().min_eigenvalue(tol) >= tol.pos_tol
    }

    /// a·X + b·Y.
    pub fn lin_comb(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        Self { dims: x.dims, m: x.m.scale(a) + y.m.scale(b) }
    }
}

impl std::ops::Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.dims, rhs.dims);
        HermitianMatrix { dims: self.dims, m: &self.m + &rhs.m }
    }
}

impl std::ops::Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.dims, rhs.dims);
        HermitianMatrix { dims: self.dims, m: &self.m - &rhs.m }
    }
}

/// Sorted eigendata of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct SpectralData {
    /// Eigenvalues in ascending order.
    pub eigenvalues: DVector<f64>,
    /// Eigenvector columns, ordered to match the eigenvalues.
    pub eigenvectors: CMatrix,
    /// Number of eigenvalues with |λ| above the relative zero threshold.
    pub rank: usize,
}

impl SpectralData {
    pub fn eigenvector(&self, k: usize) -> CVector {
        self.eigenvectors.column(k).into_owned()
    }

    /// Threshold separating the `rank` retained eigenvalues from the ones
    /// declared zero.
    fn retain_threshold(&self) -> f64 {
        if self.rank == 0 {
            return f64::INFINITY;
        }
        let mut sorted: Vec<f64> = self.eigenvalues.iter().map(|v| v.abs()).collect();
        sorted.sort_by(f64::total_cmp);
        sorted[self.eigenvalues.len() - self.rank]
    }

    /// Σ f(λ)ψψ† over the retained eigenpairs. Overriding `rank` before the
    /// call gives rank-informed rebuilds of projectors and pseudoinverses.
    pub fn filtered_rebuild(
        &self,
        dims: BipartiteDims,
        f: impl Fn(f64) -> f64,
    ) -> HermitianMatrix {
        let n = self.eigenvalues.len();
        let thr = self.retain_threshold();
        let mut m = CMatrix::zeros(n, n);
        for k in 0..n {
            let lam = self.eigenvalues[k];
            if lam.abs() >= thr {
                let col = self.eigenvectors.column(k);
                m.gerc(C64::new(f(lam), 0.0), &col, &col, C64::new(1.0, 0.0));
            }
        }
        HermitianMatrix::from_exact(dims, m)
    }

    /// Smallest retained eigenvalue (the smallest nonzero one for positive
    /// semidefinite matrices). `None` when the rank is zero.
    pub fn smallest_retained(&self) -> Option<f64> {
        let thr = self.retain_threshold();
        self.eigenvalues
            .iter()
            .copied()
            .filter(|v| v.abs() >= thr)
            .min_by(f64::total_cmp)
    }
}

/// ρ ↦ a·VρV† with V = V_A⊗V_B, both factors normalized to unit determinant
/// and the output normalized to unit trace. Preserves the rank pair, the PPT
/// property, and the kernel product-vector structure.
pub fn sl_product_transform(
    rho: &HermitianMatrix,
    va: &CMatrix,
    vb: &CMatrix,
) -> Result<HermitianMatrix> {
    let dims = rho.dims();
    let normalize = |m: &CMatrix, k: usize| -> Result<CMatrix> {
        if m.nrows() != k || m.ncols() != k {
            return Err(Error::DimensionMismatch { expected: k, got: m.nrows() });
        }
        let det = m.determinant();
        let scale = (m.norm() / (k as f64).sqrt()).powi(k as i32);
        let rel = det.norm() / scale.max(1e-300);
        if rel < 1e-12 {
            return Err(Error::SingularFactor(rel));
        }
        Ok(m / det.powf(1.0 / k as f64))
    };
    let wa = normalize(va, dims.na())?;
    let wb = normalize(vb, dims.nb())?;
    let v = wa.kronecker(&wb);
    let m = &v * rho.matrix() * v.adjoint();
    HermitianMatrix::new(dims, m)?.normalized_trace()
}
