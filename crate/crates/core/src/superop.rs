//! Superoperators on the real Hilbert space H_N of Hermitian N×N matrices.
//!
//! H_N carries the trace inner product (X, Y) = Tr(XY) and has real dimension
//! N². Superoperators are materialized as dense real N²×N² matrices in a
//! fixed orthonormal basis; counting null-space dimensions reliably needs the
//! full spectrum, which is cheap at these sizes (81×81, 256×256).
//!
//! The central players are the compressions 𝐏X = PXP, 𝐐X = QXQ onto the image
//! and kernel of a state ρ, the partial-transpose conjugated analogues
//! 𝐏̃X = (P̃XᴾP̃)ᴾ, 𝐐̃X = (Q̃XᴾQ̃)ᴾ, and the extremality test: ρ is extremal in
//! the PPT set exactly when A = ρ is the only solution of (𝐏+𝐏̃)A = 2A.

use nalgebra::{DMatrix, DVector};

use crate::hermitian::{partial_transpose_matrix, BipartiteDims, CMatrix, HermitianMatrix, C64};
use crate::linalg;
use crate::{Error, Result, Tolerances};

/// Absolute gap for declaring an eigenvalue of 𝐏+𝐏̃ equal to 2. Observed
/// spectra contain eigenvalues within a percent of 2 that are still separated
/// from it by many orders of magnitude more than machine precision.
pub const EIGENVALUE_TWO_GAP: f64 = 1e-6;

/// Orthonormal basis of H_N: the N diagonal units E_ii, then for each i<j in
/// lexicographic order the pair (E_ij+E_ji)/√2 and i(E_ij−E_ji)/√2.
#[derive(Clone, Debug)]
pub struct HermBasis {
    dims: BipartiteDims,
    pairs: Vec<(usize, usize)>,
}

impl HermBasis {
    pub fn new(dims: BipartiteDims) -> Self {
        let n = dims.n();
        let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                pairs.push((i, j));
            }
        }
        Self { dims, pairs }
    }

    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }

    /// Real dimension N² of H_N.
    pub fn len(&self) -> usize {
        self.dims.n() * self.dims.n()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The a-th basis matrix.
    pub fn basis_matrix(&self, a: usize) -> CMatrix {
        let n = self.dims.n();
        let mut m = CMatrix::zeros(n, n);
        if a < n {
            m[(a, a)] = C64::new(1.0, 0.0);
        } else {
            let (i, j) = self.pairs[(a - n) / 2];
            let inv = 1.0 / 2f64.sqrt();
            if (a - n) % 2 == 0 {
                m[(i, j)] = C64::new(inv, 0.0);
                m[(j, i)] = C64::new(inv, 0.0);
            } else {
                m[(i, j)] = C64::new(0.0, inv);
                m[(j, i)] = C64::new(0.0, -inv);
            }
        }
        m
    }

    pub(crate) fn coords_of(&self, m: &CMatrix) -> DVector<f64> {
        let n = self.dims.n();
        let mut out = DVector::zeros(self.len());
        for i in 0..n {
            out[i] = m[(i, i)].re;
        }
        let s = 2f64.sqrt();
        for (p, &(i, j)) in self.pairs.iter().enumerate() {
            out[n + 2 * p] = s * m[(i, j)].re;
            out[n + 2 * p + 1] = s * m[(i, j)].im;
        }
        out
    }

    /// Coordinates of X in this basis; an isometry between the trace inner
    /// product and the Euclidean one.
    pub fn coords(&self, x: &HermitianMatrix) -> DVector<f64> {
        self.coords_of(x.matrix())
    }

    pub fn from_coords(&self, v: &DVector<f64>) -> HermitianMatrix {
        let n = self.dims.n();
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(v[i], 0.0);
        }
        let inv = 1.0 / 2f64.sqrt();
        for (p, &(i, j)) in self.pairs.iter().enumerate() {
            let z = C64::new(v[n + 2 * p] * inv, v[n + 2 * p + 1] * inv);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
        HermitianMatrix::from_exact(self.dims, m)
    }
}

/// Role tags for materialized superoperators, named after the maps they
/// represent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuperOpKind {
    P,
    Q,
    R,
    TildeP,
    TildeQ,
    TildeR,
    W,
    TildeZ,
    S,
    TildeS,
    P5,
    Composite,
}

/// A linear map on H_N materialized as a real N²×N² matrix.
#[derive(Clone, Debug)]
pub struct SuperOperator {
    dims: BipartiteDims,
    pub kind: SuperOpKind,
    mat: DMatrix<f64>,
}

impl SuperOperator {
    /// Materialize a linear map: matrix[a][b] = Tr(B_a · T(B_b)).
    pub fn from_map(
        basis: &HermBasis,
        kind: SuperOpKind,
        f: impl Fn(&CMatrix) -> CMatrix,
    ) -> Self {
        let d = basis.len();
        let mut mat = DMatrix::zeros(d, d);
        for b in 0..d {
            let img = f(&basis.basis_matrix(b));
            mat.set_column(b, &basis.coords_of(&img));
        }
        Self { dims: basis.dims(), kind, mat }
    }

    pub fn identity(basis: &HermBasis) -> Self {
        Self {
            dims: basis.dims(),
            kind: SuperOpKind::Composite,
            mat: DMatrix::identity(basis.len(), basis.len()),
        }
    }

    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn apply(&self, basis: &HermBasis, x: &HermitianMatrix) -> HermitianMatrix {
        basis.from_coords(&(&self.mat * basis.coords(x)))
    }

    /// Frobenius deviation from symmetry.
    pub fn symmetry_residual(&self) -> f64 {
        (&self.mat - self.mat.transpose()).norm()
    }

    /// Eigenvalues ascending with eigenvector columns.
    pub fn symmetric_eigen(&self) -> (DVector<f64>, DMatrix<f64>) {
        linalg::sorted_symmetric_eigen(&self.mat)
    }

    /// Eigenvectors with |λ| ≤ tol·max|λ|, returned as Hermitian matrices
    /// orthonormal under the trace inner product.
    pub fn null_space(&self, basis: &HermBasis, tol: &Tolerances) -> NullSpaceResult {
        self.eigenspace_impl(basis, 0.0, tol.zero_tol)
    }

    /// Eigenvectors with |λ − target| ≤ tol·max|λ|.
    pub fn eigenspace(
        &self,
        basis: &HermBasis,
        target: f64,
        tol: f64,
    ) -> NullSpaceResult {
        self.eigenspace_impl(basis, target, tol)
    }

    fn eigenspace_impl(&self, basis: &HermBasis, target: f64, rel_tol: f64) -> NullSpaceResult {
        let (vals, vecs) = self.symmetric_eigen();
        let scale = vals
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()))
            .max(target.abs());
        let gap = rel_tol * scale;
        let mut members = Vec::new();
        let mut residuals = Vec::new();
        for k in 0..vals.len() {
            if (vals[k] - target).abs() <= gap {
                let col = vecs.column(k).into_owned();
                residuals.push((vals[k] - target).abs());
                members.push(basis.from_coords(&col));
            }
        }
        NullSpaceResult { dimension: members.len(), basis: members, residuals }
    }

    /// Pseudoinverse matrix through the spectral representation, with the
    /// shared relative zero threshold.
    pub fn pseudoinverse_matrix(&self, tol: &Tolerances) -> DMatrix<f64> {
        let (vals, vecs) = self.symmetric_eigen();
        let scale = vals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let thr = tol.zero_tol * scale;
        let d = vals.len();
        let mut out = DMatrix::zeros(d, d);
        for k in 0..d {
            if vals[k].abs() > thr {
                let col = vecs.column(k);
                out.ger(1.0 / vals[k], &col, &col, 1.0);
            }
        }
        out
    }

    /// Solve T x = b in the least-squares sense given the eigendecomposition
    /// threshold, without forming the pseudoinverse.
    pub(crate) fn solve_pinv(
        eig: &(DVector<f64>, DMatrix<f64>),
        tol: &Tolerances,
        b: &DVector<f64>,
    ) -> DVector<f64> {
        let (vals, vecs) = eig;
        let scale = vals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let thr = tol.zero_tol * scale;
        let mut x = DVector::zeros(b.len());
        for k in 0..vals.len() {
            if vals[k].abs() > thr {
                let col = vecs.column(k);
                x.axpy(col.dot(b) / vals[k], &col, 1.0);
            }
        }
        x
    }
}

impl std::ops::Add for &SuperOperator {
    type Output = SuperOperator;
    fn add(self, rhs: &SuperOperator) -> SuperOperator {
        assert_eq!(self.dims, rhs.dims);
        SuperOperator {
            dims: self.dims,
            kind: SuperOpKind::Composite,
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl std::ops::Sub for &SuperOperator {
    type Output = SuperOperator;
    fn sub(self, rhs: &SuperOperator) -> SuperOperator {
        assert_eq!(self.dims, rhs.dims);
        SuperOperator {
            dims: self.dims,
            kind: SuperOpKind::Composite,
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl std::ops::Mul for &SuperOperator {
    type Output = SuperOperator;
    fn mul(self, rhs: &SuperOperator) -> SuperOperator {
        assert_eq!(self.dims, rhs.dims);
        SuperOperator {
            dims: self.dims,
            kind: SuperOpKind::Composite,
            mat: &self.mat * &rhs.mat,
        }
    }
}

/// Orthonormal basis of a null space or eigenspace, as Hermitian matrices.
#[derive(Clone, Debug)]
pub struct NullSpaceResult {
    pub dimension: usize,
    pub basis: Vec<HermitianMatrix>,
    pub residuals: Vec<f64>,
}

/// The compressions {𝐏, 𝐐, 𝐑} of H_N induced by a state.
pub struct ProjectorTriple {
    pub p: SuperOperator,
    pub q: SuperOperator,
    pub r: SuperOperator,
}

/// 𝐏X = PXP, 𝐐X = QXQ, 𝐑 = 𝐈 − 𝐏 − 𝐐 for the image/kernel projectors of ρ.
pub fn build_projectors(
    rho: &HermitianMatrix,
    basis: &HermBasis,
    tol: &Tolerances,
) -> ProjectorTriple {
    let (p, q) = rho.image_kernel_projectors(tol);
    build_compressions(basis, p.matrix().clone(), q.matrix().clone(), false)
}

/// 𝐏̃X = (P̃XᴾP̃)ᴾ and companions, with P̃, Q̃ the image/kernel projectors of ρᴾ.
pub fn build_tilde_projectors(
    rho: &HermitianMatrix,
    basis: &HermBasis,
    tol: &Tolerances,
) -> ProjectorTriple {
    let (p, q) = rho.partial_transpose().image_kernel_projectors(tol);
    build_compressions(basis, p.matrix().clone(), q.matrix().clone(), true)
}

fn build_compressions(
    basis: &HermBasis,
    p: CMatrix,
    q: CMatrix,
    tilde: bool,
) -> ProjectorTriple {
    let dims = basis.dims();
    let compress = |k: &CMatrix, x: &CMatrix| -> CMatrix {
        if tilde {
            partial_transpose_matrix(dims, &(k * partial_transpose_matrix(dims, x) * k))
        } else {
            k * x * k
        }
    };
    let pk = if tilde { SuperOpKind::TildeP } else { SuperOpKind::P };
    let qk = if tilde { SuperOpKind::TildeQ } else { SuperOpKind::Q };
    let rk = if tilde { SuperOpKind::TildeR } else { SuperOpKind::R };
    let pop = SuperOperator::from_map(basis, pk, |x| compress(&p, x));
    let qop = SuperOperator::from_map(basis, qk, |x| compress(&q, x));
    let mut rop = &SuperOperator::identity(basis) - &pop;
    rop = &rop - &qop;
    rop.kind = rk;
    ProjectorTriple { p: pop, q: qop, r: rop }
}

/// Result of the eigenvalue-2 multiplicity test on 𝐏+𝐏̃.
#[derive(Clone, Debug)]
pub struct ExtremalityReport {
    pub is_extremal: bool,
    pub multiplicity_of_two: usize,
}

/// ρ is extremal in the PPT set iff A = ρ is the only solution of
/// (𝐏+𝐏̃)A = 2A, i.e. the eigenvalue 2 is simple.
pub fn extremality_test(rho: &HermitianMatrix, tol: &Tolerances) -> Result<ExtremalityReport> {
    let min_rho = rho.min_eigenvalue(tol);
    if min_rho < tol.pos_tol {
        return Err(Error::NotPpt(min_rho));
    }
    let min_pt = rho.partial_transpose().min_eigenvalue(tol);
    if min_pt < tol.pos_tol {
        return Err(Error::NotPpt(min_pt));
    }
    let basis = HermBasis::new(rho.dims());
    let p = build_projectors(rho, &basis, tol).p;
    let tp = build_tilde_projectors(rho, &basis, tol).p;
    let sum = &p + &tp;
    let (vals, _) = sum.symmetric_eigen();
    let multiplicity = vals
        .iter()
        .filter(|&&v| (v - 2.0).abs() < EIGENVALUE_TWO_GAP)
        .count();
    Ok(ExtremalityReport { is_extremal: multiplicity == 1, multiplicity_of_two: multiplicity })
}
