//! Building PPT states and reconstructing them from product vectors in the
//! kernel.
//!
//! A product vector w = u⊗v in Ker ρ forces z†ρw = 0 for every z, and through
//! the identity (x⊗v)†ρ(u⊗y) = (x⊗y*)†ρᴾ(u⊗v*) it also forces ρᴾw̃ = 0 with
//! w̃ = u⊗v*. Splitting the probe vectors z = x⊗y over a product basis into
//! Hermitian matrices B = A + A† and C = i(A − A†) turns these conditions
//! into real linear constraints Tr(ρB) = Tr(ρC) = 0. Counting the number of
//! independent constraints and solving the homogeneous system reproduces and
//! reconstructs the low-rank states from their kernel data.

use nalgebra::DMatrix;

use crate::hermitian::{tensor_product, BipartiteDims, CMatrix, CVector, HermitianMatrix, C64};
use crate::linalg;
use crate::products::{orth_standard_vectors, OrthParams, ProductVector, ProductVectorSet};
use crate::superop::HermBasis;
use crate::{Error, Result, Tolerances};

/// The projection state ρ = (1 − Σ wᵢwᵢ†)/(N − 5) over an unextendible
/// orthogonal product basis in 3×3. For positive parameters the five vectors
/// are real, so ρᴾ = ρ, the rank pair is (4, 4), and the state is extremal.
pub fn upb_state(params: &OrthParams) -> HermitianMatrix {
    upb_state_from(&orth_standard_vectors(params))
}

pub(crate) fn upb_state_from(set: &ProductVectorSet) -> HermitianMatrix {
    let dims = set.dims;
    let n = dims.n();
    let mut m = CMatrix::identity(n, n);
    for w in set.assembled() {
        m.gerc(C64::new(-1.0, 0.0), &w, &w, C64::new(1.0, 0.0));
    }
    HermitianMatrix::from_exact(dims, m.scale(1.0 / (n - set.len()) as f64))
}

/// A separable rank-(4,4) fixture together with the six product vectors in
/// its kernel.
pub struct SeparableFixture {
    pub rho: HermitianMatrix,
    pub kernel_products: ProductVectorSet,
}

/// The standard separable rank-4 state built from the four product vectors
/// e₁⊗e₁, e₂⊗e₂, e₃⊗e₃, (1,1,1)⊗(1,1,1) with equal weights. All factors are
/// real, so ρᴾ = ρ. Its kernel contains exactly six product vectors, listed
/// explicitly; they are non-generic (dependent triples exist on both sides).
pub fn separable_rank4_fixture() -> SeparableFixture {
    let dims = BipartiteDims::new(3, 3).unwrap();
    let col = |x: f64, y: f64, z: f64| {
        CVector::from_vec(vec![C64::new(x, 0.0), C64::new(y, 0.0), C64::new(z, 0.0)])
    };
    let phis = [
        col(1.0, 0.0, 0.0),
        col(0.0, 1.0, 0.0),
        col(0.0, 0.0, 1.0),
        col(1.0, 1.0, 1.0),
    ];
    let products: Vec<ProductVector> = phis
        .iter()
        .map(|f| ProductVector::unit_normalized(f.clone(), f.clone()).unwrap())
        .collect();
    let set = ProductVectorSet::new(dims, products).unwrap();
    let rho = separable_state(&set, None).unwrap();

    let us = [
        col(0.0, 0.0, 1.0),
        col(0.0, 1.0, 0.0),
        col(0.0, -1.0, 1.0),
        col(1.0, 0.0, 0.0),
        col(1.0, 0.0, -1.0),
        col(1.0, -1.0, 0.0),
    ];
    let vs = [
        col(1.0, -1.0, 0.0),
        col(1.0, 0.0, -1.0),
        col(1.0, 0.0, 0.0),
        col(0.0, 1.0, -1.0),
        col(0.0, 1.0, 0.0),
        col(0.0, 0.0, 1.0),
    ];
    let kernel = us
        .into_iter()
        .zip(vs)
        .map(|(u, v)| ProductVector::unit_normalized(u, v).unwrap())
        .collect();
    SeparableFixture {
        rho,
        kernel_products: ProductVectorSet::new(dims, kernel).unwrap(),
    }
}

/// Convex combination of pure product states, Σ λᵢ ŵᵢŵᵢ†. PPT by
/// construction; the rank is generically the dimension of the span.
pub fn separable_state(
    products: &ProductVectorSet,
    weights: Option<&[f64]>,
) -> Result<HermitianMatrix> {
    if products.is_empty() {
        return Err(Error::EmptySet);
    }
    let k = products.len();
    let weights: Vec<f64> = match weights {
        Some(w) => {
            if w.len() != k {
                return Err(Error::DimensionMismatch { expected: k, got: w.len() });
            }
            if w.iter().any(|&x| x <= 0.0) {
                return Err(Error::DegenerateConfiguration(
                    "mixture weights must be positive".into(),
                ));
            }
            let s: f64 = w.iter().sum();
            w.iter().map(|x| x / s).collect()
        }
        None => vec![1.0 / k as f64; k],
    };
    let n = products.dims.n();
    let mut m = CMatrix::zeros(n, n);
    for (pv, &lam) in products.vectors.iter().zip(weights.iter()) {
        let mut w = tensor_product(&pv.u, &pv.v);
        let norm = w.norm();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        w /= C64::new(norm, 0.0);
        m.gerc(C64::new(lam, 0.0), &w, &w, C64::new(1.0, 0.0));
    }
    HermitianMatrix::from_exact(products.dims, m).normalized_trace()
}

/// Which of the two constraint families a row belongs to: probes of the
/// kernel condition z†ρw = 0, or of the partial-transpose condition through
/// (x⊗v)†ρ(u⊗y) = 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintFamily {
    Kernel,
    PartialTranspose,
}

/// Hermitian (B) or anti-Hermitian-derived (C) half of a constraint pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintPart {
    Sym,
    Antisym,
}

/// Provenance of one constraint row.
#[derive(Clone, Copy, Debug)]
pub struct ConstraintTag {
    /// Index of the kernel product vector.
    pub vector: usize,
    /// Probe indices (a, b) of the product basis vector x_a⊗y_b.
    pub a: usize,
    pub b: usize,
    pub family: ConstraintFamily,
    pub part: ConstraintPart,
}

/// The real linear system Tr(ρB) = 0 induced by product vectors in the
/// kernel, with one row per Hermitian constraint matrix in basis coordinates.
pub struct ConstraintSystem {
    pub dims: BipartiteDims,
    /// Rows of unit Frobenius norm.
    pub rows: DMatrix<f64>,
    pub tags: Vec<ConstraintTag>,
}

impl ConstraintSystem {
    /// Number of independent rows under the shared relative threshold.
    pub fn independent_count(&self, tol: &Tolerances) -> usize {
        linalg::rank_and_nullspace(&self.rows, tol.zero_tol, false).0
    }
}

/// Enumerate the constraints imposed on ρ by each product vector w = u⊗v in
/// its kernel, probing with the standard product basis x_a⊗y_b: the Kernel
/// family are the rows of (x_a⊗y_b)†ρw = 0 and the PartialTranspose family
/// the rows of (x_a⊗v)†ρ(u⊗y_b) = 0, each split into a Hermitian pair.
/// Identically-zero matrices are skipped.
pub fn kernel_constraint_system(products: &ProductVectorSet) -> Result<ConstraintSystem> {
    if products.is_empty() {
        return Err(Error::EmptySet);
    }
    let dims = products.dims;
    let (na, nb) = (dims.na(), dims.nb());
    let basis = HermBasis::new(dims);
    let mut rows: Vec<nalgebra::DVector<f64>> = Vec::new();
    let mut tags = Vec::new();
    let push = |a_mat: &CMatrix, tag_base: (usize, usize, usize, ConstraintFamily),
                    rows: &mut Vec<nalgebra::DVector<f64>>,
                    tags: &mut Vec<ConstraintTag>| {
        let bm = a_mat + a_mat.adjoint();
        let cm = (a_mat - a_mat.adjoint()).map(|z| C64::new(-z.im, z.re));
        for (m, part) in [(bm, ConstraintPart::Sym), (cm, ConstraintPart::Antisym)] {
            let norm = m.norm();
            if norm < 1e-12 {
                continue;
            }
            rows.push(basis.coords_of(&m) / norm);
            tags.push(ConstraintTag {
                vector: tag_base.0,
                a: tag_base.1,
                b: tag_base.2,
                family: tag_base.3,
                part,
            });
        }
    };
    for (k, pv) in products.vectors.iter().enumerate() {
        let w = tensor_product(&pv.u, &pv.v);
        for a in 0..na {
            for b in 0..nb {
                let mut z = CVector::zeros(dims.n());
                z[dims.flat(a, b)] = C64::new(1.0, 0.0);
                // Tr(ρ·w z†) = z†ρw
                let a_mat = &w * z.adjoint();
                push(&a_mat, (k, a, b, ConstraintFamily::Kernel), &mut rows, &mut tags);
            }
        }
        for a in 0..na {
            for b in 0..nb {
                let mut x = CVector::zeros(na);
                x[a] = C64::new(1.0, 0.0);
                let mut y = CVector::zeros(nb);
                y[b] = C64::new(1.0, 0.0);
                // Tr(ρ·(u⊗y)(x⊗v)†) = (x⊗v)†ρ(u⊗y)
                let left = tensor_product(&pv.u, &y);
                let right = tensor_product(&x, &pv.v);
                let a_mat = &left * right.adjoint();
                push(
                    &a_mat,
                    (k, a, b, ConstraintFamily::PartialTranspose),
                    &mut rows,
                    &mut tags,
                );
            }
        }
    }
    let nrows = rows.len();
    let mut mat = DMatrix::zeros(nrows, basis.len());
    for (i, r) in rows.iter().enumerate() {
        mat.row_mut(i).copy_from(&r.transpose());
    }
    Ok(ConstraintSystem { dims, rows: mat, tags })
}

/// Outcome of solving the kernel constraint system.
#[derive(Clone, Debug)]
pub struct ReconstructionResult {
    pub num_independent_constraints: usize,
    /// N² − rank: dimension of the homogeneous solution space.
    pub solution_space_dim: usize,
    /// Present only when the solution space is one-dimensional: the unique
    /// solution, trace-normalized with the largest-magnitude eigenvalue
    /// positive.
    pub state: Option<HermitianMatrix>,
    pub is_ppt: Option<bool>,
    pub rank_pair: Option<(usize, usize)>,
}

/// Solve the homogeneous constraint system of a product-vector set. The
/// reconstruction is unique exactly when there are N²−1 independent
/// constraints.
pub fn reconstruct_from_kernel(
    products: &ProductVectorSet,
    tol: &Tolerances,
) -> Result<ReconstructionResult> {
    let cs = kernel_constraint_system(products)?;
    let basis = HermBasis::new(cs.dims);
    let (rank, null) = linalg::rank_and_nullspace(&cs.rows, tol.zero_tol, true);
    let solution_space_dim = basis.len() - rank;
    debug_assert_eq!(null.len(), solution_space_dim);
    if solution_space_dim != 1 {
        return Ok(ReconstructionResult {
            num_independent_constraints: rank,
            solution_space_dim,
            state: None,
            is_ppt: None,
            rank_pair: None,
        });
    }
    let mut m = basis.from_coords(&null[0]);
    let sd = m.spectral_decompose(tol);
    let lead = sd
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &v| if v.abs() > acc.abs() { v } else { acc });
    if lead < 0.0 {
        m = m.scale(-1.0);
    }
    let state = match m.normalized_trace() {
        Ok(s) => s,
        Err(_) => m.scale(1.0 / m.frobenius_norm()),
    };
    let is_ppt = state.is_ppt(tol);
    let rank_pair = state.rank_pair(tol);
    Ok(ReconstructionResult {
        num_independent_constraints: rank,
        solution_space_dim: 1,
        state: Some(state),
        is_ppt: Some(is_ppt),
        rank_pair: Some(rank_pair),
    })
}

/// One row of the constraint census: the first `num_vectors` vectors of the
/// set yield `independent` constraints and `dof` remaining real parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CensusEntry {
    pub num_vectors: usize,
    pub independent: usize,
    pub dof: usize,
}

/// Cumulative constraint census as vectors are added in order.
pub fn constraint_census(
    products: &ProductVectorSet,
    from: usize,
    tol: &Tolerances,
) -> Result<Vec<CensusEntry>> {
    let cs = kernel_constraint_system(products)?;
    let total = products.dims.n() * products.dims.n();
    let mut out = Vec::new();
    for k in from..=products.len() {
        let nrows = cs.tags.iter().filter(|t| t.vector < k).count();
        let sub = cs.rows.rows(0, nrows).into_owned();
        let (rank, _) = linalg::rank_and_nullspace(&sub, tol.zero_tol, false);
        out.push(CensusEntry { num_vectors: k, independent: rank, dof: total - rank });
    }
    Ok(out)
}

/// Retract a nearby matrix onto the rank-(m, n) PPT stratum: Newton steps on
/// the defect equations QxQ = 0, Q̃xᴾQ̃ = 0 (least-norm correction δ solving
/// 𝐐δ = −𝐐x, 𝐐̃δ = −𝐐̃x jointly), followed by a spectral cleanup of the
/// kernel dust. Converges quadratically for inputs within the reach of the
/// stratum, e.g. the second-order leakage of a tangent step.
pub fn retract_to_rank_pair(
    rho: &HermitianMatrix,
    rank_pair: (usize, usize),
    tol: &Tolerances,
    max_sweeps: usize,
) -> Result<HermitianMatrix> {
    let dims = rho.dims();
    let basis = HermBasis::new(dims);
    let d = basis.len();
    let rank_informed_p = |m: &HermitianMatrix, rank: usize| -> CMatrix {
        let mut sd = m.spectral_decompose(tol);
        sd.rank = rank;
        sd.filtered_rebuild(dims, |_| 1.0).into_matrix()
    };
    let mut x = rho.normalized_trace()?;
    let mut converged = false;
    for _ in 0..max_sweeps {
        let n = dims.n();
        let q = CMatrix::identity(n, n) - rank_informed_p(&x, rank_pair.0);
        let xpt = x.partial_transpose();
        let tq = CMatrix::identity(n, n) - rank_informed_p(&xpt, rank_pair.1);
        let defect_rho = &q * x.matrix() * &q;
        let defect_pt = &tq * xpt.matrix() * &tq;
        let scale = x.frobenius_norm();
        if defect_rho.norm().max(defect_pt.norm()) < 0.05 * tol.zero_tol * scale {
            converged = true;
            break;
        }
        let pt_of = |m: &CMatrix| crate::hermitian::partial_transpose_matrix(dims, m);
        let qop = crate::superop::SuperOperator::from_map(
            &basis,
            crate::superop::SuperOpKind::Q,
            |m| &q * m * &q,
        );
        let tqop = crate::superop::SuperOperator::from_map(
            &basis,
            crate::superop::SuperOpKind::TildeQ,
            |m| pt_of(&(&tq * pt_of(m) * &tq)),
        );
        let mut stacked = nalgebra::DMatrix::zeros(2 * d, d);
        stacked.rows_mut(0, d).copy_from(qop.matrix());
        stacked.rows_mut(d, d).copy_from(tqop.matrix());
        let mut rhs = nalgebra::DVector::zeros(2 * d);
        rhs.rows_mut(0, d)
            .copy_from(&(-basis.coords_of(&defect_rho)));
        rhs.rows_mut(d, d)
            .copy_from(&(-basis.coords_of(&pt_of(&defect_pt))));
        let svd = stacked.svd(true, true);
        let delta = svd
            .solve(&rhs, tol.zero_tol)
            .map_err(|e| Error::DegenerateConfiguration(e.to_string()))?;
        x = (&x + &basis.from_coords(&delta)).normalized_trace()?;
    }
    if !converged {
        return Err(Error::DegenerateConfiguration(format!(
            "retraction to rank pair {rank_pair:?} did not converge"
        )));
    }
    // zero out the residual kernel dust and verify
    let mut sd = x.spectral_decompose(tol);
    sd.rank = rank_pair.0;
    x = sd.filtered_rebuild(dims, |lam| lam.max(0.0));
    let mut sd = x.partial_transpose().spectral_decompose(tol);
    sd.rank = rank_pair.1;
    x = sd
        .filtered_rebuild(dims, |lam| lam.max(0.0))
        .partial_transpose()
        .normalized_trace()?;
    let got = x.rank_pair(tol);
    if got != rank_pair
        || x.min_eigenvalue(tol) < tol.pos_tol
        || x.partial_transpose().min_eigenvalue(tol) < tol.pos_tol
    {
        return Err(Error::DegenerateConfiguration(format!(
            "retraction landed on rank pair {got:?} instead of {rank_pair:?}"
        )));
    }
    Ok(x)
}

/// Matrix elements ρ̃_{ij;kl} = (uᵢ⊗vⱼ)†ρ(u_k⊗v_l) relative to the product
/// basis e_ij = uᵢ⊗vⱼ built from two independent factor triples.
pub fn matrix_in_product_basis(
    rho: &HermitianMatrix,
    us: &[CVector; 3],
    vs: &[CVector; 3],
) -> Result<CMatrix> {
    let dims = rho.dims();
    if dims.na() != 3 || dims.nb() != 3 {
        return Err(Error::DimensionMismatch { expected: 9, got: dims.n() });
    }
    let e = product_basis(us, vs);
    for trip in [us, vs] {
        let m = CMatrix::from_columns(&trip.to_vec());
        if m.determinant().norm() < 1e-10 {
            return Err(Error::Genericity("dependent factor triple".into()));
        }
    }
    Ok(CMatrix::from_fn(9, 9, |i, j| {
        rho.expectation_bilinear(&e[i], &e[j])
    }))
}

/// Rebuild ρ from its product-basis matrix elements through the dual basis:
/// ρ = Σ e^I ρ̃_{IJ} (e^J)† with e^I = Σ_J g^{JI} e_J and g the Gram matrix.
pub fn matrix_from_product_basis(
    dims: BipartiteDims,
    rho_tilde: &CMatrix,
    us: &[CVector; 3],
    vs: &[CVector; 3],
) -> Result<HermitianMatrix> {
    let e = product_basis(us, vs);
    let emat = CMatrix::from_columns(&e);
    let g = emat.adjoint() * &emat;
    let ginv = g
        .try_inverse()
        .ok_or_else(|| Error::Genericity("product basis is singular".into()))?;
    let dual = &emat * ginv;
    HermitianMatrix::new(dims, &dual * rho_tilde * dual.adjoint())
}

fn product_basis(us: &[CVector; 3], vs: &[CVector; 3]) -> Vec<CVector> {
    let mut e = Vec::with_capacity(9);
    for u in us {
        for v in vs {
            e.push(tensor_product(u, v));
        }
    }
    e
}

impl HermitianMatrix {
    /// x†ρy for arbitrary vectors.
    pub(crate) fn expectation_bilinear(&self, x: &CVector, y: &CVector) -> C64 {
        x.dotc(&(self.matrix() * y))
    }
}
