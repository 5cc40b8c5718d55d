//! Real dense helpers shared by the superoperator and constraint machinery.

use nalgebra::{DMatrix, DVector};

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
pub(crate) fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let se = nalgebra::linalg::SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals = DVector::from_fn(n, |r, _| se.eigenvalues[idx[r]]);
    let vecs = DMatrix::from_fn(n, n, |r, c| se.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Modified Gram–Schmidt; vectors with remaining norm below `drop_tol` are
/// discarded.
pub(crate) fn mgs_orthonormalize(vectors: Vec<DVector<f64>>, drop_tol: f64) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    for mut v in vectors {
        for _ in 0..2 {
            for b in &out {
                let c = v.dot(b);
                v.axpy(-c, b, 1.0);
            }
        }
        let n = v.norm();
        if n > drop_tol {
            out.push(v / n);
        }
    }
    out
}

/// Remove the components of `v` along an orthonormal family.
pub(crate) fn project_out(v: &mut DVector<f64>, basis: &[DVector<f64>]) {
    for b in basis {
        let c = v.dot(b);
        v.axpy(-c, b, 1.0);
    }
}

/// Numerical rank of a row matrix under a relative singular-value threshold,
/// optionally with an orthonormal basis of the (right) null space.
///
/// Rows may be fewer than columns; the matrix is padded with zero rows so the
/// SVD exposes the full null space.
pub(crate) fn rank_and_nullspace(
    rows: &DMatrix<f64>,
    rel_tol: f64,
    want_null: bool,
) -> (usize, Vec<DVector<f64>>) {
    let ncols = rows.ncols();
    let m = if rows.nrows() >= ncols {
        rows.clone()
    } else {
        let mut padded = DMatrix::zeros(ncols, ncols);
        padded.rows_mut(0, rows.nrows()).copy_from(rows);
        padded
    };
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("svd requested v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let smax = svd.singular_values[order[0]];
    let thr = rel_tol * smax;
    let rank = order
        .iter()
        .filter(|&&i| svd.singular_values[i] > thr)
        .count();
    let null = if want_null {
        order[rank..]
            .iter()
            .map(|&i| vt.row(i).transpose().into_owned())
            .collect()
    } else {
        Vec::new()
    };
    (rank, null)
}

/// Largest principal angle (radians) between two subspaces given by
/// orthonormal spanning families, through the sine (residual) formulation,
/// which stays accurate for small angles. Returns `None` when dimensions
/// differ.
pub(crate) fn max_principal_angle(a: &[DVector<f64>], b: &[DVector<f64>]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    if a.is_empty() {
        return Some(0.0);
    }
    let dim = a[0].len();
    let k = a.len();
    let mut resid = DMatrix::zeros(dim, k);
    for (j, bj) in b.iter().enumerate() {
        let mut r = bj.clone();
        for ai in a {
            let c = ai.dot(bj);
            r.axpy(-c, ai, 1.0);
        }
        resid.set_column(j, &r);
    }
    let svd = resid.svd(false, false);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    Some(smax.clamp(-1.0, 1.0).asin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_padded_short_matrix() {
        // one row in R^4: rank 1, null space dimension 3
        let rows = DMatrix::from_row_slice(1, 4, &[1.0, 1.0, 0.0, 0.0]);
        let (rank, null) = rank_and_nullspace(&rows, 1e-9, true);
        assert_eq!(rank, 1);
        assert_eq!(null.len(), 3);
        for v in &null {
            assert!(rows.row(0).transpose().dot(v).abs() < 1e-12);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mgs_drops_dependent_vectors() {
        let v1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let v2 = DVector::from_vec(vec![1.0, 1e-12, 0.0]);
        let v3 = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        let basis = mgs_orthonormalize(vec![v1, v2, v3], 1e-8);
        assert_eq!(basis.len(), 2);
    }
}
