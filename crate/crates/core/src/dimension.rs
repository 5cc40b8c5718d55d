//! Closed-form dimension formulas and numerically measured surface
//! dimensions for fixed-rank PPT surfaces.
//!
//! The set of r-dimensional subspaces of ℂ^N has real dimension
//! N² − r² − (N−r)² = 2r(N−r). Counting the constraints of the tangent
//! equations gives the lower bounds d ≥ N² − (N−m)² − (N−n)² − 1 for the free
//! surface and d ≥ m² − (N−n)² − 1 with the image fixed; the measured
//! dimensions meet the bounds except at the very lowest ranks.

use serde::Serialize;

use crate::hermitian::{BipartiteDims, HermitianMatrix};
use crate::parallel;
use crate::perturb::{tangent_fixed_image, tangent_rank_preserving, TangentMode};
use crate::{Result, Tolerances};

/// Real dimension 2r(N−r) of the set of r-dimensional subspaces of ℂ^N.
pub fn subspace_set_dimension(n: usize, r: usize) -> usize {
    2 * r * (n - r)
}

/// Constraint-counting lower bound for the dimension of the rank-(m, n)
/// surface at a generic point; may be negative.
pub fn dimension_bound(n: usize, m: usize, k: usize, mode: TangentMode) -> i64 {
    let (n, m, k) = (n as i64, m as i64, k as i64);
    match mode {
        TangentMode::Free => n * n - (n - m) * (n - m) - (n - k) * (n - k) - 1,
        TangentMode::FixedImage => m * m - (n - k) * (n - k) - 1,
    }
}

/// A measured surface dimension next to its counting bound.
#[derive(Clone, Debug, Serialize)]
pub struct CensusRow {
    pub dims: BipartiteDims,
    pub rank_pair: (usize, usize),
    /// Tangent dimension with the trivial direction excluded.
    pub measured_dim: usize,
    pub bound: i64,
    pub equality: bool,
    pub mode: &'static str,
}

fn mode_name(mode: TangentMode) -> &'static str {
    match mode {
        TangentMode::Free => "free",
        TangentMode::FixedImage => "fixed-image",
    }
}

/// Measure the tangent dimension of the surface through ρ and compare with
/// the counting bound.
pub fn measure_dimension(
    rho: &HermitianMatrix,
    mode: TangentMode,
    tol: &Tolerances,
) -> Result<CensusRow> {
    let rank_pair = rho.rank_pair(tol);
    let tangent = match mode {
        TangentMode::Free => tangent_rank_preserving(rho, tol),
        TangentMode::FixedImage => tangent_fixed_image(rho, tol),
    };
    let bound = dimension_bound(rho.dims().n(), rank_pair.0, rank_pair.1, mode);
    Ok(CensusRow {
        dims: rho.dims(),
        rank_pair,
        measured_dim: tangent.dimension,
        bound,
        equality: tangent.dimension as i64 == bound,
        mode: mode_name(mode),
    })
}

/// Batch driver over `measure_dimension` with deterministic row order.
pub fn census_table(
    states: &[HermitianMatrix],
    mode: TangentMode,
    tol: &Tolerances,
) -> Result<Vec<CensusRow>> {
    let rows = parallel::par_map(states.len(), |k| measure_dimension(&states[k], mode, tol));
    rows.into_iter().collect()
}
