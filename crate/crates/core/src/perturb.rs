//! Tangent spaces of fixed-rank PPT surfaces and the explicit construction of
//! rank-(5,5) states infinitesimally close to a rank-(4,4) state.
//!
//! A traceless Hermitian direction A preserves both ranks to first order in
//! ρ' = ρ + εA exactly when (𝐐+𝐐̃)A = 0; it preserves Img ρ (but only the rank
//! of ρᴾ) when (𝐈−𝐏+𝐐̃)A = 0. The rank-increasing step compresses to a rank
//! one matrix on the kernel, QAQ = α ww†, with the partial-transpose
//! compression β zz† tied to it by α = β and |⟨wᵢ, w⟩| = |⟨wᵢ, z⟩|: the z
//! coefficients differ from the w coefficients only by phases, of which four
//! are free and the fifth is pinned by the sixth kernel product vector.

use nalgebra::DVector;

use crate::hermitian::{BipartiteDims, CVector, HermitianMatrix, C64};
use crate::linalg;
use crate::products::{
    orth_standard_vectors, sixth_product_vector, to_standard_form, OrthParams, ProductVector,
    ProductVectorSet, StandardFormParams,
};
use crate::states::upb_state_from;
use crate::superop::{build_projectors, build_tilde_projectors, HermBasis, SuperOpKind, SuperOperator};
use crate::{Error, Result, Tolerances};

/// Which tangent space of a fixed-rank surface to work in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TangentMode {
    /// Preserve the ranks of ρ and ρᴾ: (𝐐+𝐐̃)A = 0.
    Free,
    /// Preserve Img ρ and the rank of ρᴾ: (𝐈−𝐏+𝐐̃)A = 0.
    FixedImage,
}

/// A normalized perturbation direction.
#[derive(Clone, Debug)]
pub struct PerturbationDirection {
    pub a: HermitianMatrix,
    pub traceless: bool,
}

impl PerturbationDirection {
    /// Normalize to ‖A‖_F = 1, subtracting the trace component along ρ when
    /// requested.
    pub fn new(a: HermitianMatrix, make_traceless_against: Option<&HermitianMatrix>) -> Self {
        let mut a = a;
        if let Some(rho) = make_traceless_against {
            let t = a.trace();
            a = HermitianMatrix::lin_comb(1.0, &a, -t, rho);
        }
        let n = a.frobenius_norm();
        let a = if n > 0.0 { a.scale(1.0 / n) } else { a };
        let traceless = a.trace().abs() <= 1e-12;
        Self { a, traceless }
    }
}

/// An orthonormal tangent basis with the trivial direction A = ρ projected
/// out. `raw_dimension` is the null-space dimension before removal.
#[derive(Debug)]
pub struct TangentSpace {
    pub dimension: usize,
    pub raw_dimension: usize,
    pub basis: Vec<HermitianMatrix>,
    pub residuals: Vec<f64>,
}

/// The constraint operator of a tangent mode as a materialized superoperator.
pub fn tangent_operator(
    rho: &HermitianMatrix,
    basis: &HermBasis,
    mode: TangentMode,
    tol: &Tolerances,
) -> SuperOperator {
    let plain = build_projectors(rho, basis, tol);
    let tilde = build_tilde_projectors(rho, basis, tol);
    match mode {
        TangentMode::Free => &plain.q + &tilde.q,
        TangentMode::FixedImage => &(&SuperOperator::identity(basis) - &plain.p) + &tilde.q,
    }
}

fn tangent_space(rho: &HermitianMatrix, mode: TangentMode, tol: &Tolerances) -> TangentSpace {
    let basis = HermBasis::new(rho.dims());
    let op = tangent_operator(rho, &basis, mode, tol);
    let null = op.null_space(&basis, tol);
    let raw_dimension = null.dimension;
    let rho_hat = basis.coords(rho);
    let rho_hat = &rho_hat / rho_hat.norm();
    let mut coords: Vec<DVector<f64>> = null.basis.iter().map(|m| basis.coords(m)).collect();
    for v in coords.iter_mut() {
        let c = v.dot(&rho_hat);
        v.axpy(-c, &rho_hat, 1.0);
    }
    let ortho = linalg::mgs_orthonormalize(coords, 1e-8);
    let residuals = ortho.iter().map(|v| (op.matrix() * v).norm()).collect();
    let members = ortho.iter().map(|v| basis.from_coords(v)).collect::<Vec<_>>();
    TangentSpace {
        dimension: members.len(),
        raw_dimension,
        basis: members,
        residuals,
    }
}

/// Directions preserving the ranks of ρ and ρᴾ, the tangent space of the
/// surface of rank-(m,n) PPT states. The reported dimension excludes the
/// trivial direction A = ρ.
pub fn tangent_rank_preserving(rho: &HermitianMatrix, tol: &Tolerances) -> TangentSpace {
    tangent_space(rho, TangentMode::Free, tol)
}

/// Directions keeping Img ρ fixed while preserving the rank of ρᴾ.
pub fn tangent_fixed_image(rho: &HermitianMatrix, tol: &Tolerances) -> TangentSpace {
    tangent_space(rho, TangentMode::FixedImage, tol)
}

/// A rank-(4,4) UPB state bundled with its kernel data: the five orthonormal
/// product vectors, the sixth kernel product vector, and its real expansion
/// coefficients in the w basis.
pub struct UpbContext {
    pub dims: BipartiteDims,
    pub rho: HermitianMatrix,
    pub vectors: ProductVectorSet,
    pub sixth: ProductVector,
    pub a_coeffs: [f64; 5],
}

impl UpbContext {
    pub fn from_orth_params(params: &OrthParams) -> Result<Self> {
        let set = orth_standard_vectors(params);
        let rho = upb_state_from(&set);
        let sf = to_standard_form(&set)?;
        let (p, q, r, s) = match sf.params {
            StandardFormParams::Dim3 { p, q, r, s } => (p, q, r, s),
            _ => unreachable!("orth form is 3x3"),
        };
        let sixth_std = sixth_product_vector(p, q, r, s)?;
        let va_inv = sf
            .va
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Genericity("standard-form transform not invertible".into()))?;
        let vb_inv = sf
            .vb
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Genericity("standard-form transform not invertible".into()))?;
        let mut sixth =
            ProductVector::unit_normalized(&va_inv * &sixth_std.u, &vb_inv * &sixth_std.v)?;
        // the reduction determines the sixth vector only up to a complex
        // scale; remove the common phase so its expansion coefficients in the
        // real kernel basis come out real
        let raw: Vec<C64> = {
            let w6 = sixth.assembled();
            set.assembled().iter().map(|w| w.dotc(&w6)).collect()
        };
        let lead = raw
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap();
        if lead.norm() > 0.0 {
            let phase = lead / C64::new(lead.norm(), 0.0);
            sixth.u /= phase;
        }
        let w6 = sixth.assembled();
        let mut a_coeffs = [0.0; 5];
        for (i, w) in set.assembled().iter().enumerate() {
            let c = w.dotc(&w6);
            if c.im.abs() > 1e-10 {
                return Err(Error::DegenerateConfiguration(format!(
                    "sixth-vector coefficient {i} has imaginary part {}",
                    c.im
                )));
            }
            a_coeffs[i] = c.re;
        }
        // the sixth vector must lie in the kernel span
        let mut resid = w6.clone();
        for (i, w) in set.assembled().iter().enumerate() {
            resid -= w * C64::new(a_coeffs[i], 0.0);
        }
        if resid.norm() > 1e-10 {
            return Err(Error::DegenerateConfiguration(format!(
                "sixth vector misses the kernel span by {}",
                resid.norm()
            )));
        }
        Ok(Self { dims: set.dims, rho, vectors: set, sixth, a_coeffs })
    }

    /// w = Σ cᵢ wᵢ for coefficients over the orthonormal kernel vectors.
    pub fn kernel_combination(&self, coeffs: &[C64; 5]) -> CVector {
        let ws = self.vectors.assembled();
        let mut out = CVector::zeros(self.dims.n());
        for (w, &c) in ws.iter().zip(coeffs.iter()) {
            out += w * c;
        }
        out
    }
}

/// Seed of the rank-4→5 construction: coefficients c of the added kernel
/// direction w, coefficients d = e^{iθ}c of the partner z, and the resolved
/// fifth phase.
#[derive(Clone, Debug)]
pub struct Rank45Seed {
    pub c: [C64; 5],
    pub d: [C64; 5],
    pub theta5: f64,
    /// True when |cᵢ| = |dᵢ| for all i and the modulus condition
    /// |Σaᵢcᵢ| = |Σaᵢdᵢ| holds within 1e-10.
    pub valid: bool,
}

impl Rank45Seed {
    /// Validity of an explicit (c, d) pair against the phase conditions.
    pub fn with_explicit_z(ctx: &UpbContext, c: [C64; 5], d: [C64; 5]) -> Self {
        let c = normalize_coeffs(c);
        let d = normalize_coeffs(d);
        let moduli_ok = c
            .iter()
            .zip(d.iter())
            .all(|(a, b)| (a.norm() - b.norm()).abs() <= 1e-10);
        let mc = combination_modulus(&ctx.a_coeffs, &c);
        let md = combination_modulus(&ctx.a_coeffs, &d);
        Self {
            c,
            d,
            theta5: 0.0,
            valid: moduli_ok && (mc - md).abs() <= 1e-10,
        }
    }
}

fn normalize_coeffs(mut c: [C64; 5]) -> [C64; 5] {
    let n: f64 = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        for z in c.iter_mut() {
            *z /= n;
        }
    }
    c
}

fn combination_modulus(a: &[f64; 5], c: &[C64; 5]) -> f64 {
    a.iter()
        .zip(c.iter())
        .map(|(&ai, &ci)| ci * ai)
        .fold(C64::new(0.0, 0.0), |acc, z| acc + z)
        .norm()
}

/// Build a valid seed: dᵢ = e^{iθᵢ}cᵢ for i ≤ 4 and θ₅ solved from the
/// modulus condition |Σaᵢcᵢ| = |Σaᵢdᵢ| by a scan-and-bisect root search.
pub fn rank45_seed(ctx: &UpbContext, c: [C64; 5], phases: [f64; 4]) -> Result<Rank45Seed> {
    let c = normalize_coeffs(c);
    if c.iter().map(|z| z.norm_sqr()).sum::<f64>() == 0.0 {
        return Err(Error::ZeroVector);
    }
    let target = combination_modulus(&ctx.a_coeffs, &c);
    let mut fixed = C64::new(0.0, 0.0);
    for i in 0..4 {
        fixed += c[i] * ctx.a_coeffs[i] * C64::from_polar(1.0, phases[i]);
    }
    let tail = c[4] * ctx.a_coeffs[4];
    let f = |theta: f64| (fixed + tail * C64::from_polar(1.0, theta)).norm() - target;
    let lo = (fixed.norm() - tail.norm()).abs();
    let hi = fixed.norm() + tail.norm();
    // scan for a bracket, then bisect
    let samples = 64;
    let mut theta5 = None;
    let mut prev = f(0.0);
    if prev.abs() <= 1e-12 {
        theta5 = Some(0.0);
    }
    for k in 1..=samples {
        let t = 2.0 * std::f64::consts::PI * k as f64 / samples as f64;
        let cur = f(t);
        if theta5.is_none() && cur.abs() <= 1e-12 {
            theta5 = Some(t);
        }
        if theta5.is_none() && prev * cur < 0.0 {
            let mut a = 2.0 * std::f64::consts::PI * (k - 1) as f64 / samples as f64;
            let mut b = t;
            let mut fa = prev;
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = f(m);
                if fm.abs() <= 1e-15 || (b - a) < 1e-12 {
                    break;
                }
                if fa * fm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            theta5 = Some(0.5 * (a + b));
        }
        prev = cur;
        if theta5.is_some() {
            break;
        }
    }
    let theta5 = theta5.ok_or(Error::InfeasiblePhase { target, lo, hi })?;
    let mut d = c;
    for i in 0..4 {
        d[i] = c[i] * C64::from_polar(1.0, phases[i]);
    }
    d[4] = c[4] * C64::from_polar(1.0, theta5);
    let seed = Rank45Seed {
        c,
        d,
        theta5,
        valid: (combination_modulus(&ctx.a_coeffs, &d) - target).abs() <= 1e-10,
    };
    Ok(seed)
}

/// Output of the rank-4→5 direction computation.
pub struct Rank45Direction {
    pub direction: PerturbationDirection,
    /// Slope of the new eigenvalue: QAQ = α ww†.
    pub alpha: f64,
    /// Partial-transpose slope β in Q̃AᴾQ̃ = β zz†; equals α up to roundoff.
    pub beta: f64,
    /// Nontrivial dimension of the solution space of the mode equation.
    pub solution_dim: usize,
    /// How many of the solutions are rank-(4,4)-preserving.
    pub rank_preserving_dim: usize,
}

/// Solve the mode equation and isolate the unique rank-increasing direction.
///
/// Free mode solves (𝐒+𝐒̃)A = 0 with 𝐒 = 𝐐−𝐖, 𝐒̃ = 𝐐̃−𝐙̃; fixed-image mode
/// solves (𝐏₅−𝐒̃)A = A with P₅ = P + W. The rank-preserving solutions are the
/// null directions of 𝐐+𝐐̃ inside the solution space; the orthogonal
/// remainder, expected one-dimensional, is the rank-increasing direction,
/// normalized traceless with α > 0.
pub fn rank45_direction(
    ctx: &UpbContext,
    seed: &Rank45Seed,
    mode: TangentMode,
    tol: &Tolerances,
) -> Result<Rank45Direction> {
    let dims = ctx.dims;
    let basis = HermBasis::new(dims);
    let w = ctx.kernel_combination(&seed.c);
    let z = ctx.kernel_combination(&seed.d);
    let ww = HermitianMatrix::outer(dims, &w)?;
    let zz = HermitianMatrix::outer(dims, &z)?;
    let plain = build_projectors(&ctx.rho, &basis, tol);
    let tilde = build_tilde_projectors(&ctx.rho, &basis, tol);
    let wk = ww.matrix().clone();
    let wop = SuperOperator::from_map(&basis, SuperOpKind::W, |x| &wk * x * &wk);
    let zk = zz.matrix().clone();
    let zop = SuperOperator::from_map(&basis, SuperOpKind::TildeZ, |x| {
        let xp = crate::hermitian::partial_transpose_matrix(dims, x);
        crate::hermitian::partial_transpose_matrix(dims, &(&zk * xp * &zk))
    });
    let s = &plain.q - &wop;
    let tilde_s = &tilde.q - &zop;
    let equation = match mode {
        TangentMode::Free => &s + &tilde_s,
        TangentMode::FixedImage => {
            let (p, _) = ctx.rho.image_kernel_projectors(tol);
            let p5 = p.matrix() + ww.matrix();
            let p5op = SuperOperator::from_map(&basis, SuperOpKind::P5, |x| &p5 * x * &p5);
            &(&p5op - &tilde_s) - &SuperOperator::identity(&basis)
        }
    };
    let null = equation.null_space(&basis, tol);

    // project out the trivial direction A = ρ
    let rho_hat = basis.coords(&ctx.rho);
    let rho_hat = &rho_hat / rho_hat.norm();
    let mut coords: Vec<DVector<f64>> = null.basis.iter().map(|m| basis.coords(m)).collect();
    for v in coords.iter_mut() {
        let c = v.dot(&rho_hat);
        v.axpy(-c, &rho_hat, 1.0);
    }
    let sol = linalg::mgs_orthonormalize(coords, 1e-8);
    let solution_dim = sol.len();

    // rank-preserving subspace: null directions of 𝐐+𝐐̃ within the span
    let qq = &plain.q + &tilde.q;
    let k = sol.len();
    if k == 0 {
        return Err(Error::NoRankIncreasingDirection { solution_dim });
    }
    let mut images = nalgebra::DMatrix::zeros(basis.len(), k);
    for (j, v) in sol.iter().enumerate() {
        images.set_column(j, &(qq.matrix() * v));
    }
    if images.norm() < 1e-9 {
        // every solution preserves the ranks
        return Err(Error::NoRankIncreasingDirection { solution_dim });
    }
    let (rank_increasing, null_coeffs) = linalg::rank_and_nullspace(&images, 1e-7, true);
    let rank_preserving_dim = null_coeffs.len();
    if rank_increasing != 1 {
        return Err(Error::NoRankIncreasingDirection { solution_dim });
    }
    // the rank-increasing direction is the orthogonal complement of the
    // preserved subspace inside the solution space
    let preserved: Vec<DVector<f64>> = null_coeffs
        .iter()
        .map(|coef| {
            let mut acc = DVector::zeros(basis.len());
            for (j, v) in sol.iter().enumerate() {
                acc.axpy(coef[j], v, 1.0);
            }
            acc
        })
        .collect();
    let preserved = linalg::mgs_orthonormalize(preserved, 1e-10);
    let mut remainder: Option<DVector<f64>> = None;
    for v in &sol {
        let mut r = v.clone();
        linalg::project_out(&mut r, &preserved);
        let norm = r.norm();
        if norm > 1e-6 {
            if let Some(prev) = &remainder {
                let mut r2 = r.clone();
                linalg::project_out(&mut r2, std::slice::from_ref(prev));
                if r2.norm() > 1e-6 {
                    return Err(Error::NoRankIncreasingDirection { solution_dim });
                }
            } else {
                remainder = Some(r / norm);
            }
        }
    }
    let direction = remainder.ok_or(Error::NoRankIncreasingDirection { solution_dim })?;
    let mut a = basis.from_coords(&direction);
    // sign convention α > 0, then traceless and unit norm
    let alpha = HermitianMatrix::outer(dims, &w)?.inner(&a);
    if alpha < 0.0 {
        a = a.scale(-1.0);
    }
    let dir = PerturbationDirection::new(a, Some(&ctx.rho));
    let alpha = ww.inner(&dir.a);
    let beta = {
        let apt = dir.a.partial_transpose();
        zz.inner(&apt)
    };
    // verify the rank-one compression QAQ = α ww†
    let (_, q) = ctx.rho.image_kernel_projectors(tol);
    let qaq = q.matrix() * dir.a.matrix() * q.matrix();
    let resid = (&qaq - ww.matrix().scale(alpha)).norm();
    if resid > 1e-7 {
        return Err(Error::NoRankIncreasingDirection { solution_dim });
    }
    Ok(Rank45Direction {
        direction: dir,
        alpha,
        beta,
        solution_dim,
        rank_preserving_dim,
    })
}

/// Report of a finite step ρ' = ρ + εA, trace-renormalized.
pub struct StepReport {
    pub rho_prime: HermitianMatrix,
    pub rank_pair: (usize, usize),
    pub is_ppt: bool,
    /// Smallest retained eigenvalues of ρ' and ρ'ᴾ.
    pub smallest_retained: (f64, f64),
    /// Smallest raw eigenvalues of ρ' and ρ'ᴾ.
    pub min_eigenvalues: (f64, f64),
}

pub fn step_finite(
    rho: &HermitianMatrix,
    direction: &PerturbationDirection,
    epsilon: f64,
    tol: &Tolerances,
) -> Result<StepReport> {
    let stepped = HermitianMatrix::lin_comb(1.0, rho, epsilon, &direction.a);
    let rho_prime = stepped.normalized_trace()?;
    Ok(report_of(rho_prime, tol))
}

fn report_of(rho_prime: HermitianMatrix, tol: &Tolerances) -> StepReport {
    let sd = rho_prime.spectral_decompose(tol);
    let pt = rho_prime.partial_transpose();
    let sd_pt = pt.spectral_decompose(tol);
    StepReport {
        rank_pair: (sd.rank, sd_pt.rank),
        is_ppt: sd.eigenvalues[0] >= tol.pos_tol && sd_pt.eigenvalues[0] >= tol.pos_tol,
        smallest_retained: (
            sd.smallest_retained().unwrap_or(0.0),
            sd_pt.smallest_retained().unwrap_or(0.0),
        ),
        min_eigenvalues: (sd.eigenvalues[0], sd_pt.eigenvalues[0]),
        rho_prime,
    }
}

/// Take a finite tangent step and retract the result onto the rank-pair
/// stratum. The raw stepped matrix misses the curved surface at second order
/// in ε (the untouched kernel directions dip below zero by O(ε²)), so the
/// genuine surface point is recovered by alternating spectral truncation.
/// Fails when no nearby point of the stratum exists, e.g. for a step against
/// the positivity of the new eigenvalue.
pub fn step_onto_surface(
    rho: &HermitianMatrix,
    direction: &PerturbationDirection,
    epsilon: f64,
    rank_pair: (usize, usize),
    tol: &Tolerances,
) -> Result<StepReport> {
    let stepped = HermitianMatrix::lin_comb(1.0, rho, epsilon, &direction.a).normalized_trace()?;
    let retracted = crate::states::retract_to_rank_pair(&stepped, rank_pair, tol, 100)?;
    // a genuine retraction stays within O(ε) of the raw step
    let dist = (&retracted - &stepped).frobenius_norm();
    if dist > 0.5 * epsilon.abs().max(1e-6) {
        return Err(Error::DegenerateConfiguration(format!(
            "no rank-{rank_pair:?} surface point near the stepped state (distance {dist:.3e})"
        )));
    }
    Ok(report_of(retracted, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::*;
    use rand::Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn ctx() -> UpbContext {
        UpbContext::from_orth_params(&OrthParams::new(1.0, 1.0, 1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn upb_context_sixth_vector() {
        let ctx = ctx();
        // a coefficients are real, nonzero, and reconstruct w6
        assert!(ctx.a_coeffs.iter().all(|a| a.abs() > 1e-6));
        let w6 = ctx.sixth.assembled();
        assert!(ctx.rho.apply(&w6).norm() < 1e-10);
        assert!(
            crate::products::is_product(ctx.dims, &w6, 1e-9).unwrap(),
            "sixth vector is a product vector"
        );
    }

    #[test]
    fn tangent_dimensions_on_upb_state() {
        let ctx = ctx();
        let free = tangent_rank_preserving(&ctx.rho, &tol());
        assert_eq!(free.dimension, 36);
        assert_eq!(free.raw_dimension, 37);
        let fixed = tangent_fixed_image(&ctx.rho, &tol());
        assert_eq!(fixed.dimension, 0);
        assert_eq!(fixed.raw_dimension, 1);
    }

    #[test]
    fn tangent_full_rank_state() {
        let dims = BipartiteDims::new(3, 3).unwrap();
        let rho = HermitianMatrix::maximally_mixed(dims);
        let fixed = tangent_fixed_image(&rho, &tol());
        assert_eq!(fixed.dimension, 80);
        let free = tangent_rank_preserving(&rho, &tol());
        assert_eq!(free.dimension, 80);
    }

    #[test]
    fn seed_identity_phases() {
        let ctx = ctx();
        let c = normalize_coeffs([
            C64::new(0.3, 0.1),
            C64::new(-0.2, 0.4),
            C64::new(0.5, 0.0),
            C64::new(0.1, -0.3),
            C64::new(0.4, 0.2),
        ]);
        let seed = rank45_seed(&ctx, c, [0.0; 4]).unwrap();
        assert!(seed.valid);
        assert!(seed.theta5.abs() < 1e-9 || (seed.theta5 - 2.0 * std::f64::consts::PI).abs() < 1e-9);
        for (a, b) in seed.c.iter().zip(seed.d.iter()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn seed_random_phases_keep_moduli() {
        let ctx = ctx();
        let mut rng = rng(7);
        for _ in 0..5 {
            let c: [C64; 5] = std::array::from_fn(|_| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let phases: [f64; 4] = std::array::from_fn(|_| rng.random_range(-0.4..0.4));
            let seed = match rank45_seed(&ctx, c, phases) {
                Ok(s) => s,
                Err(Error::InfeasiblePhase { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            assert!(seed.valid);
            for (a, b) in seed.c.iter().zip(seed.d.iter()) {
                assert!((a.norm() - b.norm()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn wrong_z_is_flagged() {
        let ctx = ctx();
        let c = normalize_coeffs([
            C64::new(0.5, 0.0),
            C64::new(0.5, 0.0),
            C64::new(0.5, 0.0),
            C64::new(0.3, 0.0),
            C64::new(0.2, 0.0),
        ]);
        let mut d = c;
        d[4] *= C64::new(2.0, 0.0);
        let seed = Rank45Seed::with_explicit_z(&ctx, c, d);
        assert!(!seed.valid);
    }

    #[test]
    fn solution_space_sizes_and_direction() {
        let ctx = ctx();
        let t = tol();
        let mut rng = rng(31);
        let c: [C64; 5] = std::array::from_fn(|_| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let seed = rank45_seed(&ctx, c, [0.1, -0.2, 0.15, 0.05]).unwrap();

        let free = rank45_direction(&ctx, &seed, TangentMode::Free, &t).unwrap();
        assert_eq!(free.solution_dim, 37);
        assert_eq!(free.rank_preserving_dim, 36);
        assert!(free.alpha > 0.0);
        assert!((free.alpha - free.beta).abs() < 1e-9);

        let fixed = rank45_direction(&ctx, &seed, TangentMode::FixedImage, &t).unwrap();
        assert_eq!(fixed.solution_dim, 5);
        assert_eq!(fixed.rank_preserving_dim, 4);
        assert!(fixed.alpha > 0.0);
        assert!((fixed.alpha - fixed.beta).abs() < 1e-9);
    }

    #[test]
    fn wrong_z_yields_only_rank_preserving_directions() {
        let ctx = ctx();
        let t = tol();
        let c = normalize_coeffs([
            C64::new(0.4, 0.2),
            C64::new(-0.3, 0.1),
            C64::new(0.2, -0.5),
            C64::new(0.35, 0.0),
            C64::new(0.25, 0.3),
        ]);
        let mut d = c;
        d[2] *= C64::new(0.0, 1.7);
        d = normalize_coeffs(d);
        let seed = Rank45Seed::with_explicit_z(&ctx, c, d);
        assert!(!seed.valid);
        match rank45_direction(&ctx, &seed, TangentMode::FixedImage, &t) {
            Err(Error::NoRankIncreasingDirection { solution_dim }) => {
                assert_eq!(solution_dim, 4);
            }
            other => panic!("expected no rank-increasing direction, got {:?}", other.is_ok()),
        }
    }

    #[test]
    fn finite_step_reaches_rank_five_five() {
        let ctx = ctx();
        let t = tol();
        let mut rng = rng(47);
        let c: [C64; 5] = std::array::from_fn(|_| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let seed = rank45_seed(&ctx, c, [0.0, 0.1, -0.1, 0.2]).unwrap();
        let dir = rank45_direction(&ctx, &seed, TangentMode::Free, &t).unwrap();

        let eps = 1e-3;
        // the raw step leaves the curved surface only at second order
        let raw = step_finite(&ctx.rho, &dir.direction, eps, &t).unwrap();
        assert!(raw.min_eigenvalues.0 > -10.0 * eps * eps);
        let step = step_onto_surface(&ctx.rho, &dir.direction, eps, (5, 5), &t).unwrap();
        assert_eq!(step.rank_pair, (5, 5));
        assert!(step.is_ppt);
        let expect = eps * dir.alpha;
        let (l1, l2) = step.smallest_retained;
        assert!((l1 - expect).abs() < 1e-2 * expect, "{l1} vs {expect}");
        assert!((l2 - expect).abs() < 1e-2 * expect, "{l2} vs {expect}");
        assert!((l1 - l2).abs() <= 1e-2 * l1.abs());

        // against the sign convention the first-order eigenvalue is negative
        let back = step_finite(&ctx.rho, &dir.direction, -eps, &t).unwrap();
        assert!(!back.is_ppt);
        assert!(back.min_eigenvalues.0 < -0.5 * expect || back.min_eigenvalues.1 < -0.5 * expect);
    }

    #[test]
    fn image_preserving_step_keeps_rank_both_signs() {
        // a fixed-image tangent direction of a (5,5) state moves inside the
        // same image for either sign of ε
        let ctx = ctx();
        let t = tol();
        let mut rng = rng(53);
        let c: [C64; 5] = std::array::from_fn(|_| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let seed = (0..10)
            .find_map(|k| {
                let scale = 0.1 / (1 << k) as f64;
                rank45_seed(&ctx, c, [scale, 0.0, -scale, 2.0 * scale]).ok()
            })
            .expect("phases feasible after shrinking");
        let dir = rank45_direction(&ctx, &seed, TangentMode::Free, &t).unwrap();
        let rho5 = step_onto_surface(&ctx.rho, &dir.direction, 2e-3, (5, 5), &t)
            .unwrap()
            .rho_prime;
        assert_eq!(rho5.rank_pair(&t), (5, 5));

        let fixed = tangent_fixed_image(&rho5, &t);
        assert!(fixed.dimension >= 1);
        let a = PerturbationDirection::new(fixed.basis[0].clone(), Some(&rho5));
        let (p, _) = rho5.image_kernel_projectors(&t);
        // PAP = A within tolerance
        let pap = p.matrix() * a.a.matrix() * p.matrix();
        assert!((&pap - a.a.matrix()).norm() < 1e-8);
        // rank preservation of ρᴾ is first order, so keep ε small enough
        // that the O(ε²) leakage stays below the rank threshold
        for eps in [1e-6, -1e-6] {
            let step = step_finite(&rho5, &a, eps, &t).unwrap();
            assert_eq!(step.rank_pair, (5, 5), "rank pair at eps {eps}");
            let (pp, _) = step.rho_prime.image_kernel_projectors(&t);
            assert!((&pp - &p).frobenius_norm() < 1e-6, "image moved at eps {eps}");
        }
    }
}
