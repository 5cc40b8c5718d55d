//! Curves and geodesics on fixed-rank PPT surfaces by RK4 integration.
//!
//! The curve obeys ρ̇ = A with A constrained to the tangent space 𝐓A = 0 of
//! the chosen mode. Differentiating the projector and pseudoinverse relations
//! gives the coupled evolution Ṗ = QAρ⁺ + ρ⁺AQ and
//! ρ̇⁺ = QA(ρ⁺)² + (ρ⁺)²AQ − ρ⁺Aρ⁺, with partial-transpose analogues; the
//! geodesic direction evolves as Ȧ = αA − 𝐓⁺𝐓̇A with α fixed by Tr(ȦA) = 0 so
//! the speed ‖A‖ is conserved. The integrator refreshes the spectral data and
//! re-projects A onto the constraint null space on a fixed cadence to cancel
//! the O(ε²) drift that first-order tangency accumulates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hermitian::{partial_transpose_matrix, BipartiteDims, CMatrix, HermitianMatrix};

use crate::parallel;
use crate::perturb::{PerturbationDirection, TangentMode};
use crate::superop::{HermBasis, SuperOpKind, SuperOperator};
use crate::{Error, Result, Tolerances};

/// What drives the curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowMode {
    GeodesicFree,
    GeodesicFixedImage,
    BoundarySeek,
}

impl FlowMode {
    pub(crate) fn tangent_mode(&self) -> TangentMode {
        match self {
            FlowMode::GeodesicFixedImage => TangentMode::FixedImage,
            _ => TangentMode::Free,
        }
    }
}

/// Integration parameters.
#[derive(Clone, Copy, Debug)]
pub struct FlowConfig {
    pub mode: FlowMode,
    pub step_size: f64,
    pub steps: usize,
    pub record_every: usize,
    pub drift_tol: f64,
    pub reproject_every: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            mode: FlowMode::GeodesicFree,
            step_size: 1e-4,
            steps: 1000,
            record_every: 10,
            drift_tol: 1e-8,
            reproject_every: 10,
        }
    }
}

/// Full state of the flow: the curve point, its spectral companions, and the
/// current direction.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub arc_length: f64,
    pub rho: HermitianMatrix,
    pub rho_plus: HermitianMatrix,
    pub p: HermitianMatrix,
    pub tilde_rho_plus: HermitianMatrix,
    pub tilde_p: HermitianMatrix,
    pub a: HermitianMatrix,
}

impl FlowState {
    /// Assemble the spectral companions of ρ and normalize the direction.
    pub fn new(rho: HermitianMatrix, a: HermitianMatrix, tol: &Tolerances) -> Result<Self> {
        let rho = rho.normalized_trace()?;
        let rho_plus = rho.pseudoinverse(tol);
        let (p, _) = rho.image_kernel_projectors(tol);
        let pt = rho.partial_transpose();
        let tilde_rho_plus = pt.pseudoinverse(tol);
        let (tilde_p, _) = pt.image_kernel_projectors(tol);
        let norm = a.frobenius_norm();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(Self {
            t: 0.0,
            arc_length: 0.0,
            rho,
            rho_plus,
            p,
            tilde_rho_plus,
            tilde_p,
            a: a.scale(1.0 / norm),
        })
    }

    pub fn q(&self) -> HermitianMatrix {
        &HermitianMatrix::identity(self.rho.dims()) - &self.p
    }

    pub fn tilde_q(&self) -> HermitianMatrix {
        &HermitianMatrix::identity(self.rho.dims()) - &self.tilde_p
    }

    /// Consistency residuals (‖P − ρ⁺ρ‖, ‖ρ − PρP‖, ‖Q̃ρᴾ‖).
    pub fn consistency_residuals(&self) -> (f64, f64, f64) {
        let m = self.rho.matrix();
        let r1 = (self.rho_plus.matrix() * m - self.p.matrix()).norm();
        let r2 = (self.p.matrix() * m * self.p.matrix() - m).norm();
        let pt = partial_transpose_matrix(self.rho.dims(), m);
        let tq = self.tilde_q();
        let r3 = (tq.matrix() * pt).norm();
        (r1, r2, r3)
    }
}

/// Ṗ = QAρ⁺ + ρ⁺AQ from differentiating P = P².
pub fn projector_derivative(
    rho_plus: &HermitianMatrix,
    q: &HermitianMatrix,
    a: &HermitianMatrix,
) -> HermitianMatrix {
    let m = q.matrix() * a.matrix() * rho_plus.matrix()
        + rho_plus.matrix() * a.matrix() * q.matrix();
    HermitianMatrix::from_exact(rho_plus.dims(), m)
}

/// ρ̇⁺ = QA(ρ⁺)² + (ρ⁺)²AQ − ρ⁺Aρ⁺ from differentiating ρ⁺ = ρ⁺ρρ⁺.
pub fn pseudoinverse_derivative(
    rho_plus: &HermitianMatrix,
    q: &HermitianMatrix,
    a: &HermitianMatrix,
) -> HermitianMatrix {
    let rp = rho_plus.matrix();
    let rp2 = rp * rp;
    let m = q.matrix() * a.matrix() * &rp2 + &rp2 * a.matrix() * q.matrix()
        - rp * a.matrix() * rp;
    HermitianMatrix::from_exact(rho_plus.dims(), m)
}

/// Materialize the tangent constraint operator from explicit projectors.
pub(crate) fn constraint_from_parts(
    basis: &HermBasis,
    p: &CMatrix,
    tilde_p: &CMatrix,
    mode: TangentMode,
) -> SuperOperator {
    let dims = basis.dims();
    let n = dims.n();
    let q = CMatrix::identity(n, n) - p;
    let tq = CMatrix::identity(n, n) - tilde_p;
    match mode {
        TangentMode::Free => SuperOperator::from_map(basis, SuperOpKind::Composite, move |x| {
            let xp = partial_transpose_matrix(dims, x);
            &q * x * &q + partial_transpose_matrix(dims, &(&tq * xp * &tq))
        }),
        TangentMode::FixedImage => {
            SuperOperator::from_map(basis, SuperOpKind::Composite, move |x| {
                let xp = partial_transpose_matrix(dims, x);
                x - p * x * p + partial_transpose_matrix(dims, &(&tq * xp * &tq))
            })
        }
    }
}

fn constraint_dot_from_parts(
    basis: &HermBasis,
    p: &CMatrix,
    tilde_p: &CMatrix,
    p_dot: &CMatrix,
    tilde_p_dot: &CMatrix,
    mode: TangentMode,
) -> SuperOperator {
    let dims = basis.dims();
    let n = dims.n();
    let q = CMatrix::identity(n, n) - p;
    let tq = CMatrix::identity(n, n) - tilde_p;
    let qd = -p_dot;
    let tqd = -tilde_p_dot;
    match mode {
        TangentMode::Free => SuperOperator::from_map(basis, SuperOpKind::Composite, move |x| {
            let xp = partial_transpose_matrix(dims, x);
            &qd * x * &q
                + &q * x * &qd
                + partial_transpose_matrix(dims, &(&tqd * &xp * &tq + &tq * &xp * &tqd))
        }),
        TangentMode::FixedImage => {
            // along fixed-image directions Ṗ = 0 and only the tilde part
            // varies; the 𝐏 term is kept for probes along general directions
            SuperOperator::from_map(basis, SuperOpKind::Composite, move |x| {
                let xp = partial_transpose_matrix(dims, x);
                -(p_dot * x * p + p * x * p_dot)
                    + partial_transpose_matrix(dims, &(&tqd * &xp * &tq + &tq * &xp * &tqd))
            })
        }
    }
}

/// The constraint operator 𝐓 of the mode and its time derivative 𝐓̇ assembled
/// from Q̇ = −Ṗ and the tilde analogue.
pub struct ConstraintOperator {
    pub t: SuperOperator,
    pub t_dot: SuperOperator,
}

pub fn tangent_constraint_operator(
    state: &FlowState,
    basis: &HermBasis,
    mode: TangentMode,
) -> ConstraintOperator {
    let dims = state.rho.dims();
    let p_dot = projector_derivative(&state.rho_plus, &state.q(), &state.a);
    let apt = state.a.partial_transpose();
    let tp_dot = projector_derivative(&state.tilde_rho_plus, &state.tilde_q(), &apt);
    let t = constraint_from_parts(basis, state.p.matrix(), state.tilde_p.matrix(), mode);
    let t_dot = constraint_dot_from_parts(
        basis,
        state.p.matrix(),
        state.tilde_p.matrix(),
        p_dot.matrix(),
        tp_dot.matrix(),
        mode,
    );
    let _ = dims;
    ConstraintOperator { t, t_dot }
}

/// Right-hand side of the geodesic system: ρ̇ = A and Ȧ = B − 𝐓⁺𝐓̇A with
/// B = αA + βρ in Null(𝐓), where α makes Tr(ȦA) = 0 (constant speed) and β
/// makes Tr(Ȧ) = 0 (the curve stays on the unit-trace slice).
pub struct GeodesicRhs {
    pub rho_dot: HermitianMatrix,
    pub a_dot: HermitianMatrix,
    pub alpha: f64,
}

fn geodesic_adot(
    basis: &HermBasis,
    x: &DVector<f64>,
    a_coords: &DVector<f64>,
    rho_coords: &DVector<f64>,
) -> (DVector<f64>, f64) {
    let n = basis.dims().n();
    // coordinates of the identity: the N diagonal entries
    let mut tau = DVector::zeros(basis.len());
    for i in 0..n {
        tau[i] = 1.0;
    }
    let trace_rho = tau.dot(rho_coords);
    let beta = tau.dot(x) / trace_rho;
    let alpha = (a_coords.dot(x) - beta * a_coords.dot(rho_coords)) / a_coords.dot(a_coords);
    let a_dot = a_coords * alpha + rho_coords * beta - x;
    (a_dot, alpha)
}

pub fn geodesic_rhs(
    state: &FlowState,
    basis: &HermBasis,
    mode: TangentMode,
    tol: &Tolerances,
) -> GeodesicRhs {
    let ops = tangent_constraint_operator(state, basis, mode);
    let eig = ops.t.symmetric_eigen();
    let a_coords = basis.coords(&state.a);
    let rho_coords = basis.coords(&state.rho);
    let b = ops.t_dot.matrix() * &a_coords;
    let x = SuperOperator::solve_pinv(&eig, tol, &b);
    let (a_dot, alpha) = geodesic_adot(basis, &x, &a_coords, &rho_coords);
    GeodesicRhs {
        rho_dot: state.a.clone(),
        a_dot: basis.from_coords(&a_dot),
        alpha,
    }
}

/// A recorded point of a trajectory.
#[derive(Clone, Debug)]
pub struct TrajectorySample {
    pub t: f64,
    pub arc_length: f64,
    /// Eigenvalues of ρ, ascending.
    pub eig_rho: Vec<f64>,
    /// Eigenvalues of ρᴾ, ascending.
    pub eig_rho_pt: Vec<f64>,
    /// Basis coordinates of ρ, for downstream embedding.
    pub coords: DVector<f64>,
    pub rank_pair: (usize, usize),
    pub a_norm: f64,
    pub tr_adot_a: f64,
    pub image_drift: f64,
}

/// Where and how a trajectory hit the boundary of its surface.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryEvent {
    pub t: f64,
    pub rank_pair: (usize, usize),
    /// The simultaneously vanishing smallest eigenvalues of ρ and ρᴾ,
    /// recorded as the flow crossed the detection threshold.
    pub vanishing_eigs: (f64, f64),
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub boundary: Option<BoundaryEvent>,
    /// The state at the end of the run, for continuation and reversal.
    pub final_state: Option<FlowState>,
}

/// A random unit direction in the tangent space of the mode, traceless.
pub fn random_tangent(
    rho: &HermitianMatrix,
    mode: TangentMode,
    tol: &Tolerances,
    seed: u64,
) -> Result<PerturbationDirection> {
    let space = match mode {
        TangentMode::Free => crate::perturb::tangent_rank_preserving(rho, tol),
        TangentMode::FixedImage => crate::perturb::tangent_fixed_image(rho, tol),
    };
    if space.dimension == 0 {
        return Err(Error::ZeroVector);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = HermitianMatrix::zeros(rho.dims());
    for b in &space.basis {
        let w: f64 = rng.sample(StandardNormal);
        a = HermitianMatrix::lin_comb(1.0, &a, w, b);
    }
    Ok(PerturbationDirection::new(a, Some(rho)))
}

#[derive(Clone)]
struct RawState {
    rho: CMatrix,
    a: CMatrix,
    rp: CMatrix,
    p: CMatrix,
    trp: CMatrix,
    tp: CMatrix,
}

struct RawDeriv {
    rho: CMatrix,
    a: CMatrix,
    rp: CMatrix,
    p: CMatrix,
    trp: CMatrix,
    tp: CMatrix,
    tr_adot_a: f64,
}

impl RawState {
    fn step(&self, h: f64, d: &RawDeriv) -> RawState {
        let z = crate::hermitian::C64::new(h, 0.0);
        RawState {
            rho: &self.rho + &d.rho * z,
            a: &self.a + &d.a * z,
            rp: &self.rp + &d.rp * z,
            p: &self.p + &d.p * z,
            trp: &self.trp + &d.trp * z,
            tp: &self.tp + &d.tp * z,
        }
    }

    fn into_flow_state(self, dims: BipartiteDims, t: f64, arc: f64) -> FlowState {
        FlowState {
            t,
            arc_length: arc,
            rho: hermitize(dims, &self.rho),
            rho_plus: hermitize(dims, &self.rp),
            p: hermitize(dims, &self.p),
            tilde_rho_plus: hermitize(dims, &self.trp),
            tilde_p: hermitize(dims, &self.tp),
            a: hermitize(dims, &self.a),
        }
    }
}

fn raw_deriv(
    y: &RawState,
    dims: BipartiteDims,
    basis: &HermBasis,
    mode: TangentMode,
    tol: &Tolerances,
) -> RawDeriv {
    let n = dims.n();
    let id = CMatrix::identity(n, n);
    let q = &id - &y.p;
    let tq = &id - &y.tp;
    let apt = partial_transpose_matrix(dims, &y.a);
    let p_dot = &q * &y.a * &y.rp + &y.rp * &y.a * &q;
    let rp2 = &y.rp * &y.rp;
    let rp_dot = &q * &y.a * &rp2 + &rp2 * &y.a * &q - &y.rp * &y.a * &y.rp;
    let tp_dot = &tq * &apt * &y.trp + &y.trp * &apt * &tq;
    let trp2 = &y.trp * &y.trp;
    let trp_dot = &tq * &apt * &trp2 + &trp2 * &apt * &tq - &y.trp * &apt * &y.trp;

    let t_op = constraint_from_parts(basis, &y.p, &y.tp, mode);
    let t_dot = constraint_dot_from_parts(basis, &y.p, &y.tp, &p_dot, &tp_dot, mode);
    let eig = t_op.symmetric_eigen();
    let a_coords = basis.coords_of(&y.a);
    let rho_coords = basis.coords_of(&y.rho);
    let b = t_dot.matrix() * &a_coords;
    let x = SuperOperator::solve_pinv(&eig, tol, &b);
    let (a_dot_coords, _alpha) = geodesic_adot(basis, &x, &a_coords, &rho_coords);
    let tr_adot_a = a_dot_coords.dot(&a_coords);
    let a_dot = basis.from_coords(&a_dot_coords).into_matrix();
    RawDeriv {
        rho: y.a.clone(),
        a: a_dot,
        rp: rp_dot,
        p: p_dot,
        trp: trp_dot,
        tp: tp_dot,
        tr_adot_a,
    }
}

fn rank_informed_parts(
    m: &HermitianMatrix,
    rank: usize,
    tol: &Tolerances,
) -> (CMatrix, CMatrix) {
    let mut sd = m.spectral_decompose(tol);
    sd.rank = rank;
    let plus = sd.filtered_rebuild(m.dims(), |lam| 1.0 / lam);
    let p = sd.filtered_rebuild(m.dims(), |_| 1.0);
    (plus.into_matrix(), p.into_matrix())
}

fn hermitize(dims: BipartiteDims, m: &CMatrix) -> HermitianMatrix {
    HermitianMatrix::from_exact(dims, (m + m.adjoint()).scale(0.5))
}

/// Integrate the flow from a consistent initial state.
///
/// Geodesic modes run classic RK4 on the coupled system (ρ, A, ρ⁺, P, tilde
/// companions), with a periodic spectral refresh and re-projection of A onto
/// the constraint null space; a rank change truncates the trajectory with a
/// boundary event, and drift beyond 10× the tolerance aborts. The
/// boundary-seek mode delegates to [`boundary_seek`].
pub fn integrate(initial: &FlowState, cfg: &FlowConfig, tol: &Tolerances) -> Result<Trajectory> {
    if cfg.mode == FlowMode::BoundarySeek {
        return boundary_seek(&initial.rho, cfg, tol);
    }
    let mode = cfg.mode.tangent_mode();
    let dims = initial.rho.dims();
    let basis = HermBasis::new(dims);
    let (m0, n0) = initial.rho.rank_pair(tol);
    let p0 = initial.p.matrix().clone();

    let mut y = RawState {
        rho: initial.rho.matrix().clone(),
        a: initial.a.matrix().clone(),
        rp: initial.rho_plus.matrix().clone(),
        p: initial.p.matrix().clone(),
        trp: initial.tilde_rho_plus.matrix().clone(),
        tp: initial.tilde_p.matrix().clone(),
    };
    let mut t = initial.t;
    let mut arc = initial.arc_length;
    let mut traj = Trajectory::default();

    let record = |traj: &mut Trajectory, y: &RawState, t: f64, arc: f64, tr_adot_a: f64| {
        let rho = hermitize(dims, &y.rho);
        let sd = rho.spectral_decompose(tol);
        let pt = rho.partial_transpose();
        let sd_pt = pt.spectral_decompose(tol);
        let image_drift = match mode {
            TangentMode::FixedImage => (&p0 * rho.matrix() * &p0 - rho.matrix()).norm(),
            TangentMode::Free => (&y.p * rho.matrix() * &y.p - rho.matrix()).norm(),
        };
        traj.samples.push(TrajectorySample {
            t,
            arc_length: arc,
            eig_rho: sd.eigenvalues.iter().copied().collect(),
            eig_rho_pt: sd_pt.eigenvalues.iter().copied().collect(),
            coords: basis.coords(&rho),
            rank_pair: (sd.rank, sd_pt.rank),
            a_norm: y.a.norm(),
            tr_adot_a,
            image_drift,
        });
    };

    let h = cfg.step_size;
    for step in 0..=cfg.steps {
        let k1 = raw_deriv(&y, dims, &basis, mode, tol);
        if step % cfg.record_every.max(1) == 0 || step == cfg.steps {
            record(&mut traj, &y, t, arc, k1.tr_adot_a);
        }
        if step == cfg.steps {
            break;
        }
        let norm_before = y.a.norm();
        let k2 = raw_deriv(&y.step(0.5 * h, &k1), dims, &basis, mode, tol);
        let k3 = raw_deriv(&y.step(0.5 * h, &k2), dims, &basis, mode, tol);
        let k4 = raw_deriv(&y.step(h, &k3), dims, &basis, mode, tol);
        let two = crate::hermitian::C64::new(2.0, 0.0);
        let h6 = crate::hermitian::C64::new(h / 6.0, 0.0);
        let combine =
            |a: &CMatrix, b: &CMatrix, c: &CMatrix, d: &CMatrix| (a + (b + c) * two + d) * h6;
        y = RawState {
            rho: &y.rho + combine(&k1.rho, &k2.rho, &k3.rho, &k4.rho),
            a: &y.a + combine(&k1.a, &k2.a, &k3.a, &k4.a),
            rp: &y.rp + combine(&k1.rp, &k2.rp, &k3.rp, &k4.rp),
            p: &y.p + combine(&k1.p, &k2.p, &k3.p, &k4.p),
            trp: &y.trp + combine(&k1.trp, &k2.trp, &k3.trp, &k4.trp),
            tp: &y.tp + combine(&k1.tp, &k2.tp, &k3.tp, &k4.tp),
        };
        t += h;
        arc += h * 0.5 * (norm_before + y.a.norm());

        if (step + 1) % cfg.reproject_every.max(1) == 0 {
            // drift check before the refresh
            let rho = hermitize(dims, &y.rho);
            let drift1 = (&y.rp * rho.matrix() - &y.p).norm();
            let drift2 = (&y.p * rho.matrix() * &y.p - rho.matrix()).norm();
            let pt = rho.partial_transpose();
            let tq = CMatrix::identity(dims.n(), dims.n()) - &y.tp;
            let drift3 = (&tq * pt.matrix()).norm();
            let drift = drift1.max(drift2).max(drift3);
            if !(drift <= 10.0 * cfg.drift_tol) {
                return Err(Error::DriftExceeded { drift, limit: 10.0 * cfg.drift_tol, t });
            }
            let rho = rho.normalized_trace()?;
            // rank monitor: a change truncates the run at the boundary
            let sd = rho.spectral_decompose(tol);
            let sd_pt = rho.partial_transpose().spectral_decompose(tol);
            if sd.rank != m0 || sd_pt.rank != n0 {
                record(&mut traj, &y, t, arc, 0.0);
                traj.boundary = Some(BoundaryEvent {
                    t,
                    rank_pair: (sd.rank, sd_pt.rank),
                    vanishing_eigs: (
                        sd.eigenvalues[dims.n() - m0],
                        sd_pt.eigenvalues[dims.n() - n0],
                    ),
                });
                traj.final_state = Some(y.into_flow_state(dims, t, arc));
                return Ok(traj);
            }
            let (rp, p) = rank_informed_parts(&rho, m0, tol);
            let (trp, tp) = rank_informed_parts(&rho.partial_transpose(), n0, tol);
            y.rho = rho.matrix().clone();
            y.rp = rp;
            y.p = p;
            y.trp = trp;
            y.tp = tp;
            // re-project A onto the constraint null space and renormalize
            let t_op = constraint_from_parts(&basis, &y.p, &y.tp, mode);
            let (vals, vecs) = t_op.symmetric_eigen();
            let scale = vals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            let thr = tol.zero_tol * scale;
            let a_herm = hermitize(dims, &y.a);
            let coords = basis.coords(&a_herm);
            let mut proj = DVector::zeros(basis.len());
            for k in 0..vals.len() {
                if vals[k].abs() <= thr {
                    let col = vecs.column(k);
                    proj.axpy(col.dot(&coords), &col, 1.0);
                }
            }
            let mut a = basis.from_coords(&proj);
            let tr = a.trace();
            a = HermitianMatrix::lin_comb(1.0, &a, -tr, &rho);
            let norm = a.frobenius_norm();
            if norm < 0.5 {
                return Err(Error::DriftExceeded { drift: 1.0 - norm, limit: 0.5, t });
            }
            y.a = a.scale(1.0 / norm).into_matrix();
        }
    }
    traj.final_state = Some(y.into_flow_state(dims, t, arc));
    Ok(traj)
}

/// Steer the direction inside Null(𝐐+𝐐̃) so the smallest retained eigenvalue
/// of ρ descends to zero; by the rank-coupling of the surface the smallest
/// eigenvalue of ρᴾ vanishes simultaneously and the curve ends on the
/// boundary of lower-rank states.
pub fn boundary_seek(
    rho0: &HermitianMatrix,
    cfg: &FlowConfig,
    tol: &Tolerances,
) -> Result<Trajectory> {
    let dims = rho0.dims();
    let n = dims.n();
    let basis = HermBasis::new(dims);
    let mut rho = rho0.normalized_trace()?;
    let (m0, n0) = rho.rank_pair(tol);
    let mut t = 0.0;
    let mut traj = Trajectory::default();
    let mut crossing: Option<(f64, f64)> = None;
    let max_steps = cfg.steps.max(1);

    for step in 0..max_steps {
        let sd = rho.spectral_decompose(tol);
        let pt = rho.partial_transpose();
        let sd_pt = pt.spectral_decompose(tol);
        // the vanishing eigenvalues tracked by index, not by threshold
        let lam = sd.eigenvalues[n - m0];
        let lam_pt = sd_pt.eigenvalues[n - n0];
        let lam_max = sd.eigenvalues[n - 1];

        if step % cfg.record_every.max(1) == 0 {
            traj.samples.push(TrajectorySample {
                t,
                arc_length: t,
                eig_rho: sd.eigenvalues.iter().copied().collect(),
                eig_rho_pt: sd_pt.eigenvalues.iter().copied().collect(),
                coords: basis.coords(&rho),
                rank_pair: (sd.rank, sd_pt.rank),
                a_norm: 1.0,
                tr_adot_a: 0.0,
                image_drift: 0.0,
            });
        }

        if crossing.is_none() && lam < 10.0 * tol.zero_tol * lam_max {
            crossing = Some((lam, lam_pt));
        }
        if lam.abs() < 0.5 * tol.zero_tol * lam_max && lam_pt.abs() < 0.5 * tol.zero_tol * lam_max
        {
            traj.boundary = Some(BoundaryEvent {
                t,
                rank_pair: (sd.rank, sd_pt.rank),
                vanishing_eigs: crossing.unwrap_or((lam, lam_pt)),
            });
            traj.samples.push(TrajectorySample {
                t,
                arc_length: t,
                eig_rho: sd.eigenvalues.iter().copied().collect(),
                eig_rho_pt: sd_pt.eigenvalues.iter().copied().collect(),
                coords: basis.coords(&rho),
                rank_pair: (sd.rank, sd_pt.rank),
                a_norm: 1.0,
                tr_adot_a: 0.0,
                image_drift: 0.0,
            });
            traj.final_state = Some(FlowState::new(
                rho.clone(),
                HermitianMatrix::identity(dims),
                tol,
            )?);
            return Ok(traj);
        }

        // steer: minimize ψ†Aψ over the unit ball of Null(𝐐+𝐐̃) ∩ {Tr A = 0}
        let psi = sd.eigenvector(n - m0);
        let t_op = constraint_from_parts(&basis, &rank_informed_parts(&rho, m0, tol).1,
            &rank_informed_parts(&pt, n0, tol).1, TangentMode::Free);
        let null = t_op.null_space(&basis, tol);
        if null.dimension == 0 {
            return Err(Error::BoundaryStall(0.0));
        }
        let g = DVector::from_fn(null.dimension, |k, _| {
            null.basis[k].expectation(&psi).re
        });
        let tr = DVector::from_fn(null.dimension, |k, _| null.basis[k].trace());
        let mut steep = g.clone();
        let tr_norm = tr.norm();
        if tr_norm > 1e-12 {
            let that = &tr / tr_norm;
            steep.axpy(-g.dot(&that), &that, 1.0);
        }
        let slope_scale = steep.norm();
        if slope_scale < 1e-10 {
            return Err(Error::BoundaryStall(slope_scale));
        }
        let coeff = -&steep / slope_scale;
        let mut a = HermitianMatrix::zeros(dims);
        for (k, b) in null.basis.iter().enumerate() {
            a = HermitianMatrix::lin_comb(1.0, &a, coeff[k], b);
        }
        let a = a.scale(1.0 / a.frobenius_norm());
        let slope = a.expectation(&psi).re;
        if slope >= -1e-12 {
            return Err(Error::BoundaryStall(slope));
        }
        let dt = cfg.step_size.min(0.45 * lam / slope.abs()).max(1e-16);
        let z = crate::hermitian::C64::new(dt, 0.0);
        rho = hermitize(dims, &(rho.matrix() + a.matrix() * z)).normalized_trace()?;
        t += dt;
    }
    Err(Error::BoundaryStall(f64::NAN))
}

/// Walk the rank-preserving surface away from its boundary until the
/// smallest retained eigenvalues of ρ and ρᴾ both reach `target`, using the
/// steepest-ascent direction for whichever side is currently smaller and a
/// retraction after every step. Produces well-conditioned interior points of
/// the surface from barely-interior ones.
pub fn balance_interior(
    rho0: &HermitianMatrix,
    target: f64,
    cfg: &FlowConfig,
    tol: &Tolerances,
) -> Result<HermitianMatrix> {
    let dims = rho0.dims();
    let n = dims.n();
    let basis = HermBasis::new(dims);
    let mut rho = rho0.normalized_trace()?;
    let (m0, n0) = rho.rank_pair(tol);
    for _ in 0..cfg.steps.max(1) {
        let sd = rho.spectral_decompose(tol);
        let pt = rho.partial_transpose();
        let sd_pt = pt.spectral_decompose(tol);
        let lam = sd.eigenvalues[n - m0];
        let lam_pt = sd_pt.eigenvalues[n - n0];
        if lam >= target && lam_pt >= target {
            return Ok(rho);
        }
        // raise the smaller of the two vanishing candidates
        let psi = if lam <= lam_pt {
            sd.eigenvector(n - m0)
        } else {
            sd_pt.eigenvector(n - n0)
        };
        let on_pt_side = lam > lam_pt;
        let t_op = constraint_from_parts(
            &basis,
            &rank_informed_parts(&rho, m0, tol).1,
            &rank_informed_parts(&pt, n0, tol).1,
            TangentMode::Free,
        );
        let null = t_op.null_space(&basis, tol);
        let g = DVector::from_fn(null.dimension, |k, _| {
            if on_pt_side {
                null.basis[k].partial_transpose().expectation(&psi).re
            } else {
                null.basis[k].expectation(&psi).re
            }
        });
        let tr = DVector::from_fn(null.dimension, |k, _| null.basis[k].trace());
        let mut ascent = g.clone();
        let tr_norm = tr.norm();
        if tr_norm > 1e-12 {
            let that = &tr / tr_norm;
            ascent.axpy(-g.dot(&that), &that, 1.0);
        }
        let scale = ascent.norm();
        if scale < 1e-10 {
            return Err(Error::BoundaryStall(scale));
        }
        let coeff = &ascent / scale;
        let mut a = HermitianMatrix::zeros(dims);
        for (k, b) in null.basis.iter().enumerate() {
            a = HermitianMatrix::lin_comb(1.0, &a, coeff[k], b);
        }
        let a = a.scale(1.0 / a.frobenius_norm());
        // keep the second-order leakage of the straight step within the
        // reach of the retraction: step no farther than the smaller
        // vanishing eigenvalue
        let dt = cfg.step_size.min(0.5 * lam.min(lam_pt).max(1e-6));
        let stepped = HermitianMatrix::lin_comb(1.0, &rho, dt, &a);
        rho = crate::states::retract_to_rank_pair(&stepped, (m0, n0), tol, 50)?;
    }
    Err(Error::BoundaryStall(target))
}

/// Project the recorded states onto their two largest principal components.
/// The sign convention makes the first nonzero loading of each component
/// positive.
pub fn pca_projection(traj: &Trajectory) -> Result<Vec<[f64; 2]>> {
    let k = traj.samples.len();
    if k < 3 {
        return Err(Error::TooFewSamples { need: 3, got: k });
    }
    let d = traj.samples[0].coords.len();
    let mut mean = DVector::zeros(d);
    for s in &traj.samples {
        mean += &s.coords;
    }
    mean /= k as f64;
    let mut data = DMatrix::zeros(k, d);
    for (i, s) in traj.samples.iter().enumerate() {
        data.row_mut(i).copy_from(&(&s.coords - &mean).transpose());
    }
    let svd = data.clone().svd(false, true);
    let vt = svd.v_t.expect("svd with v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut components = Vec::with_capacity(2);
    for &idx in order.iter().take(2) {
        let mut comp = vt.row(idx).transpose().into_owned();
        if let Some(first) = comp.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                comp = -comp;
            }
        }
        components.push(comp);
    }
    Ok((0..k)
        .map(|i| {
            let row = data.row(i).transpose();
            [row.dot(&components[0]), row.dot(&components[1])]
        })
        .collect())
}

/// Classification of one grid point of a plane section.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SectionLabel {
    /// ρ ≥ 0 and ρᴾ ≥ 0.
    InsideP,
    /// ρ ≥ 0 only.
    DOnly,
    /// ρᴾ ≥ 0 only.
    DptOnly,
    Outside,
}

/// Min-eigenvalue maps of ρ and ρᴾ over a square grid in a 2-plane of H_N.
pub struct SectionMap {
    pub grid: usize,
    pub radius: f64,
    pub min_eig_rho: Vec<f64>,
    pub min_eig_rho_pt: Vec<f64>,
    pub pos_tol: f64,
}

impl SectionMap {
    fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.grid + ix
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.radius + 2.0 * self.radius * i as f64 / (self.grid - 1) as f64
    }

    pub fn label(&self, ix: usize, iy: usize) -> SectionLabel {
        let k = self.idx(ix, iy);
        let in_d = self.min_eig_rho[k] >= self.pos_tol;
        let in_dpt = self.min_eig_rho_pt[k] >= self.pos_tol;
        match (in_d, in_dpt) {
            (true, true) => SectionLabel::InsideP,
            (true, false) => SectionLabel::DOnly,
            (false, true) => SectionLabel::DptOnly,
            (false, false) => SectionLabel::Outside,
        }
    }

    fn sign_at(&self, values: &[f64], ix: usize, iy: usize) -> bool {
        values[self.idx(ix, iy)] >= self.pos_tol
    }

    fn boundary_of(&self, values: &[f64], ix: usize, iy: usize) -> bool {
        let here = self.sign_at(values, ix, iy);
        let mut neighbors = Vec::new();
        if ix > 0 {
            neighbors.push((ix - 1, iy));
        }
        if ix + 1 < self.grid {
            neighbors.push((ix + 1, iy));
        }
        if iy > 0 {
            neighbors.push((ix, iy - 1));
        }
        if iy + 1 < self.grid {
            neighbors.push((ix, iy + 1));
        }
        neighbors
            .into_iter()
            .any(|(jx, jy)| self.sign_at(values, jx, jy) != here)
    }

    /// Grid point adjacent to a sign change of min-eig(ρᴾ).
    pub fn is_dpt_boundary(&self, ix: usize, iy: usize) -> bool {
        self.boundary_of(&self.min_eig_rho_pt, ix, iy)
    }

    /// Grid point adjacent to a sign change of min-eig(ρ).
    pub fn is_d_boundary(&self, ix: usize, iy: usize) -> bool {
        self.boundary_of(&self.min_eig_rho, ix, iy)
    }

    /// Grid point adjacent to a change of PPT membership.
    pub fn is_p_boundary(&self, ix: usize, iy: usize) -> bool {
        let here = self.label(ix, iy) == SectionLabel::InsideP;
        let mut flips = false;
        if ix > 0 {
            flips |= (self.label(ix - 1, iy) == SectionLabel::InsideP) != here;
        }
        if ix + 1 < self.grid {
            flips |= (self.label(ix + 1, iy) == SectionLabel::InsideP) != here;
        }
        if iy > 0 {
            flips |= (self.label(ix, iy - 1) == SectionLabel::InsideP) != here;
        }
        if iy + 1 < self.grid {
            flips |= (self.label(ix, iy + 1) == SectionLabel::InsideP) != here;
        }
        flips
    }
}

/// Scan the plane ρ(x, y) = ρ₀ + xA₁ + yA₂ over a (2R)×(2R) grid and record
/// the minimum eigenvalues of ρ and ρᴾ at every point.
pub fn plane_section_scan(
    rho0: &HermitianMatrix,
    a1: &HermitianMatrix,
    a2: &HermitianMatrix,
    grid: usize,
    radius: f64,
    tol: &Tolerances,
) -> Result<SectionMap> {
    if grid < 2 {
        return Err(Error::TooFewSamples { need: 2, got: grid });
    }
    if (rho0.trace() - 1.0).abs() > 1e-10 {
        return Err(Error::DegenerateConfiguration("section center must have unit trace".into()));
    }
    for a in [a1, a2] {
        if a.trace().abs() > 1e-10 {
            return Err(Error::DegenerateConfiguration("section directions must be traceless".into()));
        }
        if (a.frobenius_norm() - 1.0).abs() > 1e-8 {
            return Err(Error::DegenerateConfiguration("section directions must be unit norm".into()));
        }
    }
    if a1.inner(a2).abs() > 1e-8 {
        return Err(Error::DegenerateConfiguration("section directions must be orthogonal".into()));
    }
    let coord = |i: usize| -radius + 2.0 * radius * i as f64 / (grid - 1) as f64;
    let rows = parallel::par_map(grid, |iy| {
        let y = coord(iy);
        let mut me_rho = Vec::with_capacity(grid);
        let mut me_pt = Vec::with_capacity(grid);
        for ix in 0..grid {
            let x = coord(ix);
            let m = HermitianMatrix::lin_comb(1.0, rho0, x, a1);
            let m = HermitianMatrix::lin_comb(1.0, &m, y, a2);
            me_rho.push(m.min_eigenvalue(tol));
            me_pt.push(m.partial_transpose().min_eigenvalue(tol));
        }
        (me_rho, me_pt)
    });
    let mut min_eig_rho = Vec::with_capacity(grid * grid);
    let mut min_eig_rho_pt = Vec::with_capacity(grid * grid);
    for (r, p) in rows {
        min_eig_rho.extend(r);
        min_eig_rho_pt.extend(p);
    }
    Ok(SectionMap {
        grid,
        radius,
        min_eig_rho,
        min_eig_rho_pt,
        pos_tol: tol.pos_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::C64;
    use crate::linalg as la;
    use crate::testutil::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn dims33() -> BipartiteDims {
        BipartiteDims::new(3, 3).unwrap()
    }

    /// A well-conditioned rank-(k,k) separable PPT state with a random
    /// tangent direction attached.
    fn random_flow_state(seed: u64, k: usize) -> FlowState {
        let dims = dims33();
        let mut r = rng(seed);
        let rho = conditioned_separable_state(&mut r, dims, k, 0.1);
        let dir = random_tangent(&rho, TangentMode::Free, &tol(), seed ^ 0x5eed).unwrap();
        FlowState::new(rho, dir.a, &tol()).unwrap()
    }

    /// A generic extremal rank-(5,5) state: rank-4→5 step, interior
    /// balancing, then a symmetry-breaking SL⊗SL transform.
    fn generic_55_state(seed: u64) -> HermitianMatrix {
        use crate::perturb::{rank45_direction, rank45_seed, step_onto_surface, UpbContext};
        use crate::products::OrthParams;
        let t = tol();
        let ctx = UpbContext::from_orth_params(&OrthParams::new(1.0, 1.0, 1.0, 1.0).unwrap())
            .unwrap();
        let mut r = rng(seed);
        let c: [crate::hermitian::C64; 5] = std::array::from_fn(|_| {
            crate::hermitian::C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
        });
        let s45 = rank45_seed(&ctx, c, [0.1, -0.05, 0.2, 0.0]).unwrap();
        let dir = rank45_direction(&ctx, &s45, TangentMode::Free, &t).unwrap();
        let rho = step_onto_surface(&ctx.rho, &dir.direction, 1e-3, (5, 5), &t)
            .unwrap()
            .rho_prime;
        let cfg = FlowConfig { steps: 3000, step_size: 0.02, ..Default::default() };
        let bal = balance_interior(&rho, 0.12, &cfg, &t).unwrap();
        let gl = |r: &mut rand_chacha::ChaCha8Rng| {
            CMatrix::from_fn(3, 3, |i, j| {
                let eye = if i == j { 1.0 } else { 0.0 };
                crate::hermitian::C64::new(
                    eye + 0.35 * r.sample::<f64, _>(StandardNormal),
                    0.35 * r.sample::<f64, _>(StandardNormal),
                )
            })
        };
        let out = crate::hermitian::sl_product_transform(&bal, &gl(&mut r), &gl(&mut r)).unwrap();
        assert_eq!(out.rank_pair(&t), (5, 5));
        out
    }

    #[test]
    fn image_preserving_direction_freezes_projector() {
        let st = random_flow_state(3, 5);
        // build an A with QA = AQ = 0: compress a random direction by P
        let mut r = rng(9);
        let x = random_hermitian(&mut r, dims33());
        let p = st.p.matrix();
        let a = HermitianMatrix::from_exact(dims33(), p * x.matrix() * p);
        let pd = projector_derivative(&st.rho_plus, &st.q(), &a);
        assert!(pd.frobenius_norm() < 1e-9);
    }

    #[test]
    fn derivative_formulas_match_finite_differences() {
        let t = tol();
        let h = 1e-5;
        for seed in [1u64, 2, 3] {
            let st = random_flow_state(seed, 5);
            let (m, _) = st.rho.rank_pair(&t);
            let pd = projector_derivative(&st.rho_plus, &st.q(), &st.a);
            let rpd = pseudoinverse_derivative(&st.rho_plus, &st.q(), &st.a);
            // PṖP = 0 and QṖQ = 0
            let p = st.p.matrix();
            let q = st.q();
            assert!((p * pd.matrix() * p).norm() < 1e-9);
            assert!((q.matrix() * pd.matrix() * q.matrix()).norm() < 1e-9);
            // Pρ̇⁺P = −ρ⁺Aρ⁺
            let lhs = p * rpd.matrix() * p;
            let rhs = -(st.rho_plus.matrix() * st.a.matrix() * st.rho_plus.matrix());
            assert!((lhs - rhs).norm() < 1e-8);

            // central finite differences with rank-informed projectors
            let parts = |eps: f64| {
                let mm = HermitianMatrix::lin_comb(1.0, &st.rho, eps, &st.a);
                rank_informed_parts(&mm, m, &t)
            };
            let (rp_p, p_p) = parts(h);
            let (rp_m, p_m) = parts(-h);
            let fd_p = (&p_p - &p_m) / C64::new(2.0 * h, 0.0);
            let fd_rp = (&rp_p - &rp_m) / C64::new(2.0 * h, 0.0);
            let err_p = (&fd_p - pd.matrix()).norm();
            let err_rp = (&fd_rp - rpd.matrix()).norm();
            assert!(err_p < 1e-7, "projector derivative error {err_p}");
            assert!(err_rp < 1e-6 * rpd.frobenius_norm().max(1.0), "pinv error {err_rp}");

            // tilde analogue: the same formulas on ρᴾ and Aᴾ
            let (m_pt, _) = st.rho.partial_transpose().rank_pair(&t);
            let apt = st.a.partial_transpose();
            let tpd = projector_derivative(&st.tilde_rho_plus, &st.tilde_q(), &apt);
            let tilde_parts = |eps: f64| {
                let mm = HermitianMatrix::lin_comb(1.0, &st.rho, eps, &st.a);
                rank_informed_parts(&mm.partial_transpose(), m_pt, &t)
            };
            let (_, tp_p) = tilde_parts(h);
            let (_, tp_m) = tilde_parts(-h);
            let fd_tp = (&tp_p - &tp_m) / C64::new(2.0 * h, 0.0);
            let err_tp = (&fd_tp - tpd.matrix()).norm();
            assert!(err_tp < 1e-7, "tilde projector derivative error {err_tp}");
        }
    }

    #[test]
    fn constraint_dot_matches_finite_differences() {
        let t = tol();
        let h = 1e-5;
        let dims = dims33();
        let basis = HermBasis::new(dims);
        for seed in [5u64, 6] {
            let st = random_flow_state(seed, 5);
            let (m, n) = st.rho.rank_pair(&t);
            for mode in [TangentMode::Free, TangentMode::FixedImage] {
                let ops = tangent_constraint_operator(&st, &basis, mode);
                let build = |eps: f64| {
                    let mm = HermitianMatrix::lin_comb(1.0, &st.rho, eps, &st.a);
                    let (_, p) = rank_informed_parts(&mm, m, &t);
                    let (_, tp) = rank_informed_parts(&mm.partial_transpose(), n, &t);
                    constraint_from_parts(&basis, &p, &tp, mode)
                };
                let tp_ = build(h);
                let tm_ = build(-h);
                let fd = (tp_.matrix() - tm_.matrix()) / (2.0 * h);
                let err = (&fd - ops.t_dot.matrix()).norm();
                assert!(err < 1e-6, "t_dot fd error {err} ({mode:?})");
            }
        }
    }

    #[test]
    fn geodesic_rhs_is_norm_preserving() {
        let t = tol();
        let basis = HermBasis::new(dims33());
        let st = random_flow_state(11, 5);
        let rhs = geodesic_rhs(&st, &basis, TangentMode::Free, &t);
        let tr = rhs.a_dot.inner(&st.a);
        assert!(tr.abs() < 1e-12, "Tr(adot a) = {tr}");
        assert!((&rhs.rho_dot - &st.a).frobenius_norm() < 1e-14);
    }

    #[test]
    fn zero_steps_returns_initial_sample() {
        let st = random_flow_state(13, 5);
        let cfg = FlowConfig { steps: 0, ..Default::default() };
        let traj = integrate(&st, &cfg, &tol()).unwrap();
        assert_eq!(traj.samples.len(), 1);
        assert!(traj.boundary.is_none());
    }

    #[test]
    fn short_free_geodesic_keeps_invariants() {
        let st = random_flow_state(17, 5);
        let cfg = FlowConfig {
            mode: FlowMode::GeodesicFree,
            steps: 300,
            step_size: 1e-4,
            record_every: 50,
            ..Default::default()
        };
        let traj = integrate(&st, &cfg, &tol()).unwrap();
        assert!(traj.boundary.is_none());
        for s in &traj.samples {
            assert_eq!(s.rank_pair, (5, 5));
            assert!((s.a_norm - 1.0).abs() < 1e-8);
            assert!(s.tr_adot_a.abs() < 1e-10);
            assert!(s.image_drift < 1e-8);
            assert!((s.t - s.arc_length).abs() < 1e-8);
            assert!((s.eig_rho.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn reversed_direction_retraces_the_path() {
        let t = tol();
        let rho = generic_55_state(19);
        let dir = random_tangent(&rho, TangentMode::Free, &t, 20).unwrap();
        let st = FlowState::new(rho, dir.a, &t).unwrap();
        let start = st.rho.clone();
        let steps = 500;
        let cfg = FlowConfig {
            steps,
            step_size: 1e-4,
            record_every: steps,
            ..Default::default()
        };
        let fwd = integrate(&st, &cfg, &t).unwrap();
        let end = fwd.final_state.clone().unwrap();
        let back_state = FlowState::new(end.rho.clone(), end.a.scale(-1.0), &t).unwrap();
        let back = integrate(&back_state, &cfg, &t).unwrap();
        let ret = back.final_state.unwrap();
        let err = (&ret.rho - &start).frobenius_norm();
        assert!(err < 1e-8, "retrace error {err}");

        // and the integrator itself is deterministic
        let fwd2 = integrate(&st, &cfg, &t).unwrap();
        for (a, b) in fwd.samples.iter().zip(fwd2.samples.iter()) {
            assert_eq!(a.coords, b.coords);
        }
    }

    #[test]
    fn pca_of_straight_line_and_circle() {
        let dims = dims33();
        let basis = HermBasis::new(dims);
        let mut r = rng(23);
        let x0 = basis.coords(&random_hermitian(&mut r, dims));
        let d1 = {
            let mut v = basis.coords(&random_hermitian(&mut r, dims));
            v /= v.norm();
            v
        };
        let mut d2 = basis.coords(&random_hermitian(&mut r, dims));
        la::project_out(&mut d2, std::slice::from_ref(&d1));
        d2 /= d2.norm();

        let line = Trajectory {
            final_state: None,
            samples: (0..20)
                .map(|k| TrajectorySample {
                    t: k as f64,
                    arc_length: k as f64,
                    eig_rho: vec![],
                    eig_rho_pt: vec![],
                    coords: &x0 + &d1 * (k as f64 * 0.1),
                    rank_pair: (9, 9),
                    a_norm: 1.0,
                    tr_adot_a: 0.0,
                    image_drift: 0.0,
                })
                .collect(),
            boundary: None,
        };
        let proj = pca_projection(&line).unwrap();
        for p in &proj {
            assert!(p[1].abs() < 1e-10, "second component {}", p[1]);
        }

        let radius = 0.7;
        let circle = Trajectory {
            final_state: None,
            samples: (0..36)
                .map(|k| {
                    let ang = 2.0 * std::f64::consts::PI * k as f64 / 36.0;
                    TrajectorySample {
                        t: k as f64,
                        arc_length: k as f64,
                        eig_rho: vec![],
                        eig_rho_pt: vec![],
                        coords: &x0 + &d1 * (radius * ang.cos()) + &d2 * (radius * ang.sin()),
                        rank_pair: (9, 9),
                        a_norm: 1.0,
                        tr_adot_a: 0.0,
                        image_drift: 0.0,
                    }
                })
                .collect(),
            boundary: None,
        };
        let proj = pca_projection(&circle).unwrap();
        for p in &proj {
            let r2 = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((r2 - radius).abs() < 1e-10, "radius {r2}");
        }

        let two = Trajectory { samples: line.samples[..2].to_vec(), boundary: None, final_state: None };
        assert!(pca_projection(&two).is_err());
    }

    #[test]
    fn section_scan_labels() {
        let dims = dims33();
        let t = tol();
        let rho0 = HermitianMatrix::maximally_mixed(dims);
        let mut r = rng(29);
        let a1 = PerturbationDirection::new(random_hermitian(&mut r, dims), Some(&rho0)).a;
        let mut a2 = random_hermitian(&mut r, dims);
        let c = a2.inner(&a1);
        a2 = HermitianMatrix::lin_comb(1.0, &a2, -c, &a1);
        let a2 = PerturbationDirection::new(a2, Some(&rho0)).a;
        let map = plane_section_scan(&rho0, &a1, &a2, 21, 1.0, &t).unwrap();
        let mid = 10;
        assert_eq!(map.label(mid, mid), SectionLabel::InsideP);
        // far corners leave both sets for a generic direction pair
        let far = map.label(0, 0);
        assert_ne!(far, SectionLabel::InsideP);
    }
}
