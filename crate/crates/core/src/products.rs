//! Product vectors: detection, counting formulas, standard forms, determinant
//! invariants, the pentagon permutation classes with their twelve parameter
//! regions, and a stochastic finder of product vectors inside a subspace.
//!
//! A vector ψ ∈ ℂ^{nA·nB} is a product vector u⊗v exactly when all quadratic
//! relations ψ_{ij}ψ_{kl} − ψ_{il}ψ_{kj} = 0 hold, i.e. its nA×nB reshaping
//! has rank one. A generic subspace of the limiting dimension
//! N − nA − nB + 2 contains finitely many product vectors; for 3×3 that is 6
//! in dimension 5, for 4×4 it is 20 in dimension 10.


use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::hermitian::{tensor_product, BipartiteDims, CMatrix, CVector, C64};
use crate::parallel;
use crate::{Error, Result};

/// Relative imaginary-part threshold declaring a parameter real.
pub const REAL_PART_TOL: f64 = 1e-9;

/// A product vector w = N·(u⊗v) with a real normalization factor N ≥ 0.
#[derive(Clone, Debug)]
pub struct ProductVector {
    pub u: CVector,
    pub v: CVector,
    pub norm_factor: f64,
}

impl ProductVector {
    pub fn new(u: CVector, v: CVector, norm_factor: f64) -> Self {
        Self { u, v, norm_factor }
    }

    /// Normalization factor that makes the assembled vector a unit vector.
    pub fn unit_normalized(u: CVector, v: CVector) -> Result<Self> {
        let n = u.norm() * v.norm();
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(Self { u, v, norm_factor: 1.0 / n })
    }

    /// The assembled vector w = N·(u⊗v).
    pub fn assembled(&self) -> CVector {
        tensor_product(&self.u, &self.v) * C64::new(self.norm_factor, 0.0)
    }

    /// The partial-transpose partner w̃ = N·(u⊗v*).
    pub fn tilde(&self) -> CVector {
        tensor_product(&self.u, &self.v.conjugate()) * C64::new(self.norm_factor, 0.0)
    }
}

/// An ordered list of product vectors over fixed bipartite dimensions.
#[derive(Clone, Debug)]
pub struct ProductVectorSet {
    pub dims: BipartiteDims,
    pub vectors: Vec<ProductVector>,
}

impl ProductVectorSet {
    pub fn new(dims: BipartiteDims, vectors: Vec<ProductVector>) -> Result<Self> {
        for pv in &vectors {
            if pv.u.len() != dims.na() {
                return Err(Error::DimensionMismatch { expected: dims.na(), got: pv.u.len() });
            }
            if pv.v.len() != dims.nb() {
                return Err(Error::DimensionMismatch { expected: dims.nb(), got: pv.v.len() });
            }
        }
        Ok(Self { dims, vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn us(&self) -> Vec<CVector> {
        self.vectors.iter().map(|p| p.u.clone()).collect()
    }

    pub fn vs(&self) -> Vec<CVector> {
        self.vectors.iter().map(|p| p.v.clone()).collect()
    }

    pub fn assembled(&self) -> Vec<CVector> {
        self.vectors.iter().map(|p| p.assembled()).collect()
    }

    /// Genericity: every subset of min(nA, count) u's and min(nB, count) v's
    /// is linearly independent, judged by the smallest singular value of the
    /// column-normalized subset matrix.
    pub fn is_generic(&self, sigma_min: f64) -> bool {
        side_generic(&self.us(), self.dims.na(), sigma_min)
            && side_generic(&self.vs(), self.dims.nb(), sigma_min)
    }

    /// Reorder the vectors: entry i of the result is vector `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            dims: self.dims,
            vectors: perm.iter().map(|&k| self.vectors[k].clone()).collect(),
        }
    }

    /// Apply u ↦ V_A u, v ↦ V_B v to every factor pair.
    pub fn transformed(&self, va: &CMatrix, vb: &CMatrix) -> Self {
        Self {
            dims: self.dims,
            vectors: self
                .vectors
                .iter()
                .map(|p| ProductVector::new(va * &p.u, vb * &p.v, p.norm_factor))
                .collect(),
        }
    }
}

fn side_generic(cols: &[CVector], k: usize, sigma_min: f64) -> bool {
    let k = k.min(cols.len());
    if k == 0 {
        return true;
    }
    let normalized: Vec<CVector> = cols
        .iter()
        .map(|c| {
            let n = c.norm();
            if n == 0.0 {
                c.clone()
            } else {
                c / C64::new(n, 0.0)
            }
        })
        .collect();
    for subset in subsets(cols.len(), k) {
        let m = CMatrix::from_columns(
            &subset.iter().map(|&i| normalized[i].clone()).collect::<Vec<_>>(),
        );
        let svd = m.svd(false, false);
        let smin = svd.singular_values.iter().fold(f64::INFINITY, |a, &s| a.min(s));
        if smin <= sigma_min {
            return false;
        }
    }
    true
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// True when all quadratic relations vanish within tol·‖ψ‖², i.e. the nA×nB
/// reshaping of ψ has numerical rank one.
pub fn is_product(dims: BipartiteDims, psi: &CVector, tol: f64) -> Result<bool> {
    if psi.len() != dims.n() {
        return Err(Error::DimensionMismatch { expected: dims.n(), got: psi.len() });
    }
    let norm2 = psi.norm_squared();
    if norm2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    let (na, nb) = (dims.na(), dims.nb());
    for i in 0..na {
        for k in (i + 1)..na {
            for j in 0..nb {
                for l in (j + 1)..nb {
                    let r = psi[dims.flat(i, j)] * psi[dims.flat(k, l)]
                        - psi[dims.flat(i, l)] * psi[dims.flat(k, j)];
                    if r.norm() > tol * norm2 {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// Counting formulas for product vectors in subspaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorCounts {
    /// Number of independent quadratic relations K = (nA−1)(nB−1).
    pub independent_relations: usize,
    /// The limiting subspace dimension N − nA − nB + 2 at which the number of
    /// product vectors is nonzero and finite.
    pub limiting_dim: usize,
    /// Number of product vectors in a generic subspace of the limiting
    /// dimension: binomial(nA+nB−2, nA−1).
    pub generic_count: usize,
}

pub fn product_vector_counts(na: usize, nb: usize) -> VectorCounts {
    let binom = |n: usize, k: usize| -> usize {
        let mut acc: u128 = 1;
        for i in 0..k {
            acc = acc * (n - i) as u128 / (i + 1) as u128;
        }
        acc as usize
    };
    VectorCounts {
        independent_relations: (na - 1) * (nb - 1),
        limiting_dim: na * nb - na - nb + 2,
        generic_count: binom(na + nb - 2, na - 1),
    }
}

/// Parameters of the non-orthogonal standard form: the first nA u's map to
/// scaled basis vectors, the next to the all-ones vector, and the remaining
/// vectors are normalized by their leading component.
#[derive(Clone, Debug)]
pub enum StandardFormParams {
    /// 3×3: u₅ → (1, p, q), v₅ → (1, r, s).
    Dim3 { p: C64, q: C64, r: C64, s: C64 },
    /// 4×4: u₆ → (1, p₁, p₂, p₃), u₇ → (1, p₄, p₅, p₆), v-side p₇..p₁₂.
    Dim4 { params: [C64; 12] },
}

impl StandardFormParams {
    /// All parameters real within the relative imaginary tolerance.
    pub fn is_real(&self) -> bool {
        let real = |z: &C64| z.im.abs() <= REAL_PART_TOL * (1.0 + z.re.abs());
        match self {
            Self::Dim3 { p, q, r, s } => [p, q, r, s].iter().all(|z| real(z)),
            Self::Dim4 { params } => params.iter().all(real),
        }
    }
}

/// An SL⊗SL reduction to standard form.
#[derive(Clone, Debug)]
pub struct StandardForm {
    pub va: CMatrix,
    pub vb: CMatrix,
    pub params: StandardFormParams,
}

fn reduce_side(cols: &[CVector], n: usize) -> Result<(CMatrix, Vec<C64>)> {
    let u = CMatrix::from_columns(&cols[..n].to_vec());
    let uinv = u
        .try_inverse()
        .ok_or_else(|| Error::Genericity("leading factor vectors are dependent".into()))?;
    let c = &uinv * &cols[n];
    for i in 0..n {
        if c[i].norm() < 1e-10 * c.norm() {
            return Err(Error::Genericity(format!(
                "vector {} lies in the span of {} of the leading vectors",
                n + 1,
                n - 1
            )));
        }
    }
    let mut d = CMatrix::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = C64::new(1.0, 0.0) / c[i];
    }
    let mut va = d * uinv;
    let det = va.determinant();
    va /= det.powf(1.0 / n as f64);
    let mut params = Vec::new();
    for col in &cols[n + 1..] {
        let w = &va * col;
        if w[0].norm() < 1e-12 * w.norm() {
            return Err(Error::DegenerateConfiguration(
                "vanishing leading component of a transformed vector".into(),
            ));
        }
        for i in 1..n {
            params.push(w[i] / w[0]);
        }
    }
    Ok((va, params))
}

/// Reduce 5 product vectors in 3×3 (or 7 in 4×4) to the standard form, up to
/// per-vector complex scales.
pub fn to_standard_form(set: &ProductVectorSet) -> Result<StandardForm> {
    let (na, nb) = (set.dims.na(), set.dims.nb());
    let expected = match (na, nb) {
        (3, 3) => 5,
        (4, 4) => 7,
        _ => {
            return Err(Error::DegenerateConfiguration(format!(
                "standard form defined for 3x3 and 4x4, not {na}x{nb}"
            )))
        }
    };
    if set.len() != expected {
        return Err(Error::WrongVectorCount { expected, got: set.len() });
    }
    if !set.is_generic(1e-8) {
        return Err(Error::Genericity(
            "a factor subset is linearly dependent".into(),
        ));
    }
    let (va, pu) = reduce_side(&set.us(), na)?;
    let (vb, pv) = reduce_side(&set.vs(), nb)?;
    let params = match na {
        3 => StandardFormParams::Dim3 { p: pu[0], q: pu[1], r: pv[0], s: pv[1] },
        _ => {
            let mut params = [C64::new(0.0, 0.0); 12];
            params[..6].copy_from_slice(&pu);
            params[6..].copy_from_slice(&pv);
            StandardFormParams::Dim4 { params }
        }
    };
    Ok(StandardForm { va, vb, params })
}

/// The sixth product vector guaranteed to lie in the span of the five
/// standard-form vectors with parameters (p, q, r, s).
pub fn sixth_product_vector(p: C64, q: C64, r: C64, s: C64) -> Result<ProductVector> {
    let scale = [p, q, r, s].iter().fold(1.0f64, |m, z| m.max(z.norm()));
    let check = |den: C64, what: &str| -> Result<C64> {
        if den.norm() < 1e-12 * scale * scale {
            Err(Error::DegenerateConfiguration(format!(
                "denominator {what} vanishes"
            )))
        } else {
            Ok(den)
        }
    };
    let one = C64::new(1.0, 0.0);
    let d1 = check(p * s - q * r, "ps-qr")?;
    let d2 = check(q - s, "q-s")?;
    let d3 = check(r - p, "r-p")?;
    let u = CVector::from_vec(vec![(s - r) / d1, (one - s) / d2, (r - one) / d3]);
    let v = CVector::from_vec(vec![(p - q) / d1, (q - one) / d2, (one - p) / d3]);
    Ok(ProductVector::new(u, v, 1.0))
}

/// The four SL⊗SL invariants s₁..s₄, ratios of 3×3 determinants of the factor
/// columns. Unchanged by SL⊗SL transformations and per-vector rescalings.
#[derive(Clone, Copy, Debug)]
pub struct KernelInvariants {
    pub s: [C64; 4],
}

fn det3(a: &CVector, b: &CVector, c: &CVector) -> C64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - b[0] * (a[1] * c[2] - a[2] * c[1])
        + c[0] * (a[1] * b[2] - a[2] * b[1])
}

pub fn invariants_from_dets(us: &[CVector], vs: &[CVector]) -> Result<KernelInvariants> {
    if us.len() != 5 || vs.len() != 5 {
        return Err(Error::WrongVectorCount { expected: 5, got: us.len().min(vs.len()) });
    }
    let du = |i: usize, j: usize, k: usize| det3(&us[i], &us[j], &us[k]);
    let dv = |i: usize, j: usize, k: usize| det3(&vs[i], &vs[j], &vs[k]);
    let ratio = |num: C64, den: C64, scale: f64| -> Result<C64> {
        if den.norm() < 1e-12 * scale {
            Err(Error::DegenerateConfiguration(
                "vanishing determinant in an invariant denominator".into(),
            ))
        } else {
            Ok(num / den)
        }
    };
    let su: f64 = us.iter().map(|c| c.norm()).product();
    let sv: f64 = vs.iter().map(|c| c.norm()).product();
    // each ratio uses every column equally often, so one crude scale per side
    let s1 = -ratio(du(0, 1, 3) * du(0, 2, 4), du(0, 1, 4) * du(0, 2, 3), su * su)?;
    let s2 = -ratio(du(0, 1, 2) * du(1, 3, 4), du(0, 1, 3) * du(1, 2, 4), su * su)?;
    let s3 = ratio(dv(0, 1, 2) * dv(0, 3, 4), dv(0, 1, 4) * dv(0, 2, 3), sv * sv)?;
    let s4 = ratio(dv(0, 2, 4) * dv(1, 2, 3), dv(0, 1, 2) * dv(2, 3, 4), sv * sv)?;
    Ok(KernelInvariants { s: [s1, s2, s3, s4] })
}

impl KernelInvariants {
    /// Invariants of the standard form: (−p/q, q−1, (r−s)/s, r/(1−r)).
    pub fn from_standard_params(p: C64, q: C64, r: C64, s: C64) -> Self {
        let one = C64::new(1.0, 0.0);
        Self { s: [-p / q, q - one, (r - s) / s, r / (one - r)] }
    }

    pub fn all_real_positive(&self) -> bool {
        self.s
            .iter()
            .all(|z| z.im.abs() <= REAL_PART_TOL * (1.0 + z.re.abs()) && z.re > 0.0)
    }
}

/// Positive parameters (a, b, c, d) of the orthogonal standard form.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OrthParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl OrthParams {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if a > 0.0 && b > 0.0 && c > 0.0 && d > 0.0 {
            Ok(Self { a, b, c, d })
        } else {
            Err(Error::NotPositiveInvariants(format!(
                "(a, b, c, d) = ({a}, {b}, {c}, {d}) must be positive"
            )))
        }
    }
}

/// Invert s₁ = a², s₂ = b²/a², s₃ = c², s₄ = d²/c². Requires all invariants
/// real and strictly positive.
pub fn orth_params_from_invariants(inv: &KernelInvariants) -> Result<OrthParams> {
    if !inv.all_real_positive() {
        return Err(Error::NotPositiveInvariants(format!("{:?}", inv.s)));
    }
    let [s1, s2, s3, s4] = inv.s.map(|z| z.re);
    OrthParams::new(s1.sqrt(), (s1 * s2).sqrt(), s3.sqrt(), (s3 * s4).sqrt())
}

/// The orthogonal standard form: five mutually orthogonal real product
/// vectors realizing u₁⊥u₂⊥u₃⊥u₄⊥u₅⊥u₁ and v₁⊥v₃⊥v₅⊥v₂⊥v₄⊥v₁, normalized so
/// the assembled vectors are orthonormal.
pub fn orth_standard_vectors(params: &OrthParams) -> ProductVectorSet {
    let OrthParams { a, b, c, d } = *params;
    let re = |x: f64, y: f64, z: f64| {
        CVector::from_vec(vec![C64::new(x, 0.0), C64::new(y, 0.0), C64::new(z, 0.0)])
    };
    let us = [
        re(1.0, 0.0, 0.0),
        re(0.0, 1.0, 0.0),
        re(a, 0.0, b),
        re(b, 1.0, -a),
        re(0.0, a, 1.0),
    ];
    let vs = [
        re(1.0, 0.0, 0.0),
        re(d, 1.0, -c),
        re(0.0, 1.0, 0.0),
        re(0.0, c, 1.0),
        re(c, 0.0, d),
    ];
    let dims = BipartiteDims::new(3, 3).unwrap();
    let vectors = us
        .into_iter()
        .zip(vs)
        .map(|(u, v)| ProductVector::unit_normalized(u, v).unwrap())
        .collect();
    ProductVectorSet { dims, vectors }
}

/// Permutations are arrays `perm` with w̃_i = w_{perm[i]} (0-based).
pub type Perm5 = [usize; 5];

/// Composition (a∘b)[i] = a[b[i]]: apply b's relabeling, then a's.
pub fn compose(a: &Perm5, b: &Perm5) -> Perm5 {
    std::array::from_fn(|i| a[b[i]])
}

pub fn invert(a: &Perm5) -> Perm5 {
    let mut out = [0; 5];
    for (i, &ai) in a.iter().enumerate() {
        out[ai] = i;
    }
    out
}

/// Cyclic rotation 51234 of the five kernel vectors.
pub const PENTAGON_ROTATION: Perm5 = [4, 0, 1, 2, 3];
/// Reflection 43215.
pub const PENTAGON_REFLECTION: Perm5 = [3, 2, 1, 0, 4];

/// One representative per left coset of the pentagon group in S₅.
pub const CLASS_REPRESENTATIVES: [Perm5; 12] = [
    [0, 1, 2, 3, 4],
    [0, 2, 1, 3, 4],
    [1, 0, 2, 3, 4],
    [1, 2, 0, 3, 4],
    [2, 0, 1, 3, 4],
    [2, 1, 0, 3, 4],
    [0, 1, 3, 2, 4],
    [0, 3, 1, 2, 4],
    [1, 0, 3, 2, 4],
    [1, 3, 0, 2, 4],
    [0, 2, 3, 1, 4],
    [0, 3, 2, 1, 4],
];

/// The order-10 symmetry group of the pentagon, generated by the rotation and
/// the reflection, sorted lexicographically.
pub fn pentagon_group() -> Vec<Perm5> {
    let mut set: Vec<Perm5> = vec![[0, 1, 2, 3, 4]];
    let gens = [PENTAGON_ROTATION, PENTAGON_REFLECTION];
    let mut changed = true;
    while changed {
        changed = false;
        let snapshot = set.clone();
        for a in &snapshot {
            for g in &gens {
                for c in [compose(a, g), compose(g, a)] {
                    if !set.contains(&c) {
                        set.push(c);
                        changed = true;
                    }
                }
            }
        }
    }
    set.sort();
    set
}

/// A left coset of the pentagon group, identified by its 1-based class id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PermutationClass {
    pub class_id: usize,
    pub representative: Perm5,
}

/// The left coset (class 1..12) containing `perm`.
pub fn coset_class(perm: &Perm5) -> PermutationClass {
    let group = pentagon_group();
    for (k, rep) in CLASS_REPRESENTATIVES.iter().enumerate() {
        if group.contains(&compose(&invert(rep), perm)) {
            return PermutationClass { class_id: k + 1, representative: *rep };
        }
    }
    unreachable!("the twelve cosets partition S5");
}

/// Side selector for the two parameter planes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamSide {
    /// The (p, q) plane, governed by s₁ and s₂.
    UPlane,
    /// The (r, s) plane, governed by s₃ and s₄.
    VPlane,
}

fn standard_columns(x: C64, y: C64) -> Vec<CVector> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    vec![
        CVector::from_vec(vec![one, zero, zero]),
        CVector::from_vec(vec![zero, one, zero]),
        CVector::from_vec(vec![zero, zero, one]),
        CVector::from_vec(vec![one, one, one]),
        CVector::from_vec(vec![one, x, y]),
    ]
}

/// The five standard-form factor columns e₁, e₂, e₃, (1,1,1), (1,x,y).
pub fn standard_form_columns(x: C64, y: C64) -> Vec<CVector> {
    standard_columns(x, y)
}

fn real_positive(z: C64) -> bool {
    z.im.abs() <= REAL_PART_TOL * (1.0 + z.re.abs()) && z.re > 0.0
}

/// Region of a single parameter pair, judged by brute force over the class
/// representatives: the region is the class whose permutation makes the
/// side's two determinant invariants positive. `None` on a boundary.
pub fn param_plane_region(x: f64, y: f64, side: ParamSide) -> Option<usize> {
    let cols = standard_columns(C64::new(x, 0.0), C64::new(y, 0.0));
    let mut matches = Vec::new();
    for (k, rep) in CLASS_REPRESENTATIVES.iter().enumerate() {
        let permuted: Vec<CVector> = rep.iter().map(|&i| cols[i].clone()).collect();
        let inv = match invariants_from_dets(&permuted, &permuted) {
            Ok(inv) => inv,
            Err(_) => continue,
        };
        let (i, j) = match side {
            ParamSide::UPlane => (0, 1),
            ParamSide::VPlane => (2, 3),
        };
        if real_positive(inv.s[i]) && real_positive(inv.s[j]) {
            matches.push(k + 1);
        }
    }
    if matches.len() == 1 {
        Some(matches[0])
    } else {
        None
    }
}

/// A successful region classification of five kernel product vectors.
#[derive(Clone, Copy, Debug)]
pub struct RegionMatch {
    pub class_id: usize,
    pub permuted_order: Perm5,
}

/// Classify a set of five product vectors: the unique class whose permutation
/// makes all four invariants positive on both sides, or `None` when the
/// u-side and v-side fall in non-corresponding regions.
pub fn classify_region(set: &ProductVectorSet) -> Result<Option<RegionMatch>> {
    let sf = to_standard_form(set)?;
    if !sf.params.is_real() {
        return Err(Error::NotClassifiable);
    }
    let us = set.us();
    let vs = set.vs();
    let mut u_matches = Vec::new();
    let mut v_matches = Vec::new();
    for (k, rep) in CLASS_REPRESENTATIVES.iter().enumerate() {
        let pu: Vec<CVector> = rep.iter().map(|&i| us[i].clone()).collect();
        let pv: Vec<CVector> = rep.iter().map(|&i| vs[i].clone()).collect();
        let inv = match invariants_from_dets(&pu, &pv) {
            Ok(inv) => inv,
            Err(_) => continue,
        };
        if real_positive(inv.s[0]) && real_positive(inv.s[1]) {
            u_matches.push((k + 1, *rep));
        }
        if real_positive(inv.s[2]) && real_positive(inv.s[3]) {
            v_matches.push(k + 1);
        }
    }
    if u_matches.len() != 1 || v_matches.len() != 1 {
        return Err(Error::DegenerateConfiguration(format!(
            "ambiguous region match (u side {}, v side {})",
            u_matches.len(),
            v_matches.len()
        )));
    }
    let (uc, rep) = u_matches[0];
    if uc == v_matches[0] {
        Ok(Some(RegionMatch { class_id: uc, permuted_order: rep }))
    } else {
        Ok(None)
    }
}

/// Configuration of the product-vector finder.
#[derive(Clone, Copy, Debug)]
pub struct FinderConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Accept a converged pair when ‖Q_S(u⊗v)‖ ≤ residual_tol for unit u, v.
    pub residual_tol: f64,
    /// Two unit vectors with |⟨w, w'⟩| > 1 − align_tol are the same vector.
    pub align_tol: f64,
    pub seed: u64,
}

impl Default for FinderConfig {
    fn default() -> Self {
        Self {
            restarts: 200,
            max_iters: 300,
            residual_tol: 1e-10,
            align_tol: 1e-6,
            seed: 0,
        }
    }
}

pub(crate) fn complex_mgs(vectors: &[CVector]) -> Vec<CVector> {
    let mut out: Vec<CVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &out {
                let c = b.dotc(&w);
                w -= b * c;
            }
        }
        let n = w.norm();
        if n > 1e-12 {
            out.push(w / C64::new(n, 0.0));
        }
    }
    out
}

fn least_eigenvector(m: &CMatrix) -> (f64, CVector) {
    let herm = (m + m.adjoint()).scale(0.5);
    let se = nalgebra::linalg::SymmetricEigen::new(herm);
    let mut kmin = 0;
    for k in 1..se.eigenvalues.len() {
        if se.eigenvalues[k] < se.eigenvalues[kmin] {
            kmin = k;
        }
    }
    (se.eigenvalues[kmin], se.eigenvectors.column(kmin).into_owned())
}

fn canonical_phase(v: &mut CVector) {
    let mut kmax = 0;
    for k in 1..v.len() {
        if v[k].norm() > v[kmax].norm() {
            kmax = k;
        }
    }
    let z = v[kmax];
    if z.norm() > 0.0 {
        let phase = z / C64::new(z.norm(), 0.0);
        *v /= phase;
    }
}

fn finder_restart(
    dims: BipartiteDims,
    fmats: &[CMatrix],
    cfg: &FinderConfig,
    stream: u64,
) -> Option<(CVector, CVector, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let gaussian = |rng: &mut ChaCha8Rng, n: usize| {
        let mut v = CVector::from_fn(n, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        v /= C64::new(v.norm(), 0.0);
        v
    };
    let (na, nb) = (dims.na(), dims.nb());
    let mut u = gaussian(&mut rng, na);
    let mut v = gaussian(&mut rng, nb);
    let residual = |u: &CVector, v: &CVector| -> f64 {
        let w = tensor_product(u, v);
        fmats
            .iter()
            .map(|f| {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..na {
                    for j in 0..nb {
                        acc += f[(i, j)].conj() * w[i * nb + j];
                    }
                }
                acc.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    };
    let mut best = f64::INFINITY;
    let mut stale = 0usize;
    for _ in 0..cfg.max_iters {
        // v-step: least eigenvector of Σ conj(g)gᵀ with g = F†u
        let mut mv = CMatrix::zeros(nb, nb);
        for f in fmats {
            let g = f.adjoint() * &u;
            mv += g.conjugate() * g.transpose();
        }
        let (_, vnew) = least_eigenvector(&mv);
        v = vnew;
        // u-step: least eigenvector of Σ conj(h)hᵀ with h = conj(F)v
        let mut mu = CMatrix::zeros(na, na);
        for f in fmats {
            let h = f.conjugate() * &v;
            mu += h.conjugate() * h.transpose();
        }
        let (_, unew) = least_eigenvector(&mu);
        u = unew;
        let r = residual(&u, &v);
        if r <= cfg.residual_tol {
            break;
        }
        if r > 0.9 * best {
            stale += 1;
            if stale > 25 && r > 100.0 * cfg.residual_tol {
                break;
            }
        } else {
            stale = 0;
        }
        best = best.min(r);
    }
    let r = residual(&u, &v);
    if r <= cfg.residual_tol {
        canonical_phase(&mut u);
        canonical_phase(&mut v);
        Some((u, v, r))
    } else {
        None
    }
}

/// Search for product vectors inside the span of `subspace` (orthonormalized
/// internally) by alternating minimization of ‖Q_S(u⊗v)‖² over unit u and v:
/// with one factor fixed, the optimal other factor is the least eigenvector
/// of a positive semidefinite matrix assembled from the orthocomplement.
/// Restarts are independent, seeded per restart, and deduplicated
/// projectively in restart order, so the result is deterministic.
pub fn find_products_in_subspace(
    dims: BipartiteDims,
    subspace: &[CVector],
    cfg: &FinderConfig,
) -> Result<ProductVectorSet> {
    let n = dims.n();
    for b in subspace {
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.len() });
        }
    }
    let onb = complex_mgs(subspace);
    let mut qs = CMatrix::identity(n, n);
    for b in &onb {
        qs.gerc(C64::new(-1.0, 0.0), b, b, C64::new(1.0, 0.0));
    }
    // orthocomplement basis from the projector spectrum
    let se = nalgebra::linalg::SymmetricEigen::new(qs);
    let mut fmats: Vec<CMatrix> = Vec::new();
    for k in 0..n {
        if se.eigenvalues[k] > 0.5 {
            let f = se.eigenvectors.column(k);
            fmats.push(CMatrix::from_fn(dims.na(), dims.nb(), |i, j| f[dims.flat(i, j)]));
        }
    }
    let hits = parallel::par_map(cfg.restarts, |r| finder_restart(dims, &fmats, cfg, r as u64 + 1));
    let mut found: Vec<(CVector, CVector, CVector)> = Vec::new();
    for (u, v, _r) in hits.into_iter().flatten() {
        let w = tensor_product(&u, &v);
        let dup = found
            .iter()
            .any(|(_, _, w0)| w0.dotc(&w).norm() > 1.0 - cfg.align_tol);
        if !dup {
            found.push((u, v, w));
        }
    }
    let vectors = found
        .into_iter()
        .map(|(u, v, _)| ProductVector::new(u, v, 1.0))
        .collect();
    ProductVectorSet::new(dims, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::*;

    fn dims33() -> BipartiteDims {
        BipartiteDims::new(3, 3).unwrap()
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn counting_formulas() {
        let c33 = product_vector_counts(3, 3);
        assert_eq!(
            (c33.independent_relations, c33.limiting_dim, c33.generic_count),
            (4, 5, 6)
        );
        let c44 = product_vector_counts(4, 4);
        assert_eq!(
            (c44.independent_relations, c44.limiting_dim, c44.generic_count),
            (9, 10, 20)
        );
        let c22 = product_vector_counts(2, 2);
        assert_eq!(
            (c22.independent_relations, c22.limiting_dim, c22.generic_count),
            (1, 2, 2)
        );
    }

    #[test]
    fn product_detection() {
        let dims = dims33();
        let e1 = basis_vec(3, 0);
        let e2 = basis_vec(3, 1);
        let w = tensor_product(&e1, &e2);
        assert!(is_product(dims, &w, 1e-9).unwrap());

        let bell = tensor_product(&e1, &e1) + tensor_product(&e2, &e2);
        assert!(!is_product(dims, &bell, 1e-9).unwrap());

        let mut rng = rng(2);
        let u = random_cvector(&mut rng, 3);
        let v = random_cvector(&mut rng, 3);
        let mut w = tensor_product(&u, &v);
        w /= C64::new(w.norm(), 0.0);
        let noise = random_cvector(&mut rng, 9);
        let scale = 1e-12 / noise.norm();
        let w = w + noise * C64::new(scale, 0.0);
        assert!(is_product(dims, &w, 1e-9).unwrap());

        let zero = CVector::zeros(9);
        assert!(is_product(dims, &zero, 1e-9).is_err());
    }

    fn permutations(items: &mut [usize; 5], k: usize, out: &mut Vec<Perm5>) {
        if k == 5 {
            out.push(*items);
            return;
        }
        for i in k..5 {
            items.swap(k, i);
            permutations(items, k + 1, out);
            items.swap(k, i);
        }
    }

    #[test]
    fn pentagon_group_has_order_ten_and_twelve_cosets() {
        let g = pentagon_group();
        assert_eq!(g.len(), 10);
        assert!(g.contains(&PENTAGON_ROTATION));
        assert!(g.contains(&PENTAGON_REFLECTION));

        let mut counts = [0usize; 12];
        let mut all = Vec::new();
        permutations(&mut [0, 1, 2, 3, 4], 0, &mut all);
        assert_eq!(all.len(), 120);
        for perm in &all {
            let cls = coset_class(perm);
            counts[cls.class_id - 1] += 1;
        }
        assert!(counts.iter().all(|&c| c == 10), "{counts:?}");

        for (k, rep) in CLASS_REPRESENTATIVES.iter().enumerate() {
            assert_eq!(coset_class(rep).class_id, k + 1);
        }
        assert_eq!(coset_class(&[0, 1, 2, 3, 4]).class_id, 1);
        assert_eq!(coset_class(&PENTAGON_ROTATION).class_id, 1);
        assert_eq!(coset_class(&[0, 3, 1, 2, 4]).class_id, 8);

        // classes are stable under right multiplication by group elements
        let sample = [1, 3, 0, 2, 4];
        let cls = coset_class(&sample).class_id;
        for h in &g {
            assert_eq!(coset_class(&compose(&sample, h)).class_id, cls);
        }
    }

    #[test]
    fn orth_vectors_are_orthonormal() {
        let params = OrthParams::new(1.3, 0.8, 1.1, 0.6).unwrap();
        let set = orth_standard_vectors(&params);
        let ws = set.assembled();
        for i in 0..5 {
            for j in 0..5 {
                let g = ws[i].dotc(&ws[j]).norm();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - expect).abs() < 1e-12, "gram[{i}][{j}] = {g}");
            }
        }
    }

    #[test]
    fn invariants_of_orth_form() {
        let (a, b, c_, d) = (1.4, 0.7, 1.2, 0.9);
        let set = orth_standard_vectors(&OrthParams::new(a, b, c_, d).unwrap());
        let inv = invariants_from_dets(&set.us(), &set.vs()).unwrap();
        let expect = [a * a, b * b / (a * a), c_ * c_, d * d / (c_ * c_)];
        for (z, e) in inv.s.iter().zip(expect.iter()) {
            assert!((z.re - e).abs() < 1e-10 && z.im.abs() < 1e-12, "{z} vs {e}");
        }
    }

    #[test]
    fn invariants_of_standard_form_match_parameter_formulas() {
        let mut rng = rng(5);
        for _ in 0..4 {
            let p = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0));
            let q = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0));
            let r = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0));
            let s = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0));
            let us = standard_columns(p, q);
            let vs = standard_columns(r, s);
            let inv = match invariants_from_dets(&us, &vs) {
                Ok(inv) => inv,
                Err(_) => continue,
            };
            let expect = KernelInvariants::from_standard_params(p, q, r, s);
            for (a, b) in inv.s.iter().zip(expect.s.iter()) {
                assert!((a - b).norm() < 1e-10 * (1.0 + b.norm()));
            }
        }
    }

    #[test]
    fn invariance_under_sl_and_rescaling() {
        let mut rng = rng(7);
        let set = orth_standard_vectors(&OrthParams::new(1.2, 0.9, 0.7, 1.5).unwrap());
        let inv0 = invariants_from_dets(&set.us(), &set.vs()).unwrap();
        let va = random_gl(&mut rng, 3);
        let vb = random_gl(&mut rng, 3);
        let mut t = set.transformed(&va, &vb);
        for pv in t.vectors.iter_mut() {
            let zu = C64::new(rng.random_range(0.2..2.0), rng.random_range(-1.0..1.0));
            let zv = C64::new(rng.random_range(0.2..2.0), rng.random_range(-1.0..1.0));
            pv.u *= zu;
            pv.v *= zv;
        }
        let inv1 = invariants_from_dets(&t.us(), &t.vs()).unwrap();
        for (a, b) in inv0.s.iter().zip(inv1.s.iter()) {
            assert!((a - b).norm() < 1e-9 * (1.0 + b.norm()), "{a} vs {b}");
        }
    }

    #[test]
    fn orth_params_inversion() {
        let inv = KernelInvariants { s: [c(1.0), c(1.0), c(1.0), c(1.0)] };
        let p = orth_params_from_invariants(&inv).unwrap();
        assert!((p.a - 1.0).abs() < 1e-14 && (p.d - 1.0).abs() < 1e-14);

        let inv = KernelInvariants { s: [c(4.0), c(1.0), c(9.0), c(1.0)] };
        let p = orth_params_from_invariants(&inv).unwrap();
        assert!((p.a - 2.0).abs() < 1e-14);
        assert!((p.b - 2.0).abs() < 1e-14);
        assert!((p.c - 3.0).abs() < 1e-14);
        assert!((p.d - 3.0).abs() < 1e-14);

        let inv = KernelInvariants { s: [c(-0.5), c(1.0), c(1.0), c(1.0)] };
        assert!(orth_params_from_invariants(&inv).is_err());

        let inv = KernelInvariants { s: [c(1.7), c(0.6), c(2.2), c(0.4)] };
        let p = orth_params_from_invariants(&inv).unwrap();
        let set = orth_standard_vectors(&p);
        let back = invariants_from_dets(&set.us(), &set.vs()).unwrap();
        for (a, b) in back.s.iter().zip(inv.s.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    fn standard_set(p: C64, q: C64, r: C64, s: C64) -> ProductVectorSet {
        let us = standard_columns(p, q);
        let vs = standard_columns(r, s);
        let dims = dims33();
        let vectors = us
            .into_iter()
            .zip(vs)
            .map(|(u, v)| ProductVector::new(u, v, 1.0))
            .collect();
        ProductVectorSet::new(dims, vectors).unwrap()
    }

    #[test]
    fn standard_form_is_identity_on_standard_vectors() {
        let set = standard_set(c(-1.0), c(2.0), c(0.5), c(0.25));
        let sf = to_standard_form(&set).unwrap();
        match sf.params {
            StandardFormParams::Dim3 { p, q, r, s } => {
                assert!((p - c(-1.0)).norm() < 1e-10);
                assert!((q - c(2.0)).norm() < 1e-10);
                assert!((r - c(0.5)).norm() < 1e-10);
                assert!((s - c(0.25)).norm() < 1e-10);
            }
            _ => panic!("expected 3x3 params"),
        }
    }

    #[test]
    fn standard_form_round_trip_under_sl() {
        let mut rng = rng(11);
        let (p0, q0, r0, s0) = (
            C64::new(-1.3, 0.4),
            C64::new(1.9, -0.2),
            C64::new(0.6, 0.1),
            C64::new(0.3, -0.5),
        );
        let set = standard_set(p0, q0, r0, s0);
        let va = random_gl(&mut rng, 3);
        let vb = random_gl(&mut rng, 3);
        let t = set.transformed(&va, &vb);
        let sf = to_standard_form(&t).unwrap();
        match sf.params {
            StandardFormParams::Dim3 { p, q, r, s } => {
                assert!((p - p0).norm() < 1e-9, "{p} vs {p0}");
                assert!((q - q0).norm() < 1e-9);
                assert!((r - r0).norm() < 1e-9);
                assert!((s - s0).norm() < 1e-9);
            }
            _ => panic!(),
        }
        // the returned transform maps u₄ onto the all-ones direction
        let u4 = &sf.va * &t.vectors[3].u;
        assert!((u4[1] / u4[0] - c(1.0)).norm() < 1e-9);
        assert!((u4[2] / u4[0] - c(1.0)).norm() < 1e-9);
    }

    #[test]
    fn orth_form_reduces_to_region_one_params() {
        let set = orth_standard_vectors(&OrthParams::new(1.0, 1.0, 1.0, 1.0).unwrap());
        let sf = to_standard_form(&set).unwrap();
        match sf.params {
            StandardFormParams::Dim3 { p, q, r, s } => {
                for z in [p, q, r, s] {
                    assert!(z.im.abs() < 1e-9);
                }
                assert!((p - c(-2.0)).norm() < 1e-9);
                assert!((q - c(2.0)).norm() < 1e-9);
                assert!((r - c(0.5)).norm() < 1e-9);
                assert!((s - c(0.25)).norm() < 1e-9);
                assert!(p.re < 0.0 && q.re > 1.0 && r.re > 0.0 && r.re < 1.0);
                assert!(s.re > 0.0 && s.re < r.re);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn sixth_vector_formula() {
        let pv = sixth_product_vector(c(-1.0), c(2.0), c(0.5), c(0.25)).unwrap();
        let expect_u = [0.2, 3.0 / 7.0, -1.0 / 3.0];
        for (z, e) in pv.u.iter().zip(expect_u.iter()) {
            assert!((z.re - e).abs() < 1e-14 && z.im == 0.0, "{z} vs {e}");
        }
        assert!(sixth_product_vector(c(0.5), c(2.0), c(0.5), c(0.25)).is_err());
    }

    #[test]
    fn sixth_vector_lies_in_span() {
        let (p, q, r, s) = (
            C64::new(-0.8, 0.3),
            C64::new(2.1, 0.4),
            C64::new(0.45, -0.2),
            C64::new(0.2, 0.5),
        );
        let set = standard_set(p, q, r, s);
        let sixth = sixth_product_vector(p, q, r, s).unwrap();
        let w6 = sixth.assembled();
        let basis = complex_mgs(&set.assembled());
        assert_eq!(basis.len(), 5);
        let mut resid = w6.clone();
        for b in &basis {
            let coeff = b.dotc(&resid);
            resid -= b * coeff;
        }
        assert!(resid.norm() < 1e-10 * w6.norm(), "residual {}", resid.norm());
    }

    #[test]
    fn classify_region_one_and_mismatch() {
        let set = standard_set(c(-1.0), c(2.0), c(0.5), c(0.25));
        let m = classify_region(&set).unwrap().unwrap();
        assert_eq!(m.class_id, 1);

        let set = standard_set(c(-1.0), c(2.0), c(2.0), c(0.5));
        assert!(classify_region(&set).unwrap().is_none());

        let set = standard_set(C64::new(-1.0, 0.5), c(2.0), c(0.5), c(0.25));
        assert!(matches!(classify_region(&set), Err(Error::NotClassifiable)));
    }

    #[test]
    fn param_plane_regions_cover_samples() {
        assert_eq!(param_plane_region(-1.0, 2.0, ParamSide::UPlane), Some(1));
        assert_eq!(param_plane_region(0.5, 0.25, ParamSide::VPlane), Some(1));
        // a point on the p = q line is a boundary point
        assert_eq!(param_plane_region(0.5, 0.5, ParamSide::UPlane), None);
        let mut rng = rng(13);
        for _ in 0..30 {
            let x: f64 = rng.random_range(-2.5..3.5);
            let y: f64 = rng.random_range(-2.5..3.5);
            let margin = [x, y, x - 1.0, y - 1.0, x - y]
                .iter()
                .fold(f64::INFINITY, |m, d| m.min(d.abs()));
            if margin < 0.05 {
                continue;
            }
            assert!(param_plane_region(x, y, ParamSide::UPlane).is_some(), "({x}, {y})");
        }
    }

    #[test]
    fn finder_recovers_six_vectors_in_standard_span() {
        let (p, q, r, s) = (c(-1.0), c(2.0), c(0.5), c(0.25));
        let set = standard_set(p, q, r, s);
        let dims = dims33();
        let cfg = FinderConfig { restarts: 120, seed: 42, ..Default::default() };
        let found = find_products_in_subspace(dims, &set.assembled(), &cfg).unwrap();
        assert_eq!(found.len(), 6, "found {}", found.len());
        let w6 = sixth_product_vector(p, q, r, s).unwrap().assembled();
        let w6 = &w6 / C64::new(w6.norm(), 0.0);
        let best = found
            .assembled()
            .iter()
            .map(|w| w.dotc(&w6).norm())
            .fold(0.0f64, f64::max);
        assert!(best > 1.0 - 1e-8, "alignment {best}");
    }

    #[test]
    fn finder_empty_on_small_random_subspace() {
        let dims = dims33();
        let mut rng = rng(19);
        let basis: Vec<CVector> = (0..4).map(|_| random_cvector(&mut rng, 9)).collect();
        let cfg = FinderConfig { restarts: 60, seed: 7, ..Default::default() };
        let found = find_products_in_subspace(dims, &basis, &cfg).unwrap();
        assert_eq!(found.len(), 0);
    }

    #[test]
    fn finder_results_are_products_with_unit_factors() {
        let set = orth_standard_vectors(&OrthParams::new(1.0, 1.0, 1.0, 1.0).unwrap());
        let dims = dims33();
        let cfg = FinderConfig { restarts: 100, seed: 3, ..Default::default() };
        let found = find_products_in_subspace(dims, &set.assembled(), &cfg).unwrap();
        assert_eq!(found.len(), 6);
        for pv in &found.vectors {
            assert!((pv.u.norm() - 1.0).abs() < 1e-10);
            assert!((pv.v.norm() - 1.0).abs() < 1e-10);
            assert!(is_product(dims, &pv.assembled(), 1e-9).unwrap());
        }
    }

    #[test]
    fn finder_is_deterministic() {
        let set = standard_set(c(-1.5), c(2.5), c(0.4), c(0.2));
        let dims = dims33();
        let cfg = FinderConfig { restarts: 50, seed: 99, ..Default::default() };
        let a = find_products_in_subspace(dims, &set.assembled(), &cfg).unwrap();
        let b = find_products_in_subspace(dims, &set.assembled(), &cfg).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.vectors.iter().zip(b.vectors.iter()) {
            assert_eq!(x.u, y.u);
            assert_eq!(x.v, y.v);
        }
    }
}
