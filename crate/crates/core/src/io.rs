//! File formats and deterministic run configuration.
//!
//! States and product-vector sets are stored as JSON with complex entries as
//! `[re, im]` pairs at full double precision; serde's shortest-roundtrip
//! float formatting makes the round trip lossless. CSV output uses
//! 17-significant-digit scientific notation throughout.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::flow::{SectionMap, Trajectory};
use crate::hermitian::{BipartiteDims, CMatrix, CVector, HermitianMatrix, C64};
use crate::products::{ProductVector, ProductVectorSet};
use crate::{Error, Result, Tolerances};

/// Environment variable consulted for the master seed when none is given.
pub const SEED_ENV_VAR: &str = "PPT_FORGE_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Deterministic run configuration: identical config and inputs give
/// bitwise-identical outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tolerances: Tolerances::default(),
            output_dir: PathBuf::from("."),
            format: OutputFormat::Json,
        }
    }
}

/// Resolve the master seed: explicit value, else the environment variable,
/// else zero.
pub fn resolve_seed(explicit: Option<u64>) -> u64 {
    explicit.or_else(|| {
        std::env::var(SEED_ENV_VAR)
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(0)
}

/// Derive a per-component stream seed from the master seed and a fixed
/// label (FNV-1a over the label bytes, folded with the master seed).
pub fn derive_stream(master: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h ^ master.rotate_left(17)
}

fn complex_pairs(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn matrix_from_pairs(n: usize, entries: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    if entries.len() != n || entries.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: entries.len() });
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        C64::new(entries[i][j][0], entries[i][j][1])
    }))
}

fn vector_pairs(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn vector_from_pairs(entries: &[[f64; 2]]) -> CVector {
    CVector::from_fn(entries.len(), |i, _| C64::new(entries[i][0], entries[i][1]))
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct StateMetadata {
    #[serde(default)]
    pub rank_pair: Option<(usize, usize)>,
    #[serde(default)]
    pub is_ppt: Option<bool>,
    #[serde(default)]
    pub provenance: String,
}

/// On-disk form of a Hermitian state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub dims: (usize, usize),
    pub entries: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub metadata: StateMetadata,
}

impl StateFile {
    pub fn from_state(state: &HermitianMatrix, metadata: StateMetadata) -> Self {
        Self {
            dims: (state.dims().na(), state.dims().nb()),
            entries: complex_pairs(state.matrix()),
            metadata,
        }
    }

    pub fn to_state(&self) -> Result<HermitianMatrix> {
        let dims = BipartiteDims::new(self.dims.0, self.dims.1)?;
        HermitianMatrix::new(dims, matrix_from_pairs(dims.n(), &self.entries)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VectorEntry {
    pub u: Vec<[f64; 2]>,
    pub v: Vec<[f64; 2]>,
    #[serde(default = "one")]
    pub norm_factor: f64,
}

fn one() -> f64 {
    1.0
}

/// On-disk form of an ordered product-vector set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VectorsFile {
    pub dims: (usize, usize),
    pub vectors: Vec<VectorEntry>,
}

impl VectorsFile {
    pub fn from_set(set: &ProductVectorSet) -> Self {
        Self {
            dims: (set.dims.na(), set.dims.nb()),
            vectors: set
                .vectors
                .iter()
                .map(|pv| VectorEntry {
                    u: vector_pairs(&pv.u),
                    v: vector_pairs(&pv.v),
                    norm_factor: pv.norm_factor,
                })
                .collect(),
        }
    }

    pub fn to_set(&self) -> Result<ProductVectorSet> {
        let dims = BipartiteDims::new(self.dims.0, self.dims.1)?;
        let vectors = self
            .vectors
            .iter()
            .map(|e| {
                ProductVector::new(
                    vector_from_pairs(&e.u),
                    vector_from_pairs(&e.v),
                    e.norm_factor,
                )
            })
            .collect();
        ProductVectorSet::new(dims, vectors)
    }
}

/// On-disk form of a pair of section directions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DirectionsFile {
    pub dims: (usize, usize),
    pub a1: Vec<Vec<[f64; 2]>>,
    pub a2: Vec<Vec<[f64; 2]>>,
}

impl DirectionsFile {
    pub fn from_directions(a1: &HermitianMatrix, a2: &HermitianMatrix) -> Self {
        Self {
            dims: (a1.dims().na(), a1.dims().nb()),
            a1: complex_pairs(a1.matrix()),
            a2: complex_pairs(a2.matrix()),
        }
    }

    pub fn to_directions(&self) -> Result<(HermitianMatrix, HermitianMatrix)> {
        let dims = BipartiteDims::new(self.dims.0, self.dims.1)?;
        Ok((
            HermitianMatrix::new(dims, matrix_from_pairs(dims.n(), &self.a1)?)?,
            HermitianMatrix::new(dims, matrix_from_pairs(dims.n(), &self.a2)?)?,
        ))
    }
}

/// On-disk form of a complex coefficient vector (e.g. the kernel combination
/// of the rank-4→5 seed).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoeffsFile {
    pub c: Vec<[f64; 2]>,
}

impl CoeffsFile {
    pub fn to_vector(&self) -> CVector {
        vector_from_pairs(&self.c)
    }
}

/// On-disk form of a subspace given by spanning vectors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubspaceFile {
    pub dims: (usize, usize),
    pub basis: Vec<Vec<[f64; 2]>>,
}

impl SubspaceFile {
    pub fn from_basis(dims: BipartiteDims, basis: &[CVector]) -> Self {
        Self {
            dims: (dims.na(), dims.nb()),
            basis: basis.iter().map(vector_pairs).collect(),
        }
    }

    pub fn to_basis(&self) -> Result<(BipartiteDims, Vec<CVector>)> {
        let dims = BipartiteDims::new(self.dims.0, self.dims.1)?;
        let basis: Vec<CVector> = self.basis.iter().map(|e| vector_from_pairs(e)).collect();
        for b in &basis {
            if b.len() != dims.n() {
                return Err(Error::DimensionMismatch { expected: dims.n(), got: b.len() });
            }
        }
        Ok((dims, basis))
    }
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let data = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&data)?)
}

pub fn save_state(path: &Path, state: &HermitianMatrix, metadata: StateMetadata) -> Result<()> {
    save_json(path, &StateFile::from_state(state, metadata))
}

pub fn load_state(path: &Path) -> Result<(HermitianMatrix, StateMetadata)> {
    let sf: StateFile = load_json(path)?;
    Ok((sf.to_state()?, sf.metadata))
}

/// Full-precision decimal formatting: 17 significant digits.
pub fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Trajectory CSV: t, arc_length, then the eigenvalues of ρ and ρᴾ ascending.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory, n: usize) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    let mut header = String::from("t,arc_length");
    for k in 1..=n {
        header.push_str(&format!(",rho_eig_{k}"));
    }
    for k in 1..=n {
        header.push_str(&format!(",rhopt_eig_{k}"));
    }
    writeln!(f, "{header}")?;
    for s in &traj.samples {
        let mut line = format!("{},{}", fmt_full(s.t), fmt_full(s.arc_length));
        for v in s.eig_rho.iter().chain(s.eig_rho_pt.iter()) {
            line.push(',');
            line.push_str(&fmt_full(*v));
        }
        writeln!(f, "{line}")?;
    }
    Ok(())
}

/// PCA CSV with the two largest principal components per sample.
pub fn write_pca_csv(path: &Path, points: &[[f64; 2]]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "pc1,pc2")?;
    for p in points {
        writeln!(f, "{},{}", fmt_full(p[0]), fmt_full(p[1]))?;
    }
    Ok(())
}

/// Section CSV: grid coordinates, classification label, and the two minimum
/// eigenvalues per point.
pub fn write_section_csv(path: &Path, map: &SectionMap) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "x,y,label,min_eig_rho,min_eig_rhopt")?;
    for iy in 0..map.grid {
        for ix in 0..map.grid {
            let label = match map.label(ix, iy) {
                crate::flow::SectionLabel::InsideP => "P",
                crate::flow::SectionLabel::DOnly => "D",
                crate::flow::SectionLabel::DptOnly => "DPT",
                crate::flow::SectionLabel::Outside => "OUT",
            };
            writeln!(
                f,
                "{},{},{},{},{}",
                fmt_full(map.coord(ix)),
                fmt_full(map.coord(iy)),
                label,
                fmt_full(map.min_eig_rho[iy * map.grid + ix]),
                fmt_full(map.min_eig_rho_pt[iy * map.grid + ix]),
            )?;
        }
    }
    Ok(())
}
