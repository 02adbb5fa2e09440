//! Subspaces, fusion frames, and the frame operator with its bounds.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gram, lowdin_orthonormalize, orthonormality_defect, sym_eigen, Matrix};
use crate::rng::{gaussian_matrix, RngStream};

/// Orthonormality tolerance for subspace bases.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-8;

/// An `s`-dimensional subspace of ℝ^N held as an `N×s` orthonormal basis.
/// The projector `UUᵀ` is never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    basis: Matrix,
}

impl Subspace {
    pub fn new(basis: Matrix) -> Result<Self> {
        if basis.cols() > basis.rows() {
            return Err(Error::InvalidDims(format!(
                "subspace dimension {} exceeds ambient dimension {}",
                basis.cols(),
                basis.rows()
            )));
        }
        let deviation = orthonormality_defect(&basis);
        if deviation >= ORTHONORMAL_TOLERANCE {
            return Err(Error::NotOrthonormal { index: 0, deviation });
        }
        Ok(Subspace { basis })
    }

    /// `span{e_i : i in coords}` in ℝ^N.
    pub fn coordinate(ambient_dim: usize, coords: &[usize]) -> Result<Self> {
        if coords.is_empty() || ambient_dim == 0 {
            return Err(Error::InvalidDims("empty coordinate subspace".into()));
        }
        let mut basis = Matrix::zeros(ambient_dim, coords.len());
        for (j, &i) in coords.iter().enumerate() {
            if i >= ambient_dim {
                return Err(Error::InvalidDims(format!(
                    "coordinate {i} out of range for N={ambient_dim}"
                )));
            }
            basis.set(i, j, 1.0);
        }
        Self::new(basis)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// Image of the subspace under the orthogonal map `q`.
    pub fn rotated(&self, q: &Matrix) -> Result<Subspace> {
        Subspace::new(q.matmul(&self.basis)?)
    }
}

/// Weighted family of subspaces over a common ambient space.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionFrame {
    ambient_dim: usize,
    subspaces: Vec<Subspace>,
    weights: Vec<f64>,
}

impl FusionFrame {
    pub fn new(subspaces: Vec<Subspace>, weights: Vec<f64>) -> Result<Self> {
        let Some(first) = subspaces.first() else {
            return Err(Error::InvalidDims("a fusion frame needs at least one subspace".into()));
        };
        let ambient_dim = first.ambient_dim();
        if let Some(i) = subspaces.iter().position(|s| s.ambient_dim() != ambient_dim) {
            return Err(Error::DimensionMismatch(format!(
                "subspace {i} lives in dimension {}, expected {ambient_dim}",
                subspaces[i].ambient_dim()
            )));
        }
        if weights.len() != subspaces.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} subspaces",
                weights.len(),
                subspaces.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Malformed(format!(
                "weight {i} must be positive and finite, got {}",
                weights[i]
            )));
        }
        Ok(FusionFrame {
            ambient_dim,
            subspaces,
            weights,
        })
    }

    pub fn unit_weights(subspaces: Vec<Subspace>) -> Result<Self> {
        let k = subspaces.len();
        Self::new(subspaces, vec![1.0; k])
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn len(&self) -> usize {
        self.subspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subspaces.is_empty()
    }

    pub fn subspaces(&self) -> &[Subspace] {
        &self.subspaces
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Common subspace dimension, if all subspaces share one.
    pub fn equi_dimension(&self) -> Option<usize> {
        let s = self.subspaces[0].dim();
        self.subspaces.iter().all(|x| x.dim() == s).then_some(s)
    }

    /// Sum of the subspace dimensions.
    pub fn total_dim(&self) -> usize {
        self.subspaces.iter().map(Subspace::dim).sum()
    }

    /// Applies one orthogonal map to every subspace.
    pub fn rotated(&self, q: &Matrix) -> Result<FusionFrame> {
        let subspaces = self
            .subspaces
            .iter()
            .map(|s| s.rotated(q))
            .collect::<Result<Vec<_>>>()?;
        FusionFrame::new(subspaces, self.weights.clone())
    }

    /// `span{e_0..e_{s-1}}, span{e_s..e_{2s-1}}, …` covering ℝ^N with unit
    /// weights: the canonical Parseval fusion frame.
    pub fn orthonormal_partition(ambient_dim: usize, block: usize) -> Result<Self> {
        if block == 0 || !ambient_dim.is_multiple_of(block) {
            return Err(Error::InvalidDims(format!(
                "block size {block} does not divide N={ambient_dim}"
            )));
        }
        let subspaces = (0..ambient_dim / block)
            .map(|b| {
                let coords: Vec<usize> = (b * block..(b + 1) * block).collect();
                Subspace::coordinate(ambient_dim, &coords)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::unit_weights(subspaces)
    }
}

/// `S = Σ vᵢ² UᵢUᵢᵀ`.
pub fn frame_operator(ff: &FusionFrame) -> Matrix {
    let n = ff.ambient_dim();
    let mut s = Matrix::zeros(n, n);
    for (sub, &w) in ff.subspaces().iter().zip(ff.weights()) {
        let w2 = w * w;
        let u = sub.basis();
        for i in 0..n {
            let ui = u.row(i);
            for j in i..n {
                let dot: f64 = ui.iter().zip(u.row(j)).map(|(a, b)| a * b).sum();
                s.set(i, j, s.get(i, j) + w2 * dot);
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            s.set(i, j, s.get(j, i));
        }
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrameBoundsReport {
    pub lower: f64,
    pub upper: f64,
    pub tight_constant: f64,
    /// `+∞` when the lower bound is zero.
    pub epsilon_tight: f64,
}

impl FrameBoundsReport {
    /// Uses `C = sqrt(AB)`, which gives the smallest ε with
    /// `A = C/(1+ε)` and `B = C(1+ε)`.
    pub fn from_bounds(lower: f64, upper: f64) -> Self {
        let tight_constant = (lower * upper).sqrt();
        let epsilon_tight = if lower > 0.0 {
            (upper / lower).sqrt() - 1.0
        } else {
            f64::INFINITY
        };
        FrameBoundsReport {
            lower,
            upper,
            tight_constant,
            epsilon_tight,
        }
    }
}

/// Optimal frame bounds: the extreme eigenvalues of the frame operator.
///
/// A smallest eigenvalue within rounding of zero (below `N·2⁻⁵²·B`) is
/// reported as exactly zero.
pub fn frame_bounds(ff: &FusionFrame) -> Result<FrameBoundsReport> {
    let eig = sym_eigen(&frame_operator(ff))?;
    let upper = eig.max().max(0.0);
    let mut lower = eig.min();
    if lower <= ff.ambient_dim() as f64 * f64::EPSILON * upper {
        lower = 0.0;
    }
    Ok(FrameBoundsReport::from_bounds(lower, upper))
}

/// Optimal Riesz bounds `(λ_min, λ_max)` of the Gram matrix of the columns.
pub fn riesz_bounds(vectors: &Matrix) -> Result<(f64, f64)> {
    let eig = sym_eigen(&gram(vectors))?;
    Ok((eig.min(), eig.max()))
}

/// Smallest ε making the columns ε-Riesz, or `None` if they are dependent.
pub fn riesz_epsilon(lower: f64, upper: f64) -> Option<f64> {
    (lower > 0.0).then(|| upper.max(1.0 / lower) - 1.0)
}

/// Fusion frame from an `(Ks)×N` Gaussian matrix: each block of `s` rows is
/// orthonormalized into one subspace of ℝ^N. Weights are 1.
pub fn build_fusion_frame_from_gaussian(
    stream: &mut RngStream,
    ambient_dim: usize,
    subspace_dim: usize,
    count: usize,
) -> Result<FusionFrame> {
    if subspace_dim == 0 || subspace_dim > ambient_dim || count == 0 {
        return Err(Error::InvalidDims(format!(
            "need 1 <= s <= N and K >= 1, got N={ambient_dim}, s={subspace_dim}, K={count}"
        )));
    }
    let x = gaussian_matrix(stream, count * subspace_dim, ambient_dim)?;
    let mut subspaces = Vec::with_capacity(count);
    for k in 0..count {
        let mut block = Matrix::zeros(ambient_dim, subspace_dim);
        for j in 0..subspace_dim {
            for (i, &v) in x.row(k * subspace_dim + j).iter().enumerate() {
                block.set(i, j, v);
            }
        }
        let basis = match lowdin_orthonormalize(&block) {
            Err(Error::RankDeficient { .. }) => {
                let fresh = gaussian_matrix(stream, subspace_dim, ambient_dim)?;
                lowdin_orthonormalize(&fresh.transpose())?
            }
            other => other?,
        };
        subspaces.push(Subspace::new(basis)?);
    }
    FusionFrame::unit_weights(subspaces)
}

/// On-disk frame representation.
///
/// Each subspace is a list of basis vectors, each a list of `dim` doubles.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameFile {
    pub dim: usize,
    pub weights: Vec<f64>,
    pub subspaces: Vec<Vec<Vec<f64>>>,
}

impl From<&FusionFrame> for FrameFile {
    fn from(ff: &FusionFrame) -> Self {
        FrameFile {
            dim: ff.ambient_dim(),
            weights: ff.weights().to_vec(),
            subspaces: ff.subspaces().iter().map(|s| s.basis().columns()).collect(),
        }
    }
}

impl TryFrom<FrameFile> for FusionFrame {
    type Error = Error;

    fn try_from(file: FrameFile) -> Result<Self> {
        if file.dim == 0 {
            return Err(Error::Malformed("dim must be positive".into()));
        }
        if file.subspaces.is_empty() {
            return Err(Error::Malformed("no subspaces".into()));
        }
        let mut subspaces = Vec::with_capacity(file.subspaces.len());
        for (index, vectors) in file.subspaces.iter().enumerate() {
            if vectors.is_empty() {
                return Err(Error::Malformed(format!("subspace {index} has no basis vectors")));
            }
            if let Some(v) = vectors.iter().position(|v| v.len() != file.dim) {
                return Err(Error::Malformed(format!(
                    "subspace {index}, vector {v}: expected {} entries, got {}",
                    file.dim,
                    vectors[v].len()
                )));
            }
            let basis = Matrix::from_columns(vectors)
                .map_err(|e| Error::Malformed(format!("subspace {index}: {e}")))?;
            let sub = Subspace::new(basis).map_err(|e| match e {
                Error::NotOrthonormal { deviation, .. } => Error::NotOrthonormal { index, deviation },
                Error::InvalidDims(msg) => Error::Malformed(format!("subspace {index}: {msg}")),
                other => other,
            })?;
            subspaces.push(sub);
        }
        FusionFrame::new(subspaces, file.weights)
    }
}

impl FusionFrame {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&FrameFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: FrameFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
