//! Block-diagonal matrix algebras `M_{n1}(C) + ... + M_{nk}(C)`: elements,
//! arithmetic, spectra, resolvents and the classical rank/trace oracles.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{self, CMatrix, ZERO};
use crate::rng::gaussian_matrix;

/// Relative residual accepted from a blockwise resolvent solve.
const RESOLVENT_RESIDUAL_TOL: f64 = 1e-10;

/// Block sizes of a finite-dimensional semisimple algebra.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct AlgebraSpec {
    block_sizes: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    block_sizes: Vec<usize>,
}

impl TryFrom<RawSpec> for AlgebraSpec {
    type Error = LabError;

    fn try_from(raw: RawSpec) -> Result<Self> {
        AlgebraSpec::new(raw.block_sizes)
    }
}

impl AlgebraSpec {
    pub fn new(block_sizes: Vec<usize>) -> Result<Self> {
        if block_sizes.is_empty() {
            return Err(LabError::InvalidSpec(
                "at least one block is required".into(),
            ));
        }
        if let Some(i) = block_sizes.iter().position(|&n| n == 0) {
            return Err(LabError::InvalidSpec(format!("block {i} has size 0")));
        }
        Ok(AlgebraSpec { block_sizes })
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    /// Vector-space dimension, the sum of `n_i^2`.
    pub fn dimension(&self) -> usize {
        self.block_sizes.iter().map(|n| n * n).sum()
    }

    /// Size of the identity representation, the sum of `n_i`.
    pub fn order(&self) -> usize {
        self.block_sizes.iter().sum()
    }
}

impl fmt::Display for AlgebraSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sizes: Vec<String> = self.block_sizes.iter().map(|n| n.to_string()).collect();
        write!(f, "({})", sizes.join(","))
    }
}

/// One complex matrix per block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawElement")]
pub struct Element {
    #[serde(with = "crate::serde_util::matrices")]
    blocks: Vec<CMatrix>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElement {
    #[serde(with = "crate::serde_util::matrices")]
    blocks: Vec<CMatrix>,
}

impl TryFrom<RawElement> for Element {
    type Error = LabError;

    fn try_from(raw: RawElement) -> Result<Self> {
        Element::new(raw.blocks)
    }
}

impl Element {
    pub fn new(blocks: Vec<CMatrix>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(LabError::InvalidSpec("element has no blocks".into()));
        }
        for (i, b) in blocks.iter().enumerate() {
            if !b.is_square() || b.nrows() == 0 {
                return Err(LabError::ShapeMismatch(format!(
                    "block {i} is {}x{}, expected a non-empty square matrix",
                    b.nrows(),
                    b.ncols()
                )));
            }
            if !linalg::is_finite(b) {
                return Err(LabError::NonFinite);
            }
        }
        Ok(Element { blocks })
    }

    /// Checks the element belongs to `spec`.
    pub fn in_spec(self, spec: &AlgebraSpec) -> Result<Self> {
        if self.spec() != *spec {
            return Err(LabError::ShapeMismatch(format!(
                "element has shape {}, expected {spec}",
                self.spec()
            )));
        }
        Ok(self)
    }

    pub fn zeros(spec: &AlgebraSpec) -> Self {
        Self::from_fn(spec, |_, n| CMatrix::zeros(n, n))
    }

    pub fn identity(spec: &AlgebraSpec) -> Self {
        Self::from_fn(spec, |_, n| CMatrix::identity(n, n))
    }

    /// Matrix unit `e_{row,col}` placed in `block`, zero elsewhere.
    pub fn unit(spec: &AlgebraSpec, block: usize, row: usize, col: usize) -> Self {
        Self::from_fn(spec, |b, n| {
            if b == block {
                linalg::unit(n, row, col)
            } else {
                CMatrix::zeros(n, n)
            }
        })
    }

    /// Element supported on `block` only.
    pub fn single_block(spec: &AlgebraSpec, block: usize, m: CMatrix) -> Result<Self> {
        let mut e = Self::zeros(spec);
        if m.shape() != e.blocks[block].shape() {
            return Err(LabError::ShapeMismatch(format!(
                "matrix is {}x{}, block {block} has size {}",
                m.nrows(),
                m.ncols(),
                spec.block_sizes()[block]
            )));
        }
        e.blocks[block] = m;
        Ok(e)
    }

    pub fn from_fn(spec: &AlgebraSpec, mut f: impl FnMut(usize, usize) -> CMatrix) -> Self {
        let blocks = spec
            .block_sizes()
            .iter()
            .enumerate()
            .map(|(b, &n)| f(b, n))
            .collect();
        Element { blocks }
    }

    /// Independent standard complex Gaussian entries.
    pub fn random<R: Rng + ?Sized>(spec: &AlgebraSpec, rng: &mut R) -> Self {
        Self::from_fn(spec, |_, n| gaussian_matrix(n, n, rng))
    }

    pub fn spec(&self) -> AlgebraSpec {
        AlgebraSpec {
            block_sizes: self.blocks.iter().map(|b| b.nrows()).collect(),
        }
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &CMatrix {
        &self.blocks[i]
    }

    pub fn into_blocks(self) -> Vec<CMatrix> {
        self.blocks
    }

    fn check_same_shape(&self, other: &Element) -> Result<()> {
        if self.blocks.len() != other.blocks.len()
            || self
                .blocks
                .iter()
                .zip(&other.blocks)
                .any(|(a, b)| a.shape() != b.shape())
        {
            return Err(LabError::ShapeMismatch(format!(
                "operands have shapes {} and {}",
                self.spec(),
                other.spec()
            )));
        }
        Ok(())
    }

    fn zip_with(
        &self,
        other: &Element,
        f: impl Fn(&CMatrix, &CMatrix) -> CMatrix,
    ) -> Result<Element> {
        self.check_same_shape(other)?;
        Ok(Element {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    pub fn checked_mul(&self, other: &Element) -> Result<Element> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn checked_add(&self, other: &Element) -> Result<Element> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn checked_sub(&self, other: &Element) -> Result<Element> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, alpha: Complex64) -> Element {
        self.map(|b| b * alpha)
    }

    /// Commutator `ab - ba`.
    pub fn commutator(&self, other: &Element) -> Result<Element> {
        self.checked_mul(other)?
            .checked_sub(&other.checked_mul(self)?)
    }

    pub fn map(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Element {
        Element {
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    /// Frobenius norm over all blocks.
    pub fn norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| linalg::frobenius(b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entry modulus over all blocks.
    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(linalg::max_abs).fold(0.0, f64::max)
    }

    /// Operator norm of the block-diagonal matrix.
    pub fn operator_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(linalg::operator_norm)
            .fold(0.0, f64::max)
    }

    /// Blocks with a nonzero entry.
    pub fn support(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| linalg::max_abs(b) > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// `|p^2 - p|` in Frobenius norm.
    pub fn idempotency_defect(&self) -> f64 {
        self.map(|b| b * b - b).norm()
    }

    pub fn distance(&self, other: &Element) -> Result<f64> {
        Ok(self.checked_sub(other)?.norm())
    }
}

/// A distinct spectral value with its algebraic multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub value: Complex64,
    pub multiplicity: usize,
}

/// Clustered spectrum of an element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub points: Vec<SpectralPoint>,
    /// Absolute merge radius used, `tol * max(rho, 1)`.
    pub cluster_tolerance: f64,
    pub contains_zero: bool,
    pub spectral_radius: f64,
}

impl SpectrumReport {
    /// Distinct nonzero spectral values.
    pub fn nonzero(&self) -> impl Iterator<Item = &SpectralPoint> {
        self.points.iter().filter(|p| p.value != ZERO)
    }

    pub fn nonzero_count(&self) -> usize {
        self.nonzero().count()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.points.iter().map(|p| p.multiplicity).sum()
    }

    /// Index of the point nearest `z`.
    pub fn nearest(&self, z: Complex64) -> Option<usize> {
        self.points
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (a.value - z).norm().total_cmp(&(b.value - z).norm()))
            .map(|(i, _)| i)
    }

    /// Index of the spectral point `z` refers to, if it is within the merge
    /// radius of one.
    pub fn locate(&self, z: Complex64) -> Option<usize> {
        self.nearest(z)
            .filter(|&i| (self.points[i].value - z).norm() <= self.cluster_tolerance)
    }

    /// Distance from point `i` to the nearest other spectral point, or
    /// `None` when the spectrum is a single point.
    pub fn gap(&self, i: usize) -> Option<f64> {
        let v = self.points[i].value;
        self.points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, p)| (p.value - v).norm())
            .min_by(f64::total_cmp)
    }

    /// Smallest distance between two distinct points.
    pub fn min_gap(&self) -> Option<f64> {
        (0..self.points.len())
            .filter_map(|i| self.gap(i))
            .min_by(f64::total_cmp)
    }
}

struct Cluster {
    sum: Complex64,
    count: usize,
    zero: bool,
}

impl Cluster {
    fn center(&self) -> Complex64 {
        if self.zero {
            ZERO
        } else {
            self.sum / self.count as f64
        }
    }
}

/// Agglomerates eigenvalues until all centers are more than `radius` apart.
/// Anything within `radius` of the origin is pinned to exactly zero.
pub(crate) fn cluster_eigenvalues(eigs: &[Complex64], radius: f64) -> Vec<SpectralPoint> {
    let mut clusters: Vec<Cluster> = eigs
        .iter()
        .map(|&z| Cluster {
            sum: z,
            count: 1,
            zero: false,
        })
        .collect();
    loop {
        for c in &mut clusters {
            if !c.zero && c.center().norm() <= radius {
                c.zero = true;
            }
        }
        let mut closest: Option<(usize, usize, f64)> = None;
        for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let d = (clusters[i].center() - clusters[j].center()).norm();
                if d <= radius && closest.is_none_or(|(_, _, best)| d < best) {
                    closest = Some((i, j, d));
                }
            }
        }
        let Some((i, j, _)) = closest else { break };
        let absorbed = clusters.swap_remove(j);
        let keep = &mut clusters[i];
        keep.sum += absorbed.sum;
        keep.count += absorbed.count;
        keep.zero |= absorbed.zero;
    }
    let mut points: Vec<SpectralPoint> = clusters
        .iter()
        .map(|c| SpectralPoint {
            value: c.center(),
            multiplicity: c.count,
        })
        .collect();
    points.sort_by(|a, b| {
        a.value
            .re
            .total_cmp(&b.value.re)
            .then(a.value.im.total_cmp(&b.value.im))
    });
    points
}

/// All eigenvalues of `a`, block by block, with algebraic multiplicity.
pub fn eigenvalues(a: &Element) -> Result<Vec<Complex64>> {
    let mut all = Vec::with_capacity(a.spec().order());
    for b in a.blocks() {
        all.extend(linalg::eigenvalues(b)?);
    }
    Ok(all)
}

fn radius_of(eigs: &[Complex64]) -> f64 {
    eigs.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn spectrum(a: &Element, tol: f64) -> Result<SpectrumReport> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(LabError::InvalidParameter(format!(
            "cluster tolerance must be positive, got {tol}"
        )));
    }
    let eigs = eigenvalues(a)?;
    let rho = radius_of(&eigs);
    let merge = tol * rho.max(1.0);
    let points = cluster_eigenvalues(&eigs, merge);
    let contains_zero = points.iter().any(|p| p.value == ZERO);
    Ok(SpectrumReport {
        points,
        cluster_tolerance: merge,
        contains_zero,
        spectral_radius: rho,
    })
}

pub fn spectral_radius(a: &Element) -> Result<f64> {
    Ok(radius_of(&eigenvalues(a)?))
}

/// Resolvent evaluator with the spectrum precomputed, for repeated solves on
/// a contour.
pub struct Resolvent<'a> {
    element: &'a Element,
    eigenvalues: Vec<Complex64>,
    floor: f64,
}

impl<'a> Resolvent<'a> {
    pub fn new(a: &'a Element, singular_floor: f64) -> Result<Self> {
        let eigenvalues = eigenvalues(a)?;
        let floor = singular_floor * radius_of(&eigenvalues).max(1.0);
        Ok(Resolvent {
            element: a,
            eigenvalues,
            floor,
        })
    }

    /// Minimum admissible distance from the spectrum.
    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// `(z 1 - a)^{-1}`.
    pub fn at(&self, z: Complex64) -> Result<Element> {
        if let Some(&eigenvalue) = self
            .eigenvalues
            .iter()
            .min_by(|a, b| (*a - z).norm().total_cmp(&(*b - z).norm()))
        {
            let distance = (eigenvalue - z).norm();
            if distance < self.floor {
                return Err(LabError::Singular {
                    z,
                    eigenvalue,
                    distance,
                });
            }
        }
        let mut blocks = Vec::with_capacity(self.element.blocks().len());
        for b in self.element.blocks() {
            let n = b.nrows();
            let shifted = CMatrix::identity(n, n) * z - b;
            let eye = CMatrix::identity(n, n);
            let r = linalg::solve(&shifted, &eye).ok_or(LabError::Singular {
                z,
                eigenvalue: z,
                distance: 0.0,
            })?;
            let residual = linalg::frobenius(&(&shifted * &r - &eye));
            let tolerance = RESOLVENT_RESIDUAL_TOL
                * (1.0 + linalg::frobenius(&shifted) * linalg::frobenius(&r));
            if residual > tolerance {
                return Err(LabError::ResolventResidual {
                    residual,
                    tolerance,
                });
            }
            blocks.push(r);
        }
        Ok(Element { blocks })
    }
}

/// `(z 1 - a)^{-1}`, rejecting `z` within `singular_floor * max(rho, 1)` of
/// the spectrum.
pub fn resolvent(a: &Element, z: Complex64, singular_floor: f64) -> Result<Element> {
    Resolvent::new(a, singular_floor)?.at(z)
}

/// Per block, the number of singular values above `tol` times the largest
/// singular value of the whole element. The cutoff is shared so that a block
/// holding only rounding noise counts as zero.
pub fn block_ranks(a: &Element, tol: f64) -> Vec<usize> {
    let svs: Vec<Vec<f64>> = a.blocks().iter().map(linalg::singular_values).collect();
    let largest = svs
        .iter()
        .filter_map(|s| s.first().copied())
        .fold(0.0, f64::max);
    let cutoff = if largest > 0.0 { tol * largest } else { tol };
    svs.iter().map(|s| linalg::count_above(s, cutoff)).collect()
}

/// Total of [`block_ranks`].
pub fn classical_rank(a: &Element, tol: f64) -> usize {
    block_ranks(a, tol).iter().sum()
}

/// Sum of all diagonal entries.
pub fn classical_trace(a: &Element) -> Complex64 {
    a.blocks().iter().map(linalg::trace).sum()
}

/// Blockwise traces.
pub fn block_traces(a: &Element) -> Vec<Complex64> {
    a.blocks().iter().map(linalg::trace).collect()
}

/// Convenience for tests and examples: block-diagonal element with the given
/// real diagonal in each block.
pub fn diagonal(blocks: &[&[f64]]) -> Element {
    let mats = blocks
        .iter()
        .map(|d| {
            CMatrix::from_fn(d.len(), d.len(), |i, j| {
                if i == j {
                    Complex64::new(d[i], 0.0)
                } else {
                    ZERO
                }
            })
        })
        .collect();
    Element::new(mats).expect("diagonal blocks are square")
}

/// Element from real row-major blocks.
pub fn real_blocks(blocks: &[&[&[f64]]]) -> Result<Element> {
    let mats = blocks
        .iter()
        .map(|rows| {
            let n = rows.len();
            let m = rows.first().map_or(0, |r| r.len());
            if rows.iter().any(|r| r.len() != m) {
                return Err(LabError::ShapeMismatch("ragged rows".into()));
            }
            Ok(CMatrix::from_fn(n, m, |i, j| {
                Complex64::new(rows[i][j], 0.0)
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Element::new(mats)
}
