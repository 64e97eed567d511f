//! Explicit commutator expansions.
//!
//! A traceless `n x n` matrix is written as a combination of commutators of
//! matrix units: off-diagonal entries via `[e_ii, e_ij] = e_ij`, and the
//! diagonal via the telescoping `[e_{i,i+1}, e_{i+1,i}] = e_ii - e_{i+1,i+1}`
//! with partial sums of the diagonal as coefficients.
//!
//! The difference of two rank-one idempotents is a single commutator of
//! rank-one operators: with `P = x f`, `Q = y g`, `S = x g`, `T = y f` one has
//! `ST = P` and `TS = Q`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraSpec, Element};
use crate::error::{LabError, Result};
use crate::linalg::{self, CMatrix, ZERO};

/// Relative traceless tolerance: `|tr m| <= TRACELESS_TOL * max(1, |m|_F)`.
pub const TRACELESS_TOL: f64 = 1e-9;

/// `f(x)` below this fraction of `|f| |x|` is treated as zero.
pub const PAIRING_TOL: f64 = 1e-12;

/// Matrix unit `e_{row,col}` inside one block, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixUnit {
    pub block: usize,
    pub row: usize,
    pub col: usize,
}

impl MatrixUnit {
    fn fits(&self, spec: &AlgebraSpec) -> bool {
        spec.block_sizes()
            .get(self.block)
            .is_some_and(|&n| self.row < n && self.col < n)
    }
}

/// `c [left, right]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorTerm {
    #[serde(rename = "c")]
    pub coefficient: Complex64,
    pub left: MatrixUnit,
    pub right: MatrixUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorCertificate {
    pub terms: Vec<CommutatorTerm>,
    pub target: Element,
    /// Largest entry of `sum c [left, right] - target`.
    pub reconstruction_defect: f64,
}

fn block_terms(block: usize, m: &CMatrix) -> Vec<CommutatorTerm> {
    let n = m.nrows();
    let unit = |row, col| MatrixUnit { block, row, col };
    let mut terms = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)] != ZERO {
                terms.push(CommutatorTerm {
                    coefficient: m[(i, j)],
                    left: unit(i, i),
                    right: unit(i, j),
                });
            }
        }
    }
    let mut partial = ZERO;
    for i in 0..n.saturating_sub(1) {
        partial += m[(i, i)];
        if partial != ZERO {
            terms.push(CommutatorTerm {
                coefficient: partial,
                left: unit(i, i + 1),
                right: unit(i + 1, i),
            });
        }
    }
    terms
}

/// Certificate for an element whose blocks are each traceless.
pub fn decompose_element(a: &Element) -> Result<CommutatorCertificate> {
    for (block, m) in a.blocks().iter().enumerate() {
        let trace = linalg::trace(m);
        if trace.norm() > TRACELESS_TOL * linalg::frobenius(m).max(1.0) {
            return Err(LabError::NotTraceless { block, trace });
        }
    }
    let terms = a
        .blocks()
        .iter()
        .enumerate()
        .flat_map(|(b, m)| block_terms(b, m))
        .collect();
    let mut cert = CommutatorCertificate {
        terms,
        target: a.clone(),
        reconstruction_defect: 0.0,
    };
    cert.reconstruction_defect = verify_certificate(&cert);
    Ok(cert)
}

/// Certificate for a single traceless matrix, as block 0.
pub fn commutator_decompose(m: &CMatrix) -> Result<CommutatorCertificate> {
    decompose_element(&Element::new(vec![m.clone()])?)
}

/// Recomputes the reconstruction defect from the terms by dense
/// multiplication. Terms naming a unit outside the target's shape give an
/// infinite defect.
pub fn verify_certificate(cert: &CommutatorCertificate) -> f64 {
    let spec = cert.target.spec();
    let mut sum: Vec<CMatrix> = spec
        .block_sizes()
        .iter()
        .map(|&n| CMatrix::zeros(n, n))
        .collect();
    for t in &cert.terms {
        if !t.left.fits(&spec) || !t.right.fits(&spec) || t.left.block != t.right.block {
            return f64::INFINITY;
        }
        let n = spec.block_sizes()[t.left.block];
        let l = linalg::unit(n, t.left.row, t.left.col);
        let r = linalg::unit(n, t.right.row, t.right.col);
        sum[t.left.block] += (&l * &r - &r * &l) * t.coefficient;
    }
    sum.iter()
        .zip(cert.target.blocks())
        .map(|(s, m)| linalg::max_abs(&(s - m)))
        .fold(0.0, f64::max)
}

/// Rank-one idempotents `P = x f`, `Q = y g` and the rank-one `S`, `T` with
/// `P - Q = ST - TS`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOnePair {
    pub x: Vec<Complex64>,
    /// Normalized so that `f(x) = 1`.
    pub f: Vec<Complex64>,
    pub y: Vec<Complex64>,
    /// Normalized so that `g(y) = 1`.
    pub g: Vec<Complex64>,
    #[serde(rename = "P", with = "crate::serde_util::matrix")]
    pub p: CMatrix,
    #[serde(rename = "Q", with = "crate::serde_util::matrix")]
    pub q: CMatrix,
    #[serde(rename = "S", with = "crate::serde_util::matrix")]
    pub s: CMatrix,
    #[serde(rename = "T", with = "crate::serde_util::matrix")]
    pub t: CMatrix,
    /// Largest entry of `(P - Q) - (ST - TS)`.
    pub commutator_defect: f64,
    pub rank_s: usize,
    pub rank_t: usize,
}

fn pairing(f: &[Complex64], x: &[Complex64]) -> Complex64 {
    f.iter().zip(x).map(|(a, b)| a * b).sum()
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn outer(x: &[Complex64], f: &[Complex64]) -> CMatrix {
    CMatrix::from_fn(x.len(), f.len(), |i, j| x[i] * f[j])
}

/// Normalizes `f` against `x`, rejecting a numerically zero pairing.
fn normalized(x: &[Complex64], f: &[Complex64]) -> Result<Vec<Complex64>> {
    let fx = pairing(f, x);
    if fx.norm().is_nan() || fx.norm() <= PAIRING_TOL * vec_norm(f) * vec_norm(x) {
        return Err(LabError::DegenerateProjection { pairing: fx });
    }
    Ok(f.iter().map(|z| z / fx).collect())
}

/// Builds `P`, `Q`, `S = x g`, `T = y f` and checks `P - Q = ST - TS`.
pub fn rank_one_commutator(
    x: &[Complex64],
    f: &[Complex64],
    y: &[Complex64],
    g: &[Complex64],
) -> Result<RankOnePair> {
    let n = x.len();
    if n == 0 || [f.len(), y.len(), g.len()].iter().any(|&l| l != n) {
        return Err(LabError::ShapeMismatch(format!(
            "x, f, y, g must share a nonzero length, got {}, {}, {}, {}",
            n,
            f.len(),
            y.len(),
            g.len()
        )));
    }
    if [x, f, y, g]
        .iter()
        .any(|v| v.iter().any(|z| !z.is_finite()))
    {
        return Err(LabError::NonFinite);
    }
    let f = normalized(x, f)?;
    let g = normalized(y, g)?;
    let p = outer(x, &f);
    let q = outer(y, &g);
    let s = outer(x, &g);
    let t = outer(y, &f);
    let commutator_defect = linalg::max_abs(&((&p - &q) - (&s * &t - &t * &s)));
    let rank_s = linalg::numerical_rank(&s, 1e-9);
    let rank_t = linalg::numerical_rank(&t, 1e-9);

    let scale = linalg::max_abs(&s).max(1.0) * linalg::max_abs(&t).max(1.0) * n as f64;
    if commutator_defect > PAIRING_TOL * scale || rank_s != 1 || rank_t != 1 {
        return Err(LabError::TheoremViolation {
            theorem: "rank-one commutator identity".into(),
            detail: format!("defect {commutator_defect:e}, rank S {rank_s}, rank T {rank_t}"),
        });
    }
    Ok(RankOnePair {
        x: x.to_vec(),
        f,
        y: y.to_vec(),
        g,
        p,
        q,
        s,
        t,
        commutator_defect,
        rank_s,
        rank_t,
    })
}
