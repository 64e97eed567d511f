//! Dense complex linear algebra on single matrix blocks.
//!
//! Storage, LU and SVD come from `nalgebra`. Eigenvalues are computed here by
//! Householder reduction to upper Hessenberg form followed by single-shift
//! complex QR iterations with Wilkinson shifts, so the spectral routes of the
//! crate never share code with the SVD-based rank oracle.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::LabError;

/// Dense complex matrix, one block of an algebra element.
pub type CMatrix = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// QR sweeps allowed per eigenvalue before giving up.
const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Frobenius norm.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `tol` times the largest one (or above
/// `tol` itself for a zero matrix).
pub fn numerical_rank(m: &CMatrix, tol: f64) -> usize {
    let sv = singular_values(m);
    let largest = sv.first().copied().unwrap_or(0.0);
    let cutoff = if largest > 0.0 { tol * largest } else { tol };
    count_above(&sv, cutoff)
}

/// Number of singular values strictly above an absolute cutoff.
pub fn count_above(singular_values: &[f64], cutoff: f64) -> usize {
    singular_values.iter().filter(|&&s| s > cutoff).count()
}

/// Spectral (operator 2-) norm.
pub fn operator_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Solves `m * x = rhs` by LU with partial pivoting.
pub fn solve(m: &CMatrix, rhs: &CMatrix) -> Option<CMatrix> {
    m.clone().lu().solve(rhs)
}

pub fn inverse(m: &CMatrix) -> Option<CMatrix> {
    m.clone().try_inverse()
}

/// Minimum-norm least-squares solution of `m * x = rhs`, discarding singular
/// values below `rel_tol` times the largest.
pub fn least_squares(m: &CMatrix, rhs: &CMatrix, rel_tol: f64) -> CMatrix {
    let largest = operator_norm(m);
    if largest == 0.0 {
        return CMatrix::zeros(m.ncols(), rhs.ncols());
    }
    let svd = m.clone().svd(true, true);
    svd.solve(rhs, rel_tol * largest)
        .unwrap_or_else(|_| CMatrix::zeros(m.ncols(), rhs.ncols()))
}

/// `n x n` matrix unit with a one at `(row, col)`.
pub fn unit(n: usize, row: usize, col: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(row, col)] = ONE;
    m
}

/// Eigenvalues of a square complex matrix, with algebraic multiplicity.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>, LabError> {
    assert!(m.is_square(), "eigenvalues of a non-square matrix");
    let n = m.nrows();
    if !is_finite(m) {
        return Err(LabError::NonFinite);
    }
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![m[(0, 0)]]),
        _ => {}
    }
    let mut h = m.clone();
    reduce_to_hessenberg(&mut h);
    hessenberg_qr(&mut h)?;
    Ok((0..n).map(|i| h[(i, i)]).collect())
}

fn reduce_to_hessenberg(h: &mut CMatrix) {
    let n = h.nrows();
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let mut v: Vec<Complex64> = (0..len).map(|i| h[(k + 1 + i, k)]).collect();
        let tail_norm = v[1..].iter().map(|z| z.norm_sqr()).sum::<f64>();
        if tail_norm == 0.0 {
            continue;
        }
        let x0 = v[0];
        let norm = (x0.norm_sqr() + tail_norm).sqrt();
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        // reflector maps x to -phase*|x|*e1
        v[0] = x0 + phase * norm;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut v {
            *z /= vnorm;
        }
        // H <- (I - 2vv*) H on rows k+1..n
        for col in 0..n {
            let dot: Complex64 = (0..len).map(|i| v[i].conj() * h[(k + 1 + i, col)]).sum();
            for i in 0..len {
                h[(k + 1 + i, col)] -= v[i] * dot * 2.0;
            }
        }
        // H <- H (I - 2vv*) on columns k+1..n
        for row in 0..n {
            let dot: Complex64 = (0..len).map(|i| h[(row, k + 1 + i)] * v[i]).sum();
            for i in 0..len {
                h[(row, k + 1 + i)] -= dot * v[i].conj() * 2.0;
            }
        }
        for i in 1..len {
            h[(k + 1 + i, k)] = ZERO;
        }
    }
}

/// Rotation `[c s; -conj(s) c]` sending `(a, b)` to `(r, 0)`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    if b == ZERO {
        return (1.0, ZERO);
    }
    if a == ZERO {
        return (0.0, ONE);
    }
    let an = a.norm();
    let norm = an.hypot(b.norm());
    (an / norm, (a / an) * b.conj() / norm)
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let root = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let (l1, l2) = (mean + root, mean - root);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn hessenberg_qr(h: &mut CMatrix) -> Result<(), LabError> {
    let n = h.nrows();
    let scale = frobenius(h).max(f64::MIN_POSITIVE);
    let mut hi = n - 1;
    let mut since_deflation = 0usize;
    let mut total = 0usize;
    let budget = MAX_SWEEPS_PER_EIGENVALUE * n;

    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let mut s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if s == 0.0 {
                s = scale;
            }
            if h[(lo, lo - 1)].norm() <= f64::EPSILON * s {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        total += 1;
        since_deflation += 1;
        if total > budget {
            return Err(LabError::EigenNonConvergence {
                size: n,
                sweeps: total,
            });
        }

        let shift = if since_deflation.is_multiple_of(11) {
            // exceptional shift to break cycles
            h[(hi, hi)] + Complex64::new(0.75, 0.5) * h[(hi, hi - 1)].norm()
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        for i in lo..=hi {
            h[(i, i)] -= shift;
        }
        let mut rotations = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for col in k..=hi {
                let top = h[(k, col)];
                let bot = h[(k + 1, col)];
                h[(k, col)] = top * c + s * bot;
                h[(k + 1, col)] = -s.conj() * top + bot * c;
            }
            h[(k + 1, k)] = ZERO;
            rotations.push((c, s));
        }
        for (offset, &(c, s)) in rotations.iter().enumerate() {
            let k = lo + offset;
            for row in lo..=(k + 1).min(hi) {
                let left = h[(row, k)];
                let right = h[(row, k + 1)];
                h[(row, k)] = left * c + s.conj() * right;
                h[(row, k + 1)] = -s * left + right * c;
            }
        }
        for i in lo..=hi {
            h[(i, i)] += shift;
        }
    }
    Ok(())
}
