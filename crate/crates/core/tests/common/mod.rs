//! Element generators shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use tracelab::linalg::{inverse, operator_norm, CMatrix};
use tracelab::rng::{complex_gaussian, gaussian_matrix, LabRng};
use tracelab::socle::random_projection;
use tracelab::{AlgebraSpec, Complex64, Element};

pub const CORPUS_SPECS: [&[usize]; 5] = [&[1], &[3], &[2, 2], &[2, 3], &[1, 1, 4]];

pub fn spec(sizes: &[usize]) -> AlgebraSpec {
    AlgebraSpec::new(sizes.to_vec()).unwrap()
}

/// `G H` with `G` of shape `n x r`, `r` uniform in `0..=n` per block.
pub fn low_rank(spec: &AlgebraSpec, rng: &mut LabRng) -> Element {
    Element::from_fn(spec, |_, n| {
        let r = rng.random_range(0..=n);
        gaussian_matrix(n, r, rng) * gaussian_matrix(r, n, rng)
    })
}

/// Well-conditioned random similarity `1 + g / (2 |g|)`.
pub fn similarity(n: usize, rng: &mut LabRng) -> (CMatrix, CMatrix) {
    let g = gaussian_matrix(n, n, rng);
    let s = CMatrix::identity(n, n) + g.unscale(2.0 * operator_norm(&g));
    let inv = inverse(&s).unwrap();
    (s, inv)
}

/// `S diag(values) S^-1` per block; `values` is consumed block by block.
pub fn conjugated_diagonal(spec: &AlgebraSpec, values: &[Complex64], rng: &mut LabRng) -> Element {
    let mut it = values.iter();
    Element::from_fn(spec, |_, n| {
        let d = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                *it.next().unwrap()
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let (s, inv) = similarity(n, rng);
        &s * d * inv
    })
}

/// Diagonalizable element reusing one nonzero eigenvalue across blocks, so
/// that nonzero spectral values carry multiplicity above one.
pub fn repeated_eigenvalue(spec: &AlgebraSpec, rng: &mut LabRng) -> Element {
    let shared = complex_gaussian(rng) + Complex64::new(1.5, 0.0);
    let values: Vec<Complex64> = (0..spec.order())
        .map(|_| match rng.random_range(0..3) {
            0 => Complex64::new(0.0, 0.0),
            1 => shared,
            _ => complex_gaussian(rng) * 2.0,
        })
        .collect();
    conjugated_diagonal(spec, &values, rng)
}

/// Corpus element of kind `i % 4`: Gaussian, low rank, projection, repeated
/// eigenvalue.
pub fn corpus_element(spec: &AlgebraSpec, i: usize, rng: &mut LabRng) -> Element {
    match i % 4 {
        0 => Element::random(spec, rng),
        1 => low_rank(spec, rng),
        2 => random_projection(spec, rng),
        _ => repeated_eigenvalue(spec, rng),
    }
}

/// `count` elements cycling through [`CORPUS_SPECS`].
pub fn corpus(count: usize, rng: &mut LabRng) -> Vec<Element> {
    (0..count)
        .map(|i| {
            corpus_element(
                &spec(CORPUS_SPECS[i % CORPUS_SPECS.len()]),
                i / CORPUS_SPECS.len(),
                rng,
            )
        })
        .collect()
}

/// Distinct nonzero values, pairwise and from zero at least `gap` apart.
pub fn separated_values(count: usize, gap: f64, rng: &mut LabRng) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::with_capacity(count);
    while out.len() < count {
        let z = complex_gaussian(rng) * 2.0;
        if z.norm() >= gap && out.iter().all(|w| (z - w).norm() >= gap) {
            out.push(z);
        }
    }
    out
}

/// `sum lambda_i p_i` with rank-one `p_i` and distinct nonzero `lambda_i`
/// at least `gap` apart (and from zero). Returns the element and the values.
pub fn maximal_element(
    spec: &AlgebraSpec,
    gap: f64,
    rng: &mut LabRng,
) -> (Element, Vec<Complex64>) {
    let ranks: Vec<usize> = spec
        .block_sizes()
        .iter()
        .map(|&n| rng.random_range(1..=n))
        .collect();
    let nonzero: Vec<Complex64> = separated_values(ranks.iter().sum(), gap, rng);
    let mut values = Vec::with_capacity(spec.order());
    let mut next = nonzero.iter();
    for (&n, &r) in spec.block_sizes().iter().zip(&ranks) {
        for i in 0..n {
            values.push(if i < r {
                *next.next().unwrap()
            } else {
                Complex64::new(0.0, 0.0)
            });
        }
    }
    (conjugated_diagonal(spec, &values, rng), nonzero)
}
