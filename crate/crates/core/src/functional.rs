//! Linear functionals on the algebra and the conditions that single out the
//! trace.
//!
//! Every linear functional on a direct sum of matrix blocks has the form
//! `f(a) = sum_i tr(W_i a_i)` for weight matrices `W_i`. It is tracial exactly
//! when each `W_i` is scalar, and a multiple of the trace when the scalars
//! agree across blocks. The sampled checks below test the other
//! characterizations (vanishing on nilpotents, on square-zero elements,
//! constancy on rank-one projections) without looking at the weights, so
//! they can be compared against the weight test.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{spectral_radius, AlgebraSpec, Element};
use crate::error::{LabError, Result};
use crate::linalg::{self, CMatrix, ONE, ZERO};
use crate::rng::{self, gaussian_matrix, LabRng};

/// Default tolerance, applied after dividing `f` by its largest block
/// weight norm.
pub const FUNCTIONAL_TOL: f64 = 1e-8;

/// Random pairs used by the spot check in [`is_tracial`].
const TRACIAL_SPOT_CHECKS: usize = 8;

/// Rank-one samples `u v* / (v* u)` with `|v* u|` below this fraction of
/// `|u| |v|` are redrawn.
const PAIRING_FLOOR: f64 = 1e-2;

/// Conjugating matrices with a larger condition number are redrawn.
const CONDITION_CEILING: f64 = 1e4;

const TRACIAL_STREAM: u64 = 0x7472_6163_6961_6c00;
const SQUARE_ZERO_STREAM: u64 = 0x7371_7a65_726f_0000;
const NILPOTENT_STREAM: u64 = 0x6e69_6c70_6f74_0000;
const RANK_ONE_STREAM: u64 = 0x7261_6e6b_3100_0000;

/// `a -> sum_i tr(W_i a_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFunctional")]
pub struct Functional {
    #[serde(with = "crate::serde_util::matrices")]
    weights: Vec<CMatrix>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunctional {
    #[serde(with = "crate::serde_util::matrices")]
    weights: Vec<CMatrix>,
}

impl TryFrom<RawFunctional> for Functional {
    type Error = LabError;

    fn try_from(raw: RawFunctional) -> Result<Self> {
        Functional::new(raw.weights)
    }
}

impl Functional {
    pub fn new(weights: Vec<CMatrix>) -> Result<Self> {
        // Same shape rules as an element.
        let weights = Element::new(weights)?.into_blocks();
        Ok(Functional { weights })
    }

    pub fn from_element(w: Element) -> Self {
        Functional {
            weights: w.into_blocks(),
        }
    }

    /// `alpha_i tr` on block `i`.
    pub fn block_scalars(spec: &AlgebraSpec, alphas: &[Complex64]) -> Result<Self> {
        if alphas.len() != spec.num_blocks() {
            return Err(LabError::ShapeMismatch(format!(
                "{} scalars for {} blocks",
                alphas.len(),
                spec.num_blocks()
            )));
        }
        Ok(Functional {
            weights: spec
                .block_sizes()
                .iter()
                .zip(alphas)
                .map(|(&n, &a)| CMatrix::identity(n, n) * a)
                .collect(),
        })
    }

    /// `alpha Tr`.
    pub fn scalar_trace(spec: &AlgebraSpec, alpha: Complex64) -> Self {
        Functional::from_element(Element::identity(spec).scale(alpha))
    }

    pub fn trace(spec: &AlgebraSpec) -> Self {
        Functional::scalar_trace(spec, ONE)
    }

    pub fn zero(spec: &AlgebraSpec) -> Self {
        Functional::from_element(Element::zeros(spec))
    }

    pub fn weights(&self) -> &[CMatrix] {
        &self.weights
    }

    pub fn spec(&self) -> AlgebraSpec {
        AlgebraSpec::new(self.weights.iter().map(|w| w.nrows()).collect())
            .expect("weights are validated on construction")
    }

    /// Largest block weight in Frobenius norm; the scale for all tolerances.
    pub fn scale(&self) -> f64 {
        self.weights
            .iter()
            .map(linalg::frobenius)
            .fold(0.0, f64::max)
    }

    pub fn evaluate(&self, a: &Element) -> Result<Complex64> {
        if a.spec() != self.spec() {
            return Err(LabError::ShapeMismatch(format!(
                "functional on {} applied to element of {}",
                self.spec(),
                a.spec()
            )));
        }
        Ok(self
            .weights
            .iter()
            .zip(a.blocks())
            .map(|(w, b)| {
                w.iter()
                    .zip(b.transpose().iter())
                    .map(|(x, y)| x * y)
                    .sum::<Complex64>()
            })
            .sum())
    }

    /// `tr(W_i) / n_i` for each block.
    pub fn block_averages(&self) -> Vec<Complex64> {
        self.weights
            .iter()
            .map(|w| linalg::trace(w) / w.nrows() as f64)
            .collect()
    }

    /// Largest `|W_i - (tr W_i / n_i) 1|_F`.
    fn non_scalar_defect(&self) -> f64 {
        self.weights
            .iter()
            .zip(self.block_averages())
            .map(|(w, avg)| linalg::frobenius(&(w - CMatrix::identity(w.nrows(), w.nrows()) * avg)))
            .fold(0.0, f64::max)
    }
}

/// `f(w)` on a specific element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueWitness {
    pub element: Element,
    pub value: Complex64,
}

/// `f(ab) != f(ba)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracialWitness {
    pub a: Element,
    pub b: Element,
    pub f_ab: Complex64,
    pub f_ba: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracialCheck {
    pub tracial: bool,
    pub spot_checks: usize,
    pub witness: Option<TracialWitness>,
}

fn tracial_witness(f: &Functional, a: Element, b: Element) -> Result<TracialWitness> {
    Ok(TracialWitness {
        f_ab: f.evaluate(&a.checked_mul(&b)?)?,
        f_ba: f.evaluate(&b.checked_mul(&a)?)?,
        a,
        b,
    })
}

/// Matrix units exposing the largest non-scalar part of the weights.
fn weight_witness(f: &Functional) -> Result<TracialWitness> {
    let spec = f.spec();
    // (strength, block, i, j, diagonal?)
    let mut best: Option<(f64, usize, usize, usize, bool)> = None;
    for (k, w) in f.weights().iter().enumerate() {
        let n = w.nrows();
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let off = w[(i, j)].norm();
                if best.is_none_or(|b| off > b.0) {
                    best = Some((off, k, i, j, false));
                }
                let diff = (w[(i, i)] - w[(j, j)]).norm();
                if best.is_none_or(|b| diff > b.0) {
                    best = Some((diff, k, i, j, true));
                }
            }
        }
    }
    let (_, k, i, j, diagonal) = best.ok_or_else(|| {
        LabError::InvalidParameter("every block is 1x1, so the functional is tracial".into())
    })?;
    if diagonal {
        // f(e_ij e_ji) = W_ii, f(e_ji e_ij) = W_jj
        tracial_witness(
            f,
            Element::unit(&spec, k, i, j),
            Element::unit(&spec, k, j, i),
        )
    } else {
        // f(e_jj e_ji) = f(e_ji) = W_ij, e_ji e_jj = 0
        tracial_witness(
            f,
            Element::unit(&spec, k, j, j),
            Element::unit(&spec, k, j, i),
        )
    }
}

/// Each weight within `tol` (relative to [`Functional::scale`]) of a scalar,
/// confirmed by `f(ab) = f(ba)` on random pairs.
pub fn is_tracial(f: &Functional, tol: f64) -> Result<TracialCheck> {
    let s = f.scale();
    if s == 0.0 {
        return Ok(TracialCheck {
            tracial: true,
            spot_checks: 0,
            witness: None,
        });
    }
    if f.non_scalar_defect() > tol * s {
        return Ok(TracialCheck {
            tracial: false,
            spot_checks: 0,
            witness: Some(weight_witness(f)?),
        });
    }
    let spec = f.spec();
    for i in 0..TRACIAL_SPOT_CHECKS {
        let mut r = rng::for_probe(TRACIAL_STREAM, i as u64);
        let a = Element::random(&spec, &mut r);
        let b = Element::random(&spec, &mut r);
        let w = tracial_witness(f, a, b)?;
        let bound = tol * s * w.a.commutator(&w.b)?.norm();
        if (w.f_ab - w.f_ba).norm() > bound {
            return Ok(TracialCheck {
                tracial: false,
                spot_checks: i + 1,
                witness: Some(w),
            });
        }
    }
    Ok(TracialCheck {
        tracial: true,
        spot_checks: TRACIAL_SPOT_CHECKS,
        witness: None,
    })
}

/// `alpha` with `f = alpha Tr`, if one exists within `tol`.
pub fn is_scalar_trace(f: &Functional, tol: f64) -> Option<Complex64> {
    let s = f.scale();
    if s == 0.0 {
        return Some(ZERO);
    }
    if f.non_scalar_defect() > tol * s {
        return None;
    }
    let avgs = f.block_averages();
    let spread = avgs
        .iter()
        .flat_map(|a| avgs.iter().map(move |b| (a - b).norm()))
        .fold(0.0, f64::max);
    if spread > tol * s {
        return None;
    }
    let total: Complex64 = f.weights().iter().map(linalg::trace).sum();
    Some(total / f.spec().order() as f64)
}

/// Either a constant `c` with `|f(a)| <= c rho(a)`, or an element with
/// `rho = 0` and `f != 0`, which rules out every bound of the form
/// `c rho(a)` or `c rank(a) rho(a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralBound {
    Bound {
        c: f64,
    },
    Witness {
        element: Element,
        value: Complex64,
        spectral_radius: f64,
    },
}

impl SpectralBound {
    pub fn is_bound(&self) -> bool {
        matches!(self, SpectralBound::Bound { .. })
    }
}

pub fn spectral_bound_witness(f: &Functional, tol: f64) -> Result<SpectralBound> {
    if is_tracial(f, tol)?.tracial {
        let c = f
            .block_averages()
            .iter()
            .zip(f.spec().block_sizes())
            .map(|(a, &n)| a.norm() * n as f64)
            .sum();
        return Ok(SpectralBound::Bound { c });
    }
    let spec = f.spec();
    let mut best: Option<(f64, Element, Complex64)> = None;
    for w in square_zero_basis(&spec) {
        let value = f.evaluate(&w)?;
        let strength = value.norm() / w.norm();
        if best.as_ref().is_none_or(|b| strength > b.0) {
            best = Some((strength, w, value));
        }
    }
    let (_, element, value) = best.expect("a non-tracial functional has a block of size >= 2");
    Ok(SpectralBound::Witness {
        spectral_radius: spectral_radius(&element)?,
        element,
        value,
    })
}

/// Square-zero elements spanning the blockwise-traceless subspace: `e_ij`
/// for `i != j`, and `e_ii - e_ij + e_ji - e_jj` for `i < j`.
pub fn square_zero_basis(spec: &AlgebraSpec) -> Vec<Element> {
    let mut out = Vec::new();
    for (k, &n) in spec.block_sizes().iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    out.push(Element::unit(spec, k, i, j));
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let m = linalg::unit(n, i, i) - linalg::unit(n, i, j) + linalg::unit(n, j, i)
                    - linalg::unit(n, j, j);
                out.push(Element::single_block(spec, k, m).expect("block index in range"));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanishingCheck {
    pub vanishes: bool,
    pub checked: usize,
    /// First element found with `f != 0`.
    pub witness: Option<ValueWitness>,
}

fn first_nonvanishing(
    f: &Functional,
    tol: f64,
    candidates: impl Iterator<Item = Element>,
) -> Result<VanishingCheck> {
    let s = f.scale();
    let mut checked = 0;
    for w in candidates {
        checked += 1;
        let value = f.evaluate(&w)?;
        if value.norm() > tol * s * w.norm() {
            return Ok(VanishingCheck {
                vanishes: false,
                checked,
                witness: Some(ValueWitness { element: w, value }),
            });
        }
    }
    Ok(VanishingCheck {
        vanishes: true,
        checked,
        witness: None,
    })
}

/// Random well-conditioned `n x n` matrix and its inverse.
fn random_invertible(n: usize, rng: &mut LabRng) -> (CMatrix, CMatrix) {
    loop {
        let u = gaussian_matrix(n, n, rng);
        let sv = linalg::singular_values(&u);
        let smallest = sv.last().copied().unwrap_or(0.0);
        if smallest > 0.0 && sv[0] / smallest <= CONDITION_CEILING {
            if let Some(inv) = linalg::inverse(&u) {
                return (u, inv);
            }
        }
    }
}

fn conjugate(w: &Element, rng: &mut LabRng) -> Element {
    let blocks = w
        .blocks()
        .iter()
        .map(|b| {
            let (u, inv) = random_invertible(b.nrows(), rng);
            &u * b * &inv
        })
        .collect();
    Element::new(blocks).expect("conjugation preserves shape")
}

/// `f` on the square-zero basis and on `trials` random conjugates of its
/// members.
pub fn vanishes_on_square_zero(
    f: &Functional,
    tol: f64,
    trials: usize,
    seed: u64,
) -> Result<VanishingCheck> {
    let basis = square_zero_basis(&f.spec());
    let conjugates: Vec<Element> = if basis.is_empty() {
        Vec::new()
    } else {
        (0..trials)
            .map(|t| {
                let mut r = rng::for_probe(seed ^ SQUARE_ZERO_STREAM, t as u64);
                conjugate(&basis[t % basis.len()], &mut r)
            })
            .collect()
    };
    first_nonvanishing(f, tol, basis.into_iter().chain(conjugates))
}

/// Strictly upper triangular in every block, then conjugated blockwise.
pub fn random_nilpotent(spec: &AlgebraSpec, rng: &mut LabRng) -> Element {
    let upper = Element::from_fn(spec, |_, n| {
        let g = gaussian_matrix(n, n, rng);
        CMatrix::from_fn(n, n, |i, j| if i < j { g[(i, j)] } else { ZERO })
    });
    conjugate(&upper, rng)
}

/// `f` on `trials` random nilpotents, then on the square-zero basis.
pub fn vanishes_on_nilpotents(
    f: &Functional,
    tol: f64,
    trials: usize,
    seed: u64,
) -> Result<VanishingCheck> {
    let spec = f.spec();
    let random = (0..trials).map(|t| {
        random_nilpotent(
            &spec,
            &mut rng::for_probe(seed ^ NILPOTENT_STREAM, t as u64),
        )
    });
    let candidates: Vec<Element> = random
        .filter(|w| w.norm() > 0.0)
        .chain(square_zero_basis(&spec))
        .collect();
    first_nonvanishing(f, tol, candidates.into_iter())
}

/// Two rank-one projections with different values under `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionPair {
    pub p: Element,
    pub q: Element,
    pub f_p: Complex64,
    pub f_q: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneCheck {
    pub constant: bool,
    pub samples: usize,
    /// The common value when constant.
    pub value: Option<Complex64>,
    pub witness: Option<ProjectionPair>,
}

/// Random `u v* / (v* u)` in `block`, redrawn while `v* u` is small.
pub fn random_rank_one_projection<R: Rng + ?Sized>(
    spec: &AlgebraSpec,
    block: usize,
    rng: &mut R,
) -> Element {
    let n = spec.block_sizes()[block];
    loop {
        let u = gaussian_matrix(n, 1, rng);
        let v = gaussian_matrix(n, 1, rng);
        let pairing = (v.adjoint() * &u)[(0, 0)];
        if pairing.norm() >= PAIRING_FLOOR * u.norm() * v.norm() {
            let p = &u * v.adjoint() / pairing;
            return Element::single_block(spec, block, p).expect("block index in range");
        }
    }
}

/// Samples rank-one projections, cycling through the blocks so each block is
/// visited at least once.
pub fn constant_on_rank_one_projections(
    f: &Functional,
    tol: f64,
    samples: usize,
    seed: u64,
) -> Result<RankOneCheck> {
    let spec = f.spec();
    let samples = samples.max(spec.num_blocks());
    let s = f.scale();
    let mut first: Option<(Element, Complex64)> = None;
    for t in 0..samples {
        let mut r = rng::for_probe(seed ^ RANK_ONE_STREAM, t as u64);
        let p = random_rank_one_projection(&spec, t % spec.num_blocks(), &mut r);
        let value = f.evaluate(&p)?;
        match &first {
            None => first = Some((p, value)),
            Some((p0, v0)) => {
                if (value - v0).norm() > tol * s {
                    return Ok(RankOneCheck {
                        constant: false,
                        samples: t + 1,
                        value: None,
                        witness: Some(ProjectionPair {
                            p: p0.clone(),
                            q: p,
                            f_p: *v0,
                            f_q: value,
                        }),
                    });
                }
            }
        }
    }
    Ok(RankOneCheck {
        constant: true,
        samples,
        value: first.map(|(_, v)| v),
        witness: None,
    })
}

/// `a -> tr(a_1)`: tracial but not a multiple of the trace once there are at
/// least two blocks.
pub fn counterexample_functional(spec: &AlgebraSpec) -> Result<Functional> {
    if spec.num_blocks() < 2 {
        return Err(LabError::NoCounterexample);
    }
    let mut alphas = vec![ZERO; spec.num_blocks()];
    alphas[0] = ONE;
    Functional::block_scalars(spec, &alphas)
}

/// The five characterizing conditions, each decided by its own route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationReport {
    pub scalar_trace: Option<Complex64>,
    pub tracial: TracialCheck,
    pub spectral_bound: SpectralBound,
    pub nilpotents: VanishingCheck,
    pub square_zero: VanishingCheck,
    pub rank_one_projections: RankOneCheck,
}

impl CharacterizationReport {
    /// Verdicts in the order: scalar trace, tracial, spectral bound,
    /// vanishing on nilpotents, vanishing on square-zero elements.
    pub fn verdicts(&self) -> [bool; 5] {
        [
            self.scalar_trace.is_some(),
            self.tracial.tracial,
            self.spectral_bound.is_bound(),
            self.nilpotents.vanishes,
            self.square_zero.vanishes,
        ]
    }
}

pub fn characterize(
    f: &Functional,
    tol: f64,
    trials: usize,
    seed: u64,
) -> Result<CharacterizationReport> {
    Ok(CharacterizationReport {
        scalar_trace: is_scalar_trace(f, tol),
        tracial: is_tracial(f, tol)?,
        spectral_bound: spectral_bound_witness(f, tol)?,
        nilpotents: vanishes_on_nilpotents(f, tol, trials, seed)?,
        square_zero: vanishes_on_square_zero(f, tol, trials, seed)?,
        rank_one_projections: constant_on_rank_one_projections(f, tol, trials, seed)?,
    })
}

/// Families for random functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalFamily {
    /// Gaussian weights: never tracial in practice.
    Generic,
    /// Independent scalar per block.
    BlockScalar,
    /// One scalar for every block.
    ScalarTrace,
    /// Block scalars plus one random matrix unit in one block of size >= 2.
    PerturbedScalar,
}

impl FunctionalFamily {
    pub const ALL: [FunctionalFamily; 4] = [
        FunctionalFamily::Generic,
        FunctionalFamily::BlockScalar,
        FunctionalFamily::ScalarTrace,
        FunctionalFamily::PerturbedScalar,
    ];
}

pub fn random_functional<R: Rng + ?Sized>(
    spec: &AlgebraSpec,
    family: FunctionalFamily,
    rng: &mut R,
) -> Functional {
    let mut scalars = || -> Vec<Complex64> {
        (0..spec.num_blocks())
            .map(|_| rng::complex_gaussian(rng))
            .collect()
    };
    match family {
        FunctionalFamily::Generic => Functional::from_element(Element::random(spec, rng)),
        FunctionalFamily::BlockScalar => {
            Functional::block_scalars(spec, &scalars()).expect("one scalar per block")
        }
        FunctionalFamily::ScalarTrace => Functional::scalar_trace(spec, rng::complex_gaussian(rng)),
        FunctionalFamily::PerturbedScalar => {
            let base = Functional::block_scalars(spec, &scalars()).expect("one scalar per block");
            let wide: Vec<usize> = (0..spec.num_blocks())
                .filter(|&k| spec.block_sizes()[k] >= 2)
                .collect();
            if wide.is_empty() {
                return base;
            }
            let k = wide[rng.random_range(0..wide.len())];
            let n = spec.block_sizes()[k];
            let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
            let mut weights = base.weights;
            weights[k][(i, j)] += rng::complex_gaussian(rng);
            Functional { weights }
        }
    }
}
