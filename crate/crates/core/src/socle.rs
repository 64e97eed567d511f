//! Ideal structure of the algebra and the full verification suite.
//!
//! The two-sided ideal generated by `a` is spanned by the products
//! `e a f` over matrix units `e`, `f`; its dimension is found as the
//! numerical rank of their coefficient vectors. Block ideals are generated by
//! `e_11` of each block. Whether `pAp` is a single matrix algebra is decided
//! by splitting `p` into rank-one pieces `p_s` and looking for a pair with
//! `p_s A p_t = 0`.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{spectral_radius, AlgebraSpec, Element};
use crate::commutator::rank_one_commutator;
use crate::config::LabConfig;
use crate::error::{LabError, Result};
use crate::functional::{
    characterize, counterexample_functional, random_functional, random_rank_one_projection,
    CharacterizationReport, Functional, FunctionalFamily, SpectralBound, FUNCTIONAL_TOL,
};
use crate::linalg::{self, CMatrix, ZERO};
use crate::rank::spectral_rank;
use crate::riesz::Compression;
use crate::rng::{self, gaussian_matrix};

/// Relative singular-value cutoff for ideal dimensions.
pub const IDEAL_RANK_TOL: f64 = 1e-9;

/// Samples per sampled check inside one verification trial.
const INNER_SAMPLES: usize = 16;

/// Tolerance for the recovered multiple of the trace.
const ALPHA_TOL: f64 = 1e-8;

/// Square-zero witnesses must have spectral radius below this multiple of
/// their norm. Eigenvalues of a nilpotent matrix are only accurate to about
/// the square root of machine precision.
const NILPOTENT_RADIUS_TOL: f64 = 1e-6;

const MINIMALITY_STREAM: u64 = 0x6d69_6e69_6d61_6c00;
const PROJECTION_STREAM: u64 = 0x7072_6f6a_0000_0000;
const FUNCTIONAL_STREAM: u64 = 0x6675_6e63_0000_0000;
const PAIR_STREAM: u64 = 0x7061_6972_0000_0000;

fn to_vector(a: &Element) -> DVector<Complex64> {
    DVector::from_iterator(
        a.spec().dimension(),
        a.blocks().iter().flat_map(|b| b.iter().copied()),
    )
}

fn from_vector(spec: &AlgebraSpec, v: &[Complex64]) -> Element {
    let mut offset = 0;
    Element::from_fn(spec, |_, n| {
        let m = CMatrix::from_column_slice(n, n, &v[offset..offset + n * n]);
        offset += n * n;
        m
    })
}

/// Orthonormal basis (as columns) of the span of `vectors`.
fn span_basis(dim: usize, vectors: &[DVector<Complex64>]) -> CMatrix {
    if vectors.is_empty() {
        return CMatrix::zeros(dim, 0);
    }
    let m = CMatrix::from_columns(vectors);
    let svd = m.svd(true, false);
    let largest = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let u = svd.u.expect("requested u");
    let keep: Vec<_> = (0..svd.singular_values.len())
        .filter(|&i| largest > 0.0 && svd.singular_values[i] > IDEAL_RANK_TOL * largest)
        .map(|i| u.column(i).into_owned())
        .collect();
    if keep.is_empty() {
        CMatrix::zeros(dim, 0)
    } else {
        CMatrix::from_columns(&keep)
    }
}

fn rank_of_columns(m: &CMatrix) -> usize {
    if m.ncols() == 0 {
        0
    } else {
        linalg::numerical_rank(m, IDEAL_RANK_TOL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealReport {
    pub generator: Element,
    pub ideal_dimension: usize,
    pub algebra_dimension: usize,
    pub is_whole_algebra: bool,
    /// Blocks where the generator is nonzero.
    pub supported_blocks: Vec<usize>,
}

/// Ideal together with an orthonormal basis of its coefficient vectors.
struct Ideal {
    report: IdealReport,
    basis: CMatrix,
}

fn build_ideal(a: &Element) -> Ideal {
    let spec = a.spec();
    let mut products = Vec::new();
    for (k, &n) in spec.block_sizes().iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                let left = Element::unit(&spec, k, i, j);
                let la = left.checked_mul(a).expect("same spec");
                for r in 0..n {
                    for s in 0..n {
                        let right = Element::unit(&spec, k, r, s);
                        products.push(to_vector(&la.checked_mul(&right).expect("same spec")));
                    }
                }
            }
        }
    }
    let basis = span_basis(spec.dimension(), &products);
    let scale = a.max_abs();
    let supported_blocks = a
        .blocks()
        .iter()
        .enumerate()
        .filter(|(_, b)| scale > 0.0 && linalg::max_abs(b) > IDEAL_RANK_TOL * scale)
        .map(|(i, _)| i)
        .collect::<Vec<_>>();
    Ideal {
        report: IdealReport {
            generator: a.clone(),
            ideal_dimension: basis.ncols(),
            algebra_dimension: spec.dimension(),
            is_whole_algebra: basis.ncols() == spec.dimension(),
            supported_blocks,
        },
        basis,
    }
}

/// Two-sided ideal generated by `a`.
pub fn generated_ideal(a: &Element) -> IdealReport {
    build_ideal(a).report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionDimension {
    pub first: usize,
    pub second: usize,
    pub dimension: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub ideals: Vec<IdealReport>,
    /// Largest `|xy|` or `|yx|` over basis elements `x`, `y` of distinct
    /// ideals.
    pub max_cross_product: f64,
    pub intersections: Vec<IntersectionDimension>,
    /// The ideals together span the algebra.
    pub spans_algebra: bool,
}

/// Block ideals generated by `e_11` of each block, with orthogonality,
/// trivial intersections and spanning checked.
pub fn orthogonal_decomposition(spec: &AlgebraSpec) -> Decomposition {
    let ideals: Vec<Ideal> = (0..spec.num_blocks())
        .map(|k| build_ideal(&Element::unit(spec, k, 0, 0)))
        .collect();
    let elements: Vec<Vec<Element>> = ideals
        .iter()
        .map(|id| {
            id.basis
                .column_iter()
                .map(|c| from_vector(spec, c.as_slice()))
                .collect()
        })
        .collect();

    let mut max_cross_product: f64 = 0.0;
    let mut intersections = Vec::new();
    for i in 0..ideals.len() {
        for j in (i + 1)..ideals.len() {
            for x in &elements[i] {
                for y in &elements[j] {
                    let xy = x.checked_mul(y).expect("same spec").norm();
                    let yx = y.checked_mul(x).expect("same spec").norm();
                    max_cross_product = max_cross_product.max(xy).max(yx);
                }
            }
            let (bi, bj) = (&ideals[i].basis, &ideals[j].basis);
            let joint = CMatrix::from_fn(spec.dimension(), bi.ncols() + bj.ncols(), |r, c| {
                if c < bi.ncols() {
                    bi[(r, c)]
                } else {
                    bj[(r, c - bi.ncols())]
                }
            });
            intersections.push(IntersectionDimension {
                first: i,
                second: j,
                dimension: bi.ncols() + bj.ncols() - rank_of_columns(&joint),
            });
        }
    }
    let all: Vec<DVector<Complex64>> = ideals
        .iter()
        .flat_map(|id| id.basis.column_iter().map(|c| c.into_owned()))
        .collect();
    let spans_algebra = span_basis(spec.dimension(), &all).ncols() == spec.dimension();
    Decomposition {
        ideals: ideals.into_iter().map(|id| id.report).collect(),
        max_cross_product,
        intersections,
        spans_algebra,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalityReport {
    pub minimal: bool,
    /// One random generator per block, with the ideal it generates.
    pub generated: Vec<IdealReport>,
}

/// The socle is a minimal ideal iff a random generator supported in any one
/// block already generates everything.
pub fn is_socle_minimal_ideal(spec: &AlgebraSpec, seed: u64) -> MinimalityReport {
    let generated: Vec<IdealReport> = (0..spec.num_blocks())
        .map(|k| {
            let mut r = rng::for_probe(seed ^ MINIMALITY_STREAM, k as u64);
            let n = spec.block_sizes()[k];
            let a = Element::single_block(spec, k, gaussian_matrix(n, n, &mut r))
                .expect("block in range");
            generated_ideal(&a)
        })
        .collect();
    MinimalityReport {
        minimal: generated.iter().all(|g| g.is_whole_algebra),
        generated,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PapBlockReport {
    /// `pAp` is a single full matrix algebra.
    pub single_block: bool,
    /// `p = 0`; `single_block` is then true by convention.
    pub vacuous: bool,
    pub rank: usize,
    pub support: Vec<usize>,
    pub pairs_checked: usize,
    /// Rank-one pieces `p_s`, `p_t` of `p` with `p_s x p_t = 0` for every
    /// matrix unit `x`.
    pub orthogonal_pair: Option<(Element, Element)>,
    /// The pair criterion and the block support agree.
    pub support_agrees: bool,
}

pub fn pap_block_check(p: &Element, cfg: &LabConfig) -> Result<PapBlockReport> {
    let compression = Compression::new(p, cfg)?;
    let spec = p.spec();
    let parts = compression.rank_one_parts(&spec);
    let support: Vec<usize> = compression
        .block_sizes()
        .iter()
        .enumerate()
        .filter(|(_, &r)| r > 0)
        .map(|(k, _)| k)
        .collect();
    if parts.is_empty() {
        return Ok(PapBlockReport {
            single_block: true,
            vacuous: true,
            rank: 0,
            support,
            pairs_checked: 0,
            orthogonal_pair: None,
            support_agrees: true,
        });
    }

    let units: Vec<Element> = spec
        .block_sizes()
        .iter()
        .enumerate()
        .flat_map(|(k, &n)| (0..n).flat_map(move |i| (0..n).map(move |j| (k, i, j))))
        .map(|(k, i, j)| Element::unit(&spec, k, i, j))
        .collect();
    let mut pairs_checked = 0;
    let mut orthogonal_pair = None;
    'pairs: for (s, (_, ps)) in parts.iter().enumerate() {
        for (_, pt) in parts.iter().skip(s + 1) {
            pairs_checked += 1;
            let floor = cfg.idempotency_tol * ps.norm() * pt.norm();
            let largest = units
                .iter()
                .map(|x| {
                    ps.checked_mul(x)
                        .and_then(|px| px.checked_mul(pt))
                        .expect("same spec")
                        .norm()
                })
                .fold(0.0, f64::max);
            if largest <= floor {
                orthogonal_pair = Some((ps.clone(), pt.clone()));
                break 'pairs;
            }
        }
    }
    let single_block = orthogonal_pair.is_none();
    Ok(PapBlockReport {
        single_block,
        vacuous: false,
        rank: parts.len(),
        support_agrees: single_block == (support.len() == 1),
        support,
        pairs_checked,
        orthogonal_pair,
    })
}

/// Sum of 1 to 3 rank-one projections in random blocks, each deflated
/// against the previous ones so that the sum stays idempotent.
pub fn random_projection<R: Rng + ?Sized>(spec: &AlgebraSpec, rng: &mut R) -> Element {
    let target = rng.random_range(1..=3).min(spec.order());
    let mut used = vec![0usize; spec.num_blocks()];
    let mut p = Element::zeros(spec);
    for _ in 0..target {
        let open: Vec<usize> = (0..spec.num_blocks())
            .filter(|&k| used[k] < spec.block_sizes()[k])
            .collect();
        let k = open[rng.random_range(0..open.len())];
        let n = spec.block_sizes()[k];
        let complement = CMatrix::identity(n, n) - p.block(k);
        loop {
            let u = &complement * gaussian_matrix(n, 1, rng);
            let v = complement.adjoint() * gaussian_matrix(n, 1, rng);
            let pairing = (v.adjoint() * &u)[(0, 0)];
            if pairing.norm() >= 1e-2 * u.norm() * v.norm() {
                let q = &u * v.adjoint() / pairing;
                p = p
                    .checked_add(&Element::single_block(spec, k, q).expect("block in range"))
                    .expect("same spec");
                break;
            }
        }
        used[k] += 1;
    }
    p
}

/// Projections sampled for the structural check: `trials` random ones, plus
/// `e_11` of the first two blocks when there are at least two.
pub fn sample_projections(spec: &AlgebraSpec, trials: usize, seed: u64) -> Vec<Element> {
    let mut out: Vec<Element> = (0..trials)
        .map(|t| {
            random_projection(
                spec,
                &mut rng::for_probe(seed ^ PROJECTION_STREAM, t as u64),
            )
        })
        .collect();
    if spec.num_blocks() >= 2 {
        out.push(
            Element::unit(spec, 0, 0, 0)
                .checked_add(&Element::unit(spec, 1, 0, 0))
                .expect("same spec"),
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralReport {
    pub block_count: usize,
    pub socle_is_minimal_ideal: bool,
    /// `pAp_block_check` at `p = 1`.
    pub socle_is_single_matrix_block: bool,
    pub projections_sampled: usize,
    pub projections_single_block: usize,
    pub all_projections_single_block: bool,
    pub decomposition: Decomposition,
}

impl StructuralReport {
    pub fn verdicts_agree(&self) -> bool {
        let k1 = self.block_count == 1;
        k1 == self.socle_is_minimal_ideal
            && k1 == self.socle_is_single_matrix_block
            && k1 == self.all_projections_single_block
    }
}

/// Minimal-ideal test, single-block test at the identity and sampled
/// projections.
pub fn classify(
    spec: &AlgebraSpec,
    trials: usize,
    seed: u64,
    cfg: &LabConfig,
) -> Result<StructuralReport> {
    let minimality = is_socle_minimal_ideal(spec, seed);
    let whole = pap_block_check(&Element::identity(spec), cfg)?;
    let samples = sample_projections(spec, trials, seed);
    let mut single = 0;
    for p in &samples {
        let r = pap_block_check(p, cfg)?;
        if !r.support_agrees {
            return Err(LabError::TheoremViolation {
                theorem: "compressed algebra is a single block iff p lives in one block".into(),
                detail: format!(
                    "pair criterion {} but support {:?}",
                    r.single_block, r.support
                ),
            });
        }
        if r.single_block {
            single += 1;
        }
    }
    Ok(StructuralReport {
        block_count: spec.num_blocks(),
        socle_is_minimal_ideal: minimality.minimal,
        socle_is_single_matrix_block: whole.single_block,
        projections_sampled: samples.len(),
        projections_single_block: single,
        all_projections_single_block: single == samples.len(),
        decomposition: orthogonal_decomposition(spec),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyTally {
    pub family: FunctionalFamily,
    pub sampled: usize,
    pub tracial: usize,
    pub scalar_trace: usize,
}

/// The tracial-but-not-scalar functional `a -> tr(a_1)` and what was found
/// about it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub functional: Functional,
    pub characterization: CharacterizationReport,
    /// `f` and `Tr` at the identity of the second block.
    pub value_on_second_block: Complex64,
    pub trace_on_second_block: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub spec: AlgebraSpec,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub structure: StructuralReport,
    pub functionals_checked: usize,
    pub families: Vec<FamilyTally>,
    /// Tracial, spectral bound, vanishing on nilpotents and on square-zero
    /// elements agreed on every sampled functional.
    pub vanishing_conditions_agree: usize,
    /// Constancy on rank-one projections matched being a multiple of the
    /// trace.
    pub rank_one_matches_scalar: usize,
    /// All five conditions agreed (expected for a single block).
    pub all_conditions_agree: usize,
    pub planted_alphas: usize,
    pub max_alpha_error: f64,
    pub counterexample: Option<CounterexampleReport>,
    /// Rank-one commutator realizations of `P - Q` checked (single block).
    pub rank_one_commutators: usize,
    pub max_commutator_defect: f64,
    pub scope: String,
}

fn violation(theorem: &str, detail: String) -> LabError {
    LabError::TheoremViolation {
        theorem: theorem.into(),
        detail,
    }
}

/// Re-checks every witness the characterization produced.
fn check_witnesses(f: &Functional, report: &CharacterizationReport, cfg: &LabConfig) -> Result<()> {
    let s = f.scale();
    if let Some(w) = &report.tracial.witness {
        let ab = f.evaluate(&w.a.checked_mul(&w.b)?)?;
        let ba = f.evaluate(&w.b.checked_mul(&w.a)?)?;
        if (ab - ba).norm() <= FUNCTIONAL_TOL * s * w.a.commutator(&w.b)?.norm() {
            return Err(violation(
                "tracial witness",
                format!("f(ab) = {ab}, f(ba) = {ba}"),
            ));
        }
    }
    if let SpectralBound::Witness { element, .. } = &report.spectral_bound {
        let square = element.checked_mul(element)?.max_abs();
        let rho = spectral_radius(element)?;
        let value = f.evaluate(element)?;
        if square > 1e-12 * element.norm().powi(2)
            || rho > NILPOTENT_RADIUS_TOL * element.norm()
            || value.norm() <= FUNCTIONAL_TOL * s * element.norm()
        {
            return Err(violation(
                "spectral bound witness",
                format!("|w^2| = {square:e}, rho = {rho:e}, f(w) = {value}"),
            ));
        }
    }
    for check in [&report.nilpotents, &report.square_zero] {
        if let Some(w) = &check.witness {
            if f.evaluate(&w.element)?.norm() <= FUNCTIONAL_TOL * s * w.element.norm() {
                return Err(violation(
                    "vanishing witness",
                    format!("f(w) = {}", w.value),
                ));
            }
        }
    }
    if let Some(pair) = &report.rank_one_projections.witness {
        for p in [&pair.p, &pair.q] {
            if p.idempotency_defect() > cfg.idempotency_tol * p.norm().max(1.0).powi(2)
                || spectral_rank(p, cfg)?.rank != 1
            {
                return Err(violation("rank-one projection witness", format!("{p:?}")));
            }
        }
        let (fp, fq) = (f.evaluate(&pair.p)?, f.evaluate(&pair.q)?);
        if (fp - fq).norm() <= FUNCTIONAL_TOL * s {
            return Err(violation(
                "rank-one projection witness",
                format!("f(p) = {fp}, f(q) = {fq}"),
            ));
        }
    }
    Ok(())
}

/// Runs the structural checks, characterizes `trials` random functionals
/// and checks the pattern of verdicts predicted for this spec: with a single
/// block all five conditions coincide, and with several blocks the
/// functional `a -> tr(a_1)` is tracial and bounded but not a multiple of the
/// trace. In every case constancy on rank-one projections matches being a
/// multiple of the trace. Any deviation is returned as
/// [`LabError::TheoremViolation`].
pub fn verify_theorems(
    spec: &AlgebraSpec,
    trials: usize,
    seed: u64,
    cfg: &LabConfig,
) -> Result<VerificationReport> {
    if trials == 0 {
        return Err(LabError::InvalidParameter(
            "trials must be at least 1".into(),
        ));
    }
    cfg.validate()?;
    let k = spec.num_blocks();
    let structure = classify(spec, trials.min(INNER_SAMPLES * 2), seed, cfg)?;
    if !structure.verdicts_agree() {
        return Err(violation(
            "structural agreement",
            format!(
                "k = {k}, minimal ideal {}, single block {}, sampled projections {}/{}",
                structure.socle_is_minimal_ideal,
                structure.socle_is_single_matrix_block,
                structure.projections_single_block,
                structure.projections_sampled
            ),
        ));
    }
    let d = &structure.decomposition;
    if !d.spans_algebra
        || d.max_cross_product > cfg.idempotency_tol
        || d.intersections.iter().any(|i| i.dimension != 0)
    {
        return Err(violation("block ideal decomposition", format!("{d:?}")));
    }

    let mut families: Vec<FamilyTally> = FunctionalFamily::ALL
        .iter()
        .map(|&family| FamilyTally {
            family,
            sampled: 0,
            tracial: 0,
            scalar_trace: 0,
        })
        .collect();
    let (mut vanishing_agree, mut rank_one_agree, mut all_agree) = (0, 0, 0);
    let (mut planted_alphas, mut max_alpha_error) = (0, 0.0f64);
    for t in 0..trials {
        let mut r = rng::for_probe(seed ^ FUNCTIONAL_STREAM, t as u64);
        let slot = t % FunctionalFamily::ALL.len();
        let family = FunctionalFamily::ALL[slot];
        let (f, planted) = if family == FunctionalFamily::ScalarTrace {
            let alpha = rng::complex_gaussian(&mut r);
            (Functional::scalar_trace(spec, alpha), Some(alpha))
        } else {
            (random_functional(spec, family, &mut r), None)
        };
        let report = characterize(
            &f,
            FUNCTIONAL_TOL,
            INNER_SAMPLES,
            seed.wrapping_add(t as u64),
        )?;
        check_witnesses(&f, &report, cfg)?;
        let v = report.verdicts();
        let tally = &mut families[slot];
        tally.sampled += 1;
        tally.tracial += v[1] as usize;
        tally.scalar_trace += v[0] as usize;

        if v[1..].iter().any(|&x| x != v[1]) {
            return Err(violation(
                "tracial, bounded, nilpotent-vanishing and square-zero-vanishing agree",
                format!("trial {t} ({family:?}): verdicts {v:?}"),
            ));
        }
        vanishing_agree += 1;
        if v[0] && !v[1] {
            return Err(violation(
                "multiples of the trace are tracial",
                format!("trial {t}"),
            ));
        }
        if report.rank_one_projections.constant != v[0] {
            return Err(violation(
                "constant on rank-one projections iff a multiple of the trace",
                format!("trial {t} ({family:?}): {:?}", report.rank_one_projections),
            ));
        }
        rank_one_agree += 1;
        if k == 1 {
            if v.iter().any(|&x| x != v[0]) {
                return Err(violation(
                    "single block: all five conditions equivalent",
                    format!("trial {t} ({family:?}): verdicts {v:?}"),
                ));
            }
            all_agree += 1;
        } else if v.iter().all(|&x| x == v[0]) {
            all_agree += 1;
        }
        if let Some(alpha) = planted {
            let found = report.scalar_trace.ok_or_else(|| {
                violation(
                    "planted multiple of the trace is recognized",
                    format!("trial {t}"),
                )
            })?;
            let err = (found - alpha).norm();
            let rank_one = report.rank_one_projections.value.unwrap_or(ZERO);
            let err = err.max((rank_one - alpha).norm());
            if err > ALPHA_TOL * alpha.norm().max(1.0) {
                return Err(violation(
                    "planted multiple of the trace is recovered",
                    format!("trial {t}: planted {alpha}, found {found}, rank-one value {rank_one}"),
                ));
            }
            planted_alphas += 1;
            max_alpha_error = max_alpha_error.max(err);
        }
    }

    let counterexample = if k >= 2 {
        let f = counterexample_functional(spec)?;
        let characterization = characterize(&f, FUNCTIONAL_TOL, INNER_SAMPLES, seed)?;
        check_witnesses(&f, &characterization, cfg)?;
        let second = Element::from_fn(spec, |b, n| {
            if b == 1 {
                CMatrix::identity(n, n)
            } else {
                CMatrix::zeros(n, n)
            }
        });
        let value_on_second_block = f.evaluate(&second)?;
        let trace_on_second_block = Functional::trace(spec).evaluate(&second)?;
        let c = &characterization;
        if !(c.tracial.tracial
            && c.spectral_bound.is_bound()
            && c.scalar_trace.is_none()
            && !c.rank_one_projections.constant
            && c.rank_one_projections.witness.is_some()
            && value_on_second_block == ZERO
            && trace_on_second_block != ZERO)
        {
            return Err(violation(
                "several blocks: a tracial functional that is not a multiple of the trace",
                format!("{c:?}"),
            ));
        }
        Some(CounterexampleReport {
            functional: f,
            characterization,
            value_on_second_block,
            trace_on_second_block,
        })
    } else {
        None
    };

    // With a single block the algebra is all operators on C^n, where P - Q
    // is a commutator of rank-one operators for rank-one projections P, Q.
    let (mut rank_one_commutators, mut max_commutator_defect) = (0, 0.0f64);
    if k == 1 {
        for t in 0..trials {
            let mut r = rng::for_probe(seed ^ PAIR_STREAM, t as u64);
            let p = random_rank_one_projection(spec, 0, &mut r);
            let q = random_rank_one_projection(spec, 0, &mut r);
            let (x, f) = rank_one_factors(p.block(0));
            let (y, g) = rank_one_factors(q.block(0));
            let pair = rank_one_commutator(&x, &f, &y, &g)?;
            let difference = linalg::max_abs(
                &((p.block(0) - q.block(0)) - (&pair.s * &pair.t - &pair.t * &pair.s)),
            );
            let bound = 1e-12
                * linalg::max_abs(p.block(0))
                    .max(linalg::max_abs(q.block(0)))
                    .max(1.0)
                    .powi(2);
            if difference > bound {
                return Err(violation(
                    "difference of rank-one projections is a rank-one commutator",
                    format!("trial {t}: defect {difference:e}"),
                ));
            }
            rank_one_commutators += 1;
            max_commutator_defect = max_commutator_defect.max(difference);
        }
    }

    Ok(VerificationReport {
        spec: spec.clone(),
        trials,
        seed,
        tolerance: FUNCTIONAL_TOL,
        structure,
        functionals_checked: trials,
        families,
        vanishing_conditions_agree: vanishing_agree,
        rank_one_matches_scalar: rank_one_agree,
        all_conditions_agree: all_agree,
        planted_alphas,
        max_alpha_error,
        counterexample,
        rank_one_commutators,
        max_commutator_defect,
        scope: "finite-dimensional blocks only; operators on infinite-dimensional spaces are represented by \
                their finite sections"
            .into(),
    })
}

/// `p = x f` for a rank-one matrix: `x` its largest column, `f` solving
/// `x f = p`.
fn rank_one_factors(p: &CMatrix) -> (Vec<Complex64>, Vec<Complex64>) {
    let (col, _) = (0..p.ncols())
        .map(|j| (j, p.column(j).norm()))
        .fold((0, -1.0), |best, c| if c.1 > best.1 { c } else { best });
    let x: Vec<Complex64> = p.column(col).iter().copied().collect();
    let xx: f64 = x.iter().map(|z| z.norm_sqr()).sum();
    // f_j = <x, p_{:,j}> / |x|^2
    let f = (0..p.ncols())
        .map(|j| {
            x.iter()
                .zip(p.column(j).iter())
                .map(|(a, b)| a.conj() * b)
                .sum::<Complex64>()
                / xx
        })
        .collect();
    (x, f)
}
