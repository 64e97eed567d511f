//! Riesz projections, multiplicities and the spectral trace.
//!
//! The projection at a spectral value `lambda` is
//! `(1 / 2 pi i) \oint (alpha 1 - a)^{-1} d alpha` over a circle that isolates
//! `lambda`. On a circle the integrand is analytic and periodic, so the
//! equispaced trapezoid rule converges geometrically in the number of nodes.
//!
//! Multiplicities are computed two ways: by counting eigenvalues of `xa` near
//! `lambda` for a generic `x` close to the identity, and as the rank of the
//! Riesz projection. The two must agree.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    block_ranks, classical_rank, classical_trace, spectrum, AlgebraSpec, Element, Resolvent,
    SpectralPoint, SpectrumReport,
};
use crate::config::LabConfig;
use crate::error::{LabError, Result};
use crate::linalg::{self, CMatrix, ZERO};
use crate::rank::spectral_rank;
use crate::rng;

/// Contour radius as a fraction of the distance to the nearest other
/// spectral value. At one half the trapezoid error decays like `2^-nodes`,
/// so 32 nodes land near `1e-10` and 64 at rounding level; a third would
/// already be at rounding level with 32 nodes.
pub const CONTOUR_RADIUS_FRACTION: f64 = 0.5;

/// Spectral values closer than this many merge radii are too close to
/// separate with a contour.
pub const MIN_SEPARATION_FACTOR: f64 = 10.0;

/// Counting disk radius for the perturbation route, as a fraction of the gap.
const COUNTING_RADIUS_FRACTION: f64 = 1.0 / 3.0;

/// Relative tolerance of the spectral-vs-classical trace certificate.
pub const TRACE_CERTIFICATE_TOL: f64 = 1e-8;

const MULTIPLICITY_STREAM: u64 = 0x6d75_6c74_6970_6c79;

/// Circle `|alpha - center| = radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub center: Complex64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszReport {
    pub projection: Element,
    /// One circle per target.
    pub contours: Vec<Contour>,
    pub nodes: usize,
    pub idempotency_defect: f64,
    pub multiplicity: usize,
    /// `|p - a w|` for the least-squares `w`; present when every target is
    /// nonzero, since only then is `p` in `aA`.
    pub range_residual: Option<f64>,
}

fn contour_for(spec: &SpectrumReport, index: usize, fraction: f64) -> Result<Contour> {
    let center = spec.points[index].value;
    let min_separation = MIN_SEPARATION_FACTOR * spec.cluster_tolerance;
    let radius = match spec.gap(index) {
        Some(gap) => {
            if gap < min_separation {
                return Err(LabError::ContourCollapse {
                    center,
                    radius: fraction * gap,
                    floor: fraction * min_separation,
                });
            }
            fraction * gap
        }
        None => 0.5 * spec.spectral_radius.max(1.0),
    };
    Ok(Contour { center, radius })
}

/// Trapezoid approximation of `(1 / 2 pi i) \oint_contour weight(alpha) R(alpha) d alpha`.
fn contour_integral(
    resolvent: &Resolvent<'_>,
    contour: Contour,
    nodes: usize,
    weight: impl Fn(Complex64) -> Complex64,
) -> Result<Element> {
    let mut acc: Option<Element> = None;
    for j in 0..nodes {
        let theta = 2.0 * PI * j as f64 / nodes as f64;
        let offset = Complex64::from_polar(contour.radius, theta);
        let alpha = contour.center + offset;
        // d alpha / (2 pi i) = offset d theta / (2 pi)
        let term = resolvent
            .at(alpha)?
            .scale(weight(alpha) * offset / nodes as f64);
        acc = Some(match acc {
            None => term,
            Some(sum) => sum.checked_add(&term)?,
        });
    }
    Ok(acc.expect("nodes >= 3"))
}

fn resolve_targets(spec: &SpectrumReport, targets: &[Complex64]) -> Result<Vec<usize>> {
    let mut indices: Vec<usize> = Vec::with_capacity(targets.len());
    for &t in targets {
        let i = spec.locate(t).ok_or(LabError::TargetNotInSpectrum {
            target: t,
            nearest: spec.nearest(t).map(|i| spec.points[i].value),
        })?;
        if let Some(k) = indices.iter().position(|&j| j == i) {
            return Err(LabError::DuplicateTarget(targets[k], t));
        }
        indices.push(i);
    }
    Ok(indices)
}

/// Riesz projection of `a` onto the spectral values `targets`, summed.
pub fn riesz_projection(
    a: &Element,
    targets: &[Complex64],
    cfg: &LabConfig,
) -> Result<RieszReport> {
    riesz_projection_with_radius(a, targets, cfg, CONTOUR_RADIUS_FRACTION)
}

/// As [`riesz_projection`] with an explicit contour radius fraction in
/// `(0, 1/2]` of the spectral gap.
pub fn riesz_projection_with_radius(
    a: &Element,
    targets: &[Complex64],
    cfg: &LabConfig,
    fraction: f64,
) -> Result<RieszReport> {
    cfg.validate()?;
    if targets.is_empty() {
        return Err(LabError::InvalidParameter(
            "at least one target is required".into(),
        ));
    }
    if !(fraction > 0.0 && fraction <= 0.5) {
        return Err(LabError::InvalidParameter(format!(
            "contour radius fraction must lie in (0, 1/2], got {fraction}"
        )));
    }
    let spec = spectrum(a, cfg.cluster_tol)?;
    let indices = resolve_targets(&spec, targets)?;
    let resolvent = Resolvent::new(a, cfg.singular_floor)?;

    let mut contours = Vec::with_capacity(indices.len());
    let mut projection = Element::zeros(&a.spec());
    for &i in &indices {
        let contour = contour_for(&spec, i, fraction)?;
        if contour.radius <= resolvent.floor() {
            return Err(LabError::ContourCollapse {
                center: contour.center,
                radius: contour.radius,
                floor: resolvent.floor(),
            });
        }
        let p = contour_integral(&resolvent, contour, cfg.nodes, |_| linalg::ONE)?;
        projection = projection.checked_add(&p)?;
        contours.push(contour);
    }

    let idempotency_defect = projection.idempotency_defect();
    let scale = projection.norm().max(1.0);
    if idempotency_defect > cfg.idempotency_tol * scale * scale {
        return Err(LabError::NotIdempotent {
            defect: idempotency_defect,
        });
    }
    let range_residual = if contours.iter().all(|c| c.center != ZERO) {
        Some(range_residual(a, &projection, cfg.rank_tol))
    } else {
        None
    };
    Ok(RieszReport {
        multiplicity: classical_rank(&projection, cfg.rank_tol),
        projection,
        contours,
        nodes: cfg.nodes,
        idempotency_defect,
        range_residual,
    })
}

/// Residual of the least-squares factorization `p = a w`.
fn range_residual(a: &Element, p: &Element, rel_tol: f64) -> f64 {
    a.blocks()
        .iter()
        .zip(p.blocks())
        .map(|(ab, pb)| {
            let w = linalg::least_squares(ab, pb, rel_tol);
            linalg::frobenius(&(ab * w - pb)).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Multiplicity of `a` at one spectral value, with the evidence for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multiplicity {
    pub value: Complex64,
    pub multiplicity: usize,
    /// Counting-disk radius used for the perturbation route.
    pub radius: f64,
    /// `#[sigma(xa) cap B(value, radius)]` for each accepted probe.
    pub perturbation_counts: Vec<usize>,
    /// Probes drawn, including those rejected for leaving `E(a)`.
    pub probes_drawn: usize,
    /// Rank of the Riesz projection; absent at zero.
    pub projection_rank: Option<usize>,
}

/// Spectrum and rank of one element, computed once and shared between
/// multiplicity queries.
pub struct SpectralData<'a> {
    pub element: &'a Element,
    pub spectrum: SpectrumReport,
    pub rank: usize,
}

impl<'a> SpectralData<'a> {
    pub fn new(a: &'a Element, cfg: &LabConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(SpectralData {
            element: a,
            spectrum: spectrum(a, cfg.cluster_tol)?,
            rank: spectral_rank(a, cfg)?.rank,
        })
    }

    /// Counts eigenvalues of `(1 + eps g) a` near the spectral point `index`
    /// for probes in `E(a)`.
    fn perturbation_counts(
        &self,
        index: usize,
        cfg: &LabConfig,
    ) -> Result<(f64, Vec<usize>, usize)> {
        let spec = &self.spectrum;
        let center = spec.points[index].value;
        let min_separation = MIN_SEPARATION_FACTOR * spec.cluster_tolerance;
        let radius = match spec.gap(index) {
            Some(gap) if gap < min_separation => {
                return Err(LabError::ContourCollapse {
                    center,
                    radius: COUNTING_RADIUS_FRACTION * gap,
                    floor: COUNTING_RADIUS_FRACTION * min_separation,
                })
            }
            Some(gap) => COUNTING_RADIUS_FRACTION * gap,
            None => 0.5 * spec.spectral_radius.max(1.0),
        };

        let a = self.element;
        let shape = a.spec();
        let identity = Element::identity(&shape);
        let max_attempts = 8 * cfg.probes;
        let mut counts = Vec::with_capacity(cfg.probes);
        let mut drawn = 0;
        while counts.len() < cfg.probes {
            if drawn == max_attempts {
                if counts.is_empty() {
                    return Err(LabError::ProbeOutsideGenericSet { attempts: drawn });
                }
                break;
            }
            let mut r = rng::for_probe(cfg.seed ^ MULTIPLICITY_STREAM, drawn as u64);
            drawn += 1;
            let g = Element::random(&shape, &mut r);
            let g = g.scale((cfg.perturbation / g.operator_norm()).into());
            let xa = identity.checked_add(&g)?.checked_mul(a)?;
            let perturbed = spectrum(&xa, cfg.cluster_tol)?;
            if perturbed.nonzero_count() != self.rank {
                continue;
            }
            counts.push(
                perturbed
                    .points
                    .iter()
                    .filter(|p| (p.value - center).norm() < radius)
                    .count(),
            );
        }
        Ok((radius, counts, drawn))
    }

    /// Multiplicity at `value`, cross-checked between the two routes.
    pub fn multiplicity(&self, value: Complex64, cfg: &LabConfig) -> Result<Multiplicity> {
        let index = self
            .spectrum
            .locate(value)
            .ok_or(LabError::TargetNotInSpectrum {
                target: value,
                nearest: self
                    .spectrum
                    .nearest(value)
                    .map(|i| self.spectrum.points[i].value),
            })?;
        let value = self.spectrum.points[index].value;
        let (radius, counts, drawn) = self.perturbation_counts(index, cfg)?;
        let projection_rank = if value != ZERO {
            Some(riesz_projection(self.element, &[value], cfg)?.multiplicity)
        } else {
            None
        };
        let first = counts[0];
        let consistent =
            counts.iter().all(|&c| c == first) && projection_rank.is_none_or(|r| r == first);
        if !consistent {
            return Err(LabError::MultiplicityInconsistency {
                value,
                perturbation: counts,
                projection: projection_rank,
            });
        }
        Ok(Multiplicity {
            value,
            multiplicity: first,
            radius,
            perturbation_counts: counts,
            probes_drawn: drawn,
            projection_rank,
        })
    }
}

pub fn multiplicity(a: &Element, value: Complex64, cfg: &LabConfig) -> Result<Multiplicity> {
    SpectralData::new(a, cfg)?.multiplicity(value, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub spectral_trace: Complex64,
    pub classical_trace: Complex64,
    /// Nonzero spectral values with their multiplicities.
    pub terms: Vec<SpectralPoint>,
    pub rank: usize,
}

/// `sum lambda m(lambda, a)` over the spectrum, certified against the
/// diagonal sum.
pub fn spectral_trace(a: &Element, cfg: &LabConfig) -> Result<TraceReport> {
    let data = SpectralData::new(a, cfg)?;
    let mut terms = Vec::new();
    for p in data.spectrum.nonzero() {
        let m = data.multiplicity(p.value, cfg)?;
        terms.push(SpectralPoint {
            value: m.value,
            multiplicity: m.multiplicity,
        });
    }
    let spectral: Complex64 = terms.iter().map(|t| t.value * t.multiplicity as f64).sum();
    let classical = classical_trace(a);
    let scale = terms
        .iter()
        .map(|t| t.value.norm() * t.multiplicity as f64)
        .sum::<f64>()
        .max(1.0);
    if (spectral - classical).norm() > TRACE_CERTIFICATE_TOL * scale {
        return Err(LabError::TraceCertification {
            spectral,
            classical,
        });
    }
    Ok(TraceReport {
        spectral_trace: spectral,
        classical_trace: classical,
        terms,
        rank: data.rank,
    })
}

/// `a = sum lambda_i p_i` with orthogonal minimal projections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagonalization {
    pub values: Vec<Complex64>,
    pub projections: Vec<Element>,
    pub residual: f64,
    pub max_idempotency_defect: f64,
    /// Largest `|p_i p_j|` over `i != j`.
    pub max_cross_product: f64,
    pub projection_ranks: Vec<usize>,
}

pub fn diagonalize_maximal(a: &Element, cfg: &LabConfig) -> Result<Diagonalization> {
    cfg.validate()?;
    let spec = spectrum(a, cfg.cluster_tol)?;
    let rank = spectral_rank(a, cfg)?.rank;
    if rank == 0 {
        return Err(LabError::ZeroElement);
    }
    let nonzero_points = spec.nonzero_count();
    if nonzero_points != rank {
        return Err(LabError::NotMaximal {
            rank,
            nonzero_points,
        });
    }
    let mut values = Vec::with_capacity(rank);
    let mut projections = Vec::with_capacity(rank);
    for p in spec.nonzero() {
        values.push(p.value);
        projections.push(riesz_projection(a, &[p.value], cfg)?.projection);
    }

    let mut reconstruction = Element::zeros(&a.spec());
    for (v, p) in values.iter().zip(&projections) {
        reconstruction = reconstruction.checked_add(&p.scale(*v))?;
    }
    let residual = a.distance(&reconstruction)?;
    let max_idempotency_defect = projections
        .iter()
        .map(Element::idempotency_defect)
        .fold(0.0, f64::max);
    let mut max_cross_product: f64 = 0.0;
    for (i, p) in projections.iter().enumerate() {
        for (j, q) in projections.iter().enumerate() {
            if i != j {
                max_cross_product = max_cross_product.max(p.checked_mul(q)?.norm());
            }
        }
    }
    let projection_ranks: Vec<usize> = projections
        .iter()
        .map(|p| classical_rank(p, cfg.rank_tol))
        .collect();

    let tol = cfg.idempotency_tol * a.norm().max(1.0);
    if residual > tol
        || max_idempotency_defect > tol
        || max_cross_product > tol
        || projection_ranks.iter().any(|&r| r != 1)
    {
        return Err(LabError::TheoremViolation {
            theorem: "diagonalization of maximal finite-rank elements".into(),
            detail: format!(
                "residual {residual:e}, idempotency {max_idempotency_defect:e}, cross {max_cross_product:e}, ranks {projection_ranks:?}"
            ),
        });
    }
    Ok(Diagonalization {
        values,
        projections,
        residual,
        max_idempotency_defect,
        max_cross_product,
        projection_ranks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceBound {
    pub trace_modulus: f64,
    pub rank: usize,
    pub spectral_radius: f64,
    pub holds: bool,
}

/// `|Tr(a)| <= rank(a) rho(a)`.
pub fn trace_bound_check(a: &Element, cfg: &LabConfig) -> Result<TraceBound> {
    let trace = spectral_trace(a, cfg)?;
    let rho = spectrum(a, cfg.cluster_tol)?.spectral_radius;
    let bound = trace.rank as f64 * rho;
    let trace_modulus = trace.spectral_trace.norm();
    Ok(TraceBound {
        trace_modulus,
        rank: trace.rank,
        spectral_radius: rho,
        holds: trace_modulus <= bound + TRACE_CERTIFICATE_TOL * bound.max(1.0),
    })
}

/// Compression of `pAp` onto the range of `p`, blockwise: `p = U V*` with
/// `V* U = 1`, and `pxp` maps to `V* x U`.
#[derive(Debug, Clone)]
pub struct Compression {
    /// Per block: `(U, V*)`, or `None` where `p` vanishes.
    factors: Vec<Option<(CMatrix, CMatrix)>>,
}

impl Compression {
    pub fn new(p: &Element, cfg: &LabConfig) -> Result<Self> {
        let defect = p.idempotency_defect();
        let scale = p.norm().max(1.0);
        if defect > cfg.idempotency_tol * scale * scale {
            return Err(LabError::NotIdempotent { defect });
        }
        let factors = p
            .blocks()
            .iter()
            .zip(block_ranks(p, cfg.rank_tol))
            .map(|(b, r)| {
                if r == 0 {
                    return None;
                }
                let svd = b.clone().svd(true, true);
                let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
                order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
                let u_full = svd.u.expect("requested u");
                let vt_full = svd.v_t.expect("requested v_t");
                let n = b.nrows();
                let u = CMatrix::from_fn(n, r, |i, k| {
                    u_full[(i, order[k])] * svd.singular_values[order[k]]
                });
                let vt = CMatrix::from_fn(r, n, |k, j| vt_full[(order[k], j)]);
                Some((u, vt))
            })
            .collect();
        Ok(Compression { factors })
    }

    /// Block sizes of `pAp`, the ranks of the blocks of `p`.
    pub fn block_sizes(&self) -> Vec<usize> {
        self.factors
            .iter()
            .map(|f| f.as_ref().map_or(0, |(u, _)| u.ncols()))
            .collect()
    }

    /// Splits `p` into orthogonal rank-one idempotents `u_k v_k*`, one per
    /// column of the factors, each tagged with its block.
    pub fn rank_one_parts(&self, spec: &AlgebraSpec) -> Vec<(usize, Element)> {
        let mut parts = Vec::new();
        for (block, f) in self.factors.iter().enumerate() {
            if let Some((u, vt)) = f {
                for k in 0..u.ncols() {
                    let part = u.column(k) * vt.row(k);
                    parts.push((
                        block,
                        Element::single_block(spec, block, part).expect("block in range"),
                    ));
                }
            }
        }
        parts
    }

    /// Image of `x` (assumed in `pAp`) in the compressed algebra, or `None`
    /// when `p = 0`.
    pub fn compress(&self, x: &Element) -> Option<Element> {
        let blocks: Vec<CMatrix> = self
            .factors
            .iter()
            .zip(x.blocks())
            .filter_map(|(f, xb)| f.as_ref().map(|(u, vt)| vt * xb * u))
            .collect();
        if blocks.is_empty() {
            None
        } else {
            Some(Element::new(blocks).expect("compressed blocks are square"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PapReport {
    pub compressed_block_sizes: Vec<usize>,
    pub ambient_nonzero_spectrum: Vec<SpectralPoint>,
    pub compressed_nonzero_spectrum: Vec<SpectralPoint>,
    pub spectra_agree: bool,
    pub ambient_rank: usize,
    pub compressed_rank: usize,
    pub ranks_agree: bool,
    pub ambient_trace: Complex64,
    pub compressed_trace: Complex64,
    pub traces_agree: bool,
}

impl PapReport {
    pub fn consistent(&self) -> bool {
        self.spectra_agree && self.ranks_agree && self.traces_agree
    }
}

fn nonzero_points_match(a: &[SpectralPoint], b: &[SpectralPoint], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().all(|p| {
            b.iter()
                .any(|q| (p.value - q.value).norm() <= tol && p.multiplicity == q.multiplicity)
        })
}

/// Compares nonzero spectrum, rank and trace of `pap` computed in `A` and in
/// the compressed algebra `pAp`.
pub fn pap_consistency(a: &Element, p: &Element, cfg: &LabConfig) -> Result<PapReport> {
    cfg.validate()?;
    let compression = Compression::new(p, cfg)?;
    let pap = p.checked_mul(a)?.checked_mul(p)?;

    let ambient_spec = spectrum(&pap, cfg.cluster_tol)?;
    let ambient_nonzero: Vec<SpectralPoint> = ambient_spec.nonzero().copied().collect();
    let ambient_trace = spectral_trace(&pap, cfg)?;

    let (compressed_nonzero, compressed_rank, compressed_trace, compressed_tol) =
        match compression.compress(&pap) {
            Some(c) => {
                let s = spectrum(&c, cfg.cluster_tol)?;
                let t = spectral_trace(&c, cfg)?;
                (
                    s.nonzero().copied().collect(),
                    t.rank,
                    t.spectral_trace,
                    s.cluster_tolerance,
                )
            }
            None => (Vec::new(), 0, ZERO, 0.0),
        };

    let match_tol = MIN_SEPARATION_FACTOR * ambient_spec.cluster_tolerance.max(compressed_tol);
    let trace_scale = ambient_trace
        .terms
        .iter()
        .map(|t| t.value.norm() * t.multiplicity as f64)
        .sum::<f64>()
        .max(1.0);
    Ok(PapReport {
        compressed_block_sizes: compression.block_sizes(),
        spectra_agree: nonzero_points_match(&ambient_nonzero, &compressed_nonzero, match_tol),
        ambient_nonzero_spectrum: ambient_nonzero,
        compressed_nonzero_spectrum: compressed_nonzero,
        ranks_agree: ambient_trace.rank == compressed_rank,
        ambient_rank: ambient_trace.rank,
        compressed_rank,
        traces_agree: (ambient_trace.spectral_trace - compressed_trace).norm()
            <= TRACE_CERTIFICATE_TOL * trace_scale,
        ambient_trace: ambient_trace.spectral_trace,
        compressed_trace,
    })
}
