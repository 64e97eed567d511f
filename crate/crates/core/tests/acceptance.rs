//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use tracelab::algebra::{classical_rank, classical_trace, eigenvalues, spectrum};
use tracelab::commutator::{commutator_decompose, rank_one_commutator, verify_certificate};
use tracelab::functional::{
    is_scalar_trace, is_tracial, random_functional, spectral_bound_witness, vanishes_on_nilpotents,
    vanishes_on_square_zero, Functional, FunctionalFamily, SpectralBound, FUNCTIONAL_TOL,
};
use tracelab::linalg::{max_abs, CMatrix};
use tracelab::rank::spectral_rank;
use tracelab::riesz::{
    diagonalize_maximal, riesz_projection, spectral_trace, SpectralData, MIN_SEPARATION_FACTOR,
};
use tracelab::rng::{complex_gaussian, gaussian_matrix, seeded};
use tracelab::socle::{classify, verify_theorems};
use tracelab::{Complex64, Element, LabConfig, LabError};

use common::{corpus, maximal_element, spec, CORPUS_SPECS};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1(corpus: &[Element], cfg: &LabConfig) -> Outcome {
    let start = Instant::now();
    let mut mismatches = 0;
    for a in corpus {
        match spectral_rank(a, cfg) {
            Ok(r) if r.rank == classical_rank(a, cfg.rank_tol) => {}
            _ => mismatches += 1,
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs < 30.0,
        format!(
            "{} elements, {mismatches} mismatches, {secs:.2} s",
            corpus.len()
        ),
    )
}

fn criterion_2(corpus: &[Element], cfg: &LabConfig) -> Outcome {
    let mut rng = seeded(2);
    let (mut failures, mut worst, mut worst_homogeneity) = (0, 0.0f64, 0.0f64);
    for a in corpus {
        let Ok(t) = spectral_trace(a, cfg) else {
            failures += 1;
            continue;
        };
        let scale = t
            .terms
            .iter()
            .map(|p| p.value.norm() * p.multiplicity as f64)
            .sum::<f64>()
            .max(1.0);
        let err = (t.spectral_trace - classical_trace(a)).norm() / scale;
        worst = worst.max(err);
        let alpha = complex_gaussian(&mut rng);
        let Ok(scaled) = spectral_trace(&a.scale(alpha), cfg) else {
            failures += 1;
            continue;
        };
        let h = (scaled.spectral_trace - alpha * t.spectral_trace).norm()
            / (alpha.norm() * scale).max(1.0);
        worst_homogeneity = worst_homogeneity.max(h);
    }
    outcome(
        failures == 0 && worst <= 1e-8 && worst_homogeneity <= 1e-8,
        format!(
            "{} elements, {failures} failures, max relative error {worst:.1e}, max homogeneity error {worst_homogeneity:.1e}",
            corpus.len()
        ),
    )
}

fn criterion_3(maximal: &[(Element, Vec<Complex64>)], cfg: &LabConfig) -> Outcome {
    let mut failures = Vec::new();
    let (mut idem, mut cross, mut resid) = (0.0f64, 0.0f64, 0.0f64);
    let mut min_ratio = f64::INFINITY;
    let mut sum_rule_failures = 0;
    let coarse = LabConfig {
        nodes: 32,
        ..cfg.clone()
    };
    let fine = LabConfig {
        nodes: 64,
        ..cfg.clone()
    };
    for (k, (a, values)) in maximal.iter().enumerate() {
        let d = match diagonalize_maximal(a, cfg) {
            Ok(d) => d,
            Err(e) => {
                failures.push(format!("#{k}: {e}"));
                continue;
            }
        };
        idem = idem.max(d.max_idempotency_defect);
        cross = cross.max(d.max_cross_product);
        resid = resid.max(d.residual);

        let data = SpectralData::new(a, cfg).unwrap();
        let total: usize = data
            .spectrum
            .points
            .iter()
            .map(|p| {
                data.multiplicity(p.value, cfg)
                    .map(|m| m.multiplicity)
                    .unwrap_or(usize::MAX / 4)
            })
            .sum();
        let expected = values.len() + usize::from(data.spectrum.contains_zero);
        if total != expected || data.rank != values.len() {
            sum_rule_failures += 1;
        }

        let (mut d32, mut d64) = (0.0f64, 0.0f64);
        for v in values {
            d32 = d32.max(
                riesz_projection(a, &[*v], &coarse)
                    .unwrap()
                    .idempotency_defect,
            );
            d64 = d64.max(
                riesz_projection(a, &[*v], &fine)
                    .unwrap()
                    .idempotency_defect,
            );
        }
        min_ratio = min_ratio.min(d32 / d64.max(f64::MIN_POSITIVE));
    }
    outcome(
        failures.is_empty()
            && idem <= 1e-8
            && cross <= 1e-8
            && resid <= 1e-8
            && sum_rule_failures == 0
            && min_ratio >= 1e2,
        format!(
            "{} elements, {} failures {:?}, idempotency {idem:.1e}, orthogonality {cross:.1e}, residual {resid:.1e}, sum rule failures {sum_rule_failures}, min 32/64 defect ratio {min_ratio:.1e}",
            maximal.len(),
            failures.len(),
            failures.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn criterion_4(elements: &[&Element], cfg: &LabConfig) -> Outcome {
    let (mut compared, mut disagreements, mut algebraic_mismatches, mut skipped) = (0, 0, 0, 0);
    for a in elements {
        let Ok(data) = SpectralData::new(a, cfg) else {
            disagreements += 1;
            continue;
        };
        let min_gap = MIN_SEPARATION_FACTOR * data.spectrum.cluster_tolerance;
        for (i, p) in data.spectrum.points.iter().enumerate() {
            if p.value.norm() == 0.0 {
                continue;
            }
            if data.spectrum.gap(i).is_some_and(|g| g < min_gap) {
                skipped += 1;
                continue;
            }
            compared += 1;
            let route_b = riesz_projection(a, &[p.value], cfg).map(|r| r.multiplicity);
            match (data.multiplicity(p.value, cfg), route_b) {
                (Ok(m), Ok(b)) => {
                    if m.perturbation_counts.iter().any(|&c| c != b) {
                        disagreements += 1;
                    }
                    if b != p.multiplicity {
                        algebraic_mismatches += 1;
                    }
                }
                (Err(LabError::MultiplicityInconsistency { .. }), _)
                | (_, Err(_))
                | (Err(_), _) => disagreements += 1,
            }
        }
    }
    outcome(
        disagreements == 0 && algebraic_mismatches == 0 && compared > 0,
        format!(
            "{compared} spectral values, {disagreements} disagreements, {algebraic_mismatches} differ from eigenvalue count, {skipped} skipped for small gaps"
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = seeded(5);
    let (mut worst, mut too_many_terms) = (0.0f64, 0);
    for k in 0..500 {
        let n = 1 + k % 8;
        let g = gaussian_matrix(n, n, &mut rng);
        let m = &g - CMatrix::identity(n, n) * (g.trace() / n as f64);
        let cert = commutator_decompose(&m).unwrap();
        worst = worst.max(verify_certificate(&cert));
        if cert.terms.len() > n * n - 1 {
            too_many_terms += 1;
        }
    }

    let (mut pair_worst, mut rank_failures, mut errors) = (0.0f64, 0, 0);
    let mut drawn = 0;
    while drawn < 200 {
        let n = 1 + rng.random_range(0..8);
        let v = |rng: &mut _| {
            gaussian_matrix(n, 1, rng)
                .iter()
                .copied()
                .collect::<Vec<Complex64>>()
        };
        let (x, f, y, g) = (v(&mut rng), v(&mut rng), v(&mut rng), v(&mut rng));
        let pair = |f: &[Complex64], x: &[Complex64]| {
            f.iter().zip(x).map(|(a, b)| a * b).sum::<Complex64>()
        };
        let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if pair(&f, &x).norm() < 1e-2 * norm(&f) * norm(&x)
            || pair(&g, &y).norm() < 1e-2 * norm(&g) * norm(&y)
        {
            continue;
        }
        drawn += 1;
        match rank_one_commutator(&x, &f, &y, &g) {
            Ok(r) => {
                let defect = max_abs(&((&r.p - &r.q) - (&r.s * &r.t - &r.t * &r.s)));
                pair_worst = pair_worst.max(defect).max(r.commutator_defect);
                let one = |m: &CMatrix| tracelab::linalg::numerical_rank(m, 1e-9) == 1;
                if r.rank_s != 1 || r.rank_t != 1 || !one(&r.s) || !one(&r.t) {
                    rank_failures += 1;
                }
            }
            Err(_) => errors += 1,
        }
    }
    outcome(
        worst <= 1e-12 && too_many_terms == 0 && pair_worst <= 1e-12 && rank_failures == 0 && errors == 0,
        format!(
            "500 certificates max defect {worst:.1e} ({too_many_terms} over n^2-1 terms); 200 rank-one pairs max defect {pair_worst:.1e}, {rank_failures} rank failures, {errors} errors"
        ),
    )
}

/// Runs the theorem checker; also counts rank-one/scalar-trace exceptions.
fn run_verify(
    sizes: &[usize],
    cfg: &LabConfig,
    exceptions: &mut usize,
) -> Result<tracelab::socle::VerificationReport, String> {
    let r = verify_theorems(&spec(sizes), 100, 17, cfg).map_err(|e| format!("{sizes:?}: {e}"))?;
    *exceptions += r.functionals_checked - r.rank_one_matches_scalar;
    Ok(r)
}

fn criterion_6(cfg: &LabConfig, exceptions: &mut usize) -> Outcome {
    let mut problems = Vec::new();
    let mut worst_alpha = 0.0f64;
    let mut rng = seeded(6);
    for sizes in [&[1][..], &[2], &[4]] {
        match run_verify(sizes, cfg, exceptions) {
            Ok(r) => {
                worst_alpha = worst_alpha.max(r.max_alpha_error);
                if r.all_conditions_agree != r.functionals_checked || r.planted_alphas == 0 {
                    problems.push(format!(
                        "{sizes:?}: {}/{} agree",
                        r.all_conditions_agree, r.functionals_checked
                    ));
                }
            }
            Err(e) => problems.push(e),
        }
        for _ in 0..20 {
            let alpha = complex_gaussian(&mut rng);
            let f = Functional::scalar_trace(&spec(sizes), alpha);
            match is_scalar_trace(&f, FUNCTIONAL_TOL) {
                Some(found) => worst_alpha = worst_alpha.max((found - alpha).norm()),
                None => problems.push(format!("{sizes:?}: planted {alpha} not recovered")),
            }
        }
    }
    outcome(
        problems.is_empty() && worst_alpha <= 1e-8,
        format!("specs (1), (2), (4): {problems:?}, max alpha error {worst_alpha:.1e}"),
    )
}

fn criterion_7(cfg: &LabConfig, exceptions: &mut usize) -> Outcome {
    let mut problems = Vec::new();
    for sizes in [&[2, 2][..], &[1, 3], &[2, 3, 1]] {
        let r = match run_verify(sizes, cfg, exceptions) {
            Ok(r) => r,
            Err(e) => {
                problems.push(e);
                continue;
            }
        };
        let Some(c) = r.counterexample else {
            problems.push(format!("{sizes:?}: no counterexample"));
            continue;
        };
        let ch = &c.characterization;
        let pair_ok = ch.rank_one_projections.witness.as_ref().is_some_and(|w| {
            let fp = c.functional.evaluate(&w.p).unwrap();
            let fq = c.functional.evaluate(&w.q).unwrap();
            (fp - fq).norm() > 1e-6
                && [&w.p, &w.q]
                    .iter()
                    .all(|p| p.idempotency_defect() < 1e-8 && classical_rank(p, 1e-9) == 1)
        });
        let not_scalar =
            c.value_on_second_block.norm() < 1e-12 && c.trace_on_second_block.norm() > 0.5;
        if !(ch.tracial.tracial
            && ch.spectral_bound.is_bound()
            && ch.scalar_trace.is_none()
            && pair_ok
            && not_scalar)
        {
            problems.push(format!("{sizes:?}: counterexample verdicts wrong"));
        }
    }
    outcome(
        problems.is_empty() && *exceptions == 0,
        format!("specs (2,2), (1,3), (2,3,1): {problems:?}; rank-one vs scalar-trace exceptions over all six specs: {exceptions}"),
    )
}

const STRUCTURE_SPECS: [&[usize]; 9] = [
    &[1],
    &[2],
    &[3],
    &[4],
    &[2, 2],
    &[1, 3],
    &[2, 3],
    &[2, 3, 1],
    &[1, 1, 4],
];

fn criterion_8(cfg: &LabConfig) -> Outcome {
    let mut disagreements = Vec::new();
    for sizes in STRUCTURE_SPECS {
        match classify(&spec(sizes), 50, 8, cfg) {
            Ok(r) if r.verdicts_agree() => {}
            Ok(r) => disagreements.push(format!(
                "{sizes:?}: minimal {} single {} projections {}",
                r.socle_is_minimal_ideal,
                r.socle_is_single_matrix_block,
                r.all_projections_single_block
            )),
            Err(e) => disagreements.push(format!("{sizes:?}: {e}")),
        }
    }
    outcome(
        disagreements.is_empty(),
        format!(
            "{} specs, disagreements {disagreements:?}",
            STRUCTURE_SPECS.len()
        ),
    )
}

/// Whether `witness` really has zero spectral radius and a nonzero value.
fn witness_valid(f: &Functional, w: &Element) -> bool {
    let rho = eigenvalues(w)
        .unwrap()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let value = f.evaluate(w).unwrap();
    rho <= 1e-6 * w.norm().max(1.0) && value.norm() > FUNCTIONAL_TOL * f.scale() * w.norm()
}

/// Whether `|f(a)| <= c rho(a)` on a few random elements.
fn bound_holds(f: &Functional, c: f64, rng: &mut tracelab::rng::LabRng) -> bool {
    (0..4).all(|_| {
        let a = Element::random(&f.spec(), rng);
        let rho = spectrum(&a, 1e-6).unwrap().spectral_radius;
        f.evaluate(&a).unwrap().norm() <= c * rho * (1.0 + 1e-8) + 1e-12
    })
}

fn criterion_9() -> Outcome {
    let mut rng = seeded(9);
    let (mut checked, mut disagreements, mut bad_certificates, mut tracial_count) = (0, 0, 0, 0);
    for (s, sizes) in STRUCTURE_SPECS.iter().enumerate() {
        let sp = spec(sizes);
        for t in 0..200 {
            let f = random_functional(&sp, FunctionalFamily::ALL[t % 4], &mut rng);
            let seed = (s * 1000 + t) as u64;
            let tracial = is_tracial(&f, FUNCTIONAL_TOL).unwrap().tracial;
            let square_zero = vanishes_on_square_zero(&f, FUNCTIONAL_TOL, 16, seed)
                .unwrap()
                .vanishes;
            let nilpotent = vanishes_on_nilpotents(&f, FUNCTIONAL_TOL, 16, seed)
                .unwrap()
                .vanishes;
            let bound = spectral_bound_witness(&f, FUNCTIONAL_TOL).unwrap();
            checked += 1;
            tracial_count += usize::from(tracial);
            if tracial != square_zero || tracial != nilpotent || tracial != bound.is_bound() {
                disagreements += 1;
            }
            let certified = match &bound {
                SpectralBound::Bound { c } => bound_holds(&f, *c, &mut rng),
                SpectralBound::Witness { element, .. } => witness_valid(&f, element),
            };
            if !certified {
                bad_certificates += 1;
            }
        }
    }
    outcome(
        disagreements == 0 && bad_certificates == 0,
        format!(
            "{checked} functionals over {} specs ({tracial_count} tracial), {disagreements} disagreements, {bad_certificates} invalid bounds or witnesses",
            STRUCTURE_SPECS.len()
        ),
    )
}

fn main() -> ExitCode {
    let cfg = LabConfig::default();
    let mut rng = seeded(1);
    let corpus = corpus(500, &mut rng);
    let maximal: Vec<(Element, Vec<Complex64>)> = (0..200)
        .map(|i| maximal_element(&spec(CORPUS_SPECS[1 + i % 4]), 0.1, &mut rng))
        .collect();
    let cross_route: Vec<&Element> = corpus
        .iter()
        .chain(maximal.iter().map(|(a, _)| a))
        .collect();
    let mut exceptions = 0;

    let timed = |name: &'static str, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = run();
        (name, o, start.elapsed().as_secs_f64())
    };
    let results = [
        timed("rank coincidence", &mut || criterion_1(&corpus, &cfg)),
        timed("trace coincidence", &mut || criterion_2(&corpus, &cfg)),
        timed("riesz calculus", &mut || criterion_3(&maximal, &cfg)),
        timed("multiplicity routes", &mut || {
            criterion_4(&cross_route, &cfg)
        }),
        timed("commutator certificates", &mut criterion_5),
        timed("single block pattern", &mut || {
            criterion_6(&cfg, &mut exceptions)
        }),
        timed("several blocks pattern", &mut || {
            criterion_7(&cfg, &mut exceptions)
        }),
        timed("structural agreement", &mut || criterion_8(&cfg)),
        timed("equivalence engine", &mut criterion_9),
    ];
    let mut all = true;
    for (i, (name, o, secs)) in results.iter().enumerate() {
        all &= o.pass;
        println!(
            "criterion {} ({name}): {}  {} [{secs:.1} s]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
