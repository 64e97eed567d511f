mod common;

use proptest::prelude::*;
use tracelab::algebra::{classical_rank, classical_trace, resolvent, spectrum};
use tracelab::commutator::{commutator_decompose, rank_one_commutator, verify_certificate};
use tracelab::functional::{
    constant_on_rank_one_projections, is_scalar_trace, is_tracial, random_functional,
    random_rank_one_projection, Functional, FunctionalFamily, FUNCTIONAL_TOL,
};
use tracelab::linalg::{numerical_rank, CMatrix};
use tracelab::rank::{nonzero_spectrum_count, spectral_rank};
use tracelab::riesz::{spectral_trace, Compression, SpectralData};
use tracelab::rng::{complex_gaussian, gaussian_matrix, seeded};
use tracelab::socle::{orthogonal_decomposition, random_projection, verify_theorems};
use tracelab::{AlgebraSpec, Complex64, Element, LabConfig, SpectrumReport};

use common::{corpus_element, low_rank, spec};

const SPECS: [&[usize]; 7] = [&[1], &[2], &[3], &[2, 2], &[1, 3], &[2, 3, 1], &[1, 1, 4]];

fn any_spec() -> impl Strategy<Value = AlgebraSpec> {
    (0..SPECS.len()).prop_map(|i| spec(SPECS[i]))
}

/// Every nonzero point of `a` has a point of `b` within `tol` and the same
/// multiplicity.
fn covered(a: &SpectrumReport, b: &SpectrumReport, tol: f64) -> bool {
    a.nonzero().all(|p| {
        b.nonzero()
            .any(|q| (p.value - q.value).norm() <= tol && p.multiplicity == q.multiplicity)
    })
}

fn cfg() -> LabConfig {
    LabConfig::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jacobson_nonzero_spectra_agree(sp in any_spec(), seed in any::<u64>(), kind in 0usize..4) {
        let mut rng = seeded(seed);
        let a = corpus_element(&sp, kind, &mut rng);
        let x = Element::random(&sp, &mut rng);
        let xa = spectrum(&x.checked_mul(&a).unwrap(), 1e-6).unwrap();
        let ax = spectrum(&a.checked_mul(&x).unwrap(), 1e-6).unwrap();
        let tol = 1e-6 * xa.spectral_radius.max(1.0);
        prop_assert_eq!(xa.nonzero_count(), ax.nonzero_count());
        prop_assert!(covered(&xa, &ax, tol) && covered(&ax, &xa, tol));
    }

    #[test]
    fn multiplicities_sum_to_order(sp in any_spec(), seed in any::<u64>(), kind in 0usize..4) {
        let a = corpus_element(&sp, kind, &mut seeded(seed));
        prop_assert_eq!(spectrum(&a, 1e-6).unwrap().total_multiplicity(), sp.order());
    }

    #[test]
    fn resolvent_inverts(sp in any_spec(), seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let a = Element::random(&sp, &mut rng);
        let z = complex_gaussian(&mut rng) * 3.0;
        if let Ok(r) = resolvent(&a, z, 1e-10) {
            let shifted = Element::identity(&sp).scale(z).checked_sub(&a).unwrap();
            let defect = shifted.checked_mul(&r).unwrap().distance(&Element::identity(&sp)).unwrap();
            prop_assert!(defect <= 1e-8 * r.norm().max(1.0), "defect {defect:e}");
        }
    }

    #[test]
    fn rank_is_monotone_and_subadditive(sp in any_spec(), seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let (a, b) = (low_rank(&sp, &mut rng), low_rank(&sp, &mut rng));
        let x = low_rank(&sp, &mut rng);
        let g = Element::random(&sp, &mut rng);
        let c = cfg();
        let r = |e: &Element| spectral_rank(e, &c).unwrap().rank;
        let ra = r(&a);
        prop_assert!(r(&x.checked_mul(&a).unwrap()) <= ra);
        prop_assert!(r(&a.checked_mul(&x).unwrap()) <= ra);
        prop_assert_eq!(r(&g.checked_mul(&a).unwrap()), ra);
        prop_assert!(r(&a.checked_add(&b).unwrap()) <= ra + r(&b));
        prop_assert!(nonzero_spectrum_count(&a, &c).unwrap() <= ra);
        prop_assert_eq!(classical_rank(&g.checked_mul(&a).unwrap(), 1e-9), classical_rank(&a, 1e-9));
    }

    #[test]
    fn rank_one_projections_have_one_dimensional_corner(sp in any_spec(), seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let p = random_projection(&sp, &mut rng);
        let c = cfg();
        let rank = spectral_rank(&p, &c).unwrap().rank;
        let corner: usize = Compression::new(&p, &c).unwrap().block_sizes().iter().map(|r| r * r).sum();
        prop_assert_eq!(rank == 1, corner == 1);
        prop_assert_eq!(rank * rank >= corner, true);
    }

    #[test]
    fn multiplicity_sum_rule(sp in any_spec(), seed in any::<u64>()) {
        let a = low_rank(&sp, &mut seeded(seed));
        let c = cfg();
        let data = SpectralData::new(&a, &c).unwrap();
        let total: usize = data
            .spectrum
            .points
            .iter()
            .map(|p| data.multiplicity(p.value, &c).unwrap().multiplicity)
            .sum();
        prop_assert_eq!(total, data.rank + usize::from(data.spectrum.contains_zero));
    }

    #[test]
    fn trace_is_homogeneous_and_kills_commutators(sp in any_spec(), seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let a = low_rank(&sp, &mut rng);
        let b = Element::random(&sp, &mut rng);
        let alpha = complex_gaussian(&mut rng);
        let c = cfg();
        let t = spectral_trace(&a, &c).unwrap().spectral_trace;
        let scaled = spectral_trace(&a.scale(alpha), &c).unwrap().spectral_trace;
        prop_assert!((scaled - alpha * t).norm() <= 1e-8 * (1.0 + alpha.norm() * a.norm()));
        let comm = spectral_trace(&a.commutator(&b).unwrap(), &c).unwrap().spectral_trace;
        prop_assert!(comm.norm() <= 1e-8 * (1.0 + a.norm() * b.norm()), "trace of commutator {comm}");
    }

    #[test]
    fn commutator_certificates_round_trip(n in 1usize..=8, seed in any::<u64>()) {
        let g = gaussian_matrix(n, n, &mut seeded(seed));
        let m = &g - CMatrix::identity(n, n) * (g.trace() / n as f64);
        let cert = commutator_decompose(&m).unwrap();
        prop_assert!(verify_certificate(&cert) <= 1e-12);
        prop_assert!(cert.terms.len() < n * n);
    }

    #[test]
    fn rank_one_commutators_have_rank_one_factors(n in 1usize..=6, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let mut v = || gaussian_matrix(n, 1, &mut rng).iter().copied().collect::<Vec<Complex64>>();
        let (x, f, y, g) = (v(), v(), v(), v());
        if let Ok(r) = rank_one_commutator(&x, &f, &y, &g) {
            prop_assert_eq!((r.rank_s, r.rank_t), (1, 1));
            prop_assert_eq!(numerical_rank(&r.s, 1e-9), 1);
            prop_assert_eq!(numerical_rank(&r.t, 1e-9), 1);
        }
    }

    #[test]
    fn trace_is_tracial(sp in any_spec(), seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let (a, b) = (Element::random(&sp, &mut rng), Element::random(&sp, &mut rng));
        let tr = Functional::trace(&sp);
        let ab = tr.evaluate(&a.checked_mul(&b).unwrap()).unwrap();
        let ba = tr.evaluate(&b.checked_mul(&a).unwrap()).unwrap();
        prop_assert!((ab - ba).norm() <= 1e-8);
        prop_assert!((ab - classical_trace(&a.checked_mul(&b).unwrap())).norm() <= 1e-12);
    }

    #[test]
    fn scalar_trace_implies_other_conditions(sp in any_spec(), seed in any::<u64>(), family in 0usize..4) {
        let mut rng = seeded(seed);
        let f = random_functional(&sp, FunctionalFamily::ALL[family], &mut rng);
        let scalar = is_scalar_trace(&f, FUNCTIONAL_TOL).is_some();
        let tracial = is_tracial(&f, FUNCTIONAL_TOL).unwrap().tracial;
        let constant = constant_on_rank_one_projections(&f, FUNCTIONAL_TOL, 12, seed).unwrap().constant;
        if scalar {
            prop_assert!(tracial && constant);
        }
        prop_assert_eq!(constant, scalar);
        if sp.num_blocks() == 1 {
            prop_assert_eq!(tracial, scalar);
        }
    }

    #[test]
    fn minimal_projection_identity(sp in any_spec(), seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let block = (seed as usize) % sp.num_blocks();
        let p = random_rank_one_projection(&sp, block, &mut rng);
        let x = Element::random(&sp, &mut rng);
        let pxp = p.checked_mul(&x).unwrap().checked_mul(&p).unwrap();
        let scalar = Functional::trace(&sp).evaluate(&x.checked_mul(&p).unwrap()).unwrap();
        prop_assert!(pxp.distance(&p.scale(scalar)).unwrap() <= 1e-8 * (1.0 + p.norm().powi(2) * x.norm()));
    }

    #[test]
    fn elements_and_functionals_round_trip_through_json(sp in any_spec(), seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let a = Element::random(&sp, &mut rng);
        let back: Element = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        prop_assert_eq!(back, a);
        let f = random_functional(&sp, FunctionalFamily::Generic, &mut rng);
        let back: Functional = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        prop_assert_eq!(back, f);
    }
}

#[test]
fn distinct_block_ideals_meet_in_zero() {
    for sizes in SPECS {
        let d = orthogonal_decomposition(&spec(sizes));
        assert!(d.spans_algebra, "{sizes:?}");
        assert!(
            d.intersections.iter().all(|i| i.dimension == 0),
            "{sizes:?}"
        );
        assert!(d.max_cross_product <= 1e-12, "{sizes:?}");
    }
}

#[test]
fn verification_is_deterministic() {
    let c = cfg();
    let sp = spec(&[1, 3]);
    let a = serde_json::to_string(&verify_theorems(&sp, 12, 5, &c).unwrap()).unwrap();
    let b = serde_json::to_string(&verify_theorems(&sp, 12, 5, &c).unwrap()).unwrap();
    assert_eq!(a, b);
}
