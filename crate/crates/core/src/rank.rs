//! Rank as the supremum of `#sigma'(xa)` over `x`, estimated with random
//! probes.
//!
//! For a finite-rank `a` the set of `x` attaining the supremum is dense and
//! open, so an absolutely continuous probe lands in it with probability one.
//! Extra probes only guard against eigenvalues of `xa` that happen to fall
//! within the clustering radius of each other.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::{classical_rank, spectrum, Element};
use crate::config::LabConfig;
use crate::error::{LabError, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rank: usize,
    /// A probe `x` with `#sigma'(x a) = rank`.
    pub best_probe: Element,
    pub best_probe_index: usize,
    pub probes_used: usize,
    /// `#sigma'(xa)` value -> number of probes that produced it.
    pub achieved_counts: BTreeMap<usize, usize>,
    pub oracle_rank: usize,
}

impl RankReport {
    pub fn certified(&self) -> bool {
        self.rank == self.oracle_rank
    }
}

/// Number of distinct nonzero spectral values of `a`.
pub fn nonzero_spectrum_count(a: &Element, cfg: &LabConfig) -> Result<usize> {
    Ok(spectrum(a, cfg.cluster_tol)?.nonzero_count())
}

/// Runs the probes and reports the maximum without certifying it.
pub fn probe_rank(a: &Element, cfg: &LabConfig) -> Result<RankReport> {
    cfg.validate()?;
    let spec = a.spec();
    let mut achieved_counts = BTreeMap::new();
    let mut best: Option<(usize, usize, Element)> = None;
    for i in 0..cfg.probes {
        let x = Element::random(&spec, &mut rng::for_probe(cfg.seed, i as u64));
        let count = nonzero_spectrum_count(&x.checked_mul(a)?, cfg)?;
        *achieved_counts.entry(count).or_insert(0) += 1;
        if best.as_ref().is_none_or(|(c, _, _)| count > *c) {
            best = Some((count, i, x));
        }
    }
    let (rank, best_probe_index, best_probe) = best.expect("at least one probe");
    Ok(RankReport {
        rank,
        best_probe,
        best_probe_index,
        probes_used: cfg.probes,
        achieved_counts,
        oracle_rank: classical_rank(a, cfg.rank_tol),
    })
}

/// Spectral rank of `a`, certified against the singular-value rank.
pub fn spectral_rank(a: &Element, cfg: &LabConfig) -> Result<RankReport> {
    let report = probe_rank(a, cfg)?;
    if !report.certified() {
        return Err(LabError::RankCertification {
            spectral: report.rank,
            classical: report.oracle_rank,
        });
    }
    Ok(report)
}

/// `rank(a) = #sigma'(a)`.
pub fn is_maximal_finite_rank(a: &Element, cfg: &LabConfig) -> Result<bool> {
    Ok(nonzero_spectrum_count(a, cfg)? == spectral_rank(a, cfg)?.rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{diagonal, real_blocks, AlgebraSpec};
    use crate::linalg::CMatrix;
    use crate::rng::{gaussian_matrix, seeded};

    fn spec(sizes: &[usize]) -> AlgebraSpec {
        AlgebraSpec::new(sizes.to_vec()).unwrap()
    }

    fn cfg() -> LabConfig {
        LabConfig {
            probes: 16,
            ..LabConfig::default()
        }
    }

    fn low_rank(sizes: &[usize], ranks: &[usize], seed: u64) -> Element {
        let mut rng = seeded(seed);
        Element::new(
            sizes
                .iter()
                .zip(ranks)
                .map(|(&n, &r)| gaussian_matrix(n, r, &mut rng) * gaussian_matrix(r, n, &mut rng))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_has_rank_zero() {
        let r = spectral_rank(&Element::zeros(&spec(&[2, 3])), &cfg()).unwrap();
        assert_eq!(r.rank, 0);
        assert_eq!(r.achieved_counts.get(&0), Some(&16));
    }

    #[test]
    fn nilpotent_unit_has_rank_one() {
        let a = Element::unit(&spec(&[2, 1]), 0, 0, 1);
        let r = spectral_rank(&a, &cfg()).unwrap();
        assert_eq!((r.rank, r.oracle_rank), (1, 1));
    }

    #[test]
    fn rank_adds_across_blocks() {
        let a = Element::new(vec![crate::linalg::unit(2, 0, 0), CMatrix::identity(2, 2)]).unwrap();
        assert_eq!(spectral_rank(&a, &cfg()).unwrap().rank, 3);
    }

    #[test]
    fn best_probe_attains_rank() {
        let a = low_rank(&[3, 2], &[2, 1], 4);
        let c = cfg();
        let r = spectral_rank(&a, &c).unwrap();
        assert_eq!(r.rank, 3);
        assert_eq!(*r.achieved_counts.keys().max().unwrap(), r.rank);
        assert_eq!(
            nonzero_spectrum_count(&r.best_probe.checked_mul(&a).unwrap(), &c).unwrap(),
            3
        );
    }

    #[test]
    fn probes_are_reproducible() {
        let a = low_rank(&[4], &[2], 9);
        let c = cfg().with_seed(77);
        assert_eq!(probe_rank(&a, &c).unwrap(), probe_rank(&a, &c).unwrap());
    }

    #[test]
    fn maximal_examples() {
        let c = cfg();
        assert!(is_maximal_finite_rank(&diagonal(&[&[1.0, 2.0]]), &c).unwrap());
        assert!(!is_maximal_finite_rank(&Element::identity(&spec(&[2])), &c).unwrap());
        assert!(!is_maximal_finite_rank(&Element::unit(&spec(&[2]), 0, 0, 1), &c).unwrap());
    }

    #[test]
    fn nonzero_count_never_exceeds_rank() {
        let c = cfg();
        for seed in 0..10 {
            let a = low_rank(&[3, 2], &[(seed % 4) as usize, 1], seed);
            let a = a
                .checked_add(&Element::identity(&a.spec()).scale((seed as f64 * 0.1).into()))
                .unwrap();
            assert!(nonzero_spectrum_count(&a, &c).unwrap() <= spectral_rank(&a, &c).unwrap().rank);
        }
    }

    #[test]
    fn subadditive_and_monotone() {
        let c = cfg();
        let s = spec(&[3, 2]);
        for seed in 0..6 {
            let a = low_rank(&[3, 2], &[1, 1], seed);
            let b = low_rank(&[3, 2], &[1, 0], seed + 100);
            let rank = |e: &Element| spectral_rank(e, &c).unwrap().rank;
            assert!(rank(&a.checked_add(&b).unwrap()) <= rank(&a) + rank(&b));

            let x = low_rank(&[3, 2], &[1, 2], seed + 200);
            assert!(rank(&x.checked_mul(&a).unwrap()) <= rank(&a));
            assert!(rank(&a.checked_mul(&x).unwrap()) <= rank(&a));

            let u = Element::random(&s, &mut seeded(seed + 300));
            assert_eq!(rank(&u.checked_mul(&a).unwrap()), rank(&a));
        }
    }

    #[test]
    fn rank_one_projection_compresses_to_scalars() {
        // p = e11: pAp = C p, dimension 1
        let p = real_blocks(&[&[&[1.0, 0.0], &[0.0, 0.0]]]).unwrap();
        assert_eq!(spectral_rank(&p, &cfg()).unwrap().rank, 1);
        let s = p.spec();
        let mut compressed = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                let e = Element::unit(&s, 0, i, j);
                compressed.push(p.checked_mul(&e).unwrap().checked_mul(&p).unwrap());
            }
        }
        let nonzero = compressed.iter().filter(|e| e.norm() > 0.0).count();
        assert_eq!(nonzero, 1);

        // p = e11 + e22 in M3 has rank 2 and pAp = M2
        let q = diagonal(&[&[1.0, 1.0, 0.0]]);
        assert_eq!(spectral_rank(&q, &cfg()).unwrap().rank, 2);
    }
}
