//! Randers norm, metric validity (`|β♯|_α < 1`) and the generalized Berwald
//! criterion: a compatible linear connection exists iff `β♯` has constant
//! Riemannian length.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{FieldSpec, GeometryError, PointState};
use crate::tolerance::{Tolerances, RIEMANNIAN_LENGTH_SQ};

pub const DEFAULT_SAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RandersError {
    #[error("at least 2 samples are required, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Riemannian,
    GeneralizedBerwald,
    NotGeneralizedBerwald,
    InvalidRanders,
}

impl Verdict {
    /// Whether compatible connections exist (possibly only metric ones).
    pub fn admits_compatible_connection(self) -> bool {
        matches!(self, Verdict::Riemannian | Verdict::GeneralizedBerwald)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LengthStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GBReport {
    pub verdict: Verdict,
    /// Constant length of `β♯`; zero unless the verdict is generalized Berwald.
    pub k: f64,
    /// Statistics of `|β♯|_α` over the sample set.
    pub length: LengthStats,
    /// Relative spread `(max − min)/max` of the sampled `|β♯|²`.
    pub relative_spread: f64,
    pub samples: usize,
    pub seed: u64,
}

/// `F(v) = √(g_ij v^i v^j) + β_i v^i`.
pub fn randers_norm(ps: &PointState, v: &DVector<f64>) -> f64 {
    ps.inner(v, v).max(0.0).sqrt() + ps.beta_of(v)
}

/// Radical inverse of `index` in `base`.
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while index > 0 {
        out += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    out
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut c = 2u64;
    while primes.len() < count {
        if primes.iter().all(|p| c % p != 0) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

/// Halton points in the domain box with a seeded Cranley–Patterson shift.
pub fn sample_points(spec: &FieldSpec, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let primes = first_primes(n);
    (0..count)
        .map(|idx| {
            let u: Vec<f64> = (0..n)
                .map(|d| (radical_inverse(idx as u64 + 1, primes[d]) + shift[d]).fract())
                .collect();
            spec.domain().map_unit(&u)
        })
        .collect()
}

pub fn gb_criterion(spec: &FieldSpec, samples: usize, seed: u64) -> Result<GBReport, RandersError> {
    gb_criterion_with(spec, samples, seed, &Tolerances::default())
}

pub fn gb_criterion_with(
    spec: &FieldSpec,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<GBReport, RandersError> {
    if samples < 2 {
        return Err(RandersError::TooFewSamples(samples));
    }
    let points = sample_points(spec, samples, seed);
    let zeros = vec![0.0; spec.dim()];
    let squares = points
        .par_iter()
        .map(|p| {
            let (beta, _, sharp, _) = spec.beta_sharp_dual(p, &zeros)?;
            Ok(beta.dot(&sharp))
        })
        .collect::<Result<Vec<f64>, GeometryError>>()?;

    let lengths: Vec<f64> = squares.iter().map(|s| s.max(0.0).sqrt()).collect();
    let count = lengths.len() as f64;
    let mean = lengths.iter().sum::<f64>() / count;
    let var = lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / count;
    let stats = LengthStats {
        min: lengths.iter().copied().fold(f64::INFINITY, f64::min),
        max: lengths.iter().copied().fold(0.0, f64::max),
        mean,
        std: var.sqrt(),
    };
    let min_sq = squares.iter().copied().fold(f64::INFINITY, f64::min);
    let max_sq = squares.iter().copied().fold(0.0, f64::max);
    let mean_sq = squares.iter().sum::<f64>() / count;
    let relative_spread = if max_sq > 0.0 {
        (max_sq - min_sq) / max_sq
    } else {
        0.0
    };

    let (verdict, k) = if lengths.iter().any(|&l| l >= 1.0) {
        (Verdict::InvalidRanders, 0.0)
    } else if max_sq <= RIEMANNIAN_LENGTH_SQ {
        (Verdict::Riemannian, 0.0)
    } else if relative_spread <= tol.length {
        (Verdict::GeneralizedBerwald, mean_sq.sqrt())
    } else {
        (Verdict::NotGeneralizedBerwald, 0.0)
    };

    Ok(GBReport {
        verdict,
        k,
        length: stats,
        relative_spread,
        samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::Example;
    use crate::geometry::point_state;

    fn check(ex: Example, seed: u64) -> GBReport {
        gb_criterion(&ex.field_spec(), DEFAULT_SAMPLES, seed).unwrap()
    }

    #[test]
    fn built_in_verdicts() {
        let r = check(Example::FlatConst, 1);
        assert_eq!(r.verdict, Verdict::GeneralizedBerwald);
        assert_eq!(r.k, 0.5);

        let r = check(Example::Helical, 1);
        assert_eq!(r.verdict, Verdict::GeneralizedBerwald);
        assert!((r.k - 0.5).abs() < 1e-15);
        assert!(r.length.std < 1e-12);

        assert_eq!(check(Example::Shear, 1).verdict, Verdict::NotGeneralizedBerwald);
        assert_eq!(check(Example::Warped2d, 1).verdict, Verdict::GeneralizedBerwald);
    }

    #[test]
    fn verdict_does_not_depend_on_seed() {
        for ex in Example::ALL {
            let first = check(ex, 0).verdict;
            for seed in [1, 7, 42, 9999] {
                assert_eq!(check(ex, seed).verdict, first, "{ex:?} seed {seed}");
            }
        }
    }

    #[test]
    fn vanishing_form_is_riemannian() {
        let spec = FieldSpec::new(
            2,
            &[vec!["1", "0"], vec!["0", "1"]],
            &["0", "0"],
            crate::geometry::DomainBox {
                min: vec![-1.0; 2],
                max: vec![1.0; 2],
            },
        )
        .unwrap();
        let r = gb_criterion(&spec, 10, 3).unwrap();
        assert_eq!(r.verdict, Verdict::Riemannian);
        assert_eq!(r.k, 0.0);
    }

    #[test]
    fn long_form_is_invalid() {
        let spec = FieldSpec::new(
            2,
            &[vec!["1", "0"], vec!["0", "1"]],
            &["1.2", "0"],
            crate::geometry::DomainBox {
                min: vec![-1.0; 2],
                max: vec![1.0; 2],
            },
        )
        .unwrap();
        assert_eq!(gb_criterion(&spec, 10, 3).unwrap().verdict, Verdict::InvalidRanders);
        assert_eq!(
            gb_criterion(&spec, 1, 3),
            Err(RandersError::TooFewSamples(1))
        );
    }

    #[test]
    fn samples_are_reproducible_and_inside_the_box() {
        let spec = Example::Shear.field_spec();
        let a = sample_points(&spec, 50, 11);
        assert_eq!(a, sample_points(&spec, 50, 11));
        assert_ne!(a, sample_points(&spec, 50, 12));
        assert!(a.iter().all(|p| spec.domain().contains(p)));
    }

    #[test]
    fn norm_examples() {
        let ps = point_state(&Example::FlatConst.field_spec(), &[0.0; 3]).unwrap();
        let v = |x: &[f64]| DVector::from_column_slice(x);
        assert_eq!(randers_norm(&ps, &v(&[1.0, 0.0, 0.0])), 1.5);
        assert_eq!(randers_norm(&ps, &v(&[-1.0, 0.0, 0.0])), 0.5);
        assert_eq!(randers_norm(&ps, &v(&[0.0, 0.0, 0.0])), 0.0);
    }
}
