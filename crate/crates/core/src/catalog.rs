//! Object catalogs, Zipf popularity profiles and per-object demand.
//!
//! Objects are ranked by decreasing popularity; rank 1 is the most popular.
//! Small catalogs keep a dense probability vector. Large ones (up to ~10^8
//! objects) keep only the exponent and normalizer and evaluate probabilities
//! on demand, so no length-N storage is needed to describe them.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Catalogs up to this size always carry a dense probability vector.
pub const DENSE_LIMIT: u64 = 1_000_000;

/// Ranked Zipf probability profile `q(n) = n^-alpha / sum_u u^-alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopularityProfile {
    n_objects: u64,
    alpha: f64,
    normalizer: f64,
    dense: Option<Vec<f64>>,
}

impl PopularityProfile {
    /// Builds a Zipf profile. `alpha = 0` is the uniform catalog.
    pub fn zipf(n_objects: u64, alpha: f64) -> Result<Self> {
        if n_objects == 0 {
            return Err(Error::InvalidCatalog("catalog must contain at least one object".into()));
        }
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidCatalog(format!("zipf exponent must be finite and >= 0, got {alpha}")));
        }
        let normalizer = zipf_normalizer(n_objects, alpha);
        let dense = (n_objects <= DENSE_LIMIT).then(|| {
            (1..=n_objects).map(|rank| weight(rank, alpha) / normalizer).collect()
        });
        Ok(Self { n_objects, alpha, normalizer, dense })
    }

    pub fn n_objects(&self) -> u64 {
        self.n_objects
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `sum_{u=1..N} u^-alpha`.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn is_dense(&self) -> bool {
        self.dense.is_some()
    }

    /// Probability of the object at 1-based `rank`.
    ///
    /// # Panics
    /// If `rank` is 0 or beyond the catalog.
    #[inline]
    pub fn prob(&self, rank: u64) -> f64 {
        assert!(rank >= 1 && rank <= self.n_objects, "rank {rank} outside 1..={}", self.n_objects);
        match &self.dense {
            Some(p) => p[(rank - 1) as usize],
            None => weight(rank, self.alpha) / self.normalizer,
        }
    }

    /// Probability at 0-based `index`, i.e. rank `index + 1`. No bounds
    /// check beyond the dense vector's own.
    #[inline]
    pub(crate) fn prob_at(&self, index: usize) -> f64 {
        match &self.dense {
            Some(p) => p[index],
            None => weight(index as u64 + 1, self.alpha) / self.normalizer,
        }
    }

    /// The full probability vector, materialized if the profile is analytic.
    pub fn probs(&self) -> Cow<'_, [f64]> {
        match &self.dense {
            Some(p) => Cow::Borrowed(p),
            None => Cow::Owned((0..self.n_objects as usize).map(|i| self.prob_at(i)).collect()),
        }
    }
}

#[inline]
fn weight(rank: u64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else {
        (rank as f64).powf(-alpha)
    }
}

/// Compensated sum of `u^-alpha`, smallest term (rank N) first.
fn zipf_normalizer(n: u64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return n as f64;
    }
    let mut acc = CompensatedSum::new();
    for rank in (1..=n).rev() {
        acc.add(weight(rank, alpha));
    }
    acc.value()
}

/// Shorthand for [`PopularityProfile::zipf`].
pub fn zipf_profile(n_objects: u64, alpha: f64) -> Result<PopularityProfile> {
    PopularityProfile::zipf(n_objects, alpha)
}

/// Per-rank Poisson request rates, in Interests per second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PerObjectRates(Vec<f64>);

impl PerObjectRates {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if let Some((i, r)) = rates.iter().enumerate().find(|(_, r)| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::Domain(format!("rate at index {i} must be finite and >= 0, got {r}")));
        }
        Ok(Self(rates))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().copied().collect::<CompensatedSum>().value()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for PerObjectRates {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// `rates[n] = lambda_total * q(n)`.
pub fn demand_vector(profile: &PopularityProfile, lambda_total: f64) -> Result<PerObjectRates> {
    if !(lambda_total.is_finite() && lambda_total >= 0.0) {
        return Err(Error::Domain(format!("total rate must be finite and >= 0, got {lambda_total}")));
    }
    Ok(PerObjectRates(profile.probs().iter().map(|p| lambda_total * p).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{x} vs {y}");
        }
    }

    #[test]
    fn harmonic_four() {
        let p = zipf_profile(4, 1.0).unwrap();
        assert_close(&p.probs(), &[0.48, 0.24, 0.16, 0.12], 1e-15);
    }

    #[test]
    fn uniform_limit() {
        let p = zipf_profile(5, 0.0).unwrap();
        assert_close(&p.probs(), &[0.2; 5], 0.0);
    }

    #[test]
    fn empty_catalog_rejected() {
        assert!(matches!(zipf_profile(0, 1.0), Err(Error::InvalidCatalog(_))));
        assert!(matches!(zipf_profile(3, -0.1), Err(Error::InvalidCatalog(_))));
    }

    #[test]
    fn analytic_profile_matches_dense_formula() {
        let big = zipf_profile(DENSE_LIMIT + 10, 0.8).unwrap();
        assert!(!big.is_dense());
        let z = big.normalizer();
        assert_eq!(big.prob(7), 7f64.powf(-0.8) / z);
        assert_eq!(big.prob_at(6), big.prob(7));
    }

    #[test]
    fn demand_examples() {
        let uniform = zipf_profile(4, 0.0).unwrap();
        assert_eq!(demand_vector(&uniform, 100.0).unwrap().as_slice(), &[25.0; 4]);
        assert!(demand_vector(&uniform, 0.0).unwrap().iter().all(|r| *r == 0.0));
        let z = zipf_profile(4, 1.0).unwrap();
        assert_close(&demand_vector(&z, 100.0).unwrap(), &[48.0, 24.0, 16.0, 12.0], 1e-12);
        assert!(demand_vector(&z, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn profile_is_normalized_and_ranked(n in 1u64..5000, alpha in 0.0f64..2.5) {
            let p = zipf_profile(n, alpha).unwrap();
            let probs = p.probs();
            let total: f64 = probs.iter().copied().collect::<CompensatedSum>().value();
            prop_assert!((total - 1.0).abs() <= 1e-9);
            prop_assert!(probs.iter().all(|q| *q > 0.0));
            prop_assert!(probs.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn demand_is_homogeneous(n in 1u64..500, alpha in 0.0f64..2.0, lambda in 0.0f64..1e6, shift in -8i32..8) {
            let p = zipf_profile(n, alpha).unwrap();
            let c = 2f64.powi(shift);
            let base = demand_vector(&p, lambda).unwrap();
            let scaled = demand_vector(&p, c * lambda).unwrap();
            for (b, s) in base.iter().zip(scaled.iter()) {
                prop_assert_eq!(b * c, *s);
            }
            prop_assert!((base.total() - lambda).abs() <= 1e-9 * lambda.max(1.0));
        }
    }
}
