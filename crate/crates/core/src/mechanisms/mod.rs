//! Private release mechanisms.
//!
//! The main mechanism is the exponential mechanism over the sparse domain
//! `{D' ∈ ℕⁿ : ||D'||₁ = m}`: each candidate is scored by the negated worst
//! rescaled query error and sampled with probability proportional to
//! `exp(score·α/divisor)`. The released database is the candidate rescaled
//! to the database's L1 norm. An exact sampler enumerates the domain; an
//! MCMC sampler targets the same distribution for domains too large to
//! enumerate. A Laplace baseline and a private L1-norm estimator complete
//! the set.

pub mod domain;
pub mod exponential;
pub mod laplace;
pub mod mcmc;

use rand::Rng;
use serde::Serialize;

use crate::calibration::PRIVATE_L1_SHARE;
use crate::data::{Database, SparseSyntheticDatabase};
use crate::error::{Error, Result};

pub use domain::{
    check_domain_budget, domain_size, sparse_domain, SparseDomain, DEFAULT_DOMAIN_BUDGET,
};
pub use exponential::{
    exponential_release_exact, log_sum_exp, quality_score, sample_from_log_weights,
    score_sensitivity, ExactConfig,
};
pub use laplace::{estimate_l1, laplace_histogram, laplace_release, sample_laplace};
pub use mcmc::{exponential_release_mcmc, McmcChain, McmcConfig};

/// Privacy parameter `α` and usefulness failure probability `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrivacyParams {
    pub alpha: f64,
    pub delta_util: f64,
}

impl PrivacyParams {
    pub const DEFAULT_DELTA_UTIL: f64 = 0.1;

    pub fn new(alpha: f64, delta_util: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "must be positive and finite",
            });
        }
        if !(delta_util > 0.0 && delta_util < 1.0) {
            return Err(Error::InvalidParameter {
                name: "delta_util",
                value: delta_util,
                reason: "must lie in (0, 1)",
            });
        }
        Ok(Self { alpha, delta_util })
    }

    /// `α` with the default `δ`.
    pub fn with_alpha(alpha: f64) -> Result<Self> {
        Self::new(alpha, Self::DEFAULT_DELTA_UTIL)
    }
}

/// Divisor applied to the quality score in the exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum ExponentRule {
    /// `exp(score·α/4)`.
    #[default]
    Quarter,
    /// `exp(score·α / (2(1 + 1/m)))`.
    TightSensitivity,
}

impl ExponentRule {
    pub fn divisor(self, m: u64) -> f64 {
        match self {
            ExponentRule::Quarter => 4.0,
            ExponentRule::TightSensitivity => 2.0 * score_sensitivity(m),
        }
    }
}

/// Where the L1 norm used for scoring and rescaling comes from.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub enum L1Handling {
    /// The true `||D||₁`, treated as public.
    #[default]
    PublicTrue,
    /// A Laplace estimate spending [`PRIVATE_L1_SHARE`] of `α`; the mechanism
    /// gets the rest.
    PrivateEstimate,
    /// A caller-supplied value.
    Supplied(f64),
}

/// Resolves the L1 value and the `α` left for the exponential mechanism.
pub(crate) fn resolve_l1<R: Rng + ?Sized>(
    db: &Database,
    alpha: f64,
    l1: L1Handling,
    rng: &mut R,
) -> Result<(f64, f64)> {
    match l1 {
        L1Handling::PublicTrue => Ok((db.l1_norm(), alpha)),
        L1Handling::PrivateEstimate => {
            let share = alpha * PRIVATE_L1_SHARE;
            Ok((estimate_l1(db, share, rng)?, alpha - share))
        }
        L1Handling::Supplied(v) if v.is_finite() && v >= 0.0 => Ok((v, alpha)),
        L1Handling::Supplied(v) => Err(Error::InvalidParameter {
            name: "l1",
            value: v,
            reason: "must be finite and nonnegative",
        }),
    }
}

/// A synthetic-database release.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReleaseOutput {
    /// `d_prime` rescaled to `l1_used`.
    pub d_out: Database,
    pub d_prime: SparseSyntheticDatabase,
    /// Quality score of `d_prime`; always `<= 0`.
    pub score: f64,
    pub m: u64,
    pub exponent_rule: ExponentRule,
    pub l1_used: f64,
    /// `α` spent by the exponential mechanism itself.
    pub alpha_used: f64,
    /// True for MCMC output, whose privacy holds only in the mixing limit.
    pub approximate: bool,
}

/// `c_u · m · ln n / (η α)`: the database size above which the release is
/// expected to be `(η, δ)`-relatively useful.
pub fn utility_threshold(m: u64, n: usize, eta: f64, alpha: f64, c_u: f64) -> f64 {
    c_u * m as f64 * (n as f64).ln() / (eta * alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(PrivacyParams::new(1.0, 0.1).is_ok());
        assert!(PrivacyParams::new(0.0, 0.1).is_err());
        assert!(PrivacyParams::new(f64::INFINITY, 0.1).is_err());
        assert!(PrivacyParams::new(1.0, 0.0).is_err());
        assert!(PrivacyParams::new(1.0, 1.0).is_err());
    }

    #[test]
    fn divisors() {
        assert_eq!(ExponentRule::Quarter.divisor(3), 4.0);
        assert_eq!(ExponentRule::TightSensitivity.divisor(1), 4.0);
        assert!((ExponentRule::TightSensitivity.divisor(10) - 2.2).abs() < 1e-15);
    }
}
