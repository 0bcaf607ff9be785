use rand::Rng;

use super::domain::{check_domain_budget, sparse_domain, DEFAULT_DOMAIN_BUDGET};
use super::{resolve_l1, ExponentRule, L1Handling, PrivacyParams, ReleaseOutput};
use crate::data::{check_dim, dot, rescale, Database, QueryClass, SparseSyntheticDatabase};
use crate::error::{Error, Result};

/// Settings for [`exponential_release_exact`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactConfig {
    pub m: u64,
    pub rule: ExponentRule,
    pub l1: L1Handling,
    pub domain_budget: u128,
}

impl ExactConfig {
    pub fn new(m: u64) -> Self {
        Self {
            m,
            rule: ExponentRule::default(),
            l1: L1Handling::default(),
            domain_budget: DEFAULT_DOMAIN_BUDGET,
        }
    }

    pub fn rule(mut self, rule: ExponentRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn l1(mut self, l1: L1Handling) -> Self {
        self.l1 = l1;
        self
    }

    pub fn domain_budget(mut self, budget: u128) -> Self {
        self.domain_budget = budget;
        self
    }
}

/// `−max_{q∈C} |q(D) − (l1_estimate/m)·q(D')|`.
pub fn quality_score(
    db: &Database,
    sparse: &SparseSyntheticDatabase,
    class: &QueryClass,
    l1_estimate: f64,
) -> Result<f64> {
    check_dim(class.dim(), db.dim())?;
    check_dim(class.dim(), sparse.dim())?;
    if !(l1_estimate.is_finite() && l1_estimate >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "l1_estimate",
            value: l1_estimate,
            reason: "must be finite and nonnegative",
        });
    }
    let answers = class.answers(db)?;
    Ok(Scorer::new(class, &answers, l1_estimate, sparse.m()).score(sparse.counts()))
}

/// Sensitivity bound `1 + 1/m` of the quality score.
pub fn score_sensitivity(m: u64) -> f64 {
    1.0 + 1.0 / m as f64
}

/// Scores candidates against precomputed true answers.
pub(crate) struct Scorer<'a> {
    class: &'a QueryClass,
    answers: &'a [f64],
    scale: f64,
}

impl<'a> Scorer<'a> {
    pub(crate) fn new(class: &'a QueryClass, answers: &'a [f64], l1: f64, m: u64) -> Self {
        Self {
            class,
            answers,
            scale: l1 / m as f64,
        }
    }

    pub(crate) fn score(&self, counts: &[u64]) -> f64 {
        let lifted: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let sparse_answers: Vec<f64> = self
            .class
            .queries()
            .iter()
            .map(|q| dot(q.coefficients(), &lifted))
            .collect();
        self.score_from_answers(&sparse_answers)
    }

    /// Score given `q(D')` for every query.
    pub(crate) fn score_from_answers(&self, sparse_answers: &[f64]) -> f64 {
        -self
            .answers
            .iter()
            .zip(sparse_answers)
            .map(|(a, s)| (a - self.scale * s).abs())
            .fold(0.0, f64::max)
    }
}

/// `ln Σ exp(v)`, computed with the maximum subtracted.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Draws an index with probability proportional to `exp(log_weights[i])`.
pub fn sample_from_log_weights<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> usize {
    assert!(
        !log_weights.is_empty(),
        "cannot sample from an empty support"
    );
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    // Rounding can leave u marginally above the last weight.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Exponential mechanism over the enumerated sparse domain.
///
/// Refuses with [`Error::DomainTooLarge`] when the domain exceeds
/// `config.domain_budget`.
pub fn exponential_release_exact<R: Rng + ?Sized>(
    db: &Database,
    class: &QueryClass,
    params: &PrivacyParams,
    config: &ExactConfig,
    rng: &mut R,
) -> Result<ReleaseOutput> {
    check_dim(class.dim(), db.dim())?;
    let n = db.dim();
    let m = config.m;
    let domain = sparse_domain(n, m)?;
    check_domain_budget(n, m, config.domain_budget)?;

    let (l1, alpha) = resolve_l1(db, params.alpha, config.l1, rng)?;
    let answers = class.answers(db)?;
    let scorer = Scorer::new(class, &answers, l1, m);
    let coeff = alpha / config.rule.divisor(m);

    let candidates: Vec<SparseSyntheticDatabase> = domain.collect();
    let scores: Vec<f64> = candidates
        .iter()
        .map(|c| scorer.score(c.counts()))
        .collect();
    let log_weights: Vec<f64> = scores.iter().map(|s| s * coeff).collect();
    let pick = sample_from_log_weights(&log_weights, rng);

    let d_prime = candidates
        .into_iter()
        .nth(pick)
        .expect("index within domain");
    Ok(ReleaseOutput {
        d_out: rescale(&d_prime, l1)?,
        d_prime,
        score: scores[pick],
        m,
        exponent_rule: config.rule,
        l1_used: l1,
        alpha_used: alpha,
        approximate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{max_error, rescale};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sparse(c: &[u64]) -> SparseSyntheticDatabase {
        SparseSyntheticDatabase::new(c.to_vec()).unwrap()
    }

    #[test]
    fn quality_score_examples() {
        let class = QueryClass::from_rows([vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let db = Database::new(vec![2.0, 2.0]).unwrap();
        assert_eq!(
            quality_score(&db, &sparse(&[1, 1]), &class, 4.0).unwrap(),
            0.0
        );

        let class = QueryClass::from_rows([vec![1.0, 0.0]]).unwrap();
        let db = Database::new(vec![4.0, 0.0]).unwrap();
        assert_eq!(
            quality_score(&db, &sparse(&[0, 2]), &class, 4.0).unwrap(),
            -4.0
        );

        assert!(quality_score(&db, &sparse(&[1, 1, 1]), &class, 4.0).is_err());
        assert!(quality_score(&db, &sparse(&[1, 1]), &class, -1.0).is_err());
    }

    #[test]
    fn sensitivity_examples() {
        assert_eq!(score_sensitivity(1), 2.0);
        assert!((score_sensitivity(10) - 1.1).abs() < 1e-15);
        assert!((1..1000).all(|m| score_sensitivity(m) <= 2.0));
        assert!((1..1000).all(|m| score_sensitivity(m + 1) < score_sensitivity(m)));
    }

    #[test]
    fn large_alpha_returns_argmax() {
        let class = QueryClass::from_rows([vec![1.0, 0.0, 0.5], vec![0.2, 1.0, 0.0]]).unwrap();
        let db = Database::new(vec![3.0, 1.0, 0.0]).unwrap();
        let params = PrivacyParams::with_alpha(1e6).unwrap();
        let config = ExactConfig::new(4);
        let best = sparse_domain(3, 4)
            .unwrap()
            .map(|c| quality_score(&db, &c, &class, 4.0).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let out = exponential_release_exact(&db, &class, &params, &config, &mut rng).unwrap();
            assert_eq!(out.score, best);
            assert!(!out.approximate);
        }
    }

    #[test]
    fn refuses_oversized_domain() {
        let class = QueryClass::from_rows([vec![1.0; 40]]).unwrap();
        let db = Database::new(vec![1.0; 40]).unwrap();
        let params = PrivacyParams::with_alpha(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = exponential_release_exact(&db, &class, &params, &ExactConfig::new(40), &mut rng)
            .unwrap_err();
        assert!(matches!(err, Error::DomainTooLarge { .. }));
    }

    #[test]
    fn output_is_rescaled_choice() {
        let class = QueryClass::from_rows([vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let db = Database::new(vec![2.5, 4.0]).unwrap();
        let params = PrivacyParams::with_alpha(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for l1 in [
            L1Handling::PublicTrue,
            L1Handling::Supplied(10.0),
            L1Handling::PrivateEstimate,
        ] {
            let config = ExactConfig::new(3).l1(l1);
            let out = exponential_release_exact(&db, &class, &params, &config, &mut rng).unwrap();
            assert_eq!(out.d_out, rescale(&out.d_prime, out.l1_used).unwrap());
            assert!(out.score <= 0.0);
            let expected_alpha = if l1 == L1Handling::PrivateEstimate {
                0.9
            } else {
                1.0
            };
            assert!((out.alpha_used - expected_alpha).abs() < 1e-12);
        }
        assert_eq!(
            exponential_release_exact(&db, &class, &params, &ExactConfig::new(3), &mut rng)
                .unwrap()
                .l1_used,
            6.5
        );
    }

    #[test]
    fn log_sum_exp_is_stable() {
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_sum_exp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    proptest! {
        #[test]
        fn score_matches_max_error(
            rows in prop::collection::vec(prop::collection::vec(0.0..=1.0f64, 3), 1..6),
            d in prop::collection::vec(0.0..20.0f64, 3),
            c in prop::collection::vec(0u64..5, 3),
            l1 in 0.0..50.0f64,
        ) {
            prop_assume!(c.iter().sum::<u64>() > 0);
            let class = QueryClass::from_rows(rows).unwrap();
            let db = Database::new(d).unwrap();
            let s = sparse(&c);
            let score = quality_score(&db, &s, &class, l1).unwrap();
            let err = max_error(&class, &db, &rescale(&s, l1).unwrap()).unwrap();
            prop_assert!((score + err).abs() <= 1e-9 * err.max(1.0));
        }

        #[test]
        fn shifting_log_weights_leaves_sampling_unchanged(
            w in prop::collection::vec(-20.0..0.0f64, 1..10),
            shift in -500.0..500.0f64,
            seed in any::<u64>(),
        ) {
            let shifted: Vec<f64> = w.iter().map(|x| x + shift).collect();
            let a = sample_from_log_weights(&w, &mut ChaCha8Rng::seed_from_u64(seed));
            let b = sample_from_log_weights(&shifted, &mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(a, b);
            let pa: Vec<f64> = w.iter().map(|x| (x - log_sum_exp(&w)).exp()).collect();
            let pb: Vec<f64> = shifted.iter().map(|x| (x - log_sum_exp(&shifted)).exp()).collect();
            for (x, y) in pa.iter().zip(&pb) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}
