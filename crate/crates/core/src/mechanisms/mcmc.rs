//! Metropolis sampler over the sparse domain.
//!
//! A proposal picks an ordered pair `(from, to)` of distinct coordinates
//! uniformly and moves one unit of mass from `from` to `to`; proposals that
//! would make a count negative leave the state in place. The proposal is
//! symmetric, so accepting with probability `min(1, exp(Δscore·α/divisor))`
//! makes the exact mechanism's distribution stationary.

use rand::Rng;

use super::domain::sparse_domain;
use super::exponential::Scorer;
use super::{resolve_l1, ExponentRule, L1Handling, PrivacyParams, ReleaseOutput};
use crate::data::{check_dim, rescale, Database, QueryClass, SparseSyntheticDatabase};
use crate::error::{Error, Result};

/// Settings for [`exponential_release_mcmc`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McmcConfig {
    pub m: u64,
    pub rule: ExponentRule,
    pub l1: L1Handling,
    pub steps: u64,
}

impl McmcConfig {
    pub fn new(m: u64, steps: u64) -> Self {
        Self {
            m,
            rule: ExponentRule::default(),
            l1: L1Handling::default(),
            steps,
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
}

/// Moves one unit from `from` to `to`, or `None` if `counts[from] == 0`.
pub fn transfer(counts: &[u64], from: usize, to: usize) -> Option<Vec<u64>> {
    if counts[from] == 0 || from == to {
        return None;
    }
    let mut next = counts.to_vec();
    next[from] -= 1;
    next[to] += 1;
    Some(next)
}

/// Metropolis acceptance probability for a move between scores.
pub fn acceptance_probability(score_from: f64, score_to: f64, coeff: f64) -> f64 {
    ((score_to - score_from) * coeff).exp().min(1.0)
}

/// A running chain. `q(D')` is cached per query and updated incrementally.
pub struct McmcChain<'a> {
    scorer: Scorer<'a>,
    class: &'a QueryClass,
    coeff: f64,
    counts: Vec<u64>,
    sparse_answers: Vec<f64>,
    score: f64,
}

impl<'a> McmcChain<'a> {
    /// Chain targeting `exp(score·alpha/rule.divisor(m))` with scores taken
    /// against `answers` (the true `q(D)`) and `l1`; starts at `[m, 0, …, 0]`.
    pub fn new(
        class: &'a QueryClass,
        answers: &'a [f64],
        l1: f64,
        alpha: f64,
        rule: ExponentRule,
        m: u64,
    ) -> Result<Self> {
        check_dim(class.len(), answers.len())?;
        let start = sparse_domain(class.dim(), m)?
            .next()
            .expect("domain is nonempty");
        let scorer = Scorer::new(class, answers, l1, m);
        let counts = start.counts().to_vec();
        let sparse_answers: Vec<f64> = class
            .queries()
            .iter()
            .map(|q| q.coefficients()[0] * m as f64)
            .collect();
        let score = scorer.score_from_answers(&sparse_answers);
        Ok(Self {
            scorer,
            class,
            coeff: alpha / rule.divisor(m),
            counts,
            sparse_answers,
            score,
        })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    /// One Metropolis step; true if a move was accepted.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let n = self.counts.len();
        if n < 2 {
            return false;
        }
        let from = rng.random_range(0..n);
        let to = (from + rng.random_range(1..n)) % n;
        if self.counts[from] == 0 {
            return false;
        }
        let proposed: Vec<f64> = self
            .class
            .queries()
            .iter()
            .zip(&self.sparse_answers)
            .map(|(q, a)| a - q.on_basis(from) + q.on_basis(to))
            .collect();
        let proposed_score = self.scorer.score_from_answers(&proposed);
        let accept = acceptance_probability(self.score, proposed_score, self.coeff);
        if accept >= 1.0 || rng.random::<f64>() < accept {
            self.counts[from] -= 1;
            self.counts[to] += 1;
            self.sparse_answers = proposed;
            self.score = proposed_score;
            true
        } else {
            false
        }
    }
}

/// Approximate exponential-mechanism release: runs `config.steps`
/// Metropolis steps and returns the final state. The output is flagged
/// `approximate`.
pub fn exponential_release_mcmc<R: Rng + ?Sized>(
    db: &Database,
    class: &QueryClass,
    params: &PrivacyParams,
    config: &McmcConfig,
    rng: &mut R,
) -> Result<ReleaseOutput> {
    if config.steps == 0 {
        return Err(Error::InvalidParameter {
            name: "steps",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    check_dim(class.dim(), db.dim())?;
    let (l1, alpha) = resolve_l1(db, params.alpha, config.l1, rng)?;
    let answers = class.answers(db)?;
    let mut chain = McmcChain::new(class, &answers, l1, alpha, config.rule, config.m)?;
    for _ in 0..config.steps {
        chain.step(rng);
    }
    let d_prime = SparseSyntheticDatabase::new(chain.counts().to_vec())?;
    Ok(ReleaseOutput {
        d_out: rescale(&d_prime, l1)?,
        d_prime,
        score: chain.score(),
        m: config.m,
        exponent_rule: config.rule,
        l1_used: l1,
        alpha_used: alpha,
        approximate: true,
    })
}
