//! The exponential mechanism's domain: every nonnegative integer vector of
//! length `n` summing to `m`.

use crate::combinatorics::binomial;
use crate::data::SparseSyntheticDatabase;
use crate::error::{Error, Result};

/// Default refusal threshold for enumerating the domain.
pub const DEFAULT_DOMAIN_BUDGET: u128 = 10_000_000;

/// `C(n+m−1, n−1)`, or `None` when it does not fit in a `u128`.
pub fn domain_size(n: usize, m: u64) -> Option<u128> {
    if n == 0 {
        return Some(0);
    }
    binomial((n as u64 - 1).checked_add(m)?, n as u64 - 1)
}

/// Refuses with [`Error::DomainTooLarge`] when the domain exceeds `budget`;
/// otherwise returns its size.
pub fn check_domain_budget(n: usize, m: u64, budget: u128) -> Result<u128> {
    match domain_size(n, m) {
        Some(size) if size <= budget => Ok(size),
        size => Err(Error::DomainTooLarge { n, m, size, budget }),
    }
}

/// Enumerates the domain for `(n, m)`.
///
/// Elements come in descending lexicographic order, starting from
/// `[m, 0, …, 0]` and ending at `[0, …, 0, m]`. Fails only when the domain
/// size overflows `u128`; callers that intend to materialize the domain
/// should check [`check_domain_budget`] first.
pub fn sparse_domain(n: usize, m: u64) -> Result<SparseDomain> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    if m == 0 {
        return Err(Error::InvalidParameter {
            name: "m",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    check_domain_budget(n, m, u128::MAX)?;
    let mut first = vec![0; n];
    first[0] = m;
    Ok(SparseDomain { next: Some(first) })
}

#[derive(Debug, Clone)]
pub struct SparseDomain {
    next: Option<Vec<u64>>,
}

impl SparseDomain {
    /// Advances to the successor of `counts` in place; false at the end.
    fn advance(counts: &mut [u64]) -> bool {
        let n = counts.len();
        if n < 2 {
            return false;
        }
        let Some(j) = (0..n - 1).rev().find(|&j| counts[j] > 0) else {
            return false;
        };
        let tail: u64 = counts[j + 1..].iter().sum();
        counts[j] -= 1;
        counts[j + 1] = tail + 1;
        for c in &mut counts[j + 2..] {
            *c = 0;
        }
        true
    }
}

impl Iterator for SparseDomain {
    type Item = SparseSyntheticDatabase;

    fn next(&mut self) -> Option<SparseSyntheticDatabase> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        if Self::advance(&mut succ) {
            self.next = Some(succ);
        }
        Some(SparseSyntheticDatabase::new(current).expect("domain elements sum to m >= 1"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(n: usize, m: u64) -> Vec<Vec<u64>> {
        sparse_domain(n, m)
            .unwrap()
            .map(|s| s.counts().to_vec())
            .collect()
    }

    #[test]
    fn small_domains() {
        assert_eq!(
            counts(3, 2),
            vec![
                vec![2, 0, 0],
                vec![1, 1, 0],
                vec![1, 0, 1],
                vec![0, 2, 0],
                vec![0, 1, 1],
                vec![0, 0, 2]
            ]
        );
        assert_eq!(counts(1, 5), vec![vec![5]]);
        assert_eq!(counts(4, 3).len(), 20);
        assert_eq!(domain_size(4, 3), Some(20));
    }

    #[test]
    fn count_matches_binomial_and_elements_are_distinct() {
        for n in 1..6 {
            for m in 1..7u64 {
                let all = counts(n, m);
                assert_eq!(all.len() as u128, domain_size(n, m).unwrap());
                assert!(all.iter().all(|c| c.iter().sum::<u64>() == m));
                // strictly descending lexicographic order implies distinctness
                assert!(all.windows(2).all(|w| w[0] > w[1]));
            }
        }
    }

    #[test]
    fn refusals() {
        assert!(sparse_domain(0, 1).is_err());
        assert!(sparse_domain(2, 0).is_err());
        assert!(matches!(
            sparse_domain(10_000, 10_000),
            Err(Error::DomainTooLarge { size: None, .. })
        ));
        let err = check_domain_budget(50, 50, DEFAULT_DOMAIN_BUDGET).unwrap_err();
        assert!(err.is_budget_refusal());
        assert!(err.to_string().contains("MCMC"));
        assert_eq!(check_domain_budget(4, 3, 20).unwrap(), 20);
        assert!(check_domain_budget(4, 3, 19).is_err());
    }
}
