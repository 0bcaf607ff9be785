//! γ-shattering of basis-vector subsets and the γ-fat-shattering dimension of
//! finite query classes.
//!
//! A subset `S` of basis indices is γ-shattered by `C` if there is a threshold
//! vector `r` such that every bit pattern `b ∈ {0,1}^|S|` is realized by some
//! query `q_b`: `q_b(e_i) ≥ r_i + γ` where `b_i = 1` and `q_b(e_i) ≤ r_i − γ`
//! where `b_i = 0`.
//!
//! The search never enumerates `r`. For a fixed assignment `b ↦ q_b`, a valid
//! `r_i` exists iff the smallest value chosen for a `1`-bit at coordinate `i`
//! exceeds the largest value chosen for a `0`-bit by at least `2γ`, and the
//! midpoint of the two is then a valid threshold. Shattering therefore
//! reduces to a search over assignments, which is done depth-first with
//! that separation condition checked per coordinate after every choice.

use serde::{Deserialize, Serialize};

use crate::combinatorics::Combinations;
use crate::data::QueryClass;
use crate::error::{Error, Result};

/// Default cap on search nodes for [`fsd`].
pub const DEFAULT_NODE_BUDGET: u64 = 50_000_000;

/// Slack used only when pruning partial assignments; final acceptance is
/// always decided by the exact inequalities.
const PRUNE_SLACK: f64 = 1e-12;

/// Certificate that `subset` is γ-shattered by a class.
///
/// `assignment[b]` is the index of the query realizing pattern `b`, where bit
/// `j` of `b` is the pattern's value at `subset[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShatteringWitness {
    pub subset: Vec<usize>,
    pub thresholds: Vec<f64>,
    pub assignment: Vec<usize>,
    pub gamma: f64,
}

impl ShatteringWitness {
    pub fn dim(&self) -> usize {
        self.subset.len()
    }

    /// Query index assigned to the pattern with the given bits.
    pub fn query_for_pattern(&self, pattern: usize) -> usize {
        self.assignment[pattern]
    }
}

/// Result of [`fsd`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FsdResult {
    pub d: usize,
    pub witness: Option<ShatteringWitness>,
    pub nodes_explored: u64,
    /// False when the node budget ran out; `d` is then only a lower bound.
    pub exact: bool,
}

/// Outcome of a budgeted shattering search on one subset.
#[derive(Debug, Clone, PartialEq)]
pub enum ShatterOutcome {
    Shattered(ShatteringWitness),
    NotShattered,
    OutOfBudget,
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "gamma",
            value: gamma,
            reason: "must lie in (0, 1/2]",
        })
    }
}

fn check_subset(class: &QueryClass, subset: &[usize]) -> Result<()> {
    let n = class.dim();
    let mut seen = vec![false; n];
    for &i in subset {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    Ok(())
}

/// Checks the shattering inequalities for every pattern and position, with
/// no tolerance.
pub fn verify_shattering(class: &QueryClass, witness: &ShatteringWitness) -> Result<bool> {
    let d = witness.dim();
    if d == 0 {
        return Err(Error::InvalidParameter {
            name: "subset",
            value: 0.0,
            reason: "witness subset must be nonempty",
        });
    }
    check_subset(class, &witness.subset)?;
    if witness.thresholds.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: witness.thresholds.len(),
        });
    }
    let patterns = 1usize << d;
    if witness.assignment.len() != patterns {
        return Err(Error::DimensionMismatch {
            expected: patterns,
            found: witness.assignment.len(),
        });
    }
    let gamma = witness.gamma;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Ok(false);
    }
    if witness.thresholds.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Ok(false);
    }
    for (pattern, &qi) in witness.assignment.iter().enumerate() {
        let q = class.get(qi)?;
        for (pos, (&basis, &r)) in witness.subset.iter().zip(&witness.thresholds).enumerate() {
            let v = q.on_basis(basis);
            let ok = if pattern >> pos & 1 == 1 {
                v >= r + gamma
            } else {
                v <= r - gamma
            };
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// A threshold in `[0,1]` with `lo ≥ r + γ` and `hi ≤ r − γ`, if the float
/// arithmetic admits one near the separating midpoint.
fn threshold_between(lo: f64, hi: f64, gamma: f64) -> Option<f64> {
    [(lo + hi) / 2.0, lo - gamma, hi + gamma]
        .into_iter()
        .find(|&r| (0.0..=1.0).contains(&r) && lo >= r + gamma && hi <= r - gamma)
}

struct Search<'a> {
    gamma: f64,
    /// `values[c][p]`: value of distinct query `c` at subset position `p`.
    values: Vec<Vec<f64>>,
    /// Original class index of distinct query `c`.
    original: Vec<usize>,
    /// Patterns in search order, each with its admissible distinct queries.
    order: Vec<(usize, Vec<usize>)>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    chosen: Vec<usize>,
    subset: &'a [usize],
    nodes: u64,
    budget: u64,
}

enum Step {
    Found(ShatteringWitness),
    Exhausted,
    OutOfBudget,
}

impl Search<'_> {
    fn run(&mut self, depth: usize) -> Step {
        if depth == self.order.len() {
            return self.leaf();
        }
        let d = self.subset.len();
        let pattern = self.order[depth].0;
        for ci in 0..self.order[depth].1.len() {
            let c = self.order[depth].1[ci];
            self.nodes += 1;
            if self.nodes > self.budget {
                return Step::OutOfBudget;
            }
            let saved_lo = self.lo.clone();
            let saved_hi = self.hi.clone();
            let mut feasible = true;
            for p in 0..d {
                let v = self.values[c][p];
                if pattern >> p & 1 == 1 {
                    self.lo[p] = self.lo[p].min(v);
                } else {
                    self.hi[p] = self.hi[p].max(v);
                }
                if self.lo[p] - self.hi[p] < 2.0 * self.gamma - PRUNE_SLACK {
                    feasible = false;
                    break;
                }
            }
            if feasible {
                self.chosen[pattern] = c;
                match self.run(depth + 1) {
                    Step::Exhausted => {}
                    other => return other,
                }
            }
            self.lo = saved_lo;
            self.hi = saved_hi;
        }
        Step::Exhausted
    }

    fn leaf(&self) -> Step {
        let thresholds: Option<Vec<f64>> = (0..self.subset.len())
            .map(|p| threshold_between(self.lo[p], self.hi[p], self.gamma))
            .collect();
        match thresholds {
            Some(thresholds) => Step::Found(ShatteringWitness {
                subset: self.subset.to_vec(),
                thresholds,
                assignment: self.chosen.iter().map(|&c| self.original[c]).collect(),
                gamma: self.gamma,
            }),
            None => Step::Exhausted,
        }
    }
}

/// Decides whether `subset` is γ-shattered, spending at most `budget` search
/// nodes. Returns the outcome and the number of nodes used.
pub fn search_shattering(
    class: &QueryClass,
    subset: &[usize],
    gamma: f64,
    budget: u64,
) -> Result<(ShatterOutcome, u64)> {
    check_gamma(gamma)?;
    if subset.is_empty() {
        return Err(Error::InvalidParameter {
            name: "subset",
            value: 0.0,
            reason: "subset must be nonempty",
        });
    }
    check_subset(class, subset)?;
    let d = subset.len();
    if d >= usize::BITS as usize - 1 {
        return Ok((ShatterOutcome::NotShattered, 0));
    }
    let patterns = 1usize << d;

    // Queries with identical restrictions to the subset are interchangeable;
    // keep the lowest index of each.
    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut original = Vec::new();
    for (qi, q) in class.queries().iter().enumerate() {
        let row: Vec<f64> = subset.iter().map(|&i| q.on_basis(i)).collect();
        if !values.contains(&row) {
            values.push(row);
            original.push(qi);
        }
    }
    // Distinct patterns need distinct queries.
    if values.len() < patterns {
        return Ok((ShatterOutcome::NotShattered, 0));
    }

    // Any valid r has γ ≤ r_i ≤ 1 − γ, so a 1-bit needs a value ≥ 2γ and a
    // 0-bit a value ≤ 1 − 2γ.
    let mut order: Vec<(usize, Vec<usize>)> = (0..patterns)
        .map(|b| {
            let admissible = (0..values.len())
                .filter(|&c| {
                    (0..d).all(|p| {
                        let v = values[c][p];
                        if b >> p & 1 == 1 {
                            v >= 2.0 * gamma - PRUNE_SLACK
                        } else {
                            v <= 1.0 - 2.0 * gamma + PRUNE_SLACK
                        }
                    })
                })
                .collect();
            (b, admissible)
        })
        .collect();
    if order.iter().any(|(_, c)| c.is_empty()) {
        return Ok((ShatterOutcome::NotShattered, 0));
    }
    order.sort_by_key(|(b, c)| (c.len(), *b));

    let mut search = Search {
        gamma,
        values,
        original,
        order,
        lo: vec![f64::INFINITY; d],
        hi: vec![f64::NEG_INFINITY; d],
        chosen: vec![0; patterns],
        subset,
        nodes: 0,
        budget,
    };
    let outcome = match search.run(0) {
        Step::Found(w) => ShatterOutcome::Shattered(w),
        Step::Exhausted => ShatterOutcome::NotShattered,
        Step::OutOfBudget => ShatterOutcome::OutOfBudget,
    };
    Ok((outcome, search.nodes.min(budget)))
}

/// Returns a witness iff `subset` is γ-shattered by `class`.
pub fn is_gamma_shattered(
    class: &QueryClass,
    subset: &[usize],
    gamma: f64,
) -> Result<Option<ShatteringWitness>> {
    match search_shattering(class, subset, gamma, u64::MAX)?.0 {
        ShatterOutcome::Shattered(w) => Ok(Some(w)),
        ShatterOutcome::NotShattered => Ok(None),
        ShatterOutcome::OutOfBudget => unreachable!("unbounded search cannot run out of budget"),
    }
}

/// γ-fat-shattering dimension of `class`, searching subsets of size at most
/// `d_max` with the default node budget.
pub fn fsd(class: &QueryClass, gamma: f64, d_max: usize) -> Result<FsdResult> {
    fsd_with_budget(class, gamma, d_max, DEFAULT_NODE_BUDGET)
}

/// Like [`fsd`] with an explicit node budget. Among shattered subsets of the
/// largest size, the lexicographically smallest is reported.
pub fn fsd_with_budget(
    class: &QueryClass,
    gamma: f64,
    d_max: usize,
    budget: u64,
) -> Result<FsdResult> {
    check_gamma(gamma)?;
    if d_max < 1 {
        return Err(Error::InvalidParameter {
            name: "d_max",
            value: d_max as f64,
            reason: "must be at least 1",
        });
    }
    let mut result = FsdResult {
        d: 0,
        witness: None,
        nodes_explored: 0,
        exact: true,
    };
    // Subsets of a shattered set are shattered, so sizes are tried upward
    // until one fails.
    for size in 1..=d_max.min(class.dim()) {
        let mut found = None;
        for subset in Combinations::new(class.dim(), size) {
            let remaining = budget - result.nodes_explored;
            let (outcome, used) = search_shattering(class, &subset, gamma, remaining)?;
            result.nodes_explored += used;
            match outcome {
                ShatterOutcome::Shattered(w) => {
                    found = Some(w);
                    break;
                }
                ShatterOutcome::NotShattered => {}
                ShatterOutcome::OutOfBudget => {
                    result.exact = false;
                    return Ok(result);
                }
            }
        }
        match found {
            Some(w) => {
                result.d = size;
                result.witness = Some(w);
            }
            None => break,
        }
    }
    Ok(result)
}

/// Sparse-domain size `m` for accuracy `eta` and fat-shattering dimension `d`:
/// `ceil(c_m/η² · (d·ln²(1/η) + ln 2))`, at least 1.
pub fn choose_m(eta: f64, d: usize, c_m: f64) -> Result<u64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "eta",
            value: eta,
            reason: "must lie in (0, 1]",
        });
    }
    if !(c_m > 0.0 && c_m.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "c_m",
            value: c_m,
            reason: "must be positive",
        });
    }
    let log_inv = (1.0 / eta).ln();
    let m = (c_m / (eta * eta) * (d as f64 * log_inv * log_inv + std::f64::consts::LN_2)).ceil();
    Ok((m as u64).max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube_class(n: usize) -> QueryClass {
        QueryClass::from_rows(
            (0..1usize << n).map(|b| (0..n).map(|i| (b >> i & 1) as f64).collect()),
        )
        .unwrap()
    }

    fn random_class(rng: &mut ChaCha8Rng, k: usize, n: usize) -> QueryClass {
        QueryClass::from_rows((0..k).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()))
            .unwrap()
    }

    /// Brute force over every assignment `pattern -> query`.
    fn assignment_oracle(class: &QueryClass, subset: &[usize], gamma: f64) -> bool {
        let d = subset.len();
        let patterns = 1usize << d;
        let k = class.len();
        let mut assignment = vec![0usize; patterns];
        loop {
            let ok = (0..d).all(|p| {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for (b, &qi) in assignment.iter().enumerate() {
                    let v = class.queries()[qi].on_basis(subset[p]);
                    if b >> p & 1 == 1 {
                        lo = lo.min(v);
                    } else {
                        hi = hi.max(v);
                    }
                }
                lo - hi >= 2.0 * gamma
            });
            if ok {
                return true;
            }
            let mut i = 0;
            loop {
                if i == patterns {
                    return false;
                }
                assignment[i] += 1;
                if assignment[i] < k {
                    break;
                }
                assignment[i] = 0;
                i += 1;
            }
        }
    }

    /// Brute force over thresholds: an optimal `r_i` can always be taken as
    /// `v − γ` for a coefficient value `v` at coordinate `i`.
    fn threshold_oracle(class: &QueryClass, subset: &[usize], gamma: f64) -> bool {
        let d = subset.len();
        let cands: Vec<Vec<f64>> = subset
            .iter()
            .map(|&i| {
                class
                    .queries()
                    .iter()
                    .map(|q| q.on_basis(i) - gamma)
                    .collect()
            })
            .collect();
        let k = class.len();
        let mut idx = vec![0usize; d];
        loop {
            let r: Vec<f64> = (0..d).map(|p| cands[p][idx[p]]).collect();
            let all = (0..1usize << d).all(|b| {
                class.queries().iter().any(|q| {
                    (0..d).all(|p| {
                        let v = q.on_basis(subset[p]);
                        if b >> p & 1 == 1 {
                            v >= r[p] + gamma - 1e-12
                        } else {
                            v <= r[p] - gamma + 1e-12
                        }
                    })
                })
            });
            if all {
                return true;
            }
            let mut p = 0;
            loop {
                if p == d {
                    return false;
                }
                idx[p] += 1;
                if idx[p] < k {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
        }
    }

    fn oracle_fsd(class: &QueryClass, gamma: f64, d_max: usize) -> usize {
        (1..=d_max.min(class.dim()))
            .filter(|&s| {
                Combinations::new(class.dim(), s).any(|sub| threshold_oracle(class, &sub, gamma))
            })
            .max()
            .unwrap_or(0)
    }

    /// VC dimension by counting distinct restrictions of a boolean class.
    fn vc_oracle(class: &QueryClass) -> usize {
        let n = class.dim();
        (1..=n)
            .filter(|&s| {
                Combinations::new(n, s).any(|sub| {
                    let traces: std::collections::BTreeSet<Vec<u8>> = class
                        .queries()
                        .iter()
                        .map(|q| sub.iter().map(|&i| q.on_basis(i) as u8).collect())
                        .collect();
                    traces.len() == 1 << s
                })
            })
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn verify_examples() {
        let class = QueryClass::from_rows([
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![0.0, 0.0],
        ])
        .unwrap();
        // pattern bits: bit0 ↔ index 0, bit1 ↔ index 1
        let mut w = ShatteringWitness {
            subset: vec![0, 1],
            thresholds: vec![0.5, 0.5],
            assignment: vec![3, 0, 1, 2],
            gamma: 0.5,
        };
        assert!(verify_shattering(&class, &w).unwrap());
        w.gamma = 0.6;
        assert!(!verify_shattering(&class, &w).unwrap());

        let single = QueryClass::from_rows([vec![0.3, 0.3]]).unwrap();
        for r in [0.0, 0.2, 0.3, 0.5, 1.0] {
            let w = ShatteringWitness {
                subset: vec![0],
                thresholds: vec![r],
                assignment: vec![0, 0],
                gamma: 0.1,
            };
            assert!(!verify_shattering(&single, &w).unwrap());
        }
    }

    #[test]
    fn verify_rejects_malformed_witness() {
        let class = cube_class(2);
        let w = ShatteringWitness {
            subset: vec![0, 2],
            thresholds: vec![0.5, 0.5],
            assignment: vec![0, 1, 2, 3],
            gamma: 0.5,
        };
        assert!(matches!(
            verify_shattering(&class, &w),
            Err(Error::IndexOutOfRange { index: 2, .. })
        ));
        let w = ShatteringWitness {
            subset: vec![0, 1],
            thresholds: vec![0.5, 0.5],
            assignment: vec![0, 1, 2, 9],
            gamma: 0.5,
        };
        assert!(verify_shattering(&class, &w).is_err());
    }

    #[test]
    fn shattered_examples() {
        let class = QueryClass::from_rows([
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![0.0, 0.0],
        ])
        .unwrap();
        let w = is_gamma_shattered(&class, &[0, 1], 0.5).unwrap().unwrap();
        assert_eq!(w.thresholds, vec![0.5, 0.5]);
        assert!(verify_shattering(&class, &w).unwrap());

        let flat = QueryClass::from_rows(vec![vec![0.4, 0.9, 0.1]; 5]).unwrap();
        for gamma in [0.01, 0.1, 0.5] {
            for s in [vec![0], vec![1], vec![0, 2]] {
                assert!(is_gamma_shattered(&flat, &s, gamma).unwrap().is_none());
            }
        }
    }

    #[test]
    fn shattered_input_errors() {
        let class = cube_class(2);
        assert!(is_gamma_shattered(&class, &[0], 0.0).is_err());
        assert!(is_gamma_shattered(&class, &[0], 0.51).is_err());
        assert!(matches!(
            is_gamma_shattered(&class, &[1, 1], 0.2),
            Err(Error::DuplicateIndex(1))
        ));
        assert!(is_gamma_shattered(&class, &[], 0.2).is_err());
        assert!(fsd(&class, 0.2, 0).is_err());
    }

    #[test]
    fn matches_assignment_oracle_on_random_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut shattered = 0;
        for _ in 0..150 {
            let class = random_class(&mut rng, 6, 4);
            let a = rng.random_range(0..4);
            let b = (a + rng.random_range(1..4)) % 4;
            let subset = [a, b];
            let got = is_gamma_shattered(&class, &subset, 0.2).unwrap();
            assert_eq!(got.is_some(), assignment_oracle(&class, &subset, 0.2));
            if let Some(w) = got {
                shattered += 1;
                assert!(verify_shattering(&class, &w).unwrap());
            }
        }
        assert!(shattered > 0, "sample never exercised the positive branch");
    }

    #[test]
    fn fsd_of_full_cube() {
        let r = fsd(&cube_class(3), 0.5, 3).unwrap();
        assert_eq!(r.d, 3);
        assert!(r.exact);
        assert!(verify_shattering(&cube_class(3), r.witness.as_ref().unwrap()).unwrap());
    }

    #[test]
    fn fsd_matches_threshold_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen = [0usize; 4];
        for _ in 0..60 {
            let class = random_class(&mut rng, 8, 5);
            let r = fsd(&class, 0.25, 5).unwrap();
            assert_eq!(r.d, oracle_fsd(&class, 0.25, 5));
            seen[r.d.min(3)] += 1;
        }
        assert!(seen[1] + seen[2] + seen[3] > 0);
    }

    #[test]
    fn fsd_equals_vc_dimension_for_boolean_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..80 {
            let n = rng.random_range(2..6);
            let k = rng.random_range(1..14);
            let class = QueryClass::from_rows(
                (0..k).map(|_| (0..n).map(|_| rng.random_range(0..2) as f64).collect()),
            )
            .unwrap();
            assert_eq!(fsd(&class, 0.5, n).unwrap().d, vc_oracle(&class));
        }
    }

    #[test]
    fn lexicographically_smallest_subset_wins() {
        // Only coordinates 1 and 2 vary.
        let class = QueryClass::from_rows(
            (0..4usize).map(|b| vec![0.5, (b & 1) as f64, (b >> 1 & 1) as f64, 0.5]),
        )
        .unwrap();
        let r = fsd(&class, 0.5, 4).unwrap();
        assert_eq!(r.d, 2);
        assert_eq!(r.witness.unwrap().subset, vec![1, 2]);

        let one = fsd(&cube_class(3), 0.5, 1).unwrap();
        assert_eq!(one.witness.unwrap().subset, vec![0]);
    }

    #[test]
    fn budget_exhaustion_reports_lower_bound() {
        let class = cube_class(4);
        let full = fsd(&class, 0.5, 4).unwrap();
        assert_eq!(full.d, 4);
        let partial = fsd_with_budget(&class, 0.5, 4, full.nodes_explored - 1).unwrap();
        assert!(!partial.exact);
        assert!(partial.d < 4);
        if let Some(w) = &partial.witness {
            assert!(verify_shattering(&class, w).unwrap());
        }
    }

    #[test]
    fn no_singleton_means_zero() {
        let class = QueryClass::from_rows([vec![0.5, 0.5], vec![0.6, 0.4]]).unwrap();
        let r = fsd(&class, 0.3, 2).unwrap();
        assert_eq!(r.d, 0);
        assert!(r.witness.is_none());
    }

    #[test]
    fn choose_m_examples() {
        assert_eq!(choose_m(1.0, 0, 1.0).unwrap(), 1);
        // 4 * (2 ln²2 + ln 2) = 6.6162...
        let closed = 4.0 * (2.0 * 2f64.ln().powi(2) + 2f64.ln());
        assert!((closed - 6.616_212_8).abs() < 1e-6);
        assert_eq!(choose_m(0.5, 2, 1.0).unwrap(), 7);
        for eta in [0.1, 0.25, 0.5, 0.8] {
            let base = (2f64.ln() / (eta * eta)).ceil() as u64;
            for d in 1..6 {
                let m1 = choose_m(eta, d, 1.0).unwrap();
                let m2 = choose_m(eta, 2 * d, 1.0).unwrap();
                assert!(m2 - base + 2 >= 2 * (m1 - base), "eta={eta} d={d}");
            }
        }
        assert!(choose_m(0.0, 1, 1.0).is_err());
        assert!(choose_m(1.5, 1, 1.0).is_err());
        assert!(choose_m(0.5, 1, 0.0).is_err());
    }
}
