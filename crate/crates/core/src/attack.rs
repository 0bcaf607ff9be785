//! Reconstruction attack behind the fat-shattering lower bound.
//!
//! Given a γ-shattered set `S` with thresholds `r`, the coordinates are
//! bucketed by `r` into width-γ intervals and the largest bucket is kept.
//! Within it, every half-size subset `T` gets the database `D_T = Σ_{i∈T} e_i`
//! and the query `q_T` realizing the pattern "1 on T, 0 elsewhere". Because
//! the thresholds inside one bucket differ by at most γ, `q_T` separates
//! `D_T` from every other `D_{T'}` by at least `(γ/2)|T △ T'|`, and any
//! mechanism output that answers these queries to within `ε` pins `T` down to
//! `|T △ T*| ≤ 4ε/γ`.

use rand::Rng;
use serde::Serialize;

use crate::combinatorics::Combinations;
use crate::data::{dot, Database, LinearQuery, QueryClass};
use crate::error::{Error, Result};
use crate::fsd::{fsd_with_budget, verify_shattering, ShatteringWitness, DEFAULT_NODE_BUDGET};
use crate::rng::{child_rng, DpRng};

/// Largest bucket size used for families; larger buckets are truncated.
pub const MAX_FAMILY_DIM: usize = 16;

/// Tolerance for the per-trial reconstruction bound.
const BOUND_TOLERANCE: f64 = 1e-9;

/// The bucket `S^{j*}` chosen from a witness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bucket {
    /// 1-based bucket index: bucket `j` holds `(j−1)γ < r_i ≤ jγ`.
    pub j_star: usize,
    /// Basis indices in the bucket, ascending.
    pub indices: Vec<usize>,
    /// Positions of those indices within the witness subset.
    pub positions: Vec<usize>,
}

/// Splits the witness subset into `ceil(1/γ)` buckets by threshold and
/// returns the largest, preferring the smallest `j` on ties. A threshold of
/// exactly zero is placed in bucket 1.
pub fn partition_buckets(witness: &ShatteringWitness) -> Bucket {
    let gamma = witness.gamma;
    let count = (1.0 / gamma).ceil() as usize;
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (pos, &r) in witness.thresholds.iter().enumerate() {
        let j = ((r / gamma).ceil() as usize).clamp(1, count);
        buckets[j - 1].push(pos);
    }
    let (j, positions) = buckets
        .into_iter()
        .enumerate()
        .fold((0, Vec::new()), |best, (j, b)| {
            if b.len() > best.1.len() {
                (j, b)
            } else {
                best
            }
        });
    let mut pairs: Vec<(usize, usize)> =
        positions.iter().map(|&p| (witness.subset[p], p)).collect();
    pairs.sort_unstable();
    Bucket {
        j_star: j + 1,
        indices: pairs.iter().map(|&(i, _)| i).collect(),
        positions: pairs.iter().map(|&(_, p)| p).collect(),
    }
}

/// Half-size subsets of a bucket, each mapped to the query realizing its
/// pattern. Subsets are bitmasks over bucket positions.
#[derive(Debug, Clone)]
pub struct ShatteredFamily {
    class: QueryClass,
    witness: ShatteringWitness,
    j_star: usize,
    bucket: Vec<usize>,
    positions: Vec<usize>,
    subsets: Vec<u32>,
}

impl ShatteredFamily {
    /// Builds the family from a verified witness. The bucket is truncated to
    /// an even size of at most [`MAX_FAMILY_DIM`] by dropping its last
    /// indices.
    pub fn from_witness(class: &QueryClass, witness: ShatteringWitness) -> Result<Self> {
        if !verify_shattering(class, &witness)? {
            return Err(Error::NoShatteredFamily(
                "witness does not certify shattering".into(),
            ));
        }
        let Bucket {
            j_star,
            mut indices,
            mut positions,
        } = partition_buckets(&witness);
        let d = (indices.len() & !1).min(MAX_FAMILY_DIM);
        if d < 2 {
            return Err(Error::NoShatteredFamily(format!(
                "largest threshold bucket has {} element(s); need at least 2",
                indices.len()
            )));
        }
        indices.truncate(d);
        positions.truncate(d);
        let subsets = Combinations::new(d, d / 2)
            .map(|c| c.iter().fold(0u32, |mask, &p| mask | 1 << p))
            .collect();
        Ok(Self {
            class: class.clone(),
            witness,
            j_star,
            bucket: indices,
            positions,
            subsets,
        })
    }

    pub fn d(&self) -> usize {
        self.bucket.len()
    }

    pub fn gamma(&self) -> f64 {
        self.witness.gamma
    }

    pub fn j_star(&self) -> usize {
        self.j_star
    }

    pub fn bucket(&self) -> &[usize] {
        &self.bucket
    }

    pub fn witness(&self) -> &ShatteringWitness {
        &self.witness
    }

    /// Thresholds of the bucket coordinates.
    pub fn thresholds(&self) -> Vec<f64> {
        self.positions
            .iter()
            .map(|&p| self.witness.thresholds[p])
            .collect()
    }

    /// All half-size subsets as bucket-position masks, in lexicographic
    /// order of their index lists.
    pub fn subset_masks(&self) -> &[u32] {
        &self.subsets
    }

    /// Basis indices of a subset mask.
    pub fn indices_of(&self, mask: u32) -> Vec<usize> {
        (0..self.d())
            .filter(|&p| mask >> p & 1 == 1)
            .map(|p| self.bucket[p])
            .collect()
    }

    /// Mask of a set of basis indices, if they all lie in the bucket.
    pub fn mask_of(&self, indices: &[usize]) -> Option<u32> {
        indices.iter().try_fold(0u32, |mask, i| {
            self.bucket
                .iter()
                .position(|b| b == i)
                .map(|p| mask | 1 << p)
        })
    }

    /// Class index of `q_T`.
    pub fn query_index(&self, mask: u32) -> usize {
        let pattern = (0..self.d())
            .filter(|&p| mask >> p & 1 == 1)
            .fold(0usize, |acc, p| acc | 1 << self.positions[p]);
        self.witness.query_for_pattern(pattern)
    }

    pub fn query(&self, mask: u32) -> &LinearQuery {
        &self.class.queries()[self.query_index(mask)]
    }

    /// `D_T`.
    pub fn database(&self, mask: u32) -> Database {
        Database::indicator(self.class.dim(), &self.indices_of(mask))
            .expect("bucket indices are in range")
    }

    /// Distinct class indices of the family's queries, ascending.
    pub fn family_queries(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = self.subsets.iter().map(|&m| self.query_index(m)).collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    fn on_subset(&self, q: &LinearQuery, mask: u32) -> f64 {
        (0..self.d())
            .filter(|&p| mask >> p & 1 == 1)
            .map(|p| q.on_basis(self.bucket[p]))
            .sum()
    }

    /// Smallest slack of the gap inequality
    /// `q_T(D_T) − q_T(D_{T'}) − (γ/2)|T △ T'|` over all subset pairs.
    pub fn min_gap_slack(&self) -> f64 {
        let half_gamma = self.gamma() / 2.0;
        let mut worst = f64::INFINITY;
        for &t in &self.subsets {
            let q = self.query(t);
            let own = self.on_subset(q, t);
            for &u in &self.subsets {
                let gap = own - self.on_subset(q, u) - half_gamma * (t ^ u).count_ones() as f64;
                worst = worst.min(gap);
            }
        }
        worst
    }

    /// `max_{q ∈ family} |q(D_T) − q(out)|`.
    pub fn realized_error(&self, truth: &Database, out: &Database) -> f64 {
        self.family_queries()
            .iter()
            .map(|&i| {
                let c = self.class.queries()[i].coefficients();
                (dot(c, truth.entries()) - dot(c, out.entries())).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Subset mask minimizing `v(T') = q_{T'}(D_{T'}) − q_{T'}(out)`; ties go
    /// to the lexicographically first subset.
    pub fn reconstruct_mask(&self, out: &Database) -> u32 {
        let mut best = (f64::INFINITY, self.subsets[0]);
        for &t in &self.subsets {
            let q = self.query(t);
            let v = self.on_subset(q, t) - dot(q.coefficients(), out.entries());
            if v < best.0 {
                best = (v, t);
            }
        }
        best.1
    }
}

/// Runs the fat-shattering search and builds the family from its witness.
pub fn build_family(class: &QueryClass, gamma: f64, d_max: usize) -> Result<ShatteredFamily> {
    build_family_with_budget(class, gamma, d_max, DEFAULT_NODE_BUDGET)
}

pub fn build_family_with_budget(
    class: &QueryClass,
    gamma: f64,
    d_max: usize,
    node_budget: u64,
) -> Result<ShatteredFamily> {
    let found = fsd_with_budget(class, gamma, d_max, node_budget)?;
    match found.witness {
        Some(w) if found.d >= 2 => ShatteredFamily::from_witness(class, w),
        _ => Err(Error::NoShatteredFamily(format!(
            "largest γ-shattered set has size {} (< 2)",
            found.d
        ))),
    }
}

/// Reconstructed subset `T*` (basis indices) from a mechanism output.
pub fn reconstruct(answers_db: &Database, family: &ShatteredFamily) -> Result<Vec<usize>> {
    crate::data::check_dim(family.class.dim(), answers_db.dim())?;
    Ok(family.indices_of(family.reconstruct_mask(answers_db)))
}

/// One attack trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub epsilon_hat: f64,
    pub symdiff: u32,
    pub within_bound: bool,
    /// `4ε̂/γ ≥ d`: the reconstruction bound says nothing.
    pub vacuous: bool,
    /// The swapped-out element `x` is in the reconstruction from `D_T`.
    pub x_in_reconstruction: bool,
    /// `x` is in the reconstruction from `D_{T'}`, `T' = T \ {x} ∪ {y}`.
    pub x_in_swapped_reconstruction: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackReport {
    pub d: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub trials: usize,
    pub failures: usize,
    /// `symdiff_histogram[s]` counts trials with `|T △ T*| = s`.
    pub symdiff_histogram: Vec<u64>,
    pub exact_recovery_rate: f64,
    pub mean_epsilon_hat: f64,
    pub max_epsilon_hat: f64,
    pub bound_violations: usize,
    pub vacuous_trials: usize,
    /// Most successful trials had a vacuous bound.
    pub reconstruction_bound_vacuous: bool,
    pub rate_x_in: f64,
    pub rate_x_in_swapped: f64,
    pub empirical_ratio: f64,
    /// Wilson 95% lower bound on `rate_x_in` over upper bound on
    /// `rate_x_in_swapped`.
    pub ratio_lower_95: f64,
    /// `e^α`: the bound for databases at L1 distance 1.
    pub bound_single: f64,
    /// `e^{2α}`: the bound implied for `||D_T − D_{T'}||₁ = 2`.
    pub bound_pair: f64,
    pub within_single: bool,
    pub within_pair: bool,
    /// Error floor `γd / (4(e^α + 1))` implied by the ratio argument.
    pub epsilon_floor_single: f64,
    /// Same floor with `e^{2α}`.
    pub epsilon_floor_pair: f64,
    /// Per-trial records, sorted by trial; kept out of serialized reports.
    #[serde(skip_serializing)]
    pub records: Vec<TrialRecord>,
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: u64, total: u64) -> (f64, f64) {
    if total == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = total as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

impl AttackReport {
    /// Aggregates trial records; concatenating records from disjoint trial
    /// ranges and re-aggregating merges reports.
    pub fn from_records(
        family: &ShatteredFamily,
        alpha: f64,
        failures: usize,
        mut records: Vec<TrialRecord>,
    ) -> Self {
        records.sort_by_key(|r| r.trial);
        let d = family.d();
        let gamma = family.gamma();
        let ok = records.len();
        let mut hist = vec![0u64; d + 1];
        for r in &records {
            hist[r.symdiff as usize] += 1;
        }
        let count = |f: fn(&TrialRecord) -> bool| records.iter().filter(|r| f(r)).count();
        let in_hits = count(|r| r.x_in_reconstruction) as u64;
        let out_hits = count(|r| r.x_in_swapped_reconstruction) as u64;
        let vacuous = count(|r| r.vacuous);
        let rate = |h: u64| if ok == 0 { 0.0 } else { h as f64 / ok as f64 };
        let (in_lo, _) = wilson_interval(in_hits, ok as u64);
        let (_, out_hi) = wilson_interval(out_hits, ok as u64);
        let ratio_lower_95 = if out_hi > 0.0 {
            in_lo / out_hi
        } else {
            f64::INFINITY
        };
        let bound_single = alpha.exp();
        let bound_pair = (2.0 * alpha).exp();
        let eps: Vec<f64> = records.iter().map(|r| r.epsilon_hat).collect();
        AttackReport {
            d,
            gamma,
            alpha,
            trials: ok + failures,
            failures,
            symdiff_histogram: hist,
            exact_recovery_rate: rate(count(|r| r.symdiff == 0) as u64),
            mean_epsilon_hat: if ok == 0 {
                0.0
            } else {
                eps.iter().sum::<f64>() / ok as f64
            },
            max_epsilon_hat: eps.iter().copied().fold(0.0, f64::max),
            bound_violations: count(|r| !r.within_bound),
            vacuous_trials: vacuous,
            reconstruction_bound_vacuous: 2 * vacuous > ok,
            rate_x_in: rate(in_hits),
            rate_x_in_swapped: rate(out_hits),
            empirical_ratio: if out_hits == 0 {
                f64::INFINITY
            } else {
                in_hits as f64 / out_hits as f64
            },
            ratio_lower_95,
            bound_single,
            bound_pair,
            within_single: ratio_lower_95 <= bound_single,
            within_pair: ratio_lower_95 <= bound_pair,
            epsilon_floor_single: gamma * d as f64 / (4.0 * (bound_single + 1.0)),
            epsilon_floor_pair: gamma * d as f64 / (4.0 * (bound_pair + 1.0)),
            records,
        }
    }
}

/// Runs `trials` independent attacks. Trial `t` draws all of its randomness
/// from stream `t` of `seed`: a uniform half-size `T`, a release on `D_T`,
/// the reconstruction, and a second release on the swapped `D_{T'}`.
/// Mechanism errors are counted as failures.
pub fn attack_experiment<M>(
    mut mechanism: M,
    family: &ShatteredFamily,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<AttackReport>
where
    M: FnMut(&Database, &mut DpRng) -> Result<Database>,
{
    if trials == 0 {
        return Err(Error::InvalidParameter {
            name: "trials",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    let d = family.d();
    let gamma = family.gamma();
    let masks = family.subset_masks();
    let mut failures = 0;
    let mut records = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = child_rng(seed, trial as u64);
        let t = masks[rng.random_range(0..masks.len())];
        let members: Vec<usize> = (0..d).filter(|&p| t >> p & 1 == 1).collect();
        let outside: Vec<usize> = (0..d).filter(|&p| t >> p & 1 == 0).collect();
        let x = members[rng.random_range(0..members.len())];
        let y = outside[rng.random_range(0..outside.len())];
        let swapped = (t & !(1 << x)) | 1 << y;

        let truth = family.database(t);
        let (out, out_swapped) = match mechanism(&truth, &mut rng)
            .and_then(|o| Ok((o, mechanism(&family.database(swapped), &mut rng)?)))
        {
            Ok(pair) => pair,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let epsilon_hat = family.realized_error(&truth, &out);
        let t_star = family.reconstruct_mask(&out);
        let t_star_swapped = family.reconstruct_mask(&out_swapped);
        let symdiff = (t ^ t_star).count_ones();
        let bound = 4.0 * epsilon_hat / gamma;
        records.push(TrialRecord {
            trial,
            epsilon_hat,
            symdiff,
            within_bound: symdiff as f64 <= bound + BOUND_TOLERANCE,
            vacuous: bound >= d as f64,
            x_in_reconstruction: t_star >> x & 1 == 1,
            x_in_swapped_reconstruction: t_star_swapped >> x & 1 == 1,
        });
    }
    Ok(AttackReport::from_records(family, alpha, failures, records))
}
