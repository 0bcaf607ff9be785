//! Databases, linear queries and the error measures shared by every other
//! module.
//!
//! A database is a nonnegative real vector of length `n`; a linear query is a
//! coefficient vector in `[0,1]^n` answered by the dot product. All types are
//! immutable once constructed, so they can be shared freely across threads.

use serde::Serialize;

use crate::error::{Error, Result};

/// A private (or synthetic) database: a nonnegative real vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Database {
    entries: Vec<f64>,
}

impl Database {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDatabase(
                "database must have n >= 1 entries".into(),
            ));
        }
        if let Some((i, v)) = entries
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidDatabase(format!(
                "entry {i} is {v}; entries must be finite and nonnegative"
            )));
        }
        Ok(Self { entries })
    }

    /// The all-zero database of dimension `n`.
    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    /// `Σ_{i∈indices} e_i`.
    pub fn indicator(n: usize, indices: &[usize]) -> Result<Self> {
        let mut entries = vec![0.0; n];
        for &i in indices {
            *entries
                .get_mut(i)
                .ok_or(Error::IndexOutOfRange { index: i, len: n })? += 1.0;
        }
        Self::new(entries)
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn l1_norm(&self) -> f64 {
        l1_norm(self)
    }

    /// `a·self + b·other` for nonnegative weights.
    pub fn combine(&self, a: f64, other: &Database, b: f64) -> Result<Database> {
        check_dim(self.dim(), other.dim())?;
        Database::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }
}

/// A linear query `q ∈ [0,1]^n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearQuery {
    coefficients: Vec<f64>,
}

impl LinearQuery {
    /// Coefficients outside `[0,1]` are rejected, never clamped.
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidQuery(
                "query must have n >= 1 coefficients".into(),
            ));
        }
        if let Some((i, v)) = coefficients
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::InvalidQuery(format!(
                "coefficient {i} is {v}; coefficients must lie in [0,1]"
            )));
        }
        Ok(Self { coefficients })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    /// `q(e_i)`, the value of the query on basis vector `i`.
    pub fn on_basis(&self, i: usize) -> f64 {
        self.coefficients[i]
    }
}

/// A finite, ordered class of linear queries sharing one dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryClass {
    n: usize,
    queries: Vec<LinearQuery>,
}

impl QueryClass {
    pub fn new(queries: Vec<LinearQuery>) -> Result<Self> {
        let first = queries.first().ok_or(Error::EmptyClass)?;
        let n = first.dim();
        for q in &queries {
            check_dim(n, q.dim())?;
        }
        Ok(Self { n, queries })
    }

    /// Builds a class from raw coefficient rows.
    pub fn from_rows<I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        Self::new(
            rows.into_iter()
                .map(LinearQuery::new)
                .collect::<Result<_>>()?,
        )
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `k = |C|`.
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn queries(&self) -> &[LinearQuery] {
        &self.queries
    }

    pub fn get(&self, index: usize) -> Result<&LinearQuery> {
        self.queries.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.queries.len(),
        })
    }

    /// Sub-class formed by the given query indices, in order.
    pub fn select(&self, indices: &[usize]) -> Result<QueryClass> {
        QueryClass::new(
            indices
                .iter()
                .map(|&i| self.get(i).cloned())
                .collect::<Result<_>>()?,
        )
    }

    /// Answers every query on `db`, in class order.
    pub fn answers(&self, db: &Database) -> Result<Vec<f64>> {
        self.queries.iter().map(|q| evaluate(q, db)).collect()
    }
}

/// An element of the exponential mechanism's domain: a nonnegative integer
/// vector whose entries sum to exactly `m >= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SparseSyntheticDatabase {
    counts: Vec<u64>,
    m: u64,
}

impl SparseSyntheticDatabase {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidDatabase(
                "sparse database must have n >= 1 entries".into(),
            ));
        }
        let m = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| Error::InvalidDatabase("count total overflows u64".into()))?;
        if m == 0 {
            return Err(Error::InvalidDatabase(
                "sparse database must have m >= 1".into(),
            ));
        }
        Ok(Self { counts, m })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    /// The counts viewed as a real database.
    pub fn lift(&self) -> Database {
        Database {
            entries: self.counts.iter().map(|&c| c as f64).collect(),
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// `q(D) = q · D`.
pub fn evaluate(q: &LinearQuery, db: &Database) -> Result<f64> {
    check_dim(q.dim(), db.dim())?;
    Ok(dot(&q.coefficients, &db.entries))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `||D||_1`.
pub fn l1_norm(db: &Database) -> f64 {
    db.entries.iter().sum()
}

/// `max_{q∈C} |q(D) − q(A)|`.
pub fn max_error(class: &QueryClass, db: &Database, approx: &Database) -> Result<f64> {
    check_dim(class.dim(), db.dim())?;
    check_dim(class.dim(), approx.dim())?;
    Ok(class
        .queries
        .iter()
        .map(|q| (dot(&q.coefficients, &db.entries) - dot(&q.coefficients, &approx.entries)).abs())
        .fold(0.0, f64::max))
}

/// Scales the sparse database to L1 norm `target_l1`: `(target_l1 / m)·counts`.
pub fn rescale(sparse: &SparseSyntheticDatabase, target_l1: f64) -> Result<Database> {
    if !(target_l1.is_finite() && target_l1 >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "target_l1",
            value: target_l1,
            reason: "must be finite and nonnegative",
        });
    }
    let scale = target_l1 / sparse.m as f64;
    Database::new(sparse.counts.iter().map(|&c| c as f64 * scale).collect())
}
