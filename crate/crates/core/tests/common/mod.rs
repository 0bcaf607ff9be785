#![allow(dead_code)]

use fsdp::{Database, QueryClass};
use rand::Rng;

/// Rows mix exact 0/1 coefficients with uniform ones, so both boolean-like
/// and generic classes show up.
pub fn random_class<R: Rng>(rng: &mut R, n: usize, k: usize) -> QueryClass {
    let boolean_share: f64 = rng.random();
    QueryClass::from_rows((0..k).map(|_| {
        (0..n)
            .map(|_| {
                if rng.random::<f64>() < boolean_share {
                    f64::from(rng.random::<bool>())
                } else {
                    rng.random()
                }
            })
            .collect()
    }))
    .unwrap()
}

pub fn random_db<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Database {
    Database::new((0..n).map(|_| rng.random::<f64>() * scale).collect()).unwrap()
}

pub fn indicator_class(n: usize) -> QueryClass {
    QueryClass::from_rows((0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()))
        .unwrap()
}

pub fn cube_class(n: usize) -> QueryClass {
    QueryClass::from_rows((0..1usize << n).map(|b| (0..n).map(|i| (b >> i & 1) as f64).collect()))
        .unwrap()
}

/// Total-variation distance between two distributions on the same support.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
