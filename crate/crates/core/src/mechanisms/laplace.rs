//! Laplace-noise mechanisms: the per-query baseline, the noisy histogram,
//! and the L1-norm estimator.

use rand::Rng;

use super::PrivacyParams;
use crate::data::{Database, QueryClass};
use crate::error::{Error, Result};

/// One draw from `Lap(scale)` by inverting the CDF of a uniform draw.
pub fn sample_laplace<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    loop {
        let u = rng.random::<f64>() - 0.5;
        let tail = 1.0 - 2.0 * u.abs();
        if tail > 0.0 {
            return -scale * u.signum() * tail.ln();
        }
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

/// `q_i(D) + Lap(k/α)` for every query; basic composition over the `k`
/// queries, each of sensitivity at most 1.
pub fn laplace_release<R: Rng + ?Sized>(
    db: &Database,
    class: &QueryClass,
    params: &PrivacyParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let scale = class.len() as f64 / params.alpha;
    Ok(class
        .answers(db)?
        .into_iter()
        .map(|a| a + sample_laplace(scale, rng))
        .collect())
}

/// `max(0, D_i + Lap(1/α))` per coordinate: a synthetic database from the
/// noisy histogram.
pub fn laplace_histogram<R: Rng + ?Sized>(
    db: &Database,
    alpha: f64,
    rng: &mut R,
) -> Result<Database> {
    check_positive("alpha", alpha)?;
    Database::new(
        db.entries()
            .iter()
            .map(|&v| (v + sample_laplace(1.0 / alpha, rng)).max(0.0))
            .collect(),
    )
}

/// `max(0, ||D||₁ + Lap(1/alpha_share))`.
pub fn estimate_l1<R: Rng + ?Sized>(db: &Database, alpha_share: f64, rng: &mut R) -> Result<f64> {
    check_positive("alpha_share", alpha_share)?;
    Ok((db.l1_norm() + sample_laplace(1.0 / alpha_share, rng)).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vanishing_noise() {
        let class = QueryClass::from_rows([vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        let db = Database::new(vec![3.0, 4.0]).unwrap();
        let params = PrivacyParams::with_alpha(1e9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let a = laplace_release(&db, &class, &params, &mut rng).unwrap();
            assert!((a[0] - 5.0).abs() < 1e-6 && (a[1] - 4.0).abs() < 1e-6);
            assert!((estimate_l1(&db, 1e9, &mut rng).unwrap() - 7.0).abs() < 1e-6);
        }
    }

    #[test]
    fn noise_is_symmetric() {
        let class = QueryClass::from_rows([vec![1.0]]).unwrap();
        let db = Database::new(vec![0.0]).unwrap();
        let params = PrivacyParams::with_alpha(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut noise: Vec<f64> = (0..100_001)
            .map(|_| laplace_release(&db, &class, &params, &mut rng).unwrap()[0])
            .collect();
        noise.sort_by(f64::total_cmp);
        assert!(noise[50_000].abs() <= 0.05, "median {}", noise[50_000]);
    }

    #[test]
    fn estimate_is_clamped_and_nearly_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let zero = Database::zeros(3).unwrap();
        assert!((0..10_000).all(|_| estimate_l1(&zero, 0.5, &mut rng).unwrap() >= 0.0));

        let db = Database::new(vec![4.0, 6.0]).unwrap();
        let draws = 100_000;
        let mean = (0..draws)
            .map(|_| estimate_l1(&db, 1.0, &mut rng).unwrap())
            .sum::<f64>()
            / draws as f64;
        // Clamp bias at ||D||₁ = 10 is e^-10 / 2; the sampling error is
        // √2/√10⁵ ≈ 0.0045.
        assert!((mean - 10.0).abs() < 0.01, "mean {mean}");
        assert!(estimate_l1(&db, 0.0, &mut rng).is_err());
    }

    #[test]
    fn histogram_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let db = Database::new(vec![0.0, 1.0, 0.0]).unwrap();
        for _ in 0..1000 {
            assert!(laplace_histogram(&db, 0.3, &mut rng)
                .unwrap()
                .entries()
                .iter()
                .all(|&v| v >= 0.0));
        }
    }
}
