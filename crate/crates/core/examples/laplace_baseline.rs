//! Per-query Laplace noise against the exponential mechanism as the number
//! of queries grows.

use fsdp::mechanisms::{exponential_release_exact, laplace_release, ExactConfig};
use fsdp::rng::rng_from_seed;
use fsdp::{max_error, Database, PrivacyParams, QueryClass};

fn main() -> fsdp::Result<()> {
    let db = Database::new(vec![120.0, 80.0, 60.0, 40.0])?;
    let params = PrivacyParams::with_alpha(1.0)?;
    let mut rng = rng_from_seed(11);
    for k in [4, 16, 64] {
        let class = QueryClass::from_rows((0..k).map(|j| {
            (0..4)
                .map(|i| ((j * 31 + i * 17) % 11) as f64 / 10.0)
                .collect()
        }))?;
        let truth = class.answers(&db)?;
        let reps = 200;
        let mut lap = 0.0;
        let mut exp = 0.0;
        for _ in 0..reps {
            let noisy = laplace_release(&db, &class, &params, &mut rng)?;
            lap += noisy
                .iter()
                .zip(&truth)
                .map(|(a, t)| (a - t).abs())
                .fold(0.0, f64::max);
            let out =
                exponential_release_exact(&db, &class, &params, &ExactConfig::new(20), &mut rng)?;
            exp += max_error(&class, &db, &out.d_out)?;
        }
        println!(
            "k={k:<3} mean max error: laplace {:8.1}   exponential (m=20) {:6.1}",
            lap / reps as f64,
            exp / reps as f64
        );
    }
    Ok(())
}
