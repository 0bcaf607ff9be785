//! A release whose sparse domain is too large to enumerate, handled by the
//! Metropolis sampler.

use fsdp::mechanisms::{
    domain_size, exponential_release_exact, exponential_release_mcmc, ExactConfig, McmcConfig,
};
use fsdp::rng::rng_from_seed;
use fsdp::{max_error, Database, Error, PrivacyParams, QueryClass};

fn main() -> fsdp::Result<()> {
    let n = 12;
    let db = Database::new((0..n).map(|i| ((i * 7) % 5) as f64 * 10.0).collect())?;
    let class = QueryClass::from_rows(
        (0..n).map(|j| (0..n).map(|i| if i <= j { 1.0 } else { 0.0 }).collect()),
    )?;
    let params = PrivacyParams::with_alpha(1.0)?;
    let m = 40;
    println!("domain size for n={n}, m={m}: {:?}", domain_size(n, m));

    let mut rng = rng_from_seed(9);
    match exponential_release_exact(&db, &class, &params, &ExactConfig::new(m), &mut rng) {
        Err(e @ Error::DomainTooLarge { .. }) => println!("exact sampler refused: {e}"),
        other => println!("unexpected: {other:?}"),
    }

    for steps in [100, 1_000, 20_000] {
        let out =
            exponential_release_mcmc(&db, &class, &params, &McmcConfig::new(m, steps), &mut rng)?;
        let err = max_error(&class, &db, &out.d_out)?;
        println!(
            "{steps:>6} steps: relative error {:.3} (approximate: {})",
            err / db.l1_norm(),
            out.approximate
        );
    }
    Ok(())
}
