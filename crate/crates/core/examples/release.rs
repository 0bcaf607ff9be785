//! Release a synthetic database for a small class of range-like queries,
//! choosing the sparse-domain size from the class's fat-shattering
//! dimension.

use fsdp::calibration::C_M;
use fsdp::fsd::{choose_m, fsd};
use fsdp::mechanisms::{exponential_release_exact, ExactConfig};
use fsdp::rng::rng_from_seed;
use fsdp::{max_error, Database, PrivacyParams, QueryClass};

fn main() -> fsdp::Result<()> {
    let db = Database::new(vec![40.0, 25.0, 10.0, 5.0, 20.0])?;
    // Prefix queries over five ordered buckets.
    let class = QueryClass::from_rows(
        (1..=5).map(|j| (0..5).map(|i| if i < j { 1.0 } else { 0.0 }).collect()),
    )?;

    let eta = 0.5;
    let dim = fsd(&class, eta / 5.0, 5)?;
    let m = choose_m(eta, dim.d, C_M)?;
    println!(
        "fat-shattering dimension at gamma={}: {} -> m = {m}",
        eta / 5.0,
        dim.d
    );

    let params = PrivacyParams::with_alpha(1.0)?;
    let mut rng = rng_from_seed(2024);
    let out = exponential_release_exact(&db, &class, &params, &ExactConfig::new(m), &mut rng)?;
    println!("D'    = {:?}", out.d_prime.counts());
    println!("D_out = {:?}", out.d_out.entries());
    let err = max_error(&class, &db, &out.d_out)?;
    println!(
        "max error {err:.2} ({:.1}% of ||D||)",
        100.0 * err / db.l1_norm()
    );
    for (q, (t, r)) in class
        .answers(&db)?
        .iter()
        .zip(class.answers(&out.d_out)?)
        .enumerate()
    {
        println!("  prefix {}: true {t:6.1}  released {r:6.1}", q + 1);
    }
    Ok(())
}
