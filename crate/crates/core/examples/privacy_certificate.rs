//! Exact privacy certification over a grid of integer neighbors, a
//! post-processed variant, random real-valued neighbors, and a miscalibrated
//! mechanism that the certifier must reject.

use fsdp::oracle::{
    misscaled_certificate, postprocessing_certificate, privacy_ratio_certificate,
    real_neighbor_probe,
};
use fsdp::rng::rng_from_seed;
use fsdp::{ExponentRule, PrivacyParams, QueryClass, SparseSyntheticDatabase};

const BUDGET: u128 = 10_000_000;

fn main() -> fsdp::Result<()> {
    let class = QueryClass::from_rows([
        vec![1.0, 0.0, 0.4],
        vec![0.0, 1.0, 0.9],
        vec![0.3, 0.3, 0.3],
    ])?;
    let params = PrivacyParams::with_alpha(1.0)?;
    for rule in [ExponentRule::Quarter, ExponentRule::TightSensitivity] {
        let c = privacy_ratio_certificate(3, 3, &class, &params, 3, rule, BUDGET)?;
        println!(
            "{rule:?}: max ratio {:.4} vs e^alpha {:.4} over {} pairs -> {}",
            c.max_ratio,
            c.bound,
            c.pairs_checked,
            if c.pass { "pass" } else { "FAIL" }
        );
    }

    let first = postprocessing_certificate(
        |o: &SparseSyntheticDatabase| o.counts()[0],
        3,
        3,
        &class,
        &params,
        3,
        ExponentRule::Quarter,
        BUDGET,
    )?;
    println!("first coordinate only: max ratio {:.4}", first.max_ratio);

    let mut rng = rng_from_seed(5);
    let real = real_neighbor_probe(
        3,
        3,
        &class,
        &params,
        3,
        ExponentRule::Quarter,
        500,
        BUDGET,
        &mut rng,
    )?;
    println!("500 real neighbor pairs: max ratio {:.4}", real.max_ratio);

    // Doubling the score without touching the divisor. A single query on two
    // of three coordinates is enough to exceed e^alpha once m >= 2.
    let pair = QueryClass::from_rows([vec![1.0, 1.0, 0.0]])?;
    let params = PrivacyParams::with_alpha(2.0)?;
    for m in 1..=4 {
        let c = misscaled_certificate(
            3,
            3,
            &pair,
            &params,
            m,
            ExponentRule::TightSensitivity,
            2.0,
            BUDGET,
        )?;
        println!(
            "doubled score, m={m}: max ratio / e^alpha = {:.3} -> {}",
            c.max_ratio / c.bound,
            if c.pass { "pass" } else { "FAIL" }
        );
        if let Some(w) = c.witness_pair.filter(|_| !c.pass) {
            println!(
                "  witness: {:?} vs {:?} on outcome {:?}",
                w.d1, w.d2, w.outcome
            );
        }
    }
    Ok(())
}
