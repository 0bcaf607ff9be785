//! Fat-shattering dimension of a few query classes across scales.

use fsdp::fsd::{fsd, fsd_with_budget, verify_shattering};
use fsdp::QueryClass;

fn cube(n: usize) -> fsdp::Result<QueryClass> {
    QueryClass::from_rows((0..1usize << n).map(|b| (0..n).map(|i| (b >> i & 1) as f64).collect()))
}

fn main() -> fsdp::Result<()> {
    let soft = QueryClass::from_rows([
        vec![0.9, 0.8, 0.1],
        vec![0.9, 0.2, 0.7],
        vec![0.2, 0.9, 0.8],
        vec![0.1, 0.1, 0.2],
        vec![0.6, 0.6, 0.6],
    ])?;
    for (name, class) in [("boolean cube n=3", cube(3)?), ("soft class", soft)] {
        println!("{name} ({} queries)", class.len());
        for gamma in [0.05, 0.2, 0.35, 0.5] {
            let r = fsd(&class, gamma, class.dim())?;
            print!("  gamma={gamma:<4} d={}", r.d);
            if let Some(w) = &r.witness {
                print!(
                    "  S={:?} r={:?} verified={}",
                    w.subset,
                    w.thresholds,
                    verify_shattering(&class, w)?
                );
            }
            println!();
        }
    }

    // A tight node budget turns the answer into a lower bound.
    let r = fsd_with_budget(&cube(6)?, 0.5, 6, 40)?;
    println!("cube n=6 with 40 nodes: d >= {} (exact: {})", r.d, r.exact);
    Ok(())
}
