//! How well small sparse databases approximate a dense one, and the size
//! the fat-shattering dimension prescribes.

use fsdp::calibration::C_M;
use fsdp::oracle::{best_sparse_db, sparse_approximation_check};
use fsdp::{Database, QueryClass};

fn main() -> fsdp::Result<()> {
    let db = Database::new(vec![7.3, 1.2, 4.4, 0.5])?;
    let class = QueryClass::from_rows([
        vec![1.0, 0.5, 0.0, 0.2],
        vec![0.0, 1.0, 1.0, 0.0],
        vec![0.3, 0.3, 0.3, 0.3],
        vec![0.0, 0.0, 0.6, 1.0],
    ])?;
    for m in [1, 2, 4, 8, 16, 32] {
        let (d, rel) = best_sparse_db(&db, &class, m, 10_000_000)?;
        println!(
            "m={m:<3} best D' = {:?}  relative error {rel:.4}",
            d.counts()
        );
    }
    for eta in [0.5, 0.25] {
        let c = sparse_approximation_check(&db, &class, eta, C_M, 10_000_000, 10_000_000)?;
        println!(
            "eta={eta}: fsd={} -> m={} reaches relative error {:.4} (holds: {})",
            c.fsd, c.m, c.relative_error, c.holds
        );
    }
    Ok(())
}
