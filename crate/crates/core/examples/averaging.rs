//! Cesàro against logarithmic averages of μ(n)·μ(n+1) along a cutoff grid.

use olab::averaging::{average, geometric_grid, AveragingScheme};
use olab::seqgen;

fn main() -> olab::Result<()> {
    let n = 1_000_000;
    let mu = seqgen::mobius(n + 1)?;
    let prod = mu.shifted_product(1)?;
    let cutoffs = geometric_grid(1_000, n, 7);
    for scheme in [AveragingScheme::cesaro(cutoffs.clone())?, AveragingScheme::logarithmic(cutoffs)?] {
        let r = average(prod.values(), &scheme)?;
        println!("{:?}", scheme.mode);
        for (c, v) in r.cutoffs.iter().zip(&r.values) {
            println!("  N = {c:>8}  {:+.5}", v.re);
        }
        println!("  spread over last third: {:.2e}", r.spread);
    }
    Ok(())
}
