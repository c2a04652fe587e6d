//! u¹, u², u³ seminorms of a few model sequences.

use olab::averaging::AveragingScheme;
use olab::seqgen;
use olab::uniformity::{u1_norm, us_norm};

fn main() -> olab::Result<()> {
    let n = 20_000;
    let scheme = AveragingScheme::cesaro(vec![n / 4, n / 2, n])?;
    let len = n + 1_000;
    let corpus = [
        seqgen::constant(len)?,
        seqgen::alternating(len)?,
        seqgen::quadratic_phase(len, 2f64.sqrt() - 1.0)?,
        seqgen::mobius(len)?,
    ];
    println!("{:<40} {:>7} {:>7} {:>7}", "sequence", "u1", "u2", "u3");
    for u in &corpus {
        let a = u1_norm(u, &scheme, 500)?.value;
        let b = us_norm(u, &scheme, 2, &[128, 128])?.value;
        let c = us_norm(u, &scheme, 3, &[16, 16, 16])?.value;
        println!("{:<40} {a:>7.4} {b:>7.4} {c:>7.4}", u.label);
    }
    Ok(())
}
