//! Block frequencies, worst-case cancellation and a K-mixing decay profile.

use olab::averaging::AveragingScheme;
use olab::cylinders::{block_frequencies, conditional_cancellation, kmixing_scan, worst_case_cancellation};
use olab::seqgen;

fn main() -> olab::Result<()> {
    let n = 100_000;
    let scheme = AveragingScheme::cesaro(vec![n / 10, n])?;
    let iid = seqgen::iid_signs(n + 2_000, 7)?;
    let alt = seqgen::alternating(n + 2_000)?;

    for f in block_frequencies(&iid, n, 2)? {
        let block: Vec<i32> = f.block.iter().map(|z| z.re as i32).collect();
        println!("block {block:?}: {:.4}", f.frequency);
    }

    let w = worst_case_cancellation(&alt, &scheme, 3, 2)?;
    println!("alternating, m=3, ell=2: sup {:.4} over {} blocks", w.report.tail.re, w.witness.len());

    let c = conditional_cancellation(&iid, &scheme, 5, 2, 0.05)?;
    println!("iid conditional ratios: good mass {:.3}, excluded {:.3}", c.good_mass, c.excluded_mass);

    let prof = kmixing_scan(&iid, &scheme, 3, &[0, 1, 10, 100, 1000])?;
    for row in &prof.rows {
        println!("m = {:>4}  sup = {:.4}  witness {}", row.m, row.sup, row.witness_size);
    }
    Ok(())
}
