//! Block-wise exponential sums: a resonant phase against random signs.

use olab::momo::{momo_rotation, momo_sup, mrt_swapped, BlockPartition, PartitionKind, DEFAULT_OVERSAMPLE};
use olab::seqgen;

fn main() -> olab::Result<()> {
    let n = 100_000;
    let part = BlockPartition::new(PartitionKind::Power { c: 1.0, gamma: 1.5 }, n)?;
    println!("power(1, 1.5) on N = {n}: {} blocks, first cuts {:?}", part.k_n(), &part.cuts[..6]);

    let phase = seqgen::linear_phase(n, 0.25)?;
    let r = momo_sup(&phase, &part, DEFAULT_OVERSAMPLE, None)?;
    println!("resonant phase: {:.5} (guarantee {:.4})", r.value, r.guarantee);
    println!("rotation at alpha = 0.25: {:.5}", momo_rotation(&phase, &part, 0.25)?);

    let iid = seqgen::iid_signs(n, 3)?;
    let r = momo_sup(&iid, &part, DEFAULT_OVERSAMPLE, None)?;
    println!("iid signs: {:.5}", r.value);
    let long = BlockPartition::new(PartitionKind::Explicit { cuts: (0..n / 1000).map(|k| 1 + 1000 * k).collect() }, n)?;
    println!("iid signs, 1000-blocks: {:.5}", momo_sup(&iid, &long, DEFAULT_OVERSAMPLE, None)?.value);

    let mu = seqgen::mobius(n + 1000)?;
    let m = mrt_swapped(&mu, n, 1000, 200, 11, 16)?;
    println!("mu swapped sup, M = 1000: {:.4} ± {:.4}", m.mean, m.stderr);
    Ok(())
}
