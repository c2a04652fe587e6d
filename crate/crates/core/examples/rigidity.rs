//! Sampling the Cantor-type measure and checking its level statistics.

use olab::rigidity::{estimate_character, rigidity_report, CantorMeasureSpec};

fn main() -> olab::Result<()> {
    let p: Vec<f64> = (1..=8).map(|n| 1.0 / (n + 1) as f64).collect();
    let spec = CantorMeasureSpec::minimal(p)?;
    println!("q = {:?}", spec.q());
    let r = rigidity_report(&spec, spec.depth(), 50_000, 5)?;
    println!("level      p    A-freq  no-visit  expected");
    for l in &r.levels {
        println!("{:>5} {:>6.3} {:>9.4} {:>9.4} {:>9.4}", l.level, l.p, l.a_frequency, l.no_visit, l.no_visit_expected);
    }
    let c = estimate_character(&spec, 3, 50_000, 9)?;
    println!("level-3 character: |mean| = {:.4}, arc bound {:.4}", c.mean.norm(), c.arc_bound);
    Ok(())
}
