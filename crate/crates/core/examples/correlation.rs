//! Autocorrelation, short-interval variance and the Wiener atom side by side.

use olab::averaging::{AveragingMode, AveragingScheme};
use olab::correlate::{autocorr_weighted, averaged_chowlak, short_interval_variance, wiener_atom};
use olab::seqgen;

fn main() -> olab::Result<()> {
    let n = 200_000;
    let scheme = AveragingScheme::cesaro(vec![50_000, 100_000, n])?;
    let hs = [10, 100, 1000];
    for u in [seqgen::mobius(n + 1000)?, seqgen::alternating(n + 1000)?, seqgen::linear_phase(n + 1000, 2f64.sqrt() - 1.0)?] {
        let rho = autocorr_weighted(&u, n, 5, AveragingMode::Cesaro)?;
        let lags: Vec<String> = rho.values.iter().map(|z| format!("{:.3}", z.norm())).collect();
        println!("{}: |rho(0..=5)| = [{}]", u.label, lags.join(", "));
        let siv = short_interval_variance(&u, &scheme, &hs)?;
        let atom = wiener_atom(&u, &scheme, &hs)?;
        for (s, w) in siv.iter().zip(&atom) {
            println!("  H = {:>5}  short-interval {:.4}  wiener {:.4}", s.h, s.report.tail.re, w.report.tail.re);
        }
    }

    let mu = seqgen::mobius(n + 50)?;
    let vs = [&mu, &mu];
    let r = averaged_chowlak(&mu, &vs, &scheme, 20, 0, 0)?;
    println!("mu three-point average over h in [1,20]^2: {:.5} (exact = {})", r.report.tail.norm(), r.exact);
    Ok(())
}
