//! Exact and simulated correlation of the monotone coupling.

use num_rational::Ratio;
use olab::coupling::{coupling_diagnostics, exact_correlation, simulate_coupling, MarkovModel, TargetDist};

fn main() -> olab::Result<()> {
    let q = Ratio::new(3i128, 16);
    let one = Ratio::from_integer(1i128);
    let chain = MarkovModel::new(vec![-one, one], vec![vec![one - q, q], vec![q, one - q]])?;
    let signs = TargetDist::new(vec![-one, one], vec![Ratio::new(1, 2), Ratio::new(1, 2)])?;
    println!("exact correlation for q = {q}: {}", exact_correlation(&chain, &signs));

    let chain = MarkovModel::symmetric_flip(3.0 / 16.0)?;
    let signs = TargetDist::uniform_signs();
    let paths = simulate_coupling(&chain, &signs, 200_000, 42)?;
    let d = coupling_diagnostics(&paths, &signs);
    println!("simulated: {:.4} ± {:.4}", d.mean_xy, d.stderr_xy);
    println!("KS(U) = {:.4}, TV(Y) = {:.4}", d.ks_u, d.tv_y);

    let three = MarkovModel::new(
        vec![-1.0, 0.0, 2.0],
        vec![vec![0.6, 0.3, 0.1], vec![0.2, 0.5, 0.3], vec![0.1, 0.2, 0.7]],
    )?;
    let target = TargetDist::new(vec![-1.0, 1.0, 3.0], vec![0.5, 0.3, 0.2])?;
    println!("three-state chain: {:.6}", exact_correlation(&three, &target));
    Ok(())
}
