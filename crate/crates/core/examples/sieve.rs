//! Möbius and Liouville tables, summatory functions, and a file round trip.

use olab::seqgen::{self, SequenceFormat};

fn main() -> olab::Result<()> {
    let n = 1_000_000;
    let mu = seqgen::mobius(n)?;
    let lambda = seqgen::liouville(n)?;
    let mertens: f64 = mu.values().iter().map(|z| z.re).sum();
    let l: f64 = lambda.values().iter().map(|z| z.re).sum();
    println!("M({n}) = {mertens}, L({n}) = {l}");
    println!("mu(1..=12) = {:?}", mu.values()[..12].iter().map(|z| z.re as i8).collect::<Vec<_>>());

    let twisted = seqgen::dirichlet_twist(&mu, 5, &seqgen::Character::PrimeIndex(1))?;
    println!("{} has {} distinct values", twisted.label, twisted.alphabet().map_or(0, |a| a.len()));

    let path = std::env::temp_dir().join("olab-example-mu.bin");
    seqgen::save_sequence(&mu, &path, SequenceFormat::Binary)?;
    let back = seqgen::load_sequence(&path, SequenceFormat::Binary, Some(1.0))?;
    assert_eq!(back.values(), mu.values());
    println!("round trip through {} ok", path.display());
    std::fs::remove_file(path)?;
    Ok(())
}
