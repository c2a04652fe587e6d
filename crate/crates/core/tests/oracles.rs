use std::collections::HashMap;

use approx::assert_relative_eq;
use num_complex::Complex64;
use olab::averaging::AveragingScheme;
use olab::coupling::{coupling_diagnostics, exact_correlation, simulate_coupling, MarkovModel, TargetDist};
use olab::cylinders::{conditional_cancellation, worst_case_cancellation};
use olab::momo::{momo_sup, BlockPartition, PartitionKind};
use olab::oracle;
use olab::seqgen::{self, SequenceFormat};

#[test]
fn single_block_sup_against_dense_scan() {
    let n = 10_000;
    let mu = seqgen::mobius(n).unwrap();
    let part = BlockPartition::new(PartitionKind::Explicit { cuts: vec![1] }, n).unwrap();
    let r = momo_sup(&mu, &part, 64, Some(true)).unwrap();
    assert_eq!(r.blocks.len(), 1);
    let b = &r.blocks[0];
    let x = &mu.values()[b.start - 1..b.start - 1 + b.len];
    let dense = oracle::dense_sup(x, 1 << 15);
    assert!(b.sup >= dense - 1e-9, "refined {} below dense scan {dense}", b.sup);
    assert!(b.grid_sup >= b.guarantee * dense);
    assert_relative_eq!(r.value, b.sup / n as f64, max_relative = 1e-12);
}

#[test]
fn worst_case_matches_exhaustive_subsets() {
    let n = 10_000;
    let u = seqgen::iid_signs(n + 20, 99).unwrap();
    let scheme = AveragingScheme::single(n);
    for m in [0, 1, 7] {
        let w = worst_case_cancellation(&u, &scheme, m, 4).unwrap();
        let sums = oracle::block_sums(u.values(), n, m, 4);
        assert_eq!(sums.len(), 16);
        let z: Vec<Complex64> = sums.iter().map(|(_, s)| *s).collect();
        let brute = oracle::subset_sup(&z);
        assert!(w.exact);
        assert_relative_eq!(w.report.tail.re, brute, max_relative = 1e-12);
        let witness: Vec<Vec<Complex64>> = w.witness.clone();
        assert_relative_eq!(oracle::cancellation(u.values(), n, m, &witness), brute, max_relative = 1e-12);
    }
}

#[test]
fn conditional_ratios_match_direct_counts() {
    let n = 20_000;
    let (m, ell, eps) = (3, 2, 0.05);
    let u = seqgen::iid_signs(n + m + ell, 5).unwrap();
    let r = conditional_cancellation(&u, &AveragingScheme::single(n), m, ell, eps).unwrap();
    let v: Vec<i8> = u.values().iter().map(|z| z.re as i8).collect();
    let mut num: HashMap<&[i8], i64> = HashMap::new();
    let mut den: HashMap<&[i8], i64> = HashMap::new();
    for p in 0..n {
        *num.entry(&v[m + p..m + p + ell]).or_default() += v[p] as i64;
        *den.entry(&v[p..p + ell]).or_default() += 1;
    }
    let good: f64 = den
        .iter()
        .filter(|(b, &c)| num.get(*b).map_or(0, |s| s.abs()) as f64 / c as f64 <= eps)
        .map(|(_, &c)| c as f64 / n as f64)
        .sum();
    assert_relative_eq!(r.good_mass, good, epsilon = 1e-12);
    assert_eq!(r.blocks.len(), den.len());
    for b in &r.blocks {
        let key: Vec<i8> = b.block.iter().map(|z| z.re as i8).collect();
        let want = num.get(key.as_slice()).map_or(0, |s| s.abs()) as f64 / den[key.as_slice()] as f64;
        assert_relative_eq!(b.ratio, want, epsilon = 1e-12);
    }
}

#[test]
fn coupling_paths_have_the_right_laws() {
    let n = 200_000;
    let chain = MarkovModel::symmetric_flip(0.3).unwrap();
    let beta = TargetDist::uniform_signs();
    let paths = simulate_coupling(&chain, &beta, n, 8).unwrap();
    let d = coupling_diagnostics(&paths, &beta);
    let root_n = (n as f64).sqrt();
    assert!(d.ks_u < 2.0 / root_n, "KS {}", d.ks_u);
    assert!(d.tv_y < 3.0 / root_n, "TV {}", d.tv_y);
    for (lag, (a, b)) in d.autocorr_u.iter().zip(&d.autocorr_y).enumerate() {
        assert!(a.abs() < 4.5 / root_n, "U lag {}: {a}", lag + 1);
        assert!(b.abs() < 4.5 / root_n, "Y lag {}: {b}", lag + 1);
    }
    let exact = exact_correlation(&chain, &beta);
    assert_relative_eq!(exact, 0.6, epsilon = 1e-12);
    assert!((d.mean_xy - exact).abs() < 4.0 * d.stderr_xy);
}

#[test]
fn sequence_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let u = seqgen::dirichlet_twist(&seqgen::mobius(500).unwrap(), 7, &seqgen::Character::PrimeIndex(2)).unwrap();
    for name in ["u.bin", "u.csv"] {
        let path = dir.path().join(name);
        let format = SequenceFormat::from_path(&path);
        seqgen::save_sequence(&u, &path, format).unwrap();
        let back = seqgen::load_sequence(&path, format, Some(1.0)).unwrap();
        assert_eq!(back.len(), u.len());
        for (a, b) in u.values().iter().zip(back.values()) {
            assert_eq!(a, b, "{name}");
        }
    }
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "n,re,im\n1,2,0\n").unwrap();
    assert!(seqgen::load_sequence(&path, SequenceFormat::Csv, Some(1.0)).is_err());
}
