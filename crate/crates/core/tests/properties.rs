use std::collections::HashMap;
use std::sync::OnceLock;

use num_complex::Complex64;
use olab::averaging::{average, AveragingMode, AveragingScheme};
use olab::correlate::{autocorr_direct, autocorr_fft};
use olab::coupling::{exact_correlation, monotone_violation, random_model};
use olab::cylinders::subset_sup;
use olab::momo::sup_modulus;
use olab::oracle;
use olab::seqgen::{self, SequenceSample};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tables() -> &'static (SequenceSample, SequenceSample) {
    static T: OnceLock<(SequenceSample, SequenceSample)> = OnceLock::new();
    T.get_or_init(|| (seqgen::mobius(9_000_000).unwrap(), seqgen::liouville(9_000_000).unwrap()))
}

fn complex_vec(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b)), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn modulate_then_unmodulate_is_identity(xs in complex_vec(1..200), alpha in -2.0f64..2.0) {
        let u = SequenceSample::from_values(xs, "x").unwrap();
        let back = seqgen::modulate(&seqgen::modulate(&u, alpha), -alpha);
        for (a, b) in u.values().iter().zip(back.values()) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn liouville_is_completely_multiplicative(m in 1u64..3000, n in 1u64..3000) {
        let lambda = &tables().1;
        let at = |k: u64| lambda.get(k as usize).re;
        prop_assert_eq!(at(m * n), at(m) * at(n));
        prop_assert_eq!(at(m * n) as i8, oracle::liouville(m * n));
    }

    #[test]
    fn mobius_is_multiplicative_on_coprimes(m in 1u64..3000, n in 1u64..3000) {
        let gcd = |mut a: u64, mut b: u64| { while b != 0 { (a, b) = (b, a % b); } a };
        let mu = &tables().0;
        let at = |k: u64| mu.get(k as usize).re;
        if gcd(m, n) == 1 {
            prop_assert_eq!(at(m * n), at(m) * at(n));
        } else {
            prop_assert_eq!(at(m * n), 0.0);
        }
    }

    #[test]
    fn averages_are_linear_and_bounded(
        xs in complex_vec(300..301),
        ys in complex_vec(300..301),
        a in -3.0f64..3.0,
        log in any::<bool>(),
    ) {
        let mode = if log { AveragingMode::Logarithmic } else { AveragingMode::Cesaro };
        let scheme = AveragingScheme::new(mode, vec![10, 100, 300]).unwrap();
        let zs: Vec<Complex64> = xs.iter().zip(&ys).map(|(x, y)| x * a + y).collect();
        let (rx, ry, rz) = (average(&xs, &scheme).unwrap(), average(&ys, &scheme).unwrap(), average(&zs, &scheme).unwrap());
        let bound = xs.iter().map(|x| x.norm()).fold(0.0, f64::max);
        for i in 0..3 {
            prop_assert!((rz.values[i] - (rx.values[i] * a + ry.values[i])).norm() < 1e-9);
            prop_assert!(rx.values[i].norm() <= bound + 1e-12);
        }
    }

    #[test]
    fn fft_autocorrelation_matches_direct(xs in complex_vec(40..400), h in 0usize..39, log in any::<bool>()) {
        let mode = if log { AveragingMode::Logarithmic } else { AveragingMode::Cesaro };
        let n = xs.len();
        let fast = autocorr_fft(&xs, n - h, h, mode);
        let slow = autocorr_direct(&xs, n - h, h, mode);
        for (f, s) in fast.iter().zip(&slow) {
            prop_assert!((f - s).norm() <= 1e-9 * (1.0 + s.norm()));
        }
    }

    #[test]
    fn real_subset_sup_is_exact(xs in prop::collection::vec(-1.0f64..1.0, 1..14)) {
        let z: Vec<Complex64> = xs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let (sup, witness) = subset_sup(&z);
        let brute = oracle::subset_sup(&z);
        prop_assert!((sup - brute).abs() < 1e-12);
        let from_witness: Complex64 = witness.iter().map(|&i| z[i]).sum();
        prop_assert!((from_witness.norm() - sup).abs() < 1e-12);
    }

    #[test]
    fn complex_subset_sup_within_guarantee(z in complex_vec(1..14)) {
        let (sup, _) = subset_sup(&z);
        let brute = oracle::subset_sup(&z);
        prop_assert!(sup <= brute + 1e-12);
        prop_assert!(sup >= (std::f64::consts::PI / 64.0).cos() * brute - 1e-12);
    }

    #[test]
    fn frequency_sup_brackets_dense_scan(x in complex_vec(2..64)) {
        let (grid, sup, _, guarantee) = sup_modulus(&x, 16, true);
        let dense = oracle::dense_sup(&x, 4096);
        prop_assert!(grid <= sup + 1e-12);
        prop_assert!(sup >= dense - 1e-6 * (1.0 + dense));
        prop_assert!(grid >= guarantee * dense - 1e-12);
    }

    #[test]
    fn random_models_correlate_positively(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (model, beta) = random_model(&mut rng);
        prop_assert!(exact_correlation(&model, &beta) > 0.0);
        prop_assert!(monotone_violation(&model, &beta, 64, |v| v).is_none());
    }
}

#[test]
fn block_counts_partition_the_window() {
    let u = seqgen::iid_signs(5000, 17).unwrap();
    let blocks = olab::cylinders::block_frequencies(&u, 4000, 3).unwrap();
    let total: f64 = blocks.iter().map(|b| b.frequency).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let mut direct: HashMap<Vec<i8>, usize> = HashMap::new();
    for n in 0..4000 {
        *direct.entry(u.values()[n..n + 3].iter().map(|z| z.re as i8).collect()).or_default() += 1;
    }
    assert_eq!(blocks.len(), direct.len());
    for b in &blocks {
        let key: Vec<i8> = b.block.iter().map(|z| z.re as i8).collect();
        assert!((b.frequency - direct[&key] as f64 / 4000.0).abs() < 1e-12);
    }
}
