use proptest::prelude::*;

use ssltsc::augment::{
    blockout, blockout_len, blockout_with, crop_resize, crop_resize_at, flip, gaussian_noise, make_view_pair,
    AugmentKind, AugmentSpec, BlockoutMode,
};
use ssltsc::rng;

fn series(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, 1..max_len)
}

fn even_series() -> impl Strategy<Value = Vec<f64>> {
    (2usize..150).prop_flat_map(|h| prop::collection::vec(-50.0f64..50.0, 2 * h))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn flip_is_an_involution(x in series(300)) {
        let f = flip(&x);
        prop_assert_eq!(flip(&f), x.clone());
        let t = x.len();
        for k in 0..t {
            prop_assert_eq!(f[k], x[t - 1 - k]);
        }
    }

    #[test]
    fn blockout_zeroes_one_run_and_keeps_the_rest(
        x in prop::collection::vec(1.0f64..50.0, 1..300),
        lambda in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let out = blockout(&x, lambda, &mut rng::from_seed(seed));
        let expected = (lambda * x.len() as f64).round() as usize;
        prop_assert_eq!(blockout_len(x.len(), lambda), expected);
        let zeroed: Vec<usize> = (0..x.len()).filter(|&k| out[k] == 0.0).collect();
        prop_assert_eq!(zeroed.len(), expected);
        if let (Some(&a), Some(&b)) = (zeroed.first(), zeroed.last()) {
            prop_assert_eq!(b - a + 1, expected, "zeros are contiguous");
        }
        for k in 0..x.len() {
            if out[k] != 0.0 {
                prop_assert_eq!(out[k], x[k]);
            }
        }
    }

    #[test]
    fn scattered_blockout_count(
        x in prop::collection::vec(1.0f64..50.0, 1..300),
        lambda in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let out = blockout_with(&x, lambda, BlockoutMode::Scattered, &mut rng::from_seed(seed));
        prop_assert_eq!(out.iter().filter(|&&v| v == 0.0).count(), blockout_len(x.len(), lambda));
    }

    #[test]
    fn crop_resize_preserves_length_and_range(x in even_series(), seed in any::<u64>()) {
        let out = crop_resize(&x, &mut rng::from_seed(seed)).unwrap();
        prop_assert_eq!(out.len(), x.len());
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for v in out {
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    #[test]
    fn crop_resize_even_outputs_copy_the_crop(x in even_series(), pick in any::<prop::sample::Index>()) {
        let half = x.len() / 2;
        let start = pick.index(half);
        let out = crop_resize_at(&x, start).unwrap();
        for j in 0..half {
            prop_assert_eq!(out[2 * j], x[start + j]);
        }
    }

    #[test]
    fn zero_sigma_noise_is_identity(x in series(300), seed in any::<u64>()) {
        prop_assert_eq!(gaussian_noise(&x, 0.0, 0.0, &mut rng::from_seed(seed)).unwrap(), x);
    }

    #[test]
    fn every_augmentation_preserves_length(x in even_series(), seed in any::<u64>(), kind in 0usize..4) {
        let spec = AugmentSpec::new(AugmentKind::ALL[kind]);
        let (a, b) = make_view_pair(&x, &spec, &mut rng::from_seed(seed)).unwrap();
        prop_assert_eq!(a.len(), x.len());
        prop_assert_eq!(b.len(), x.len());
    }
}

#[test]
fn crop_resize_trace_with_clamp() {
    assert_eq!(crop_resize_at(&[0.0, 1.0, 2.0, 3.0], 0).unwrap(), vec![0.0, 0.5, 1.0, 1.0]);
    assert_eq!(crop_resize_at(&[0.0, 1.0, 2.0, 3.0], 1).unwrap(), vec![1.0, 1.5, 2.0, 2.0]);
}

#[test]
fn flip_pair_is_identity_and_reverse() {
    let x = [1.0, 2.0, 3.0];
    let (a, b) = make_view_pair(&x, &AugmentSpec::new(AugmentKind::Flip), &mut rng::from_seed(0)).unwrap();
    assert_eq!(a, x);
    assert_eq!(b, [3.0, 2.0, 1.0]);
}

#[test]
fn stochastic_views_differ() {
    let x: Vec<f64> = (0..64).map(|i| (i as f64 * 0.3).sin()).collect();
    for kind in [AugmentKind::Blockout, AugmentKind::CropResize, AugmentKind::GaussianNoise] {
        let (a, b) = make_view_pair(&x, &AugmentSpec::new(kind), &mut rng::from_seed(9)).unwrap();
        assert_ne!(a, b, "{kind:?}");
    }
}
