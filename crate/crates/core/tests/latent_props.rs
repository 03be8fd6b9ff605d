use fis_core::rng::SeedStream;
use fis_core::{anchor_set, gather, reconstruct, FrameIndexSet, LatentSequence};
use proptest::prelude::*;

fn random_latent(frames: usize, seed: u64) -> LatentSequence {
    let mut rng = SeedStream::new(seed, 3);
    LatentSequence::from_fn(frames, 2, 3, 4, |_, _, _, _| rng.uniform(-2.0, 2.0)).unwrap()
}

fn anchors() -> impl Strategy<Value = FrameIndexSet> {
    (2usize..30).prop_flat_map(|frames| {
        prop::collection::vec(0..frames, 0..frames).prop_map(move |mut idx| {
            idx.push(0);
            idx.push(frames - 1);
            FrameIndexSet::new(frames, idx).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn full_set_round_trip(frames in 2usize..20, seed in any::<u64>()) {
        let x = random_latent(frames, seed);
        let all = FrameIndexSet::full(frames);
        let y = reconstruct(&gather(&x, &all).unwrap(), &all, frames).unwrap();
        prop_assert_eq!(y, x);
    }

    #[test]
    fn anchors_pass_through(set in anchors(), seed in any::<u64>()) {
        let x = random_latent(set.frames_total(), seed);
        let y = reconstruct(&gather(&x, &set).unwrap(), &set, set.frames_total()).unwrap();
        for f in set.iter() {
            prop_assert_eq!(y.frame(f), x.frame(f));
        }
    }

    #[test]
    fn frame_linear_input_is_exact(n in 1usize..8, extra in 0usize..30, r_seed in any::<usize>(), seed in any::<u64>()) {
        let frames = n + 2 + extra;
        let r = r_seed % n;
        let mut rng = SeedStream::new(seed, 5);
        let a: Vec<f32> = (0..24).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let b: Vec<f32> = (0..24).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let x = LatentSequence::from_fn(frames, 2, 3, 4, |f, h, w, c| {
            let i = (h * 3 + w) * 4 + c;
            a[i] + f as f32 * b[i]
        }).unwrap();
        let set = anchor_set(frames, n, r).unwrap();
        let y = reconstruct(&gather(&x, &set).unwrap(), &set, frames).unwrap();
        let worst = y.max_abs_diff(&x).unwrap();
        prop_assert!(worst <= 1e-5, "max abs {worst}");
    }

    #[test]
    fn interpolation_stays_between_anchors(set in anchors(), seed in any::<u64>()) {
        let frames = set.frames_total();
        let x = random_latent(frames, seed);
        let y = reconstruct(&gather(&x, &set).unwrap(), &set, frames).unwrap();
        let idx = set.indices();
        for pair in idx.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            for f in lo + 1..hi {
                for ((v, a), b) in y.frame(f).iter().zip(x.frame(lo)).zip(x.frame(hi)) {
                    prop_assert!(*v >= a.min(*b) - 1e-6 && *v <= a.max(*b) + 1e-6);
                }
            }
        }
    }
}
