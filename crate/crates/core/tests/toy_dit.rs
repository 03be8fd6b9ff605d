use fis_core::model::{analytic_flops, denoise, ToyDiT, ToyDiTConfig};
use fis_core::{diagnostics::per_frame_error, SparsityConfig};

fn small() -> ToyDiTConfig {
    ToyDiTConfig {
        blocks_total: 6,
        model_dim: 16,
        heads: 2,
        frames: 12,
        height: 3,
        width: 3,
        steps_total: 3,
        weight_seed: 9,
        ..Default::default()
    }
}

fn sparse(n: usize, cfg: &ToyDiTConfig, sensitive: &[usize], tail: usize) -> SparsityConfig {
    SparsityConfig::new(
        n,
        cfg.blocks_total,
        cfg.steps_total,
        sensitive.iter().copied(),
        tail,
    )
    .unwrap()
}

#[test]
fn runs_are_deterministic() {
    let cfg = small();
    let a = ToyDiT::new(cfg.clone()).unwrap();
    let b = ToyDiT::new(cfg.clone()).unwrap();
    let sp = sparse(3, &cfg, &[0, 5], 1);
    let init = cfg.init_noise(17).unwrap();
    let x = denoise(&a, &init, Some(&sp)).unwrap();
    let y = denoise(&b, &cfg.init_noise(17).unwrap(), Some(&sp)).unwrap();
    let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(x.latent.data()), bits(y.latent.data()));
    assert_eq!(x.ledger, y.ledger);
}

#[test]
fn gate_off_configurations_match_dense() {
    let cfg = small();
    let model = ToyDiT::new(cfg.clone()).unwrap();
    let init = cfg.init_noise(2).unwrap();
    let dense = denoise(&model, &init, None).unwrap().latent;
    let all_blocks: Vec<usize> = (0..cfg.blocks_total).collect();
    for sp in [
        sparse(3, &cfg, &[0, 5], cfg.steps_total),
        sparse(3, &cfg, &all_blocks, 1),
        sparse(1, &cfg, &[], 0),
    ] {
        let out = denoise(&model, &init, Some(&sp)).unwrap().latent;
        let diff = out.max_abs_diff(&dense).unwrap();
        assert!(diff <= 1e-6, "{sp:?}: {diff}");
    }
}

#[test]
fn ledger_matches_closed_form_and_shrinks_with_stride() {
    let cfg = small();
    let model = ToyDiT::new(cfg.clone()).unwrap();
    let init = cfg.init_noise(0).unwrap();
    let dense = denoise(&model, &init, None).unwrap();
    assert!(dense.ledger.is_consistent());
    assert_eq!(
        dense.ledger.counted_madds(),
        analytic_flops(&cfg, None).unwrap().dense
    );

    let mut previous = u64::MAX;
    for n in 2..=5 {
        let sp = sparse(n, &cfg, &[0, 5], 1);
        let run = denoise(&model, &init, Some(&sp)).unwrap();
        let analytic = analytic_flops(&cfg, Some(&sp)).unwrap();
        assert_eq!(run.ledger.counted_madds(), analytic.sparse, "n={n}");
        assert!(run.ledger.sparse_madds() < previous, "n={n}");
        previous = run.ledger.sparse_madds();
    }
}

// One gated block, every other block dense: frames that block keeps as
// anchors should carry no more error than the interpolated ones.
#[test]
fn anchor_frames_carry_less_error() {
    let cfg = ToyDiTConfig::default();
    let model = ToyDiT::new(cfg.clone()).unwrap();
    let l = cfg.blocks_total / 2;
    let sensitive: Vec<usize> = (0..cfg.blocks_total).filter(|&b| b != l).collect();
    let sp = SparsityConfig::new(
        2,
        cfg.blocks_total,
        cfg.steps_total,
        sensitive,
        cfg.steps_total - 1,
    )
    .unwrap();
    let anchors = fis_core::anchor_set(cfg.frames, 2, 0).unwrap();

    let (mut on, mut off) = (Vec::new(), Vec::new());
    for seed in 0..4 {
        let init = cfg.init_noise(seed).unwrap();
        let dense = denoise(&model, &init, None).unwrap();
        let run = denoise(&model, &init, Some(&sp)).unwrap();
        assert_eq!(run.ledger.entries.iter().filter(|e| e.gated).count(), 1);
        for (f, e) in per_frame_error(&dense.latent, &run.latent)
            .unwrap()
            .into_iter()
            .enumerate()
        {
            if anchors.contains(f) {
                on.push(e)
            } else {
                off.push(e)
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(
        mean(&on) <= mean(&off),
        "anchor {} vs interpolated {}",
        mean(&on),
        mean(&off)
    );
}
