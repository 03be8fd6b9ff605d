use alloc::vec::Vec;

use super::flops::BlockCost;
use super::ops::{
    column_slice, gelu_inplace, matmul, norm_modulate, softmax_columns_unnormalised, transpose,
};
use super::BlockWeights;
use crate::error::{invalid, Result};
use crate::latent::LatentSequence;

/// Sinusoidal embedding of a scalar timestep, `dim` values: sines in the
/// first half, cosines in the second, frequencies `10000^(-i / half)`.
/// An odd trailing slot is zero.
pub fn timestep_embedding(timestep: f64, dim: usize) -> Vec<f32> {
    let half = dim / 2;
    let mut out = alloc::vec![0.0f32; dim];
    for i in 0..half {
        let freq = libm::exp(-libm::log(10_000.0) * i as f64 / half as f64);
        let arg = timestep * freq;
        out[i] = libm::sin(arg) as f32;
        out[half + i] = libm::cos(arg) as f32;
    }
    out
}

/// One transformer block over every token of `x`:
/// `x' = x + Attn(mod(LN(x)))`, `out = x' + FFN(mod(LN(x')))`.
pub fn block_forward(
    x: &LatentSequence,
    w: &BlockWeights,
    t_embed: &[f32],
) -> Result<LatentSequence> {
    block_forward_counted(x, w, t_embed).map(|(out, _)| out)
}

pub(crate) fn block_forward_counted(
    x: &LatentSequence,
    w: &BlockWeights,
    t_embed: &[f32],
) -> Result<(LatentSequence, BlockCost)> {
    let dim = w.dim;
    if x.channels() != dim {
        return Err(invalid!(
            "input has {} channels, block expects {dim}",
            x.channels()
        ));
    }
    if t_embed.len() != dim {
        return Err(invalid!(
            "conditioning has {} values, block expects {dim}",
            t_embed.len()
        ));
    }
    let tokens = x.token_count();
    let mut cost = BlockCost {
        tokens,
        attn_madds: 0,
        ffn_madds: 0,
    };

    let attn = attn_branch(x, w, t_embed, &mut cost.attn_madds);
    let mid: Vec<f32> = x
        .data()
        .iter()
        .zip(attn.data())
        .map(|(a, b)| a + b)
        .collect();
    let mid = LatentSequence::from_parts_unchecked(x.frames(), x.height(), x.width(), dim, mid);
    let ff = ffn_branch(&mid, w, t_embed, &mut cost.ffn_madds);
    let mut out = mid.into_data();
    for (o, f) in out.iter_mut().zip(ff.data()) {
        *o += f;
    }

    let out = LatentSequence::from_parts_unchecked(x.frames(), x.height(), x.width(), dim, out);
    Ok((out, cost))
}

/// Attention branch `Attn(mod(LN(x)))`, without the residual.
pub(crate) fn attn_branch(
    x: &LatentSequence,
    w: &BlockWeights,
    t_embed: &[f32],
    madds: &mut u64,
) -> LatentSequence {
    let h = norm_modulate(x.data(), w.dim, &w.attn_scale, &w.attn_shift, t_embed);
    let out = attention(&h, x.token_count(), w, madds);
    LatentSequence::from_parts_unchecked(x.frames(), x.height(), x.width(), w.dim, out)
}

/// FFN branch `W2 · GELU(W1 · mod(LN(x)))`, without the residual.
pub(crate) fn ffn_branch(
    x: &LatentSequence,
    w: &BlockWeights,
    t_embed: &[f32],
    madds: &mut u64,
) -> LatentSequence {
    let tokens = x.token_count();
    let h = norm_modulate(x.data(), w.dim, &w.ffn_scale, &w.ffn_shift, t_embed);
    let mut hidden = matmul(&h, &w.w_1, tokens, w.dim, w.hidden, madds);
    gelu_inplace(&mut hidden);
    let out = matmul(&hidden, &w.w_2, tokens, w.hidden, w.dim, madds);
    LatentSequence::from_parts_unchecked(x.frames(), x.height(), x.width(), w.dim, out)
}

/// Multi-head softmax attention among all `tokens` rows of `h`.
///
/// Works on transposed scores `S^T = K_h · Q_h^T` so that the softmax runs
/// down columns and `O_h^T = V_h^T · P^T` keeps every inner loop `tokens`
/// long. Normalisation is applied once to the output.
fn attention(h: &[f32], tokens: usize, w: &BlockWeights, madds: &mut u64) -> Vec<f32> {
    let dim = w.dim;
    let head_dim = dim / w.heads;
    let q = matmul(h, &w.w_q, tokens, dim, dim, madds);
    let k = matmul(h, &w.w_k, tokens, dim, dim, madds);
    let v = matmul(h, &w.w_v, tokens, dim, dim, madds);
    let scale = 1.0 / libm::sqrtf(head_dim as f32);

    let mut concat = alloc::vec![0.0f32; tokens * dim];
    for head in 0..w.heads {
        let col0 = head * head_dim;
        let k_h = column_slice(&k, dim, col0, head_dim);
        let q_t = transpose(&column_slice(&q, dim, col0, head_dim), tokens, head_dim);
        let v_t = transpose(&column_slice(&v, dim, col0, head_dim), tokens, head_dim);
        // scores_t[key][query]
        let mut scores_t = matmul(&k_h, &q_t, tokens, head_dim, tokens, madds);
        let sums = softmax_columns_unnormalised(&mut scores_t, tokens, scale);
        let o_t = matmul(&v_t, &scores_t, head_dim, tokens, tokens, madds);
        for (c, row) in o_t.chunks_exact(tokens).enumerate() {
            for (i, (&val, &sum)) in row.iter().zip(&sums).enumerate() {
                concat[i * dim + col0 + c] = val / sum;
            }
        }
    }
    matmul(&concat, &w.w_o, tokens, dim, dim, madds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ToyDiTConfig;
    use crate::rng::SeedStream;

    fn small_cfg() -> ToyDiTConfig {
        ToyDiTConfig {
            model_dim: 16,
            heads: 4,
            frames: 4,
            height: 2,
            width: 3,
            weight_seed: 17,
            ..Default::default()
        }
    }

    #[test]
    fn single_token_attention_is_value_projection() {
        let cfg = ToyDiTConfig {
            frames: 1,
            height: 1,
            width: 1,
            ..small_cfg()
        };
        let w = BlockWeights::generate(&cfg, 0);
        let mut rng = SeedStream::new(1, 0);
        let x = LatentSequence::from_fn(1, 1, 1, 16, |_, _, _, _| rng.normal()).unwrap();
        let embed = timestep_embedding(500.0, 16);

        let h = norm_modulate(x.data(), 16, &w.attn_scale, &w.attn_shift, &embed);
        let mut sink = 0;
        let v = matmul(&h, &w.w_v, 1, 16, 16, &mut sink);
        let expected_attn = matmul(&v, &w.w_o, 1, 16, 16, &mut sink);
        let got = attention(&h, 1, &w, &mut sink);
        for (a, b) in got.iter().zip(&expected_attn) {
            assert!((a - b).abs() < 1e-6);
        }
        let out = block_forward(&x, &w, &embed).unwrap();
        assert_eq!(out.shape(), x.shape());
    }

    #[test]
    fn zero_input_without_conditioning_stays_zero() {
        let cfg = small_cfg();
        let w = BlockWeights::generate(&cfg, 2);
        let x = LatentSequence::zeros(4, 2, 3, 16).unwrap();
        let out = block_forward(&x, &w, &[0.0; 16]).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn frame_permutation_equivariance() {
        let cfg = small_cfg();
        let w = BlockWeights::generate(&cfg, 1);
        let embed = timestep_embedding(250.0, 16);
        let mut rng = SeedStream::new(2, 0);
        let x = LatentSequence::from_fn(4, 2, 3, 16, |_, _, _, _| rng.normal()).unwrap();
        let perm = [2usize, 0, 3, 1];
        let permuted = LatentSequence::from_fn(4, 2, 3, 16, |f, h, w_, c| {
            x.frame(perm[f])[(h * 3 + w_) * 16 + c]
        })
        .unwrap();
        let out = block_forward(&x, &w, &embed).unwrap();
        let out_p = block_forward(&permuted, &w, &embed).unwrap();
        for (f, &src) in perm.iter().enumerate() {
            for (a, b) in out_p.frame(f).iter().zip(out.frame(src)) {
                assert!((a - b).abs() <= 1e-5, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn rejects_channel_mismatch() {
        let cfg = small_cfg();
        let w = BlockWeights::generate(&cfg, 0);
        let x = LatentSequence::zeros(1, 1, 1, 8).unwrap();
        assert!(block_forward(&x, &w, &[0.0; 16]).is_err());
        let x = LatentSequence::zeros(1, 1, 1, 16).unwrap();
        assert!(block_forward(&x, &w, &[0.0; 8]).is_err());
    }

    #[test]
    fn counted_cost_matches_closed_form() {
        let cfg = small_cfg();
        let w = BlockWeights::generate(&cfg, 0);
        let x = LatentSequence::zeros(4, 2, 3, 16).unwrap();
        let (_, cost) = block_forward_counted(&x, &w, &[0.0; 16]).unwrap();
        let (n, d) = (24u64, 16u64);
        assert_eq!(cost.attn_madds, 4 * n * d * d + 2 * n * n * d);
        assert_eq!(cost.ffn_madds, 8 * n * d * d);
    }

    #[test]
    fn embedding_layout() {
        let e = timestep_embedding(0.0, 5);
        assert_eq!(e, [0.0, 0.0, 1.0, 1.0, 0.0]);
    }
}
