//! Dense kernels. Only [`matmul`] contributes to the multiply-add count.

use alloc::vec::Vec;

/// `a (m x k) · b (k x n)`, adding `m * k * n` to `madds`.
///
/// Every output element accumulates over `k` in ascending order whichever
/// loop nest is used, so both paths give bitwise-identical results.
pub(crate) fn matmul(
    a: &[f32],
    b: &[f32],
    m: usize,
    k: usize,
    n: usize,
    madds: &mut u64,
) -> Vec<f32> {
    // below this output size, sweep `b` once and keep `out` cache-resident
    const SMALL_OUT: usize = 1 << 16;
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    let mut out = alloc::vec![0.0f32; m * n];
    if m * n <= SMALL_OUT && m < k {
        for (p, b_row) in b.chunks_exact(n).enumerate() {
            for (i, out_row) in out.chunks_exact_mut(n).enumerate() {
                let av = a[i * k + p];
                for (o, &bv) in out_row.iter_mut().zip(b_row) {
                    *o += av * bv;
                }
            }
        }
    } else {
        for (a_row, out_row) in a.chunks_exact(k).zip(out.chunks_exact_mut(n)) {
            for (&av, b_row) in a_row.iter().zip(b.chunks_exact(n)) {
                for (o, &bv) in out_row.iter_mut().zip(b_row) {
                    *o += av * bv;
                }
            }
        }
    }
    *madds += (m * k * n) as u64;
    out
}

/// Per-row layer norm without affine parameters, followed by
/// `h * (1 + scale * e) + shift * e`.
pub(crate) fn norm_modulate(
    x: &[f32],
    dim: usize,
    scale: &[f32],
    shift: &[f32],
    embed: &[f32],
) -> Vec<f32> {
    const EPS: f32 = 1e-6;
    let gain: Vec<f32> = scale.iter().zip(embed).map(|(s, e)| 1.0 + s * e).collect();
    let bias: Vec<f32> = shift.iter().zip(embed).map(|(s, e)| s * e).collect();
    let mut out = Vec::with_capacity(x.len());
    for row in x.chunks_exact(dim) {
        let mean = row.iter().sum::<f32>() / dim as f32;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f32>() / dim as f32;
        let inv = 1.0 / libm::sqrtf(var + EPS);
        out.extend(
            row.iter()
                .zip(&gain)
                .zip(&bias)
                .map(|((v, g), b)| (v - mean) * inv * g + b),
        );
    }
    out
}

/// Exact (erf-based) GELU, in place.
pub(crate) fn gelu_inplace(x: &mut [f32]) {
    const INV_SQRT2: f32 = core::f32::consts::FRAC_1_SQRT_2;
    for v in x {
        *v = 0.5 * *v * (1.0 + libm::erff(*v * INV_SQRT2));
    }
}

/// `exp(x)` for `x <= 0` by Cephes range reduction and a degree-5
/// polynomial. Branch-free so the softmax loop vectorises; within a few ulp
/// of `libm::expf` on `[-87, 0]` and flushes to ~1e-38 below that.
#[inline(always)]
pub(crate) fn exp_nonpositive(x: f32) -> f32 {
    const LOG2E: f32 = core::f32::consts::LOG2_E;
    const LN2_HI: f32 = 0.693_359_4;
    const LN2_LO: f32 = -2.121_944_4e-4;
    // adding 1.5 * 2^23 rounds to the nearest integer, left in the low bits
    const ROUND: f32 = 12_582_912.0;
    let x = x.clamp(-87.0, 0.0);
    let shifted = x * LOG2E + ROUND;
    let fx = shifted - ROUND;
    let n = shifted.to_bits() as i32 - ROUND.to_bits() as i32;
    let r = x - fx * LN2_HI - fx * LN2_LO;
    let p = 1.987_569_1e-4;
    let p = p * r + 1.398_199_9e-3;
    let p = p * r + 8.333_452e-3;
    let p = p * r + 4.166_579_6e-2;
    let p = p * r + 1.666_666_5e-1;
    let p = p * r + 0.5;
    let y = p * (r * r) + r + 1.0;
    y * f32::from_bits(((n + 127) as u32) << 23)
}

/// Column-wise `exp(scale * (x - max))` over a row-major `rows x cols`
/// matrix, in place. Returns the per-column sums; columns are left
/// unnormalised.
pub(crate) fn softmax_columns_unnormalised(x: &mut [f32], cols: usize, scale: f32) -> Vec<f32> {
    let mut max = alloc::vec![f32::NEG_INFINITY; cols];
    for row in x.chunks_exact(cols) {
        for (m, &v) in max.iter_mut().zip(row) {
            *m = m.max(v);
        }
    }
    let mut sums = alloc::vec![0.0f32; cols];
    for row in x.chunks_exact_mut(cols) {
        for ((v, &m), s) in row.iter_mut().zip(&max).zip(sums.iter_mut()) {
            *v = exp_nonpositive((*v - m) * scale);
            *s += *v;
        }
    }
    sums
}

/// Copies columns `col0..col0 + width` of a row-major `rows x cols` matrix.
pub(crate) fn column_slice(x: &[f32], cols: usize, col0: usize, width: usize) -> Vec<f32> {
    x.chunks_exact(cols)
        .flat_map(|row| row[col0..col0 + width].iter().copied())
        .collect()
}

pub(crate) fn transpose(x: &[f32], rows: usize, cols: usize) -> Vec<f32> {
    let mut out = alloc::vec![0.0f32; rows * cols];
    for (r, row) in x.chunks_exact(cols).enumerate() {
        for (c, &v) in row.iter().enumerate() {
            out[c * rows + r] = v;
        }
    }
    out
}
