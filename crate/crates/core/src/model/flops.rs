//! Multiply-add accounting.
//!
//! Only matrix products are counted. For a block over `N` tokens with model
//! width `D` and FFN expansion `e`:
//! attention = `4·N·D² + 2·N²·D`, FFN = `2·e·N·D²`.

use alloc::vec::Vec;

use super::ToyDiTConfig;
use crate::error::Result;
use crate::schedule::{build_schedule, gate, SparsityConfig};

/// Counted cost of one block evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BlockCost {
    pub tokens: usize,
    pub attn_madds: u64,
    pub ffn_madds: u64,
}

impl BlockCost {
    pub fn total(&self) -> u64 {
        self.attn_madds + self.ffn_madds
    }

    /// Closed-form cost of a block over `tokens` tokens.
    pub fn analytic(tokens: usize, dim: usize, ffn_expansion: usize) -> Self {
        let (n, d, e) = (tokens as u64, dim as u64, ffn_expansion as u64);
        Self {
            tokens,
            attn_madds: 4 * n * d * d + 2 * n * n * d,
            ffn_madds: 2 * e * n * d * d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LedgerEntry {
    pub step: usize,
    pub block: usize,
    pub gated: bool,
    pub token_count: usize,
    pub attn_madds: u64,
    pub ffn_madds: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalyticFlops {
    /// Every block on every step over all frames.
    pub dense: u64,
    /// The same run with the gate applied.
    pub sparse: u64,
}

impl AnalyticFlops {
    pub fn speedup(&self) -> f64 {
        self.dense as f64 / self.sparse as f64
    }
}

/// Instrumented cost of a denoising run, in execution order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FlopsLedger {
    pub entries: Vec<LedgerEntry>,
    pub analytic_dense: u64,
    pub analytic_sparse: u64,
}

impl FlopsLedger {
    pub fn new(analytic: AnalyticFlops) -> Self {
        Self {
            entries: Vec::new(),
            analytic_dense: analytic.dense,
            analytic_sparse: analytic.sparse,
        }
    }

    pub fn record(&mut self, step: usize, block: usize, gated: bool, cost: BlockCost) {
        self.entries.push(LedgerEntry {
            step,
            block,
            gated,
            token_count: cost.tokens,
            attn_madds: cost.attn_madds,
            ffn_madds: cost.ffn_madds,
        });
    }

    /// Sum of all counted multiply-adds.
    pub fn counted_madds(&self) -> u64 {
        self.entries
            .iter()
            .map(|e| e.attn_madds + e.ffn_madds)
            .sum()
    }

    /// Analytic cost of the ungated run.
    pub fn dense_madds(&self) -> u64 {
        self.analytic_dense
    }

    /// Counted cost of the run as executed.
    pub fn sparse_madds(&self) -> u64 {
        self.counted_madds()
    }

    pub fn is_consistent(&self) -> bool {
        self.counted_madds() == self.analytic_sparse
    }

    pub fn speedup(&self) -> f64 {
        self.dense_madds() as f64 / self.sparse_madds() as f64
    }
}

/// Closed-form dense and gated totals over all `(step, block)` pairs.
pub fn analytic_flops(
    cfg: &ToyDiTConfig,
    sparsity: Option<&SparsityConfig>,
) -> Result<AnalyticFlops> {
    cfg.validate()?;
    let spatial = cfg.height * cfg.width;
    let dense_block =
        BlockCost::analytic(cfg.token_count(), cfg.model_dim, cfg.ffn_expansion).total();
    let dense = dense_block * (cfg.blocks_total * cfg.steps_total) as u64;

    let Some(sp) = sparsity else {
        return Ok(AnalyticFlops {
            dense,
            sparse: dense,
        });
    };
    super::sampler::check_compatible(cfg, sp)?;
    if sp.first_sparse_block().is_none() {
        return Ok(AnalyticFlops {
            dense,
            sparse: dense,
        });
    }
    let schedule = build_schedule(cfg.frames, sp)?;
    let mut sparse = 0u64;
    for t in 0..cfg.steps_total {
        for l in 0..cfg.blocks_total {
            sparse += if gate(l, t, sp)? {
                // gate(l, t) implies l is a middle block, which the schedule covers
                let frames = schedule.get(l).map_or(cfg.frames, |b| b.anchors.len());
                BlockCost::analytic(frames * spatial, cfg.model_dim, cfg.ffn_expansion).total()
            } else {
                dense_block
            };
        }
    }
    Ok(AnalyticFlops { dense, sparse })
}
