//! Interleaved anchor scheduling and the block/step sparsity gate.

use alloc::vec::Vec;

use crate::error::{config_err, invalid, Result};
use crate::latent::FrameIndexSet;

/// Where sparse execution is allowed and how dense the anchors are.
///
/// Blocks listed in `sensitive_blocks` always run on every frame; the rest
/// form the middle set. The last `tail_steps` denoising steps always run on
/// every frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityConfig {
    stride_n: usize,
    blocks_total: usize,
    steps_total: usize,
    sensitive_blocks: Vec<usize>,
    tail_steps: usize,
    interleave: bool,
}

impl SparsityConfig {
    pub fn new(
        stride_n: usize,
        blocks_total: usize,
        steps_total: usize,
        sensitive_blocks: impl IntoIterator<Item = usize>,
        tail_steps: usize,
    ) -> Result<Self> {
        if stride_n == 0 {
            return Err(config_err!("stride_n must be >= 1"));
        }
        if blocks_total == 0 {
            return Err(config_err!("blocks_total must be >= 1"));
        }
        if steps_total == 0 {
            return Err(config_err!("steps_total must be >= 1"));
        }
        if tail_steps > steps_total {
            return Err(config_err!(
                "tail_steps {tail_steps} exceeds steps_total {steps_total}"
            ));
        }
        let mut sensitive: Vec<usize> = sensitive_blocks.into_iter().collect();
        sensitive.sort_unstable();
        sensitive.dedup();
        if let Some(&bad) = sensitive.iter().find(|&&l| l >= blocks_total) {
            return Err(config_err!(
                "sensitive block {bad} out of range for {blocks_total} blocks"
            ));
        }
        Ok(Self {
            stride_n,
            blocks_total,
            steps_total,
            sensitive_blocks: sensitive,
            tail_steps,
            interleave: true,
        })
    }

    /// Toggles interleaving. With interleaving off every block uses offset 0
    /// (the fixed-anchor ablation).
    pub fn with_interleave(mut self, interleave: bool) -> Self {
        self.interleave = interleave;
        self
    }

    pub fn with_stride(mut self, stride_n: usize) -> Result<Self> {
        if stride_n == 0 {
            return Err(config_err!("stride_n must be >= 1"));
        }
        self.stride_n = stride_n;
        Ok(self)
    }

    pub fn stride_n(&self) -> usize {
        self.stride_n
    }

    /// Anchor ratio `1 / n`.
    pub fn anchor_ratio(&self) -> f64 {
        1.0 / self.stride_n as f64
    }

    pub fn blocks_total(&self) -> usize {
        self.blocks_total
    }

    pub fn steps_total(&self) -> usize {
        self.steps_total
    }

    pub fn sensitive_blocks(&self) -> &[usize] {
        &self.sensitive_blocks
    }

    pub fn tail_steps(&self) -> usize {
        self.tail_steps
    }

    pub fn interleave(&self) -> bool {
        self.interleave
    }

    pub fn is_sensitive(&self, l: usize) -> bool {
        self.sensitive_blocks.binary_search(&l).is_ok()
    }

    pub fn is_middle(&self, l: usize) -> bool {
        l < self.blocks_total && !self.is_sensitive(l)
    }

    pub fn middle_blocks(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.blocks_total).filter(|&l| !self.is_sensitive(l))
    }

    /// Lowest middle block, `None` when every block is sensitive.
    pub fn first_sparse_block(&self) -> Option<usize> {
        self.middle_blocks().next()
    }

    /// Number of leading steps on which sparsity may apply.
    pub fn sparse_steps(&self) -> usize {
        self.steps_total - self.tail_steps
    }

    /// Number of `(block, step)` pairs for which the gate is open.
    pub fn gated_pair_count(&self) -> usize {
        self.middle_blocks().count() * self.sparse_steps()
    }
}

/// Offset `r_l = (l - l0) mod n` of a middle block, `l0` being the first
/// middle block.
pub fn anchor_offset(l: usize, cfg: &SparsityConfig) -> Result<usize> {
    if !cfg.is_middle(l) {
        return Err(invalid!("block {l} is not a middle block"));
    }
    // is_middle(l) guarantees a first sparse block exists and is <= l
    let l0 = cfg.first_sparse_block().unwrap_or(0);
    Ok((l - l0) % cfg.stride_n())
}

/// `{f : (f - r) mod n == 0} ∪ {0, F - 1}`, ascending.
pub fn anchor_set(frames_total: usize, n: usize, r: usize) -> Result<FrameIndexSet> {
    if frames_total < 2 {
        return Err(invalid!(
            "anchor sets need at least 2 frames, got {frames_total}"
        ));
    }
    if n == 0 || r >= n {
        return Err(invalid!("offset {r} must lie in [0, {n})"));
    }
    let class = (r..frames_total).step_by(n);
    FrameIndexSet::new(frames_total, class.chain([0, frames_total - 1]))
}

/// Anchor assignment for one middle block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockAnchors {
    pub block: usize,
    pub offset: usize,
    pub anchors: FrameIndexSet,
}

/// Anchor sets for every middle block at a fixed frame count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorSchedule {
    frames_total: usize,
    by_block: Vec<Option<BlockAnchors>>,
}

impl AnchorSchedule {
    pub fn frames_total(&self) -> usize {
        self.frames_total
    }

    pub fn get(&self, l: usize) -> Option<&BlockAnchors> {
        self.by_block.get(l).and_then(Option::as_ref)
    }

    /// Scheduled blocks in ascending block order.
    pub fn iter(&self) -> impl Iterator<Item = &BlockAnchors> {
        self.by_block.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.iter().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn build_schedule(frames_total: usize, cfg: &SparsityConfig) -> Result<AnchorSchedule> {
    if frames_total < 2 {
        return Err(invalid!(
            "schedules need at least 2 frames, got {frames_total}"
        ));
    }
    if cfg.first_sparse_block().is_none() {
        return Err(config_err!(
            "middle block set is empty; nothing to schedule"
        ));
    }
    let mut by_block = alloc::vec![None; cfg.blocks_total()];
    for l in cfg.middle_blocks() {
        let offset = if cfg.interleave() {
            anchor_offset(l, cfg)?
        } else {
            0
        };
        let anchors = anchor_set(frames_total, cfg.stride_n(), offset)?;
        by_block[l] = Some(BlockAnchors {
            block: l,
            offset,
            anchors,
        });
    }
    Ok(AnchorSchedule {
        frames_total,
        by_block,
    })
}

/// True when block `l` at zero-based step `t` takes the sparse path.
pub fn gate(l: usize, t: usize, cfg: &SparsityConfig) -> Result<bool> {
    if l >= cfg.blocks_total() {
        return Err(invalid!(
            "block {l} out of range for {} blocks",
            cfg.blocks_total()
        ));
    }
    if t >= cfg.steps_total() {
        return Err(invalid!(
            "step {t} out of range for {} steps",
            cfg.steps_total()
        ));
    }
    Ok(cfg.is_middle(l) && t < cfg.sparse_steps())
}
