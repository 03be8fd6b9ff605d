use alloc::vec::Vec;

use super::block::block_forward_counted;
use super::{BlockWeights, FlopsLedger};
use crate::error::{contract, Result};
use crate::latent::{gather, reconstruct, LatentSequence};
use crate::schedule::{gate, AnchorSchedule, SparsityConfig};

/// Runs block `l` at step `t`, sparsely when the gate is open.
///
/// Open gate: the block runs on the gathered anchor frames only. Anchor
/// frames take the block output verbatim; every skipped frame keeps its own
/// input and adds the block update `Φ(x) - x` interpolated from the
/// neighbouring anchors. Since interpolation is linear and anchors carry
/// exact intermediate states, this is the same as gathering and
/// reconstructing the attention and FFN branches separately.
///
/// Closed gate: the block runs on all frames. The counted cost is appended
/// to `ledger` either way.
#[allow(clippy::too_many_arguments)]
pub fn gated_block_apply(
    x: &LatentSequence,
    l: usize,
    t: usize,
    schedule: Option<&AnchorSchedule>,
    cfg: &SparsityConfig,
    w: &BlockWeights,
    t_embed: &[f32],
    ledger: &mut FlopsLedger,
) -> Result<LatentSequence> {
    if !gate(l, t, cfg)? {
        let (out, cost) = block_forward_counted(x, w, t_embed)?;
        ledger.record(t, l, false, cost);
        return Ok(out);
    }

    let block = schedule.and_then(|s| s.get(l)).ok_or_else(|| {
        contract!("gate open for block {l} but the schedule has no anchors for it")
    })?;
    let anchors = &block.anchors;
    if anchors.frames_total() != x.frames() {
        return Err(contract!(
            "schedule built for {} frames, input has {}",
            anchors.frames_total(),
            x.frames()
        ));
    }
    let anchors_in = gather(x, anchors)?;
    let (anchors_out, cost) = block_forward_counted(&anchors_in, w, t_embed)?;
    ledger.record(t, l, true, cost);

    let update: Vec<f32> = anchors_out
        .data()
        .iter()
        .zip(anchors_in.data())
        .map(|(y, x)| y - x)
        .collect();
    let update = LatentSequence::new(anchors.len(), x.height(), x.width(), x.channels(), update)?;
    let update = reconstruct(&update, anchors, x.frames())?;

    let mut out: Vec<f32> = x
        .data()
        .iter()
        .zip(update.data())
        .map(|(a, b)| a + b)
        .collect();
    let len = x.frame_len();
    for (j, f) in anchors.iter().enumerate() {
        out[f * len..(f + 1) * len].copy_from_slice(anchors_out.frame(j));
    }
    LatentSequence::new(x.frames(), x.height(), x.width(), x.channels(), out)
}
