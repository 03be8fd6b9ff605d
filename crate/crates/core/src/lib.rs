//! Frame-interleaved sparse execution for video diffusion transformers.
//!
//! Sparse blocks evaluate only a strided subset of latent frames (the
//! anchors) and rebuild the skipped frames by linear interpolation. Anchor
//! offsets rotate from block to block so every frame is recomputed exactly
//! once per `n` sparse blocks, and a gate keeps sensitive blocks and the
//! final denoising steps dense.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod diagnostics;
mod error;
pub mod latent;
pub mod model;
pub mod rng;
pub mod schedule;

pub use error::{Error, Result};
pub use latent::{frame_l2_distance, gather, reconstruct, FrameIndexSet, LatentSequence};
pub use schedule::{
    anchor_offset, anchor_set, build_schedule, gate, AnchorSchedule, BlockAnchors, SparsityConfig,
};
