//! A miniature video diffusion transformer and its frame-sparse executor.
//!
//! Each block is full spatio-temporal self-attention followed by a GELU FFN,
//! both pre-normalised and modulated by a timestep embedding. The sampler is
//! a plain Euler loop over a linear sigma schedule.

mod block;
mod config;
mod executor;
mod flops;
mod ops;
mod sampler;
mod weights;

pub use block::{block_forward, timestep_embedding};
pub use config::ToyDiTConfig;
pub use executor::gated_block_apply;
pub use flops::{analytic_flops, AnalyticFlops, BlockCost, FlopsLedger, LedgerEntry};
pub use sampler::{denoise, denoise_with_probe, sigma_schedule, Denoised, ToyDiT};
pub use weights::BlockWeights;
