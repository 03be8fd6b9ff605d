use alloc::vec::Vec;

use super::block::timestep_embedding;
use super::flops::analytic_flops;
use super::{gated_block_apply, BlockWeights, FlopsLedger, ToyDiTConfig};
use crate::error::{config_err, invalid, Result};
use crate::latent::LatentSequence;
use crate::schedule::{build_schedule, SparsityConfig};

/// A toy model: configuration plus generated weights for every block.
#[derive(Debug, Clone)]
pub struct ToyDiT {
    config: ToyDiTConfig,
    blocks: Vec<BlockWeights>,
}

impl ToyDiT {
    pub fn new(config: ToyDiTConfig) -> Result<Self> {
        config.validate()?;
        let blocks = (0..config.blocks_total)
            .map(|l| BlockWeights::generate(&config, l))
            .collect();
        Ok(Self { config, blocks })
    }

    pub fn config(&self) -> &ToyDiTConfig {
        &self.config
    }

    pub fn block(&self, l: usize) -> &BlockWeights {
        &self.blocks[l]
    }
}

/// Output of a sampling run.
#[derive(Debug, Clone)]
pub struct Denoised {
    pub latent: LatentSequence,
    pub ledger: FlopsLedger,
}

/// Noise levels `sigma_t = 1 - t / T` for `t = 0..=T`.
pub fn sigma_schedule(steps: usize) -> Vec<f64> {
    (0..=steps).map(|t| 1.0 - t as f64 / steps as f64).collect()
}

pub(crate) fn check_compatible(cfg: &ToyDiTConfig, sp: &SparsityConfig) -> Result<()> {
    if sp.blocks_total() != cfg.blocks_total {
        return Err(config_err!(
            "sparsity config has {} blocks, model has {}",
            sp.blocks_total(),
            cfg.blocks_total
        ));
    }
    if sp.steps_total() != cfg.steps_total {
        return Err(config_err!(
            "sparsity config has {} steps, model has {}",
            sp.steps_total(),
            cfg.steps_total
        ));
    }
    Ok(())
}

/// Euler sampling: `z <- z - (sigma_t - sigma_{t+1}) * model(z, t)`, where
/// the model applies every block through [`gated_block_apply`]. With
/// `sparsity = None` every block runs densely.
pub fn denoise(
    model: &ToyDiT,
    init_noise: &LatentSequence,
    sparsity: Option<&SparsityConfig>,
) -> Result<Denoised> {
    denoise_with_probe(model, init_noise, sparsity, |_, _, _| {})
}

/// [`denoise`], calling `probe(step, block, output)` after every block.
pub fn denoise_with_probe(
    model: &ToyDiT,
    init_noise: &LatentSequence,
    sparsity: Option<&SparsityConfig>,
    mut probe: impl FnMut(usize, usize, &LatentSequence),
) -> Result<Denoised> {
    let cfg = model.config();
    let expected = (cfg.frames, cfg.height, cfg.width, cfg.model_dim);
    if init_noise.shape() != expected {
        return Err(invalid!(
            "initial latent has shape {:?}, model expects {expected:?}",
            init_noise.shape()
        ));
    }
    // an all-dense configuration stands in for "no sparsity"
    let dense_cfg;
    let sp = match sparsity {
        Some(sp) => {
            check_compatible(cfg, sp)?;
            sp
        }
        None => {
            dense_cfg = SparsityConfig::new(
                1,
                cfg.blocks_total,
                cfg.steps_total,
                0..cfg.blocks_total,
                cfg.steps_total,
            )?;
            &dense_cfg
        }
    };
    let schedule = match sp.first_sparse_block() {
        Some(_) if sp.sparse_steps() > 0 => Some(build_schedule(cfg.frames, sp)?),
        _ => None,
    };

    let mut ledger = FlopsLedger::new(analytic_flops(cfg, sparsity)?);
    let sigmas = sigma_schedule(cfg.steps_total);
    let mut z = init_noise.clone();
    for t in 0..cfg.steps_total {
        let embed = timestep_embedding(sigmas[t] * 1000.0, cfg.model_dim);
        let mut h = z.clone();
        for l in 0..cfg.blocks_total {
            h = gated_block_apply(
                &h,
                l,
                t,
                schedule.as_ref(),
                sp,
                model.block(l),
                &embed,
                &mut ledger,
            )?;
            probe(t, l, &h);
        }
        let dt = (sigmas[t] - sigmas[t + 1]) as f32;
        let data: Vec<f32> = z
            .data()
            .iter()
            .zip(h.data())
            .map(|(zv, hv)| zv - dt * hv)
            .collect();
        z = LatentSequence::new(cfg.frames, cfg.height, cfg.width, cfg.model_dim, data)?;
    }
    Ok(Denoised { latent: z, ledger })
}
