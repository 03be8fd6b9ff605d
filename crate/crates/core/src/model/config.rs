use crate::error::{config_err, Result};
use crate::latent::LatentSequence;
use crate::rng::SeedStream;

/// Shape and seed of the toy model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyDiTConfig {
    pub blocks_total: usize,
    pub model_dim: usize,
    pub heads: usize,
    pub ffn_expansion: usize,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub steps_total: usize,
    pub weight_seed: u64,
}

impl Default for ToyDiTConfig {
    fn default() -> Self {
        Self {
            blocks_total: 12,
            model_dim: 64,
            heads: 4,
            ffn_expansion: 4,
            frames: 16,
            height: 8,
            width: 8,
            steps_total: 4,
            weight_seed: 0,
        }
    }
}

impl ToyDiTConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("blocks_total", self.blocks_total),
            ("model_dim", self.model_dim),
            ("heads", self.heads),
            ("ffn_expansion", self.ffn_expansion),
            ("frames", self.frames),
            ("height", self.height),
            ("width", self.width),
            ("steps_total", self.steps_total),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(config_err!("{name} must be >= 1"));
            }
        }
        if !self.model_dim.is_multiple_of(self.heads) {
            return Err(config_err!(
                "model_dim {} is not divisible by heads {}",
                self.model_dim,
                self.heads
            ));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.model_dim / self.heads
    }

    /// Dense token count `F * H * W`.
    pub fn token_count(&self) -> usize {
        self.frames * self.height * self.width
    }

    /// Standard-normal starting latent for sampling seed `seed`.
    pub fn init_noise(&self, seed: u64) -> Result<LatentSequence> {
        let mut rng = SeedStream::new(seed, u64::MAX);
        LatentSequence::from_fn(
            self.frames,
            self.height,
            self.width,
            self.model_dim,
            |_, _, _, _| rng.normal(),
        )
    }
}
