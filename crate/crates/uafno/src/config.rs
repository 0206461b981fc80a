use lmd_autodiff::PadMode;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Border handling of the convolutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    Zero,
    /// Periodic in x, mirrored in y, like the physical domain.
    #[default]
    PeriodicXMirrorY,
}

impl From<Padding> for PadMode {
    fn from(p: Padding) -> Self {
        match p {
            Padding::Zero => PadMode::Zero,
            Padding::PeriodicXMirrorY => PadMode::PeriodicXMirrorY,
        }
    }
}

/// Architecture of a U-AFNO. Encoder level `k` has `base_channels * 2^k`
/// channels; the bottleneck works on the deepest level's channels at
/// `height / 2^enc_levels` by `width / 2^enc_levels` tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UafnoConfig {
    pub in_channels: usize,
    pub height: usize,
    pub width: usize,
    pub enc_levels: usize,
    pub base_channels: usize,
    pub n_blocks: usize,
    pub heads: usize,
    pub mlp_hidden: usize,
    pub patch: usize,
    pub shrink: f64,
    pub padding: Padding,
}

impl Default for UafnoConfig {
    fn default() -> Self {
        UafnoConfig::desk()
    }
}

impl UafnoConfig {
    /// Small configuration for 64x64 fields.
    pub fn desk() -> Self {
        UafnoConfig {
            in_channels: 3,
            height: 64,
            width: 64,
            enc_levels: 3,
            base_channels: 16,
            n_blocks: 2,
            heads: 4,
            mlp_hidden: 128,
            patch: 1,
            shrink: 0.0,
            padding: Padding::default(),
        }
    }

    /// Full-size configuration: 3x512x512 fields, 256x64x64 latent,
    /// 12 blocks with 16 heads and 3072 hidden units.
    pub fn full_scale() -> Self {
        UafnoConfig {
            height: 512,
            width: 512,
            base_channels: 64,
            n_blocks: 12,
            heads: 16,
            mlp_hidden: 3072,
            ..UafnoConfig::desk()
        }
    }

    /// Channels at encoder level `k`.
    pub fn channels(&self, k: usize) -> usize {
        self.base_channels << k
    }

    pub fn latent_channels(&self) -> usize {
        self.channels(self.enc_levels - 1)
    }

    pub fn latent_dims(&self) -> (usize, usize) {
        (self.height >> self.enc_levels, self.width >> self.enc_levels)
    }

    pub fn head_dim(&self) -> usize {
        self.latent_channels() / self.heads
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.in_channels == 0 || self.base_channels == 0 || self.mlp_hidden == 0 || self.heads == 0 {
            return bad("channel counts, heads and mlp width must be positive".into());
        }
        if self.enc_levels == 0 || self.enc_levels > 16 {
            return bad(format!("enc_levels {} out of range", self.enc_levels));
        }
        if !self.height.is_power_of_two() || !self.width.is_power_of_two() {
            return bad(format!("input {}x{} is not power-of-two", self.height, self.width));
        }
        let (lh, lw) = self.latent_dims();
        if lh == 0 || lw == 0 {
            return bad(format!(
                "input {}x{} too small for {} halvings",
                self.height, self.width, self.enc_levels
            ));
        }
        if self.latent_channels() % self.heads != 0 {
            return bad(format!(
                "{} latent channels not divisible by {} heads",
                self.latent_channels(),
                self.heads
            ));
        }
        if self.patch != 1 {
            return bad(format!("patch size {} unsupported; only 1", self.patch));
        }
        if !(self.shrink >= 0.0 && self.shrink.is_finite()) {
            return bad(format!("shrink {} must be finite and non-negative", self.shrink));
        }
        Ok(())
    }
}

/// Activation shapes through the network, `[C, H, W]` each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapePlan {
    pub input: [usize; 3],
    pub skips: Vec<[usize; 3]>,
    pub latent: [usize; 3],
    pub output: [usize; 3],
}

pub fn shape_plan(cfg: &UafnoConfig) -> Result<ShapePlan> {
    cfg.validate()?;
    let skips = (0..cfg.enc_levels)
        .map(|k| [cfg.channels(k), cfg.height >> k, cfg.width >> k])
        .collect();
    let (lh, lw) = cfg.latent_dims();
    Ok(ShapePlan {
        input: [cfg.in_channels, cfg.height, cfg.width],
        skips,
        latent: [cfg.latent_channels(), lh, lw],
        output: [cfg.in_channels, cfg.height, cfg.width],
    })
}
