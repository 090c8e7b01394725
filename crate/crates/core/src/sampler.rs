//! Uniform Monte Carlo collocation points, redrawn every epoch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::nuclei;
use crate::physics::{CollocationBatch, CollocationPoint};

/// Minimum distance kept between a sample and either nucleus.
pub const NUCLEUS_EXCLUSION: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub n_points: usize,
    pub box_half_width: f64,
    pub r_cut: f64,
    pub r_range: [f64; 2],
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_points: 20_000,
            box_half_width: 18.0,
            r_cut: 17.5,
            r_range: [0.2, 3.0],
            seed: 0,
        }
    }
}

impl SamplerConfig {
    /// Settings used in the original large-scale runs (10⁶ points per epoch).
    pub fn full_scale() -> Self {
        Self {
            n_points: 1_000_000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.box_half_width > 0.0) {
            return Err(Error::InvalidConfig("box_half_width must be positive".into()));
        }
        if !(self.box_half_width * 3f64.sqrt() > self.r_cut) {
            return Err(Error::InvalidConfig(format!(
                "r_cut = {} is unreachable inside a box of half-width {}",
                self.r_cut, self.box_half_width
            )));
        }
        if !(self.r_range[0] > 0.0 && self.r_range[1] >= self.r_range[0]) {
            return Err(Error::InvalidConfig(format!(
                "R range [{}, {}] must satisfy 0 < min <= max",
                self.r_range[0], self.r_range[1]
            )));
        }
        Ok(())
    }

    /// Generator for one epoch: the seed selects the key, the epoch the stream.
    pub fn rng(&self, epoch: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(epoch);
        rng
    }
}

fn near_nucleus(r: [f64; 3], half_separation: f64) -> bool {
    nuclei(half_separation).iter().any(|n| {
        let d2 = (r[0] - n[0]).powi(2) + (r[1] - n[1]).powi(2) + (r[2] - n[2]).powi(2);
        d2 < NUCLEUS_EXCLUSION * NUCLEUS_EXCLUSION
    })
}

/// Draws the batch for `epoch`. Identical `(seed, epoch)` give identical batches.
pub fn sample_batch(config: &SamplerConfig, epoch: u64) -> CollocationBatch {
    let mut rng = config.rng(epoch);
    let w = config.box_half_width;
    let [r_min, r_max] = config.r_range;
    let mut points = Vec::with_capacity(config.n_points);
    while points.len() < config.n_points {
        let r = [
            rng.random_range(-w..w),
            rng.random_range(-w..w),
            rng.random_range(-w..w),
        ];
        let half_separation = if r_max > r_min { rng.random_range(r_min..r_max) } else { r_min };
        if near_nucleus(r, half_separation) {
            continue;
        }
        points.push(CollocationPoint { r, half_separation });
    }
    CollocationBatch::new(points, config.r_cut)
}
