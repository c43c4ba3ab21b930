//! Label-preserving training augmentation: horizontal flips and small
//! rotations with reflected borders.

use crate::imaging;
use image::RgbImage;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentationPolicy {
    pub horizontal_flip_prob: f64,
    pub rotation_range_degrees: f64,
    pub enabled: bool,
}

impl Default for AugmentationPolicy {
    fn default() -> Self {
        AugmentationPolicy {
            horizontal_flip_prob: 0.5,
            rotation_range_degrees: 15.0,
            enabled: true,
        }
    }
}

/// Applies the policy with draws from `rng`. Disabled policies return the
/// input unchanged. The rng always advances the same number of draws so
/// downstream sampling stays aligned across configurations.
pub fn augment(img: &RgbImage, policy: &AugmentationPolicy, rng: &mut ChaCha12Rng) -> RgbImage {
    let flip_draw: f64 = rng.random_range(0.0..1.0);
    let angle: f64 =
        rng.random_range(-policy.rotation_range_degrees..=policy.rotation_range_degrees);
    if !policy.enabled {
        return img.clone();
    }
    let mut out = if flip_draw < policy.horizontal_flip_prob {
        imaging::flip_horizontal(img)
    } else {
        img.clone()
    };
    if angle.abs() > 1e-9 {
        out = imaging::rotate_reflect(&out, angle);
    }
    out
}
