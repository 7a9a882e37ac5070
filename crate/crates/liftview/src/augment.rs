//! Image augmentation applied during policy training: random pixel shift
//! (replicate padding) and color jitter over brightness, contrast and
//! saturation.
//!
//! One [`AugmentDraw`] holds the sampled shift offsets and color factors; the
//! same draw is applied to every camera image of one multi-view observation,
//! and a draw can be re-derived from a recorded id for consistent replay.

use crate::camgeo::Interval;
use crate::error::{LiftError, Result};
use crate::raster::Image;
use crate::rng::child_rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Maximum pixel shift per axis.
    pub max_shift: u32,
    pub brightness: Interval,
    pub contrast: Interval,
    pub saturation: Interval,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            max_shift: 4,
            brightness: Interval::new(0.7, 1.3),
            contrast: Interval::new(0.7, 1.3),
            saturation: Interval::new(0.7, 1.3),
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        for (iv, name) in [
            (self.brightness, "brightness"),
            (self.contrast, "contrast"),
            (self.saturation, "saturation"),
        ] {
            iv.validate(name).map_err(|e| LiftError::Config(e.to_string()))?;
            if iv.min <= 0.0 {
                return Err(LiftError::Config(format!("{name} factors must be positive")));
            }
        }
        Ok(())
    }

    /// Identity configuration: no shift, all factors pinned at 1.
    pub fn identity() -> Self {
        AugmentConfig {
            max_shift: 0,
            brightness: Interval::fixed(1.0),
            contrast: Interval::fixed(1.0),
            saturation: Interval::fixed(1.0),
        }
    }
}

/// One sampled augmentation: integer shift plus color factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentDraw {
    pub shift_x: i32,
    pub shift_y: i32,
    pub brightness: f32,
    pub contrast: f32,
    pub saturation: f32,
}

impl AugmentDraw {
    pub const IDENTITY: AugmentDraw = AugmentDraw {
        shift_x: 0,
        shift_y: 0,
        brightness: 1.0,
        contrast: 1.0,
        saturation: 1.0,
    };

    pub fn sample(config: &AugmentConfig, rng: &mut ChaCha8Rng) -> Self {
        let m = config.max_shift as i32;
        let (shift_x, shift_y) = if m == 0 {
            (0, 0)
        } else {
            (rng.random_range(-m..=m), rng.random_range(-m..=m))
        };
        AugmentDraw {
            shift_x,
            shift_y,
            brightness: config.brightness.sample(rng) as f32,
            contrast: config.contrast.sample(rng) as f32,
            saturation: config.saturation.sample(rng) as f32,
        }
    }

    /// Recreate the draw recorded under `draw_id`.
    pub fn from_id(config: &AugmentConfig, draw_id: u64) -> Self {
        let mut rng = child_rng(draw_id, "augdraw", 0);
        AugmentDraw::sample(config, &mut rng)
    }

    /// Shift then jitter, the composition used everywhere in training.
    pub fn apply(&self, img: &Image) -> Image {
        let shifted = shift_image(img, self.shift_x, self.shift_y);
        jitter_image(&shifted, self.brightness, self.contrast, self.saturation)
    }
}

/// Shift content by `(dx, dy)` pixels with replicate padding at the borders;
/// identical to padding by the shift magnitude and cropping at the opposite
/// offset. Output dimensions equal input dimensions.
pub fn shift_image(img: &Image, dx: i32, dy: i32) -> Image {
    if dx == 0 && dy == 0 {
        return img.clone();
    }
    let w = img.width as i32;
    let h = img.height as i32;
    let mut out = Image::filled(img.width, img.height, [0.0; 3]);
    for y in 0..h {
        let sy = (y - dy).clamp(0, h - 1) as usize;
        for x in 0..w {
            let sx = (x - dx).clamp(0, w - 1) as usize;
            out.set_pixel(x as usize, y as usize, img.pixel(sx, sy));
        }
    }
    out
}

/// Pad-and-crop shift with a uniformly drawn offset.
pub fn random_shift(img: &Image, max_shift: u32, rng: &mut ChaCha8Rng) -> Image {
    let m = max_shift as i32;
    if m == 0 {
        return img.clone();
    }
    let dx = rng.random_range(-m..=m);
    let dy = rng.random_range(-m..=m);
    shift_image(img, dx, dy)
}

/// Brightness, then contrast (blend toward the image mean intensity), then
/// saturation (blend toward per-pixel gray), then clamp to [0,1].
pub fn jitter_image(img: &Image, brightness: f32, contrast: f32, saturation: f32) -> Image {
    let mut out = img.clone();
    // Factor-1 stages are skipped so the identity configuration is exact.
    if brightness != 1.0 {
        for v in out.data.iter_mut() {
            *v *= brightness;
        }
    }
    if contrast != 1.0 {
        let mean = out.data.iter().sum::<f32>() / out.data.len() as f32;
        for v in out.data.iter_mut() {
            *v = mean + (*v - mean) * contrast;
        }
    }
    if saturation != 1.0 {
        for px in out.data.chunks_exact_mut(3) {
            let gray = (px[0] + px[1] + px[2]) / 3.0;
            for v in px.iter_mut() {
                *v = gray + (*v - gray) * saturation;
            }
        }
    }
    for v in out.data.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    out
}

/// Jitter with factors drawn from the config ranges.
pub fn color_jitter(img: &Image, config: &AugmentConfig, rng: &mut ChaCha8Rng) -> Image {
    let b = config.brightness.sample(rng) as f32;
    let c = config.contrast.sample(rng) as f32;
    let s = config.saturation.sample(rng) as f32;
    jitter_image(img, b, c, s)
}
