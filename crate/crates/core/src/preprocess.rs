//! Intensity normalization into the `[0, 1]` model domain and label encoding.
//!
//! Two input transforms are provided: a linear map `f / 65535`, and a
//! decibel-style log map `10 * log10(f^2 + c)` with a noise-reduction
//! coefficient `c` (default -83). Log arguments below `log_floor` are floored,
//! and the decibel value is mapped affinely from `log_range` onto `[0, 1]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{ClassMap, CoastMask, FloatRaster, RasterImage};

pub const U16_MAX: f64 = 65535.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InputMode {
    #[default]
    Linear,
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub mode: InputMode,
    pub noise_coefficient: f64,
    pub log_floor: f64,
    pub log_range: (f64, f64),
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            mode: InputMode::Linear,
            noise_coefficient: -83.0,
            log_floor: 1.0,
            log_range: (0.0, 96.33),
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.log_floor > 0.0) || !self.log_floor.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "log_floor must be > 0, got {}",
                self.log_floor
            )));
        }
        let (lo, hi) = self.log_range;
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "log_range needs lo < hi, got ({lo}, {hi})"
            )));
        }
        if !self.noise_coefficient.is_finite() {
            return Err(Error::InvalidConfig(
                "noise_coefficient must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// `f / 65535`.
#[inline]
pub fn linear_value(f: u16) -> f64 {
    f as f64 / U16_MAX
}

/// Decibel value `10 * log10(max(f^2 + c, floor))` before range mapping.
#[inline]
pub fn log_decibels(f: u16, cfg: &PreprocessConfig) -> f64 {
    let f = f as f64;
    10.0 * (f * f + cfg.noise_coefficient).max(cfg.log_floor).log10()
}

/// Log transform mapped from `log_range` onto `[0, 1]`, clamped.
#[inline]
pub fn log_value(f: u16, cfg: &PreprocessConfig) -> f64 {
    let (lo, hi) = cfg.log_range;
    ((log_decibels(f, cfg) - lo) / (hi - lo)).clamp(0.0, 1.0)
}

fn map_pixels(img: &RasterImage, f: impl Fn(u16) -> f64 + Sync) -> FloatRaster {
    let data: Vec<f32> = img.data().par_iter().map(|&v| f(v) as f32).collect();
    FloatRaster::from_vec_unchecked(img.width(), img.height(), 1, data)
}

pub fn normalize_linear(img: &RasterImage) -> FloatRaster {
    map_pixels(img, linear_value)
}

pub fn normalize_log(img: &RasterImage, cfg: &PreprocessConfig) -> Result<FloatRaster> {
    cfg.validate()?;
    Ok(map_pixels(img, |v| log_value(v, cfg)))
}

/// Normalize with the transform selected by `mode`.
pub fn normalize(
    img: &RasterImage,
    mode: InputMode,
    cfg: &PreprocessConfig,
) -> Result<FloatRaster> {
    match mode {
        InputMode::Linear => Ok(normalize_linear(img)),
        InputMode::Log => normalize_log(img, cfg),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelSmoothingConfig {
    pub kernel_radius: usize,
    pub peak: f32,
}

impl Default for LabelSmoothingConfig {
    fn default() -> Self {
        Self {
            kernel_radius: 3,
            peak: 1.0,
        }
    }
}

impl LabelSmoothingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.peak > 0.0 && self.peak <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "label peak must be in (0, 1], got {}",
                self.peak
            )));
        }
        Ok(())
    }
}

/// Soft coastline labels: `peak * max(0, 1 - d / (radius + 1))`, where `d` is
/// the Chebyshev distance to the nearest coast pixel.
pub fn smooth_labels(coast: &CoastMask, cfg: &LabelSmoothingConfig) -> Result<FloatRaster> {
    cfg.validate()?;
    let (w, h) = (coast.width(), coast.height());
    let reach = cfg.kernel_radius + 1;

    // Horizontal distance to the nearest coast pixel in the same row, capped at `reach`.
    let mut row_dist = vec![reach; w * h];
    row_dist.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let mut last: Option<usize> = None;
        #[allow(clippy::needless_range_loop)]
        for x in 0..w {
            if coast.get(x, y) {
                last = Some(x);
            }
            if let Some(l) = last {
                row[x] = (x - l).min(reach);
            }
        }
        last = None;
        for x in (0..w).rev() {
            if coast.get(x, y) {
                last = Some(x);
            }
            if let Some(l) = last {
                row[x] = row[x].min(l - x);
            }
        }
    });

    let denom = reach as f32;
    let mut data = vec![0f32; w * h];
    data.par_chunks_mut(w).enumerate().for_each(|(y, out)| {
        let y0 = y.saturating_sub(cfg.kernel_radius);
        let y1 = (y + cfg.kernel_radius).min(h - 1);
        for (x, o) in out.iter_mut().enumerate() {
            let mut d = reach;
            for yy in y0..=y1 {
                d = d.min(row_dist[yy * w + x].max(yy.abs_diff(y)));
            }
            if d < reach {
                *o = cfg.peak * (1.0 - d as f32 / denom);
            }
        }
    });
    Ok(FloatRaster::from_vec_unchecked(w, h, 1, data))
}

/// One-hot `(sea, no-data, land)` channels from a class map, optionally followed
/// by a fourth smoothed-coastline channel.
pub fn encode_labels(
    classes: &ClassMap,
    coast: &CoastMask,
    coast_channel: Option<&LabelSmoothingConfig>,
) -> Result<FloatRaster> {
    if classes.width() != coast.width() || classes.height() != coast.height() {
        return Err(Error::DimensionMismatch(format!(
            "class map {}x{} vs coast mask {}x{}",
            classes.width(),
            classes.height(),
            coast.width(),
            coast.height()
        )));
    }
    let smoothed = coast_channel
        .map(|cfg| smooth_labels(coast, cfg))
        .transpose()?;
    let ch = if smoothed.is_some() { 4 } else { 3 };
    let mut data = vec![0f32; classes.data().len() * ch];
    for (i, &class) in classes.data().iter().enumerate() {
        data[i * ch + class as usize] = 1.0;
        if let Some(s) = &smoothed {
            data[i * ch + 3] = s.data()[i];
        }
    }
    Ok(FloatRaster::from_vec_unchecked(
        classes.width(),
        classes.height(),
        ch,
        data,
    ))
}

/// Number of distinct `a x b` crop positions in a `w x h` image, computed as
/// `(w - a) * (h - b)`.
///
/// Note this is zero when the crop equals the image, although one crop exists;
/// the exact position count is `(w - a + 1) * (h - b + 1)`.
pub fn count_unique_crops(w: u64, h: u64, a: u64, b: u64) -> Result<u64> {
    if a > w || b > h {
        return Err(Error::CropTooLarge {
            crop_w: a as usize,
            crop_h: b as usize,
            width: w as usize,
            height: h as usize,
        });
    }
    Ok((w - a) * (h - b))
}
