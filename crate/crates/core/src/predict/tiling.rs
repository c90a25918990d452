//! Floating-window inference.
//!
//! For each scale `s`, windows of side `round(tile_side * s)` are laid out at
//! stride `round(stride * s)` along each axis (the last window is clamped to
//! the border, and a window larger than the image starts at 0 and reads
//! reflected pixels). Each window is resampled to `tile_side`, predicted,
//! resampled back and accumulated. Accumulation visits tiles in ascending
//! `(scale, row, col)` order for every pixel, so the result does not depend
//! on the number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{gaussian_smooth, predict_tile, Model, TileContext};
use crate::error::{Error, Result};
use crate::raster::{FloatRaster, Rect};
use crate::resample::{lerp, reflect, AxisTaps};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Raw sum of overlapping predictions.
    Sum,
    /// Sum divided by the number of windows covering the pixel.
    #[default]
    CoverageMean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TilingConfig {
    pub tile_side: usize,
    pub stride: usize,
    pub scales: Vec<f64>,
    pub smoothing_sigma: f64,
    pub aggregation: Aggregation,
}

impl Default for TilingConfig {
    fn default() -> Self {
        Self {
            tile_side: 512,
            stride: 256,
            scales: vec![1.0, 2.0, 3.0],
            smoothing_sigma: 2.0,
            aggregation: Aggregation::CoverageMean,
        }
    }
}

impl TilingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tile_side == 0 || self.stride == 0 || self.stride > self.tile_side {
            return Err(Error::InvalidConfig(format!(
                "tiling needs 0 < stride <= tile_side, got stride {} and tile_side {}",
                self.stride, self.tile_side
            )));
        }
        if self.scales.is_empty() || self.scales.iter().any(|&s| !(s >= 1.0) || !s.is_finite()) {
            return Err(Error::InvalidConfig(
                "tiling scales must be non-empty and >= 1".into(),
            ));
        }
        if !(self.smoothing_sigma >= 0.0) || !self.smoothing_sigma.is_finite() {
            return Err(Error::InvalidConfig("smoothing_sigma must be >= 0".into()));
        }
        Ok(())
    }

    /// Window side and stride in image pixels at `scale`.
    pub fn window_at(&self, scale: f64) -> (usize, usize) {
        let side = ((self.tile_side as f64 * scale).round() as usize).max(1);
        let step = ((self.stride as f64 * scale).round() as usize).max(1);
        (side, step)
    }
}

/// Window origins along an axis of length `len`; the last window ends at the border.
pub fn tile_positions(len: usize, window: usize, stride: usize) -> Vec<usize> {
    if len <= window {
        return vec![0];
    }
    let last = len - window;
    let mut out = vec![0];
    let mut p = 0;
    while p < last {
        p = (p + stride).min(last);
        out.push(p);
    }
    out
}

/// Resample a (possibly out-of-bounds) square window of the image to `tile x tile`.
fn sample_window(image: &FloatRaster, window: Rect, tile: usize, taps: &AxisTaps) -> FloatRaster {
    let ch = image.channels();
    let xs: Vec<(usize, usize)> = (0..tile)
        .map(|d| {
            let at = |o: usize| reflect((window.x + o) as isize, image.width());
            (at(taps.lo[d]), at(taps.hi[d]))
        })
        .collect();
    let mut out = Vec::with_capacity(tile * tile * ch);
    for d in 0..tile {
        let at = |o: usize| reflect((window.y + o) as isize, image.height());
        let (r0, r1, fy) = (
            image.row(at(taps.lo[d])),
            image.row(at(taps.hi[d])),
            taps.frac[d],
        );
        for (x, &(a, b)) in xs.iter().enumerate() {
            let fx = taps.frac[x];
            for c in 0..ch {
                let top = lerp(r0[a * ch + c], r0[b * ch + c], fx);
                let bottom = lerp(r1[a * ch + c], r1[b * ch + c], fx);
                out.push(lerp(top, bottom, fy));
            }
        }
    }
    FloatRaster::from_vec_unchecked(tile, tile, ch, out)
}

/// Multi-scale floating-window prediction of a whole image, then Gaussian smoothing.
pub fn tiled_predict(
    model: &Model,
    image: &FloatRaster,
    cfg: &TilingConfig,
) -> Result<FloatRaster> {
    cfg.validate()?;
    if image.channels() != 1 {
        return Err(Error::ChannelMismatch {
            expected: 1,
            found: image.channels(),
        });
    }
    let (w, h) = (image.width(), image.height());
    let ch = model.head().channels();
    let tile = cfg.tile_side;
    let sequential = model.predictor.max_concurrency() == Some(1);
    let mut acc = vec![0f32; w * h * ch];
    let mut count = vec![0u32; w * h];

    for (scale_index, &scale) in cfg.scales.iter().enumerate() {
        let (side, step) = cfg.window_at(scale);
        let down = AxisTaps::new(side, tile);
        let up = AxisTaps::new(tile, side);
        let xs = tile_positions(w, side, step);
        for (row, &y0) in tile_positions(h, side, step).iter().enumerate() {
            let ctxs: Vec<TileContext> = xs
                .iter()
                .enumerate()
                .map(|(col, &x0)| TileContext {
                    scale_index,
                    scale,
                    row,
                    col,
                    window: Rect::new(x0, y0, side, side),
                })
                .collect();
            let run = |ctx: &TileContext| {
                predict_tile(model, &sample_window(image, ctx.window, tile, &down), ctx)
            };
            let tiles: Vec<FloatRaster> = if sequential {
                ctxs.iter().map(run).collect::<Result<_>>()?
            } else {
                ctxs.par_iter().map(run).collect::<Result<_>>()?
            };

            let y_end = (y0 + side).min(h);
            acc[y0 * w * ch..y_end * w * ch]
                .par_chunks_mut(w * ch)
                .zip(count[y0 * w..y_end * w].par_chunks_mut(w))
                .enumerate()
                .for_each(|(wy, (arow, crow))| {
                    let (ly, hy, fy) = (up.lo[wy], up.hi[wy], up.frac[wy]);
                    for (t, ctx) in tiles.iter().zip(&ctxs) {
                        let (r0, r1) = (t.row(ly), t.row(hy));
                        let x0 = ctx.window.x;
                        for wx in 0..(x0 + side).min(w) - x0 {
                            let (a, b, fx) = (up.lo[wx] * ch, up.hi[wx] * ch, up.frac[wx]);
                            let dst = (x0 + wx) * ch;
                            for c in 0..ch {
                                let top = lerp(r0[a + c], r0[b + c], fx);
                                let bottom = lerp(r1[a + c], r1[b + c], fx);
                                arow[dst + c] += lerp(top, bottom, fy);
                            }
                            crow[x0 + wx] += 1;
                        }
                    }
                });
        }
    }

    if cfg.aggregation == Aggregation::CoverageMean {
        acc.par_chunks_mut(ch)
            .zip(count.par_iter())
            .for_each(|(px, &n)| {
                let n = n as f32;
                px.iter_mut().for_each(|v| *v /= n);
            });
    }
    let raw = FloatRaster::new(w, h, ch, acc)?;
    Ok(gaussian_smooth(&raw, cfg.smoothing_sigma))
}

/// Number of windows covering each pixel, summed over scales.
pub fn coverage_counts(width: usize, height: usize, cfg: &TilingConfig) -> Vec<u32> {
    let mut count = vec![0u32; width * height];
    for &scale in &cfg.scales {
        let (side, step) = cfg.window_at(scale);
        for &y0 in &tile_positions(height, side, step) {
            for &x0 in &tile_positions(width, side, step) {
                for y in y0..(y0 + side).min(height) {
                    for x in x0..(x0 + side).min(width) {
                        count[y * width + x] += 1;
                    }
                }
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predict::{Backend, ConstantValue, Head, PredictorSpec};
    use crate::preprocess::InputMode;

    fn constant_model(v: f32) -> Model {
        PredictorSpec {
            id: "c".into(),
            input_mode: InputMode::Linear,
            head: Head::Sigmoid1,
            ensemble_weight: 1.0,
            backend: Backend::Constant {
                value: ConstantValue::One(v),
            },
        }
        .instantiate(None)
        .unwrap()
    }

    fn cfg(tile: usize, stride: usize, scales: Vec<f64>, aggregation: Aggregation) -> TilingConfig {
        TilingConfig {
            tile_side: tile,
            stride,
            scales,
            smoothing_sigma: 0.0,
            aggregation,
        }
    }

    #[test]
    fn positions_cover_and_clamp() {
        assert_eq!(tile_positions(10, 4, 2), vec![0, 2, 4, 6]);
        assert_eq!(tile_positions(11, 4, 4), vec![0, 4, 7]);
        assert_eq!(tile_positions(3, 4, 2), vec![0]);
        assert_eq!(tile_positions(4, 4, 2), vec![0]);
    }

    #[test]
    fn constant_coverage_mean_is_one() {
        let img = FloatRaster::zeros(37, 23, 1);
        let c = TilingConfig {
            smoothing_sigma: 1.5,
            ..cfg(8, 3, vec![1.0, 1.5, 2.7], Aggregation::CoverageMean)
        };
        let out = tiled_predict(&constant_model(1.0), &img, &c).unwrap();
        assert!(out.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn sum_without_overlap_is_one() {
        let img = FloatRaster::zeros(32, 24, 1);
        let out = tiled_predict(
            &constant_model(1.0),
            &img,
            &cfg(8, 8, vec![1.0], Aggregation::Sum),
        )
        .unwrap();
        assert!(out.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn sum_with_half_stride_counts_four() {
        let img = FloatRaster::zeros(32, 32, 1);
        let c = cfg(8, 4, vec![1.0], Aggregation::Sum);
        let out = tiled_predict(&constant_model(1.0), &img, &c).unwrap();
        let counts = coverage_counts(32, 32, &c);
        assert_eq!(out.get(13, 17, 0), 4.0);
        assert_eq!(counts[17 * 32 + 13], 4);
        for (v, n) in out.data().iter().zip(&counts) {
            assert_eq!(*v, *n as f32);
        }
    }

    #[test]
    fn small_image_padded_reflectively() {
        let img = FloatRaster::new(3, 2, 1, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        let out = tiled_predict(
            &constant_model(0.25),
            &img,
            &cfg(8, 4, vec![1.0, 2.0], Aggregation::CoverageMean),
        )
        .unwrap();
        assert_eq!((out.width(), out.height()), (3, 2));
        assert!(out.data().iter().all(|&v| v == 0.25));
    }

    #[test]
    fn window_sampling_at_unit_scale_is_exact() {
        let img = FloatRaster::new(4, 4, 1, (0..16).map(|v| v as f32).collect()).unwrap();
        let taps = AxisTaps::new(4, 4);
        let t = sample_window(&img, Rect::new(0, 0, 4, 4), 4, &taps);
        assert_eq!(t, img);
        // A window hanging off the right edge mirrors the last columns.
        let t = sample_window(&img, Rect::new(2, 0, 4, 4), 4, &taps);
        assert_eq!(t.row(0), &[2.0, 3.0, 2.0, 1.0]);
    }
}
