//! Verification predictor driven by the ground truth.
//!
//! Softmax head: with signed distance `s` (positive inside land, distance to
//! the nearest sea pixel; negative inside sea, minus the distance to the
//! nearest land pixel) and `q = logistic(sharpness * s)`, a pixel gets
//! `(1 - q, 0, q)`; no-data pixels get `(0, 1, 0)`. Noise `N(0, sigma)` is
//! added per channel, negatives are clamped to 0 and the vector renormalized.
//!
//! Sigmoid head: `p = exp(-sharpness * d^2) + N(0, sigma)` clamped to `[0, 1]`,
//! with `d` the distance to the nearest true coastline pixel.
//!
//! Tile pixel `(u, v)` looks up the image pixel nearest to its centre,
//! reflected back into the image when the window extends past the border.
//! Noise is drawn per tile from stream [`TileContext::stream_id`], in
//! row-major, channel-interleaved order.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Head, Predictor, TileContext};
use crate::distance::squared_distance_transform;
use crate::error::{Error, Result};
use crate::raster::{Class, ClassMap, CoastMask, FloatRaster};
use crate::resample::reflect;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleParams {
    pub sharpness: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

impl OracleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sharpness > 0.0) || !self.sharpness.is_finite() {
            return Err(Error::InvalidConfig("oracle sharpness must be > 0".into()));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::InvalidConfig(
                "oracle noise_sigma must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Ground truth an oracle predicts from.
#[derive(Clone, Debug)]
pub struct OracleTruth {
    pub classes: ClassMap,
    pub coast: CoastMask,
}

impl OracleTruth {
    pub fn new(classes: ClassMap, coast: CoastMask) -> Result<Self> {
        if classes.width() != coast.width() || classes.height() != coast.height() {
            return Err(Error::DimensionMismatch(format!(
                "class map {}x{} vs coast mask {}x{}",
                classes.width(),
                classes.height(),
                coast.width(),
                coast.height()
            )));
        }
        Ok(Self { classes, coast })
    }
}

pub fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Oracle parameters plus the distance field precomputed from the truth.
#[derive(Clone, Debug)]
pub struct OracleConfig {
    pub head: Head,
    pub params: OracleParams,
    width: usize,
    height: usize,
    /// Signed distance (softmax) or coastline distance (sigmoid) per pixel.
    field: Vec<f64>,
    nodata: Vec<bool>,
}

impl OracleConfig {
    pub fn new(truth: &OracleTruth, head: Head, params: OracleParams) -> Result<Self> {
        params.validate()?;
        let (w, h) = (truth.classes.width(), truth.classes.height());
        let classes = truth.classes.data();
        let field = match head {
            Head::Softmax3 => {
                let is = |c: Class| classes.iter().map(|&v| v == c).collect::<Vec<_>>();
                let to_sea = squared_distance_transform(w, h, &is(Class::Sea));
                let to_land = squared_distance_transform(w, h, &is(Class::Land));
                classes
                    .iter()
                    .enumerate()
                    .map(|(i, c)| match c {
                        Class::Land => to_sea[i].sqrt(),
                        Class::Sea => -to_land[i].sqrt(),
                        Class::NoData => 0.0,
                    })
                    .collect()
            }
            Head::Sigmoid1 => squared_distance_transform(w, h, truth.coast.data())
                .into_iter()
                .map(f64::sqrt)
                .collect(),
        };
        Ok(Self {
            head,
            params,
            width: w,
            height: h,
            field,
            nodata: classes.iter().map(|&c| c == Class::NoData).collect(),
        })
    }

    /// Noiseless prediction for image pixel `(x, y)`.
    pub fn clean_value(&self, x: usize, y: usize) -> [f64; 3] {
        let i = y * self.width + x;
        let k = self.params.sharpness;
        match self.head {
            Head::Softmax3 if self.nodata[i] => [0.0, 1.0, 0.0],
            Head::Softmax3 => {
                let q = logistic(k * self.field[i]);
                [1.0 - q, 0.0, q]
            }
            Head::Sigmoid1 => {
                let d = self.field[i];
                [(-k * d * d).exp(), 0.0, 0.0]
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Oracle {
    cfg: OracleConfig,
}

impl Oracle {
    pub fn new(cfg: OracleConfig) -> Self {
        Self { cfg }
    }

    pub fn config(&self) -> &OracleConfig {
        &self.cfg
    }

    /// Render a `tw x th` tile for the window in `ctx`.
    pub fn render(&self, tw: usize, th: usize, ctx: &TileContext) -> Result<FloatRaster> {
        let cfg = &self.cfg;
        let ch = cfg.head.channels();
        let sigma = cfg.params.noise_sigma;
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let mut rng = rng::stream(cfg.params.seed, ctx.stream_id());
        let lookup = |u: usize, tile: usize, origin: usize, side: usize, n: usize| -> usize {
            let ratio = side as f64 / tile as f64;
            let s = origin as f64 + (u as f64 + 0.5) * ratio - 0.5;
            reflect(s.round() as isize, n)
        };
        let xs: Vec<usize> = (0..tw)
            .map(|u| lookup(u, tw, ctx.window.x, ctx.window.w, cfg.width))
            .collect();
        let mut out = Vec::with_capacity(tw * th * ch);
        for v in 0..th {
            let y = lookup(v, th, ctx.window.y, ctx.window.h, cfg.height);
            for &x in &xs {
                let mut p = cfg.clean_value(x, y);
                match cfg.head {
                    Head::Softmax3 => {
                        if sigma > 0.0 {
                            for c in p.iter_mut() {
                                *c = (*c + normal.sample(&mut rng)).max(0.0);
                            }
                            let sum: f64 = p.iter().sum();
                            if sum > 0.0 {
                                p.iter_mut().for_each(|c| *c /= sum);
                            } else {
                                p = [1.0 / 3.0; 3];
                            }
                        }
                        out.extend(p.iter().map(|&c| c as f32));
                    }
                    Head::Sigmoid1 => {
                        let noisy = if sigma > 0.0 {
                            p[0] + normal.sample(&mut rng)
                        } else {
                            p[0]
                        };
                        out.push(noisy.clamp(0.0, 1.0) as f32);
                    }
                }
            }
        }
        FloatRaster::new(tw, th, ch, out)
    }
}

impl Predictor for Oracle {
    fn predict(&self, tile: &FloatRaster, ctx: &TileContext) -> Result<FloatRaster> {
        self.render(tile.width(), tile.height(), ctx)
    }
}
