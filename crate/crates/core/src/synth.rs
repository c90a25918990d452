//! Synthetic SAR-like scenes with a known coastline.
//!
//! The coastline is `y(x) = base + sum(a * sin(2 pi f x / width + phase))`.
//! Land lies on `land_side` of the curve, intensities are `mean * speckle`
//! with `speckle ~ Gamma(looks, 1 / looks)` (row `y` draws from stream `y`),
//! and the coast mask is the curve rasterized and gap-filled.

use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::fill_gaps;
use crate::error::{Error, Result};
use crate::raster::{
    Class, ClassMap, CoastMask, CoastlinePath, EvaluationPoint, Orientation, RasterImage, Rect,
};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineTerm {
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LandSide {
    /// Land at rows above the curve (`y < curve`).
    #[default]
    Above,
    Below,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    pub base: f64,
    pub terms: Vec<SineTerm>,
    pub land_side: LandSide,
    pub land_mean: f64,
    pub sea_mean: f64,
    pub speckle_looks: f64,
    pub nodata_rects: Vec<Rect>,
    /// Column spacing of evaluation points.
    pub point_spacing: usize,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            width: 512,
            height: 384,
            base: 192.0,
            terms: vec![SineTerm {
                amplitude: 40.0,
                frequency: 2.0,
                phase: 0.0,
            }],
            land_side: LandSide::Above,
            land_mean: 9000.0,
            sea_mean: 2500.0,
            speckle_looks: 4.0,
            nodata_rects: Vec::new(),
            point_spacing: 8,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn curve(&self, x: usize) -> f64 {
        let t = 2.0 * std::f64::consts::PI * x as f64 / self.width as f64;
        self.base
            + self
                .terms
                .iter()
                .map(|s| s.amplitude * (s.frequency * t + s.phase).sin())
                .sum::<f64>()
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidConfig(
                "scene needs non-zero dimensions".into(),
            ));
        }
        for (name, m) in [("land_mean", self.land_mean), ("sea_mean", self.sea_mean)] {
            if !(0.0..=65535.0).contains(&m) {
                return Err(Error::InvalidConfig(format!(
                    "{name} {m} outside [0, 65535]"
                )));
            }
        }
        if !(self.speckle_looks >= 1.0) || !self.speckle_looks.is_finite() {
            return Err(Error::InvalidConfig("speckle_looks must be >= 1".into()));
        }
        if self.point_spacing == 0 {
            return Err(Error::InvalidConfig("point_spacing must be >= 1".into()));
        }
        for x in 0..self.width {
            let y = self.curve(x);
            // The rasterized row must also land inside the image.
            if !y.is_finite() || y < 0.0 || y.round() >= self.height as f64 {
                return Err(Error::CurveOutOfBounds {
                    x,
                    y,
                    height: self.height,
                });
            }
        }
        Ok(())
    }

    fn in_nodata(&self, x: usize, y: usize) -> bool {
        self.nodata_rects.iter().any(|r| r.contains(x, y))
    }
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub image: RasterImage,
    pub classes: ClassMap,
    pub coast: CoastMask,
    pub points: Vec<EvaluationPoint>,
    /// The exact curve, one row coordinate per column.
    pub curve: CoastlinePath,
}

pub fn generate_scene(cfg: &SceneConfig) -> Result<Scene> {
    cfg.validate()?;
    let (w, h) = (cfg.width, cfg.height);
    let curve: Vec<f64> = (0..w).map(|x| cfg.curve(x)).collect();
    let is_land = |x: usize, y: usize| match cfg.land_side {
        LandSide::Above => (y as f64) < curve[x],
        LandSide::Below => (y as f64) > curve[x],
    };
    let classes = ClassMap::from_fn(w, h, |x, y| {
        if cfg.in_nodata(x, y) {
            Class::NoData
        } else if is_land(x, y) {
            Class::Land
        } else {
            Class::Sea
        }
    })?;

    let gamma = Gamma::new(cfg.speckle_looks, 1.0 / cfg.speckle_looks)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let pixels: Vec<u16> = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            let mut rng = rng::stream(cfg.seed, y as u64);
            let classes = &classes;
            (0..w)
                .map(move |x| {
                    let speckle = gamma.sample(&mut rng);
                    let mean = match classes.get(x, y) {
                        Class::Land => cfg.land_mean,
                        Class::Sea => cfg.sea_mean,
                        Class::NoData => return 0,
                    };
                    (mean * speckle).round().clamp(0.0, 65535.0) as u16
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let image = RasterImage::new(w, h, pixels)?;

    let path = CoastlinePath::new(
        Orientation::Landscape,
        curve.iter().map(|&y| Some(y)).collect(),
    )?;
    let coast = fill_gaps(&path, h, false);
    let points = (0..w)
        .step_by(cfg.point_spacing)
        .map(|x| EvaluationPoint::new(x as f64, curve[x].round()))
        .filter(|p| !cfg.in_nodata(p.x as usize, p.y as usize))
        .collect();
    Ok(Scene {
        image,
        classes,
        coast,
        points,
        curve: path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::{score, ScoreConfig};
    use crate::extract::{coast_from_classes, mask_to_path, OrientationRule};

    fn flat(w: usize, h: usize) -> SceneConfig {
        SceneConfig {
            width: w,
            height: h,
            base: h as f64 / 2.0,
            terms: vec![],
            ..Default::default()
        }
    }

    #[test]
    fn flat_curve_gives_half_planes() {
        let s = generate_scene(&flat(16, 10)).unwrap();
        for y in 0..10 {
            for x in 0..16 {
                let expect = if y < 5 { Class::Land } else { Class::Sea };
                assert_eq!(s.classes.get(x, y), expect);
                assert_eq!(s.coast.get(x, y), y == 5);
            }
        }
    }

    #[test]
    fn many_looks_approach_class_means() {
        let cfg = SceneConfig {
            speckle_looks: 1e6,
            ..flat(64, 64)
        };
        let s = generate_scene(&cfg).unwrap();
        for (v, c) in s.image.data().iter().zip(s.classes.data()) {
            let mean = if *c == Class::Land { 9000.0 } else { 2500.0 };
            assert!((*v as f64 - mean).abs() <= 0.01 * mean);
        }
    }

    #[test]
    fn generated_mask_scores_zero() {
        let s = generate_scene(&SceneConfig::default()).unwrap();
        let r = score(&s.coast, &s.points, &ScoreConfig::default()).unwrap();
        assert_eq!(r.mean_score, 0.0);
        assert_eq!(r.miss_count, 0);
    }

    #[test]
    fn class_boundary_tracks_curve() {
        let cfg = SceneConfig::default();
        let s = generate_scene(&cfg).unwrap();
        let p = mask_to_path(&coast_from_classes(&s.classes), OrientationRule::Landscape);
        for x in 0..cfg.width {
            assert!(
                (p.get(x).unwrap() - cfg.curve(x)).abs() <= 1.0,
                "column {x}"
            );
        }
    }

    #[test]
    fn deterministic_and_nodata() {
        let cfg = SceneConfig {
            nodata_rects: vec![Rect::new(0, 0, 8, 400)],
            seed: 5,
            ..Default::default()
        };
        let a = generate_scene(&cfg).unwrap();
        let b = generate_scene(&cfg).unwrap();
        assert_eq!(a.image, b.image);
        assert_eq!(a.image.get(3, 100), 0);
        assert_eq!(a.classes.get(3, 100), Class::NoData);
        assert!(a.points.iter().all(|p| p.x >= 8.0));
    }

    #[test]
    fn curve_out_of_bounds() {
        let cfg = SceneConfig {
            base: 370.0,
            ..Default::default()
        };
        assert!(matches!(
            generate_scene(&cfg),
            Err(Error::CurveOutOfBounds { .. })
        ));
    }
}
