//! Seeded training-time augmentation.
//!
//! A sample is produced in a fixed order: random square crop rescaled to the
//! model side, flips and quarter turns, multi-sample mosaicing, and finally
//! intensity jitter. Every geometric step is recorded as [`Provenance`] so the
//! sample can be rebuilt from the source images (see [`reconstruct`]).
//!
//! # Random draws
//!
//! Sample `i` draws from [`rng::stream(seed, i)`](crate::rng::stream), in order:
//!
//! 1. source index, uniform over the sources;
//! 2. crop side (uniform integer in the clipped side range), crop x, crop y;
//! 3. three uniform `[0,1)` values for flip-h, flip-v and rotation, then the
//!    number of quarter turns in `1..=3` (always drawn);
//! 4. per mosaic cell in row-major order: a uniform value; when it is below
//!    `replace_prob`, the donor index, then x and y inside the donor;
//! 5. gamma, multiplier, additive shift (uniform in their ranges), one normal
//!    draw per image value when `noise_sigma > 0`, a blur value, a cropout
//!    value, and when cropout fires its width, height, x and y.

mod dihedral;

pub use dihedral::Dihedral;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{FloatRaster, Rect};
use crate::resample::{resize_area, resize_bilinear};
use crate::rng;

/// A training image with its label raster (same width and height).
#[derive(Clone, Debug)]
pub struct LabeledImage {
    pub image: FloatRaster,
    pub label: FloatRaster,
}

impl LabeledImage {
    pub fn new(image: FloatRaster, label: FloatRaster) -> Result<Self> {
        if image.width() != label.width() || image.height() != label.height() {
            return Err(Error::DimensionMismatch(format!(
                "image {}x{} vs label {}x{}",
                image.width(),
                image.height(),
                label.width(),
                label.height()
            )));
        }
        Ok(Self { image, label })
    }

    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntensityConfig {
    pub add_range: (f32, f32),
    pub mul_range: (f32, f32),
    pub gamma_range: (f32, f32),
    pub noise_sigma: f32,
    pub blur_prob: f64,
    pub cropout_prob: f64,
    pub cropout_max_frac: f64,
}

impl Default for IntensityConfig {
    fn default() -> Self {
        Self {
            add_range: (-0.05, 0.05),
            mul_range: (0.9, 1.1),
            gamma_range: (0.8, 1.25),
            noise_sigma: 0.02,
            blur_prob: 0.1,
            cropout_prob: 0.1,
            cropout_max_frac: 0.2,
        }
    }
}

impl IntensityConfig {
    /// Parameters under which intensity jitter leaves a sample unchanged.
    pub fn identity() -> Self {
        Self {
            add_range: (0.0, 0.0),
            mul_range: (1.0, 1.0),
            gamma_range: (1.0, 1.0),
            noise_sigma: 0.0,
            blur_prob: 0.0,
            cropout_prob: 0.0,
            cropout_max_frac: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MosaicSpec {
    pub enabled: bool,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub replace_prob: f64,
}

impl Default for MosaicSpec {
    fn default() -> Self {
        Self {
            enabled: true,
            grid_rows: 2,
            grid_cols: 2,
            replace_prob: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub crop_side_min: usize,
    pub crop_side_max: usize,
    pub model_side: usize,
    pub flip_h: f64,
    pub flip_v: f64,
    pub rot90: f64,
    pub intensity: IntensityConfig,
    pub mosaic: MosaicSpec,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            crop_side_min: 1024,
            crop_side_max: 1536,
            model_side: 512,
            flip_h: 0.5,
            flip_v: 0.5,
            rot90: 0.5,
            intensity: IntensityConfig::default(),
            mosaic: MosaicSpec::default(),
            seed: 0,
        }
    }
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidConfig(format!(
            "{name} must be a probability, got {p}"
        )));
    }
    Ok(())
}

fn check_range(name: &str, (lo, hi): (f32, f32)) -> Result<()> {
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "{name} needs lo <= hi, got ({lo}, {hi})"
        )));
    }
    Ok(())
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.crop_side_min == 0 || self.crop_side_min > self.crop_side_max {
            return Err(Error::InvalidConfig(format!(
                "crop side range [{}, {}] is empty",
                self.crop_side_min, self.crop_side_max
            )));
        }
        if self.model_side == 0 {
            return Err(Error::InvalidConfig("model_side must be >= 1".into()));
        }
        check_prob("flip_h", self.flip_h)?;
        check_prob("flip_v", self.flip_v)?;
        check_prob("rot90", self.rot90)?;
        self.intensity.validate()?;
        self.mosaic.validate()
    }
}

impl IntensityConfig {
    pub fn validate(&self) -> Result<()> {
        check_range("add_range", self.add_range)?;
        check_range("mul_range", self.mul_range)?;
        check_range("gamma_range", self.gamma_range)?;
        if !(self.gamma_range.0 > 0.0) {
            return Err(Error::InvalidConfig("gamma must be positive".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidConfig("noise_sigma must be >= 0".into()));
        }
        check_prob("blur_prob", self.blur_prob)?;
        check_prob("cropout_prob", self.cropout_prob)?;
        if !(self.cropout_max_frac > 0.0 && self.cropout_max_frac < 1.0) {
            return Err(Error::InvalidConfig(
                "cropout_max_frac must be in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

impl MosaicSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid_rows == 0 || self.grid_cols == 0 {
            return Err(Error::InvalidConfig(
                "mosaic grid needs at least one cell".into(),
            ));
        }
        check_prob("replace_prob", self.replace_prob)
    }

    /// Cell rectangles in row-major order; the last row and column absorb remainders.
    pub fn cells(&self, width: usize, height: usize) -> Vec<Rect> {
        let split = |len: usize, n: usize| -> Vec<(usize, usize)> {
            let base = len / n;
            (0..n)
                .map(|i| {
                    let start = i * base;
                    let size = if i + 1 == n { len - start } else { base };
                    (start, size)
                })
                .filter(|&(_, size)| size > 0)
                .collect()
        };
        let rows = split(height, self.grid_rows);
        let cols = split(width, self.grid_cols);
        rows.iter()
            .flat_map(|&(y, h)| cols.iter().map(move |&(x, w)| Rect::new(x, y, w, h)))
            .collect()
    }
}

/// Where a rectangle of a sample came from.
///
/// To rebuild it: crop `src` from source `source`, resample it to `scaled`
/// (bilinear for images, area-weighted for labels), apply `transform`, and
/// copy `window` of the result into `dst` of the sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: usize,
    pub src: Rect,
    pub scaled: (usize, usize),
    pub transform: Dihedral,
    pub window: Rect,
    pub dst: Rect,
}

impl Provenance {
    fn block_dims(&self) -> (usize, usize) {
        self.transform.output_dims(self.scaled.0, self.scaled.1)
    }

    /// The same record limited to `part`, a sub-rectangle of `dst`.
    fn restrict(&self, part: Rect) -> Provenance {
        Provenance {
            window: Rect::new(
                self.window.x + part.x - self.dst.x,
                self.window.y + part.y - self.dst.y,
                part.w,
                part.h,
            ),
            dst: part,
            ..*self
        }
    }

    fn transformed(&self, t: Dihedral, sample_w: usize, sample_h: usize) -> Provenance {
        let (bw, bh) = self.block_dims();
        Provenance {
            transform: self.transform.then(t),
            window: t.map_rect(self.window, bw, bh),
            dst: t.map_rect(self.dst, sample_w, sample_h),
            ..*self
        }
    }
}

/// `a` minus `b` as up to four disjoint rectangles.
fn subtract(a: Rect, b: Rect) -> Vec<Rect> {
    if !a.intersects(&b) {
        return vec![a];
    }
    let mut out = Vec::with_capacity(4);
    let (top, bottom) = (a.y.max(b.y), a.bottom().min(b.bottom()));
    if b.y > a.y {
        out.push(Rect::new(a.x, a.y, a.w, b.y - a.y));
    }
    if b.bottom() < a.bottom() {
        out.push(Rect::new(a.x, b.bottom(), a.w, a.bottom() - b.bottom()));
    }
    if b.x > a.x {
        out.push(Rect::new(a.x, top, b.x - a.x, bottom - top));
    }
    if b.right() < a.right() {
        out.push(Rect::new(
            b.right(),
            top,
            a.right() - b.right(),
            bottom - top,
        ));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub image: FloatRaster,
    pub label: FloatRaster,
    pub provenance: Vec<Provenance>,
}

/// Square crop of random side and position, rescaled to `model_side`.
pub fn random_crop_scale<R: Rng + ?Sized>(
    source_id: usize,
    source: &LabeledImage,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Result<Sample> {
    let (w, h) = (source.width(), source.height());
    let max_side = cfg.crop_side_max.min(w).min(h);
    if cfg.crop_side_min > max_side {
        return Err(Error::CropTooLarge {
            crop_w: cfg.crop_side_min,
            crop_h: cfg.crop_side_min,
            width: w,
            height: h,
        });
    }
    let side = rng.random_range(cfg.crop_side_min..=max_side);
    let x = rng.random_range(0..=w - side);
    let y = rng.random_range(0..=h - side);
    let src = Rect::new(x, y, side, side);
    let m = cfg.model_side;
    let image = resize_bilinear(&source.image.crop(src), m, m);
    let label = resize_area(&source.label.crop(src), m, m);
    let full = Rect::new(0, 0, m, m);
    Ok(Sample {
        image,
        label,
        provenance: vec![Provenance {
            source: source_id,
            src,
            scaled: (m, m),
            transform: Dihedral::IDENTITY,
            window: full,
            dst: full,
        }],
    })
}

/// Apply one flip/rotation to the image, the label and every provenance record.
pub fn apply_dihedral(sample: &Sample, t: Dihedral) -> Sample {
    let (w, h) = (sample.image.width(), sample.image.height());
    Sample {
        image: t.apply(&sample.image),
        label: t.apply(&sample.label),
        provenance: sample
            .provenance
            .iter()
            .map(|p| p.transformed(t, w, h))
            .collect(),
    }
}

/// Random horizontal flip, vertical flip and quarter-turn rotation.
pub fn spatial_jitter<R: Rng + ?Sized>(
    sample: &Sample,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Sample {
    let (uh, uv, ur): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let turns: u8 = rng.random_range(1..=3);
    let mut t = Dihedral::IDENTITY;
    if uh < cfg.flip_h {
        t = t.then(Dihedral::FLIP_H);
    }
    if uv < cfg.flip_v {
        t = t.then(Dihedral::FLIP_V);
    }
    if ur < cfg.rot90 {
        t = t.then(Dihedral::rotation(turns));
    }
    apply_dihedral(sample, t)
}

/// Replace random grid cells with same-sized raw regions from donor images.
///
/// `donors` pairs each donor with the source id recorded in provenance.
pub fn multi_sample_mosaic<R: Rng + ?Sized>(
    sample: &Sample,
    donors: &[(usize, &LabeledImage)],
    spec: &MosaicSpec,
    rng: &mut R,
) -> Result<Sample> {
    spec.validate()?;
    if !spec.enabled {
        return Ok(sample.clone());
    }
    if donors.is_empty() {
        return Err(Error::InvalidConfig(
            "mosaicing needs at least one donor image".into(),
        ));
    }
    for (_, d) in donors {
        if d.image.channels() != sample.image.channels() {
            return Err(Error::ChannelMismatch {
                expected: sample.image.channels(),
                found: d.image.channels(),
            });
        }
        if d.label.channels() != sample.label.channels() {
            return Err(Error::ChannelMismatch {
                expected: sample.label.channels(),
                found: d.label.channels(),
            });
        }
    }

    let mut out = sample.clone();
    for cell in spec.cells(sample.image.width(), sample.image.height()) {
        let u: f64 = rng.random();
        if u >= spec.replace_prob {
            continue;
        }
        let (id, donor) = donors[rng.random_range(0..donors.len())];
        if donor.width() < cell.w || donor.height() < cell.h {
            return Err(Error::DonorTooSmall {
                donor: id,
                width: donor.width(),
                height: donor.height(),
                cell_w: cell.w,
                cell_h: cell.h,
            });
        }
        let x = rng.random_range(0..=donor.width() - cell.w);
        let y = rng.random_range(0..=donor.height() - cell.h);
        let src = Rect::new(x, y, cell.w, cell.h);
        out.image.paste(&donor.image.crop(src), cell.x, cell.y);
        out.label.paste(&donor.label.crop(src), cell.x, cell.y);

        let mut records = Vec::with_capacity(out.provenance.len() + 4);
        for p in &out.provenance {
            records.extend(
                subtract(p.dst, cell)
                    .into_iter()
                    .map(|part| p.restrict(part)),
            );
        }
        records.push(Provenance {
            source: id,
            src,
            scaled: (cell.w, cell.h),
            transform: Dihedral::IDENTITY,
            window: Rect::new(0, 0, cell.w, cell.h),
            dst: cell,
        });
        out.provenance = records;
    }
    Ok(out)
}

fn draw_in<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f32, f32)) -> f32 {
    let u: f32 = rng.random();
    lo + (hi - lo) * u
}

fn box_blur3(r: &FloatRaster) -> FloatRaster {
    let (w, h, ch) = (r.width(), r.height(), r.channels());
    let mut out = Vec::with_capacity(r.data().len());
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut sum = 0f32;
                let mut n = 0f32;
                for yy in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                    for xx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                        sum += r.get(xx, yy, c);
                        n += 1.0;
                    }
                }
                out.push(sum / n);
            }
        }
    }
    FloatRaster::from_vec_unchecked(w, h, ch, out)
}

/// Gamma, multiplicative and additive shifts, Gaussian noise, optional 3x3 box
/// blur and optional cropout, then clamping to `[0, 1]`.
///
/// Labels only change under cropout: the rectangle is zeroed, and for labels
/// with at least three channels it is marked no-data (channel 1).
pub fn intensity_jitter<R: Rng + ?Sized>(
    sample: &Sample,
    cfg: &IntensityConfig,
    rng: &mut R,
) -> Result<Sample> {
    cfg.validate()?;
    let gamma = draw_in(rng, cfg.gamma_range);
    let mul = draw_in(rng, cfg.mul_range);
    let add = draw_in(rng, cfg.add_range);

    let mut values: Vec<f32> = sample
        .image
        .data()
        .iter()
        .map(|&v| {
            let g = if gamma == 1.0 {
                v
            } else {
                v.max(0.0).powf(gamma)
            };
            g * mul + add
        })
        .collect();
    if cfg.noise_sigma > 0.0 {
        let normal = Normal::new(0.0f32, cfg.noise_sigma)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        for v in values.iter_mut() {
            *v += normal.sample(rng);
        }
    }
    let (w, h, ch) = (
        sample.image.width(),
        sample.image.height(),
        sample.image.channels(),
    );
    let mut image = FloatRaster::new(w, h, ch, values)?;
    let mut label = sample.label.clone();

    let u_blur: f64 = rng.random();
    if u_blur < cfg.blur_prob {
        image = box_blur3(&image);
    }
    let u_cut: f64 = rng.random();
    if u_cut < cfg.cropout_prob {
        let frac = cfg.cropout_max_frac.sqrt();
        let max_w = ((w as f64 * frac).floor() as usize).max(1);
        let max_h = ((h as f64 * frac).floor() as usize).max(1);
        let cw = rng.random_range(1..=max_w);
        let chh = rng.random_range(1..=max_h);
        let cx = rng.random_range(0..=w - cw);
        let cy = rng.random_range(0..=h - chh);
        image.paste(&FloatRaster::zeros(cw, chh, ch), cx, cy);
        let mut fill = FloatRaster::zeros(cw, chh, label.channels());
        if label.channels() >= 3 {
            for y in 0..chh {
                for x in 0..cw {
                    fill.set(x, y, 1, 1.0);
                }
            }
        }
        label.paste(&fill, cx, cy);
    }
    for v in image.data_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(Sample {
        image,
        label,
        provenance: sample.provenance.clone(),
    })
}

/// Crop, spatial jitter and mosaicing for one sample, drawing from `rng`.
pub fn geometric_stage<R: Rng + ?Sized>(
    sources: &[LabeledImage],
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Result<Sample> {
    if sources.is_empty() {
        return Err(Error::InvalidConfig("no source images".into()));
    }
    let base = rng.random_range(0..sources.len());
    let sample = random_crop_scale(base, &sources[base], cfg, rng)?;
    let sample = spatial_jitter(&sample, cfg, rng);
    if !cfg.mosaic.enabled {
        return Ok(sample);
    }
    let donors: Vec<(usize, &LabeledImage)> = sources
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != base)
        .collect();
    multi_sample_mosaic(&sample, &donors, &cfg.mosaic, rng)
}

/// Sample number `index` of the augmentation stream defined by `cfg.seed`.
pub fn augment_sample(sources: &[LabeledImage], index: u64, cfg: &AugmentConfig) -> Result<Sample> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, index);
    let sample = geometric_stage(sources, cfg, &mut rng)?;
    intensity_jitter(&sample, &cfg.intensity, &mut rng)
}

/// Samples `first..first + count`, generated in parallel; identical for any thread count.
pub fn augment_batch(
    sources: &[LabeledImage],
    first: u64,
    count: u64,
    cfg: &AugmentConfig,
) -> Result<Vec<Sample>> {
    (first..first + count)
        .into_par_iter()
        .map(|i| augment_sample(sources, i, cfg))
        .collect()
}

/// Rebuild a sample's image and label from its provenance records.
pub fn reconstruct(
    provenance: &[Provenance],
    sources: &[LabeledImage],
    width: usize,
    height: usize,
) -> Result<(FloatRaster, FloatRaster)> {
    let first = sources
        .first()
        .ok_or_else(|| Error::InvalidConfig("no source images".into()))?;
    let mut image = FloatRaster::zeros(width, height, first.image.channels());
    let mut label = FloatRaster::zeros(width, height, first.label.channels());
    for p in provenance {
        let src = sources
            .get(p.source)
            .ok_or_else(|| Error::InvalidValue(format!("unknown source id {}", p.source)))?;
        let (sw, sh) = p.scaled;
        let img_block = p
            .transform
            .apply(&resize_bilinear(&src.image.crop(p.src), sw, sh));
        let lbl_block = p
            .transform
            .apply(&resize_area(&src.label.crop(p.src), sw, sh));
        image.paste(&img_block.crop(p.window), p.dst.x, p.dst.y);
        label.paste(&lbl_block.crop(p.window), p.dst.x, p.dst.y);
    }
    Ok((image, label))
}
