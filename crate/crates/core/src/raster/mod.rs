//! Raster and geometry types shared by every pipeline stage, plus their
//! on-disk formats (16-bit PGM, `.fr` float rasters, coastline and point CSVs).

mod csv;
mod fr;
mod pgm;

pub use self::csv::{
    format_coastline_csv, parse_coastline_csv, parse_points_csv, read_coastline_csv,
    read_points_csv, write_coastline_csv, write_points_csv,
};
pub use self::fr::{
    decode_float_raster, encode_float_raster, read_float_raster, write_float_raster,
};
pub use self::pgm::{decode_pgm, encode_pgm, read_raster, write_raster};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::DimensionMismatch(format!(
            "raster dimensions must be positive, got {width}x{height}"
        )));
    }
    Ok(())
}

fn check_len(width: usize, height: usize, channels: usize, len: usize) -> Result<()> {
    let expected = width * height * channels;
    if len != expected {
        return Err(Error::DimensionMismatch(format!(
            "{width}x{height}x{channels} raster needs {expected} values, got {len}"
        )));
    }
    Ok(())
}

/// Single-channel 16-bit SAR intensity image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    data: Vec<u16>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, data: Vec<u16>) -> Result<Self> {
        check_dims(width, height)?;
        check_len(width, height, 1, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u16,
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }
}

/// Row-major, channel-interleaved `f32` raster with 1 to 4 channels.
///
/// Holds normalized inputs, probability maps and encoded labels. All values
/// are finite; constructors reject NaN and infinities.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatRaster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

pub const MAX_CHANNELS: usize = 4;

impl FloatRaster {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        check_dims(width, height)?;
        if channels == 0 || channels > MAX_CHANNELS {
            return Err(Error::UnsupportedChannels(channels));
        }
        check_len(width, height, channels, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!(
                "non-finite value {} at offset {i}",
                data[i]
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Zero-filled raster. Panics on zero dimensions or an unsupported channel count.
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        assert!(
            width > 0 && height > 0,
            "raster dimensions must be positive"
        );
        assert!(
            (1..=MAX_CHANNELS).contains(&channels),
            "unsupported channel count"
        );
        assert!(value.is_finite());
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    pub(crate) fn from_vec_unchecked(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f32>,
    ) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Offset of channel 0 of pixel `(x, y)`.
    #[inline]
    pub fn offset(&self, x: usize, y: usize) -> usize {
        (y * self.width + x) * self.channels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[self.offset(x, y) + c]
    }

    /// Set one sample. Panics if `value` is not finite.
    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f32) {
        assert!(value.is_finite(), "raster values must be finite");
        let o = self.offset(x, y);
        self.data[o + c] = value;
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let o = self.offset(x, y);
        &self.data[o..o + self.channels]
    }

    pub fn row(&self, y: usize) -> &[f32] {
        let stride = self.width * self.channels;
        &self.data[y * stride..(y + 1) * stride]
    }

    /// Copy out the sub-window `rect`, which must lie inside the raster.
    pub fn crop(&self, rect: Rect) -> FloatRaster {
        assert!(rect.w > 0 && rect.h > 0);
        assert!(
            rect.right() <= self.width && rect.bottom() <= self.height,
            "crop outside raster"
        );
        let c = self.channels;
        let mut data = Vec::with_capacity(rect.w * rect.h * c);
        for y in rect.y..rect.bottom() {
            let start = self.offset(rect.x, y);
            data.extend_from_slice(&self.data[start..start + rect.w * c]);
        }
        Self::from_vec_unchecked(rect.w, rect.h, c, data)
    }

    /// Paste `src` with its top-left corner at `(x, y)`.
    pub fn paste(&mut self, src: &FloatRaster, x: usize, y: usize) {
        assert_eq!(src.channels, self.channels, "channel count differs");
        assert!(
            x + src.width <= self.width && y + src.height <= self.height,
            "paste outside raster"
        );
        let row_len = src.width * src.channels;
        for sy in 0..src.height {
            let d = self.offset(x, y + sy);
            let s = sy * row_len;
            self.data[d..d + row_len].copy_from_slice(&src.data[s..s + row_len]);
        }
    }

    /// Extract a single channel as a 1-channel raster.
    pub fn channel(&self, c: usize) -> FloatRaster {
        assert!(c < self.channels);
        let data = self
            .data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect();
        Self::from_vec_unchecked(self.width, self.height, 1, data)
    }

    /// Multiply every value by `k`.
    pub fn scaled(&self, k: f32) -> FloatRaster {
        let data: Vec<f32> = self.data.iter().map(|v| v * k).collect();
        FloatRaster::new(self.width, self.height, self.channels, data)
            .expect("scaling produced a non-finite value")
    }

    pub fn same_shape(&self, other: &FloatRaster) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }
}

/// Per-pixel class label of the sea / no-data / land encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Class {
    Sea = 0,
    NoData = 1,
    Land = 2,
}

impl Class {
    pub const ALL: [Class; 3] = [Class::Sea, Class::NoData, Class::Land];

    pub fn from_u8(v: u8) -> Option<Class> {
        match v {
            0 => Some(Class::Sea),
            1 => Some(Class::NoData),
            2 => Some(Class::Land),
            _ => None,
        }
    }
}

/// Gray level used for class `k` when a class map is stored as PGM.
pub const CLASS_PGM_STEP: u16 = 32767;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassMap {
    width: usize,
    height: usize,
    data: Vec<Class>,
}

impl ClassMap {
    pub fn new(width: usize, height: usize, data: Vec<Class>) -> Result<Self> {
        check_dims(width, height)?;
        check_len(width, height, 1, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_labels(width: usize, height: usize, labels: &[u8]) -> Result<Self> {
        let data = labels
            .iter()
            .map(|&v| {
                Class::from_u8(v)
                    .ok_or_else(|| Error::InvalidValue(format!("class label {v} not in {{0,1,2}}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(width, height, data)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Class,
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[Class] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Class {
        self.data[y * self.width + x]
    }

    /// Store classes 0/1/2 as gray levels 0/32767/65534.
    pub fn to_raster(&self) -> RasterImage {
        let data = self
            .data
            .iter()
            .map(|&c| c as u16 * CLASS_PGM_STEP)
            .collect();
        RasterImage {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Inverse of [`ClassMap::to_raster`]; gray levels snap to the nearest class step.
    pub fn from_raster(img: &RasterImage) -> Result<Self> {
        let labels: Vec<u8> = img
            .data()
            .iter()
            .map(|&v| ((v as f64 / CLASS_PGM_STEP as f64).round()) as u8)
            .collect();
        Self::from_labels(img.width(), img.height(), &labels)
    }
}

/// Binary coastline image: `true` marks a coastline pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoastMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl CoastMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        check_dims(width, height)?;
        check_len(width, height, 1, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// All-zero mask. Panics on zero dimensions.
    pub fn empty(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    /// Coordinates of set pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }

    /// 0 / 65535 PGM representation.
    pub fn to_raster(&self) -> RasterImage {
        let data = self
            .data
            .iter()
            .map(|&b| if b { u16::MAX } else { 0 })
            .collect();
        RasterImage {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Any nonzero gray level is a coastline pixel.
    pub fn from_raster(img: &RasterImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            data: img.data().iter().map(|&v| v != 0).collect(),
        }
    }
}

/// Axis-aligned pixel rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> usize {
        self.x + self.w
    }

    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.x < other.right()
            && other.x < self.right()
            && self.y < other.bottom()
            && other.y < self.bottom()
    }
}

/// Which image axis a coastline path is indexed by.
///
/// `Landscape` paths hold one row coordinate per column; `Portrait` paths
/// hold one column coordinate per row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Landscape,
    Portrait,
}

impl Orientation {
    /// `(primary, secondary)` axis lengths of a `width x height` image.
    pub fn axes(self, width: usize, height: usize) -> (usize, usize) {
        match self {
            Orientation::Landscape => (width, height),
            Orientation::Portrait => (height, width),
        }
    }

    /// Image `(x, y)` of a `(primary, secondary)` pair.
    #[inline]
    pub fn to_xy(self, primary: usize, secondary: usize) -> (usize, usize) {
        match self {
            Orientation::Landscape => (primary, secondary),
            Orientation::Portrait => (secondary, primary),
        }
    }
}

/// Per-column (landscape) or per-row (portrait) coastline coordinates.
///
/// Dense: `coords[i]` is the secondary-axis coordinate at primary index `i`,
/// or `None` where the coastline was missed. Coordinates are real-valued
/// pixels so that ensembling can average them.
#[derive(Clone, Debug, PartialEq)]
pub struct CoastlinePath {
    orientation: Orientation,
    coords: Vec<Option<f64>>,
}

impl CoastlinePath {
    pub fn new(orientation: Orientation, coords: Vec<Option<f64>>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidValue("coastline path has no entries".into()));
        }
        for (i, c) in coords.iter().enumerate() {
            if let Some(v) = c {
                if !v.is_finite() || *v < 0.0 {
                    return Err(Error::CoordinateOutOfRange(format!(
                        "coordinate {v} at index {i} must be finite and non-negative"
                    )));
                }
            }
        }
        Ok(Self {
            orientation,
            coords,
        })
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn coords(&self) -> &[Option<f64>] {
        &self.coords
    }

    /// Length of the primary axis.
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.coords.get(i).copied().flatten()
    }

    pub fn present_count(&self) -> usize {
        self.coords.iter().filter(|c| c.is_some()).count()
    }

    /// Check the path against the image it describes.
    pub fn check_bounds(&self, width: usize, height: usize) -> Result<()> {
        let (primary, secondary) = self.orientation.axes(width, height);
        if self.coords.len() > primary {
            return Err(Error::CoordinateOutOfRange(format!(
                "path has {} entries but the primary axis has length {primary}",
                self.coords.len()
            )));
        }
        for (i, c) in self.coords.iter().enumerate() {
            if let Some(v) = c {
                if *v >= secondary as f64 {
                    return Err(Error::CoordinateOutOfRange(format!(
                        "coordinate {v} at index {i} outside [0, {secondary})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Ground-truth location at which a prediction is scored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationPoint {
    pub x: f64,
    pub y: f64,
}

impl EvaluationPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn in_bounds(&self, width: usize, height: usize) -> bool {
        self.x >= 0.0 && self.y >= 0.0 && self.x < width as f64 && self.y < height as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixel_offset_is_row_major_channel_interleaved() {
        let r = FloatRaster::zeros(5, 4, 3);
        assert_eq!(r.offset(0, 0), 0);
        assert_eq!(r.offset(1, 0), 3);
        assert_eq!(r.offset(0, 1), 15);
        assert_eq!(r.offset(2, 3), (3 * 5 + 2) * 3);

        let data: Vec<f32> = (0..2 * 2 * 3).map(|v| v as f32).collect();
        let r = FloatRaster::new(2, 2, 3, data).unwrap();
        assert_eq!(r.pixel(1, 1), &[9.0, 10.0, 11.0]);
        assert_eq!(r.get(0, 1, 2), 8.0);
    }

    #[test]
    fn constructors_enforce_invariants() {
        assert!(RasterImage::new(2, 2, vec![0; 3]).is_err());
        assert!(RasterImage::new(0, 2, vec![]).is_err());
        assert!(matches!(
            FloatRaster::new(1, 1, 5, vec![0.0; 5]),
            Err(Error::UnsupportedChannels(5))
        ));
        assert!(FloatRaster::new(1, 1, 1, vec![f32::NAN]).is_err());
        assert!(ClassMap::from_labels(1, 1, &[3]).is_err());
        assert!(CoastlinePath::new(Orientation::Landscape, vec![Some(-1.0)]).is_err());
    }

    #[test]
    fn class_map_pgm_levels_round_trip() {
        let cm = ClassMap::from_labels(3, 1, &[0, 1, 2]).unwrap();
        let img = cm.to_raster();
        assert_eq!(img.data(), &[0, 32767, 65534]);
        assert_eq!(ClassMap::from_raster(&img).unwrap(), cm);
    }

    #[test]
    fn crop_and_paste_are_inverse() {
        let data: Vec<f32> = (0..6 * 4 * 2).map(|v| v as f32).collect();
        let r = FloatRaster::new(6, 4, 2, data).unwrap();
        let rect = Rect::new(1, 2, 3, 2);
        let c = r.crop(rect);
        assert_eq!(c.pixel(0, 0), r.pixel(1, 2));
        let mut z = FloatRaster::zeros(6, 4, 2);
        z.paste(&c, 1, 2);
        for y in 0..4 {
            for x in 0..6 {
                let expect = if rect.contains(x, y) {
                    r.pixel(x, y)
                } else {
                    &[0.0, 0.0][..]
                };
                assert_eq!(z.pixel(x, y), expect);
            }
        }
    }

    #[test]
    fn path_bounds_check() {
        let p =
            CoastlinePath::new(Orientation::Landscape, vec![Some(1.0), None, Some(3.5)]).unwrap();
        assert!(p.check_bounds(3, 4).is_ok());
        assert!(p.check_bounds(3, 3).is_err());
        assert!(p.check_bounds(2, 10).is_err());
    }
}
