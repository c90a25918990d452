//! Coastline extraction from probability maps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Class, ClassMap, CoastMask, CoastlinePath, FloatRaster, Orientation};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrientationRule {
    /// Landscape iff `width >= height`.
    #[default]
    Auto,
    Landscape,
    Portrait,
}

impl OrientationRule {
    pub fn resolve(self, width: usize, height: usize) -> Orientation {
        match self {
            OrientationRule::Landscape => Orientation::Landscape,
            OrientationRule::Portrait => Orientation::Portrait,
            OrientationRule::Auto if width >= height => Orientation::Landscape,
            OrientationRule::Auto => Orientation::Portrait,
        }
    }
}

fn expect_channels(f: &FloatRaster, n: usize) -> Result<()> {
    if f.channels() != n {
        return Err(Error::ChannelMismatch {
            expected: n,
            found: f.channels(),
        });
    }
    Ok(())
}

/// Index of the largest value; ties go to the lowest index.
fn argmax(values: impl Iterator<Item = f32>) -> usize {
    let mut best = (0, f32::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Per-pixel argmax of a 3-channel map (ties to the lowest class).
pub fn argmax_classes(f: &FloatRaster) -> Result<ClassMap> {
    expect_channels(f, 3)?;
    let labels: Vec<u8> = f
        .data()
        .par_chunks(3)
        .map(|p| argmax(p.iter().copied()) as u8)
        .collect();
    ClassMap::from_labels(f.width(), f.height(), &labels)
}

/// Coastline where the clipped 3x3 neighbourhood of the class map contains
/// both sea and land (the no-data class is ignored).
pub fn extract_softmax(f: &FloatRaster) -> Result<CoastMask> {
    let classes = argmax_classes(f)?;
    Ok(coast_from_classes(&classes))
}

pub fn coast_from_classes(classes: &ClassMap) -> CoastMask {
    let (w, h) = (classes.width(), classes.height());
    let bit = |c: Class| match c {
        Class::Sea => 1u8,
        Class::NoData => 0,
        Class::Land => 2,
    };
    // OR of class bits over each row's horizontal 3-neighbourhood, then vertically.
    let horiz: Vec<u8> = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            (0..w).map(move |x| {
                (x.saturating_sub(1)..=(x + 1).min(w - 1))
                    .fold(0, |acc, xx| acc | bit(classes.get(xx, y)))
            })
        })
        .collect();
    let data: Vec<bool> = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            let horiz = &horiz;
            (0..w).map(move |x| {
                let bits = (y.saturating_sub(1)..=(y + 1).min(h - 1))
                    .fold(0, |acc, yy| acc | horiz[yy * w + x]);
                bits == 3
            })
        })
        .collect();
    CoastMask::new(w, h, data).expect("dimensions preserved")
}

/// One coastline pixel per primary-axis index at the highest probability
/// (ties to the smallest secondary coordinate).
pub fn extract_sigmoid(f: &FloatRaster, rule: OrientationRule) -> Result<CoastMask> {
    expect_channels(f, 1)?;
    let (w, h) = (f.width(), f.height());
    let orientation = rule.resolve(w, h);
    let (primary, secondary) = orientation.axes(w, h);
    let best: Vec<usize> = (0..primary)
        .into_par_iter()
        .map(|i| {
            argmax((0..secondary).map(|j| {
                let (x, y) = orientation.to_xy(i, j);
                f.get(x, y, 0)
            }))
        })
        .collect();
    let mut mask = CoastMask::empty(w, h);
    for (i, &j) in best.iter().enumerate() {
        let (x, y) = orientation.to_xy(i, j);
        mask.set(x, y, true);
    }
    Ok(mask)
}

/// Per primary-axis index, the mean secondary coordinate of the set pixels.
pub fn mask_to_path(m: &CoastMask, rule: OrientationRule) -> CoastlinePath {
    let (w, h) = (m.width(), m.height());
    let orientation = rule.resolve(w, h);
    let (primary, secondary) = orientation.axes(w, h);
    let coords = (0..primary)
        .into_par_iter()
        .map(|i| {
            let (mut sum, mut n) = (0usize, 0usize);
            for j in 0..secondary {
                let (x, y) = orientation.to_xy(i, j);
                if m.get(x, y) {
                    sum += j;
                    n += 1;
                }
            }
            (n > 0).then(|| sum as f64 / n as f64)
        })
        .collect();
    CoastlinePath::new(orientation, coords).expect("mask coordinates are in range")
}
