//! Raster resampling with pixel-center alignment.
//!
//! Destination pixel `d` on an axis of length `dst` samples source coordinate
//! `(d + 0.5) * src / dst - 0.5`, clamped to the source extent.

use crate::raster::FloatRaster;

/// Reflect an out-of-range index back into `0..n` (mirror without repeating the edge).
pub fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

#[inline]
pub(crate) fn lerp(a: f32, b: f32, t: f32) -> f32 {
    a + (b - a) * t
}

/// Linear interpolation taps for one axis.
#[derive(Clone, Debug)]
pub(crate) struct AxisTaps {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
    pub frac: Vec<f32>,
}

impl AxisTaps {
    pub fn new(src: usize, dst: usize) -> Self {
        let ratio = src as f64 / dst as f64;
        let mut lo = Vec::with_capacity(dst);
        let mut hi = Vec::with_capacity(dst);
        let mut frac = Vec::with_capacity(dst);
        for d in 0..dst {
            let s = ((d as f64 + 0.5) * ratio - 0.5).clamp(0.0, (src - 1) as f64);
            let l = s.floor() as usize;
            lo.push(l);
            hi.push((l + 1).min(src - 1));
            frac.push((s - l as f64) as f32);
        }
        Self { lo, hi, frac }
    }
}

/// Bilinear sample of channel `c` at real source coordinates, clamped to the raster.
pub fn sample_bilinear(src: &FloatRaster, sx: f64, sy: f64, c: usize) -> f32 {
    let sx = sx.clamp(0.0, (src.width() - 1) as f64);
    let sy = sy.clamp(0.0, (src.height() - 1) as f64);
    let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
    let (x1, y1) = (
        (x0 + 1).min(src.width() - 1),
        (y0 + 1).min(src.height() - 1),
    );
    let (fx, fy) = ((sx - x0 as f64) as f32, (sy - y0 as f64) as f32);
    let top = lerp(src.get(x0, y0, c), src.get(x1, y0, c), fx);
    let bottom = lerp(src.get(x0, y1, c), src.get(x1, y1, c), fx);
    lerp(top, bottom, fy)
}

/// Bilinear resize of every channel.
pub fn resize_bilinear(src: &FloatRaster, width: usize, height: usize) -> FloatRaster {
    if src.width() == width && src.height() == height {
        return src.clone();
    }
    let ch = src.channels();
    let tx = AxisTaps::new(src.width(), width);
    let ty = AxisTaps::new(src.height(), height);
    let mut out = Vec::with_capacity(width * height * ch);
    for y in 0..height {
        let (r0, r1, fy) = (src.row(ty.lo[y]), src.row(ty.hi[y]), ty.frac[y]);
        for x in 0..width {
            let (a, b, fx) = (tx.lo[x] * ch, tx.hi[x] * ch, tx.frac[x]);
            for c in 0..ch {
                let top = lerp(r0[a + c], r0[b + c], fx);
                let bottom = lerp(r1[a + c], r1[b + c], fx);
                out.push(lerp(top, bottom, fy));
            }
        }
    }
    FloatRaster::from_vec_unchecked(width, height, ch, out)
}

/// Overlap weights of destination pixels over source pixels on one axis.
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let ratio = src as f64 / dst as f64;
    (0..dst)
        .map(|d| {
            let (a, b) = (d as f64 * ratio, (d + 1) as f64 * ratio);
            let first = a.floor() as usize;
            let last = (b.ceil() as usize).min(src);
            (first..last)
                .filter_map(|s| {
                    let overlap = (b.min(s as f64 + 1.0) - a.max(s as f64)).max(0.0);
                    (overlap > 0.0).then_some((s, overlap))
                })
                .collect()
        })
        .collect()
}

/// Area-weighted resize: each destination pixel is the overlap-weighted mean
/// of the source pixels under its footprint. Output stays within the source range.
pub fn resize_area(src: &FloatRaster, width: usize, height: usize) -> FloatRaster {
    if src.width() == width && src.height() == height {
        return src.clone();
    }
    let ch = src.channels();
    let wx = area_weights(src.width(), width);
    let wy = area_weights(src.height(), height);
    let mut out = Vec::with_capacity(width * height * ch);
    let mut acc = vec![0f64; ch];
    for ys in &wy {
        for xs in &wx {
            acc.iter_mut().for_each(|a| *a = 0.0);
            let mut total = 0.0;
            for &(sy, wyv) in ys {
                for &(sx, wxv) in xs {
                    let w = wyv * wxv;
                    total += w;
                    for (c, a) in acc.iter_mut().enumerate() {
                        *a += w * src.get(sx, sy, c) as f64;
                    }
                }
            }
            out.extend(acc.iter().map(|a| (a / total) as f32));
        }
    }
    FloatRaster::from_vec_unchecked(width, height, ch, out)
}
