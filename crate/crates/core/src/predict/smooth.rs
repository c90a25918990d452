use rayon::prelude::*;

use crate::raster::FloatRaster;
use crate::resample::reflect;

/// Unnormalized Gaussian taps for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    (-r..=r)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect()
}

/// Convolve one line of length `len`; `idx` maps a line position to a slice offset.
fn convolve_axis(
    src: &[f32],
    dst: &mut [f32],
    kernel: &[f64],
    total: f64,
    idx: impl Fn(usize) -> usize,
    len: usize,
) {
    let r = (kernel.len() / 2) as isize;
    for (i, out) in dst.iter_mut().enumerate().take(len) {
        let mut acc = 0f64;
        for (k, &w) in kernel.iter().enumerate() {
            let j = reflect(i as isize + k as isize - r, len);
            acc += w * src[idx(j)] as f64;
        }
        *out = (acc / total) as f32;
    }
}

/// Separable Gaussian smoothing of every channel with reflective borders.
///
/// The kernel is truncated at `ceil(3 sigma)` and normalized to sum 1;
/// `sigma = 0` returns the input unchanged.
pub fn gaussian_smooth(r: &FloatRaster, sigma: f64) -> FloatRaster {
    if !(sigma > 0.0) {
        return r.clone();
    }
    let kernel = gaussian_kernel(sigma);
    let total: f64 = kernel.iter().sum();
    let (w, h, ch) = (r.width(), r.height(), r.channels());
    let src = r.data();

    let mut horiz = vec![0f32; src.len()];
    horiz
        .par_chunks_mut(w * ch)
        .enumerate()
        .for_each(|(y, row_out)| {
            let row = &src[y * w * ch..(y + 1) * w * ch];
            let mut line = vec![0f32; w];
            for c in 0..ch {
                convolve_axis(row, &mut line, &kernel, total, |x| x * ch + c, w);
                for (x, v) in line.iter().enumerate() {
                    row_out[x * ch + c] = *v;
                }
            }
        });

    let mut out = vec![0f32; src.len()];
    out.par_chunks_mut(w * ch)
        .enumerate()
        .for_each(|(y, row_out)| {
            let rad = (kernel.len() / 2) as isize;
            for (i, v) in row_out.iter_mut().enumerate() {
                let mut acc = 0f64;
                for (k, &wt) in kernel.iter().enumerate() {
                    let yy = reflect(y as isize + k as isize - rad, h);
                    acc += wt * horiz[yy * w * ch + i] as f64;
                }
                *v = (acc / total) as f32;
            }
        });
    FloatRaster::from_vec_unchecked(w, h, ch, out)
}
