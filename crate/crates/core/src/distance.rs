//! Exact Euclidean distance transform (lower envelope of parabolas, applied
//! separably along columns then rows).

use rayon::prelude::*;

const FAR: f64 = 1e20;

/// 1-D squared distance transform of `f` into `out`.
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let qf = q as f64;
        let intersect = |p: usize| {
            let pf = p as f64;
            ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf)
        };
        let mut s = intersect(v[k]);
        // z[0] is -inf, so this never runs past the first parabola.
        while s <= z[k] {
            k -= 1;
            s = intersect(v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while z[k + 1] < qf {
            k += 1;
        }
        let d = qf - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared Euclidean distance from each pixel center to the nearest feature
/// pixel center. `f64::INFINITY` everywhere when there are no features.
pub fn squared_distance_transform(width: usize, height: usize, features: &[bool]) -> Vec<f64> {
    assert_eq!(features.len(), width * height);

    // Column pass on a transposed copy so each column is contiguous.
    let mut cols = vec![0f64; width * height];
    cols.par_chunks_mut(height)
        .enumerate()
        .for_each(|(x, col)| {
            let f: Vec<f64> = (0..height)
                .map(|y| if features[y * width + x] { 0.0 } else { FAR })
                .collect();
            let mut v = vec![0usize; height];
            let mut z = vec![0f64; height + 1];
            edt_1d(&f, col, &mut v, &mut z);
        });

    let mut out = vec![0f64; width * height];
    out.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        let f: Vec<f64> = (0..width).map(|x| cols[x * height + y]).collect();
        let mut v = vec![0usize; width];
        let mut z = vec![0f64; width + 1];
        edt_1d(&f, row, &mut v, &mut z);
        for d in row.iter_mut() {
            if *d >= FAR * 0.5 {
                *d = f64::INFINITY;
            }
        }
    });
    out
}
