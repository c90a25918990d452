//! Weighted fusion of per-model coastlines and gap filling.

use crate::error::{Error, Result};
use crate::raster::{CoastMask, CoastlinePath, Orientation};

/// Weighted mean of the present coordinates at each index, with the weights
/// renormalized over the models present there.
///
/// A model with weight 0 never contributes; an index where no positively
/// weighted model is present stays absent.
pub fn ensemble_paths(paths: &[CoastlinePath], weights: &[f64]) -> Result<CoastlinePath> {
    let first = paths
        .first()
        .ok_or_else(|| Error::InvalidValue("no coastline paths to ensemble".into()))?;
    if weights.len() != paths.len() {
        return Err(Error::InvalidConfig(format!(
            "{} weights for {} paths",
            weights.len(),
            paths.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidConfig(
            "ensemble weights must be finite and >= 0".into(),
        ));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::ZeroWeights);
    }
    if paths
        .iter()
        .any(|p| p.orientation() != first.orientation() || p.len() != first.len())
    {
        return Err(Error::MixedOrientations);
    }

    let coords = (0..first.len())
        .map(|i| {
            let (mut sum, mut total) = (0f64, 0f64);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (p, &w) in paths.iter().zip(weights) {
                if let (Some(c), true) = (p.get(i), w > 0.0) {
                    sum += w * c;
                    total += w;
                    lo = lo.min(c);
                    hi = hi.max(c);
                }
            }
            // Clamping guards the convex-hull property against rounding.
            (total > 0.0).then(|| (sum / total).clamp(lo, hi))
        })
        .collect();
    CoastlinePath::new(first.orientation(), coords)
}

/// Linear interpolation across absent runs that have present neighbours on both sides.
pub fn interpolate_absent(coords: &[Option<f64>]) -> Vec<Option<f64>> {
    let mut out = coords.to_vec();
    let mut prev: Option<usize> = None;
    for i in 0..coords.len() {
        if let Some(b) = coords[i] {
            if let Some(p) = prev {
                let a = coords[p].unwrap();
                for (j, slot) in out.iter_mut().enumerate().take(i).skip(p + 1) {
                    *slot = Some(a + (b - a) * (j - p) as f64 / (i - p) as f64);
                }
            }
            prev = Some(i);
        }
    }
    out
}

/// Rasterize a path (rounding half away from zero) and close slope gaps.
///
/// Where consecutive rasterized coordinates differ by more than one pixel,
/// every integer coordinate strictly between them is added at the later
/// index, making the chain 8-connected. With `interpolate` set, absent runs
/// between two present indices are first filled by linear interpolation.
pub fn fill_gaps(path: &CoastlinePath, secondary_len: usize, interpolate: bool) -> CoastMask {
    let orientation = path.orientation();
    let (w, h) = match orientation {
        Orientation::Landscape => (path.len(), secondary_len),
        Orientation::Portrait => (secondary_len, path.len()),
    };
    let mut mask = CoastMask::empty(w, h);
    if secondary_len == 0 {
        return mask;
    }
    let coords = if interpolate {
        interpolate_absent(path.coords())
    } else {
        path.coords().to_vec()
    };
    let max = (secondary_len - 1) as f64;
    let rows: Vec<Option<usize>> = coords
        .iter()
        .map(|c| c.map(|v| v.round().clamp(0.0, max) as usize))
        .collect();

    let mut set = |i: usize, j: usize| {
        let (x, y) = orientation.to_xy(i, j);
        mask.set(x, y, true);
    };
    for (i, r) in rows.iter().enumerate() {
        let Some(r) = *r else { continue };
        set(i, r);
        if let Some(Some(prev)) = i.checked_sub(1).map(|p| rows[p]) {
            let (lo, hi) = (prev.min(r), prev.max(r));
            for j in lo + 1..hi {
                set(i, j);
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path(coords: &[Option<f64>]) -> CoastlinePath {
        CoastlinePath::new(Orientation::Landscape, coords.to_vec()).unwrap()
    }

    #[test]
    fn weighted_mean_known_value() {
        let a = path(&[Some(10.0)]);
        let b = path(&[Some(20.0)]);
        let e = ensemble_paths(&[a, b], &[0.75, 0.25]).unwrap();
        assert_eq!(e.coords(), &[Some(12.5)]);
    }

    #[test]
    fn identical_paths_are_a_fixed_point() {
        let p = path(&[Some(3.3), None, Some(7.9), Some(0.1)]);
        let e = ensemble_paths(
            &[p.clone(), p.clone(), p.clone(), p.clone()],
            &[0.1, 0.2, 0.3, 0.4],
        )
        .unwrap();
        assert_eq!(e, p);
    }

    #[test]
    fn absent_model_renormalized() {
        let a = path(&[Some(4.0), Some(6.0)]);
        let b = path(&[None, Some(8.0)]);
        let e = ensemble_paths(&[a, b], &[0.5, 0.5]).unwrap();
        assert_eq!(e.coords(), &[Some(4.0), Some(7.0)]);
    }

    #[test]
    fn ensemble_errors() {
        let a = path(&[Some(1.0)]);
        let b = CoastlinePath::new(Orientation::Portrait, vec![Some(1.0)]).unwrap();
        assert!(matches!(
            ensemble_paths(&[a.clone(), b], &[1.0, 1.0]),
            Err(Error::MixedOrientations)
        ));
        assert!(matches!(
            ensemble_paths(std::slice::from_ref(&a), &[0.0]),
            Err(Error::ZeroWeights)
        ));
        assert!(ensemble_paths(&[a], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn slope_gap_filled_at_later_column() {
        let mut coords = vec![None; 6];
        coords[3] = Some(2.0);
        coords[4] = Some(6.0);
        let m = fill_gaps(&path(&coords), 10, false);
        let set: Vec<(usize, usize)> = m.pixels().collect();
        assert_eq!(set.len(), 5);
        for p in [(3, 2), (4, 3), (4, 4), (4, 5), (4, 6)] {
            assert!(m.get(p.0, p.1), "{p:?}");
        }
    }

    #[test]
    fn absent_run_interpolated() {
        let coords = [None, None, None, None, Some(10.0), None, None, Some(13.0)];
        assert_eq!(
            &interpolate_absent(&coords)[4..],
            &[Some(10.0), Some(11.0), Some(12.0), Some(13.0)]
        );
        let m = fill_gaps(&path(&coords), 20, true);
        assert!(m.get(5, 11) && m.get(6, 12));
        let m = fill_gaps(&path(&coords), 20, false);
        assert_eq!(m.count(), 2);
    }

    #[test]
    fn rounding_half_away_from_zero_and_portrait() {
        let m = fill_gaps(&path(&[Some(2.5), Some(3.49)]), 8, false);
        assert!(m.get(0, 3) && m.get(1, 3));
        let p = CoastlinePath::new(Orientation::Portrait, vec![Some(1.0), Some(4.0)]).unwrap();
        let m = fill_gaps(&p, 6, false);
        assert_eq!((m.width(), m.height()), (6, 2));
        assert!(m.get(1, 0) && m.get(2, 1) && m.get(3, 1) && m.get(4, 1));
    }

    fn chain_connected(m: &CoastMask, i: usize, ri: usize, rj: usize) -> bool {
        // Walk from (i, ri) to (i + 1, rj) through set pixels of columns i and i + 1.
        let (lo, hi) = (ri.min(rj), ri.max(rj));
        let mut frontier = vec![(i, ri)];
        let mut seen = std::collections::HashSet::new();
        while let Some((x, y)) = frontier.pop() {
            if (x, y) == (i + 1, rj) {
                return true;
            }
            if !seen.insert((x, y)) {
                continue;
            }
            for nx in [x.saturating_sub(1), x, x + 1] {
                for ny in [y.saturating_sub(1), y, y + 1] {
                    if nx >= i
                        && nx <= i + 1
                        && ny + 1 >= lo
                        && ny <= hi + 1
                        && ny < m.height()
                        && m.get(nx, ny)
                    {
                        frontier.push((nx, ny));
                    }
                }
            }
        }
        false
    }

    proptest! {
        #[test]
        fn weighted_mean_stays_in_hull(
            cs in prop::collection::vec(prop::option::of(0.0f64..100.0), 1..6),
            ws in prop::collection::vec(0.01f64..10.0, 6),
            k in 0.01f64..100.0,
        ) {
            let paths: Vec<CoastlinePath> = cs.iter().map(|&c| path(&[c])).collect();
            let w = &ws[..paths.len()];
            let e = ensemble_paths(&paths, w).unwrap();
            let present: Vec<f64> = cs.iter().flatten().copied().collect();
            match e.get(0) {
                Some(v) => {
                    prop_assert!(present.iter().any(|&p| p <= v) && present.iter().any(|&p| p >= v));
                    let scaled: Vec<f64> = w.iter().map(|x| x * k).collect();
                    let e2 = ensemble_paths(&paths, &scaled).unwrap();
                    prop_assert!((e2.get(0).unwrap() - v).abs() <= 1e-9 * v.abs().max(1.0));
                }
                None => prop_assert!(present.is_empty()),
            }
        }

        #[test]
        fn filled_chains_are_connected(
            start in 0.0f64..60.0,
            steps in prop::collection::vec((-8.0f64..8.0, prop::bool::weighted(0.2)), 1..40),
        ) {
            let mut y = start;
            let mut coords = vec![Some(y)];
            for (dy, absent) in steps {
                y = (y + dy).clamp(0.0, 63.0);
                coords.push(if absent { None } else { Some(y) });
            }
            let p = path(&coords);
            let plain = fill_gaps(&p, 64, false);
            let filled = fill_gaps(&p, 64, true);
            for (i, c) in coords.iter().enumerate() {
                if let Some(v) = c {
                    prop_assert!(filled.get(i, v.round() as usize));
                }
            }
            for (x, y) in plain.pixels() {
                prop_assert!(filled.get(x, y));
            }
            let rows: Vec<Option<usize>> = interpolate_absent(&coords).iter().map(|c| c.map(|v| v.round() as usize)).collect();
            for i in 0..rows.len() - 1 {
                if let (Some(a), Some(b)) = (rows[i], rows[i + 1]) {
                    prop_assert!(chain_connected(&filled, i, a, b));
                }
            }
        }
    }
}
