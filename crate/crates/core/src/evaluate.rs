//! Mean nearest-pixel distance scoring with a miss penalty.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{CoastMask, EvaluationPoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    pub miss_penalty: f64,
    /// Matches farther than this count as misses.
    pub miss_radius: Option<f64>,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            miss_penalty: 100.0,
            miss_radius: None,
        }
    }
}

impl ScoreConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.miss_penalty >= 0.0) || !self.miss_penalty.is_finite() {
            return Err(Error::InvalidConfig("miss_penalty must be >= 0".into()));
        }
        if let Some(r) = self.miss_radius {
            if !(r >= 0.0) {
                return Err(Error::InvalidConfig("miss_radius must be >= 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointScore {
    pub x: f64,
    pub y: f64,
    /// `None` marks a miss.
    pub distance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub per_point: Vec<PointScore>,
    pub mean_score: f64,
    pub hit_count: usize,
    pub miss_count: usize,
    pub mean_hit_distance: Option<f64>,
}

/// Set pixels grouped by column, rows ascending.
struct ColumnIndex {
    columns: Vec<Vec<usize>>,
}

impl ColumnIndex {
    fn new(mask: &CoastMask) -> Self {
        let mut columns = vec![Vec::new(); mask.width()];
        for (x, y) in mask.pixels() {
            columns[x].push(y);
        }
        for c in &mut columns {
            c.sort_unstable();
        }
        Self { columns }
    }

    /// Smallest `dx^2 + dy^2` from `(px, py)` to a set pixel in column `x`.
    fn column_best(&self, x: usize, px: f64, py: f64) -> Option<f64> {
        let rows = &self.columns[x];
        if rows.is_empty() {
            return None;
        }
        let dx = x as f64 - px;
        let at = rows.partition_point(|&r| (r as f64) < py);
        let mut best = f64::INFINITY;
        for &i in [at.checked_sub(1), Some(at)].iter().flatten() {
            if let Some(&r) = rows.get(i) {
                let dy = r as f64 - py;
                best = best.min(dx * dx + dy * dy);
            }
        }
        Some(best)
    }

    /// Exact squared distance to the nearest set pixel, scanning columns outward.
    fn nearest_sq(&self, px: f64, py: f64) -> Option<f64> {
        let w = self.columns.len() as isize;
        let start = (px.floor() as isize).clamp(0, w - 1);
        let mut best = f64::INFINITY;
        let (mut left, mut right) = (start, start + 1);
        loop {
            let dl = if left >= 0 {
                px - left as f64
            } else {
                f64::INFINITY
            };
            let dr = if right < w {
                right as f64 - px
            } else {
                f64::INFINITY
            };
            let (x, d) = if dl <= dr { (left, dl) } else { (right, dr) };
            if !d.is_finite() || d * d > best {
                break;
            }
            if let Some(v) = self.column_best(x as usize, px, py) {
                best = best.min(v);
            }
            if x == left {
                left -= 1;
            } else {
                right += 1;
            }
        }
        best.is_finite().then_some(best)
    }
}

/// Score a coastline mask against evaluation points.
///
/// Each point's distance is the Euclidean distance to the nearest set pixel
/// (pixel centres at integer coordinates); an empty mask or a distance beyond
/// `miss_radius` is a miss costing `miss_penalty`.
pub fn score(
    mask: &CoastMask,
    points: &[EvaluationPoint],
    cfg: &ScoreConfig,
) -> Result<ScoreReport> {
    cfg.validate()?;
    if points.is_empty() {
        return Err(Error::EmptyPointList);
    }
    if let Some(p) = points
        .iter()
        .find(|p| !p.in_bounds(mask.width(), mask.height()))
    {
        return Err(Error::CoordinateOutOfRange(format!(
            "evaluation point ({}, {}) outside {}x{} image",
            p.x,
            p.y,
            mask.width(),
            mask.height()
        )));
    }
    let index = ColumnIndex::new(mask);
    let per_point: Vec<PointScore> = points
        .par_iter()
        .map(|p| {
            let distance = index
                .nearest_sq(p.x, p.y)
                .map(f64::sqrt)
                .filter(|&d| cfg.miss_radius.is_none_or(|r| d <= r));
            PointScore {
                x: p.x,
                y: p.y,
                distance,
            }
        })
        .collect();
    Ok(summarize(per_point, cfg.miss_penalty))
}

/// Aggregate per-point results, summing in point order.
pub fn summarize(per_point: Vec<PointScore>, miss_penalty: f64) -> ScoreReport {
    let mut hit_sum = 0.0;
    let mut hit_count = 0;
    for d in per_point.iter().filter_map(|p| p.distance) {
        hit_sum += d;
        hit_count += 1;
    }
    let miss_count = per_point.len() - hit_count;
    let mean_score = (hit_sum + miss_count as f64 * miss_penalty) / per_point.len() as f64;
    ScoreReport {
        mean_score,
        hit_count,
        miss_count,
        mean_hit_distance: (hit_count > 0).then(|| hit_sum / hit_count as f64),
        per_point,
    }
}
