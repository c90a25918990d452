use std::path::PathBuf;
use std::process::Command;

use super::{Predictor, TileContext};
use crate::error::{Error, Result};
use crate::raster::{read_float_raster, write_float_raster, FloatRaster};

/// Returns the same per-channel values for every pixel.
#[derive(Clone, Debug)]
pub struct ConstantPredictor {
    values: Vec<f32>,
}

impl ConstantPredictor {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "constant backend needs finite values".into(),
            ));
        }
        Ok(Self { values })
    }
}

impl Predictor for ConstantPredictor {
    fn predict(&self, tile: &FloatRaster, _ctx: &TileContext) -> Result<FloatRaster> {
        let n = tile.width() * tile.height();
        let data = self
            .values
            .iter()
            .copied()
            .cycle()
            .take(n * self.values.len())
            .collect();
        FloatRaster::new(tile.width(), tile.height(), self.values.len(), data)
    }
}

/// Reads precomputed tile predictions from `.fr` files.
#[derive(Clone, Debug)]
pub struct FilePredictor {
    pattern: String,
}

impl FilePredictor {
    pub fn new(pattern: String) -> Self {
        Self { pattern }
    }

    pub fn path_for(&self, ctx: &TileContext) -> PathBuf {
        PathBuf::from(
            self.pattern
                .replace("{scale}", &ctx.scale_index.to_string())
                .replace("{row}", &ctx.row.to_string())
                .replace("{col}", &ctx.col.to_string()),
        )
    }
}

impl Predictor for FilePredictor {
    fn predict(&self, _tile: &FloatRaster, ctx: &TileContext) -> Result<FloatRaster> {
        let path = self.path_for(ctx);
        if !path.exists() {
            return Err(Error::MissingPrediction(path));
        }
        read_float_raster(&path)
    }
}

/// Runs a child process per tile, exchanging `.fr` files in a temporary directory.
#[derive(Clone, Debug)]
pub struct ExternalPredictor {
    command: String,
    args: Vec<String>,
}

impl ExternalPredictor {
    pub fn new(command: String, args: Vec<String>) -> Self {
        Self { command, args }
    }
}

impl Predictor for ExternalPredictor {
    fn predict(&self, tile: &FloatRaster, _ctx: &TileContext) -> Result<FloatRaster> {
        let dir =
            tempfile::tempdir().map_err(|e| Error::Backend(format!("temporary directory: {e}")))?;
        let input = dir.path().join("in.fr");
        let output = dir.path().join("out.fr");
        write_float_raster(tile, &input)?;
        let status = Command::new(&self.command)
            .args(&self.args)
            .arg(&input)
            .arg(&output)
            .status()
            .map_err(|e| Error::Backend(format!("{}: {e}", self.command)))?;
        if !status.success() {
            return Err(Error::Backend(format!(
                "{} exited with {status}",
                self.command
            )));
        }
        read_float_raster(&output)
    }

    fn max_concurrency(&self) -> Option<usize> {
        Some(1)
    }
}
