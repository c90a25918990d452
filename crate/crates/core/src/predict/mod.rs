//! Pluggable predictors and floating-window multi-scale inference.

mod backend;
mod oracle;
mod smooth;
mod tiling;

pub use backend::{ConstantPredictor, ExternalPredictor, FilePredictor};
pub use oracle::{logistic, Oracle, OracleConfig, OracleParams, OracleTruth};
pub use smooth::{gaussian_kernel, gaussian_smooth};
pub use tiling::{coverage_counts, tile_positions, tiled_predict, Aggregation, TilingConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::InputMode;
use crate::raster::{FloatRaster, Rect};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    /// Three-class (sea, no-data, land) probabilities.
    #[serde(alias = "softmax")]
    Softmax3,
    /// Single coastline probability.
    #[serde(alias = "sigmoid")]
    Sigmoid1,
}

impl Head {
    pub fn channels(self) -> usize {
        match self {
            Head::Softmax3 => 3,
            Head::Sigmoid1 => 1,
        }
    }
}

/// A constant backend value: one number or one per channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstantValue {
    One(f32),
    Many(Vec<f32>),
}

impl ConstantValue {
    pub fn values(&self) -> Vec<f32> {
        match self {
            ConstantValue::One(v) => vec![*v],
            ConstantValue::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Backend {
    /// Ground-truth driven verification predictor.
    Oracle(OracleParams),
    /// Precomputed tiles; `pattern` may contain `{scale}`, `{row}` and `{col}`.
    File {
        pattern: String,
    },
    Constant {
        value: ConstantValue,
    },
    /// Child process invoked as `<command> <args...> <in.fr> <out.fr>`.
    External {
        command: String,
        #[serde(default)]
        args: Vec<String>,
    },
}

/// One model of the ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictorSpec {
    pub id: String,
    #[serde(default)]
    pub input_mode: InputMode,
    pub head: Head,
    #[serde(default = "default_weight", alias = "weight")]
    pub ensemble_weight: f64,
    pub backend: Backend,
}

fn default_weight() -> f64 {
    1.0
}

impl PredictorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.ensemble_weight >= 0.0) || !self.ensemble_weight.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "predictor {}: weight must be finite and >= 0",
                self.id
            )));
        }
        match &self.backend {
            Backend::Oracle(p) => p.validate(),
            Backend::Constant { value } if value.values().is_empty() => {
                Err(Error::InvalidConfig(format!(
                    "predictor {}: constant backend needs at least one value",
                    self.id
                )))
            }
            Backend::Constant { value } => {
                let n = value.values().len();
                if n != self.head.channels() {
                    return Err(Error::ChannelMismatch {
                        expected: self.head.channels(),
                        found: n,
                    });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Build the predictor. Oracle backends need the ground truth.
    pub fn instantiate(&self, truth: Option<&OracleTruth>) -> Result<Model> {
        let predictor: Box<dyn Predictor> = match &self.backend {
            Backend::Oracle(params) => {
                let truth = truth.ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "predictor {}: oracle backend needs ground truth",
                        self.id
                    ))
                })?;
                Box::new(Oracle::new(OracleConfig::new(
                    truth,
                    self.head,
                    params.clone(),
                )?))
            }
            Backend::File { pattern } => Box::new(FilePredictor::new(pattern.clone())),
            Backend::Constant { value } => Box::new(ConstantPredictor::new(value.values())?),
            Backend::External { command, args } => {
                Box::new(ExternalPredictor::new(command.clone(), args.clone()))
            }
        };
        Ok(Model {
            spec: self.clone(),
            predictor,
        })
    }
}

/// Where a tile sits in the inference schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TileContext {
    pub scale_index: usize,
    pub scale: f64,
    pub row: usize,
    pub col: usize,
    /// Source window in image pixels; may extend past the image border.
    pub window: Rect,
}

impl TileContext {
    /// Stream id for per-tile random draws.
    pub fn stream_id(&self) -> u64 {
        ((self.scale_index as u64) << 48) | ((self.row as u64) << 24) | self.col as u64
    }
}

pub trait Predictor: Send + Sync {
    fn predict(&self, tile: &FloatRaster, ctx: &TileContext) -> Result<FloatRaster>;

    /// `Some(1)` for backends that must not be called concurrently.
    fn max_concurrency(&self) -> Option<usize> {
        None
    }
}

pub struct Model {
    pub spec: PredictorSpec,
    pub predictor: Box<dyn Predictor>,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("spec", &self.spec)
            .finish_non_exhaustive()
    }
}

impl Model {
    pub fn head(&self) -> Head {
        self.spec.head
    }

    pub fn predict_tile(&self, tile: &FloatRaster, ctx: &TileContext) -> Result<FloatRaster> {
        predict_tile(self, tile, ctx)
    }
}

/// Run one tile through a model and check the output shape against its head.
pub fn predict_tile(model: &Model, tile: &FloatRaster, ctx: &TileContext) -> Result<FloatRaster> {
    if tile.channels() != 1 {
        return Err(Error::ChannelMismatch {
            expected: 1,
            found: tile.channels(),
        });
    }
    let out = model.predictor.predict(tile, ctx)?;
    let expected = model.head().channels();
    if out.channels() != expected {
        return Err(Error::ChannelMismatch {
            expected,
            found: out.channels(),
        });
    }
    if out.width() != tile.width() || out.height() != tile.height() {
        return Err(Error::DimensionMismatch(format!(
            "predictor {} returned {}x{} for a {}x{} tile",
            model.spec.id,
            out.width(),
            out.height(),
            tile.width(),
            tile.height()
        )));
    }
    Ok(out)
}
