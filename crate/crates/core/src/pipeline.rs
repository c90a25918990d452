//! Config-driven end-to-end run: per-model inference and extraction, then
//! ensembling, gap filling and scoring.
//!
//! Relative paths in a config file are resolved against the file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::{ensemble_paths, fill_gaps, interpolate_absent};
use crate::error::{Error, Result};
use crate::evaluate::{score, ScoreConfig, ScoreReport};
use crate::extract::{extract_sigmoid, extract_softmax, mask_to_path, OrientationRule};
use crate::predict::{tiled_predict, Head, Model, OracleTruth, PredictorSpec, TilingConfig};
use crate::preprocess::{normalize, InputMode, PreprocessConfig};
use crate::raster::{
    read_points_csv, read_raster, write_coastline_csv, write_points_csv, write_raster, ClassMap,
    CoastMask, CoastlinePath, EvaluationPoint, FloatRaster, RasterImage,
};
use crate::synth::{generate_scene, SceneConfig};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputFiles {
    pub image: PathBuf,
    pub points: Option<PathBuf>,
    /// Class PGM (0 / 32767 / 65534); needed by oracle predictors.
    pub truth_classes: Option<PathBuf>,
    /// Coast mask PGM; needed by oracle predictors.
    pub truth_coast: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub orientation: OrientationRule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostprocessConfig {
    pub interpolate_absent: bool,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        Self {
            interpolate_absent: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    /// Worker threads; `None` or 0 uses the ambient thread pool.
    pub threads: Option<usize>,
    /// Also write every model's probability map as `<id>.fr`.
    pub write_probabilities: bool,
    pub scene: Option<SceneConfig>,
    pub input: Option<InputFiles>,
    pub preprocess: PreprocessConfig,
    pub tiling: TilingConfig,
    pub extract: ExtractConfig,
    pub postprocess: PostprocessConfig,
    pub score: ScoreConfig,
    #[serde(rename = "predictor")]
    pub predictors: Vec<PredictorSpec>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("pipeline_out"),
            threads: None,
            write_probabilities: false,
            scene: None,
            input: None,
            preprocess: PreprocessConfig::default(),
            tiling: TilingConfig::default(),
            extract: ExtractConfig::default(),
            postprocess: PostprocessConfig::default(),
            score: ScoreConfig::default(),
            predictors: Vec::new(),
        }
    }
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Parse a config file and resolve its relative paths.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        rebase(base, &mut cfg.output_dir);
        if let Some(input) = &mut cfg.input {
            rebase(base, &mut input.image);
            for p in [
                &mut input.points,
                &mut input.truth_classes,
                &mut input.truth_coast,
            ]
            .into_iter()
            .flatten()
            {
                rebase(base, p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.scene, &self.input) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig(
                    "give either [scene] or [input], not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::InvalidConfig(
                    "config needs a [scene] or an [input] table".into(),
                ))
            }
            _ => {}
        }
        if self.predictors.is_empty() {
            return Err(Error::InvalidConfig(
                "config defines no [[predictor]]".into(),
            ));
        }
        for (i, p) in self.predictors.iter().enumerate() {
            if self.predictors[..i].iter().any(|q| q.id == p.id) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate predictor id {:?}",
                    p.id
                )));
            }
            p.validate()?;
        }
        self.preprocess.validate()?;
        self.tiling.validate()?;
        self.score.validate()
    }

    pub fn predictor(&self, id: &str) -> Result<&PredictorSpec> {
        self.predictors
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| Error::InvalidConfig(format!("no predictor with id {id:?}")))
    }
}

/// Image, optional ground truth and optional evaluation points.
#[derive(Clone, Debug)]
pub struct Inputs {
    pub image: RasterImage,
    pub truth: Option<OracleTruth>,
    pub points: Option<Vec<EvaluationPoint>>,
}

impl Inputs {
    pub fn from_scene(cfg: &SceneConfig) -> Result<Self> {
        let s = generate_scene(cfg)?;
        Ok(Self {
            image: s.image,
            truth: Some(OracleTruth::new(s.classes, s.coast)?),
            points: Some(s.points),
        })
    }

    pub fn from_files(files: &InputFiles) -> Result<Self> {
        let image = read_raster(&files.image)?;
        let truth = match (&files.truth_classes, &files.truth_coast) {
            (Some(c), Some(m)) => Some(OracleTruth::new(
                ClassMap::from_raster(&read_raster(c)?)?,
                CoastMask::from_raster(&read_raster(m)?),
            )?),
            (None, None) => None,
            _ => {
                return Err(Error::InvalidConfig(
                    "truth_classes and truth_coast must be given together".into(),
                ))
            }
        };
        if let Some(t) = &truth {
            if t.classes.width() != image.width() || t.classes.height() != image.height() {
                return Err(Error::DimensionMismatch(
                    "truth rasters do not match the image".into(),
                ));
            }
        }
        let points = files.points.as_ref().map(read_points_csv).transpose()?;
        Ok(Self {
            image,
            truth,
            points,
        })
    }

    pub fn load(cfg: &PipelineConfig) -> Result<Self> {
        match (&cfg.scene, &cfg.input) {
            (Some(scene), _) => Self::from_scene(scene),
            (None, Some(files)) => Self::from_files(files),
            (None, None) => Err(Error::InvalidConfig(
                "config needs a [scene] or an [input] table".into(),
            )),
        }
    }

    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }
}

/// Preprocess, then run the floating-window inference of one model.
pub fn infer(
    model: &Model,
    image: &RasterImage,
    pre: &PreprocessConfig,
    tiling: &TilingConfig,
) -> Result<FloatRaster> {
    let input = normalize(image, model.spec.input_mode, pre)?;
    tiled_predict(model, &input, tiling)
}

/// The head-specific extraction followed by conversion to a path.
pub fn extract_path(
    prob: &FloatRaster,
    head: Head,
    rule: OrientationRule,
) -> Result<CoastlinePath> {
    let mask = match head {
        Head::Softmax3 => extract_softmax(prob)?,
        Head::Sigmoid1 => extract_sigmoid(prob, rule)?,
    };
    Ok(mask_to_path(&mask, rule))
}

/// Secondary-axis length for a path over a `width x height` image.
pub fn secondary_len(path: &CoastlinePath, width: usize, height: usize) -> usize {
    path.orientation().axes(width, height).1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub id: String,
    pub mean_score: f64,
    pub hit_count: usize,
    pub miss_count: usize,
    pub mean_hit_distance: Option<f64>,
}

/// Contents of `score.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    #[serde(flatten)]
    pub ensemble: ScoreReport,
    /// Each model scored on its own gap-filled coastline.
    pub models: Vec<ModelScore>,
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub paths: Vec<CoastlinePath>,
    pub ensemble: CoastlinePath,
    pub mask: CoastMask,
    pub report: Option<PipelineReport>,
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::InvalidValue(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Run the whole pipeline in the configured thread pool and write its outputs.
///
/// Files written to `output_dir`: `<id>.csv` per model (plus `<id>.fr` with
/// `write_probabilities`), `ensemble.csv`, `coastline.pgm`, `coastline.csv`
/// and, when evaluation points are available, `score.json`. Scene runs also
/// write the generated `image.pgm`, `classes.pgm`, `truth_coast.pgm` and `points.csv`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    match cfg.threads {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            pool.install(|| run_in_pool(cfg))
        }
        _ => run_in_pool(cfg),
    }
}

fn run_in_pool(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    let out = &cfg.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e).in_stage("setup"))?;

    let stage = if cfg.scene.is_some() { "synth" } else { "load" };
    let inputs = Inputs::load(cfg).map_err(|e| e.in_stage(stage))?;
    if cfg.scene.is_some() {
        let truth = inputs.truth.as_ref().expect("scenes carry truth");
        (|| -> Result<()> {
            write_raster(&inputs.image, out.join("image.pgm"))?;
            write_raster(&truth.classes.to_raster(), out.join("classes.pgm"))?;
            write_raster(&truth.coast.to_raster(), out.join("truth_coast.pgm"))?;
            write_points_csv(
                inputs.points.as_deref().unwrap_or(&[]),
                out.join("points.csv"),
            )
        })()
        .map_err(|e| e.in_stage(stage))?;
    }
    let (w, h) = (inputs.width(), inputs.height());

    let mut paths = Vec::with_capacity(cfg.predictors.len());
    let mut model_scores = Vec::new();
    for spec in &cfg.predictors {
        let infer_stage = format!("infer:{}", spec.id);
        let model = spec
            .instantiate(inputs.truth.as_ref())
            .map_err(|e| e.in_stage(&infer_stage))?;
        let prob = infer(&model, &inputs.image, &cfg.preprocess, &cfg.tiling)
            .map_err(|e| e.in_stage(&infer_stage))?;
        if cfg.write_probabilities {
            crate::raster::write_float_raster(&prob, out.join(format!("{}.fr", spec.id)))
                .map_err(|e| e.in_stage(&infer_stage))?;
        }
        let extract_stage = format!("extract:{}", spec.id);
        let path = extract_path(&prob, spec.head, cfg.extract.orientation)
            .map_err(|e| e.in_stage(&extract_stage))?;
        drop(prob);
        write_coastline_csv(&path, out.join(format!("{}.csv", spec.id)))
            .map_err(|e| e.in_stage(&extract_stage))?;
        if let Some(points) = &inputs.points {
            let mask = fill_gaps(
                &path,
                secondary_len(&path, w, h),
                cfg.postprocess.interpolate_absent,
            );
            let r = score(&mask, points, &cfg.score)
                .map_err(|e| e.in_stage(format!("evaluate:{}", spec.id)))?;
            model_scores.push(ModelScore {
                id: spec.id.clone(),
                mean_score: r.mean_score,
                hit_count: r.hit_count,
                miss_count: r.miss_count,
                mean_hit_distance: r.mean_hit_distance,
            });
        }
        paths.push(path);
    }

    let weights: Vec<f64> = cfg.predictors.iter().map(|p| p.ensemble_weight).collect();
    let ensemble = ensemble_paths(&paths, &weights).map_err(|e| e.in_stage("ensemble"))?;
    write_coastline_csv(&ensemble, out.join("ensemble.csv")).map_err(|e| e.in_stage("ensemble"))?;

    let (mask, dense) = postprocess(&ensemble, w, h, cfg.postprocess.interpolate_absent);
    (|| -> Result<()> {
        write_raster(&mask.to_raster(), out.join("coastline.pgm"))?;
        write_coastline_csv(&dense, out.join("coastline.csv"))
    })()
    .map_err(|e| e.in_stage("postprocess"))?;

    let report = match &inputs.points {
        Some(points) => {
            let ensemble_report =
                score(&mask, points, &cfg.score).map_err(|e| e.in_stage("evaluate"))?;
            let report = PipelineReport {
                ensemble: ensemble_report,
                models: model_scores,
            };
            write_json(&report, &out.join("score.json")).map_err(|e| e.in_stage("evaluate"))?;
            Some(report)
        }
        None => None,
    };
    Ok(PipelineOutcome {
        paths,
        ensemble,
        mask,
        report,
    })
}

/// Gap-filled mask plus the densified path (absent runs interpolated when enabled).
pub fn postprocess(
    path: &CoastlinePath,
    width: usize,
    height: usize,
    interpolate: bool,
) -> (CoastMask, CoastlinePath) {
    let mask = fill_gaps(path, secondary_len(path, width, height), interpolate);
    let dense = if interpolate {
        CoastlinePath::new(path.orientation(), interpolate_absent(path.coords()))
            .expect("interpolation stays in range")
    } else {
        path.clone()
    };
    (mask, dense)
}

/// Input transform used by a model; exposed for the CLI `preprocess` command.
pub fn preprocess_image(
    image: &RasterImage,
    mode: InputMode,
    cfg: &PreprocessConfig,
) -> Result<FloatRaster> {
    normalize(image, mode, cfg)
}
