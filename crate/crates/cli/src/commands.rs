use std::fs;
use std::path::Path;

use sarcoast::augment::{augment_batch, AugmentConfig, LabeledImage};
use sarcoast::ensemble::ensemble_paths;
use sarcoast::evaluate::{score, ScoreConfig};
use sarcoast::extract::{extract_sigmoid, extract_softmax, mask_to_path, OrientationRule};
use sarcoast::pipeline::{infer, postprocess, run_pipeline, Inputs, PipelineConfig};
use sarcoast::predict::Head;
use sarcoast::preprocess::{
    encode_labels, normalize, InputMode, LabelSmoothingConfig, PreprocessConfig,
};
use sarcoast::raster::{
    read_coastline_csv, read_float_raster, read_points_csv, read_raster, write_coastline_csv,
    write_float_raster, write_points_csv, write_raster,
};
use sarcoast::synth::{generate_scene, SceneConfig};
use sarcoast::{ClassMap, CoastMask, Error};

use crate::{Command, HeadArg, ModeArg, OrientationArg};

pub enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

impl From<ModeArg> for InputMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Linear => InputMode::Linear,
            ModeArg::Log => InputMode::Log,
        }
    }
}

impl From<HeadArg> for Head {
    fn from(h: HeadArg) -> Self {
        match h {
            HeadArg::Softmax3 => Head::Softmax3,
            HeadArg::Sigmoid1 => Head::Sigmoid1,
        }
    }
}

impl From<OrientationArg> for OrientationRule {
    fn from(o: OrientationArg) -> Self {
        match o {
            OrientationArg::Auto => OrientationRule::Auto,
            OrientationArg::Landscape => OrientationRule::Landscape,
            OrientationArg::Portrait => OrientationRule::Portrait,
        }
    }
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.into(),
        source: e,
    })
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Error> {
    match threads {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}"))),
        _ => Ok(f()),
    }
}

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Synth(a) => synth(a),
        Command::Preprocess(a) => preprocess(a),
        Command::Augment(a) => augment(a),
        Command::Infer(a) => infer_cmd(a),
        Command::Extract(a) => extract(a),
        Command::Ensemble(a) => ensemble(a),
        Command::Postprocess(a) => postprocess_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Pipeline(a) => pipeline(a),
    }
}

fn staged<T>(stage: &str, r: Result<T, Error>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Data(e.in_stage(stage)))
}

fn synth(a: crate::SynthArgs) -> Outcome {
    let mut cfg: SceneConfig = match &a.config {
        Some(p) => staged("synth", read_toml(p))?,
        None => SceneConfig::default(),
    };
    if let Some(w) = a.width {
        cfg.width = w;
    }
    if let Some(h) = a.height {
        if a.config.is_none() {
            // Keep the default curve inside a resized scene.
            let k = h as f64 / cfg.height as f64;
            cfg.base *= k;
            cfg.terms.iter_mut().for_each(|t| t.amplitude *= k);
        }
        cfg.height = h;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(l) = a.looks {
        cfg.speckle_looks = l;
    }
    staged(
        "synth",
        (|| {
            let scene = generate_scene(&cfg)?;
            create_dir(&a.out_dir)?;
            write_raster(&scene.image, a.out_dir.join("image.pgm"))?;
            write_raster(&scene.classes.to_raster(), a.out_dir.join("classes.pgm"))?;
            write_raster(&scene.coast.to_raster(), a.out_dir.join("coast.pgm"))?;
            write_points_csv(&scene.points, a.out_dir.join("points.csv"))?;
            write_coastline_csv(&scene.curve, a.out_dir.join("curve.csv"))
        })(),
    )
}

fn preprocess(a: crate::PreprocessArgs) -> Outcome {
    let mut cfg = PreprocessConfig {
        mode: a.mode.into(),
        ..Default::default()
    };
    if let Some(c) = a.noise_coefficient {
        cfg.noise_coefficient = c;
    }
    if let Some(f) = a.log_floor {
        cfg.log_floor = f;
    }
    if let Some(r) = &a.log_range {
        cfg.log_range = (r[0], r[1]);
    }
    staged(
        "preprocess",
        (|| {
            let img = read_raster(&a.input)?;
            let out = normalize(&img, cfg.mode, &cfg)?;
            write_float_raster(&out, &a.output)
        })(),
    )
}

fn augment(a: crate::AugmentArgs) -> Outcome {
    if a.images.len() != a.classes.len() {
        return Err(Failure::Usage(format!(
            "{} --image but {} --classes",
            a.images.len(),
            a.classes.len()
        )));
    }
    if !a.coasts.is_empty() && a.coasts.len() != a.images.len() {
        return Err(Failure::Usage(
            "give --coast for every --image or for none".into(),
        ));
    }
    let mut cfg: AugmentConfig = match &a.config {
        Some(p) => staged("augment", read_toml(p))?,
        None => AugmentConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let mode: InputMode = a.mode.into();
    staged(
        "augment",
        (|| {
            let pre = PreprocessConfig::default();
            let smoothing = LabelSmoothingConfig::default();
            let mut sources = Vec::with_capacity(a.images.len());
            for (i, (img, cls)) in a.images.iter().zip(&a.classes).enumerate() {
                let image = normalize(&read_raster(img)?, mode, &pre)?;
                let classes = ClassMap::from_raster(&read_raster(cls)?)?;
                let label = match a.coasts.get(i) {
                    Some(c) => encode_labels(
                        &classes,
                        &CoastMask::from_raster(&read_raster(c)?),
                        Some(&smoothing),
                    )?,
                    None => encode_labels(
                        &classes,
                        &CoastMask::empty(classes.width(), classes.height()),
                        None,
                    )?,
                };
                sources.push(LabeledImage::new(image, label)?);
            }
            let samples = with_threads(a.threads, || {
                augment_batch(&sources, a.first, a.count, &cfg)
            })??;
            create_dir(&a.out_dir)?;
            let mut jsonl = String::new();
            for (k, s) in samples.iter().enumerate() {
                let index = a.first + k as u64;
                write_float_raster(
                    &s.image,
                    a.out_dir.join(format!("sample_{index:05}_image.fr")),
                )?;
                write_float_raster(
                    &s.label,
                    a.out_dir.join(format!("sample_{index:05}_label.fr")),
                )?;
                for p in &s.provenance {
                    let mut v =
                        serde_json::to_value(p).map_err(|e| Error::InvalidValue(e.to_string()))?;
                    v["sample"] = index.into();
                    jsonl.push_str(&v.to_string());
                    jsonl.push('\n');
                }
            }
            let path = a.out_dir.join("provenance.jsonl");
            fs::write(&path, jsonl).map_err(|e| Error::Io { path, source: e })
        })(),
    )
}

fn infer_cmd(a: crate::InferArgs) -> Outcome {
    let cfg = staged("config", PipelineConfig::load(&a.config))?;
    let spec = match &a.predictor {
        Some(id) => staged("config", cfg.predictor(id))?,
        None => cfg.predictors.first().ok_or_else(|| {
            Failure::Data(
                Error::InvalidConfig("config defines no [[predictor]]".into()).in_stage("config"),
            )
        })?,
    };
    let stage = format!("infer:{}", spec.id);
    staged(
        &stage,
        (|| {
            spec.validate()?;
            cfg.preprocess.validate()?;
            cfg.tiling.validate()?;
            let mut inputs = match (&cfg.scene, &cfg.input) {
                (None, None) => None,
                _ => Some(Inputs::load(&cfg)?),
            };
            let image = match (&a.image, &mut inputs) {
                (Some(p), _) => read_raster(p)?,
                (None, Some(inputs)) => std::mem::replace(
                    &mut inputs.image,
                    sarcoast::RasterImage::new(1, 1, vec![0])?,
                ),
                (None, None) => {
                    return Err(Error::InvalidConfig(
                        "no --image and no input in the config".into(),
                    ))
                }
            };
            let model = spec.instantiate(inputs.as_ref().and_then(|i| i.truth.as_ref()))?;
            let prob = with_threads(a.threads, || {
                infer(&model, &image, &cfg.preprocess, &cfg.tiling)
            })??;
            write_float_raster(&prob, &a.output)
        })(),
    )
}

fn extract(a: crate::ExtractArgs) -> Outcome {
    let rule: OrientationRule = a.orientation.into();
    staged(
        "extract",
        (|| {
            let prob = read_float_raster(&a.input)?;
            let mask = match Head::from(a.head) {
                Head::Softmax3 => extract_softmax(&prob)?,
                Head::Sigmoid1 => extract_sigmoid(&prob, rule)?,
            };
            if let Some(m) = &a.mask {
                write_raster(&mask.to_raster(), m)?;
            }
            write_coastline_csv(&mask_to_path(&mask, rule), &a.output)
        })(),
    )
}

fn ensemble(a: crate::EnsembleArgs) -> Outcome {
    let weights = if a.weights.is_empty() {
        vec![1.0; a.inputs.len()]
    } else if a.weights.len() == a.inputs.len() {
        a.weights.clone()
    } else {
        return Err(Failure::Usage(format!(
            "{} weights for {} inputs",
            a.weights.len(),
            a.inputs.len()
        )));
    };
    staged(
        "ensemble",
        (|| {
            let paths = a
                .inputs
                .iter()
                .map(|p| read_coastline_csv(p, None))
                .collect::<Result<Vec<_>, _>>()?;
            // Pad to a common length: unlisted trailing indices are misses.
            let len = paths.iter().map(|p| p.len()).max().unwrap_or(0);
            let paths = paths
                .into_iter()
                .map(|p| {
                    let mut c = p.coords().to_vec();
                    c.resize(len, None);
                    sarcoast::CoastlinePath::new(p.orientation(), c)
                })
                .collect::<Result<Vec<_>, _>>()?;
            write_coastline_csv(&ensemble_paths(&paths, &weights)?, &a.output)
        })(),
    )
}

fn postprocess_cmd(a: crate::PostprocessArgs) -> Outcome {
    staged(
        "postprocess",
        (|| {
            let path = read_coastline_csv(&a.input, Some((a.width, a.height)))?;
            let (mask, dense) = postprocess(&path, a.width, a.height, !a.no_interpolate);
            write_raster(&mask.to_raster(), &a.mask)?;
            match &a.output {
                Some(o) => write_coastline_csv(&dense, o),
                None => Ok(()),
            }
        })(),
    )
}

fn evaluate(a: crate::EvaluateArgs) -> Outcome {
    let mut cfg = ScoreConfig::default();
    if let Some(p) = a.miss_penalty {
        cfg.miss_penalty = p;
    }
    cfg.miss_radius = a.miss_radius;
    staged(
        "evaluate",
        (|| {
            let mask = CoastMask::from_raster(&read_raster(&a.mask)?);
            let points = read_points_csv(&a.points)?;
            let report = score(&mask, &points, &cfg)?;
            let mut text = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::InvalidValue(e.to_string()))?;
            text.push('\n');
            match &a.output {
                Some(o) => fs::write(o, text).map_err(|e| Error::Io {
                    path: o.clone(),
                    source: e,
                }),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        })(),
    )
}

fn pipeline(a: crate::PipelineArgs) -> Outcome {
    let mut cfg = staged("config", PipelineConfig::load(&a.config))?;
    if let Some(t) = a.threads {
        cfg.threads = Some(t);
    }
    if let Some(d) = a.output_dir {
        cfg.output_dir = d;
    }
    let outcome = run_pipeline(&cfg)?;
    if let Some(r) = outcome.report {
        for m in &r.models {
            println!(
                "{:<24} mean_score {:>10.4}  misses {}",
                m.id, m.mean_score, m.miss_count
            );
        }
        println!(
            "{:<24} mean_score {:>10.4}  misses {}",
            "ensemble", r.ensemble.mean_score, r.ensemble.miss_count
        );
    }
    println!("outputs written to {}", cfg.output_dir.display());
    Ok(())
}
