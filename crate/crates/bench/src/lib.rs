//! Shared fixtures for the criterion benchmarks.

use sarcoast::pipeline::Inputs;
use sarcoast::predict::{Backend, Head, Model, OracleParams, PredictorSpec};
use sarcoast::preprocess::InputMode;
use sarcoast::synth::{SceneConfig, SineTerm};

/// A synthetic scene of the given size with a three-term coastline.
pub fn scene_config(width: usize, height: usize) -> SceneConfig {
    let h = height as f64;
    SceneConfig {
        width,
        height,
        base: h / 2.0,
        terms: vec![
            SineTerm {
                amplitude: h / 12.0,
                frequency: 2.0,
                phase: 0.0,
            },
            SineTerm {
                amplitude: h / 36.0,
                frequency: 5.0,
                phase: 1.0,
            },
        ],
        point_spacing: 16,
        seed: 7,
        ..Default::default()
    }
}

pub fn inputs(width: usize, height: usize) -> Inputs {
    Inputs::from_scene(&scene_config(width, height)).expect("scene generates")
}

pub fn oracle_model(inputs: &Inputs, head: Head) -> Model {
    let sharpness = match head {
        Head::Softmax3 => 0.05,
        Head::Sigmoid1 => 0.002,
    };
    let spec = PredictorSpec {
        id: format!("{head:?}"),
        input_mode: InputMode::Log,
        head,
        ensemble_weight: 1.0,
        backend: Backend::Oracle(OracleParams {
            sharpness,
            noise_sigma: 0.08,
            seed: 1,
        }),
    };
    spec.instantiate(inputs.truth.as_ref())
        .expect("oracle builds")
}
