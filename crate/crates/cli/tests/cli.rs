use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sarcoast::raster::{read_float_raster, write_float_raster};
use sarcoast::FloatRaster;

fn sarcoast(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sarcoast"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"
output_dir = "out"

[scene]
width = 160
height = 120
base = 60.0
point_spacing = 4
seed = 9
terms = [{ amplitude = 15.0, frequency = 2.0 }]

[tiling]
tile_side = 64
stride = 32
scales = [1.0, 2.0]

[[predictor]]
id = "soft"
input_mode = "log"
head = "softmax3"
backend = { kind = "oracle", sharpness = 0.1, noise_sigma = 0.05, seed = 1 }

[[predictor]]
id = "sig"
input_mode = "linear"
head = "sigmoid1"
backend = { kind = "oracle", sharpness = 0.01, noise_sigma = 0.05, seed = 2 }
"#;

#[test]
fn help_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&sarcoast(dir.path(), &["--help"])), 0);
    assert_eq!(code(&sarcoast(dir.path(), &["nonsense"])), 1);
    assert_eq!(
        code(&sarcoast(
            dir.path(),
            &["extract", "--head", "bogus", "a", "b"]
        )),
        1
    );
    let o = sarcoast(
        dir.path(),
        &["ensemble", "--weights", "1,2,3", "-o", "e.csv", "a.csv"],
    );
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = sarcoast(dir.path(), &["preprocess", "missing.pgm", "out.fr"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("preprocess"), "{}", stderr(&o));

    fs::write(
        dir.path().join("bad.pgm"),
        b"P5\n4 4\n255\n0000000000000000",
    )
    .unwrap();
    let o = sarcoast(dir.path(), &["preprocess", "bad.pgm", "out.fr"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("maxval"), "{}", stderr(&o));
}

#[test]
fn constant_backend_channel_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.toml"),
        r#"
[input]
image = "img.pgm"

[[predictor]]
id = "bad"
head = "softmax3"
backend = { kind = "constant", value = 0.5 }
"#,
    )
    .unwrap();
    let o = sarcoast(
        dir.path(),
        &["synth", "--width", "32", "--height", "32", "-o", "."],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    fs::rename(dir.path().join("image.pgm"), dir.path().join("img.pgm")).unwrap();
    let o = sarcoast(dir.path(), &["infer", "--config", "c.toml", "-o", "p.fr"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("channel mismatch"), "{}", stderr(&o));
}

#[test]
fn sigmoid_extract_writes_one_row_per_column() {
    let dir = tempfile::tempdir().unwrap();
    let (w, h) = (20, 10);
    let f = FloatRaster::new(
        w,
        h,
        1,
        (0..w * h)
            .map(|i| if i / w == 3 { 0.9 } else { 0.1 })
            .collect(),
    )
    .unwrap();
    write_float_raster(&f, dir.path().join("in.fr")).unwrap();
    let o = sarcoast(
        dir.path(),
        &["extract", "--head", "sigmoid", "in.fr", "out.csv"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out.csv")).unwrap();
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit()))
        .collect();
    assert_eq!(rows.len(), w);
    for (i, r) in rows.iter().enumerate() {
        let mut cols = r.split(',');
        assert_eq!(cols.next().unwrap().parse::<usize>().unwrap(), i);
        assert_eq!(cols.next().unwrap().trim().parse::<f64>().unwrap(), 3.0);
    }
}

const SCENE: &str = r#"
width = 160
height = 120
base = 60.0
point_spacing = 4
seed = 9
terms = [{ amplitude = 15.0, frequency = 2.0 }]
"#;

fn run_ok(dir: &Path, args: &[&str]) -> Output {
    let o = sarcoast(dir, args);
    assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
    o
}

fn mean_score(json: &str) -> f64 {
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    v["mean_score"].as_f64().unwrap()
}

#[test]
fn stage_commands_compose() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("p.toml"), SMALL).unwrap();
    fs::write(d.join("scene.toml"), SCENE).unwrap();
    run_ok(d, &["synth", "--config", "scene.toml", "-o", "scene"]);
    run_ok(
        d,
        &[
            "infer",
            "--config",
            "p.toml",
            "--predictor",
            "soft",
            "-o",
            "soft.fr",
        ],
    );
    run_ok(
        d,
        &[
            "infer",
            "--config",
            "p.toml",
            "--predictor",
            "sig",
            "--image",
            "scene/image.pgm",
            "-o",
            "sig.fr",
        ],
    );
    run_ok(d, &["extract", "--head", "softmax3", "soft.fr", "soft.csv"]);
    run_ok(
        d,
        &[
            "extract", "--head", "sigmoid1", "--mask", "sig.pgm", "sig.fr", "sig.csv",
        ],
    );
    run_ok(d, &["ensemble", "-o", "ens.csv", "soft.csv", "sig.csv"]);
    run_ok(
        d,
        &[
            "postprocess",
            "--width",
            "160",
            "--height",
            "120",
            "--mask",
            "coast.pgm",
            "-o",
            "dense.csv",
            "ens.csv",
        ],
    );
    let o = run_ok(
        d,
        &[
            "evaluate",
            "--mask",
            "coast.pgm",
            "--points",
            "scene/points.csv",
        ],
    );
    let staged = mean_score(&String::from_utf8(o.stdout).unwrap());
    assert!(staged < 3.0, "mean score {staged}");

    run_ok(d, &["pipeline", "--config", "p.toml", "--threads", "1"]);
    let report = fs::read_to_string(d.join("out/score.json")).unwrap();
    assert_eq!(mean_score(&report), staged);
    assert_eq!(
        fs::read(d.join("out/coastline.pgm")).unwrap(),
        fs::read(d.join("coast.pgm")).unwrap()
    );
    assert_eq!(
        fs::read(d.join("out/image.pgm")).unwrap(),
        fs::read(d.join("scene/image.pgm")).unwrap()
    );
}

#[test]
fn pipeline_is_idempotent_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("p.toml"), SMALL).unwrap();
    run_ok(
        d,
        &[
            "pipeline",
            "--config",
            "p.toml",
            "--threads",
            "1",
            "--output-dir",
            "a",
        ],
    );
    run_ok(
        d,
        &[
            "pipeline",
            "--config",
            "p.toml",
            "--threads",
            "3",
            "--output-dir",
            "b",
        ],
    );
    run_ok(
        d,
        &[
            "pipeline",
            "--config",
            "p.toml",
            "--threads",
            "1",
            "--output-dir",
            "a",
        ],
    );
    let mut names: Vec<_> = fs::read_dir(d.join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 8, "{names:?}");
    for n in names {
        assert_eq!(
            fs::read(d.join("a").join(&n)).unwrap(),
            fs::read(d.join("b").join(&n)).unwrap(),
            "{n:?}"
        );
    }
}

#[test]
fn augment_writes_samples_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("scene.toml"), SCENE).unwrap();
    fs::write(
        d.join("aug.toml"),
        "crop_side_min = 48\ncrop_side_max = 96\nmodel_side = 32\n",
    )
    .unwrap();
    run_ok(d, &["synth", "--config", "scene.toml", "-o", "s"]);
    let args = [
        "augment",
        "--config",
        "aug.toml",
        "--image",
        "s/image.pgm",
        "--classes",
        "s/classes.pgm",
        "--coast",
        "s/coast.pgm",
        "--image",
        "s/image.pgm",
        "--classes",
        "s/classes.pgm",
        "--coast",
        "s/coast.pgm",
        "--count",
        "4",
        "--seed",
        "7",
    ];
    let mut a = args.to_vec();
    a.extend(["-o", "a"]);
    let mut b = args.to_vec();
    b.extend(["-o", "b", "--threads", "2"]);
    run_ok(d, &a);
    run_ok(d, &b);
    for k in 0..4 {
        for kind in ["image", "label"] {
            let name = format!("sample_{k:05}_{kind}.fr");
            let x = fs::read(d.join("a").join(&name)).unwrap();
            assert_eq!(x, fs::read(d.join("b").join(&name)).unwrap());
        }
        let label = read_float_raster(d.join("a").join(format!("sample_{k:05}_label.fr"))).unwrap();
        assert_eq!(
            (label.width(), label.height(), label.channels()),
            (32, 32, 4)
        );
    }
    let prov = fs::read_to_string(d.join("a/provenance.jsonl")).unwrap();
    assert_eq!(
        prov,
        fs::read_to_string(d.join("b/provenance.jsonl")).unwrap()
    );
    for line in prov.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["sample"].as_u64().unwrap() < 4);
        assert!(v["src"]["w"].as_u64().is_some());
    }
}
