use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use blda::admm::AdmmConfig;
use blda::dataset::{iris, load_csv, make_synthetic_fig1, LabelColumn};
use blda::eval::fit;
use blda::{Method, ProjectionMatrix};

fn blda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blda"))
        .args(args)
        .output()
        .expect("run blda")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_iris(dir: &Path) -> String {
    let path = dir.join("iris.csv");
    iris().write_csv(&path).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn synth_writes_fig1_sets() {
    let dir = tempfile::tempdir().unwrap();
    for (flag, rows) in [(None, 210), (Some("--with-outliers"), 212)] {
        let path = dir.path().join("fig1.csv");
        let p = path.to_str().unwrap();
        let mut args = vec!["synth", "fig1", "--seed", "5", "-o", p];
        args.extend(flag);
        let out = blda(&args);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), rows + 1);

        let loaded = load_csv(&path, &LabelColumn::default()).unwrap();
        let original = make_synthetic_fig1(5, flag.is_some());
        assert_eq!(loaded.features(), original.features());
        assert_eq!(loaded.labels(), original.labels());
    }
}

#[test]
fn fit_round_trips_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_iris(dir.path());
    let out_path = dir.path().join("w.txt");
    let out = blda(&[
        "fit",
        "--data",
        &data,
        "--method",
        "l2blda",
        "-d",
        "2",
        "-o",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let text = fs::read_to_string(&out_path).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.split(',').count() == 2));

    let (loaded, _) = ProjectionMatrix::load(&out_path).unwrap();
    let direct = fit(
        Method::L2blda,
        &load_csv(&data, &LabelColumn::default()).unwrap(),
        2,
        &AdmmConfig::default(),
    )
    .unwrap();
    let bits = |p: &ProjectionMatrix| p.w.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&loaded), bits(&direct));
}

#[test]
fn dimension_above_feature_count_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_iris(dir.path());
    let out = blda(&[
        "fit",
        "--data",
        &data,
        "--method",
        "pca",
        "-d",
        "7",
        "-o",
        "unused.txt",
    ]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("d=7") && err.contains("n=4"), "{err}");
}

#[test]
fn exit_codes_follow_error_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_iris(dir.path());
    assert_eq!(
        code(&blda(&[
            "fit", "--data", &data, "--method", "nope", "-d", "1", "-o", "x"
        ])),
        1
    );
    assert_eq!(
        code(&blda(&[
            "fit",
            "--data",
            "/no/such/file.csv",
            "--method",
            "pca",
            "-d",
            "1",
            "-o",
            "x"
        ])),
        2
    );
    assert_eq!(code(&blda(&["frobnicate"])), 1);
    assert_eq!(code(&blda(&["--help"])), 0);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(
        code(&blda(&["bench", "--config", bad.to_str().unwrap()])),
        1
    );

    let ragged = dir.path().join("ragged.csv");
    fs::write(&ragged, "1,2,1\n3,1\n").unwrap();
    let out = blda(&[
        "fit",
        "--data",
        ragged.to_str().unwrap(),
        "--method",
        "pca",
        "-d",
        "1",
        "-o",
        "x",
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));
}

#[test]
fn transform_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_iris(dir.path());
    let w = dir.path().join("w.txt");
    let w = w.to_str().unwrap();
    assert_eq!(
        code(&blda(&[
            "fit", "--data", &data, "--method", "lda", "-d", "2", "-o", w
        ])),
        0
    );

    let projected = dir.path().join("p.csv");
    let out = blda(&[
        "transform",
        "--data",
        &data,
        "--projection",
        w,
        "-o",
        projected.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let p = load_csv(&projected, &LabelColumn::default()).unwrap();
    assert_eq!((p.num_features(), p.num_samples()), (2, 150));

    let out = blda(&["eval", "--train", &data, "--projection", w]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("accuracy"));

    let out = blda(&[
        "eval",
        "--train",
        &data,
        "--method",
        "l2blda",
        "--d-max",
        "3",
        "--normalize",
    ]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.contains("dim=")).count(), 3);
}

fn bench_config(dir: &Path, noise: &str) -> std::path::PathBuf {
    let cfg = format!(
        r#"{{
  "datasets": [{{"name": "iris", "source": {{"kind": "iris"}}}}],
  "methods": ["pca", "l1blda"],
  "splits": {{"train_fraction": 0.7, "n_seeds": 3}},
  "noise": [{noise}],
  "admm": {{"it_max": 40}},
  "output": "{}"
}}"#,
        dir.join("out").display()
    );
    let path = dir.join("bench.json");
    fs::write(&path, cfg).unwrap();
    path
}

#[test]
fn bench_emits_runs_summaries_ranks_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let noise = r#"{"kind": "feature-gaussian", "fraction": 0.3, "variance": 0.1},
                   {"kind": "feature-gaussian", "fraction": 0.5, "variance": 0.1}"#;
    let cfg = bench_config(dir.path(), noise);
    let out = blda(&[
        "bench",
        "--config",
        cfg.to_str().unwrap(),
        "--d-max",
        "2",
        "--emit-trace",
        "--it-max",
        "5",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out_dir = dir.path().join("out");

    let runs = fs::read_to_string(out_dir.join("runs.csv")).unwrap();
    let mut groups: Vec<String> = runs
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(4).collect::<Vec<_>>().join(","))
        .collect();
    groups.dedup();
    // 3 noise variants x 3 seeds x 2 methods, each with dims 1 and 2.
    assert_eq!(groups.len(), 18);
    assert_eq!(runs.lines().count(), 1 + 36);
    assert_eq!(groups.iter().filter(|g| g.contains(",clean,")).count(), 6);

    for name in [
        "summary_clean.csv",
        "summary_feature-gaussian-30.csv",
        "summary_feature-gaussian-50.csv",
    ] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    let ranks = fs::read_to_string(out_dir.join("ranks.csv")).unwrap();
    assert!(ranks.lines().any(|l| l.starts_with("clean,average,")));
    let curve = fs::read_to_string(out_dir.join("curves/iris__clean.csv")).unwrap();
    assert_eq!(curve.lines().next(), Some("dim,pca,l1blda"));
    assert_eq!(curve.lines().count(), 3);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["admm"]["it_max"], 5);
    assert_eq!(manifest["runs"], 18);

    let traces: Vec<_> = fs::read_dir(out_dir.join("traces")).unwrap().collect();
    assert_eq!(traces.len(), 3 * 3 * 2);
    for t in traces {
        let text = fs::read_to_string(t.unwrap().path()).unwrap();
        assert!(text.lines().count() <= 6);
    }
}

#[test]
fn bench_output_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bench_config(dir.path(), "");
    let other = dir.path().join("elsewhere");
    let out = blda(&[
        "bench",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        other.to_str().unwrap(),
        "--it-max",
        "3",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(other.join("runs.csv").exists());
    assert!(!dir.path().join("out").exists());
}
