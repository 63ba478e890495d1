//! End-to-end coverage of the CLI surface through the real binary.

use std::path::Path;
use std::process::{Command, Output};

fn transprec(args: &[&str], data_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_transprec"))
        .args(args)
        .env("TRANSPREC_DATA_DIR", data_dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn gen_train_experiment_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let csv = dir.path().join("fig1.csv");

    // gen-dataset
    let out = transprec(
        &[
            "gen-dataset",
            "--benchmark",
            "fig1",
            "--samples",
            "80",
            "--inputs",
            "3",
            "--seed",
            "7",
            "--out",
            csv.to_str().unwrap(),
        ],
        &data,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(csv.exists());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# benchmark=fig1 kind=base seed=7 n_inputs=3"));
    assert_eq!(text.lines().count(), 2 + 80);

    // --extended emits the per-edge columns up front
    let ext_csv = dir.path().join("fig1_ext.csv");
    let out = transprec(
        &[
            "gen-dataset",
            "--benchmark",
            "fig1",
            "--samples",
            "10",
            "--inputs",
            "2",
            "--seed",
            "7",
            "--extended",
            "--out",
            ext_csv.to_str().unwrap(),
        ],
        &data,
    );
    assert!(out.status.success());
    let ext_text = std::fs::read_to_string(&ext_csv).unwrap();
    assert!(ext_text.contains("kind=extended"));
    assert!(ext_text.lines().nth(1).unwrap().contains("F_3_1"));

    // train on it, saving the model
    let model_path = dir.path().join("model.txt");
    let out = transprec(
        &[
            "train",
            "--dataset",
            csv.to_str().unwrap(),
            "--regime",
            "extended",
            "--model",
            "nn1",
            "--epochs",
            "5",
            "--train-size",
            "50",
            "--test-size",
            "20",
            "--out",
            model_path.to_str().unwrap(),
        ],
        &data,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("test MAE"));
    assert!(model_path.exists());

    // experiment from a spec file (array form) + report
    let spec_path = dir.path().join("spec.json");
    std::fs::write(
        &spec_path,
        r#"[{"benchmark": "fig1", "regime": "base", "model": "nn1",
            "dataset_samples": 60, "n_inputs": 2, "train_size": 30,
            "test_size": 20, "n_seeds": 1, "epochs": 3}]"#,
    )
    .unwrap();
    let report_path = dir.path().join("report.json");
    let out = transprec(
        &[
            "experiment",
            "--spec-file",
            spec_path.to_str().unwrap(),
            "--out",
            report_path.to_str().unwrap(),
        ],
        &data,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("Benchmark"));
    assert!(report_path.exists());
    // The dataset cache landed in the TRANSPREC_DATA_DIR override.
    assert!(data.join("fig1_base_60_91.csv").exists());

    for format in ["table", "csv"] {
        let out = transprec(
            &[
                "report",
                "--in",
                report_path.to_str().unwrap(),
                "--format",
                format,
            ],
            &data,
        );
        assert!(out.status.success());
        assert!(stdout(&out).contains("Average"));
    }
}

#[test]
fn list_benchmarks_and_graph_export() {
    let dir = tempfile::tempdir().unwrap();
    let graphs = dir.path().join("graphs");
    let out = transprec(
        &[
            "list-benchmarks",
            "--export-graphs",
            graphs.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = stdout(&out);
    for name in [
        "fwt",
        "saxpy",
        "convolution",
        "dwt",
        "correlation",
        "blackscholes",
    ] {
        assert!(text.contains(name));
        assert!(graphs.join(format!("{name}.edges")).exists());
    }
    let fig1 = std::fs::read_to_string(graphs.join("fig1.edges")).unwrap();
    assert_eq!(fig1, "# nodes=4\n1 3\n2 3\n3 0\n");
}

#[test]
fn errors_are_single_line_and_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = transprec(
        &[
            "gen-dataset",
            "--benchmark",
            "nope",
            "--out",
            dir.path().join("x.csv").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: "), "stderr: {err}");
    assert_eq!(err.trim_end().lines().count(), 1);

    // Missing required flags exit nonzero through clap as well.
    let out = transprec(&["train"], dir.path());
    assert!(!out.status.success());
}
