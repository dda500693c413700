//! End-to-end runs of the `ifgan` binary against the checked-in demo data.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ifgan"))
}

fn testdata(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../testdata")
        .join(name)
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ifgan-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn ampute_impute_evaluate_round_trip() {
    let dir = tempdir("roundtrip");
    let data = dir.join("amputed.csv");
    let mask = dir.join("mask.csv");
    let imputed = dir.join("imputed.csv");

    run_ok(
        bin()
            .arg("ampute")
            .arg(testdata("demo.csv"))
            .arg(testdata("demo.schema"))
            .args(["--mechanism", "mcar", "--t", "0.25", "--seed", "7"])
            .arg("--out-data")
            .arg(&data)
            .arg("--out-mask")
            .arg(&mask),
    );

    let amputed_text = std::fs::read_to_string(&data).unwrap();
    assert!(
        amputed_text.contains("NA"),
        "amputation produced no missing cells"
    );
    let mask_text = std::fs::read_to_string(&mask).unwrap();
    assert!(mask_text.starts_with("age,income,bmi,smoker,color\n"));

    // Mask zeros and NA cells must coincide (label column excluded).
    let data_lines: Vec<&str> = amputed_text.lines().skip(1).collect();
    let mask_lines: Vec<&str> = mask_text.lines().skip(1).collect();
    assert_eq!(data_lines.len(), mask_lines.len());
    for (dl, ml) in data_lines.iter().zip(&mask_lines) {
        let cells: Vec<&str> = dl.split(',').collect();
        let bits: Vec<&str> = ml.split(',').collect();
        for (j, bit) in bits.iter().enumerate() {
            assert_eq!(*bit == "0", cells[j] == "NA", "row {dl} vs mask {ml}");
        }
        assert_ne!(cells[5], "NA", "label column was amputed");
    }

    run_ok(
        bin()
            .arg("impute")
            .arg(&data)
            .arg(testdata("demo.schema"))
            .args(["--method", "mice", "--seed", "3"])
            .arg("--out")
            .arg(&imputed),
    );
    let imputed_text = std::fs::read_to_string(&imputed).unwrap();
    assert!(
        !imputed_text.contains("NA"),
        "imputed output still has missing cells"
    );

    let out = run_ok(
        bin()
            .arg("evaluate")
            .arg("--truth")
            .arg(testdata("demo.csv"))
            .arg("--imputed")
            .arg(&imputed)
            .arg("--mask")
            .arg(&mask)
            .arg("--schema")
            .arg(testdata("demo.schema"))
            .args(["--folds", "2", "--seed", "5"]),
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("rmse = "), "{stdout}");
    assert!(stdout.contains("auroc = "), "{stdout}");
}

#[test]
fn impute_accepts_truth_plus_mask() {
    let dir = tempdir("maskfill");
    let data = dir.join("amputed.csv");
    let mask = dir.join("mask.csv");
    let imputed = dir.join("imputed.csv");

    run_ok(
        bin()
            .arg("ampute")
            .arg(testdata("demo.csv"))
            .arg(testdata("demo.schema"))
            .args(["--mechanism", "mnar", "--seed", "11"])
            .arg("--out-data")
            .arg(&data)
            .arg("--out-mask")
            .arg(&mask),
    );

    // Impute straight from the complete truth plus the mask.
    run_ok(
        bin()
            .arg("impute")
            .arg(testdata("demo.csv"))
            .arg(testdata("demo.schema"))
            .arg("--mask")
            .arg(&mask)
            .args(["--method", "mean", "--seed", "1"])
            .arg("--out")
            .arg(&imputed),
    );
    assert!(!std::fs::read_to_string(&imputed).unwrap().contains("NA"));
}

#[test]
fn benchmark_runs_are_byte_identical() {
    let dir = tempdir("bench");
    let conf = dir.join("exp.conf");
    // A trimmed copy of the checked-in example against the same data.
    let text = format!(
        "data = {}\nschema = {}\nmechanism = mcar\nmethod = mean\nmissing_rate = 0.2\nrepeats = 2\nseed = 9\nfolds = 2\n",
        testdata("demo.csv").display(),
        testdata("demo.schema").display()
    );
    std::fs::write(&conf, text).unwrap();

    let out_a = dir.join("report-a");
    let out_b = dir.join("report-b");
    for out in [&out_a, &out_b] {
        run_ok(
            bin()
                .arg("benchmark")
                .arg("--config")
                .arg(&conf)
                .arg("--out")
                .arg(out),
        );
    }
    let jsonl_a = std::fs::read(out_a.with_extension("jsonl")).unwrap();
    let jsonl_b = std::fs::read(out_b.with_extension("jsonl")).unwrap();
    assert_eq!(jsonl_a, jsonl_b, "jsonl reports differ between reruns");
    let csv_a = std::fs::read(out_a.with_extension("csv")).unwrap();
    let csv_b = std::fs::read(out_b.with_extension("csv")).unwrap();
    assert_eq!(csv_a, csv_b, "csv summaries differ between reruns");

    let csv = String::from_utf8(csv_a).unwrap();
    assert!(
        csv.starts_with("sweep_axis,sweep_value,repeats,rmse_mean,rmse_std,auroc_mean,auroc_std\n")
    );
}

#[test]
fn checked_in_experiment_config_parses_and_runs() {
    let dir = tempdir("checked-in");
    let out = dir.join("demo-report");
    run_ok(
        bin()
            .arg("benchmark")
            .arg("--config")
            .arg(testdata("experiment.conf"))
            .arg("--out")
            .arg(&out),
    );
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    // three sweep points, one summary row each
    assert_eq!(csv.lines().count(), 4, "{csv}");
    let jsonl = std::fs::read_to_string(out.with_extension("jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 9, "3 points x 3 repeats");
}

#[test]
fn exit_codes_distinguish_usage_data_and_success() {
    // Unknown flag: clap usage error, exit 2.
    let out = bin()
        .arg("ampute")
        .arg("--definitely-not-a-flag")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Out-of-range rate: config/usage error, exit 2.
    let dir = tempdir("exitcodes");
    let out = bin()
        .arg("ampute")
        .arg(testdata("demo.csv"))
        .arg(testdata("demo.schema"))
        .args(["--mechanism", "mcar", "--t", "1.5"])
        .arg("--out-data")
        .arg(dir.join("d.csv"))
        .arg("--out-mask")
        .arg(dir.join("m.csv"))
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    // Missing input file: data error, exit 3.
    let out = bin()
        .arg("impute")
        .arg(dir.join("nope.csv"))
        .arg(testdata("demo.schema"))
        .args(["--method", "mean"])
        .arg("--out")
        .arg(dir.join("o.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    // Unknown category in the data: data error with coordinates, exit 3.
    let bad = dir.join("bad.csv");
    std::fs::write(
        &bad,
        "age,income,bmi,smoker,color,outcome\n30,50,25,maybe,red,neg\n",
    )
    .unwrap();
    let out = bin()
        .arg("impute")
        .arg(&bad)
        .arg(testdata("demo.schema"))
        .args(["--method", "mean"])
        .arg("--out")
        .arg(dir.join("o.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("smoker"), "{stderr}");
}
