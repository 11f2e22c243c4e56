use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mfcomp::analysis::SpectrumExport;
use mfcomp::decomposition::{ComponentReport, SweepTable};
use mfcomp::series::{load_series_csv, Column, SeriesKind};
use mfcomp_cli::commands::{FseOutput, SurrogateSet, SynthInfo};
use mfcomp_cli::output::{sha256_hex, RunManifest, MANIFEST_FILE};
use tempfile::TempDir;

fn mfcomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfcomp"))
        .args(args)
        .env_remove("CI")
        .env_remove("MFCOMP_THREADS")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) {
    let out = mfcomp(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn write_csv(dir: &Path, name: &str, values: &[f64]) -> PathBuf {
    let path = dir.join(name);
    let mut text = String::from("value\n");
    for v in values {
        text.push_str(&format!("{v}\n"));
    }
    fs::write(&path, text).unwrap();
    path
}

fn read<T: serde::de::DeserializeOwned>(path: PathBuf) -> T {
    serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap()
}

fn synth(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut all = vec!["synth", "--out", out.to_str().unwrap()];
    all.extend_from_slice(args);
    ok(&all);
    out.join("series.csv")
}

fn manifests_under(dir: &Path) -> usize {
    fs::read_dir(dir).unwrap().filter(|e| e.as_ref().unwrap().file_name() == MANIFEST_FILE).count()
}

#[test]
fn analyze_is_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let input = synth(tmp.path(), "syn", &["--kind", "cascade", "--depth", "12", "--seed", "1"]);
    for run in ["a", "b"] {
        ok(&["analyze", "--input", input.to_str().unwrap(), "--seed", "7", "--out", tmp.path().join(run).to_str().unwrap()]);
    }
    for file in ["spectrum.json", "spectrum.csv", "partition.csv"] {
        assert_eq!(fs::read(tmp.path().join("a").join(file)).unwrap(), fs::read(tmp.path().join("b").join(file)).unwrap());
    }
}

#[test]
fn constant_series_has_zero_width() {
    let tmp = TempDir::new().unwrap();
    let input = write_csv(tmp.path(), "c.csv", &vec![2.5; 4096]);
    let out = tmp.path().join("out");
    ok(&["analyze", "--input", input.to_str().unwrap(), "--seed", "1", "--out", out.to_str().unwrap()]);
    let spectrum: SpectrumExport = read(out.join("spectrum.json"));
    assert!(spectrum.delta_alpha.abs() < 1e-10);
}

#[test]
fn manifest_records_digests_of_inputs_and_outputs() {
    let tmp = TempDir::new().unwrap();
    let input = write_csv(tmp.path(), "v.csv", &(1..=600).map(|i| 1.0 + (i % 7) as f64).collect::<Vec<_>>());
    let out = tmp.path().join("out");
    ok(&["analyze", "--input", input.to_str().unwrap(), "--seed", "3", "--out", out.to_str().unwrap()]);
    let manifest: RunManifest = read(out.join(MANIFEST_FILE));
    assert_eq!(manifest.inputs[0].sha256, sha256_hex(&fs::read(&input).unwrap()));
    assert_eq!(manifest.seed, 3);
    assert_eq!(manifest.outputs.len(), 3);
    for f in &manifest.outputs {
        assert_eq!(f.sha256, sha256_hex(&fs::read(out.join(&f.path)).unwrap()));
    }
    assert_eq!(manifests_under(&out), 1);
    let leftovers = fs::read_dir(&out).unwrap().filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().contains(".tmp")).count();
    assert_eq!(leftovers, 0);
}

#[test]
fn emit_selects_formats() {
    let tmp = TempDir::new().unwrap();
    let input = write_csv(tmp.path(), "v.csv", &(1..=600).map(|i| 1.0 + (i % 5) as f64).collect::<Vec<_>>());
    let out = tmp.path().join("out");
    ok(&["analyze", "--input", input.to_str().unwrap(), "--seed", "3", "--emit", "json", "--out", out.to_str().unwrap()]);
    assert!(out.join("spectrum.json").exists());
    assert!(!out.join("spectrum.csv").exists());
}

#[test]
fn cascade_decomposition_satisfies_accounting_identity() {
    let tmp = TempDir::new().unwrap();
    let input = synth(tmp.path(), "syn", &["--kind", "cascade", "--depth", "12", "--seed", "2"]);
    let out = tmp.path().join("dec");
    ok(&["decompose", "--input", input.to_str().unwrap(), "--ensemble", "4", "--seed", "9", "--out", out.to_str().unwrap()]);
    let report: ComponentReport = read(out.join("report.json"));
    let sum = report.delta_alpha_fse.unwrap().mean + report.delta_alpha_pdf.unwrap().mean + report.delta_alpha_nl.unwrap().mean;
    assert!((sum - report.delta_alpha).abs() < 1e-12);
    assert_eq!(fs::read_to_string(out.join("components.csv")).unwrap().lines().count(), 12);
}

#[test]
fn exit_codes_and_error_json() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let out = out.to_str().unwrap();

    let usage = mfcomp(&["analyze", "--bogus"]);
    assert_eq!(usage.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&usage.stderr);
    let json: serde_json::Value = serde_json::from_str(stderr.lines().last().unwrap()).unwrap();
    assert_eq!(json["error"], "usage");

    let missing = mfcomp(&["analyze", "--input", "/nonexistent/x.csv", "--seed", "1", "--out", out]);
    assert_eq!(missing.status.code(), Some(3));

    let prices = tmp.path().join("p.csv");
    fs::write(&prices, "close\n10\n0\n11\n").unwrap();
    let bad = mfcomp(&["analyze", "--input", prices.to_str().unwrap(), "--input-kind", "price", "--seed", "1", "--out", out]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("non-positive price at row 3"));

    let zeros = write_csv(tmp.path(), "z.csv", &[0.0; 600]);
    let numeric = mfcomp(&["analyze", "--input", zeros.to_str().unwrap(), "--seed", "1", "--out", out]);
    assert_eq!(numeric.status.code(), Some(4));
    let json: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&numeric.stderr).lines().last().unwrap()).unwrap();
    assert_eq!(json["exit_code"], 4);
    assert!(!Path::new(out).join(MANIFEST_FILE).exists());
}

#[test]
fn seed_is_mandatory_in_ci() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mfcomp"))
        .args(["synth", "--kind", "fgn", "--out", tmp.path().to_str().unwrap()])
        .env("CI", "true")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let auto = mfcomp(&["synth", "--kind", "fgn", "--len", "128", "--out", tmp.path().to_str().unwrap()]);
    assert!(auto.status.success());
    let manifest: RunManifest = read(tmp.path().join(MANIFEST_FILE));
    assert_eq!(manifest.seed_source, mfcomp_cli::output::SeedSource::Generated);
}

#[test]
fn bad_thread_override_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mfcomp"))
        .args(["synth", "--kind", "fgn", "--seed", "1", "--out", tmp.path().to_str().unwrap()])
        .env("MFCOMP_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn surrogates_keep_values_and_roundtrip() {
    let tmp = TempDir::new().unwrap();
    let input = synth(tmp.path(), "syn", &["--kind", "long-memory", "--hurst", "0.8", "--len", "512", "--dist", "student", "--param", "3", "--seed", "4"]);
    let original = load_series_csv(&input, &Column::Index(0), SeriesKind::GenericPositive).unwrap();
    let mut sorted_original = original.values().to_vec();
    sorted_original.sort_by(f64::total_cmp);
    for kind in ["shuffle", "lm"] {
        let out = tmp.path().join(kind);
        ok(&["surrogate", "--input", input.to_str().unwrap(), "--kind", kind, "--count", "3", "--seed", "5", "--out", out.to_str().unwrap()]);
        let set: SurrogateSet = read(out.join("surrogates.json"));
        assert_eq!(set.members.len(), 3);
        assert_eq!(set.members[0].iaaft.is_some(), kind == "lm");
        for m in &set.members {
            let s = load_series_csv(out.join(&m.file), &Column::Index(0), SeriesKind::GenericPositive).unwrap();
            let mut v = s.into_values();
            v.sort_by(f64::total_cmp);
            assert_eq!(v, sorted_original);
        }
    }
    let out = tmp.path().join("remap");
    ok(&["surrogate", "--input", input.to_str().unwrap(), "--kind", "remap", "--dist", "normal", "--param", "0,1", "--seed", "5", "--out", out.to_str().unwrap()]);
    let s = load_series_csv(out.join("surrogate_0000.csv"), &Column::Index(0), SeriesKind::GenericPositive).unwrap();
    assert!((mfcomp::stats::spearman(s.values(), original.values()) - 1.0).abs() < 1e-12);
}

#[test]
fn synth_outputs_roundtrip() {
    let tmp = TempDir::new().unwrap();
    let csv = synth(tmp.path(), "c", &["--kind", "cascade", "--depth", "10", "--seed", "1"]);
    let info: SynthInfo = read(tmp.path().join("c/synth.json"));
    assert_eq!(info.len, 1024);
    assert_eq!(info.cascade_tau.unwrap().len(), 33);
    let values = load_series_csv(&csv, &Column::Index(0), SeriesKind::GenericPositive).unwrap();
    assert!((values.values().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let iid = synth(tmp.path(), "i", &["--kind", "iid", "--dist", "weibull", "--param", "1", "--len", "300", "--seed", "2"]);
    assert_eq!(load_series_csv(&iid, &Column::Index(0), SeriesKind::GenericPositive).unwrap().len(), 300);
    let bad = mfcomp(&["synth", "--kind", "iid", "--dist", "weibull", "--param", "2", "--seed", "2", "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn fse_calibrate_small_grid() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("fse");
    ok(&[
        "fse-calibrate", "--dist", "weibull", "--param", "1", "--hurst", "0.3,0.5,0.7,0.9", "--lengths", "1024,2048,4096,8192",
        "--ensemble", "3", "--iaaft-max-iter", "50", "--seed", "6", "--out", out.to_str().unwrap(),
    ]);
    let result: FseOutput = read(out.join("fse_table.json"));
    assert_eq!(result.table.rows.len(), 16);
    let fit = result.fit.expect("four H values and four lengths fit");
    assert!(fit.exponent_line.slope > 0.0);
    assert_eq!(fs::read_to_string(out.join("fse_table.csv")).unwrap().lines().count(), 17);

    let input = synth(tmp.path(), "v", &["--kind", "long-memory", "--hurst", "0.7", "--len", "2048", "--dist", "student", "--param", "3", "--seed", "8"]);
    let dec = tmp.path().join("dec");
    ok(&[
        "decompose", "--input", input.to_str().unwrap(), "--ensemble", "2", "--seed", "1",
        "--fse-table", out.join("fse_table.json").to_str().unwrap(), "--out", dec.to_str().unwrap(),
    ]);
    let report: ComponentReport = read(dec.join("report.json"));
    assert!(report.fse_cross_check.is_some());
    let manifest: RunManifest = read(dec.join(MANIFEST_FILE));
    assert_eq!(manifest.inputs.len(), 2);
}

#[test]
fn sweep_writes_table() {
    let tmp = TempDir::new().unwrap();
    let input = synth(tmp.path(), "v", &["--kind", "long-memory", "--hurst", "0.7", "--len", "2048", "--dist", "student", "--param", "3", "--seed", "8"]);
    let out = tmp.path().join("sw");
    ok(&[
        "sweep", "--input", input.to_str().unwrap(), "--family", "weibull", "--grid", "0.5:1.0:0.25",
        "--ensemble", "2", "--iaaft-max-iter", "50", "--seed", "2", "--out", out.to_str().unwrap(),
    ]);
    let table: SweepTable = read(out.join("sweep.json"));
    let grid: Vec<f64> = table.points.iter().map(|p| p.parameter).collect();
    assert_eq!(grid, vec![0.5, 0.75, 1.0]);
    let bad = mfcomp(&["sweep", "--input", input.to_str().unwrap(), "--family", "student", "--grid", "1,2", "--seed", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn price_input_uses_returns_for_reference() {
    let tmp = TempDir::new().unwrap();
    let mut price = 100.0;
    let mut text = String::from("date,close\n");
    for i in 0..1500 {
        price *= 1.0 + 0.01 * ((i * 7919 % 13) as f64 - 6.0) / 6.0;
        text.push_str(&format!("d{i},{price}\n"));
    }
    let path = tmp.path().join("prices.csv");
    fs::write(&path, text).unwrap();
    let out = tmp.path().join("dec");
    ok(&[
        "decompose", "--input", path.to_str().unwrap(), "--column", "close", "--input-kind", "price", "--ensemble", "2",
        "--iaaft-max-iter", "50", "--seed", "3", "--out", out.to_str().unwrap(),
    ]);
    let report: ComponentReport = read(out.join("report.json"));
    assert_eq!(report.n, 1499);
    assert_eq!(report.gaussian_reference.source, mfcomp::decomposition::ReferenceSource::Returns);
}
