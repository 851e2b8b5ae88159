//! End-to-end runs of the `nanosphere` binary: output files, schemas,
//! determinism and error reporting.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn bundled(name: &str) -> PathBuf {
    manifest_dir().join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nanosphere"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "0")
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("summary is JSON")
}

/// Exit code and the parsed error object from stderr.
fn run_err(args: &[&str]) -> (i32, Value) {
    let out = run(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("error line");
    (
        out.status.code().unwrap(),
        serde_json::from_str(line).expect("error JSON"),
    )
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn validate(schema_name: &str, path: &Path) {
    let schema = read_json(
        &manifest_dir()
            .join("schemas/v1")
            .join(format!("{schema_name}.schema.json")),
    );
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    let doc = read_json(path);
    let msgs: Vec<String> = match compiled.validate(&doc) {
        Ok(()) => return,
        Err(errors) => errors
            .map(|e| format!("{} at {}", e, e.instance_path))
            .collect(),
    };
    panic!("{} fails {schema_name}: {msgs:?}", path.display());
}

/// Checks header and cell types of a CSV output against tables.schema.json.
fn validate_table(name: &str, path: &Path) -> usize {
    let tables = read_json(&manifest_dir().join("schemas/v1/tables.schema.json"));
    let columns = tables["tables"][name]["columns"].as_array().unwrap();
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    let expected: Vec<&str> = columns.iter().map(|c| c[0].as_str().unwrap()).collect();
    assert_eq!(header, expected, "{name} header");
    let mut rows = 0;
    for record in reader.records() {
        let record = record.unwrap();
        for (cell, col) in record.iter().zip(columns) {
            let kind = col[1].as_str().unwrap();
            let ok = match kind {
                "number" => cell.parse::<f64>().is_ok(),
                "integer" => cell.parse::<u64>().is_ok(),
                _ => tables["types"][kind]
                    .as_array()
                    .unwrap()
                    .iter()
                    .any(|v| v == cell),
            };
            assert!(ok, "{name}: `{cell}` is not a valid {kind}");
        }
        rows += 1;
    }
    rows
}

/// Writes a modified copy of a bundled config.
fn variant(dir: &Path, base: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut cfg = read_json(&bundled(base));
    edit(&mut cfg);
    let path = dir.join(format!("variant_{base}"));
    fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn derive_reports_reference_table_and_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let cfg = bundled("paper_sec3.cfg");
    let args = ["--config", s(&cfg), "--out", s(&a), "derive"];
    run_ok(&args);
    let first: Vec<Vec<u8>> = ["derived.json", "manifest.json"]
        .iter()
        .map(|f| fs::read(a.join(f)).unwrap())
        .collect();
    run_ok(&args);
    for (f, bytes) in ["derived.json", "manifest.json"].iter().zip(&first) {
        assert_eq!(&fs::read(a.join(f)).unwrap(), bytes, "{f}");
    }
    validate("derived", &a.join("derived.json"));
    validate("manifest", &a.join("manifest.json"));
    let d = read_json(&a.join("derived.json"));
    let mass = d["sphere"]["mass"]["value"].as_f64().unwrap();
    assert!((mass / 1.03e-18 - 1.0).abs() < 0.01);
    assert_eq!(d["reference_comparison"].as_array().unwrap().len(), 10);
    let m = read_json(&a.join("manifest.json"));
    assert_eq!(m["subcommand"], "derive");
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn missing_radius_names_the_field() {
    let tmp = TempDir::new().unwrap();
    let cfg = variant(tmp.path(), "paper_sec3.cfg", |c| {
        c["sphere"].as_object_mut().unwrap().remove("radius");
    });
    let (code, err) = run_err(&["--config", s(&cfg), "--out", s(tmp.path()), "derive"]);
    assert_eq!(code, 1);
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("radius"), "{err}");
}

#[test]
fn cool_reaches_ground_state_and_matches_rate_formula() {
    let tmp = TempDir::new().unwrap();
    let summary = run_ok(&[
        "--config",
        s(&bundled("paper_sec3.cfg")),
        "--out",
        s(tmp.path()),
        "cool",
        "--t-end",
        "0.01",
    ]);
    validate("cool", &tmp.path().join("cool.json"));
    let rows = validate_table("timeseries.csv", &tmp.path().join("timeseries.csv"));
    assert!(rows > 3 * 1000);
    for axis in summary["axes"].as_array().unwrap() {
        assert_eq!(axis["below_one"], true, "{axis}");
        let ratio = axis["fitted_over_formula"].as_f64().unwrap();
        assert!((ratio - 1.0).abs() < 0.1, "{axis}");
    }
}

#[test]
fn cool_without_drive_stays_at_initial_occupation() {
    let tmp = TempDir::new().unwrap();
    let cfg = variant(tmp.path(), "paper_sec3.cfg", |c| {
        for d in c["drives"].as_array_mut().unwrap() {
            d["intracavity_photons"] = 0.0.into();
        }
    });
    let summary = run_ok(&[
        "--config",
        s(&cfg),
        "--out",
        s(tmp.path()),
        "cool",
        "--t-end",
        "0.001",
    ]);
    for axis in summary["axes"].as_array().unwrap() {
        let n = axis["final_phonons"].as_f64().unwrap();
        assert!((n - 10.0).abs() < 1e-9, "{axis}");
    }
}

#[test]
fn cool_refuses_blue_detuning() {
    let tmp = TempDir::new().unwrap();
    let cfg = variant(tmp.path(), "paper_sec3.cfg", |c| {
        c["drives"][0]["detuning"] = "-3.14159e6 rad/s".into();
    });
    let (code, err) = run_err(&["--config", s(&cfg), "--out", s(tmp.path()), "cool"]);
    assert_eq!(code, 1);
    assert!(
        ["unstable", "regime"].contains(&err["error"].as_str().unwrap()),
        "{err}"
    );
}

#[test]
fn collide_is_reproducible_and_schema_valid() {
    let tmp = TempDir::new().unwrap();
    let cfg = bundled("fig2.cfg");
    let dirs: Vec<PathBuf> = ["a", "b", "c"].iter().map(|d| tmp.path().join(d)).collect();
    for (dir, seed) in dirs.iter().zip(["7", "7", "8"]) {
        run_ok(&[
            "--config",
            s(&cfg),
            "--seed",
            seed,
            "--out",
            s(dir),
            "collide",
            "--duration",
            "20",
        ]);
    }
    validate("histograms", &dirs[0].join("histograms.json"));
    validate("collide", &dirs[0].join("collide.json"));
    validate("manifest", &dirs[0].join("manifest.json"));
    let events = validate_table("events.csv", &dirs[0].join("events.csv"));
    let records = validate_table("detections.csv", &dirs[0].join("detections.csv"));
    assert!(events > 50);
    assert!(records >= events);
    for f in [
        "events.csv",
        "detections.csv",
        "histograms.json",
        "collide.json",
    ] {
        assert_eq!(
            fs::read(dirs[0].join(f)).unwrap(),
            fs::read(dirs[1].join(f)).unwrap(),
            "{f}"
        );
    }
    assert_ne!(
        fs::read(dirs[0].join("events.csv")).unwrap(),
        fs::read(dirs[2].join("events.csv")).unwrap()
    );
}

#[test]
fn collide_with_zero_duration_writes_empty_logs() {
    let tmp = TempDir::new().unwrap();
    run_ok(&[
        "--config",
        s(&bundled("fig2.cfg")),
        "--out",
        s(tmp.path()),
        "collide",
        "--duration",
        "0",
    ]);
    assert_eq!(
        validate_table("events.csv", &tmp.path().join("events.csv")),
        0
    );
    assert_eq!(
        validate_table("detections.csv", &tmp.path().join("detections.csv")),
        0
    );
    validate("histograms", &tmp.path().join("histograms.json"));
    validate("collide", &tmp.path().join("collide.json"));
}

#[test]
fn single_species_fit_recovers_mass() {
    let tmp = TempDir::new().unwrap();
    let cfg = bundled("paper_sec3.cfg");
    run_ok(&[
        "--config",
        s(&cfg),
        "--seed",
        "3",
        "--out",
        s(tmp.path()),
        "collide",
        "--duration",
        "100",
    ]);
    let fit_dir = tmp.path().join("fit");
    let detections = tmp.path().join("detections.csv");
    run_ok(&[
        "--config",
        s(&cfg),
        "--out",
        s(&fit_dir),
        "fit",
        s(&detections),
        "--species",
        "1",
    ]);
    validate("fit", &fit_dir.join("fit.json"));
    let fit = read_json(&fit_dir.join("fit.json"));
    let mass = fit["species_fit"]["components"][0]["mass"]
        .as_f64()
        .unwrap();
    assert!((mass / 6.63e-26 - 1.0).abs() < 0.1, "mass {mass:e}");
}

#[test]
fn surface_temperature_fit_is_schema_valid() {
    let tmp = TempDir::new().unwrap();
    let cfg = bundled("surface_probe.cfg");
    run_ok(&[
        "--config",
        s(&cfg),
        "--out",
        s(tmp.path()),
        "collide",
        "--duration",
        "100",
    ]);
    let fit_dir = tmp.path().join("fit");
    run_ok(&[
        "--config",
        s(&cfg),
        "--out",
        s(&fit_dir),
        "fit",
        s(&tmp.path().join("detections.csv")),
        "--surface-temperature",
    ]);
    validate("fit", &fit_dir.join("fit.json"));
    let t = read_json(&fit_dir.join("fit.json"))["surface_temperature"]["estimate"]
        .as_f64()
        .unwrap();
    assert!((t / 600.0 - 1.0).abs() < 0.1, "T = {t}");
}

#[test]
fn fit_refuses_short_records() {
    let tmp = TempDir::new().unwrap();
    let cfg = bundled("paper_sec3.cfg");
    run_ok(&[
        "--config",
        s(&cfg),
        "--out",
        s(tmp.path()),
        "collide",
        "--duration",
        "10",
    ]);
    let (code, err) = run_err(&[
        "--config",
        s(&cfg),
        "--out",
        s(tmp.path()),
        "fit",
        s(&tmp.path().join("detections.csv")),
    ]);
    assert_eq!(code, 1);
    assert_eq!(err["error"], "insufficient_data");
}

#[test]
fn malformed_detections_report_the_line() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.csv");
    fs::write(
        &bad,
        "axis,t_start,duration,count\nz,0.1,0.002,3\nq,0.2,0.002,1\n",
    )
    .unwrap();
    let (_, err) = run_err(&[
        "--config",
        s(&bundled("paper_sec3.cfg")),
        "--out",
        s(tmp.path()),
        "fit",
        s(&bad),
    ]);
    assert_eq!(err["error"], "schema");
    assert!(err["message"].as_str().unwrap().contains(":3:"), "{err}");
}

#[test]
fn budget_passes_bundled_config_and_fails_inflated_noise() {
    let tmp = TempDir::new().unwrap();
    let good = run_ok(&[
        "--config",
        s(&bundled("paper_sec3.cfg")),
        "--out",
        s(tmp.path()),
        "budget",
    ]);
    validate("budget", &tmp.path().join("budget.json"));
    assert_eq!(good["all_reachable"], true);

    let cfg = variant(tmp.path(), "paper_sec3.cfg", |c| {
        c["noise"]["intensity_psd"] = "1e-10 1/Hz".into();
    });
    let out = tmp.path().join("inflated");
    let bad = run_ok(&["--config", s(&cfg), "--out", s(&out), "budget"]);
    validate("budget", &out.join("budget.json"));
    assert_eq!(bad["all_reachable"], false);
    let violations: Vec<String> = bad["axes"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|a| {
            a["violations"]
                .as_array()
                .unwrap()
                .iter()
                .map(|v| v.as_str().unwrap().to_string())
        })
        .collect();
    assert!(
        violations.iter().any(|v| v.contains("intensity")),
        "{violations:?}"
    );
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let tmp = TempDir::new().unwrap();
    let cfg = bundled("fig2.cfg");
    for (dir, threads) in [("one", "1"), ("four", "4")] {
        run_ok(&[
            "--config",
            s(&cfg),
            "--threads",
            threads,
            "--out",
            s(&tmp.path().join(dir)),
            "collide",
            "--duration",
            "80",
        ]);
        let det = tmp.path().join(dir).join("detections.csv");
        run_ok(&[
            "--config",
            s(&cfg),
            "--threads",
            threads,
            "--out",
            s(&tmp.path().join(dir)),
            "fit",
            s(&det),
            "--species",
            "2",
        ]);
    }
    for f in ["detections.csv", "fit.json"] {
        assert_eq!(
            fs::read(tmp.path().join("one").join(f)).unwrap(),
            fs::read(tmp.path().join("four").join(f)).unwrap(),
            "{f}"
        );
    }
}
