use std::fs;
use std::path::Path;
use std::process::Command;

use hbarlab_cli::config::{parse_config, Params};
use hbarlab_cli::models::{list_models, render_list};
use hbarlab_cli::{main_with, EXIT_CHECK_FAILED, EXIT_PASS, EXIT_USAGE};

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["hbarlab"];
    full.extend_from_slice(args);
    let code = main_with(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn pointer_of(text: &str) -> String {
    parse_config(text).unwrap_err().pointer
}

fn dir_arg(p: &Path) -> String {
    p.display().to_string()
}

#[test]
fn config_defaults_and_pointers() {
    let v = parse_config(r#"{"subcommand": "planck"}"#).unwrap();
    assert_eq!(v.config.seed, 0);
    match v.params {
        Params::Planck(p) => {
            assert_eq!(p.model, "fibonacci");
            assert_eq!(p.min_hbar, 0.005);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(pointer_of(r#"{"subcommand": "bogus"}"#), "/subcommand");
    assert_eq!(pointer_of(r#"{"subcommand": "check", "extra": 1}"#), "/extra");
    assert_eq!(pointer_of(r#"{"subcommand": "check", "parameters": {"nn": 3}}"#), "/parameters/nn");
    assert_eq!(pointer_of(r#"{"subcommand": "fuzzy", "parameters": {"k_list": [4, "x"]}}"#), "/parameters/k_list/1");
    assert_eq!(pointer_of(r#"{"subcommand": "check", "parameters": {"model": "nope"}}"#), "/parameters/model");
    assert_eq!(pointer_of(r#"{"subcommand": "moyal", "parameters": {"points": 64}}"#), "/parameters/points");
    assert_eq!(pointer_of(r#"{"subcommand": "field", "parameters": {"k_max": 2}}"#), "/parameters/k_max");
    assert_eq!(pointer_of(r#"{"subcommand": "check", "format": "xml"}"#), "/format");
    assert_eq!(pointer_of(r#"{"subcommand": "planck", "parameters": []}"#), "/parameters");
}

#[test]
fn fuzzy_hbar_must_be_reciprocal_integer() {
    let e = parse_config(r#"{"subcommand": "field", "parameters": {"hbar": [0.25, 0.4, 0.125]}}"#).unwrap_err();
    assert_eq!(e.pointer, "/parameters/hbar/1");
    assert!(e.message.contains("Bohr-Sommerfeld"), "{}", e.message);
    let ok = parse_config(r#"{"subcommand": "fuzzy", "parameters": {"hbar": [0.5, 0.25]}}"#).unwrap();
    match ok.params {
        Params::Fuzzy(p) => assert_eq!(p.k_list, vec![2, 4]),
        other => panic!("{other:?}"),
    }
    // The Moyal backend has no such constraint.
    assert!(parse_config(r#"{"subcommand": "field", "parameters": {"backend": "moyal", "hbar": [0.4, 0.3, 0.1]}}"#).is_ok());
}

#[test]
fn list_models_is_sorted_and_cites_sources() {
    let rows = list_models();
    let names: Vec<&str> = rows.iter().map(|r| r.1).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    let text = render_list();
    for needle in ["constant-pi (§4.1)", "fibonacci (§5.2)", "single-sphere (§4.2)"] {
        assert!(text.contains(needle), "{needle}");
    }
    let (code, out, _) = run(&["list-models"]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(out, text);
}

#[test]
fn planck_csv_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, out, _) = run(&["planck", "--model", "fibonacci", "--min-hbar", "0.005", "--output-dir", &dir_arg(tmp.path())]);
    assert_eq!(code, EXIT_PASS);
    assert!(out.contains("PASS integrality"));
    let csv = fs::read_to_string(tmp.path().join("planck.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "hbar,n1,n2,size");
    let tails: Vec<String> = lines[1..6].iter().map(|l| l.split_once(',').unwrap().1.to_string()).collect();
    assert_eq!(tails, ["1,1,1", "3,2,6", "8,5,40", "21,13,273", "55,34,1870"]);
    let h: f64 = lines[2].split(',').next().unwrap().parse().unwrap();
    assert_eq!(h, 1.0 / 3.0);
    assert!(lines[2].starts_with("3.3333333333333331e-1,"));
}

#[test]
fn fuzzy_csv_has_fitted_order() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _, _) = run(&["fuzzy", "--k-list", "4,8,16", "--symbol", "z", "--output-dir", &dir_arg(tmp.path())]);
    assert_eq!(code, EXIT_PASS);
    let csv = fs::read_to_string(tmp.path().join("fuzzy.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "k,hbar,error,order");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!((r[2] - 2.0 / (r[0] + 1.0)).abs() < 1e-12);
        assert_eq!(r[3], rows[0][3]);
    }
}

#[test]
fn json_reports_and_partial_files() {
    let tmp = tempfile::tempdir().unwrap();
    let d = dir_arg(tmp.path());
    let (code, _, _) = run(&["field", "--backend", "fuzzy", "--k-max", "16", "--format", "json", "--output-dir", &d]);
    assert_eq!(code, EXIT_PASS);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("field.json")).unwrap()).unwrap();
    assert_eq!(v["continuity"]["rows"].as_array().unwrap().len(), 5);
    assert!(v["continuity"]["norm_proxy"].as_str().unwrap().contains("operator norm"));

    // A passing run followed by a failing one must not leave the stale report.
    let (code, _, _) = run(&["explode", "--output-dir", &d]);
    assert_eq!(code, EXIT_PASS);
    assert!(tmp.path().join("explode.csv").exists());
    let (code, out, _) = run(&["explode", "--model", "normal-violating", "--output-dir", &d]);
    assert_eq!(code, EXIT_CHECK_FAILED);
    assert!(out.contains("FAIL compatible:phi_z_y(x,0,0)"));
    assert!(!tmp.path().join("explode.csv").exists());
    let partial = fs::read_to_string(tmp.path().join("explode.csv.partial")).unwrap();
    assert!(partial.starts_with("check,value,tolerance,passed\n"));
}

#[test]
fn input_files_drive_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let d = dir_arg(tmp.path());
    let profile = tmp.path().join("profile.json");
    fs::write(
        &profile,
        r#"{"name": "one-over", "hbar_max": 1.0, "components": [{"laurent": [{"power": -1, "coeff": 1.0}]}]}"#,
    )
    .unwrap();
    let (code, out, err) = run(&["planck", "--profile", &dir_arg(&profile), "--min-hbar", "0.1", "--output-dir", &d]);
    assert_eq!(code, EXIT_PASS, "{err}");
    assert!(out.contains("10 admissible"), "{out}");

    let map = tmp.path().join("map.json");
    let id = hbarlab_core::poly::PolyMap::identity(3);
    fs::write(&map, serde_json::to_string(&id.to_table()).unwrap()).unwrap();
    let (code, _, err) = run(&["explode", "--poly-map", &dir_arg(&map), "--output-dir", &d]);
    assert_eq!(code, EXIT_PASS, "{err}");

    let nodes = tmp.path().join("nodes.csv");
    let mut text = String::from("x,y,z,value\n");
    for i in 0..40 {
        let t = 0.3 + 2.5 * i as f64 / 40.0;
        let p = 1.7 * i as f64;
        let (x, y, z) = (t.sin() * p.cos(), t.sin() * p.sin(), t.cos());
        text.push_str(&format!("{x},{y},{z},{}\n", x * y + z));
    }
    fs::write(&nodes, text).unwrap();
    let (code, _, err) = run(&["fuzzy", "--nodes", &dir_arg(&nodes), "--k-list", "4,8", "--output-dir", &d]);
    assert_eq!(code, EXIT_PASS, "{err}");

    let (code, _, err) = run(&["planck", "--profile", "/nonexistent/profile.json", "--output-dir", &d]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("cannot read"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["bogus"]).0, EXIT_USAGE);
    assert_eq!(run(&["fuzzy", "--k-list", "4,x"]).0, EXIT_USAGE);
    assert_eq!(run(&["validate", "/nonexistent/config.json"]).0, EXIT_USAGE);
    assert_eq!(run(&["check", "--model", "nope"]).0, EXIT_USAGE);
    assert_eq!(run(&["--help"]).0, EXIT_PASS);
}

#[test]
fn thread_cap_is_validated() {
    let tmp = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_hbarlab");
    let out = Command::new(bin).args(["list-models"]).env("HBARLAB_THREADS", "zero").current_dir(tmp.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    let out = Command::new(bin)
        .args(["moyal", "--hbar", "1"])
        .env("HBARLAB_THREADS", "1")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_PASS));
    assert!(tmp.path().join("moyal.csv").exists());
}

/// The checked-in fuzz seeds must exercise the success paths: every seed
/// parses except those named `invalid.*`, `truncated.*`, `short.*` or
/// `header_only.*`.
#[test]
fn fuzz_seeds_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    let bad = |name: &str| ["invalid", "truncated", "short", "header_only"].iter().any(|p| name.starts_with(p));
    let mut seen = 0;
    for (target, parse) in [
        ("run_config", (|b: &[u8]| parse_config(std::str::from_utf8(b).unwrap()).is_ok()) as fn(&[u8]) -> bool),
        ("grid_decode", |b| hbarlab_core::moyal::io::decode_grid(b).is_ok()),
        ("node_csv", |b| hbarlab_core::fuzzy::SphereSymbol::from_node_csv("seed", b).is_ok()),
        ("profile_json", |b| hbarlab_core::planck::AreaProfile::from_json(std::str::from_utf8(b).unwrap()).is_ok()),
        ("poly_map_json", |b| hbarlab_core::poly::PolyMap::from_json(std::str::from_utf8(b).unwrap()).is_ok()),
    ] {
        for entry in fs::read_dir(root.join(target)).unwrap() {
            let path = entry.unwrap().path();
            let name = path.file_name().unwrap().to_str().unwrap().to_string();
            assert_eq!(parse(&fs::read(&path).unwrap()), !bad(&name), "{target}/{name}");
            seen += 1;
        }
    }
    assert!(seen >= 15);
}
