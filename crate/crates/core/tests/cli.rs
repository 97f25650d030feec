use std::path::Path;

use intcur::cli::{run, EXIT_CHECK_FAILED, EXIT_INPUT, EXIT_OK};

fn cli(args: &[&str]) -> i32 {
    run(std::iter::once("intcur").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn split_disks_exit_one_with_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("split.json");
    let report = dir.path().join("report.json");
    assert_eq!(cli(&["generate", "--family", "split-disks", "--segments", "64", "--out", p(&file)]), EXIT_OK);
    let code = cli(&["rigidity-check", "--input", p(&file), "--chain", "T", "--map", "psi", "--out", p(&report)]);
    assert_eq!(code, EXIT_CHECK_FAILED);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["verdict"]["kind"], "hypotheses_violated");
    assert_eq!(v["verdict"]["hypotheses"], serde_json::json!([3]));
}

#[test]
fn disk_commands_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("disk.json");
    assert_eq!(cli(&["generate", "--family", "disk", "--segments", "64", "--out", p(&file)]), EXIT_OK);
    let mass_out = dir.path().join("mass.json");
    assert_eq!(cli(&["mass", "--input", p(&file), "--chain", "T", "--out", p(&mass_out)]), EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&mass_out).unwrap()).unwrap();
    let poly = 32.0 * (2.0 * std::f64::consts::PI / 64.0).sin();
    assert!((v["mass"].as_f64().unwrap() - poly).abs() < 1e-12);

    let bd = dir.path().join("bd.json");
    assert_eq!(cli(&["boundary", "--input", p(&file), "--out", p(&bd)]), EXIT_OK);
    assert_eq!(cli(&["decompose", "--input", p(&bd), "--chain", "boundary_T"]), EXIT_OK);
    assert_eq!(cli(&["flatnorm", "--input", p(&bd), "--chain", "boundary_T"]), EXIT_OK);
    assert_eq!(cli(&["pushforward", "--input", p(&file)]), EXIT_OK);
    assert_eq!(cli(&["chain-check", "--input", p(&file)]), EXIT_OK);
    assert_eq!(cli(&["rigidity-check", "--input", p(&file), "--metric", "length:2", "--samples", "128"]), EXIT_OK);
    let csv = dir.path().join("slices.csv");
    assert_eq!(cli(&["slice", "--input", p(&file), "--direction", "0,1", "--levels", "16", "--out", p(&csv)]), EXIT_OK);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 17);
}

#[test]
fn stability_csv_has_decreasing_flat_distances() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("table.csv");
    let code = cli(&["stability-run", "--family", "annulus", "--eps", "0.4,0.2,0.1", "--segments", "128", "--out", p(&table)]);
    assert_eq!(code, EXIT_OK);
    let mut rd = csv::Reader::from_path(&table).unwrap();
    let col = rd.headers().unwrap().iter().position(|h| h == "flat_distance_to_ball").unwrap();
    let d: Vec<f64> = rd.records().map(|r| r.unwrap()[col].parse().unwrap()).collect();
    assert_eq!(d.len(), 3);
    assert!(d[0] > d[1] && d[1] > d[2]);
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("a.json");
    assert_eq!(cli(&["generate", "--family", "annulus", "--eps", "0.3", "--segments", "64", "--out", p(&file)]), EXIT_OK);
    let outs: Vec<String> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("r{i}.json"));
            cli(&["rigidity-check", "--input", p(&file), "--seed", "7", "--samples", "300", "--out", p(&out)]);
            std::fs::read_to_string(out).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn bad_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(&["mass", "--input", p(&dir.path().join("missing.json"))]), EXIT_INPUT);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"version\": \"1\",\n \"mesh\": {\"ambient_dim\": 2, \"vertices\": [[0, 0]], \"oops\": 1}}").unwrap();
    assert_eq!(cli(&["mass", "--input", p(&bad)]), EXIT_INPUT);
    assert_eq!(cli(&["rigidity-check", "--metric", "geodesic", "--input", p(&bad)]), EXIT_INPUT);
    assert_eq!(cli(&["generate", "--family", "annulus", "--eps", "1.5", "--out", p(&bad)]), EXIT_INPUT);
    let file = dir.path().join("d.json");
    cli(&["generate", "--family", "disk", "--segments", "16", "--out", p(&file)]);
    assert_eq!(cli(&["mass", "--input", p(&file), "--chain", "nope"]), EXIT_INPUT);
}
