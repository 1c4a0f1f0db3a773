use std::path::PathBuf;
use std::process::{Command, Output};

fn levyflux(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levyflux")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("levyflux-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_model(name: &str, json: &str) -> String {
    let p = scratch(name);
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_owned()
}

const BM: &str = r#"{"family":"brownian","drift":0.0,"gaussian_coef":1.0,"jumps":{"kind":"none"}}"#;
const GAMMA: &str = r#"{"family":"gamma","drift":-1.0,"gaussian_coef":0.0,"jumps":{"kind":"gamma_subordinator","shape_rate":1.0,"scale":1.0}}"#;

#[test]
fn fpt_row_for_brownian_motion() {
    let model = write_model("bm.json", BM);
    let out = levyflux(&["fpt", "--model", &model, "--x", "1", "--t", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,t,fpt_density"));
    let row = lines.next().unwrap();
    assert!(row.starts_with("1,1,0.2419707"), "{row}");
    let value: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((value - 0.241_970_724_519_143_37).abs() < 1e-15);
}

#[test]
fn negative_jump_size_is_a_model_error() {
    let bad = r#"{"family":"compound_poisson","drift":-1.0,"gaussian_coef":0.0,"jumps":{"kind":"compound_poisson","rate":1.0,"size":{"kind":"deterministic","size":-1.0}}}"#;
    let model = write_model("bad.json", bad);
    let out = levyflux(&["fpt", "--model", &model, "--x", "1", "--t", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid model"));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(levyflux(&["fpt", "--x", "1"]).status.code(), Some(1));
    assert_eq!(levyflux(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(levyflux(&["--help"]).status.code(), Some(0));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let model = write_model("gamma.json", GAMMA);
    let mut outputs = Vec::new();
    for run in 0..2 {
        let csv = scratch(&format!("kendall{run}.csv"));
        let out = levyflux(&[
            "kendall-mc",
            "--model",
            &model,
            "--samples",
            "3000",
            "--seed",
            "11",
            "--out",
            csv.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let meta = std::fs::read(csv.with_extension("csv.meta.json")).unwrap();
        outputs.push((std::fs::read(&csv).unwrap(), meta));
    }
    assert_eq!(outputs[0], outputs[1]);
    let csv = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(csv.starts_with("cell_t,cell_x,empirical,analytic,stderr\n"));
    assert_eq!(csv.lines().count(), 26);
}

#[test]
fn meta_sidecar_records_hash_seed_and_errors() {
    let model = write_model("gamma-meta.json", GAMMA);
    let csv = scratch("sup.csv");
    let out = levyflux(&["sup", "--model", &model, "--x", "0.5", "--t", "1,2", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(csv.with_extension("csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["model_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(meta["tolerances"]["abs"], 1e-10);
    assert_eq!(meta["rows"].as_array().unwrap().len(), 2);
    assert!(meta["rows"][0]["abs_error"].as_f64().unwrap() < 1e-8);
}

#[test]
fn subord_reports_both_exponents() {
    let model = write_model("sub.json", r#"{"coords":[{"kind":"gamma","shape_rate":1.0,"scale":1.0}]}"#);
    let out = levyflux(&["subord", "--model", &model, "--r", "0.5", "--z", "1", "--samples", "20000"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert!((row[1] - 0.8951).abs() < 1e-4);
    assert!((row[2] - row[1]).abs() < 4.0 * row[3]);
}

#[test]
fn values_carry_seventeen_significant_digits() {
    assert_eq!(levyflux::cli::sig17(0.25), "0.25000000000000000");
    assert_eq!(levyflux::cli::sig17(1234.5), "1234.5000000000000");
    assert_eq!(levyflux::cli::sig17(1e-7), "9.9999999999999995e-8");
    for v in [-0.5e-9, 1.0 / 3.0, 2.0f64.sqrt() * 1e20, 6.02e-300] {
        assert_eq!(levyflux::cli::sig17(v).parse::<f64>().unwrap(), v);
    }
    assert_eq!(levyflux::cli::sig17(0.0), "0");
}
