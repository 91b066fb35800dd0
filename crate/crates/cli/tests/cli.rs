use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_poisson-forms");

fn run(args: &[&str], workers: Option<&str>) -> Output {
    let mut c = Command::new(BIN);
    c.args(args);
    match workers {
        Some(w) => c.env("POISSON_FORMS_WORKERS", w),
        None => c.env_remove("POISSON_FORMS_WORKERS"),
    };
    c.output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.toml");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const FIX_C: &str = r#"
[manifold]
name = "flat_torus"

[density]
preset = "constant(2)"

[checks]
observables = ["linear(coscos)", "square(sinx)"]
forms = ["const(1) * e1", "linear(coscos) * grad(sinx)"]

[numerics]
n_paths = 400
samples = 500
configs = 1
max_points = 2

[seed]
value = 11
"#;

fn rows(csv_text: &str) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), poisson_forms::integrate::CSV_HEADER.split(',').collect::<Vec<_>>());
    r.records().map(|x| x.unwrap()).collect()
}

#[test]
fn list_presets_matches_golden() {
    let o = run(&["list-presets"], None);
    assert!(o.status.success());
    let golden = include_str!("golden/list_presets.txt");
    assert_eq!(String::from_utf8(o.stdout).unwrap(), golden);
    assert!(golden.contains("flat_torus") && golden.contains("unit_sphere") && golden.contains("cos1(a)"));
}

#[test]
fn identities_on_constant_density_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FIX_C);
    let out = dir.path().join("out");
    let o = run(&["identities", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("identities.csv")).unwrap();
    let rs = rows(&text);
    assert!(rs.len() >= 5);
    for r in &rs {
        assert_eq!(&r[5], "true");
        assert!(r[3].parse::<f64>().unwrap() < 1e-7, "{r:?}");
        assert_eq!(&r[7], "32x32");
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("identities.json")).unwrap()).unwrap();
    assert_eq!(summary["all_pass"], true);
    assert_eq!(summary["n_checks"], rs.len());
    assert_eq!(summary["config_hash"].as_str().unwrap(), poisson_forms_cli::config::hash_text(FIX_C));
    assert_eq!(summary["seed"], 11);
}

#[test]
fn malformed_config_exits_2_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for body in ["[manifold\nname=", "[manifold]\nname = \"flat_torus\"\n[density]\npreset = \"cos1(\"\n"] {
        let cfg = write_config(dir.path(), body);
        let o = run(&["all", "--config", &cfg, "--out", out.to_str().unwrap()], None);
        assert_eq!(o.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&o.stderr).contains("config error"));
        assert!(!out.exists());
    }
    let o = run(&["identities", "--config", dir.path().join("missing.toml").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    // Stochastic checks need a seed.
    let cfg = write_config(dir.path(), &FIX_C.replace("[seed]\nvalue = 11\n", ""));
    let o = run(&["semigroup", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    assert_eq!(run(&["bogus"], None).status.code(), Some(2));
}

#[test]
fn failed_check_exits_1_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &FIX_C.replace("configs = 1", "configs = 1\ntol = 1e-300").replace("constant(2)", "cos1(0.5)"));
    let out = dir.path().join("out");
    let o = run(&["identities", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("FAIL ") && err.contains("residual"), "{err}");
    let rs = rows(&fs::read_to_string(out.join("identities.csv")).unwrap());
    assert!(rs.iter().any(|r| &r[5] == "false"));
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FIX_C);
    let mut outputs = Vec::new();
    for (k, w) in [Some("1"), Some("4"), None].into_iter().enumerate() {
        let out = dir.path().join(format!("out{k}"));
        let o = run(&["all", "--config", &cfg, "--out", out.to_str().unwrap()], w);
        assert!(o.status.code() == Some(0) || o.status.code() == Some(1));
        outputs.push((fs::read(out.join("all.csv")).unwrap(), fs::read(out.join("all.json")).unwrap()));
        assert!(out.join("sample_configuration.json").exists());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn semigroup_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FIX_C);
    let out = dir.path().join("out");
    let args = ["semigroup", "--config", &cfg, "--out", out.to_str().unwrap(), "--t", "0.004", "--dt", "0.002", "--paths", "300", "--potential", "weitzenbock", "--seed", "5"];
    let o = run(&args, None);
    assert!(o.status.code() == Some(0) || o.status.code() == Some(1));
    let rs = rows(&fs::read_to_string(out.join("semigroup.csv")).unwrap());
    assert!(rs.iter().all(|r| &r[6] == "5"));
    assert!(rs.iter().any(|r| r[0].starts_with("generator_derham")));
    assert!(!rs.iter().any(|r| r[0].starts_with("generator_bochner")));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("semigroup.json")).unwrap()).unwrap();
    assert_eq!(summary["numerics"]["n_paths"], 300);
    let bad = run(&["semigroup", "--config", &cfg, "--out", out.to_str().unwrap(), "--t", "0.003", "--dt", "0.002"], None);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn commas_in_check_names_are_quoted() {
    let dir = tempfile::tempdir().unwrap();
    let body = FIX_C.replace("\"square(sinx)\"]", "\"expneg(bump(0.5,0.3))\"]");
    let cfg = write_config(dir.path(), &body);
    let out = dir.path().join("out");
    let o = run(&["identities", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert!(o.status.code() == Some(0) || o.status.code() == Some(1));
    let rs = rows(&fs::read_to_string(out.join("identities.csv")).unwrap());
    assert!(rs.iter().any(|r| r[0].contains("bump(0.5,0.3)")));
    assert!(rs.iter().all(|r| r.len() == 9));
}
