use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sflab::config::RunConfig;
use sflab::Report;

fn sflab(out: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sflab"));
    cmd.arg("--out").arg(out).args(args);
    // keep the caller's environment from leaking overrides into the test
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("SFLAB_")) {
        cmd.env_remove(k);
    }
    cmd.envs(env.iter().copied());
    cmd.output().expect("binary runs")
}

fn report(path: &Path) -> Report {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn check_generated_icosphere() {
    let dir = tempfile::tempdir().unwrap();
    let out = sflab(dir.path(), &["check", "--gen", "icosphere:4:1", "--kappa", "0"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&dir.path().join("check.json"));
    assert_eq!(r.schema_version, 1);
    let c = &r.payload["constraints"];
    assert!(c["gauss"]["norms"]["linf"].as_f64().unwrap() < 0.1);
    let balancing = c["balancing"].as_object().unwrap();
    assert_eq!(balancing.keys().map(String::as_str).collect::<Vec<_>>().len(), 6);
    assert!(balancing.contains_key("ess_z"));
    let csv = std::fs::read_to_string(dir.path().join("curvature.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2563);
    assert!(dir.path().join("check.timings.json").exists());
}

#[test]
fn dirichlet_symbol_has_one_dimensional_kernel_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let out = sflab(dir.path(), &["symbol", "--bc", "dirichlet", "--samples", "100", "--seed", "7"], &[]);
    assert!(out.status.success());
    let r = report(&dir.path().join("symbol.json"));
    let reports = r.payload["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 100);
    assert!(reports.iter().all(|k| k["dimension"] == 1));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().next().unwrap().contains("sigma_min"));
}

#[test]
fn helicoid_family_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = sflab(dir.path(), &["helicoid", "--wraps", "2,4,8"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("family.csv")).unwrap();
    let area_col = rdr.headers().unwrap().iter().position(|h| h == "area").unwrap();
    let areas: Vec<f64> = rdr.records().map(|r| r.unwrap()[area_col].parse().unwrap()).collect();
    assert_eq!(areas.len(), 3);
    assert!(areas.windows(2).all(|w| w[1] > w[0]));
    let dat = std::fs::read_to_string(dir.path().join("family.dat")).unwrap();
    assert!(dat.starts_with("# wraps area"));
}

#[test]
fn config_echo_round_trips_and_env_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let out = sflab(dir.path(), &["fold"], &[("SFLAB_SEED", "11"), ("SFLAB_FOLD_C", "8,9")]);
    assert!(out.status.success());
    let r = report(&dir.path().join("fold.json"));
    assert_eq!(r.config.seed, 11);
    let text = serde_json::to_string(&r.config).unwrap();
    assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), r.config);
    let cases = r.payload["cases"].as_array().unwrap();
    assert_eq!(cases.len(), 2);
    assert_eq!(cases[0]["c"], 8.0);
    // flags beat the environment
    let out = sflab(dir.path(), &["--seed", "3", "fold"], &[("SFLAB_SEED", "11")]);
    assert!(out.status.success());
    assert_eq!(report(&dir.path().join("fold.json")).config.seed, 3);
}

#[test]
fn mesh_files_are_read() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = sflab_core::mesh::generate_ellipsoid(1.5, 1.0, 0.8, 2).unwrap();
    for name in ["e.off", "e.obj"] {
        let path = dir.path().join(name);
        sflab::mesh_io::write_mesh(&path, &mesh).unwrap();
        let out = sflab(dir.path(), &["rigidity", "--mesh", path.to_str().unwrap()], &[]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let r = report(&dir.path().join("rigidity.json"));
        assert!((r.payload["max_shape_norm_rescaled"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn failures_are_structured() {
    let dir = tempfile::tempdir().unwrap();
    let out = sflab(dir.path(), &["uniformize", "--gen", "torus:2:1:16:8"], &[]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["module"], "uniformize");
    let out = sflab(dir.path(), &["check", "--mesh", "missing.ply"], &[]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["module"], "mesh-core");
    let out = sflab(dir.path(), &["helicoid", "--wraps", "4,2"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let out = sflab(dir.path(), &["frobnicate"], &[]);
    assert!(!out.status.success());
}

#[test]
fn help_lists_config_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, &[&str]); 7] = [
        ("check", &["--gen", "--mesh", "--kappa"]),
        ("uniformize", &["--marks", "--time-step", "--max-steps", "--tolerance", "--write-off"]),
        ("symbol", &["--bc", "--samples", "--radius-span", "--seed"]),
        ("helicoid", &["--wraps", "--pitch", "--half-thickness", "--resolution", "--h-min"]),
        ("rigidity", &["--gen", "--mesh"]),
        ("chords", &["--kappa", "--threshold-deg"]),
        ("fold", &["--c", "--samples"]),
    ];
    for (cmd, flags) in cases {
        let out = sflab(dir.path(), &[cmd, "--help"], &[]);
        let text = String::from_utf8(out.stdout).unwrap();
        for flag in flags {
            assert!(text.contains(flag), "{cmd} help lacks {flag}");
        }
        assert!(text.contains("--threads") && text.contains("--out"));
    }
}
