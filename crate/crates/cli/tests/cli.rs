use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lep")).args(args).output().expect("runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn lists_bundled_configs() {
    let out = lep(&["configs"]);
    assert!(out.status.success());
    let names = text(&out.stdout);
    for name in ["leaf-chain", "dephased-chain", "dephased-grid", "tf090", "tr1000"] {
        assert!(names.lines().any(|l| l == name), "{name} missing from {names}");
    }
}

#[test]
fn run_writes_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = lep(&["run", "leaf-chain", "-o", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    for csv in ["tcp.csv", "s-0.csv", "s-1.csv", "s-5.csv"] {
        let body = fs::read_to_string(dir.path().join(csv)).unwrap();
        assert!(body.starts_with("round,action,fidelity,success_prob,resources\n0,initial,0.7,1,7\n"));
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["strategies"].as_array().unwrap().len(), 4);
    assert_eq!(summary["graph"], "linear(8)");
}

#[test]
fn sweep_writes_cells() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    fs::write(
        &config,
        r#"
name = "small"
strategies = ["tcp", "s-0"]
mode = "fixed_resources"
total_resources = 100

[graph]
kind = "linear"
n = 4

[noise]
gate = 0.99

[sweep]
pw = [0.9, 1.0]
pz = [0.8]
z_qubits = [1]
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = lep(&["sweep", config.to_str().unwrap(), "-o", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let cells = fs::read_to_string(out_dir.join("cells.csv")).unwrap();
    let mut lines = cells.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("p_w,p_z,initial_fidelity,winner,value,gain,status,value[tcp],value[s-0]"));
    assert_eq!(lines.count(), 2);
    assert!(Path::new(&out_dir.join("grid.json")).exists());
}

#[test]
fn config_errors_exit_with_one() {
    let out = lep(&["run", "no-such-config"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("no-such-config"));

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "name = \"bad\"\nstrategies = [\"tcp\"]\nmode = \"trace\"\n[graph]\nkind = \"linear\"\nn = 4\n[noise]\nwhite = 1.5\n").unwrap();
    let out = lep(&["run", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = text(&out.stderr);
    assert!(err.contains("noise") && err.contains("p_w"), "{err}");
    assert_eq!(err.matches("config error").count(), 1, "{err}");
}

#[test]
fn validate_passes_on_a_few_cases() {
    let out = lep(&["validate", "--cases", "4", "--seed", "7"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.starts_with("oracle: 4 cases"));
    assert!(!stdout.contains("FAIL"));
}
