use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rentlearn"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const POINT_MASS: &str = r#"
[distribution]
seed = 1
[distribution.family]
name = "point-mass"
y0 = 2.0

[algorithm]
name = "zero-dim"
epsilon = 0.1

[evaluate]
n = [100]
seeds = [0]
n_test = 1000
"#;

#[test]
fn evaluate_point_mass_zero_dim() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pm.toml", POINT_MASS);
    let o = run(&["evaluate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "schema_id,algorithm,n,seed,cr_mean,cr_stderr,theta_min,robustness,error");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..4], &["evaluate/v1", "zero-dim", "100", "0"]);
    assert!((row[4].parse::<f64>().unwrap() - 1.1).abs() < 1e-12);
    assert_eq!(row[6].parse::<f64>().unwrap(), 0.1);
    assert!((row[7].parse::<f64>().unwrap() - 11.0).abs() < 1e-12);
    assert_eq!(row[8], "");
    assert!(lines.next().is_none());
}

#[test]
fn empty_seed_list_is_a_config_error_on_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &POINT_MASS.replace("seeds = [0]", "seeds = []"));
    let o = run(&["evaluate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("bad.toml:14:"), "{err}");
    assert!(err.contains("seeds"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_keys_and_syntax_errors_point_at_a_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "typo.toml", &POINT_MASS.replace("epsilon = 0.1", "epsilo = 0.1"));
    let o = run(&["evaluate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("typo.toml:"), "{}", stderr(&o));
    let cfg = write(dir.path(), "syntax.toml", "[evaluate\nn = 1\n");
    let o = run(&["evaluate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("syntax.toml:1:"), "{}", stderr(&o));
}

#[test]
fn missing_sections_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "nodist.toml", "[evaluate]\nn = [10]\nseeds = [0]\n");
    let o = run(&["evaluate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[distribution]"));
    let o = run(&["evaluate", "--config", "/nonexistent/cfg.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["evaluate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fit_failures_go_to_the_error_column() {
    // Every sample lies in the margin band, so each cell fails but the run succeeds.
    let text = r#"
[distribution.family]
name = "point-mass"
y0 = 1.0
dim = 1
[algorithm]
name = "margin"
lipschitz = 1.0
alpha = 0.2
[evaluate]
n = [50]
seeds = [0, 1]
n_test = 100
"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "band.toml", text);
    let o = run(&["evaluate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3);
    for line in text.lines().skip(1) {
        assert!(line.contains(",,,,") && line.contains("margin band"), "{line}");
    }
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pm.toml", POINT_MASS);
    let o = run(&["evaluate", "--config", cfg.to_str().unwrap(), "--out", "/nonexistent/dir/out.csv"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn noisy_randomized_branch_reports_the_classical_robustness() {
    let text = r#"
[distribution.family]
name = "deterministic-linear"
weights = [1.0, 1.0]
bias = 0.0
[algorithm]
name = "noisy"
p = 0.1
[evaluate]
n = [200]
seeds = [3]
n_test = 2000
"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "noisy.toml", text);
    let o = run(&["evaluate", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let r = rows[0]["robustness"].as_f64().unwrap();
    let e = std::f64::consts::E;
    assert!((r - e / (e - 1.0)).abs() < 1e-12, "{r}");
    assert_eq!(rows[0]["schema_id"], "evaluate/v1");
}

#[test]
fn single_size_sweep_leaves_the_slope_empty() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pm.toml", &POINT_MASS.replace("[evaluate]", "[sweep]").replace("seeds = [0]", "seeds = [0, 1, 2, 3, 4]"));
    let o = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with(
        "schema_id,algorithm,n,seed,cr_mean,cr_stderr,theta_min,robustness,error,n_mean_cr,n_stderr,slope\n"
    ));
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.ends_with(',')), "{text}");
    assert!(stderr(&o).contains("unavailable"));
}

#[test]
fn seed_flag_replaces_the_seed_list() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pm.toml", &POINT_MASS.replace("seeds = [0]", "seeds = [0, 1, 2]"));
    let o = run(&["evaluate", "--config", cfg.to_str().unwrap(), "--seed", "42"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("evaluate/v1,zero-dim,100,42,"));
}

#[test]
fn lowerbound_from_flags() {
    let o = run(&["lowerbound", "noise", "--p", "0.25"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "lowerbound-noise/v1");
    assert!((row[4].parse::<f64>().unwrap() - 1.375).abs() < 1e-4);
    assert_eq!(row[6], "true");
}

#[test]
fn core_grid_tiling_error_suggests_an_epsilon() {
    let o = run(&["lowerbound", "core-grid", "--epsilon", "0.05", "--dim", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("does not tile") && err.contains("1/18"), "{err}");
}

#[test]
fn scan_with_and_without_a_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let exact = write(
        dir.path(),
        "exact.toml",
        "[distribution.family]\nname = \"point-mass\"\ny0 = 2.0\n[scan.grid]\nstart = 0.1\nstop = 1.0\nstep = 0.1\n",
    );
    let o = run(&["scan", "--config", exact.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 11);
    assert_eq!(text.lines().nth(1).unwrap(), "scan/v1,exact,0.1,1.1,true");

    let linear = "[distribution.family]\nname = \"deterministic-linear\"\nweights = [2.0]\nbias = 0.0\n";
    let mc = write(dir.path(), "mc.toml", linear);
    let o = run(&["scan", "--config", mc.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("draws"));
    let mc = write(dir.path(), "mc2.toml", &format!("{linear}[scan]\ndraws = 500\n"));
    let o = run(&["scan", "--config", mc.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("scan/v1,monte-carlo,"));
}

#[test]
fn pdim_check_lists_labelings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "p.toml",
        "[pdim]\ninstance = \"common-threshold\"\nseasons = [0.3, 0.6, 1.2, 1.8, 2.5]\nwitnesses = [1.5, 1.5, 1.5, 1.5, 1.5]\nlabelings = [\"10101\", \"00000\"]\n",
    );
    let o = run(&["pdim-check", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "schema_id,instance,labeling,feasible,hypothesis,eta_1,eta_2");
    assert_eq!(rows[1], "pdim/v1,common-threshold,10101,false,,,");
    assert!(rows[2].starts_with("pdim/v1,common-threshold,00000,true,0,"));

    let bad = write(dir.path(), "bad.toml", "[pdim]\ninstance = \"unit-basis\"\nd = 2\nlabelings = [\"012\"]\n");
    let o = run(&["pdim-check", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.toml:4:"), "{}", stderr(&o));
}

#[test]
fn print_config_output_is_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("all.toml");
    let o = run(&["print-config", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    for cmd in ["lowerbound", "pdim-check", "scan"] {
        let o = run(&[cmd, "--config", path.to_str().unwrap()]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
    }
}
