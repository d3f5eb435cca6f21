use std::fs;
use std::path::Path;
use std::process::Command;

fn bloch() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bloch"))
}

const AIR: &str = r#"
[model]
kind = "homogeneous"
eps = 1.0

[basis]
order = 1
grid = 16

[path]
samples = 3
nbands = 4
segments = [0]

[omega]
values_over_2pi = [0.125, 0.25]

[solver]
method = "dense"
nev = 0

[converge]
orders = [1]
omega_ref_over_2pi = 0.25
k_ref = [1.5707963267948966, 0.0, 0.0]
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], config: &Path, out: &Path) -> std::process::Output {
    bloch()
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn standard_sweep_writes_csv_manifest_and_script() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), AIR);
    let out = dir.path().join("out");
    let o = run(&["bands-standard"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let points = bloch_core::output::read_points_file(&out.join("bands_standard.csv")).unwrap();
    // 3 samples per segment on three segments plus the end point, 4 bands each
    assert_eq!(points.len(), 10 * 4);
    let quarter = points.iter().find(|p| p.alpha == std::f64::consts::PI / 3.0).unwrap();
    assert!(quarter.eta.is_none());
    assert!(fs::read_to_string(out.join("bands_standard.gp")).unwrap().contains("bands_standard.csv"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("bands-standard.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "bands-standard");
    assert_eq!(manifest["config"]["basis"]["order"], 1);
    assert!(manifest["seed"].is_u64());
}

#[test]
fn quadratic_sweep_emits_analytic_point_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), AIR);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&["bands-quadratic"], &cfg, &a).status.code(), Some(0));
    assert_eq!(run(&["bands-quadratic"], &cfg, &b).status.code(), Some(0));
    let ta = fs::read(a.join("bands_quadratic.csv")).unwrap();
    assert_eq!(ta, fs::read(b.join("bands_quadratic.csv")).unwrap());
    let points = bloch_core::output::read_points_file(&a.join("bands_quadratic.csv")).unwrap();
    let quarter = std::f64::consts::PI / 4.0;
    assert!(points
        .iter()
        .any(|p| p.flag == bloch_core::sweep::PointFlag::Physical && (p.alpha - quarter).abs() < 1e-10));
}

#[test]
fn converge_and_admissible_succeed_on_air() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), AIR);
    let out = dir.path().join("out");
    let o = run(&["converge"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("converge.csv")).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "1");
    assert!(row[5].parse::<f64>().unwrap() <= 1e-10);
    assert_eq!(run(&["admissible"], &cfg, &out).status.code(), Some(0));
}

#[test]
fn validate_passes_and_writes_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), AIR);
    let out = dir.path().join("out");
    let o = run(&["validate"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("validate.json")).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let bad = write_config(dir.path(), "[model]\nkind = \"glass\"\n");
    assert_eq!(run(&["admissible"], &bad, &out).status.code(), Some(2));
    let missing = dir.path().join("nope.toml");
    assert_eq!(run(&["admissible"], &missing, &out).status.code(), Some(2));
    // the standard solver needs a frequency-independent model
    let fcc = write_config(dir.path(), "[model]\nkind = \"fcc\"\n[basis]\norder = 1\ngrid = 16\n");
    assert_eq!(run(&["bands-standard"], &fcc, &out).status.code(), Some(2));
}

#[test]
fn inadmissible_frequencies_exit_with_4() {
    let dir = tempfile::tempdir().unwrap();
    // ω/2π = 0.6 is above every bound for air on Γ-X
    let text = AIR.replace("[0.125, 0.25]", "[0.6]") + "\n[tau]\npolicy = \"strict\"\n";
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    assert_eq!(run(&["admissible"], &cfg, &out).status.code(), Some(4));
    assert_eq!(run(&["bands-quadratic"], &cfg, &out).status.code(), Some(4));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("bands-quadratic.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["failures"].as_array().unwrap().len(), 1);
}

#[test]
fn solver_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    // one Krylov pass cannot converge twenty eigenvalues
    let text = AIR.replace(
        "method = \"dense\"\nnev = 0",
        "method = \"arnoldi\"\nnev = 20\nsubspace = 21\nmax_restarts = 0",
    );
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    let o = run(&["converge"], &cfg, &out);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
