use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn hilfer(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hilfer"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn solve_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = hilfer(&["solve"], &fixture("caputo.toml"), dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,Psi_t,x_weighted,x_raw"));
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    // x₀E_{1/2}(0.8) = exp(0.64)(1 + erf 0.8)
    let want = 0.64f64.exp() * (1.0 + libm::erf(0.8));
    assert!((last[3] - want).abs() < 5e-3 * want, "{} vs {want}", last[3]);
    let report: toml::Value = std::fs::read_to_string(dir.path().join("report.toml")).unwrap().parse().unwrap();
    assert_eq!(report["passed"].as_bool(), Some(true));
    assert_eq!(report["solver"]["converged"].as_bool(), Some(true));
    assert!((report["solver"]["c_constant"].as_float().unwrap() - 1.25).abs() < 1e-12);
}

#[test]
fn free_problem_is_the_resolvent() {
    let dir = tempfile::tempdir().unwrap();
    let o = hilfer(&["solve"], &fixture("free.toml"), dir.path());
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    // ε = 0.6 + 0.5·0.4 = 0.8; weighted value x₀/Γ(ε)
    let z = 2.0 / libm::tgamma(0.8);
    for line in csv.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((cols[2] - z).abs() < 1e-13, "{line}");
    }
}

#[test]
fn pantograph_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = hilfer(&["solve"], &fixture("pantograph.toml"), dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let got = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    let golden = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/pantograph_solution.csv")).unwrap();
    assert!(got == golden, "solution differs from the frozen golden file");
    let report: toml::Value = std::fs::read_to_string(dir.path().join("report.toml")).unwrap().parse().unwrap();
    assert!(report["solver"]["q_theoretical"].as_float().unwrap() < 1.0);
    assert_eq!(report["condition_d"]["standard_holds"].as_bool(), Some(true));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert_eq!(code(&hilfer(&["solve", "--seed", "11"], &fixture("pantograph.toml"), d.path())), 0);
    }
    for name in ["solution.csv", "report.toml"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&hilfer(&["solve"], &fixture("bad_key.toml"), d)), 1);
    assert_eq!(code(&hilfer(&["solve"], &fixture("does_not_exist.toml"), d)), 1);
    assert_eq!(code(&hilfer(&["verify", "bogus"], &fixture("caputo.toml"), d)), 1);
    // hypothesis gates
    assert_eq!(code(&hilfer(&["verify", "caplygin"], &fixture("caplygin_acausal.toml"), d)), 2);
    assert_eq!(code(&hilfer(&["verify", "caplygin"], &fixture("caplygin_nonmonotone.toml"), d)), 2);
    // mesh below the minimum: resolution error
    assert_eq!(code(&hilfer(&["verify", "inversion", "--mesh-n", "16"], &fixture("inversion.toml"), d)), 2);
    // a check that runs and fails: tolerance below round-off
    let strict = d.join("strict.toml");
    std::fs::write(&strict, "[identity]\npsi = [\"exp\"]\nmu = [0.5]\nxi = [1.0]\ntol = 1e-15\n[mesh]\nn = 64\n").unwrap();
    assert_eq!(code(&hilfer(&["verify", "identity"], &strict, d)), 3);
    // passing checks
    assert_eq!(code(&hilfer(&["verify", "caplygin"], &fixture("caplygin.toml"), d)), 0);
    assert_eq!(code(&hilfer(&["verify", "comparison"], &fixture("comparison.toml"), d)), 0);
    assert_eq!(code(&hilfer(&["verify", "inversion"], &fixture("inversion.toml"), d)), 0);
}

#[test]
fn table_writes_orders() {
    let dir = tempfile::tempdir().unwrap();
    let o = hilfer(&["table"], &fixture("caputo.toml"), dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let csv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("target,n,error,observed_order"));
    assert_eq!(csv.lines().count(), 5);
}
