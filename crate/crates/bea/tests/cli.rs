use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bea(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bea"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("bea runs")
}

fn bare(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bea")).args(args).output().expect("bea runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn verify_matches_all_identities() {
    let d = TempDir::new().unwrap();
    let o = bea(&["verify"], d.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("33/33 golden identities matched"));
    assert!(d.path().join("verify.txt").exists());
}

#[test]
fn derive_at_order_zero_is_the_continuous_equation() {
    let d = TempDir::new().unwrap();
    let o = bea(&["derive", "--order", "0"], d.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("d2phi = (alpha^2 + V1)*phi/(c^2-1) + 2*alpha*c*J*d1phi/(c^2-1)"));
    let red = std::fs::read_to_string(d.path().join("reduced_ode.txt")).unwrap();
    assert!(red.contains("h^0: alpha^2*phi1/(c^2-1) + 2*alpha*c*d1phi2/(c^2-1) + phi1*V1/(c^2-1)"));
    assert!(!red.contains("h^2"));
}

#[test]
fn outputs_are_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for d in [&a, &b] {
        assert_eq!(bea(&["derive", "--order", "2"], d.path()).status.code(), Some(0));
    }
    for f in ["lagrangian.txt", "high_order_ode.txt", "reduced_ode.txt"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    let (ma, mb) = (manifest(a.path()), manifest(b.path()));
    assert_eq!(ma["input_hash"], mb["input_hash"]);
    assert_eq!(ma["outputs"], mb["outputs"]);
}

#[test]
fn manifest_hashes_the_written_files() {
    let d = TempDir::new().unwrap();
    assert_eq!(bea(&["derive", "--order", "0"], d.path()).status.code(), Some(0));
    let m = manifest(d.path());
    for entry in m["outputs"].as_array().unwrap() {
        let content = std::fs::read(d.path().join(entry["file"].as_str().unwrap())).unwrap();
        assert_eq!(entry["sha256"].as_str().unwrap(), bea::report::content_hash(&content));
    }
}

#[test]
fn json_format_writes_json() {
    let d = TempDir::new().unwrap();
    assert_eq!(bea(&["invariant", "--order", "2", "--format", "json"], d.path()).status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("invariant.json")).unwrap()).unwrap();
    assert!(v.is_object());
}

#[test]
fn odd_order_is_a_validation_error() {
    let d = TempDir::new().unwrap();
    let p = d.path().join("bad.toml");
    std::fs::write(&p, "kind = \"rotating\"\norder = 3\n").unwrap();
    let o = bea(&["derive", "--problem", p.to_str().unwrap()], d.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(bare(&["derive", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(bare(&["simulate", "--preset", "fig9"]).status.code(), Some(1));
    assert_eq!(bare(&["--help"]).status.code(), Some(0));
    let d = TempDir::new().unwrap();
    assert_eq!(bea(&["simulate", "--preset", "fig4", "--format", "latex"], d.path()).status.code(), Some(1));
}

#[test]
fn special_case_has_lagrangian_fibres() {
    let d = TempDir::new().unwrap();
    let p = d.path().join("case.toml");
    std::fs::write(&p, "kind = \"rotating\"\norder = 2\ncase = \"dx-eq-cdt\"\n").unwrap();
    let o = bea(&["hamiltonian", "--problem", p.to_str().unwrap()], d.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("flow check ok, closed true, vertical fibres Lagrangian true"));
}

#[test]
fn fig4_rotation_invariant_is_flat() {
    let d = TempDir::new().unwrap();
    let o = bea(&["simulate", "--preset", "fig4", "--span", "5"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(d.path().join("fig4.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&header[..5], &["xi", "q1", "q2", "p1", "p2"]);
    let col = header.iter().position(|h| *h == "I_rot_0").unwrap();
    let vals: Vec<f64> = lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    assert_eq!(vals.len(), 51);
    assert!(vals.iter().all(|v| (v - vals[0]).abs() < 1e-12));
}

#[test]
fn unbounded_dynamics_exit_four() {
    let d = TempDir::new().unwrap();
    let o = bea(&["simulate", "--preset", "fig7", "--potential", "poly:0,0,1"], d.path());
    assert_eq!(o.status.code(), Some(4));
}
