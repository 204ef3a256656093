use std::process::{Command, Output};

fn optmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optmix"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn norms_of_a_preset() {
    let o = optmix(&["norms", "--ic", "short-1", "--resolution", "128", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let l0 = v["l0"].as_f64().unwrap();
    assert!((l0 - 0.0637).abs() < 5e-4, "{l0}");
}

#[test]
fn eigen_of_the_square_is_analytic() {
    let o = optmix(&["eigen", "--shape", "square", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let l = v["lambda1"].as_f64().unwrap();
    assert!((l - std::f64::consts::PI.powi(2) / 4.0).abs() < 1e-12);
}

#[test]
fn simulate_writes_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = optmix(&[
        "simulate",
        "--shape",
        "square",
        "--resolution",
        "32",
        "--constraint",
        "energy",
        "--U",
        "1",
        "--ic",
        "two-sines",
        "--t-end",
        "0.05",
        "--snapshot-times",
        "0,0.05",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = optmix::io::formats::read_diagnostics(&out.join("diagnostics.csv")).unwrap();
    assert_eq!(recs.len(), 6);
    assert!(recs.last().unwrap().mix_norm < recs[0].mix_norm);
    assert_eq!(std::fs::read_dir(out.join("snapshots")).unwrap().count(), 2);
}

#[test]
fn configuration_errors_exit_with_two() {
    for args in [
        &["simulate", "--shape", "square", "--constraint", "energy", "--U", "-1", "--ic", "x"][..],
        &["simulate", "--shape", "square", "--constraint", "energy", "--U", "1", "--ic", "sin(x"][..],
        &["simulate", "--shape", "circle", "--bc", "periodic", "--constraint", "energy", "--U", "1", "--ic", "x"][..],
        &["simulate", "--shape", "hexagon", "--constraint", "energy", "--U", "1", "--ic", "x"][..],
    ] {
        let o = optmix(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn stagnant_initial_data_is_a_numerical_failure() {
    let o = optmix(&[
        "simulate", "--shape", "square", "--resolution", "16", "--constraint", "energy", "--U", "1", "--ic",
        "cos(pi*x)", "--t-end", "0.02", "--output",
        tempfile::tempdir().unwrap().path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn compare_bc_needs_a_rectangle() {
    let o = optmix(&["compare-bc", "--shape", "circle", "--constraint", "energy", "--U", "1", "--ic", "x"]);
    assert_eq!(o.status.code(), Some(2));
}
