use std::process::{Command, Output};

fn metastab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metastab")).args(args).env_remove("METASTAB_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn spectrum_of_the_spin_model() {
    let o = metastab(&["spectrum", "--model", "builtin:spin_half", "--param", "gamma=1", "--param", "kappa=0.005", "--param", "omega=5.025"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let ev = v["result"]["eigenvalues"].as_array().unwrap();
    assert_eq!(ev.len(), 4);
    assert!((ev[1][0].as_f64().unwrap() + 0.005).abs() < 1e-12);
    assert_eq!(v["meta"]["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn csv_outputs_carry_metadata_and_header() {
    for (args, header) in [
        (vec!["distances", "--points", "4"], "t,d_I,d_ss"),
        (vec!["changes", "--points", "3", "--t-min", "10", "--t-max", "40"], "t2,c_delta,e_minus,e_plus"),
        (vec!["heisenberg", "--points", "3"], "t,max_norm,change,re_0_0"),
        (vec!["verify-bounds", "--points", "20", "--windows", "2"], "id,t,lhs,rhs,slack,pass"),
    ] {
        let o = metastab(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        let text = stdout(&o);
        let mut lines = text.lines();
        let meta = lines.next().unwrap();
        assert!(meta.starts_with("# metastab ") && meta.contains(" model=") && meta.ends_with(" seed=0"), "{meta}");
        assert!(lines.next().unwrap().starts_with(header), "{args:?}");
    }
}

#[test]
fn model_hash_ignores_how_defaults_are_spelled() {
    let a = stdout(&metastab(&["distances", "--points", "2"]));
    let b = stdout(&metastab(&["distances", "--points", "2", "--param", "kappa=0.005"]));
    assert_eq!(a, b);
    let c = stdout(&metastab(&["distances", "--points", "2", "--param", "kappa=0.01"]));
    assert_ne!(a.lines().next(), c.lines().next());
}

#[test]
fn seed_comes_from_flag_then_environment() {
    let env = Command::new(env!("CARGO_BIN_EXE_metastab"))
        .args(["distances", "--points", "2"])
        .env("METASTAB_SEED", "11")
        .output()
        .unwrap();
    assert!(stdout(&env).starts_with("# metastab") && stdout(&env).lines().next().unwrap().ends_with("seed=11"));
    let flag = Command::new(env!("CARGO_BIN_EXE_metastab"))
        .args(["--seed", "3", "distances", "--points", "2"])
        .env("METASTAB_SEED", "11")
        .output()
        .unwrap();
    assert!(stdout(&flag).lines().next().unwrap().ends_with("seed=3"));
    let bad = Command::new(env!("CARGO_BIN_EXE_metastab"))
        .args(["spectrum"])
        .env("METASTAB_SEED", "x")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn input_errors_exit_2_with_locations() {
    let dir = tempfile::tempdir().unwrap();
    let zero = dir.path().join("zero.json");
    std::fs::write(&zero, r#"{"dim": 2, "hamiltonian": [[[0,0],[0,0]],[[0,0],[0,0]]], "jumps": []}"#).unwrap();
    let o = metastab(&["detect", "--model", &format!("file:{}", zero.display()), "--cdelta-max", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trivial dynamics"));

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\n  \"dim\": 2,\n  \"hamiltonian\": [[[0, 0], [0, 0]],\n    [[0, 0], [0, 0]]\n").unwrap();
    let o = metastab(&["spectrum", "--model", &format!("file:{}", broken.display())]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr).to_string();
    assert!(err.contains("broken.json") && err.contains("line 5"), "{err}");

    let edges = dir.path().join("chain.txt");
    std::fs::write(&edges, "0 1 1\n1 0 oops\n").unwrap();
    let o = metastab(&["classical", "spectrum", "--model", &format!("file:{}", edges.display())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    assert_eq!(metastab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(metastab(&["project"]).status.code(), Some(2));
    assert_eq!(metastab(&["--threads", "0", "spectrum"]).status.code(), Some(2));
}

#[test]
fn analysis_failures_exit_1() {
    let o = metastab(&["heisenberg", "--witness", "0.1,0.2,0.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not metastable"));
}

#[test]
fn witness_and_projection_reports() {
    let o = metastab(&["heisenberg", "--witness", "20,40,20"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["result"]["within_bound"].as_bool().unwrap());
    let o = metastab(&["project", "--window", "20,40"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["result"]["m"], 2);
}

#[test]
fn classical_variants_run_on_chains_only() {
    let o = metastab(&["classical", "detect", "--model", "builtin:double_well"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(!v["result"]["windows"].as_array().unwrap().is_empty());
    let o = metastab(&["classical", "detect", "--model", "builtin:uniform"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["result"]["windows"].as_array().unwrap().is_empty());
    let o = metastab(&["classical", "heisenberg", "--model", "builtin:two_state", "--function", "1,-1", "--points", "2", "--t-min", "1", "--t-max", "2"]);
    let text = stdout(&o);
    let row: Vec<f64> = text.lines().nth(2).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((row[1] - (-2.0f64).exp()).abs() < 1e-12, "{text}");
    assert_eq!(metastab(&["classical", "spectrum"]).status.code(), Some(2));
    assert_eq!(metastab(&["heisenberg", "--model", "builtin:two_state"]).status.code(), Some(2));
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let o = metastab(&["--out", path.to_str().unwrap(), "distances", "--points", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), metastab(&["distances", "--points", "3"]).stdout);
}
