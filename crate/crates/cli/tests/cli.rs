use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn selfsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selfsim"))
        .current_dir(dir)
        .arg("--quiet")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn generate_edgelist_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = selfsim(dir.path(), &["generate", "--family", "sier", "-n", "2", "-k", "3", "--out", "g.txt"]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("g.txt")).unwrap();
    assert!(text.starts_with("# selfsim-edgelist v1 family=sierpinski n=2 k=3"));
    assert_eq!(text.lines().count(), 13);

    let o = selfsim(dir.path(), &["generate", "--family", "hier", "-n", "3", "-k", "3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["num_vertices"], 27);
    assert_eq!(v["edges"].as_array().unwrap().len(), 39);
}

#[test]
fn spectrum_compressed_and_expanded() {
    let dir = tempfile::tempdir().unwrap();
    let o = selfsim(dir.path(), &["spectrum", "--family", "hier", "-n", "2", "-k", "3"]);
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(2).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[2], "3,4");
    let o = selfsim(dir.path(), &["spectrum", "--family", "hier", "-n", "3", "-k", "4", "--expand"]);
    assert_eq!(stdout(&o).lines().count(), 2 + 64);
}

#[test]
fn metrics_single_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let o = selfsim(dir.path(), &["metrics", "--family", "sier", "-n", "2", "-k", "3"]);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "# selfsim-metrics v1");
    assert!(lines[1].starts_with("family,n,k,N,E,epsilon,epsilon_asym,zeta,"));
    let cells: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(cells[..5], ["sier", "2", "3", "9", "12"]);
    assert_eq!(cells[7], "5");
    let kirchhoff: f64 = cells[14].parse().unwrap();
    assert!((kirchhoff - 40.8).abs() < 1e-9);

    let o = selfsim(dir.path(), &["metrics", "--family", "hier", "-k", "4", "--sweep", "1..5"]);
    assert_eq!(stdout(&o).lines().count(), 2 + 5);
    let o = selfsim(dir.path(), &["metrics", "--family", "hier", "-k", "4"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn validate_passes_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = selfsim(dir.path(), &["validate", "--family", "hier", "-n", "3", "-k", "3"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains(" 0 failed"));

    // rewire one edge of S(2,3): same counts, different graph
    selfsim(dir.path(), &["generate", "--family", "sier", "-n", "2", "-k", "3", "--out", "g.txt"]);
    let text = fs::read_to_string(dir.path().join("g.txt")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    assert_eq!(lines[1], "0 1");
    lines[1] = "0 8".into();
    fs::write(dir.path().join("bad.txt"), lines.join("\n") + "\n").unwrap();
    let o = selfsim(dir.path(), &["validate", "--edgelist", "bad.txt"]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    let row = out.lines().find(|l| l.contains("spectrum-match")).unwrap();
    assert!(row.contains("FAIL"), "{out}");

    let o = selfsim(dir.path(), &["validate", "--edgelist", "g.txt"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn validate_with_nothing_to_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = selfsim(dir.path(), &["validate", "--all", "--max-n", "0"]);
    assert_ne!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no checks ran"));
    let o = selfsim(dir.path(), &["validate", "--all", "--budget-dense", "0"]);
    assert_ne!(code(&o), 0);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&selfsim(dir.path(), &["frobnicate"])), 2);
    assert_eq!(code(&selfsim(dir.path(), &["metrics", "--family", "hier", "-n", "2", "-k", "2"])), 2);
    assert_eq!(code(&selfsim(dir.path(), &["sweep", "-n", "5..4"])), 2);
    assert_eq!(code(&selfsim(dir.path(), &["generate", "--family", "tree", "-n", "2", "-k", "3"])), 2);
    let o = selfsim(dir.path(), &["generate", "--family", "hier", "-n", "9", "-k", "5", "--budget-vertices", "1000"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn sweep_columns_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let args =
        ["sweep", "--families", "sier", "--k-values", "3,4,5,6", "-n", "1..12", "--outputs", "epsilon,epsilon_asym"];
    let a = selfsim(dir.path(), &args);
    let b = selfsim(dir.path(), &args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    assert_eq!(out.lines().nth(1), Some("family,n,k,epsilon,epsilon_asym"));
    assert_eq!(out.lines().count(), 2 + 48);
}

#[test]
fn simulations_are_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, name: &str| {
        let o = selfsim(
            dir.path(),
            &[
                "simulate", "--family", "sier", "-n", "2", "-k", "3", "--kind", "noisy2", "--trials", "4", "--t-end",
                "5", "--seed", seed, "--stride", "50", "--out", name,
            ],
        );
        assert_eq!(code(&o), 0);
        (fs::read(dir.path().join(name)).unwrap(), o.stdout)
    };
    let a = run("3", "a.csv");
    let b = run("3", "b.csv");
    let c = run("4", "c.csv");
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
    let summary: serde_json::Value = serde_json::from_slice(&a.1).unwrap();
    assert_eq!(summary["analytic_quantity"], "H2");
    assert!(summary["stderr"].as_f64().unwrap() > 0.0);
    let header = String::from_utf8(a.0).unwrap();
    assert!(header.lines().nth(1).unwrap().starts_with("time,x_0,x_1"));
}

#[test]
fn delayed_simulation_flags_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let sim = |tau: &str| {
        let o = selfsim(
            dir.path(),
            &[
                "simulate", "--family", "sier", "-n", "2", "-k", "3", "--kind", "delayed", "--tau", tau, "--t-end",
                "200", "--stride", "1000000",
            ],
        );
        assert_eq!(code(&o), 0);
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v["diverged"].as_bool().unwrap()
    };
    // tau_max = pi/10
    assert!(!sim("0.2827"));
    assert!(sim("0.3456"));
    let o = selfsim(
        dir.path(),
        &["simulate", "--family", "sier", "-n", "2", "-k", "3", "--kind", "delayed", "--tau", "0.015", "--dt", "0.01"],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "out-dir = \"results\"\n\n[metrics]\nfamily = \"sier\"\nn = 3\nk = 3\nout = \"m.csv\"\n\n[sweep]\nfamilies = [\"hier\", \"sier\"]\nk-values = [3]\nn-range = \"1..2\"\n",
    )
    .unwrap();
    let o = selfsim(dir.path(), &["--config", "run.toml", "metrics"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("results/m.csv")).unwrap();
    assert!(text.lines().nth(2).unwrap().starts_with("sier,3,3,27,"));

    let o = selfsim(dir.path(), &["--config", "run.toml", "metrics", "-n", "2", "--out", "m2.csv"]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("results/m2.csv")).unwrap();
    assert!(text.lines().nth(2).unwrap().starts_with("sier,2,3,9,"));

    let o = selfsim(dir.path(), &["--config", "run.toml", "sweep", "--families", "sier", "--out", "sw.csv"]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("results/sw.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.starts_with("sier,")));

    let o = selfsim(dir.path(), &["--config", "missing.toml", "metrics"]);
    assert_eq!(code(&o), 2);
}
