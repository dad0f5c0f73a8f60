use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermocluster")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV report, skipping `#` metadata and the header.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("thermocluster-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn critical_temperature_of_the_square_lattice() {
    let o = run(&["critical-temp", "--lattice", "square"]);
    assert_eq!(o.status.code(), Some(0));
    let kt: f64 = rows(&stdout(&o))[0][3].parse().unwrap();
    assert!((kt - 1.6921).abs() / 1.6921 < 1e-3, "{kt}");
}

#[test]
fn delta_only_rescales_printed_temperatures() {
    let o = run(&["critical-temp", "--lattice", "honeycomb", "--delta", "2"]);
    let kt: f64 = rows(&stdout(&o))[0][3].parse().unwrap();
    assert!((kt - 2.0 * 0.813).abs() < 2e-3);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["sample", "--lattice", "chain", "--dims", "4", "--kt", "1", "--shots", "0"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["sample", "--lattice", "chain", "--dims", "4"]).status.code(), Some(2));
    assert_eq!(run(&["sample", "--lattice", "moebius", "--dims", "4", "--kt", "1"]).status.code(), Some(2));
    let o = run(&["sample", "--lattice", "{\"kind\": \"square\",\n \"dims\": [2,", "--kt", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn verify_passes_on_small_graphs() {
    let o = run(&["verify", "--max-sites", "6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(rows(&stdout(&o)).iter().all(|r| r[1] == "PASS"));
}

#[test]
fn seeded_output_is_byte_identical() {
    let args = ["sample", "--lattice", "square", "--dims", "3x3", "--kt", "0.8", "--theta", "0.2", "--shots", "300", "--seed", "11"];
    let a = run(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_thermocluster"))
        .args(args)
        .env("THERMOCLUSTER_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(rows(&stdout(&a)).len(), 300);
    let c = run(&["sample", "--lattice", "square", "--dims", "3x3", "--kt", "0.8", "--theta", "0.2", "--shots", "300", "--seed", "12"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn json_output_carries_a_schema_version() {
    let o = run(&["percolation", "--lattice", "square", "--dims", "8x8", "--pe", "0.3", "--shots", "100", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "percolation");
    assert_eq!(v["rows"][0]["simulable"], true);
}

#[test]
fn simulate_matches_the_exact_distribution() {
    let pattern = scratch("pattern.json");
    std::fs::write(
        &pattern,
        r#"[{"site": 0, "polar": 1.2, "azimuthal": 0.4},
            {"site": 1, "polar": 0.7, "azimuthal": 2.0, "flip_if": [0]},
            {"site": 3, "polar": 2.1, "azimuthal": -0.3, "flip_if": [0, 1]}]"#,
    )
    .unwrap();
    let out = scratch("simulate.csv");
    let o = run(&[
        "simulate", "--lattice", "chain", "--dims", "4", "--boundary", "open", "--beta", "1.5", "--theta", "0.5",
        "--pattern", pattern.to_str().unwrap(), "--shots", "50000", "--seed", "3", "--exact",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let tvd: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# tvd="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(tvd < 0.02, "{tvd}");
    assert_eq!(rows(&text).len(), 8);
}

#[test]
fn phase_diagram_rows() {
    let o = run(&["phase-diagram", "--lattice", "cubic", "--theta-steps", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 5);
    let tc: Vec<f64> = r.iter().map(|row| row[1].parse().unwrap()).collect();
    assert!(tc.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(tc[4], 0.0);
    let kt_q: f64 = r[0][2].parse().unwrap();
    assert!((kt_q - 0.2848).abs() < 1e-3);
}

#[test]
fn decomposed_bond_weights_sum_to_one() {
    let o = run(&["decompose-bond", "--degree", "6", "--kt", "5", "--theta", "0.4"]);
    assert_eq!(o.status.code(), Some(0));
    let total: f64 = rows(&stdout(&o)).iter().map(|r| r[1].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}
