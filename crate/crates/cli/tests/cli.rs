use std::path::Path;
use std::process::{Command, Output};

fn fkent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fkent")).args(args).env("FKENT_THREADS", "2").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn weak_mean_of_half_rotation() {
    // orbits {0, 1/2} and {1/4, 3/4}: every pairing costs 1/4 per point
    let o = fkent(&["metric", "--system", "rotation:0.5", "--x", "0", "--y", "0.25", "--n", "2", "--kind", "weakmean"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "0.25\n");
}

#[test]
fn exit_codes() {
    let unknown = fkent(&["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("Usage"));
    assert_eq!(fkent(&["span", "--system", "rotation:1.5", "--n", "4", "--eps", "0.1"]).status.code(), Some(1));
    assert_eq!(fkent(&["span", "--system", "tent", "--n", "4"]).status.code(), Some(1));
    assert_eq!(fkent(&["orbit", "--system", "full_shift:2:8", "--x", "01", "--n", "9"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no/such/dir.csv");
    let o = fkent(&["orbit", "--system", "tent", "--x", "0.3", "--n", "3", "--out", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = dir.path().join("missing.json");
    assert_eq!(fkent(&["span", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(fkent(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_lemma_chain_reports_no_violations() {
    let o = fkent(&["verify", "--suite", "lemma-chain", "--trials", "1000", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("violations=0"), "{}", stdout(&o));
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn outputs_are_byte_identical_and_carry_headers() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 4] = [
        &["span", "--system", "full_shift:2", "--n", "4..6", "--eps", "0.1,0.3", "--N", "150", "--seed", "4"],
        &[
            "entropy-katok",
            "--system",
            "full_shift:2",
            "--measure",
            "bernoulli:0.5,0.5",
            "--n",
            "4..6",
            "--eps",
            "0.1",
            "--m",
            "300",
            "--seed",
            "7",
        ],
        &["probe-ergodic", "--system", "doubling", "--n", "32", "--pairs", "20", "--m", "50", "--seed", "2"],
        &["criterion", "--system", "rotation:0.3", "--n", "16", "--eps", "0.2", "--m", "100", "--candidates", "5"],
    ];
    for (k, args) in runs.iter().enumerate() {
        let mut texts = Vec::new();
        for threads in ["1", "3"] {
            let out = dir.path().join(format!("{k}-{threads}.out"));
            let mut full: Vec<&str> = args.to_vec();
            full.extend(["--out", out.to_str().unwrap()]);
            let o =
                Command::new(env!("CARGO_BIN_EXE_fkent")).args(&full).env("FKENT_THREADS", threads).output().unwrap();
            assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
            texts.push(read(&out));
        }
        assert_eq!(texts[0], texts[1], "{args:?}");
        let first = texts[0].lines().next().unwrap();
        assert!(first.starts_with("# fkent ") && first.contains("seed=") && first.contains("config={"), "{first}");
    }
    let katok = read(&dir.path().join("1-1.out"));
    assert_eq!(katok.lines().nth(1), Some("metric,n,epsilon_or_delta,count_or_mass,log_value,slope"));
    assert_eq!(katok.lines().count(), 2 + 3);
    let probe = read(&dir.path().join("2-1.out"));
    assert_eq!(probe.lines().nth(1), Some("n,pairs,q05,q25,median,q75,q95,verdict"));
    let span = read(&dir.path().join("0-1.out"));
    assert_eq!(span.lines().nth(1), Some("metric,n,epsilon,count,exact"));
    let json: String = read(&dir.path().join("3-1.out")).lines().skip(1).collect::<Vec<_>>().join("\n");
    let reports: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(reports[0]["n"], 16);
    assert!(reports[0]["achieved_fraction"].is_number());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"system": "rotation:0.5", "x": "0", "y": "0.25", "n": [2], "kind": "bowen"}"#).unwrap();
    let o = fkent(&["metric", "--config", cfg.to_str().unwrap()]);
    assert_eq!(stdout(&o), "0.25\n");
    let o = fkent(&["metric", "--config", cfg.to_str().unwrap(), "--y", "0.5"]);
    assert_eq!(stdout(&o), "0.5\n");
    std::fs::write(&cfg, r#"{"system": "rotation:0.5", "colour": 3}"#).unwrap();
    assert_eq!(fkent(&["metric", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_fkent"))
        .args(["verify", "--suite", "oracle", "--trials", "1"])
        .env("FKENT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
