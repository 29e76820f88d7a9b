use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_clique-decomp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["sweep", "--n-vertices", "20", "--clique-sizes", "5", "--trials", "0"]).status.code(), Some(1));
    assert_eq!(run(&["sweep", "--clique-sizes", "5"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--input", "/no/such/file.clq"]).status.code(), Some(1));
    assert_eq!(run(&["sweep", "--n-vertices", "20", "--clique-sizes", "5", "--alpha", "-1"]).status.code(), Some(1));
}

#[test]
fn runtime_failures_exit_with_two() {
    let dir = scratch("runtime");
    let blocker = dir.join("file");
    fs::write(&blocker, "").unwrap();
    let out = blocker.join("nested.csv");
    let o = run(&["generate", "--n-vertices", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn generate_then_solve_round_trip() {
    let dir = scratch("roundtrip");
    let g = dir.join("g.json");
    let o = run(&["generate", "--n-vertices", "60", "--clique-size", "40", "--seed", "5", "--out", g.to_str().unwrap()]);
    assert!(o.status.success());
    let o = run(&["solve", "--input", g.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["N"], 60);
    assert_eq!(report["status"], "converged");
    let clique: Vec<u64> = report["recovery"]["clique"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(clique, (0..40).collect::<Vec<u64>>());
    assert!(report["recovery"]["err_l"].is_null());

    let d = dir.join("g.clq");
    assert!(run(&["generate", "--n-vertices", "60", "--clique-size", "40", "--seed", "5", "--graph-format", "dimacs", "--out", d.to_str().unwrap()])
        .status
        .success());
    let o = run(&["solve", "--input", d.to_str().unwrap()]);
    let text = stdout(&o);
    assert!(text.starts_with("N,edges,lambda,rho,status,iterations,"));
    assert!(text.lines().nth(1).unwrap().starts_with("60,"));
}

#[test]
fn solve_planted_reports_ground_truth_error() {
    let o = run(&["solve", "--n-vertices", "80", "--clique-size", "40", "--format", "json", "--traces"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["recovery"]["err_l"].as_f64().unwrap() < 1e-4);
    assert_eq!(v["residual_trace"].as_array().unwrap().len() as u64, v["iterations"].as_u64().unwrap());
}

#[test]
fn sweep_is_byte_identical_across_workers_and_formats_agree() {
    let dir = scratch("sweep");
    let args = |out: &Path, workers: &str, format: &str| {
        vec![
            "sweep".to_string(),
            "--n-vertices".into(),
            "40,30".into(),
            "--clique-sizes".into(),
            "15,20".into(),
            "--trials".into(),
            "2".into(),
            "--compare-regular".into(),
            "--seed".into(),
            "3".into(),
            "--workers".into(),
            workers.into(),
            "--format".into(),
            format.into(),
            "--out".into(),
            out.to_str().unwrap().into(),
        ]
    };
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    let j = dir.join("c.json");
    for (path, w, f) in [(&a, "1", "csv"), (&b, "3", "csv"), (&j, "2", "json")] {
        let o = bin().args(args(path, w, f)).output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let csv_a = fs::read(&a).unwrap();
    assert_eq!(csv_a, fs::read(&b).unwrap());
    assert_eq!(fs::read(dir.join("a_aggregate.csv")).unwrap(), fs::read(dir.join("b_aggregate.csv")).unwrap());

    let json: serde_json::Value = serde_json::from_slice(&fs::read(&j).unwrap()).unwrap();
    let rows = json["rows"].as_array().unwrap();
    let text = String::from_utf8(csv_a).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let data: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), data.len());
    for (row, line) in rows.iter().zip(&data) {
        for (name, cell) in header.iter().zip(line.split(',')) {
            let v = &row[*name];
            let rendered = match v {
                serde_json::Value::Null => String::new(),
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            if let (Ok(x), Ok(y)) = (rendered.parse::<f64>(), cell.parse::<f64>()) {
                assert_eq!(x.to_bits(), y.to_bits(), "{name}");
            } else {
                assert_eq!(rendered, *cell, "{name}");
            }
        }
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = scratch("config");
    let cfg = dir.join("spec.json");
    fs::write(
        &cfg,
        r#"{"n_vertices": [30], "clique_sizes": [15], "trials": 2, "seed": 1,
            "solver": {"alpha": 0.05, "max_iterations": 4}}"#,
    )
    .unwrap();
    let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--trials", "1", "--max-iter", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    let fields: Vec<&str> = rows[0].split(',').collect();
    // N,n,p,model,trial,seed,err_l,clique_size_error,observed_size,spectral_norm,extracted_size,clique_valid,recovered,iterations
    assert_eq!(fields[5], "1");
    assert_eq!(fields[13], "2");

    fs::write(&cfg, "{not json").unwrap();
    assert_eq!(run(&["sweep", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn timings_only_when_asked() {
    let base = ["sweep", "--n-vertices", "20", "--clique-sizes", "10"];
    let plain = stdout(&run(&base));
    let wall = plain.lines().next().unwrap().split(',').position(|h| h == "wall_time_s").unwrap();
    assert_eq!(plain.lines().nth(1).unwrap().split(',').nth(wall), Some(""));
    let mut timed = base.to_vec();
    timed.push("--timings");
    let text = stdout(&run(&timed));
    assert!(text.lines().nth(1).unwrap().split(',').nth(wall).unwrap().parse::<f64>().is_ok());
}

#[test]
fn dimacs_command_reports_per_file() {
    let good = fixture("planted60_24.clq");
    let bad = fixture("malformed.clq");
    let o = run(&["dimacs", good.to_str().unwrap(), bad.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success());
    let rows: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().any(|r| r["status"] == "failed"));
    assert!(rows.iter().any(|r| r["verified_size"] == 24));
}

#[test]
fn certify_and_random_batch_run() {
    let o = run(&["certify", "--n-vertices", "30", "--clique-sizes", "29", "--trials", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.lines().next().unwrap().contains("pq_norm_ok"));
    assert_eq!(text.lines().count(), 3);

    let o = run(&["random-batch", "--n-vertices", "40", "--p", "0.7", "--trials", "2", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert!(v["rows"][0]["err_l"].is_null());
}
