//! End-to-end tests of the command-line interface through the compiled
//! binary: staged subcommands against the composite run, error surfaces,
//! the seed override, and the annotation endpoint wire protocol.

use std::io::{Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_colabel"));
    cmd.env_remove("COLABEL_SEED");
    cmd
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr_of(cmd: &mut Command) -> (Option<i32>, String) {
    let out = cmd.output().unwrap();
    (
        out.status.code(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn gen_toy(dir: &Path) {
    run_ok(
        bin()
            .arg("gen-toy")
            .arg("--out-dir")
            .arg(dir)
            .args(["--seed", "7"]),
    );
}

/// Adds the five dataset path flags shared by `run` and the staged commands.
fn data_flags(cmd: &mut Command, data: &Path) -> () {
    cmd.arg("--graph").arg(data.join("graph.tsv"));
    cmd.arg("--labels").arg(data.join("labels.csv"));
    cmd.arg("--label-space").arg(data.join("label_space.json"));
}

#[test]
fn staged_chain_matches_composite_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    gen_toy(&data);

    let full = dir.path().join("full");
    let mut cmd = bin();
    cmd.arg("run");
    data_flags(&mut cmd, &data);
    cmd.arg("--features").arg(data.join("features.csv"));
    cmd.arg("--texts").arg(data.join("texts.jsonl"));
    cmd.args(["--top-k", "150", "--tau", "0.7"]);
    cmd.arg("--llm-pred").arg(data.join("llm_preds.jsonl"));
    cmd.arg("--out").arg(&full);
    let out = run_ok(&mut cmd);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("selected 150"), "stdout: {stdout}");
    assert!(stdout.contains("wrote 11 file(s)"), "stdout: {stdout}");

    let staged = dir.path().join("staged");
    std::fs::create_dir_all(&staged).unwrap();
    let p = |name: &str| staged.join(name);

    let mut cmd = bin();
    cmd.arg("split");
    data_flags(&mut cmd, &data);
    cmd.arg("--out").arg(p("split.json"));
    run_ok(&mut cmd);

    let mut cmd = bin();
    cmd.arg("train-judge");
    data_flags(&mut cmd, &data);
    cmd.arg("--features").arg(data.join("features.csv"));
    cmd.arg("--split").arg(p("split.json"));
    cmd.arg("--model-out").arg(p("judge.json"));
    cmd.arg("--probs-out").arg(p("probs.csv"));
    run_ok(&mut cmd);

    run_ok(
        bin()
            .arg("select")
            .arg("--graph")
            .arg(data.join("graph.tsv"))
            .arg("--split")
            .arg(p("split.json"))
            .args(["--top-k", "150"])
            .arg("--scores-out")
            .arg(p("scores.csv"))
            .arg("--out")
            .arg(p("selected.json")),
    );

    run_ok(
        bin()
            .arg("annotate")
            .arg("--graph")
            .arg(data.join("graph.tsv"))
            .arg("--selected")
            .arg(p("selected.json"))
            .arg("--texts")
            .arg(data.join("texts.jsonl"))
            .arg("--label-space")
            .arg(data.join("label_space.json"))
            .arg("--llm-pred")
            .arg(data.join("llm_preds.jsonl"))
            .arg("--out")
            .arg(p("annotations.jsonl")),
    );

    run_ok(
        bin()
            .arg("partition")
            .arg("--graph")
            .arg(data.join("graph.tsv"))
            .arg("--selected")
            .arg(p("selected.json"))
            .arg("--annotations")
            .arg(p("annotations.jsonl"))
            .arg("--probs")
            .arg(p("probs.csv"))
            .arg("--label-space")
            .arg(data.join("label_space.json"))
            .args(["--tau", "0.7"])
            .arg("--out")
            .arg(p("partition.json")),
    );

    run_ok(
        bin()
            .arg("emit")
            .arg("--partition")
            .arg(p("partition.json"))
            .arg("--graph")
            .arg(data.join("graph.tsv"))
            .arg("--texts")
            .arg(data.join("texts.jsonl"))
            .arg("--label-space")
            .arg(data.join("label_space.json"))
            .arg("--instruct-out")
            .arg(p("instruct.jsonl"))
            .arg("--prefs-out")
            .arg(p("prefs.jsonl")),
    );

    let mut cmd = bin();
    cmd.arg("report");
    cmd.arg("--partition").arg(p("partition.json"));
    data_flags(&mut cmd, &data);
    cmd.arg("--out").arg(p("report.json"));
    run_ok(&mut cmd);

    for name in [
        "split.json",
        "judge.json",
        "probs.csv",
        "scores.csv",
        "selected.json",
        "annotations.jsonl",
        "partition.json",
        "instruct.jsonl",
        "prefs.jsonl",
        "report.json",
    ] {
        let a = std::fs::read(full.join(name)).unwrap();
        let b = std::fs::read(staged.join(name)).unwrap();
        assert_eq!(a, b, "staged {name} differs from composite run");
    }

    // The emitted instructions feed the text trainer; this dataset keeps no
    // disagreements, so the preference term is switched off.
    let out = run_ok(
        bin()
            .arg("train-text")
            .arg("--instruct")
            .arg(p("instruct.jsonl"))
            .arg("--label-space")
            .arg(data.join("label_space.json"))
            .args(["--epochs", "50", "--lambda", "0"])
            .arg("--model-out")
            .arg(p("toy.json"))
            .arg("--curve-out")
            .arg(p("curve.csv")),
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("trained"));
    colabel::text_classifier::ToyModel::load(p("toy.json")).unwrap();
    let curve = std::fs::read_to_string(p("curve.csv")).unwrap();
    assert!(curve.starts_with("epoch,"), "curve header: {curve}");
}

#[test]
fn annotate_aborts_on_missing_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    gen_toy(&data);

    let mut cmd = bin();
    cmd.arg("split");
    data_flags(&mut cmd, &data);
    cmd.arg("--out").arg(dir.path().join("split.json"));
    run_ok(&mut cmd);
    run_ok(
        bin()
            .arg("select")
            .arg("--graph")
            .arg(data.join("graph.tsv"))
            .arg("--split")
            .arg(dir.path().join("split.json"))
            .args(["--top-k", "50"])
            .arg("--scores-out")
            .arg(dir.path().join("scores.csv"))
            .arg("--out")
            .arg(dir.path().join("selected.json")),
    );

    let sparse = dir.path().join("sparse_preds.jsonl");
    std::fs::write(&sparse, "{\"node_id\": 0, \"label\": \"neural_nets\"}\n").unwrap();
    let (code, stderr) = stderr_of(
        bin()
            .arg("annotate")
            .arg("--graph")
            .arg(data.join("graph.tsv"))
            .arg("--selected")
            .arg(dir.path().join("selected.json"))
            .arg("--texts")
            .arg(data.join("texts.jsonl"))
            .arg("--label-space")
            .arg(data.join("label_space.json"))
            .arg("--llm-pred")
            .arg(&sparse)
            .arg("--out")
            .arg(dir.path().join("annotations.jsonl")),
    );
    assert_eq!(code, Some(1));
    assert!(
        stderr.contains("missing predictions for 50 selected node(s)"),
        "stderr: {stderr}"
    );
    assert!(!dir.path().join("annotations.jsonl").exists());
}

#[test]
fn exactly_one_annotation_source_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    gen_toy(&data);
    let (code, stderr) = stderr_of(
        bin()
            .arg("annotate")
            .arg("--graph")
            .arg(data.join("graph.tsv"))
            .arg("--selected")
            .arg(data.join("missing.json"))
            .arg("--texts")
            .arg(data.join("texts.jsonl"))
            .arg("--label-space")
            .arg(data.join("label_space.json"))
            .arg("--llm-pred")
            .arg(data.join("llm_preds.jsonl"))
            .args(["--endpoint", "http://127.0.0.1:1/annotate"])
            .arg("--out")
            .arg(dir.path().join("annotations.jsonl")),
    );
    assert_eq!(code, Some(1));
    assert!(
        stderr.contains("exactly one of --llm-pred or --endpoint"),
        "stderr: {stderr}"
    );
}

#[test]
fn seed_env_var_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    gen_toy(&data);
    let split_with = |name: &str, seed_flag: &str, env: Option<&str>| {
        let path = dir.path().join(name);
        let mut cmd = bin();
        cmd.arg("split");
        data_flags(&mut cmd, &data);
        cmd.args(["--seed", seed_flag]);
        cmd.arg("--out").arg(&path);
        if let Some(value) = env {
            cmd.env("COLABEL_SEED", value);
        }
        run_ok(&mut cmd);
        std::fs::read(&path).unwrap()
    };
    let flag_one = split_with("a.json", "1", None);
    let env_five = split_with("b.json", "1", Some("5"));
    let flag_five = split_with("c.json", "5", None);
    assert_eq!(env_five, flag_five);
    assert_ne!(flag_one, env_five);

    let mut cmd = bin();
    cmd.arg("split");
    data_flags(&mut cmd, &data);
    cmd.arg("--out").arg(dir.path().join("d.json"));
    cmd.env("COLABEL_SEED", "banana");
    let (code, stderr) = stderr_of(&mut cmd);
    assert_eq!(code, Some(1));
    assert!(stderr.contains("COLABEL_SEED"), "stderr: {stderr}");
}

#[test]
fn select_reports_shortfall() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    gen_toy(&data);
    let mut cmd = bin();
    cmd.arg("split");
    data_flags(&mut cmd, &data);
    cmd.arg("--out").arg(dir.path().join("split.json"));
    run_ok(&mut cmd);
    let out = run_ok(
        bin()
            .arg("select")
            .arg("--graph")
            .arg(data.join("graph.tsv"))
            .arg("--split")
            .arg(dir.path().join("split.json"))
            .args(["--top-k", "100000"])
            .arg("--scores-out")
            .arg(dir.path().join("scores.csv"))
            .arg("--out")
            .arg(dir.path().join("selected.json")),
    );
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("shortfall"),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn simulate_and_verify_bounds_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep.csv");
    let out = run_ok(
        bin()
            .args(["simulate", "--n", "5000"])
            .arg("--sweep-out")
            .arg(&sweep),
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("agreement accuracy"), "stdout: {stdout}");
    let sweep_text = std::fs::read_to_string(&sweep).unwrap();
    assert!(sweep_text.starts_with("tau,kept,accuracy\n"));
    assert_eq!(sweep_text.lines().count(), 6);

    let scan = dir.path().join("scan.json");
    let out = run_ok(
        bin()
            .args([
                "verify-bounds",
                "--classes",
                "5",
                "--cell-n",
                "2000",
                "--grid",
                "0.5,0.8",
            ])
            .arg("--out")
            .arg(&scan),
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("no bound violations over 4 cell(s)"),
        "stdout: {stdout}"
    );
    let report: colabel::sim::ScanReport =
        serde_json::from_str(&std::fs::read_to_string(&scan).unwrap()).unwrap();
    assert_eq!(report.violations, 0);
    assert_eq!(report.cells.len(), 4);
}

#[test]
fn train_text_consumes_preference_records() {
    let dir = tempfile::tempdir().unwrap();
    let space = dir.path().join("space.json");
    std::fs::write(&space, "[\"up\", \"down\"]\n").unwrap();
    let instruct = dir.path().join("instruct.jsonl");
    std::fs::write(
        &instruct,
        concat!(
            "{\"prompt\": \"rise rise lift\", \"completion\": \"up\"}\n",
            "{\"prompt\": \"lift rise rise\", \"completion\": \"up\"}\n",
            "{\"prompt\": \"sink sink drop\", \"completion\": \"down\"}\n",
            "{\"prompt\": \"drop sink sink\", \"completion\": \"down\"}\n",
        ),
    )
    .unwrap();
    let prefs = dir.path().join("prefs.jsonl");
    std::fs::write(
        &prefs,
        concat!(
            "{\"prompt\": \"rise lift rise\", \"chosen\": \"up\", \"rejected\": \"down\"}\n",
            "{\"prompt\": \"sink drop sink\", \"chosen\": \"down\", \"rejected\": \"up\"}\n",
        ),
    )
    .unwrap();
    let out = run_ok(
        bin()
            .arg("train-text")
            .arg("--instruct")
            .arg(&instruct)
            .arg("--prefs")
            .arg(&prefs)
            .arg("--label-space")
            .arg(&space)
            .args(["--epochs", "30"])
            .arg("--model-out")
            .arg(dir.path().join("model.json"))
            .arg("--curve-out")
            .arg(dir.path().join("curve.csv")),
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("trained 30 epoch(s)"));
    let model = colabel::text_classifier::ToyModel::load(dir.path().join("model.json")).unwrap();
    let up = model.predict_proba("rise rise lift");
    assert!(up[0] > up[1], "expected class up to win: {up:?}");
}

fn find_subslice(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

/// Serves `{"label": <label>}` to any POST whose body carries a `prompt`
/// field; one request per connection.
fn spawn_mock_endpoint(label: &'static str) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            std::thread::spawn(move || {
                let mut buf = Vec::new();
                let mut chunk = [0u8; 4096];
                let body_start = loop {
                    match stream.read(&mut chunk) {
                        Ok(0) => return,
                        Ok(n) => buf.extend_from_slice(&chunk[..n]),
                        Err(_) => return,
                    }
                    if let Some(pos) = find_subslice(&buf, b"\r\n\r\n") {
                        break pos + 4;
                    }
                };
                let headers = String::from_utf8_lossy(&buf[..body_start]).to_lowercase();
                let length: usize = headers
                    .lines()
                    .find_map(|l| l.strip_prefix("content-length:"))
                    .and_then(|v| v.trim().parse().ok())
                    .unwrap_or(0);
                while buf.len() < body_start + length {
                    match stream.read(&mut chunk) {
                        Ok(0) => return,
                        Ok(n) => buf.extend_from_slice(&chunk[..n]),
                        Err(_) => return,
                    }
                }
                let body: serde_json::Value =
                    serde_json::from_slice(&buf[body_start..]).unwrap_or_default();
                let response = if body.get("prompt").map_or(false, |p| p.is_string()) {
                    let payload = format!("{{\"label\":\"{label}\"}}");
                    format!(
                        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\n\
                         Content-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                        payload.len()
                    )
                } else {
                    "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\
                     Connection: close\r\n\r\n"
                        .to_string()
                };
                let _ = stream.write_all(response.as_bytes());
            });
        }
    });
    format!("http://{addr}/annotate")
}

#[test]
fn endpoint_annotation_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    gen_toy(&data);
    let url = spawn_mock_endpoint("graph_theory");

    let out_dir = dir.path().join("out");
    let mut cmd = bin();
    cmd.arg("run");
    data_flags(&mut cmd, &data);
    cmd.arg("--features").arg(data.join("features.csv"));
    cmd.arg("--texts").arg(data.join("texts.jsonl"));
    cmd.args(["--top-k", "40", "--concurrency", "2"]);
    cmd.args(["--endpoint", &url]);
    cmd.arg("--out").arg(&out_dir);
    run_ok(&mut cmd);

    let annotations = std::fs::read_to_string(out_dir.join("annotations.jsonl")).unwrap();
    assert_eq!(annotations.lines().count(), 40);
    assert!(annotations.lines().all(|l| l.contains("graph_theory")));
    assert!(out_dir.join("manifest.json").exists());
}
