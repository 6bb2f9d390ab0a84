use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn selpref(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selpref")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = selpref(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Relative paths and contents of every file under `dir`, sorted.
fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn extract_verb_object_pairs_from_tagged_sentences() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pairs.tsv");
    ok(&["extract", "-i", s(&data("sample.tagged")), "-o", s(&out), "--mode", "verb-object"]);
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    for pair in
        ["join\tboard", "is\tchairman", "named\tdirector", "make\tcigarette", "make\tfilters", "caused\tpercentage"]
    {
        assert!(lines.contains(&pair), "missing {pair:?} in {lines:?}");
    }
    assert!(dir.path().join("pairs.tsv.config.json").exists());
}

#[test]
fn pipeline_is_byte_identical_across_runs_and_execution_modes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["pipeline", "-o", s(&out), "--sentences", "3000", "--clusters", "10"];
        args.extend_from_slice(extra);
        ok(&args);
        snapshot(&out).into_iter().filter(|(p, _)| p != Path::new("config.json")).collect::<Vec<_>>()
    };
    let a = run("a", &[]);
    let b = run("b", &[]);
    let c = run("c", &["--sequential"]);
    assert!(a.iter().any(|(p, _)| p == Path::new("report.txt")));
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn cluster_trace_never_decreases() {
    let dir = tempfile::tempdir().unwrap();
    let tagged = dir.path().join("corpus.tagged");
    let pairs = dir.path().join("pairs.tsv");
    let out = dir.path().join("clusters");
    ok(&["generate", "-o", s(&tagged), "--sentences", "4000"]);
    ok(&["extract", "-i", s(&tagged), "-o", s(&pairs), "--mode", "verb-object"]);
    ok(&["cluster", "-p", s(&pairs), "-o", s(&out), "--criterion", "lo", "--clusters", "50", "--min-count", "5"]);
    let trace = fs::read_to_string(out.join("trace.tsv")).unwrap();
    let scores: Vec<f64> = trace.lines().map(|l| l.split('\t').nth(1).unwrap().parse().unwrap()).collect();
    assert!(scores.len() >= 2);
    assert!(scores.windows(2).all(|w| w[1] >= w[0]), "{scores:?}");
    for f in ["classes_x.tsv", "classes_y.tsv", "config.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn train_then_score_matches_pipeline_report() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    ok(&["pipeline", "-o", s(&run), "--sentences", "2000", "--clusters", "8"]);
    let model = dir.path().join("vo.model");
    ok(&[
        "train",
        "-p",
        s(&run.join("verb-object/pairs.tsv")),
        "-o",
        s(&model),
        "--classes",
        s(&run.join("verb-object")),
    ]);
    assert_eq!(fs::read(&model).unwrap(), fs::read(run.join("verb-object/model.txt")).unwrap());

    let out = ok(&["perplexity", "-m", s(&model), "-r", s(&run.join("test.tsv"))]);
    let report = String::from_utf8(out.stdout).unwrap();
    let pp: f64 = report.lines().nth(1).unwrap().split('\t').nth(4).unwrap().parse().unwrap();
    assert!(pp > 1.0);
}

#[test]
fn failures_exit_nonzero_and_leave_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("model.txt");
    let pairs = dir.path().join("pairs.tsv");
    fs::write(&pairs, "eat\tapple\n").unwrap();
    let r = selpref(&["train", "-p", s(&pairs), "-o", s(&out), "--classes", s(&dir.path().join("missing"))]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("error"));
    assert!(!out.exists());

    let bad = dir.path().join("bad.tagged");
    fs::write(&bad, "word-without-tag\n").unwrap();
    let run = dir.path().join("run");
    assert!(!selpref(&["pipeline", "-i", s(&bad), "-o", s(&run)]).status.success());
    assert!(!run.exists());
    assert!(!selpref(&["cluster", "-p", s(&pairs), "-o", s(&run), "--criterion", "nope"]).status.success());
}
