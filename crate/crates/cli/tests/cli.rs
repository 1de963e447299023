use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn citesent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_citesent")).args(args).output().expect("binary runs")
}

fn synthetic() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/synthetic_60.jsonl")
}

fn write_config(dir: &Path, family: &str, extra: &str) -> PathBuf {
    let path = dir.join(format!("{family}.toml"));
    let body = format!(
        "output = {:?}\n\n[dataset]\npaths = [{:?}]\n\n[model]\nfamily = {family:?}\n{extra}",
        dir.join("runs"),
        synthetic()
    );
    fs::write(&path, body).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn evaluate_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "svm_linear", "");
    let out = citesent(&["evaluate", "-c", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let line = stdout(&out);
    let fields: Vec<&str> = line.trim().split('\t').collect();
    assert_eq!(fields[..3], ["synthetic_60", "SVML", "uni, c = 1"]);
    assert!(fields[3].parse::<f64>().unwrap() > 0.8);
    let runs = dir.path().join("runs");
    for ext in ["json", "csv", "manifest.json"] {
        assert!(runs.join(format!("synthetic_60__svm_linear.{ext}")).exists(), "{ext}");
    }
}

#[test]
fn overrides_reach_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "svm_rbf", "");
    let out = citesent(&["evaluate", "-c", cfg.to_str().unwrap(), "--set", "svm.c=8", "--set", "svm.gamma=0.5"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("uni, c = 8, g = 0.5"));
}

#[test]
fn missing_input_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = citesent(&["evaluate", "-c", dir.path().join("absent.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[dataset]\npaths = [\"nowhere.jsonl\"]\n[model]\nfamily = \"svm_linear\"\n").unwrap();
    let out = citesent(&["evaluate", "-c", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("runs").exists());

    let out = citesent(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(citesent(&["--version"]).status.code(), Some(0));
}

#[test]
fn compare_two_runs() {
    let dir = tempfile::tempdir().unwrap();
    let net = "\n[net]\nhidden = 10\nepochs = 2\nbatch_size = 10\n";
    for (family, extra) in [("svm_linear", ""), ("oh_cnn", net)] {
        let cfg = write_config(dir.path(), family, extra);
        assert!(citesent(&["evaluate", "-c", cfg.to_str().unwrap()]).status.success(), "{family}");
    }
    let runs = dir.path().join("runs");
    let table = runs.join("table.tsv");
    let out = citesent(&[
        "compare",
        runs.join("synthetic_60__svm_linear.json").to_str().unwrap(),
        runs.join("synthetic_60__oh_cnn.json").to_str().unwrap(),
        "--out",
        table.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(table).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("Techniques\tParameter"));
    assert!(lines[1].starts_with("SVML\t") && lines[1].ends_with("\t-"));
    assert!(lines[2].starts_with("Oh-CNN\t"));

    let one = citesent(&["compare", runs.join("synthetic_60__svm_linear.json").to_str().unwrap()]);
    assert_eq!(one.status.code(), Some(1));
}

#[test]
fn load_stats_and_featurize() {
    let data = synthetic();
    let out = citesent(&["load-stats", data.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "dataset\tpositive\tnegative\tneutral\ttotal\nsynthetic_60\t20\t20\t20\t60\n");

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "svm_linear", "");
    let feats = dir.path().join("feats");
    let out = citesent(&["featurize", "-c", cfg.to_str().unwrap(), "--out", feats.to_str().unwrap(), "--fold", "0"]);
    assert!(out.status.success());
    let test = fs::read_to_string(feats.join("fold0.test.txt")).unwrap();
    assert!(!test.is_empty());
    let bad = citesent(&["featurize", "-c", cfg.to_str().unwrap(), "--out", feats.to_str().unwrap(), "--fold", "10"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn train_saves_a_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "svm_rbf", "");
    let model = dir.path().join("model.json");
    let out = citesent(&["train", "-c", cfg.to_str().unwrap(), "--out", model.to_str().unwrap()]);
    assert!(out.status.success());
    let m = citesent::svm::SvmModel::load_json(&model).unwrap();
    assert_eq!(m.classes.len(), 3);
}

#[test]
fn annotate_check_detects_mismatch() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures");
    let arg = |name: &str| fixtures.join(name).to_str().unwrap().to_string();
    let ok = citesent(&[
        "annotate-check",
        "--corpus",
        &arg("ensemble_example.jsonl"),
        "--annotations",
        &arg("ensemble_example.annotations.jsonl"),
    ]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert_eq!(stdout(&ok), "1 samples, 1 records, 0 problems\n");

    let bad = citesent(&[
        "annotate-check",
        "--corpus",
        &arg("ensemble_example.jsonl"),
        "--annotations",
        &arg("i_love_it.annotations.jsonl"),
    ]);
    assert_eq!(bad.status.code(), Some(1));
}
