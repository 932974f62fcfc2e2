//! The `goldrank` binary end to end: subcommands chain through their files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use goldrank::corpus::Dataset;
use goldrank::rank::{load_records, AggregateReport};
use goldrank::spanex::{load_prediction_file, write_logit_file, write_prediction_file};
use goldrank::synth::{self, DatasetShape, RunProfile};
use serde_json::Value;

fn goldrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_goldrank"))
        .args(args)
        .env_remove("GOLDRANK_SEED")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn table1() -> (PathBuf, PathBuf) {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/table1");
    (dir.join("dev.json"), dir.join("predictions.jsonl"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn score_table1_prints_report() {
    let (dev, preds) = table1();
    let out = ok(&goldrank(&["score", "--dataset", s(&dev), "--preds", &format!("t1={}", s(&preds)), "--k", "10"]));
    let report: AggregateReport = serde_json::from_str(&out).unwrap();
    assert_eq!(report.experiment, "t1");
    assert_eq!(format!("{:.2}", report.em), "66.67");
    assert_eq!(report.grim, Some(1.0));
    assert_eq!(report.rank_histogram[..2], [2, 1]);

    let table = ok(&goldrank(&["score", "--dataset", s(&dev), "--preds", s(&preds), "--table"]));
    assert!(table.contains("experiment      predictions"));
    assert!(table.contains("GRIM            1.0000"));
}

#[test]
fn exit_codes() {
    let (dev, _) = table1();
    let missing = goldrank(&["score", "--dataset", s(&dev), "--preds", "x=/no/such/file.jsonl"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/no/such/file.jsonl"));

    let unknown = goldrank(&["score", "--frobnicate"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("Usage"));

    let bad_value = goldrank(&["score", "--dataset", s(&dev), "--preds", "a", "--median-convention", "odd"]);
    assert_eq!(bad_value.status.code(), Some(2));

    let none = goldrank(&[]);
    assert_eq!(none.status.code(), Some(2));
}

#[test]
fn bad_seed_is_a_usage_error() {
    let (dev, preds) = table1();
    let out = Command::new(env!("CARGO_BIN_EXE_goldrank"))
        .args(["score", "--dataset", s(&dev), "--preds", s(&preds)])
        .env("GOLDRANK_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plot_table1_histogram() {
    let (dev, preds) = table1();
    let dir = tempfile::tempdir().unwrap();
    let svg_path = dir.path().join("figs/hist.svg");
    ok(&goldrank(&["plot", "--kind", "gr_histogram", "--dataset", s(&dev), "--preds", s(&preds), "--out", s(&svg_path)]));
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains(r#"data-bucket="0" data-pct="66.67""#));
    assert!(svg.contains(r#"data-bucket="1" data-pct="33.33""#));
    assert!(svg.contains(r#"data-grim="1.00""#));

    // same input, same bytes
    let again = dir.path().join("again.svg");
    ok(&goldrank(&["plot", "--kind", "gr_histogram", "--dataset", s(&dev), "--preds", s(&preds), "--out", s(&again)]));
    assert_eq!(std::fs::read(&svg_path).unwrap(), std::fs::read(&again).unwrap());

    let no_log = goldrank(&["plot", "--kind", "training_curves", "--out", s(&again)]);
    assert_eq!(no_log.status.code(), Some(1));
}

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
    dataset: Dataset,
}

fn workspace(n: usize) -> Workspace {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let dataset = synth::dataset(&DatasetShape { n_examples: n, context_words: 50, ..Default::default() }, 31);
    dataset.save_squad_json(root.join("dev.json")).unwrap();
    Workspace { _dir: dir, root, dataset }
}

#[test]
fn subcommands_compose() {
    let w = workspace(80);
    let dev = w.root.join("dev.json");

    // logits -> predictions
    let logits: Vec<_> = w.dataset.examples.iter().enumerate().map(|(i, e)| synth::logit_record(e, 40, 3.0, i as u64)).collect();
    let logit_path = w.root.join("m.logits.jsonl");
    write_logit_file(&logit_path, &logits).unwrap();
    let pp = w.root.join("post.jsonl");
    ok(&goldrank(&["postprocess", "--dataset", s(&dev), "--logits", s(&logit_path), "--out", s(&pp), "--null-threshold", "-0.5"]));
    assert_eq!(load_prediction_file(&pp).unwrap().len(), 80);
    // postprocess to stdout produces the same lines
    let stdout = ok(&goldrank(&["postprocess", "--dataset", s(&dev), "--logits", s(&logit_path), "--null-threshold", "-0.5"]));
    assert_eq!(stdout, std::fs::read_to_string(&pp).unwrap());

    // two more synthetic runs
    let mut pred_args = vec![format!("post={}", s(&pp))];
    for (i, top1) in [0.4, 0.7].into_iter().enumerate() {
        let run = synth::prediction_run(&w.dataset, &RunProfile { top1, per_rank: 0.3 }, 10, 40 + i as u64);
        let path = w.root.join(format!("syn{i}.jsonl"));
        write_prediction_file(&path, &run).unwrap();
        pred_args.push(format!("syn{i}={}", s(&path)));
    }

    // predictions -> records
    let scores = w.root.join("scores");
    let mut args = vec!["score", "--dataset", s(&dev), "--out", s(&scores)];
    for p in &pred_args {
        args.extend(["--preds", p.as_str()]);
    }
    let reports: Vec<AggregateReport> = serde_json::from_str(&ok(&goldrank(&args))).unwrap();
    assert_eq!(reports.len(), 3);
    for name in ["post", "syn0", "syn1"] {
        assert_eq!(load_records(scores.join(format!("{name}.gr.csv"))).unwrap(), load_records(scores.join(format!("{name}.gr.jsonl"))).unwrap());
        assert!(scores.join(format!("{name}.report.json")).exists());
    }

    // records -> matrix -> clusters
    let matrix = w.root.join("matrix.csv");
    let stats = w.root.join("stats.csv");
    let rec_args: Vec<String> = ["post", "syn0", "syn1"]
        .iter()
        .map(|n| format!("{n}={}", s(&scores.join(format!("{n}.gr.csv")))))
        .collect();
    let mut args = vec!["matrix", "--out", s(&matrix), "--dataset", s(&dev), "--stats", s(&stats)];
    for r in &rec_args {
        args.extend(["--records", r.as_str()]);
    }
    let summary: Value = serde_json::from_str(&ok(&goldrank(&args))).unwrap();
    assert_eq!(summary["n_examples"], 80);
    assert_eq!(std::fs::read_to_string(&stats).unwrap().lines().count(), 81);
    let header = std::fs::read_to_string(&matrix).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "id,post,syn0,syn1");

    let clusters: Value = serde_json::from_str(&ok(&goldrank(&["cluster", "--matrix", s(&matrix), "--dataset", s(&dev), "--features", "meanstd"]))).unwrap();
    let assigned: usize = clusters["tables"].as_array().unwrap().iter().map(|t| t["assignments"].as_array().unwrap().len()).sum();
    assert_eq!(assigned, 80);

    // ensemble -> score
    let ens = w.root.join("ens.jsonl");
    let mut args = vec!["ensemble", "--dataset", s(&dev), "--criterion", "em", "--top", "3", "--out", s(&ens)];
    for p in &pred_args {
        args.extend(["--preds", p.as_str()]);
    }
    let ens_summary: Value = serde_json::from_str(&ok(&goldrank(&args))).unwrap();
    let rescored: AggregateReport = serde_json::from_str(&ok(&goldrank(&["score", "--dataset", s(&dev), "--preds", &format!("ens={}", s(&ens))]))).unwrap();
    assert_eq!(rescored.em, ens_summary["em"].as_f64().unwrap());

    // everything at once
    let report_path = w.root.join("report.json");
    let figs = w.root.join("figs");
    let log = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/training_log.csv");
    let mut args = vec!["report", "--dataset", s(&dev), "--out", s(&report_path), "--figures", s(&figs), "--log", s(&log), "--top", "3"];
    for p in &pred_args {
        args.extend(["--preds", p.as_str()]);
    }
    ok(&goldrank(&args));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    for key in ["dataset", "experiments", "correlations", "matrix", "difficulty", "ensembles", "training"] {
        assert!(!report[key].is_null(), "report lacks {key}");
    }
    assert_eq!(report["ensembles"].as_array().unwrap().len(), 3);
    assert_eq!(report["training"]["best_f1_step"], 3500);
    for f in ["gr_histogram.svg", "metric_scatter_em_f1.svg", "meanstd_answerability.svg", "meanstd_clusters.svg", "training_curves.svg"] {
        assert!(figs.join(f).exists(), "{f} missing");
    }
}

#[test]
fn seeded_ties_are_reproducible() {
    let w = workspace(60);
    let dev = w.root.join("dev.json");
    // four members, every example split 2-2 between answers of equal probability
    let mut args: Vec<String> = Vec::new();
    for m in 0..4 {
        let answers: Vec<String> = (0..60).map(|i| if m % 2 == 0 { format!("left {i}") } else { format!("right {i}") }).collect();
        let run = synth::fixed_answer_run(&w.dataset, &answers, 2);
        let path = w.root.join(format!("m{m}.jsonl"));
        write_prediction_file(&path, &run).unwrap();
        args.push(format!("m{m}={}", s(&path)));
    }
    let run = |seed: Option<&str>, out: &Path| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_goldrank"));
        cmd.args(["ensemble", "--dataset", s(&dev), "--top", "4", "--out", s(out)]);
        for a in &args {
            cmd.args(["--preds", a]);
        }
        match seed {
            Some(v) => cmd.env("GOLDRANK_SEED", v),
            None => cmd.env_remove("GOLDRANK_SEED"),
        };
        ok(&cmd.output().unwrap());
        load_prediction_file(out).unwrap()
    };
    let plain = run(None, &w.root.join("a.jsonl"));
    assert!(plain.iter().all(|p| p.primary_text().starts_with("left")), "lexicographic tie-break");
    let s1 = run(Some("7"), &w.root.join("b.jsonl"));
    let s2 = run(Some("7"), &w.root.join("c.jsonl"));
    assert_eq!(s1, s2);
    assert!(s1.iter().any(|p| p.primary_text().starts_with("right")), "seeded shuffle never moved a tie");
}
