//! The whole pipeline on synthetic data: logits -> prediction files -> GR
//! records -> matrix CSV -> consolidated JSON report, all through the same
//! file formats the `goldrank` binary reads and writes.
//!
//!     cargo run --release --example end_to_end [-- out-dir]

use std::collections::HashMap;
use std::path::PathBuf;

use goldrank::fleet::{build_matrix, GrMatrix};
use goldrank::rank::{load_records, score_experiment, write_records_csv, ScoreOptions};
use goldrank::report::{consolidated_report, ReportOptions};
use goldrank::spanex::{load_prediction_file, postprocess, write_logit_file, write_prediction_file, SpanConfig};
use goldrank::synth::{self, DatasetShape};

fn main() -> goldrank::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("goldrank-end-to-end"));
    std::fs::create_dir_all(&out).map_err(|e| goldrank::Error::io(&out, e))?;

    let dataset = synth::dataset(&DatasetShape { n_examples: 400, context_words: 80, ..Default::default() }, 9);
    dataset.save_squad_json(out.join("dev.json"))?;
    let contexts: HashMap<&str, &str> = dataset.examples.iter().map(|e| (e.id.as_str(), e.context.as_str())).collect();

    // four "models" that differ only in how sharp their logits are
    let mut runs = Vec::new();
    for (i, signal) in [1.5, 2.5, 3.5, 5.0].into_iter().enumerate() {
        let name = format!("model-{i}");
        let logits: Vec<_> = dataset
            .examples
            .iter()
            .enumerate()
            .map(|(j, e)| synth::logit_record(e, 64, signal, (i * 10_000 + j) as u64))
            .collect();
        write_logit_file(out.join(format!("{name}.logits.jsonl")), &logits)?;
        let preds = postprocess(&logits, &contexts, &SpanConfig::default())?;
        let path = out.join(format!("{name}.jsonl"));
        write_prediction_file(&path, &preds)?;
        runs.push((name, load_prediction_file(&path)?));
    }

    let opts = ScoreOptions::default();
    let mut scored = Vec::new();
    for (name, preds) in &runs {
        let (records, report) = score_experiment(name, &dataset, preds, &opts)?;
        let path = out.join(format!("{name}.gr.csv"));
        write_records_csv(&path, &records)?;
        scored.push((name.clone(), load_records(&path)?));
        println!(
            "{name}: EM {:.2}  F1 {:.2}  GRIM {}",
            report.em,
            report.f1,
            report.grim.map_or("-".into(), |g| format!("{g:.3}"))
        );
    }
    let matrix_path = out.join("matrix.csv");
    build_matrix(&scored)?.matrix.write_csv(&matrix_path)?;
    let matrix = GrMatrix::load_csv(&matrix_path)?;
    println!("matrix: {} x {}", matrix.n_examples(), matrix.n_experiments());

    let report = consolidated_report(&dataset, &runs, None, &ReportOptions { ensemble_sizes: vec![3], ..Default::default() })?;
    let report_path = out.join("report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)?).map_err(|e| goldrank::Error::io(&report_path, e))?;
    for e in &report.ensembles {
        println!("best 3 by {}: EM {:.2}  F1 {:.2}", e.criterion, e.em, e.f1);
    }
    for c in report.correlations.iter().filter(|c| c.r.is_some()).take(3) {
        println!("r({}, {}) = {:.3}", c.x.name(), c.y.name(), c.r.unwrap_or(f64::NAN));
    }
    println!("wrote {}", report_path.display());
    Ok(())
}
