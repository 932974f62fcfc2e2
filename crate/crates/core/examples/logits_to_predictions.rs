//! From start/end logits to ranked answers.
//!
//! Shows the joint span probabilities of a tiny window, then runs the full
//! post-processing over synthetic multi-window examples, with the default
//! settings, a stricter null threshold, and skewed start/end weights.
//!
//!     cargo run --example logits_to_predictions

use std::collections::HashMap;

use goldrank::rank::{score_experiment, ScoreOptions};
use goldrank::spanex::{joint_span_scores, postprocess, SpanConfig, SpanWeights, Window};
use goldrank::synth::{self, DatasetShape};

fn main() -> goldrank::Result<()> {
    // "the big river" with a null position in front
    let w = Window {
        start_logits: vec![0.5, 2.0, 0.1, 1.0],
        end_logits: vec![0.5, 0.0, 0.3, 2.2],
        token_char_offsets: vec![None, Some((0, 3)), Some((4, 7)), Some((8, 13))],
        null_position: Some(0),
    };
    println!("candidate spans of a 4-position window (L = 2):");
    let mut cands = joint_span_scores(&w, 2, SpanWeights::default())?;
    cands.sort_by(|a, b| b.probability.total_cmp(&a.probability));
    for c in &cands {
        let label = if c.is_null() { "<null>".to_string() } else { format!("tokens {}..={}", c.start_token, c.end_token) };
        println!("  {label:<14} p = {:.4}", c.probability);
    }

    let dataset = synth::dataset(&DatasetShape { n_examples: 300, context_words: 120, ..Default::default() }, 11);
    let records: Vec<_> = dataset
        .examples
        .iter()
        .enumerate()
        .map(|(i, e)| synth::logit_record(e, 96, 4.0, i as u64))
        .collect();
    let contexts: HashMap<&str, &str> = dataset.examples.iter().map(|e| (e.id.as_str(), e.context.as_str())).collect();
    let windows: usize = records.iter().map(|r| r.windows.len()).sum();
    println!("\n{} examples, {} windows of 96 positions", records.len(), windows);

    let configs = [
        ("default", SpanConfig::default()),
        ("null threshold 2.0", SpanConfig { null_threshold: 2.0, ..Default::default() }),
        ("weights 1.5 / 0.5", SpanConfig { weights: SpanWeights { start: 1.5, end: 0.5 }, ..Default::default() }),
    ];
    for (name, cfg) in configs {
        let preds = postprocess(&records, &contexts, &cfg)?;
        let (_, report) = score_experiment(name, &dataset, &preds, &ScoreOptions::default())?;
        let grim = report.grim.map_or("-".into(), |g| format!("{g:.2}"));
        println!("{name:<20} EM {:6.2}  F1 {:6.2}  GRIM {grim}", report.em, report.f1);
    }

    let e = &dataset.examples[0];
    let preds = postprocess(&records[..1], &contexts, &SpanConfig::default())?;
    println!("\nquestion {}: {}", e.id, e.question);
    println!("golden: {:?}", e.answer_texts());
    for (r, p) in preds[0].predictions.iter().take(5).enumerate() {
        println!("  rank {r}: {:<30} {:.3e}", format!("{:?}", p.text), p.probability);
    }
    Ok(())
}
