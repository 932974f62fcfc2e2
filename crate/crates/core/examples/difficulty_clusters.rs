//! Cross-experiment difficulty analysis: build the GR matrix of 16 synthetic
//! runs, compute per-example mean/std, and cluster answerable and
//! unanswerable examples into difficulty classes.
//!
//!     cargo run --release --example difficulty_clusters [-- meanstd]

use std::collections::HashMap;

use goldrank::fleet::{build_matrix, cluster_difficulty, example_stats, never_correct, BirchParams, FeatureSpace};
use goldrank::rank::golden_ranks;
use goldrank::synth::{self, DatasetShape};

fn main() -> goldrank::Result<()> {
    let features: FeatureSpace = std::env::args()
        .nth(1)
        .map(|a| a.parse().map_err(goldrank::Error::InvalidArgument))
        .transpose()?
        .unwrap_or_default();

    let dataset = synth::dataset(&DatasetShape { n_examples: 2000, ..Default::default() }, 3);
    let (runs, behaviours) = synth::fleet(&dataset, 16, 10, 4);
    let scored = runs
        .iter()
        .map(|(name, preds)| Ok((name.clone(), golden_ranks(&dataset, preds, 10)?)))
        .collect::<goldrank::Result<Vec<_>>>()?;
    let built = build_matrix(&scored)?;
    let stats = example_stats(&built.matrix, &dataset)?;
    println!(
        "{} examples x {} runs, {} never answered correctly",
        built.matrix.n_examples(),
        built.matrix.n_experiments(),
        never_correct(&built.matrix).len()
    );

    let report = cluster_difficulty(&built.matrix, &stats, features, &BirchParams::default())?;
    let behaviour: HashMap<&str, _> = dataset.examples.iter().map(|e| e.id.as_str()).zip(&behaviours).collect();
    for table in &report.tables {
        println!("\n{} ({features:?} features)", if table.answerable { "answerable" } else { "unanswerable" });
        println!("  {:<15} {:>6}  {:>15}  {:>15}", "class", "count", "GR mean", "GR std");
        for row in &table.rows {
            println!(
                "  {:<15} {:>6}  {:>6.3} - {:<6.3}  {:>6.3} - {:<6.3}",
                row.label.to_string(),
                row.count,
                row.mean_from,
                row.mean_to,
                row.std_from,
                row.std_to
            );
        }
        let mut mix: HashMap<(String, String), usize> = HashMap::new();
        for a in &table.assignments {
            *mix.entry((a.label.to_string(), format!("{:?}", behaviour[a.example_id.as_str()]))).or_default() += 1;
        }
        let mut mix: Vec<_> = mix.into_iter().collect();
        mix.sort();
        println!("  class vs. generating behaviour:");
        for ((label, b), n) in mix {
            println!("    {label:<15} {b:<6} {n}");
        }
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
