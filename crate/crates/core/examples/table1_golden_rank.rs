//! Golden Ranks for three hand-transcribed top-10 lists.
//!
//! One unanswerable question answered with the empty string, one question
//! answered right at rank 0, and one where the model abstains although the
//! answer is in its list at rank 1.
//!
//!     cargo run --example table1_golden_rank

use goldrank::corpus::load_dataset;
use goldrank::rank::{score_experiment, ScoreOptions};
use goldrank::spanex::load_prediction_file;

fn main() -> goldrank::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/table1");
    let dataset = load_dataset(format!("{dir}/dev.json"))?;
    let preds = load_prediction_file(format!("{dir}/predictions.jsonl"))?;

    let (records, report) = score_experiment("table1", &dataset, &preds, &ScoreOptions::default())?;
    for (rec, set) in records.iter().zip(&preds) {
        let shown = rec.matched_text.as_deref().map_or("-".to_string(), |t| format!("{t:?}"));
        println!(
            "{:>3}  GR {:>2}  primary {:<18} matched {}",
            rec.example_id,
            rec.gr,
            format!("{:?}", set.primary_text()),
            shown
        );
    }
    println!();
    print!("{}", report.to_table());
    Ok(())
}
