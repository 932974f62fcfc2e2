//! Majority-vote ensembles of the best 3 and best 5 runs by EM, F1 and GRIM.
//!
//!     cargo run --release --example majority_ensemble

use goldrank::ensemble::{evaluate_ensemble, majority_vote, select_members, Criterion, EnsembleSpec, GrimDirection, TieBreak};
use goldrank::rank::{score_experiment, ScoreOptions};
use goldrank::synth::{self, DatasetShape};

fn main() -> goldrank::Result<()> {
    let dataset = synth::dataset(&DatasetShape { n_examples: 1500, ..Default::default() }, 21);
    let (runs, _) = synth::fleet(&dataset, 8, 10, 22);
    let reports = runs
        .iter()
        .map(|(name, preds)| Ok(score_experiment(name, &dataset, preds, &ScoreOptions::default())?.1))
        .collect::<goldrank::Result<Vec<_>>>()?;
    println!("{:<8} {:>7} {:>7} {:>6}", "run", "EM", "F1", "GRIM");
    for r in &reports {
        println!("{:<8} {:>7.2} {:>7.2} {:>6.2}", r.experiment, r.em, r.f1, r.grim.unwrap_or(f64::NAN));
    }

    println!();
    for criterion in [Criterion::Em, Criterion::F1, Criterion::Grim] {
        for size in [3, 5] {
            let spec = EnsembleSpec { criterion, size, grim_direction: GrimDirection::Lower };
            let members = select_members(&reports, &spec)?;
            let votes = majority_vote(&runs, &members, TieBreak::default())?;
            let (em, f1) = evaluate_ensemble(&votes, &dataset)?;
            let split = votes.iter().filter(|v| v.votes * 2 <= members.len()).count();
            println!(
                "best {size} by {:<4}  EM {em:6.2}  F1 {f1:6.2}  no-majority examples {split:>4}  [{}]",
                criterion.to_string(),
                members.join(", ")
            );
        }
    }
    Ok(())
}
