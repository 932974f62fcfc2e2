//! GRIM and the other rank aggregates on small hand-made rank lists.
//!
//!     cargo run --example interpolated_median

use goldrank::rank::{interpolated_median, rank_aggregates, GoldenRankRecord, MedianConvention};

fn records(ranks: &[u32]) -> Vec<GoldenRankRecord> {
    ranks
        .iter()
        .enumerate()
        .map(|(i, &gr)| GoldenRankRecord {
            example_id: i.to_string(),
            gr,
            capped: gr == 10,
            matched_text: None,
        })
        .collect()
}

fn main() -> goldrank::Result<()> {
    let lists: [&[u32]; 5] = [
        &[1, 1, 2],
        &[1, 2, 2, 3],
        &[1, 1, 1, 2, 5, 10, 10],
        &[3],
        &[1, 1, 1, 1, 1, 1, 2, 3, 4, 10, 10, 10],
    ];
    println!("{:<40} {:>7} {:>9} {:>9}", "secondary ranks", "median", "grim", "standard");
    for ranks in lists {
        let mut sorted = ranks.to_vec();
        sorted.sort_unstable();
        let n = sorted.len();
        let median = if n % 2 == 1 { sorted[n / 2] as f64 } else { (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0 };
        println!(
            "{:<40} {:>7.2} {:>9.4} {:>9.4}",
            format!("{ranks:?}"),
            median,
            interpolated_median(ranks, MedianConvention::Grim)?,
            interpolated_median(ranks, MedianConvention::Standard)?
        );
    }

    // rank aggregates over a mix of primary hits and misses
    let all = records(&[0, 0, 0, 1, 3, 10, 0, 2]);
    for gamma in [0.5, 1.0, 2.0] {
        let a = rank_aggregates(&all, gamma).expect("non-empty");
        println!(
            "gamma {gamma:>3}: GRM {:.3}  DGRM {:.4}  FARR {:.4}  MRR {:.4}",
            a.grm,
            a.dgrm.unwrap_or(f64::NAN),
            a.farr.unwrap_or(f64::NAN),
            a.mrr
        );
    }
    Ok(())
}
