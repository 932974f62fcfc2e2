//! Writes every figure type as SVG into a directory (default: a fresh
//! `goldrank-figures` directory under the system temp dir).
//!
//!     cargo run --release --example figures [-- out-dir]

use std::path::PathBuf;

use goldrank::fleet::{build_matrix, cluster_difficulty, example_stats, BirchParams, FeatureSpace};
use goldrank::rank::{golden_ranks, score_experiment, Metric, ScoreOptions};
use goldrank::report::{
    gr_histogram_svg, load_training_log, meanstd_scatter_svg, metric_scatter_svg, training_curves_svg, Coloring,
    FigureKind, FigureSpec,
};
use goldrank::synth::{self, DatasetShape};

fn main() -> goldrank::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("goldrank-figures"));

    let dataset = synth::dataset(&DatasetShape { n_examples: 1200, ..Default::default() }, 5);
    let (runs, _) = synth::fleet(&dataset, 16, 10, 6);
    let opts = ScoreOptions::default();
    let reports = runs
        .iter()
        .map(|(n, p)| Ok(score_experiment(n, &dataset, p, &opts)?.1))
        .collect::<goldrank::Result<Vec<_>>>()?;

    let mut written = Vec::new();
    let mut emit = |kind: FigureKind, file: &str, svg: String| -> goldrank::Result<()> {
        let spec = FigureSpec::new(kind, out.join(file));
        spec.write(&svg)?;
        written.push(spec.output);
        Ok(())
    };

    emit(FigureKind::GrHistogram, "gr_histogram.svg", gr_histogram_svg(&reports[..2], "Golden Rank distribution")?)?;
    let (svg, fit) = metric_scatter_svg(&reports, Metric::Em, Metric::Grim, true, "EM vs. GRIM")?;
    emit(FigureKind::MetricScatter, "em_vs_grim.svg", svg)?;
    if let Some(f) = fit {
        println!("EM vs GRIM: slope {:.4}, r = {:.2}", f.slope, f.r.unwrap_or(f64::NAN));
    }

    let scored = runs
        .iter()
        .map(|(n, p)| Ok((n.clone(), golden_ranks(&dataset, p, 10)?)))
        .collect::<goldrank::Result<Vec<_>>>()?;
    let matrix = build_matrix(&scored)?.matrix;
    let stats = example_stats(&matrix, &dataset)?;
    emit(
        FigureKind::MeanstdScatter,
        "meanstd_answerability.svg",
        meanstd_scatter_svg(&stats, &Coloring::Answerability, 10, "GR mean vs. std")?,
    )?;
    let clusters = cluster_difficulty(&matrix, &stats, FeatureSpace::Vector, &BirchParams::default())?;
    let labels = stats
        .iter()
        .map(|s| {
            clusters
                .tables
                .iter()
                .flat_map(|t| &t.assignments)
                .find(|a| a.example_id == s.example_id)
                .map(|a| a.label)
                .expect("every example is clustered")
        })
        .collect();
    emit(
        FigureKind::MeanstdScatter,
        "meanstd_clusters.svg",
        meanstd_scatter_svg(&stats, &Coloring::Cluster(labels), 10, "Difficulty classes")?,
    )?;

    let log = load_training_log(concat!(env!("CARGO_MANIFEST_DIR"), "/data/training_log.csv"))?;
    emit(FigureKind::TrainingCurves, "training_curves.svg", training_curves_svg(&log, "Validation during training")?)?;

    for p in &written {
        println!("wrote {}", p.display());
    }
    Ok(())
}
