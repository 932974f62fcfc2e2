//! Everything the toolkit computes for one dataset and a fleet of runs, as a
//! single JSON document.

use serde::{Deserialize, Serialize};

use super::figures::{best_f1_step, pearson, TrainingLogEntry};
use crate::corpus::{Dataset, Discarded};
use crate::ensemble::{evaluate_ensemble, majority_vote, select_members, Criterion, EnsembleSpec, GrimDirection, TieBreak};
use crate::error::{Error, Result};
use crate::fleet::{build_matrix, cluster_difficulty, example_stats, never_correct, BirchParams, DifficultyReport, FeatureSpace};
use crate::rank::{score_experiment, AggregateReport, Metric, ScoreOptions};
use crate::spanex::PredictionSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub score: ScoreOptions,
    pub features: FeatureSpace,
    pub birch: BirchParams,
    /// Criteria to build ensembles for; empty skips ensembling.
    pub criteria: Vec<Criterion>,
    pub ensemble_sizes: Vec<usize>,
    pub grim_direction: GrimDirection,
    #[serde(skip)]
    pub tie_break: TieBreak,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            score: ScoreOptions::default(),
            features: FeatureSpace::default(),
            birch: BirchParams::default(),
            criteria: vec![Criterion::Em, Criterion::F1, Criterion::Grim],
            ensemble_sizes: vec![3, 5],
            grim_direction: GrimDirection::default(),
            tie_break: TieBreak::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub source: Option<String>,
    pub n_examples: usize,
    pub n_answerable: usize,
    pub n_unanswerable: usize,
    pub discarded: Vec<Discarded>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCorrelation {
    pub x: Metric,
    pub y: Metric,
    /// Experiments where both metrics are defined.
    pub n: usize,
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSummary {
    pub n_examples: usize,
    pub experiments: Vec<String>,
    pub excluded: Vec<String>,
    pub never_correct: Vec<String>,
    pub never_correct_answerable: usize,
    pub never_correct_unanswerable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub criterion: Criterion,
    pub size: usize,
    pub members: Vec<String>,
    pub em: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub entries: usize,
    pub best_f1_step: Option<u64>,
    pub best_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsolidatedReport {
    pub dataset: DatasetSummary,
    pub options: ReportOptions,
    pub experiments: Vec<AggregateReport>,
    pub correlations: Vec<MetricCorrelation>,
    pub matrix: MatrixSummary,
    pub difficulty: DifficultyReport,
    pub ensembles: Vec<EnsembleResult>,
    /// Why a requested ensemble was not built.
    pub skipped_ensembles: Vec<String>,
    pub training: Option<TrainingSummary>,
}

pub fn metric_correlations(reports: &[AggregateReport]) -> Vec<MetricCorrelation> {
    let mut out = Vec::new();
    for (i, &x) in Metric::ALL.iter().enumerate() {
        for &y in &Metric::ALL[i + 1..] {
            let (xs, ys): (Vec<f64>, Vec<f64>) = reports
                .iter()
                .filter_map(|r| Some((r.metric(x)?, r.metric(y)?)))
                .unzip();
            out.push(MetricCorrelation {
                x,
                y,
                n: xs.len(),
                r: pearson(&xs, &ys),
            });
        }
    }
    out
}

pub fn consolidated_report(
    dataset: &Dataset,
    runs: &[(String, Vec<PredictionSet>)],
    training_log: Option<&[TrainingLogEntry]>,
    opts: &ReportOptions,
) -> Result<ConsolidatedReport> {
    if runs.is_empty() {
        return Err(Error::Empty("no prediction runs".into()));
    }
    let (answerable, unanswerable) = dataset.split_answerability();
    let summary = DatasetSummary {
        source: (!dataset.source_path.is_empty()).then(|| dataset.source_path.clone()),
        n_examples: dataset.len(),
        n_answerable: answerable.len(),
        n_unanswerable: unanswerable.len(),
        discarded: dataset.discarded.clone(),
    };

    let mut reports = Vec::with_capacity(runs.len());
    let mut scored = Vec::with_capacity(runs.len());
    for (name, preds) in runs {
        let (records, report) = score_experiment(name, dataset, preds, &opts.score)?;
        reports.push(report);
        scored.push((name.clone(), records));
    }

    let built = build_matrix(&scored)?;
    let stats = example_stats(&built.matrix, dataset)?;
    let never = never_correct(&built.matrix);
    let index = dataset.index();
    let never_answerable = never.iter().filter(|id| index[id.as_str()].is_answerable()).count();
    let matrix = MatrixSummary {
        n_examples: built.matrix.n_examples(),
        experiments: built.matrix.experiments.clone(),
        excluded: built.excluded.clone(),
        never_correct_answerable: never_answerable,
        never_correct_unanswerable: never.len() - never_answerable,
        never_correct: never,
    };
    let difficulty = cluster_difficulty(&built.matrix, &stats, opts.features, &opts.birch)?;

    let mut ensembles = Vec::new();
    let mut skipped = Vec::new();
    for &criterion in &opts.criteria {
        for &size in &opts.ensemble_sizes {
            let spec = EnsembleSpec {
                criterion,
                size,
                grim_direction: opts.grim_direction,
            };
            let members = match select_members(&reports, &spec) {
                Ok(m) => m,
                Err(e) => {
                    skipped.push(format!("best {size} by {criterion}: {e}"));
                    continue;
                }
            };
            let votes = majority_vote(runs, &members, opts.tie_break)?;
            let (em, f1) = evaluate_ensemble(&votes, dataset)?;
            ensembles.push(EnsembleResult {
                criterion,
                size,
                members,
                em,
                f1,
            });
        }
    }

    let training = training_log.map(|log| {
        let step = best_f1_step(log);
        TrainingSummary {
            entries: log.len(),
            best_f1_step: step,
            best_f1: step.and_then(|s| log.iter().find(|e| e.step == s)).map(|e| e.f1),
        }
    });

    Ok(ConsolidatedReport {
        dataset: summary,
        options: opts.clone(),
        correlations: metric_correlations(&reports),
        experiments: reports,
        matrix,
        difficulty,
        ensembles,
        skipped_ensembles: skipped,
        training,
    })
}
