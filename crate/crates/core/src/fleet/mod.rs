//! Cross-experiment analysis over the examples × experiments Golden Rank
//! matrix: per-example mean/std, never-correct examples, and difficulty
//! classes from BIRCH clustering.

pub mod birch;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::rank::GoldenRankRecord;

pub use birch::{adjusted_rand_index, birch_cluster, BirchParams, BirchResult};

/// Dense Golden Rank table, one row per example, one column per experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrMatrix {
    pub example_ids: Vec<String>,
    pub experiments: Vec<String>,
    values: Vec<u32>,
}

impl GrMatrix {
    pub fn from_rows(example_ids: Vec<String>, experiments: Vec<String>, rows: Vec<Vec<u32>>) -> Result<Self> {
        if rows.len() != example_ids.len() || rows.iter().any(|r| r.len() != experiments.len()) {
            return Err(Error::InvalidArgument("matrix rows do not match its dimensions".into()));
        }
        Ok(GrMatrix {
            example_ids,
            experiments,
            values: rows.into_iter().flatten().collect(),
        })
    }

    pub fn n_examples(&self) -> usize {
        self.example_ids.len()
    }

    pub fn n_experiments(&self) -> usize {
        self.experiments.len()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        let w = self.experiments.len();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[u32])> {
        self.example_ids
            .iter()
            .enumerate()
            .map(move |(i, id)| (id.as_str(), self.row(i)))
    }

    /// Largest value in the table; the K cap when any example was capped.
    pub fn max_value(&self) -> u32 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(std::iter::once("id").chain(self.experiments.iter().map(String::as_str)))?;
        for (id, row) in self.rows() {
            let mut rec = vec![id.to_string()];
            rec.extend(row.iter().map(u32::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        let experiments: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for (n, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |message: String| Error::BadLine {
                path: path.to_path_buf(),
                line: n + 2,
                message,
            };
            ids.push(rec.get(0).ok_or_else(|| bad("missing id".into()))?.to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|v| v.parse::<u32>().map_err(|e| bad(format!("{v:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        GrMatrix::from_rows(ids, experiments, rows)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixBuild {
    pub matrix: GrMatrix,
    /// Ids absent from at least one run, sorted.
    pub excluded: Vec<String>,
}

/// Join runs on example id. Rows are sorted by id so downstream clustering is
/// reproducible regardless of input order.
pub fn build_matrix(runs: &[(String, Vec<GoldenRankRecord>)]) -> Result<MatrixBuild> {
    if runs.is_empty() {
        return Err(Error::Empty("no runs to build a matrix from".into()));
    }
    let mut names = HashSet::new();
    if let Some((dup, _)) = runs.iter().find(|(n, _)| !names.insert(n.as_str())) {
        return Err(Error::InvalidArgument(format!("experiment {dup:?} given twice")));
    }
    let lookups: Vec<HashMap<&str, u32>> = runs
        .iter()
        .map(|(_, recs)| recs.iter().map(|r| (r.example_id.as_str(), r.gr)).collect())
        .collect();
    let all: BTreeSet<&str> = lookups.iter().flat_map(|m| m.keys().copied()).collect();
    let (kept, excluded): (Vec<&str>, Vec<&str>) = all
        .into_iter()
        .partition(|id| lookups.iter().all(|m| m.contains_key(id)));
    if kept.is_empty() {
        return Err(Error::Empty("runs share no example ids".into()));
    }
    let values = kept
        .iter()
        .flat_map(|id| lookups.iter().map(move |m| m[id]))
        .collect();
    Ok(MatrixBuild {
        matrix: GrMatrix {
            example_ids: kept.into_iter().map(str::to_string).collect(),
            experiments: runs.iter().map(|(n, _)| n.clone()).collect(),
            values,
        },
        excluded: excluded.into_iter().map(str::to_string).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleStats {
    pub example_id: String,
    pub mean: f64,
    /// Population standard deviation over experiments.
    pub std: f64,
    pub answerable: bool,
}

/// Mean and population standard deviation of a row.
pub fn mean_std(row: &[u32]) -> (f64, f64) {
    let n = row.len() as f64;
    let mean = row.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = row.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn example_stats(m: &GrMatrix, dataset: &Dataset) -> Result<Vec<ExampleStats>> {
    let index = dataset.index();
    let missing: Vec<&str> = m
        .example_ids
        .iter()
        .map(String::as_str)
        .filter(|id| !index.contains_key(id))
        .collect();
    if !missing.is_empty() {
        return Err(Error::missing_ids(&missing));
    }
    Ok(m.example_ids
        .par_iter()
        .enumerate()
        .map(|(i, id)| {
            let (mean, std) = mean_std(m.row(i));
            ExampleStats {
                example_id: id.clone(),
                mean,
                std,
                answerable: index[id.as_str()].is_answerable(),
            }
        })
        .collect())
}

/// Ids whose row has no zero: no experiment answered them correctly.
pub fn never_correct(m: &GrMatrix) -> Vec<String> {
    m.rows()
        .filter(|(_, row)| !row.contains(&0))
        .map(|(id, _)| id.to_string())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSpace {
    /// The GR row across experiments.
    #[default]
    Vector,
    /// `(mean, std)` of the row.
    MeanStd,
}

impl FromStr for FeatureSpace {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "vector" => Ok(FeatureSpace::Vector),
            "meanstd" => Ok(FeatureSpace::MeanStd),
            other => Err(format!("unknown feature space {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DifficultyLabel {
    #[serde(rename = "All Correct")]
    AllCorrect,
    #[serde(rename = "Mostly Correct")]
    MostlyCorrect,
    Polarized,
    Challenges,
}

impl fmt::Display for DifficultyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DifficultyLabel::AllCorrect => "All Correct",
            DifficultyLabel::MostlyCorrect => "Mostly Correct",
            DifficultyLabel::Polarized => "Polarized",
            DifficultyLabel::Challenges => "Challenges",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub example_id: String,
    pub cluster_id: usize,
    pub label: DifficultyLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub label: DifficultyLabel,
    pub cluster_id: usize,
    pub count: usize,
    pub mean_from: f64,
    pub mean_to: f64,
    pub std_from: f64,
    pub std_to: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyTable {
    pub answerable: bool,
    pub rows: Vec<ClusterSummary>,
    pub assignments: Vec<ClusterAssignment>,
}

/// Label clusters and summarize them. The cluster holding `(0, 0)` (or the one
/// with the lowest mean centroid when no example sits there) splits into
/// "All Correct", exactly at the origin, and "Mostly Correct". Of the other
/// clusters the one with the highest std centroid is "Polarized"; the rest are
/// "Challenges".
pub fn difficulty_classes(labels: &[usize], stats: &[ExampleStats], answerable: bool) -> DifficultyTable {
    assert_eq!(labels.len(), stats.len(), "one label per example");
    let n_clusters = labels.iter().max().map_or(0, |m| m + 1);
    let mut sums = vec![(0usize, 0.0f64, 0.0f64); n_clusters];
    for (&c, s) in labels.iter().zip(stats) {
        sums[c].0 += 1;
        sums[c].1 += s.mean;
        sums[c].2 += s.std;
    }
    let centroid = |c: usize| {
        let (n, m, s) = sums[c];
        (m / n.max(1) as f64, s / n.max(1) as f64)
    };
    let present: Vec<usize> = (0..n_clusters).filter(|&c| sums[c].0 > 0).collect();
    let at_origin = |s: &ExampleStats| s.mean == 0.0 && s.std == 0.0;
    let zero = labels
        .iter()
        .zip(stats)
        .find(|(_, s)| at_origin(s))
        .map(|(&c, _)| c)
        .or_else(|| {
            present
                .iter()
                .copied()
                .min_by(|&a, &b| centroid(a).0.total_cmp(&centroid(b).0).then(a.cmp(&b)))
        });
    let polarized = present
        .iter()
        .copied()
        .filter(|&c| Some(c) != zero)
        .max_by(|&a, &b| centroid(a).1.total_cmp(&centroid(b).1).then(b.cmp(&a)));

    let label_of = |c: usize, s: &ExampleStats| {
        if Some(c) == zero {
            if at_origin(s) {
                DifficultyLabel::AllCorrect
            } else {
                DifficultyLabel::MostlyCorrect
            }
        } else if Some(c) == polarized {
            DifficultyLabel::Polarized
        } else {
            DifficultyLabel::Challenges
        }
    };
    let assignments: Vec<ClusterAssignment> = labels
        .iter()
        .zip(stats)
        .map(|(&c, s)| ClusterAssignment {
            example_id: s.example_id.clone(),
            cluster_id: c,
            label: label_of(c, s),
        })
        .collect();

    let mut groups: Vec<((DifficultyLabel, usize), ClusterSummary)> = Vec::new();
    for (a, s) in assignments.iter().zip(stats) {
        let key = (a.label, a.cluster_id);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, row)) => {
                row.count += 1;
                row.mean_from = row.mean_from.min(s.mean);
                row.mean_to = row.mean_to.max(s.mean);
                row.std_from = row.std_from.min(s.std);
                row.std_to = row.std_to.max(s.std);
            }
            None => groups.push((
                key,
                ClusterSummary {
                    label: a.label,
                    cluster_id: a.cluster_id,
                    count: 1,
                    mean_from: s.mean,
                    mean_to: s.mean,
                    std_from: s.std,
                    std_to: s.std,
                },
            )),
        }
    }
    groups.sort_by_key(|(k, _)| *k);
    DifficultyTable {
        answerable,
        rows: groups.into_iter().map(|(_, r)| r).collect(),
        assignments,
    }
}

pub fn feature_vectors(m: &GrMatrix, stats: &[ExampleStats], features: FeatureSpace) -> Vec<Vec<f64>> {
    match features {
        FeatureSpace::Vector => (0..m.n_examples())
            .map(|i| m.row(i).iter().map(|&v| v as f64).collect())
            .collect(),
        FeatureSpace::MeanStd => stats.iter().map(|s| vec![s.mean, s.std]).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyReport {
    pub features: FeatureSpace,
    pub params: BirchParams,
    pub tables: Vec<DifficultyTable>,
    pub warnings: Vec<String>,
}

/// Cluster answerable and unanswerable examples separately and label each
/// split's clusters. `stats` must follow the matrix row order.
pub fn cluster_difficulty(
    m: &GrMatrix,
    stats: &[ExampleStats],
    features: FeatureSpace,
    params: &BirchParams,
) -> Result<DifficultyReport> {
    if stats.len() != m.n_examples() {
        return Err(Error::InvalidArgument("stats do not follow the matrix rows".into()));
    }
    let points = feature_vectors(m, stats, features);
    let mut tables = Vec::new();
    let mut warnings = Vec::new();
    for answerable in [false, true] {
        let idx: Vec<usize> = (0..stats.len()).filter(|&i| stats[i].answerable == answerable).collect();
        if idx.is_empty() {
            continue;
        }
        let pts: Vec<Vec<f64>> = idx.iter().map(|&i| points[i].clone()).collect();
        let sub: Vec<ExampleStats> = idx.iter().map(|&i| stats[i].clone()).collect();
        let result = birch_cluster(&pts, params)?;
        if let Some(w) = result.warning {
            warnings.push(format!("{}: {w}", if answerable { "answerable" } else { "unanswerable" }));
        }
        tables.push(difficulty_classes(&result.labels, &sub, answerable));
    }
    Ok(DifficultyReport {
        features,
        params: *params,
        tables,
        warnings,
    })
}
