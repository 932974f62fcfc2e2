//! Golden Rank per example and the aggregate statistics built on it.
//!
//! The Golden Rank (GR) of an example is the lowest rank whose prediction
//! exactly matches a golden answer; 0 means the primary prediction is right.
//! Examples with no match among the top K are capped at `GR = K`.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Example};
use crate::error::{Error, Result};
use crate::spanex::{write_jsonl, PredictionSet};
use crate::textnorm::{normalize, token_f1, NormalizedText};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldenRankRecord {
    #[serde(rename = "id")]
    pub example_id: String,
    pub gr: u32,
    pub capped: bool,
    pub matched_text: Option<String>,
}

impl GoldenRankRecord {
    pub fn is_secondary(&self) -> bool {
        self.gr > 0
    }
}

/// Golden Rank of one example over its first `k` predictions.
pub fn golden_rank(p: &PredictionSet, e: &Example, k: usize) -> Result<GoldenRankRecord> {
    if p.id != e.id {
        return Err(Error::IdMismatch {
            prediction: p.id.clone(),
            example: e.id.clone(),
        });
    }
    // same rule as `exact_match`, with the goldens normalized once
    let goldens: Vec<NormalizedText> = if e.golden_answers.is_empty() {
        vec![NormalizedText::default()]
    } else {
        e.golden_answers.iter().map(|g| normalize(&g.text)).collect()
    };
    let hit = p
        .predictions
        .iter()
        .take(k)
        .position(|pred| goldens.contains(&normalize(&pred.text)));
    Ok(match hit {
        Some(r) => GoldenRankRecord {
            example_id: e.id.clone(),
            gr: r as u32,
            capped: false,
            matched_text: Some(p.predictions[r].text.clone()),
        },
        None => GoldenRankRecord {
            example_id: e.id.clone(),
            gr: k as u32,
            capped: true,
            matched_text: None,
        },
    })
}

/// Direction of the interpolation correction around the plain median `m`,
/// with `k` samples above, `j` at and `i` below `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MedianConvention {
    /// `m - (k - i) / (2j)`, the GRIM convention.
    #[default]
    Grim,
    /// `m + (k - i) / (2j)`, the grouped-data interpolated median.
    Standard,
}

impl FromStr for MedianConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "grim" => Ok(MedianConvention::Grim),
            "standard" => Ok(MedianConvention::Standard),
            other => Err(format!("unknown median convention {other:?}")),
        }
    }
}

impl fmt::Display for MedianConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MedianConvention::Grim => "grim",
            MedianConvention::Standard => "standard",
        })
    }
}

/// Interpolated median of integer ranks. When the plain median falls between
/// two distinct values no sample sits at it and the plain median is returned.
pub fn interpolated_median(values: &[u32], convention: MedianConvention) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("interpolated median of no values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let m = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
    };
    let below = sorted.partition_point(|&v| (v as f64) < m);
    let not_above = sorted.partition_point(|&v| (v as f64) <= m);
    let at = not_above - below;
    if at == 0 {
        return Ok(m);
    }
    let above = n - not_above;
    let shift = (above as f64 - below as f64) / at as f64 / 2.0;
    Ok(match convention {
        MedianConvention::Grim => m - shift,
        MedianConvention::Standard => m + shift,
    })
}

/// Golden Rank Interpolated Median over secondary records (GR > 0).
pub fn grim(records: &[GoldenRankRecord], convention: MedianConvention) -> Option<f64> {
    let secondary: Vec<u32> = records.iter().filter(|r| r.gr > 0).map(|r| r.gr).collect();
    interpolated_median(&secondary, convention).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankAggregates {
    /// Mean GR over all records. Biased by the K cap.
    pub grm: f64,
    /// Mean of `r^-γ` over secondary ranks; `None` without secondary records.
    pub dgrm: Option<f64>,
    /// `dgrm` at γ = 1.
    pub farr: Option<f64>,
    /// Mean of `1 / (gr + 1)` over all records.
    pub mrr: f64,
}

pub fn rank_aggregates(records: &[GoldenRankRecord], gamma: f64) -> Option<RankAggregates> {
    if records.is_empty() {
        return None;
    }
    let n = records.len() as f64;
    let grm = records.iter().map(|r| r.gr as f64).sum::<f64>() / n;
    let mrr = records.iter().map(|r| 1.0 / (r.gr as f64 + 1.0)).sum::<f64>() / n;
    let secondary: Vec<f64> = records.iter().filter(|r| r.gr > 0).map(|r| r.gr as f64).collect();
    let discounted = |g: f64| -> Option<f64> {
        if secondary.is_empty() {
            None
        } else {
            Some(secondary.iter().map(|r| r.powf(-g)).sum::<f64>() / secondary.len() as f64)
        }
    };
    Some(RankAggregates {
        grm,
        dgrm: discounted(gamma),
        farr: discounted(1.0),
        mrr,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub experiment: String,
    pub n_examples: usize,
    pub n_secondary: usize,
    /// Percentage, 0 to 100.
    pub em: f64,
    /// Percentage, 0 to 100.
    pub f1: f64,
    pub grim: Option<f64>,
    pub grm: f64,
    pub grm_cap_biased: bool,
    pub dgrm: Option<f64>,
    pub gamma: f64,
    pub farr: Option<f64>,
    pub mrr: f64,
    pub k: usize,
    pub median_convention: MedianConvention,
    /// Counts for ranks `0..K`, then one bucket for `GR >= K`.
    pub rank_histogram: Vec<u64>,
}

impl AggregateReport {
    /// Percentage of all examples per histogram bucket.
    pub fn histogram_percentages(&self) -> Vec<f64> {
        let n = self.n_examples.max(1) as f64;
        self.rank_histogram
            .iter()
            .map(|&c| 100.0 * c as f64 / n)
            .collect()
    }

    pub fn metric(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Em => Some(self.em),
            Metric::F1 => Some(self.f1),
            Metric::Grim => self.grim,
            Metric::Grm => Some(self.grm),
            Metric::Dgrm => self.dgrm,
            Metric::Farr => self.farr,
            Metric::Mrr => Some(self.mrr),
        }
    }

    pub fn to_table(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        let mut s = String::new();
        let _ = writeln!(s, "experiment      {}", self.experiment);
        let _ = writeln!(s, "examples        {} ({} secondary)", self.n_examples, self.n_secondary);
        let _ = writeln!(s, "EM              {:.2}", self.em);
        let _ = writeln!(s, "F1              {:.2}", self.f1);
        let _ = writeln!(s, "GRIM            {} ({} convention)", opt(self.grim), self.median_convention);
        let _ = writeln!(s, "GRM             {:.4} (cap-biased, K={})", self.grm, self.k);
        let _ = writeln!(s, "DGRM(γ={})      {}", self.gamma, opt(self.dgrm));
        let _ = writeln!(s, "FARR            {}", opt(self.farr));
        let _ = writeln!(s, "MRR             {:.4}", self.mrr);
        let _ = writeln!(s, "rank  count    pct");
        let pct = self.histogram_percentages();
        for (r, (c, p)) in self.rank_histogram.iter().zip(pct).enumerate() {
            let label = if r == self.k { format!("{}+", self.k) } else { r.to_string() };
            let _ = writeln!(s, "{label:>4}  {c:>5}  {p:>6.2}");
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Em,
    F1,
    Grim,
    Grm,
    Dgrm,
    Farr,
    Mrr,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Em,
        Metric::F1,
        Metric::Grim,
        Metric::Grm,
        Metric::Dgrm,
        Metric::Farr,
        Metric::Mrr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Em => "EM",
            Metric::F1 => "F1",
            Metric::Grim => "GRIM",
            Metric::Grm => "GRM",
            Metric::Dgrm => "DGRM",
            Metric::Farr => "FARR",
            Metric::Mrr => "MRR",
        }
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown metric {s:?}"))
    }
}

/// Report over the dataset's examples. `records` and `predictions` may carry
/// extra ids; every dataset id must be present in both.
pub fn aggregate_report(
    experiment: &str,
    records: &[GoldenRankRecord],
    predictions: &[PredictionSet],
    dataset: &Dataset,
    k: usize,
    gamma: f64,
    convention: MedianConvention,
) -> Result<AggregateReport> {
    if records.is_empty() || dataset.is_empty() {
        return Err(Error::Empty(format!("no records to aggregate for {experiment}")));
    }
    let by_id: HashMap<&str, &GoldenRankRecord> =
        records.iter().map(|r| (r.example_id.as_str(), r)).collect();
    let preds: HashMap<&str, &PredictionSet> =
        predictions.iter().map(|p| (p.id.as_str(), p)).collect();
    let missing: Vec<&str> = dataset
        .examples
        .iter()
        .map(|e| e.id.as_str())
        .filter(|id| !by_id.contains_key(id) || !preds.contains_key(id))
        .collect();
    if !missing.is_empty() {
        return Err(Error::missing_ids(&missing));
    }

    let scoped: Vec<GoldenRankRecord> = dataset
        .examples
        .iter()
        .map(|e| by_id[e.id.as_str()].clone())
        .collect();
    let n = scoped.len();
    // summed in dataset order so the report is bit-for-bit reproducible
    let f1s: Vec<f64> = dataset
        .examples
        .par_iter()
        .map(|e| token_f1(preds[e.id.as_str()].primary_text(), &e.answer_texts()))
        .collect();
    let f1_sum: f64 = f1s.iter().sum();
    let mut rank_histogram = vec![0u64; k + 1];
    for r in &scoped {
        rank_histogram[(r.gr as usize).min(k)] += 1;
    }
    let aggregates = rank_aggregates(&scoped, gamma).expect("non-empty");
    Ok(AggregateReport {
        experiment: experiment.to_string(),
        n_examples: n,
        n_secondary: scoped.iter().filter(|r| r.gr > 0).count(),
        em: 100.0 * rank_histogram[0] as f64 / n as f64,
        f1: 100.0 * f1_sum / n as f64,
        grim: grim(&scoped, convention),
        grm: aggregates.grm,
        grm_cap_biased: true,
        dgrm: aggregates.dgrm,
        gamma,
        farr: aggregates.farr,
        mrr: aggregates.mrr,
        k,
        median_convention: convention,
        rank_histogram,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreOptions {
    pub k: usize,
    pub gamma: f64,
    pub median_convention: MedianConvention,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        ScoreOptions {
            k: crate::spanex::DEFAULT_K,
            gamma: 1.0,
            median_convention: MedianConvention::Grim,
        }
    }
}

/// Golden Ranks for every dataset example, in dataset order.
pub fn golden_ranks(
    dataset: &Dataset,
    predictions: &[PredictionSet],
    k: usize,
) -> Result<Vec<GoldenRankRecord>> {
    let preds: HashMap<&str, &PredictionSet> =
        predictions.iter().map(|p| (p.id.as_str(), p)).collect();
    let missing: Vec<&str> = dataset
        .examples
        .iter()
        .map(|e| e.id.as_str())
        .filter(|id| !preds.contains_key(id))
        .collect();
    if !missing.is_empty() {
        return Err(Error::missing_ids(&missing));
    }
    dataset
        .examples
        .par_iter()
        .map(|e| golden_rank(preds[e.id.as_str()], e, k))
        .collect()
}

/// Golden Ranks plus the aggregate report for one experiment.
pub fn score_experiment(
    experiment: &str,
    dataset: &Dataset,
    predictions: &[PredictionSet],
    opts: &ScoreOptions,
) -> Result<(Vec<GoldenRankRecord>, AggregateReport)> {
    let records = golden_ranks(dataset, predictions, opts.k)?;
    let report = aggregate_report(
        experiment,
        &records,
        predictions,
        dataset,
        opts.k,
        opts.gamma,
        opts.median_convention,
    )?;
    Ok((records, report))
}

pub fn write_records_csv(path: impl AsRef<Path>, records: &[GoldenRankRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_records_jsonl(path: impl AsRef<Path>, records: &[GoldenRankRecord]) -> Result<()> {
    write_jsonl(path.as_ref(), records)
}

/// Read GR records from CSV (`id,gr,capped,matched_text`) or, for `.jsonl`
/// and `.json` files, JSONL.
pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<GoldenRankRecord>> {
    let path = path.as_ref();
    let is_json = path
        .extension()
        .is_some_and(|e| e == "jsonl" || e == "json");
    if is_json {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        return text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(n, l)| {
                serde_json::from_str(l).map_err(|e| Error::BadLine {
                    path: path.to_path_buf(),
                    line: n + 1,
                    message: e.to_string(),
                })
            })
            .collect();
    }
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let mut r: GoldenRankRecord = row?;
        // CSV cannot tell an empty match (unanswerable) from no match
        if !r.capped && r.matched_text.is_none() {
            r.matched_text = Some(String::new());
        }
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::GoldenAnswer;
    use crate::spanex::Prediction;
    use proptest::prelude::*;

    fn rec(gr: u32) -> GoldenRankRecord {
        GoldenRankRecord {
            example_id: format!("e{gr}"),
            gr,
            capped: false,
            matched_text: Some(String::new()),
        }
    }

    fn recs(grs: &[u32]) -> Vec<GoldenRankRecord> {
        grs.iter().map(|&g| rec(g)).collect()
    }

    fn example(id: &str, answers: &[&str]) -> Example {
        let context = answers.join(" ") + " filler";
        let mut start = 0;
        let golden_answers = answers
            .iter()
            .map(|a| {
                let g = GoldenAnswer { text: a.to_string(), answer_start: start };
                start += a.chars().count() + 1;
                g
            })
            .collect();
        Example {
            id: id.into(),
            title: String::new(),
            question: "?".into(),
            context,
            golden_answers,
            is_impossible: answers.is_empty(),
        }
    }

    fn pset(id: &str, texts: &[&str]) -> PredictionSet {
        let n = texts.len();
        PredictionSet {
            id: id.into(),
            predictions: texts
                .iter()
                .enumerate()
                .map(|(i, t)| Prediction {
                    text: t.to_string(),
                    probability: (n - i) as f64 / (n as f64 + 1.0),
                    start_char: None,
                    end_char: None,
                })
                .collect(),
            k: n,
        }
    }

    #[test]
    fn golden_rank_cases() {
        let e = example("c0", &["about twice as much", "twice as much", "twice", "50% more"]);
        let p = pset("c0", &["", "twice as much", "twice"]);
        let r = golden_rank(&p, &e, 10).unwrap();
        assert_eq!((r.gr, r.capped, r.matched_text.as_deref()), (1, false, Some("twice as much")));

        let p = pset("c0", &["nope"; 10]);
        let r = golden_rank(&p, &e, 10).unwrap();
        assert_eq!((r.gr, r.capped, r.matched_text), (10, true, None));

        // short list still caps at K
        let r = golden_rank(&pset("c0", &["nope"]), &e, 10).unwrap();
        assert_eq!(r.gr, 10);

        let u = example("u", &[]);
        assert_eq!(golden_rank(&pset("u", &["x", ""]), &u, 10).unwrap().gr, 1);

        assert!(matches!(golden_rank(&pset("zz", &[""]), &e, 10), Err(Error::IdMismatch { .. })));
    }

    #[test]
    fn interpolated_median_cases() {
        let p = MedianConvention::Grim;
        assert_eq!(interpolated_median(&[2, 2, 2], p).unwrap(), 2.0);
        assert_eq!(interpolated_median(&[2, 2, 3], p).unwrap(), 1.75);
        assert_eq!(interpolated_median(&[1, 2, 2, 3, 10], p).unwrap(), 1.75);
        assert_eq!(interpolated_median(&[2, 2, 3], MedianConvention::Standard).unwrap(), 2.25);
        // even count between distinct values
        assert_eq!(interpolated_median(&[1, 4], p).unwrap(), 2.5);
        assert!(interpolated_median(&[], p).is_err());
    }

    #[test]
    fn grim_cases() {
        let p = MedianConvention::Grim;
        assert_eq!(grim(&recs(&[0, 0, 2, 2, 3]), p), Some(1.75));
        assert_eq!(grim(&recs(&[0, 0, 0]), p), None);
        assert_eq!(grim(&recs(&[0, 5]), p), Some(5.0));
    }

    #[test]
    fn aggregate_anchors() {
        let a = rank_aggregates(&recs(&[3]), 1.0).unwrap();
        assert_eq!(a.farr, Some(1.0 / 3.0));
        let a = rank_aggregates(&recs(&[0, 1, 3]), 1.0).unwrap();
        assert!((a.mrr - (1.0 + 0.5 + 0.25) / 3.0).abs() < 1e-15);
        assert!((a.grm - 4.0 / 3.0).abs() < 1e-15);
        let a = rank_aggregates(&recs(&[2]), 2.0).unwrap();
        assert_eq!(a.dgrm, Some(0.25));
        let a = rank_aggregates(&recs(&[0, 0]), 1.0).unwrap();
        assert_eq!((a.dgrm, a.farr, a.mrr), (None, None, 1.0));
        assert!(rank_aggregates(&[], 1.0).is_none());
    }

    #[test]
    fn report_all_correct_and_errors() {
        let d = Dataset::new(vec![example("a", &["x"]), example("b", &[])]);
        let preds = vec![pset("a", &["x"]), pset("b", &[""])];
        let (records, report) = score_experiment("perfect", &d, &preds, &ScoreOptions::default()).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(report.em, 100.0);
        assert_eq!(report.f1, 100.0);
        assert_eq!(report.grim, None);
        assert_eq!(report.rank_histogram.iter().sum::<u64>(), 2);

        assert!(matches!(
            score_experiment("x", &d, &preds[..1], &ScoreOptions::default()),
            Err(Error::MissingIds { count: 1, .. })
        ));
        assert!(aggregate_report("x", &[], &preds, &d, 10, 1.0, MedianConvention::Grim).is_err());
    }

    #[test]
    fn records_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gr.csv");
        let records = vec![
            GoldenRankRecord { example_id: "a".into(), gr: 0, capped: false, matched_text: Some(String::new()) },
            GoldenRankRecord { example_id: "b".into(), gr: 2, capped: false, matched_text: Some("x, \"y\"".into()) },
            GoldenRankRecord { example_id: "c".into(), gr: 10, capped: true, matched_text: None },
        ];
        write_records_csv(&path, &records).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("id,gr,capped,matched_text\n"));
        assert_eq!(load_records(&path).unwrap(), records);
        let jpath = dir.path().join("gr.jsonl");
        write_records_jsonl(&jpath, &records).unwrap();
        assert_eq!(load_records(&jpath).unwrap(), records);
    }

    fn brute_median_shift(values: &[u32]) -> (f64, f64) {
        let mut v = values.to_vec();
        v.sort();
        let n = v.len();
        let m = if n % 2 == 1 { v[n / 2] as f64 } else { (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0 };
        let (mut i, mut j, mut k) = (0.0, 0.0, 0.0);
        for &x in &v {
            let x = x as f64;
            if x < m {
                i += 1.0
            } else if x > m {
                k += 1.0
            } else {
                j += 1.0
            }
        }
        (m, if j == 0.0 { 0.0 } else { (k - i) / j / 2.0 })
    }

    proptest! {
        #[test]
        fn median_conventions_mirror(values in proptest::collection::vec(0u32..=10, 1..60)) {
            let (m, shift) = brute_median_shift(&values);
            let grim_style = interpolated_median(&values, MedianConvention::Grim).unwrap();
            let standard = interpolated_median(&values, MedianConvention::Standard).unwrap();
            prop_assert_eq!(grim_style, m - shift);
            prop_assert_eq!(standard, m + shift);
            prop_assert!((grim_style - m).abs() <= 0.5);
        }

        #[test]
        fn mrr_and_farr_properties(grs in proptest::collection::vec(0u32..=10, 1..50)) {
            let a = rank_aggregates(&recs(&grs), 1.0).unwrap();
            prop_assert!(a.mrr > 0.0 && a.mrr <= 1.0);
            prop_assert_eq!(a.mrr == 1.0, grs.iter().all(|&g| g == 0));
            prop_assert_eq!(a.dgrm, a.farr);
        }

        #[test]
        fn dgrm_non_increasing_in_rank(grs in proptest::collection::vec(1u32..=9, 1..20), idx in any::<prop::sample::Index>(), gamma in 0.1f64..3.0) {
            let before = rank_aggregates(&recs(&grs), gamma).unwrap().dgrm.unwrap();
            let mut bumped = grs.clone();
            bumped[idx.index(grs.len())] += 1;
            let after = rank_aggregates(&recs(&bumped), gamma).unwrap().dgrm.unwrap();
            prop_assert!(after <= before);
        }
    }
}
