//! From start/end logits to ranked answer spans.
//!
//! Every (start, end) token pair of a window gets the joint probability
//!
//! ```text
//! p(j, k) = exp(wS·s_j + wE·e_k) / Σ_{q,r} exp(wS·s_q + wE·e_r)
//! ```
//!
//! which for unit weights is the product of the separately softmaxed start and
//! end distributions. The denominator runs over all pairs, valid or not; pairs
//! outside the validity band `0 <= k - j <= L`, or touching a position with no
//! context offset, are then dropped. The null span `(null, null)` is always a
//! candidate and stands for the empty answer.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textnorm::normalize;

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_MAX_ANSWER_LEN: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start_logits: Vec<f64>,
    pub end_logits: Vec<f64>,
    /// Character span `[start, end)` of each token in the context; `None` for
    /// question, special and padding positions.
    #[serde(rename = "offsets")]
    pub token_char_offsets: Vec<Option<(usize, usize)>>,
    #[serde(default)]
    pub null_position: Option<usize>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.start_logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.start_logits.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.start_logits.len();
        if n == 0 {
            return Err(Error::InvalidWindow("empty window".into()));
        }
        if self.end_logits.len() != n || self.token_char_offsets.len() != n {
            return Err(Error::InvalidWindow(format!(
                "length mismatch: {} start, {} end, {} offsets",
                n,
                self.end_logits.len(),
                self.token_char_offsets.len()
            )));
        }
        if let Some(pos) = self
            .start_logits
            .iter()
            .chain(&self.end_logits)
            .position(|v| !v.is_finite())
        {
            return Err(Error::InvalidWindow(format!("non-finite logit at index {pos}")));
        }
        if let Some(null) = self.null_position {
            match self.token_char_offsets.get(null) {
                None => {
                    return Err(Error::InvalidWindow(format!(
                        "null position {null} outside window of {n}"
                    )))
                }
                Some(Some(_)) => {
                    return Err(Error::InvalidWindow(format!(
                        "null position {null} has a context offset"
                    )))
                }
                Some(None) => {}
            }
        }
        if let Some((i, (s, e))) = self
            .token_char_offsets
            .iter()
            .enumerate()
            .find_map(|(i, o)| o.filter(|(s, e)| s > e).map(|o| (i, o)))
        {
            return Err(Error::InvalidWindow(format!("offset {i} has start {s} > end {e}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitRecord {
    pub id: String,
    pub windows: Vec<Window>,
}

/// Relative emphasis of start and end logits. `(1, 1)` is the plain product of
/// start and end probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanWeights {
    pub start: f64,
    pub end: f64,
}

impl Default for SpanWeights {
    fn default() -> Self {
        SpanWeights {
            start: 1.0,
            end: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanCandidate {
    pub window: usize,
    pub start_token: usize,
    pub end_token: usize,
    pub probability: f64,
    /// `ln(probability)`; kept to rank without underflow.
    pub log_probability: f64,
    /// Weighted summed logit `wS·s_j + wE·e_k`.
    pub score: f64,
    /// `None` for the null span.
    pub char_span: Option<(usize, usize)>,
}

impl SpanCandidate {
    pub fn is_null(&self) -> bool {
        self.char_span.is_none()
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `ln Σ_{q,r} exp(wS·s_q + wE·e_r)`, which factorizes into the two marginal
/// log-sum-exps.
fn log_partition(w: &Window, weights: SpanWeights) -> f64 {
    log_sum_exp(w.start_logits.iter().map(|s| weights.start * s))
        + log_sum_exp(w.end_logits.iter().map(|e| weights.end * e))
}

/// Full `n × n` pair probability matrix (row = start, column = end), no masking.
pub fn joint_probability_matrix(
    start_logits: &[f64],
    end_logits: &[f64],
    weights: SpanWeights,
) -> Vec<Vec<f64>> {
    let ls = log_sum_exp(start_logits.iter().map(|s| weights.start * s));
    let le = log_sum_exp(end_logits.iter().map(|e| weights.end * e));
    start_logits
        .iter()
        .map(|s| {
            end_logits
                .iter()
                .map(|e| ((weights.start * s - ls) + (weights.end * e - le)).exp())
                .collect()
        })
        .collect()
}

/// True when `(start, end)` is inside the validity band and both positions map
/// into the context.
pub fn is_valid_span(w: &Window, start: usize, end: usize, max_answer_len: usize) -> bool {
    end >= start
        && end - start <= max_answer_len
        && w.token_char_offsets[start].is_some()
        && w.token_char_offsets[end].is_some()
}

/// Every valid span of one window with its joint probability, plus the null
/// span when the window has a null position. Ordered by (start, end) with the
/// null span first.
pub fn joint_span_scores(
    w: &Window,
    max_answer_len: usize,
    weights: SpanWeights,
) -> Result<Vec<SpanCandidate>> {
    w.validate()?;
    Ok(candidates(w, 0, max_answer_len, weights))
}

fn candidates(w: &Window, window: usize, max_len: usize, weights: SpanWeights) -> Vec<SpanCandidate> {
    let log_z = log_partition(w, weights);
    let make = |j: usize, k: usize, char_span| {
        let score = weights.start * w.start_logits[j] + weights.end * w.end_logits[k];
        let log_probability = score - log_z;
        SpanCandidate {
            window,
            start_token: j,
            end_token: k,
            probability: log_probability.exp(),
            log_probability,
            score,
            char_span,
        }
    };
    let n = w.len();
    let mut out = Vec::with_capacity(n * (max_len + 1).min(n) + 1);
    if let Some(null) = w.null_position {
        out.push(make(null, null, None));
    }
    for j in 0..n {
        let Some((start_char, _)) = w.token_char_offsets[j] else {
            continue;
        };
        for k in j..n.min(j.saturating_add(max_len).saturating_add(1)) {
            if let Some((_, end_char)) = w.token_char_offsets[k] {
                out.push(make(j, k, Some((start_char, end_char.max(start_char)))));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanConfig {
    pub k: usize,
    pub max_answer_len: usize,
    pub weights: SpanWeights,
    /// The empty answer takes rank 0 only when its log-probability exceeds the
    /// best span's by more than this margin.
    pub null_threshold: f64,
}

impl Default for SpanConfig {
    fn default() -> Self {
        SpanConfig {
            k: DEFAULT_K,
            max_answer_len: DEFAULT_MAX_ANSWER_LEN,
            weights: SpanWeights::default(),
            null_threshold: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub text: String,
    pub probability: f64,
    #[serde(default)]
    pub start_char: Option<usize>,
    #[serde(default)]
    pub end_char: Option<usize>,
}

impl Prediction {
    pub fn char_span(&self) -> Option<(usize, usize)> {
        self.start_char.zip(self.end_char)
    }
}

/// Top-K answers for one example, by descending probability. Rank is the index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub id: String,
    pub predictions: Vec<Prediction>,
    /// The K the list was truncated at.
    #[serde(skip)]
    pub k: usize,
}

impl PredictionSet {
    pub fn primary(&self) -> Option<&Prediction> {
        self.predictions.first()
    }

    pub fn primary_text(&self) -> &str {
        self.primary().map(|p| p.text.as_str()).unwrap_or("")
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        for (r, pair) in self.predictions.windows(2).enumerate() {
            if pair[1].probability > pair[0].probability {
                return Err(format!(
                    "probability increases from rank {r} ({}) to rank {} ({})",
                    pair[0].probability,
                    r + 1,
                    pair[1].probability
                ));
            }
        }
        let mut seen = HashSet::new();
        for (r, p) in self.predictions.iter().enumerate() {
            if !p.probability.is_finite() || !(0.0..=1.0).contains(&p.probability) {
                return Err(format!("rank {r}: probability {} outside [0, 1]", p.probability));
            }
            // Surface variants without spans (transcribed lists) may repeat.
            if let Some(span) = p.char_span() {
                if !seen.insert((normalize(&p.text), span)) {
                    return Err(format!("rank {r}: duplicate span {span:?}"));
                }
            }
        }
        Ok(())
    }
}

fn rank_order(a: &SpanCandidate, b: &SpanCandidate) -> Ordering {
    b.log_probability
        .total_cmp(&a.log_probability)
        .then(a.is_null().cmp(&b.is_null()))
        .then(a.window.cmp(&b.window))
        .then(a.start_token.cmp(&b.start_token))
        .then(a.end_token.cmp(&b.end_token))
}

fn slice_chars<'a>(context: &'a str, char_starts: &[usize], start: usize, end: usize) -> &'a str {
    &context[char_starts[start]..char_starts[end]]
}

/// Pool candidates of every window, merge identical character spans (keeping
/// the most probable), and keep the K best.
pub fn top_k_predictions(rec: &LogitRecord, context: &str, cfg: &SpanConfig) -> Result<PredictionSet> {
    if cfg.k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    if rec.windows.is_empty() {
        return Err(Error::InvalidWindow(format!("record {:?} has no windows", rec.id)));
    }
    // byte offset of every char boundary, including the end
    let char_starts: Vec<usize> = context
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(context.len()))
        .collect();
    let n_chars = char_starts.len() - 1;

    let mut pool = Vec::new();
    for (wi, w) in rec.windows.iter().enumerate() {
        w.validate()?;
        for &(s, e) in w.token_char_offsets.iter().flatten() {
            if e > n_chars {
                return Err(Error::OffsetOutOfRange {
                    id: rec.id.clone(),
                    start: s,
                    end: e,
                    len: n_chars,
                });
            }
        }
        pool.extend(candidates(w, wi, cfg.max_answer_len, cfg.weights));
    }

    // The null threshold acts as a bias on the null log-probability, which keeps
    // the ranked list monotone in the reported probability.
    if cfg.null_threshold != 0.0 {
        for c in pool.iter_mut().filter(|c| c.is_null()) {
            c.log_probability = (c.log_probability - cfg.null_threshold).min(0.0);
            c.probability = c.log_probability.exp();
        }
    }

    // Walk in rank order, skipping spans already taken. Candidates are only
    // fully sorted when a partial selection leaves too few distinct spans.
    let mut head = cfg.k.saturating_mul(8).max(64);
    loop {
        let partial = head < pool.len();
        if partial {
            pool.select_nth_unstable_by(head, rank_order);
        }
        let slice = if partial { &mut pool[..head] } else { &mut pool[..] };
        slice.sort_by(rank_order);
        let mut taken: HashSet<Option<(usize, usize)>> = HashSet::new();
        let mut predictions = Vec::with_capacity(cfg.k);
        for c in slice.iter() {
            if predictions.len() == cfg.k {
                break;
            }
            if !taken.insert(c.char_span) {
                continue;
            }
            let (text, start_char, end_char) = match c.char_span {
                Some((s, e)) => (slice_chars(context, &char_starts, s, e).to_string(), Some(s), Some(e)),
                None => (String::new(), None, None),
            };
            predictions.push(Prediction {
                text,
                probability: c.probability,
                start_char,
                end_char,
            });
        }
        if predictions.len() == cfg.k || !partial {
            return Ok(PredictionSet {
                id: rec.id.clone(),
                predictions,
                k: cfg.k,
            });
        }
        head = head.saturating_mul(4);
    }
}

/// Data-parallel [`top_k_predictions`] over many records; output keeps input order.
pub fn postprocess(
    records: &[LogitRecord],
    contexts: &HashMap<&str, &str>,
    cfg: &SpanConfig,
) -> Result<Vec<PredictionSet>> {
    records
        .par_iter()
        .map(|rec| {
            let context = contexts
                .get(rec.id.as_str())
                .ok_or_else(|| Error::missing_ids(&[rec.id.as_str()]))?;
            top_k_predictions(rec, context, cfg)
        })
        .collect()
}

pub fn load_logit_file(path: impl AsRef<Path>) -> Result<Vec<LogitRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: LogitRecord = serde_json::from_str(line).map_err(|e| Error::BadLine {
            path: path.to_path_buf(),
            line: n + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_logit_file(path: impl AsRef<Path>, records: &[LogitRecord]) -> Result<()> {
    write_jsonl(path.as_ref(), records)
}

/// Read a top-K prediction file, enforcing the [`PredictionSet`] invariants.
pub fn load_prediction_file(path: impl AsRef<Path>) -> Result<Vec<PredictionSet>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::BadLine {
            path: path.to_path_buf(),
            line: n + 1,
            message,
        };
        let mut set: PredictionSet = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        set.validate().map_err(bad)?;
        set.k = set.predictions.len();
        out.push(set);
    }
    Ok(out)
}

pub fn write_prediction_file(path: impl AsRef<Path>, sets: &[PredictionSet]) -> Result<()> {
    write_jsonl(path.as_ref(), sets)
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
