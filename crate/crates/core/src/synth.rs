//! Seeded synthetic data: datasets, prediction runs with a controlled Golden
//! Rank profile, logit windows, and GR-vector blobs. Used by the examples,
//! the tests and the throughput checks; everything is reproducible from a
//! `u64` seed.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{Dataset, Example, GoldenAnswer};
use crate::spanex::{LogitRecord, Prediction, PredictionSet, Window};
use crate::textnorm::normalize;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const WORDS: &[&str] = &[
    "river", "valley", "empire", "council", "harbor", "treaty", "signal", "engine", "garden", "mineral", "orbit",
    "tunnel", "castle", "market", "forest", "bridge", "canal", "desert", "island", "temple", "railway", "charter",
    "glacier", "province", "senate", "factory", "lantern", "meadow", "quarry", "summit", "voyage", "archive",
    "beacon", "copper", "dynasty", "estuary", "fortress", "granite", "horizon", "ivory", "jungle", "kingdom",
    "lagoon", "monsoon", "northern", "ocean", "pioneer", "quartz", "republic", "saffron", "tundra", "uplands",
    "volcano", "western", "yeoman", "zenith", "amber", "basalt", "cedar", "delta", "eastern", "falcon", "gravel",
    "heron", "inland", "juniper", "kestrel", "limestone", "marble", "nomad", "obsidian", "prairie", "raven",
    "sandstone", "thistle", "umber", "vineyard", "willow", "1850", "1912", "42", "300", "seven", "twelve",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetShape {
    pub n_examples: usize,
    pub context_words: usize,
    /// Fraction of examples without an answer.
    pub unanswerable: f64,
    /// Golden answers per answerable example are drawn from `1..=max_goldens`.
    pub max_goldens: usize,
}

impl Default for DatasetShape {
    fn default() -> Self {
        DatasetShape {
            n_examples: 200,
            context_words: 40,
            unanswerable: 0.5,
            max_goldens: 3,
        }
    }
}

fn word_offsets(context: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in context.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, context.len()));
    }
    out
}

/// Contexts of random words; answerable examples carry golden answers that
/// are nested slices of one location, as in crowd-sourced annotations.
pub fn dataset(shape: &DatasetShape, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let examples = (0..shape.n_examples)
        .map(|i| {
            let words: Vec<&str> = (0..shape.context_words.max(3))
                .map(|_| *WORDS.choose(&mut r).expect("non-empty vocabulary"))
                .collect();
            let context = words.join(" ");
            let offsets = word_offsets(&context);
            let answerable = !r.gen_bool(shape.unanswerable.clamp(0.0, 1.0));
            let mut golden_answers = Vec::new();
            if answerable {
                let start = r.gen_range(0..offsets.len());
                let max_len = 4.min(offsets.len() - start);
                let len = r.gen_range(1..=max_len);
                for g in 0..r.gen_range(1..=shape.max_goldens.max(1)) {
                    // shrink the span from the left for each extra annotator
                    let s = (start + g).min(start + len - 1);
                    let (a, _) = offsets[s];
                    let (_, b) = offsets[start + len - 1];
                    golden_answers.push(GoldenAnswer {
                        text: context[a..b].to_string(),
                        answer_start: context[..a].chars().count(),
                    });
                }
            }
            Example {
                id: format!("{i:06x}"),
                title: format!("topic {}", i % 17),
                question: format!("What about the {}?", words[r.gen_range(0..words.len())]),
                context,
                golden_answers,
                is_impossible: !answerable,
            }
        })
        .collect();
    Dataset::new(examples)
}

/// How good a synthetic run is: the probability its top answer is right, and
/// for the rest the chance the golden answer shows up lower in the list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunProfile {
    pub top1: f64,
    /// Given a miss at rank 0, probability each following rank is the hit.
    pub per_rank: f64,
}

/// Draw a Golden Rank in `0..=k` (k meaning "not in the list").
pub fn draw_rank(profile: &RunProfile, k: usize, r: &mut impl Rng) -> usize {
    if r.gen_bool(profile.top1.clamp(0.0, 1.0)) {
        return 0;
    }
    (1..k)
        .find(|_| r.gen_bool(profile.per_rank.clamp(0.0, 1.0)))
        .unwrap_or(k)
}

/// Descending probabilities summing to at most one.
fn probabilities(n: usize, r: &mut impl Rng) -> Vec<f64> {
    let mut raw: Vec<f64> = (0..n).map(|_| r.gen::<f64>().powi(3) + 1e-3).collect();
    raw.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = raw.iter().sum::<f64>() * r.gen_range(1.0..1.5);
    raw.iter().map(|v| v / total).collect()
}

/// A top-`k` list per example whose golden answer sits at a rank drawn from
/// `profile`. Distractors are other context slices that match no golden
/// answer, so the realised Golden Rank is exactly the drawn one.
pub fn prediction_run(dataset: &Dataset, profile: &RunProfile, k: usize, seed: u64) -> Vec<PredictionSet> {
    prediction_run_with_ranks(dataset, profile, k, seed).0
}

/// [`prediction_run`] plus the Golden Rank drawn for each example.
pub fn prediction_run_with_ranks(
    dataset: &Dataset,
    profile: &RunProfile,
    k: usize,
    seed: u64,
) -> (Vec<PredictionSet>, Vec<usize>) {
    let mut r = rng(seed);
    dataset
        .examples
        .iter()
        .map(|e| {
            let gr = draw_rank(profile, k, &mut r);
            (prediction_set_at_rank(e, gr, k, &mut r), gr)
        })
        .unzip()
}

/// A top-`k` list for `e` whose golden answer is at rank `gr` (absent when
/// `gr >= k`).
pub fn prediction_set_at_rank(e: &Example, gr: usize, k: usize, r: &mut impl Rng) -> PredictionSet {
    let offsets = word_offsets(&e.context);
    let mut seen: HashSet<String> = e.answer_texts().iter().map(|g| normalize(g).into_string()).collect();
    if e.is_impossible {
        seen.insert(String::new());
    }
    let mut texts = Vec::with_capacity(k);
    let mut attempts = 0;
    while texts.len() < k {
        attempts += 1;
        let text = if attempts < 20 * k && !offsets.is_empty() {
            let s = r.gen_range(0..offsets.len());
            let len = r.gen_range(1..=3.min(offsets.len() - s));
            e.context[offsets[s].0..offsets[s + len - 1].1].to_string()
        } else {
            format!("none{}", texts.len())
        };
        if seen.insert(normalize(&text).into_string()) {
            texts.push(text);
        }
    }
    if gr < k {
        texts[gr] = e.golden_answers.choose(r).map_or(String::new(), |g| g.text.clone());
    }
    let predictions = texts
        .into_iter()
        .zip(probabilities(k, r))
        .map(|(text, probability)| Prediction {
            text,
            probability,
            start_char: None,
            end_char: None,
        })
        .collect();
    PredictionSet {
        id: e.id.clone(),
        predictions,
        k,
    }
}

/// Latent per-example behaviour for [`fleet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Behaviour {
    /// Nearly every run answers at rank 0.
    Easy,
    /// Usually close, sometimes a few ranks off.
    Near,
    /// Runs either get it right or miss it entirely.
    Split,
    /// Rarely found at all.
    Hard,
}

fn behaviour_profile(b: Behaviour, skill: f64) -> RunProfile {
    match b {
        Behaviour::Easy => RunProfile { top1: 0.97, per_rank: 0.9 },
        Behaviour::Near => RunProfile { top1: 0.5 * skill, per_rank: 0.5 },
        Behaviour::Split => RunProfile { top1: 0.5, per_rank: 0.0 },
        Behaviour::Hard => RunProfile { top1: 0.02, per_rank: 0.08 },
    }
}

/// `n_runs` experiments of varying skill over one dataset, where each example
/// has a latent [`Behaviour`] shared by all runs. Runs are named `run-00`,
/// `run-01`, ...
pub fn fleet(
    dataset: &Dataset,
    n_runs: usize,
    k: usize,
    seed: u64,
) -> (Vec<(String, Vec<PredictionSet>)>, Vec<Behaviour>) {
    let mut r = rng(seed);
    let behaviours: Vec<Behaviour> = dataset
        .examples
        .iter()
        .map(|_| match r.gen_range(0..100) {
            0..=49 => Behaviour::Easy,
            50..=74 => Behaviour::Near,
            75..=84 => Behaviour::Split,
            _ => Behaviour::Hard,
        })
        .collect();
    let runs = (0..n_runs)
        .map(|i| {
            let skill = r.gen_range(0.5..1.0);
            let mut rr = rng(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1)));
            let sets = dataset
                .examples
                .iter()
                .zip(&behaviours)
                .map(|(e, &b)| {
                    let gr = draw_rank(&behaviour_profile(b, skill), k, &mut rr);
                    prediction_set_at_rank(e, gr, k, &mut rr)
                })
                .collect();
            (format!("run-{i:02}"), sets)
        })
        .collect();
    (runs, behaviours)
}

/// A run whose primary answer for example `i` is `answers[i]`, followed by
/// fillers; used to build ensembles with a known vote split.
pub fn fixed_answer_run(dataset: &Dataset, answers: &[String], k: usize) -> Vec<PredictionSet> {
    dataset
        .examples
        .iter()
        .zip(answers)
        .map(|(e, a)| PredictionSet {
            id: e.id.clone(),
            predictions: std::iter::once(a.clone())
                .chain((1..k).map(|i| format!("filler {i}")))
                .enumerate()
                .map(|(i, text)| Prediction {
                    text,
                    probability: 0.5 / (i + 1) as f64,
                    start_char: None,
                    end_char: None,
                })
                .collect(),
            k,
        })
        .collect()
}

/// Windows over one example laid out like a typical reader input: a null
/// position 0, a few question positions without offsets, the context tokens
/// and padding. Long contexts are split into overlapping windows. The
/// golden span, when any, gets a logit bump of `signal`.
pub fn logit_record(e: &Example, window_len: usize, signal: f64, seed: u64) -> LogitRecord {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, 1.0).expect("valid normal");
    let question_len = 6;
    let offsets: Vec<(usize, usize)> = word_offsets(&e.context)
        .into_iter()
        .map(|(a, b)| (e.context[..a].chars().count(), e.context[..b].chars().count()))
        .collect();
    let capacity = window_len.saturating_sub(question_len + 2).max(1);
    let stride = (capacity / 2).max(1);
    let answer = e.golden_answers.first().map(|g| (g.answer_start, g.answer_start + g.text.chars().count()));

    let mut windows = Vec::new();
    let mut first = 0;
    loop {
        let last = (first + capacity).min(offsets.len());
        let mut token_char_offsets: Vec<Option<(usize, usize)>> = vec![None; 1 + question_len + 1];
        token_char_offsets.extend(offsets[first..last].iter().map(|&o| Some(o)));
        token_char_offsets.resize(window_len.max(token_char_offsets.len()), None);
        let n = token_char_offsets.len();
        let mut start_logits: Vec<f64> = (0..n).map(|_| noise.sample(&mut r)).collect();
        let mut end_logits: Vec<f64> = (0..n).map(|_| noise.sample(&mut r)).collect();
        match answer {
            Some((a, b)) => {
                for (pos, o) in token_char_offsets.iter().enumerate() {
                    if let Some((s, t)) = o {
                        if *s == a {
                            start_logits[pos] += signal;
                        }
                        if *t == b {
                            end_logits[pos] += signal;
                        }
                    }
                }
            }
            None => {
                start_logits[0] += signal;
                end_logits[0] += signal;
            }
        }
        windows.push(Window {
            start_logits,
            end_logits,
            token_char_offsets,
            null_position: Some(0),
        });
        if last >= offsets.len() {
            break;
        }
        first += stride;
    }
    LogitRecord {
        id: e.id.clone(),
        windows,
    }
}

/// `n` points per centre, isotropic normal noise. Returns the points and the
/// index of the centre each came from.
pub fn blobs(centres: &[Vec<f64>], n: usize, std: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, std).expect("valid normal");
    let mut points = Vec::with_capacity(centres.len() * n);
    let mut truth = Vec::with_capacity(centres.len() * n);
    for (c, centre) in centres.iter().enumerate() {
        for _ in 0..n {
            points.push(centre.iter().map(|&m| m + noise.sample(&mut r)).collect());
            truth.push(c);
        }
    }
    (points, truth)
}

/// Centres in `[0, k]^dims` at least `min_gap` apart (rejection sampling).
pub fn separated_centres(count: usize, dims: usize, k: f64, min_gap: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    let mut centres: Vec<Vec<f64>> = Vec::with_capacity(count);
    while centres.len() < count {
        let c: Vec<f64> = (0..dims).map(|_| r.gen_range(0.0..=k)).collect();
        let far = centres
            .iter()
            .all(|o| o.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() >= min_gap);
        if far {
            centres.push(c);
        }
    }
    centres
}
