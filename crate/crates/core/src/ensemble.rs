//! Majority-vote ensembles over experiments.
//!
//! Each member casts its primary answer; ballots are keyed by the normalized
//! text so surface variants ("The Amazon", "Amazon") count together.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::rank::AggregateReport;
use crate::spanex::{Prediction, PredictionSet};
use crate::textnorm::{exact_match, normalize, token_f1};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Em,
    F1,
    Grim,
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "em" => Ok(Criterion::Em),
            "f1" => Ok(Criterion::F1),
            "grim" => Ok(Criterion::Grim),
            other => Err(format!("unknown criterion {other:?}")),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Em => "EM",
            Criterion::F1 => "F1",
            Criterion::Grim => "GRIM",
        })
    }
}

/// Which GRIM values count as better when selecting members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrimDirection {
    #[default]
    Lower,
    Higher,
}

impl FromStr for GrimDirection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "lower" => Ok(GrimDirection::Lower),
            "higher" => Ok(GrimDirection::Higher),
            other => Err(format!("unknown GRIM direction {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub criterion: Criterion,
    pub size: usize,
    #[serde(default)]
    pub grim_direction: GrimDirection,
}

/// The best `spec.size` experiments. EM and F1 are maximized, GRIM follows
/// `grim_direction`; ties fall back to F1, then name.
pub fn select_members(reports: &[AggregateReport], spec: &EnsembleSpec) -> Result<Vec<String>> {
    if reports.is_empty() {
        return Err(Error::Empty("no reports to select ensemble members from".into()));
    }
    if spec.size == 0 || spec.size > reports.len() {
        return Err(Error::InvalidArgument(format!(
            "ensemble size {} outside 1..={}",
            spec.size,
            reports.len()
        )));
    }
    let key = |r: &AggregateReport| -> Result<f64> {
        Ok(match spec.criterion {
            Criterion::Em => -r.em,
            Criterion::F1 => -r.f1,
            Criterion::Grim => {
                let g = r.grim.ok_or_else(|| {
                    Error::InvalidArgument(format!("experiment {:?} has no GRIM", r.experiment))
                })?;
                match spec.grim_direction {
                    GrimDirection::Lower => g,
                    GrimDirection::Higher => -g,
                }
            }
        })
    };
    let mut keyed = reports
        .iter()
        .map(|r| Ok((key(r)?, r)))
        .collect::<Result<Vec<_>>>()?;
    keyed.sort_by(|(ka, a), (kb, b)| {
        ka.total_cmp(kb)
            .then(b.f1.total_cmp(&a.f1))
            .then(a.experiment.cmp(&b.experiment))
    });
    Ok(keyed
        .into_iter()
        .take(spec.size)
        .map(|(_, r)| r.experiment.clone())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsemblePrediction {
    pub example_id: String,
    pub text: String,
    pub votes: usize,
    pub supporters: Vec<String>,
    /// Mean primary probability of the supporters.
    pub mean_probability: f64,
}

impl EnsemblePrediction {
    /// Single-entry prediction set whose probability is the vote share.
    pub fn to_prediction_set(&self, n_members: usize) -> PredictionSet {
        PredictionSet {
            id: self.example_id.clone(),
            predictions: vec![Prediction {
                text: self.text.clone(),
                probability: self.votes as f64 / n_members.max(1) as f64,
                start_char: None,
                end_char: None,
            }],
            k: 1,
        }
    }
}

/// How to settle ballots that tie on votes and mean probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    Lexicographic,
    /// Shuffle the tied keys with a generator seeded from this value and the
    /// example id.
    Seeded(u64),
}

struct Ballot<'a> {
    key: String,
    supporters: Vec<(&'a str, &'a Prediction)>,
}

impl Ballot<'_> {
    fn mean_probability(&self) -> f64 {
        self.supporters.iter().map(|(_, p)| p.probability).sum::<f64>() / self.supporters.len() as f64
    }
}

fn seed_for(seed: u64, id: &str) -> u64 {
    // FNV-1a over the id, mixed with the seed
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

pub fn majority_vote(
    runs: &[(String, Vec<PredictionSet>)],
    members: &[String],
    tie_break: TieBreak,
) -> Result<Vec<EnsemblePrediction>> {
    if members.is_empty() {
        return Err(Error::Empty("ensemble has no members".into()));
    }
    let mut member_runs = Vec::with_capacity(members.len());
    for m in members {
        let (_, sets) = runs
            .iter()
            .find(|(name, _)| name == m)
            .ok_or_else(|| Error::InvalidArgument(format!("member {m:?} is not among the runs")))?;
        let by_id: HashMap<&str, &PredictionSet> = sets.iter().map(|p| (p.id.as_str(), p)).collect();
        member_runs.push((m.as_str(), sets, by_id));
    }
    let ids: Vec<&str> = member_runs[0].1.iter().map(|p| p.id.as_str()).collect();
    let missing: Vec<&str> = ids
        .iter()
        .copied()
        .filter(|id| member_runs.iter().any(|(_, _, m)| !m.contains_key(id)))
        .collect();
    if !missing.is_empty() {
        return Err(Error::missing_ids(&missing));
    }

    static EMPTY: Prediction = Prediction {
        text: String::new(),
        probability: 0.0,
        start_char: None,
        end_char: None,
    };
    Ok(ids
        .par_iter()
        .map(|&id| {
            let mut ballots: Vec<Ballot> = Vec::new();
            for (name, _, by_id) in &member_runs {
                let pred = by_id[id].primary().unwrap_or(&EMPTY);
                let key = normalize(&pred.text).into_string();
                match ballots.iter_mut().find(|b| b.key == key) {
                    Some(b) => b.supporters.push((name, pred)),
                    None => ballots.push(Ballot {
                        key,
                        supporters: vec![(name, pred)],
                    }),
                }
            }
            ballots.sort_by(|a, b| {
                b.supporters
                    .len()
                    .cmp(&a.supporters.len())
                    .then(b.mean_probability().total_cmp(&a.mean_probability()))
                    .then(a.key.cmp(&b.key))
            });
            if let TieBreak::Seeded(seed) = tie_break {
                let top = &ballots[0];
                let tied = ballots
                    .iter()
                    .take_while(|b| {
                        b.supporters.len() == top.supporters.len()
                            && b.mean_probability() == top.mean_probability()
                    })
                    .count();
                let mut rng = ChaCha8Rng::seed_from_u64(seed_for(seed, id));
                ballots[..tied].shuffle(&mut rng);
            }
            let winner = &ballots[0];
            let surface = winner
                .supporters
                .iter()
                .max_by(|a, b| {
                    a.1.probability
                        .total_cmp(&b.1.probability)
                        .then(b.1.text.cmp(&a.1.text))
                })
                .expect("a ballot has supporters");
            EnsemblePrediction {
                example_id: id.to_string(),
                text: surface.1.text.clone(),
                votes: winner.supporters.len(),
                supporters: winner.supporters.iter().map(|(n, _)| n.to_string()).collect(),
                mean_probability: winner.mean_probability(),
            }
        })
        .collect())
}

/// `(EM, F1)` percentages of ensemble answers over the dataset.
pub fn evaluate_ensemble(preds: &[EnsemblePrediction], dataset: &Dataset) -> Result<(f64, f64)> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset is empty".into()));
    }
    let by_id: HashMap<&str, &EnsemblePrediction> =
        preds.iter().map(|p| (p.example_id.as_str(), p)).collect();
    let missing: Vec<&str> = dataset
        .examples
        .iter()
        .map(|e| e.id.as_str())
        .filter(|id| !by_id.contains_key(id))
        .collect();
    if !missing.is_empty() {
        return Err(Error::missing_ids(&missing));
    }
    let (em, f1) = dataset
        .examples
        .iter()
        .map(|e| {
            let text = &by_id[e.id.as_str()].text;
            let goldens = e.answer_texts();
            (exact_match(text, &goldens) as u8 as f64, token_f1(text, &goldens))
        })
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let n = dataset.len() as f64;
    Ok((100.0 * em / n, 100.0 * f1 / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank::MedianConvention;

    fn report(name: &str, em: f64, f1: f64, grim: Option<f64>) -> AggregateReport {
        AggregateReport {
            experiment: name.into(),
            n_examples: 1,
            n_secondary: 0,
            em,
            f1,
            grim,
            grm: 0.0,
            grm_cap_biased: true,
            dgrm: None,
            gamma: 1.0,
            farr: None,
            mrr: 1.0,
            k: 10,
            median_convention: MedianConvention::Grim,
            rank_histogram: vec![1],
        }
    }

    fn run(name: &str, answers: &[(&str, &str, f64)]) -> (String, Vec<PredictionSet>) {
        (
            name.into(),
            answers
                .iter()
                .map(|&(id, text, p)| PredictionSet {
                    id: id.into(),
                    predictions: vec![Prediction { text: text.into(), probability: p, start_char: None, end_char: None }],
                    k: 1,
                })
                .collect(),
        )
    }

    #[test]
    fn select_by_f1_and_grim() {
        let reports = vec![
            report("a", 80.0, 83.33, Some(2.38)),
            report("b", 81.0, 83.88, Some(3.13)),
            report("c", 79.0, 81.68, Some(4.38)),
            report("d", 78.0, 82.93, Some(2.23)),
            report("e", 77.0, 80.0, Some(3.99)),
        ];
        let spec = EnsembleSpec { criterion: Criterion::F1, size: 3, grim_direction: GrimDirection::Lower };
        assert_eq!(select_members(&reports, &spec).unwrap(), ["b", "a", "d"]);
        let spec = EnsembleSpec { criterion: Criterion::Grim, ..spec };
        assert_eq!(select_members(&reports, &spec).unwrap(), ["d", "a", "b"]);
        let spec = EnsembleSpec { grim_direction: GrimDirection::Higher, ..spec };
        assert_eq!(select_members(&reports, &spec).unwrap(), ["c", "e", "b"]);
        let spec = EnsembleSpec { criterion: Criterion::Em, size: 5, ..spec };
        assert_eq!(select_members(&reports, &spec).unwrap().len(), 5);
        let spec = EnsembleSpec { size: 6, ..spec };
        assert!(select_members(&reports, &spec).is_err());
        let mut no_grim = reports.clone();
        no_grim[0].grim = None;
        let spec = EnsembleSpec { criterion: Criterion::Grim, size: 2, grim_direction: GrimDirection::Lower };
        assert!(select_members(&no_grim, &spec).is_err());
    }

    #[test]
    fn ties_fall_back_to_f1_then_name() {
        let reports = vec![report("z", 80.0, 85.0, None), report("y", 80.0, 85.0, None), report("x", 80.0, 86.0, None)];
        let spec = EnsembleSpec { criterion: Criterion::Em, size: 3, grim_direction: GrimDirection::Lower };
        assert_eq!(select_members(&reports, &spec).unwrap(), ["x", "y", "z"]);
    }

    #[test]
    fn plurality_and_ties() {
        let runs = vec![
            run("m1", &[("q", "x", 0.4), ("r", "alpha", 0.9)]),
            run("m2", &[("q", "x", 0.3), ("r", "beta", 0.5)]),
            run("m3", &[("q", "y", 0.99), ("r", "gamma", 0.4)]),
        ];
        let members: Vec<String> = ["m1", "m2", "m3"].map(String::from).to_vec();
        let out = majority_vote(&runs, &members, TieBreak::default()).unwrap();
        assert_eq!((out[0].text.as_str(), out[0].votes), ("x", 2));
        assert_eq!(out[0].supporters, ["m1", "m2"]);
        assert_eq!((out[1].text.as_str(), out[1].votes), ("alpha", 1));
    }

    #[test]
    fn normalized_ballots_merge() {
        let runs = vec![run("a", &[("q", "The Amazon", 0.5)]), run("b", &[("q", "Amazon", 0.7)])];
        let out = majority_vote(&runs, &["a".into(), "b".into()], TieBreak::default()).unwrap();
        assert_eq!(out[0].votes, 2);
        assert_eq!(out[0].text, "Amazon");
    }

    #[test]
    fn missing_member_prediction() {
        let runs = vec![run("a", &[("q", "x", 0.5), ("r", "y", 0.5)]), run("b", &[("q", "x", 0.5)])];
        assert!(matches!(
            majority_vote(&runs, &["a".into(), "b".into()], TieBreak::default()),
            Err(Error::MissingIds { .. })
        ));
    }

    #[test]
    fn seeded_tie_break_is_reproducible() {
        let runs = vec![run("a", &[("q", "x", 0.5)]), run("b", &[("q", "y", 0.5)])];
        let members = vec!["a".to_string(), "b".to_string()];
        let one = majority_vote(&runs, &members, TieBreak::Seeded(7)).unwrap();
        let two = majority_vote(&runs, &members, TieBreak::Seeded(7)).unwrap();
        assert_eq!(one, two);
        let plain = majority_vote(&runs, &members, TieBreak::Lexicographic).unwrap();
        assert_eq!(plain[0].text, "x");
    }
}
