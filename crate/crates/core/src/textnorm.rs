//! Answer normalization, exact match and token-level F1.
//!
//! The normalization follows the semantics of the SQuAD evaluation script:
//! lowercase, delete punctuation, drop the articles `a`, `an` and `the` as
//! whole tokens, and collapse whitespace. Punctuation covers every character
//! in a Unicode punctuation category plus the ASCII punctuation set (which
//! also contains a few symbols such as `$` and `+`).

use std::collections::HashMap;
use std::fmt;

use unicode_general_category::{get_general_category, GeneralCategory};

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// A normalized answer string. Tokens are separated by single spaces.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NormalizedText(String);

impl NormalizedText {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.0.split(' ').filter(|t| !t.is_empty())
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for NormalizedText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for NormalizedText {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

pub fn is_punctuation(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_punctuation();
    }
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

pub fn normalize(raw: &str) -> NormalizedText {
    let stripped: String = raw
        .chars()
        .flat_map(char::to_lowercase)
        .filter(|c| !is_punctuation(*c))
        .collect();
    let mut out = String::with_capacity(stripped.len());
    for token in stripped
        .split_whitespace()
        .filter(|t| !ARTICLES.contains(t))
    {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(token);
    }
    NormalizedText(out)
}

/// True when the prediction matches any golden answer after normalization.
/// An empty golden list marks an unanswerable question, which only the empty
/// answer matches.
pub fn exact_match<S: AsRef<str>>(prediction: &str, goldens: &[S]) -> bool {
    let pred = normalize(prediction);
    if goldens.is_empty() {
        return pred.is_empty();
    }
    goldens.iter().any(|g| normalize(g.as_ref()) == pred)
}

/// Bag-of-tokens F1 between two normalized strings.
pub fn f1_normalized(prediction: &NormalizedText, golden: &NormalizedText) -> f64 {
    let pred: Vec<&str> = prediction.tokens().collect();
    let gold: Vec<&str> = golden.tokens().collect();
    if pred.is_empty() || gold.is_empty() {
        return if pred.is_empty() && gold.is_empty() {
            1.0
        } else {
            0.0
        };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &gold {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &pred {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / pred.len() as f64;
    let recall = common as f64 / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Maximum token F1 over the golden answers.
pub fn token_f1<S: AsRef<str>>(prediction: &str, goldens: &[S]) -> f64 {
    let pred = normalize(prediction);
    if goldens.is_empty() {
        return if pred.is_empty() { 1.0 } else { 0.0 };
    }
    goldens
        .iter()
        .map(|g| f1_normalized(&pred, &normalize(g.as_ref())))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("The Amazon").as_str(), "amazon");
        assert_eq!(normalize("Amazon"), normalize("the Amazon"));
        assert_eq!(normalize("").as_str(), "");
        assert_eq!(normalize("a  Broad,  gauge.").as_str(), "broad gauge");
        assert_eq!(normalize("  An apple\tand\nTHE pear ").as_str(), "apple and pear");
        // articles are only dropped as whole tokens
        assert_eq!(normalize("theatre anagram").as_str(), "theatre anagram");
        assert_eq!(normalize("1,600 mm").as_str(), "1600 mm");
        assert_eq!(normalize("twice as much (14.6 mg·L-1)").as_str(), "twice as much 146 mgl1");
        assert_eq!(normalize("50% more").as_str(), "50 more");
    }

    #[test]
    fn exact_match_examples() {
        let goldens = ["about twice as much", "twice as much", "twice", "50% more"];
        assert!(exact_match("twice as much", &goldens));
        assert!(exact_match("", &[] as &[&str]));
        assert!(!exact_match("something", &[] as &[&str]));
        assert!(!exact_match("broad gauge", &["1,600 mm (5 ft 3 in) broad gauge", "1,600 mm"]));
        assert!(exact_match("1600 mm", &["1,600 mm"]));
    }

    #[test]
    fn token_f1_examples() {
        let f1 = token_f1("broad gauge", &["1,600 mm (5 ft 3 in) broad gauge"]);
        assert!((f1 - 0.4).abs() < 1e-15, "{f1}");
        assert_eq!(token_f1("the same words", &["the same words"]), 1.0);
        assert_eq!(token_f1("anything", &[] as &[&str]), 0.0);
        assert_eq!(token_f1("", &[] as &[&str]), 1.0);
        assert_eq!(token_f1("", &["x"]), 0.0);
        // a one-token prediction inside a longer golden answer earns partial credit
        let f1 = token_f1("c", &["c b"]);
        assert!((f1 - 2.0 / 3.0).abs() < 1e-15);
        // bag intersection uses min counts
        let f1 = token_f1("x x y", &["x y y"]);
        assert!((f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC*") {
            let once = normalize(&s);
            let twice = normalize(once.as_str());
            prop_assert_eq!(&once, &twice);
            prop_assert!(!once.as_str().starts_with(' '));
            prop_assert!(!once.as_str().ends_with(' '));
            prop_assert!(!once.as_str().contains("  "));
        }

        #[test]
        fn match_implies_full_f1(p in "[a-c ,.]{0,12}", g in proptest::collection::vec("[a-c ,.]{0,12}", 0..3)) {
            if exact_match(&p, &g) {
                prop_assert_eq!(token_f1(&p, &g), 1.0);
            }
        }

        #[test]
        fn single_token_f1_equals_em(p in "(the |a )?[a-d]{0,2}[.!]?", g in proptest::collection::vec("(an )?[a-d]{0,2},?", 0..3)) {
            // both sides at most one token: F1 can only be 0 or 1
            let em = exact_match(&p, &g);
            prop_assert_eq!(token_f1(&p, &g), if em { 1.0 } else { 0.0 });
        }

        #[test]
        fn empty_prediction_f1_equals_em(g in proptest::collection::vec("[a-d ]{0,8}", 0..3)) {
            let em = exact_match("", &g);
            prop_assert_eq!(token_f1("", &g), if em { 1.0 } else { 0.0 });
        }

        #[test]
        fn f1_symmetric_for_single_golden(a in "[a-d ]{0,10}", b in "[a-d ]{0,10}") {
            let ab = token_f1(&a, &[b.as_str()]);
            let ba = token_f1(&b, &[a.as_str()]);
            prop_assert!((ab - ba).abs() < 1e-15);
        }
    }
}
