//! Dataset loading and validation for SQuAD-v2 style question answering data.
//!
//! Two layouts are accepted: the official nested JSON
//! (`data[].paragraphs[].qas[]`) and a flat JSONL file with one [`Example`]
//! per line. Character offsets count Unicode scalar values.
//!
//! Examples that fail validation are not scored; they are kept in
//! [`Dataset::discarded`] together with the issues found.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldenAnswer {
    pub text: String,
    pub answer_start: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub question: String,
    pub context: String,
    #[serde(alias = "answers")]
    pub golden_answers: Vec<GoldenAnswer>,
    pub is_impossible: bool,
}

impl Example {
    pub fn answer_texts(&self) -> Vec<&str> {
        self.golden_answers.iter().map(|a| a.text.as_str()).collect()
    }

    pub fn is_answerable(&self) -> bool {
        !self.is_impossible
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IssueKind {
    EmptyId,
    AnswerabilityContradiction,
    OffsetOutOfBounds,
    SpanMismatch,
}

impl fmt::Display for IssueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            IssueKind::EmptyId => "empty-id",
            IssueKind::AnswerabilityContradiction => "answerability-contradiction",
            IssueKind::OffsetOutOfBounds => "offset-out-of-bounds",
            IssueKind::SpanMismatch => "span-mismatch",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub kind: IssueKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discarded {
    pub id: String,
    pub location: String,
    pub issues: Vec<Issue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    pub examples: Vec<Example>,
    pub source_path: String,
    pub discarded: Vec<Discarded>,
}

impl Dataset {
    pub fn new(examples: Vec<Example>) -> Self {
        Dataset {
            examples,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Example> {
        self.examples.iter().find(|e| e.id == id)
    }

    /// Id to example lookup table.
    pub fn index(&self) -> HashMap<&str, &Example> {
        self.examples.iter().map(|e| (e.id.as_str(), e)).collect()
    }

    /// Partition into (answerable, unanswerable), preserving order.
    pub fn split_answerability(&self) -> (Dataset, Dataset) {
        let (answerable, unanswerable): (Vec<_>, Vec<_>) = self
            .examples
            .iter()
            .cloned()
            .partition(Example::is_answerable);
        let part = |examples| Dataset {
            examples,
            source_path: self.source_path.clone(),
            discarded: Vec::new(),
        };
        (part(answerable), part(unanswerable))
    }

    /// Serialize in the official nested layout. Consecutive examples that share
    /// title and context are grouped into one paragraph. Discarded examples are
    /// not written.
    pub fn to_squad_json(&self) -> serde_json::Value {
        let mut articles: Vec<RawArticle> = Vec::new();
        for e in &self.examples {
            let qa = RawQa {
                id: e.id.clone(),
                question: e.question.clone(),
                answers: e.golden_answers.clone(),
                is_impossible: Some(e.is_impossible),
            };
            match articles.last_mut() {
                Some(a) if a.title == e.title => match a.paragraphs.last_mut() {
                    Some(p) if p.context == e.context => p.qas.push(qa),
                    _ => a.paragraphs.push(RawParagraph {
                        context: e.context.clone(),
                        qas: vec![qa],
                    }),
                },
                _ => articles.push(RawArticle {
                    title: e.title.clone(),
                    paragraphs: vec![RawParagraph {
                        context: e.context.clone(),
                        qas: vec![qa],
                    }],
                }),
            }
        }
        serde_json::json!({ "version": "v2.0", "data": articles })
    }

    pub fn save_squad_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&self.to_squad_json())?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn save_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for e in &self.examples {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Checks every [`Example`] invariant; an empty result means the example is valid.
pub fn validate_example(e: &Example) -> Vec<Issue> {
    let mut issues = Vec::new();
    if e.id.is_empty() {
        issues.push(Issue {
            kind: IssueKind::EmptyId,
            detail: "id is empty".into(),
        });
    }
    if e.is_impossible != e.golden_answers.is_empty() {
        issues.push(Issue {
            kind: IssueKind::AnswerabilityContradiction,
            detail: format!(
                "is_impossible={} with {} golden answer(s)",
                e.is_impossible,
                e.golden_answers.len()
            ),
        });
    }
    let context: Vec<char> = e.context.chars().collect();
    for (n, a) in e.golden_answers.iter().enumerate() {
        let len = a.text.chars().count();
        let end = a.answer_start + len;
        if end > context.len() {
            issues.push(Issue {
                kind: IssueKind::OffsetOutOfBounds,
                detail: format!(
                    "answer {n}: [{}, {end}) beyond context length {}",
                    a.answer_start,
                    context.len()
                ),
            });
            continue;
        }
        let span: String = context[a.answer_start..end].iter().collect();
        if span != a.text {
            issues.push(Issue {
                kind: IssueKind::SpanMismatch,
                detail: format!("answer {n}: {:?} found {:?} at {}", a.text, span, a.answer_start),
            });
        }
    }
    issues
}

#[derive(Deserialize)]
struct RawFile {
    data: Vec<RawArticle>,
}

#[derive(Serialize, Deserialize)]
struct RawArticle {
    #[serde(default)]
    title: String,
    paragraphs: Vec<RawParagraph>,
}

#[derive(Serialize, Deserialize)]
struct RawParagraph {
    context: String,
    qas: Vec<RawQa>,
}

#[derive(Serialize, Deserialize)]
struct RawQa {
    id: String,
    question: String,
    #[serde(default)]
    answers: Vec<GoldenAnswer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    is_impossible: Option<bool>,
}

/// Load a dataset. A single JSON document with a `data` key uses the nested
/// layout, a top-level JSON array holds flat examples, anything else is read
/// as JSONL.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let located = match serde_json::from_str::<serde_json::Value>(&text) {
        Ok(value) if value.get("data").is_some() => parse_nested(path, value)?,
        Ok(value) if value.is_array() => parse_array(path, value)?,
        _ => parse_jsonl(path, &text)?,
    };
    assemble(path, located)
}

fn parse_nested(path: &Path, value: serde_json::Value) -> Result<Vec<(Example, String)>> {
    let raw: RawFile = serde_json::from_value(value).map_err(|e| Error::Malformed {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut out = Vec::new();
    for (ai, article) in raw.data.into_iter().enumerate() {
        for (pi, paragraph) in article.paragraphs.into_iter().enumerate() {
            for (qi, qa) in paragraph.qas.into_iter().enumerate() {
                let is_impossible = qa.is_impossible.unwrap_or(qa.answers.is_empty());
                out.push((
                    Example {
                        id: qa.id,
                        title: article.title.clone(),
                        question: qa.question,
                        context: paragraph.context.clone(),
                        golden_answers: qa.answers,
                        is_impossible,
                    },
                    format!("data[{ai}].paragraphs[{pi}].qas[{qi}]"),
                ));
            }
        }
    }
    Ok(out)
}

fn parse_array(path: &Path, value: serde_json::Value) -> Result<Vec<(Example, String)>> {
    let examples: Vec<Example> = serde_json::from_value(value).map_err(|e| Error::Malformed {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(examples
        .into_iter()
        .enumerate()
        .map(|(i, e)| (e, format!("[{i}]")))
        .collect())
}

fn parse_jsonl(path: &Path, text: &str) -> Result<Vec<(Example, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let e: Example = serde_json::from_str(line).map_err(|e| Error::BadLine {
            path: path.to_path_buf(),
            line: n + 1,
            message: e.to_string(),
        })?;
        out.push((e, format!("line {}", n + 1)));
    }
    Ok(out)
}

fn assemble(path: &Path, located: Vec<(Example, String)>) -> Result<Dataset> {
    let mut seen: HashMap<String, String> = HashMap::new();
    let mut examples = Vec::new();
    let mut discarded = Vec::new();
    for (e, location) in located {
        if let Some(first) = seen.get(&e.id) {
            return Err(Error::DuplicateId {
                id: e.id,
                first: first.clone(),
                second: location,
            });
        }
        seen.insert(e.id.clone(), location.clone());
        let issues = validate_example(&e);
        if issues.is_empty() {
            examples.push(e);
        } else {
            discarded.push(Discarded {
                id: e.id,
                location,
                issues,
            });
        }
    }
    Ok(Dataset {
        examples,
        source_path: path.display().to_string(),
        discarded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn answerable() -> Example {
        Example {
            id: "q1".into(),
            title: "T".into(),
            question: "Which gauge?".into(),
            context: "Victorian lines mainly use the 1,600 mm broad gauge.".into(),
            golden_answers: vec![GoldenAnswer {
                text: "1,600 mm".into(),
                answer_start: 31,
            }],
            is_impossible: false,
        }
    }

    #[test]
    fn valid_example_has_no_issues() {
        assert!(validate_example(&answerable()).is_empty());
    }

    #[test]
    fn contradiction_and_bounds() {
        let mut e = answerable();
        e.is_impossible = true;
        let kinds: Vec<_> = validate_example(&e).into_iter().map(|i| i.kind).collect();
        assert_eq!(kinds, vec![IssueKind::AnswerabilityContradiction]);

        let mut e = answerable();
        e.golden_answers[0].answer_start = 500;
        let kinds: Vec<_> = validate_example(&e).into_iter().map(|i| i.kind).collect();
        assert_eq!(kinds, vec![IssueKind::OffsetOutOfBounds]);

        let mut e = answerable();
        e.golden_answers[0].answer_start = 30;
        let kinds: Vec<_> = validate_example(&e).into_iter().map(|i| i.kind).collect();
        assert_eq!(kinds, vec![IssueKind::SpanMismatch]);
    }

    #[test]
    fn offsets_count_chars_not_bytes() {
        let e = Example {
            id: "u".into(),
            title: String::new(),
            question: "?".into(),
            context: "14.6 mg·L-1 at 0 °C".into(),
            golden_answers: vec![GoldenAnswer {
                text: "0 °C".into(),
                answer_start: 15,
            }],
            is_impossible: false,
        };
        assert!(validate_example(&e).is_empty());
    }

    #[test]
    fn split_preserves_order() {
        let a = answerable();
        let mut b = answerable();
        b.id = "q2".into();
        b.golden_answers.clear();
        b.is_impossible = true;
        let mut c = answerable();
        c.id = "q3".into();
        let d = Dataset::new(vec![a, b, c]);
        let (ans, unans) = d.split_answerability();
        assert_eq!(
            ans.examples.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(),
            ["q1", "q3"]
        );
        assert_eq!(unans.len(), 1);
        let (x, y) = Dataset::default().split_answerability();
        assert!(x.is_empty() && y.is_empty());
    }

    fn example_strategy() -> impl Strategy<Value = Example> {
        ("[a-z]{1,6}", "[A-Z]{0,3}", "[a-zé ·]{1,30}", any::<bool>(), any::<prop::sample::Index>())
            .prop_map(|(id, title, context, answerable, idx)| {
                let chars: Vec<char> = context.chars().collect();
                let start = idx.index(chars.len());
                let text: String = chars[start..(start + 3).min(chars.len())].iter().collect();
                Example {
                    id,
                    title,
                    question: "q?".into(),
                    context,
                    golden_answers: if answerable {
                        vec![GoldenAnswer { text, answer_start: start }]
                    } else {
                        vec![]
                    },
                    is_impossible: !answerable,
                }
            })
    }

    proptest! {
        #[test]
        fn squad_round_trip(mut examples in proptest::collection::vec(example_strategy(), 0..12)) {
            let mut seen = std::collections::HashSet::new();
            examples.retain(|e| seen.insert(e.id.clone()));
            let dir = tempfile::tempdir().unwrap();
            let p1 = dir.path().join("a.json");
            let d = Dataset::new(examples);
            d.save_squad_json(&p1).unwrap();
            let once = load_dataset(&p1).unwrap();
            prop_assert_eq!(&once.examples, &d.examples);
            let p2 = dir.path().join("b.json");
            once.save_squad_json(&p2).unwrap();
            let twice = load_dataset(&p2).unwrap();
            prop_assert_eq!(once.examples, twice.examples);

            let (a, u) = d.split_answerability();
            prop_assert_eq!(a.len() + u.len(), d.len());
        }
    }
}
