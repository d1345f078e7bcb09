//! Corpus model for reading-comprehension MCQs: base texts, questions with
//! a key and reference distractors, JSON-lines ingestion and descriptive
//! statistics.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" | "training" => Ok(Split::Train),
            "dev" | "development" | "validation" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidArgument(format!("unknown split tag `{other}`"))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextDoc {
    pub id: String,
    pub body: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanKind {
    Key,
    Distractor,
}

/// A key or distractor phrase. `start` is a character (not byte) offset into
/// the base text; it is absent when the phrase was reformulated by the
/// annotator and no longer occurs verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerSpan {
    pub surface: String,
    pub start: Option<usize>,
    pub kind: SpanKind,
}

impl AnswerSpan {
    /// Character range `[start, end)` covered in the base text, if anchored.
    pub fn char_range(&self) -> Option<(usize, usize)> {
        self.start
            .map(|s| (s, s + self.surface.chars().count()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mcq {
    pub id: String,
    pub text_id: String,
    pub stem: String,
    pub key: AnswerSpan,
    pub distractors: Vec<AnswerSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub split: Split,
    pub texts: Vec<TextDoc>,
    pub mcqs: Vec<Mcq>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Record {
    Text {
        id: String,
        body: String,
    },
    Mcq {
        id: String,
        text_id: String,
        stem: String,
        choices: Vec<AnswerSpan>,
    },
}

impl Corpus {
    /// Builds a corpus and checks every invariant: unique ids, non-empty
    /// bodies, resolvable text references, exactly one key per MCQ and
    /// offsets that point at their surface.
    pub fn new(split: Split, texts: Vec<TextDoc>, mcqs: Vec<Mcq>) -> Result<Self> {
        let corpus = Corpus { split, texts, mcqs };
        corpus.validate()?;
        Ok(corpus)
    }

    fn validate(&self) -> Result<()> {
        let mut bodies: HashMap<&str, &str> = HashMap::new();
        for t in &self.texts {
            if t.body.trim().is_empty() {
                return Err(Error::validation(&t.id, "text body is empty"));
            }
            if bodies.insert(&t.id, &t.body).is_some() {
                return Err(Error::validation(&t.id, "duplicate text id"));
            }
        }
        let mut seen = HashSet::new();
        for m in &self.mcqs {
            if !seen.insert(m.id.as_str()) {
                return Err(Error::validation(&m.id, "duplicate MCQ id"));
            }
            let body = bodies.get(m.text_id.as_str()).ok_or_else(|| {
                Error::validation(&m.id, format!("text id `{}` does not resolve", m.text_id))
            })?;
            if m.stem.trim().is_empty() {
                return Err(Error::validation(&m.id, "stem is empty"));
            }
            if m.key.kind != SpanKind::Key {
                return Err(Error::validation(&m.id, "key span is not of kind key"));
            }
            if m.distractors.iter().any(|d| d.kind != SpanKind::Distractor) {
                return Err(Error::validation(&m.id, "distractor span of wrong kind"));
            }
            for span in std::iter::once(&m.key).chain(&m.distractors) {
                if span.surface.is_empty() {
                    return Err(Error::validation(&m.id, "empty answer surface"));
                }
                if let Some((start, end)) = span.char_range() {
                    let found: String = body.chars().skip(start).take(end - start).collect();
                    if found != span.surface {
                        return Err(Error::validation(
                            &m.id,
                            format!(
                                "offset {start} points at `{found}`, expected `{}`",
                                span.surface
                            ),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn text(&self, id: &str) -> Option<&TextDoc> {
        self.texts.iter().find(|t| t.id == id)
    }

    pub fn text_index(&self) -> HashMap<&str, &TextDoc> {
        self.texts.iter().map(|t| (t.id.as_str(), t)).collect()
    }

    pub fn mcq(&self, id: &str) -> Option<&Mcq> {
        self.mcqs.iter().find(|m| m.id == id)
    }

    pub fn is_empty(&self) -> bool {
        self.mcqs.is_empty() && self.texts.is_empty()
    }

    /// Serializes the corpus as JSON lines, texts first.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for t in &self.texts {
            let rec = Record::Text {
                id: t.id.clone(),
                body: t.body.clone(),
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        for m in &self.mcqs {
            let mut choices = Vec::with_capacity(m.distractors.len() + 1);
            choices.push(m.key.clone());
            choices.extend(m.distractors.iter().cloned());
            let rec = Record::Mcq {
                id: m.id.clone(),
                text_id: m.text_id.clone(),
                stem: m.stem.clone(),
                choices,
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(reader: R, split: Split, context: &str) -> Result<Self> {
        let mut texts = Vec::new();
        let mut mcqs = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(&line)
                .map_err(|e| Error::parse(context, i + 1, e.to_string()))?;
            match rec {
                Record::Text { id, body } => texts.push(TextDoc { id, body }),
                Record::Mcq {
                    id,
                    text_id,
                    stem,
                    choices,
                } => {
                    let mut key = None;
                    let mut distractors = Vec::new();
                    for c in choices {
                        match c.kind {
                            SpanKind::Key if key.is_some() => {
                                return Err(Error::parse(
                                    context,
                                    i + 1,
                                    format!("MCQ {id} has more than one key"),
                                ))
                            }
                            SpanKind::Key => key = Some(c),
                            SpanKind::Distractor => distractors.push(c),
                        }
                    }
                    let key = key.ok_or_else(|| {
                        Error::parse(context, i + 1, format!("MCQ {id} has no key"))
                    })?;
                    mcqs.push(Mcq {
                        id,
                        text_id,
                        stem,
                        key,
                        distractors,
                    });
                }
            }
        }
        Corpus::new(split, texts, mcqs)
    }
}

/// Loads a corpus file in the JSON-lines record format.
pub fn load_corpus(path: impl AsRef<Path>, split: Split) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path)?;
    Corpus::read_jsonl(BufReader::new(file), split, &path.display().to_string())
}

/// Imports the dataset as released upstream: a JSON array (or JSON lines) of
/// question objects, each carrying its base text, a question and a list of
/// typed choices. Texts are deduplicated by body. Offsets that do not point at
/// their surface (reformulated phrases) are dropped rather than rejected.
pub fn import_released(path: impl AsRef<Path>, split: Split) -> Result<Corpus> {
    let path = path.as_ref();
    let ctx = path.display().to_string();
    let raw = std::fs::read_to_string(path)?;
    let items: Vec<serde_json::Value> = match serde_json::from_str::<serde_json::Value>(&raw) {
        Ok(serde_json::Value::Array(items)) => items,
        Ok(serde_json::Value::Object(mut obj)) => {
            match ["data", "questions", "items"]
                .iter()
                .find_map(|k| obj.remove(*k))
            {
                Some(serde_json::Value::Array(items)) => items,
                _ => vec![serde_json::Value::Object(obj)],
            }
        }
        _ => raw
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(&ctx, i + 1, e.to_string())))
            .collect::<Result<_>>()?,
    };

    fn str_field<'a>(v: &'a serde_json::Value, names: &[&str]) -> Option<&'a str> {
        names.iter().find_map(|n| v.get(*n).and_then(|x| x.as_str()))
    }

    let mut texts: Vec<TextDoc> = Vec::new();
    let mut by_body: HashMap<String, String> = HashMap::new();
    let mut mcqs = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let body = str_field(item, &["context", "text", "base_text", "body"])
            .ok_or_else(|| Error::parse(&ctx, i + 1, "record has no base text"))?;
        let stem = str_field(item, &["question", "stem"])
            .ok_or_else(|| Error::parse(&ctx, i + 1, "record has no question"))?;
        let text_id = by_body
            .entry(body.to_string())
            .or_insert_with(|| {
                let id = format!("{split}-t{}", texts.len());
                texts.push(TextDoc {
                    id: id.clone(),
                    body: body.to_string(),
                });
                id
            })
            .clone();
        let choices = ["choices", "answers", "options"]
            .iter()
            .find_map(|k| item.get(*k).and_then(|c| c.as_array()))
            .ok_or_else(|| Error::parse(&ctx, i + 1, "record has no choices"))?;
        let body_chars: Vec<char> = body.chars().collect();
        let mut key = None;
        let mut distractors = Vec::new();
        for c in choices {
            let surface = str_field(c, &["text", "surface"]).unwrap_or("").to_string();
            if surface.is_empty() {
                continue;
            }
            let is_key = match c.get("type").and_then(|t| t.as_str()) {
                Some(t) => {
                    let t = t.to_lowercase();
                    t.contains("correct") || t == "key" || t == "answer"
                }
                None => c.get("correct").and_then(|b| b.as_bool()).unwrap_or(false),
            };
            let start = c
                .get("start")
                .and_then(|s| s.as_u64())
                .map(|s| s as usize)
                .filter(|&s| {
                    let n = surface.chars().count();
                    s + n <= body_chars.len()
                        && body_chars[s..s + n].iter().copied().eq(surface.chars())
                });
            let span = AnswerSpan {
                surface,
                start,
                kind: if is_key { SpanKind::Key } else { SpanKind::Distractor },
            };
            if is_key && key.is_none() {
                key = Some(span);
            } else if !is_key {
                distractors.push(span);
            }
        }
        let key = key.ok_or_else(|| Error::parse(&ctx, i + 1, "record has no key"))?;
        let id = item
            .get("id")
            .map(|v| match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .unwrap_or_else(|| format!("{split}-q{i}"));
        mcqs.push(Mcq {
            id,
            text_id,
            stem: stem.to_string(),
            key,
            distractors,
        });
    }
    Corpus::new(split, texts, mcqs)
}

/// Number of maximal non-whitespace runs.
pub fn word_len(s: &str) -> usize {
    s.split_whitespace().count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdKind {
    #[default]
    Sample,
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64], kind: SdKind) -> MeanSd {
        if values.is_empty() {
            return MeanSd { mean: 0.0, sd: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        let denom = match kind {
            SdKind::Sample if values.len() > 1 => n - 1.0,
            SdKind::Sample => 1.0,
            SdKind::Population => n,
        };
        MeanSd {
            mean,
            sd: (ss / denom).sqrt(),
        }
    }
}

impl fmt::Display for MeanSd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1} ± {:.1}", self.mean, self.sd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub split: Split,
    pub n_texts: usize,
    pub n_mcqs: usize,
    pub n_distractors: MeanSd,
    pub text_len: MeanSd,
    pub key_len: MeanSd,
    pub distractor_len: MeanSd,
    pub key_distractor_len_diff: MeanSd,
    pub sd_kind: SdKind,
}

impl StatsReport {
    pub fn rows(&self) -> Vec<(&'static str, String)> {
        vec![
            ("# of texts", self.n_texts.to_string()),
            ("# of MCQs", self.n_mcqs.to_string()),
            ("# of D", self.n_distractors.to_string()),
            ("Len(Text)", self.text_len.to_string()),
            ("Len(A)", self.key_len.to_string()),
            ("Len(D)", self.distractor_len.to_string()),
            ("|Len(A) - Len(D)|", self.key_distractor_len_diff.to_string()),
        ]
    }
}

/// Descriptive statistics over a corpus. Text lengths are taken per text,
/// key lengths per MCQ, distractor lengths per distractor and the length
/// difference per (key, distractor) pair.
pub fn corpus_stats(corpus: &Corpus, sd_kind: SdKind) -> Result<StatsReport> {
    if corpus.mcqs.is_empty() {
        return Err(Error::Empty(format!("{} corpus has no MCQs", corpus.split)));
    }
    let n_d: Vec<f64> = corpus.mcqs.iter().map(|m| m.distractors.len() as f64).collect();
    let text_len: Vec<f64> = corpus.texts.iter().map(|t| word_len(&t.body) as f64).collect();
    let key_len: Vec<f64> = corpus.mcqs.iter().map(|m| word_len(&m.key.surface) as f64).collect();
    let mut d_len = Vec::new();
    let mut diff = Vec::new();
    for m in &corpus.mcqs {
        let a = word_len(&m.key.surface) as f64;
        for d in &m.distractors {
            let l = word_len(&d.surface) as f64;
            d_len.push(l);
            diff.push((a - l).abs());
        }
    }
    Ok(StatsReport {
        split: corpus.split,
        n_texts: corpus.texts.len(),
        n_mcqs: corpus.mcqs.len(),
        n_distractors: MeanSd::of(&n_d, sd_kind),
        text_len: MeanSd::of(&text_len, sd_kind),
        key_len: MeanSd::of(&key_len, sd_kind),
        distractor_len: MeanSd::of(&d_len, sd_kind),
        key_distractor_len_diff: MeanSd::of(&diff, sd_kind),
        sd_kind,
    })
}

/// All reference distractor surfaces of a corpus, grouped per MCQ id.
pub fn distractors_by_mcq(corpus: &Corpus) -> BTreeMap<&str, Vec<&str>> {
    corpus
        .mcqs
        .iter()
        .map(|m| {
            (
                m.id.as_str(),
                m.distractors.iter().map(|d| d.surface.as_str()).collect(),
            )
        })
        .collect()
}
