//! Quantitative metrics over a set of generated distractors.
//!
//! Strings are compared after removing special tokens, NFC normalization,
//! case folding, splitting punctuation into separate tokens and collapsing
//! whitespace. "Occurs in a text" means the normalized phrase occurs in the
//! normalized text on token boundaries.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{Corpus, Mcq};
use crate::error::{Error, Result};
use crate::grct::to_grct;
use crate::io::SuggestionRecord;
use crate::kernel::{KernelParams, KernelScorer};
use crate::parses::ParseStore;

pub const SPECIAL_TOKENS: [&str; 5] = ["[SEP]", "[CLS]", "[MASK]", "[PAD]", "[UNK]"];
pub const DISTRACTORS_PER_MCQ: usize = 3;

/// Three generated distractors per MCQ id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSet(pub BTreeMap<String, Vec<String>>);

impl GeneratedSet {
    pub fn from_records(records: &[SuggestionRecord]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for r in records {
            if r.distractors.len() != DISTRACTORS_PER_MCQ {
                return Err(Error::validation(
                    &r.mcq_id,
                    format!("expected {DISTRACTORS_PER_MCQ} distractors, found {}", r.distractors.len()),
                ));
            }
            if map.insert(r.mcq_id.clone(), r.distractors.clone()).is_some() {
                return Err(Error::validation(&r.mcq_id, "duplicate MCQ in generated set"));
            }
        }
        Ok(GeneratedSet(map))
    }
}

/// Removes special tokens.
pub fn strip_special(s: &str) -> String {
    let mut out = s.to_string();
    for t in SPECIAL_TOKENS {
        out = out.replace(t, " ");
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalized form used for every match and containment test.
pub fn normalize(s: &str) -> String {
    let folded: String = strip_special(s).nfc().collect::<String>().to_lowercase();
    let mut spaced = String::with_capacity(folded.len() + 8);
    for c in folded.chars() {
        if !c.is_alphanumeric() && !c.is_whitespace() {
            spaced.push(' ');
            spaced.push(c);
            spaced.push(' ');
        } else {
            spaced.push(c);
        }
    }
    spaced.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn matches(a: &str, b: &str) -> bool {
    normalize(a) == normalize(b)
}

/// Token-boundary containment of two already normalized strings.
fn contained(needle: &str, haystack: &str) -> bool {
    !needle.is_empty() && format!(" {haystack} ").contains(&format!(" {needle} "))
}

fn has_contiguous_repeat(normalized: &str) -> bool {
    let words: Vec<&str> = normalized.split(' ').filter(|w| !w.is_empty()).collect();
    words.windows(2).any(|w| w[0] == w[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CaseClass {
    Upper,
    Lower,
    Other,
}

fn case_class(s: &str) -> Option<CaseClass> {
    let c = strip_special(s).nfc().next()?;
    Some(if c.is_uppercase() {
        CaseClass::Upper
    } else if c.is_lowercase() {
        CaseClass::Lower
    } else {
        CaseClass::Other
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcptkStats {
    pub mean: f64,
    pub median: f64,
    pub mode: f64,
    /// Share of pairs (percent) whose 2-decimal rounded value equals the mode.
    pub mode_share: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n_mcqs: usize,
    pub dis_recall: f64,
    pub any_dis_ref_match: f64,
    pub any_dis_in_text: f64,
    pub key_in_dis: f64,
    pub any_same_dis: f64,
    pub all_same_dis: f64,
    pub any_dis_rep: f64,
    pub any_dis_empty: f64,
    pub any_dis_from_train_dis: Option<f64>,
    pub ncptk: Option<NcptkStats>,
    pub ncptk_unparseable: usize,
    pub ncptk_empty_skipped: usize,
    pub any_dis_cap_diff: f64,
    pub any_dis_is_train_dis: Option<f64>,
    pub any_dis_in_any_train_text: Option<f64>,
    pub any_dis_in_train_text_not_own: Option<f64>,
    pub all_dis_in_text: f64,
    pub all_dis_in_train_text: Option<f64>,
    pub all_dis_are_train_dis: Option<f64>,
}

fn pct(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

fn opt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.2}%"))
}

impl MetricReport {
    /// Display rows: (name, value).
    pub fn rows(&self) -> Vec<(String, String)> {
        let mut rows: Vec<(String, String)> = vec![
            ("DisRecall".into(), format!("{:.2}%", self.dis_recall)),
            ("AnyDisRefMatch".into(), format!("{:.2}%", self.any_dis_ref_match)),
            ("AnyDisInText".into(), format!("{:.2}%", self.any_dis_in_text)),
            ("KeyInDis".into(), format!("{:.2}%", self.key_in_dis)),
            ("AnySameDis".into(), format!("{:.2}%", self.any_same_dis)),
            ("AllSameDis".into(), format!("{:.2}%", self.all_same_dis)),
            ("AnyDisRep".into(), format!("{:.2}%", self.any_dis_rep)),
            ("AnyDisEmpty".into(), format!("{:.2}%", self.any_dis_empty)),
            ("AnyDisFromTrainDis".into(), opt_pct(self.any_dis_from_train_dis)),
        ];
        match &self.ncptk {
            Some(s) => {
                rows.push(("MeanNCPTK".into(), format!("{:.2}", s.mean)));
                rows.push(("MedianNCPTK".into(), format!("{:.2}", s.median)));
                rows.push(("ModeNCPTK".into(), format!("{:.2} ({:.2}%)", s.mode, s.mode_share)));
            }
            None => {
                for n in ["MeanNCPTK", "MedianNCPTK", "ModeNCPTK"] {
                    rows.push((n.into(), "NA".into()));
                }
            }
        }
        rows.push(("NCPTK unparseable".into(), self.ncptk_unparseable.to_string()));
        rows.push(("AnyDisCapDiff".into(), format!("{:.2}%", self.any_dis_cap_diff)));
        rows.push(("AnyDisIsTrainDis".into(), opt_pct(self.any_dis_is_train_dis)));
        rows.push(("AnyDisInAnyTrainText".into(), opt_pct(self.any_dis_in_any_train_text)));
        rows.push(("AnyDisInTrainTextNotOwn".into(), opt_pct(self.any_dis_in_train_text_not_own)));
        rows.push(("AllDisInText".into(), format!("{:.2}%", self.all_dis_in_text)));
        rows.push(("AllDisInTrainText".into(), opt_pct(self.all_dis_in_train_text)));
        rows.push(("AllDisAreTrainDis".into(), opt_pct(self.all_dis_are_train_dis)));
        rows
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = self.rows();
        let w = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
        for (n, v) in rows {
            writeln!(f, "{n:<w$}  {v:>16}")?;
        }
        Ok(())
    }
}

/// Normalized training-side lookups.
struct TrainIndex {
    distractors: HashSet<String>,
    texts: Vec<String>,
}

impl TrainIndex {
    fn new(train: &Corpus) -> Self {
        TrainIndex {
            distractors: train
                .mcqs
                .iter()
                .flat_map(|m| m.distractors.iter().map(|d| normalize(&d.surface)))
                .collect(),
            texts: train.texts.iter().map(|t| normalize(&t.body)).collect(),
        }
    }

    fn in_any_text(&self, normalized: &str) -> bool {
        self.texts.iter().any(|t| contained(normalized, t))
    }
}

/// Mean, median and 2-decimal binned mode of kernel scores. Among equally
/// frequent bins the largest value is the mode.
pub fn ncptk_stats(values: &[f64]) -> Option<NcptkStats> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let mut bins: BTreeMap<i64, usize> = BTreeMap::new();
    for v in values {
        *bins.entry((v * 100.0).round() as i64).or_default() += 1;
    }
    let (bin, count) = bins
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(b.0)))
        .map(|(b, c)| (*b, *c))
        .expect("non-empty");
    Some(NcptkStats {
        mean,
        median,
        mode: bin as f64 / 100.0,
        mode_share: pct(count, n),
        pairs: n,
    })
}

/// Computes every metric. `train` enables the training-data metrics (they
/// are NA otherwise); `parses` supplies key and generated-distractor trees
/// for the kernel statistics.
pub fn evaluate(
    generated: &GeneratedSet,
    corpus: &Corpus,
    train: Option<&Corpus>,
    parses: Option<&ParseStore>,
    params: &KernelParams,
) -> Result<MetricReport> {
    let missing: Vec<String> = corpus
        .mcqs
        .iter()
        .filter(|m| !generated.0.contains_key(&m.id))
        .map(|m| m.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingMcqs(missing));
    }
    let texts = corpus.text_index();
    let train_idx = train.map(TrainIndex::new);

    let n = corpus.mcqs.len();
    let mut c = Counts::default();
    let mut scores = Vec::new();
    let mut unparseable = 0;
    let mut empty_skipped = 0;

    for mcq in &corpus.mcqs {
        let gen = &generated.0[&mcq.id];
        let body = normalize(&texts[mcq.text_id.as_str()].body);
        c.add(mcq, gen, &body, train_idx.as_ref());

        if let Some(store) = parses {
            let scorer = match store.key(&mcq.id) {
                Some(Ok(t)) => Some(KernelScorer::new(to_grct(t, false), *params)),
                _ => None,
            };
            for (slot, g) in gen.iter().enumerate() {
                if strip_special(g).is_empty() {
                    empty_skipped += 1;
                    continue;
                }
                match (&scorer, store.generated(&mcq.id, slot)) {
                    (Some(s), Some(Ok(tree))) => scores.push(s.score(&to_grct(tree, false))?),
                    _ => unparseable += 1,
                }
            }
        }
    }

    let with_train = |count: usize| train_idx.as_ref().map(|_| pct(count, n));
    Ok(MetricReport {
        n_mcqs: n,
        dis_recall: pct(c.recalled_refs, c.total_refs),
        any_dis_ref_match: pct(c.any_ref_match, n),
        any_dis_in_text: pct(c.any_in_text, n),
        key_in_dis: pct(c.key_in_dis, n),
        any_same_dis: pct(c.any_same, n),
        all_same_dis: pct(c.all_same, n),
        any_dis_rep: pct(c.any_rep, n),
        any_dis_empty: pct(c.any_empty, n),
        any_dis_from_train_dis: with_train(c.from_train_dis),
        ncptk: ncptk_stats(&scores),
        ncptk_unparseable: unparseable,
        ncptk_empty_skipped: empty_skipped,
        any_dis_cap_diff: pct(c.cap_diff, n),
        any_dis_is_train_dis: with_train(c.is_train_dis),
        any_dis_in_any_train_text: with_train(c.in_train_text),
        any_dis_in_train_text_not_own: with_train(c.in_train_text_not_own),
        all_dis_in_text: pct(c.all_in_text, n),
        all_dis_in_train_text: with_train(c.all_in_train_text),
        all_dis_are_train_dis: with_train(c.all_train_dis),
    })
}

#[derive(Default)]
struct Counts {
    recalled_refs: usize,
    total_refs: usize,
    any_ref_match: usize,
    any_in_text: usize,
    key_in_dis: usize,
    any_same: usize,
    all_same: usize,
    any_rep: usize,
    any_empty: usize,
    from_train_dis: usize,
    cap_diff: usize,
    is_train_dis: usize,
    in_train_text: usize,
    in_train_text_not_own: usize,
    all_in_text: usize,
    all_in_train_text: usize,
    all_train_dis: usize,
}

impl Counts {
    fn add(&mut self, mcq: &Mcq, gen: &[String], body: &str, train: Option<&TrainIndex>) {
        let norm: Vec<String> = gen.iter().map(|g| normalize(g)).collect();
        let non_empty: Vec<&String> = norm.iter().filter(|g| !g.is_empty()).collect();
        let bump = |flag: bool, slot: &mut usize| {
            if flag {
                *slot += 1
            }
        };

        let refs: Vec<String> = mcq.distractors.iter().map(|d| normalize(&d.surface)).collect();
        let recalled = refs.iter().filter(|r| norm.contains(r)).count();
        self.recalled_refs += recalled;
        self.total_refs += refs.len();
        bump(recalled > 0, &mut self.any_ref_match);

        let in_text: Vec<bool> = norm.iter().map(|g| contained(g, body)).collect();
        bump(in_text.iter().any(|&b| b), &mut self.any_in_text);
        bump(!norm.is_empty() && in_text.iter().all(|&b| b), &mut self.all_in_text);

        let key = normalize(&mcq.key.surface);
        bump(norm.contains(&key), &mut self.key_in_dis);

        // Empty suggestions are absent rather than identical.
        let distinct: BTreeSet<&String> = non_empty.iter().copied().collect();
        bump(distinct.len() < non_empty.len(), &mut self.any_same);
        bump(non_empty.len() == norm.len() && norm.len() > 1 && distinct.len() == 1, &mut self.all_same);

        bump(norm.iter().any(|g| has_contiguous_repeat(g)), &mut self.any_rep);
        bump(norm.iter().any(String::is_empty), &mut self.any_empty);

        let key_case = case_class(&mcq.key.surface);
        bump(
            gen.iter()
                .filter_map(|g| case_class(g))
                .any(|c| Some(c) != key_case),
            &mut self.cap_diff,
        );

        if let Some(t) = train {
            let is_train: Vec<bool> = norm.iter().map(|g| !g.is_empty() && t.distractors.contains(g)).collect();
            let in_train_text: Vec<bool> = norm.iter().map(|g| t.in_any_text(g)).collect();
            bump(
                is_train.iter().zip(&in_text).any(|(&tr, &own)| tr && !own),
                &mut self.from_train_dis,
            );
            bump(is_train.iter().any(|&b| b), &mut self.is_train_dis);
            bump(in_train_text.iter().any(|&b| b), &mut self.in_train_text);
            bump(
                in_train_text.iter().zip(&in_text).any(|(&tr, &own)| tr && !own),
                &mut self.in_train_text_not_own,
            );
            bump(!non_empty.is_empty() && in_train_text.iter().all(|&b| b), &mut self.all_in_train_text);
            bump(!non_empty.is_empty() && is_train.iter().all(|&b| b), &mut self.all_train_dis);
        }
    }
}
