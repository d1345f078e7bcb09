//! Tree-kernel baseline distractor generator.
//!
//! For each MCQ the sentence holding the key is removed from the base text.
//! In the remaining sentences every subtree whose root shares the key root's
//! UPOS tag and universal features is a candidate; candidates are ranked by
//! normalized kernel similarity to the key (both as GRCT without lexicals)
//! and the best `k` are suggested, padded with empty suggestions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Mcq};
use crate::error::{Error, Result};
use crate::grct::to_grct;
use crate::kernel::{KernelParams, KernelScorer};
use crate::parses::{ParseStore, SentenceParse};
use crate::udtree::{subtrees_matching_with, DepTree, FeatureMatch};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistractorSuggestion {
    pub surface: String,
    pub score: Option<f64>,
    pub source_sentence: Option<usize>,
    pub source_root: Option<usize>,
    #[serde(skip)]
    pub tree: Option<DepTree>,
}

impl DistractorSuggestion {
    fn empty() -> Self {
        DistractorSuggestion {
            surface: String::new(),
            score: None,
            source_sentence: None,
            source_root: None,
            tree: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    pub k: usize,
    pub params: KernelParams,
    pub pad: bool,
    pub feature_match: FeatureMatch,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            k: 3,
            params: KernelParams::default(),
            pad: true,
            feature_match: FeatureMatch::Exact,
        }
    }
}

fn overlaps(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

fn sentence_text(s: &SentenceParse, body: &str) -> String {
    match (s.span, s.tree.text()) {
        (Some((a, b)), _) => body.chars().skip(a).take(b - a).collect(),
        (None, Some(t)) => t.to_string(),
        (None, None) => s.tree.surface(),
    }
}

/// Indices of sentences treated as containing the key: those whose span
/// overlaps the key's span, or else the first sentence containing the key
/// surface.
pub fn key_sentences(mcq: &Mcq, body: &str, sentences: &[SentenceParse]) -> Vec<usize> {
    if let Some(key) = mcq.key.char_range() {
        let hits: Vec<usize> = sentences
            .iter()
            .enumerate()
            .filter(|(_, s)| s.span.is_some_and(|sp| overlaps(sp, key)))
            .map(|(i, _)| i)
            .collect();
        if !hits.is_empty() {
            return hits;
        }
    }
    sentences
        .iter()
        .position(|s| sentence_text(s, body).contains(&mcq.key.surface))
        .into_iter()
        .collect()
}

pub fn generate_baseline(
    mcq: &Mcq,
    body: &str,
    sentences: &[SentenceParse],
    key_tree: &DepTree,
    config: &BaselineConfig,
) -> Result<Vec<DistractorSuggestion>> {
    let excluded = key_sentences(mcq, body, sentences);
    let key_root = key_tree.token(key_tree.root());
    let scorer = KernelScorer::new(to_grct(key_tree, false), config.params);

    let mut candidates = Vec::new();
    for (si, sent) in sentences.iter().enumerate() {
        if excluded.contains(&si) {
            continue;
        }
        for sub in subtrees_matching_with(&sent.tree, &key_root.upos, &key_root.feats, config.feature_match) {
            let tree = sub.to_tree();
            let score = scorer.score(&to_grct(&tree, false))?;
            candidates.push(DistractorSuggestion {
                surface: sub.text(),
                score: Some(score),
                source_sentence: Some(si),
                source_root: Some(sub.root_index),
                tree: Some(tree),
            });
        }
    }
    // Stable: equal scores keep (sentence, root) order.
    candidates.sort_by(|a, b| b.score.unwrap().total_cmp(&a.score.unwrap()));
    candidates.truncate(config.k);
    if config.pad {
        candidates.resize_with(config.k, DistractorSuggestion::empty);
    }
    Ok(candidates)
}

/// Runs the baseline over every MCQ of a corpus, ordered by MCQ id.
pub fn run_baseline(
    corpus: &Corpus,
    parses: &ParseStore,
    config: &BaselineConfig,
) -> Result<BTreeMap<String, Vec<DistractorSuggestion>>> {
    let texts = corpus.text_index();
    let mut out = BTreeMap::new();
    for mcq in &corpus.mcqs {
        let key_tree = match parses.key(&mcq.id) {
            Some(Ok(t)) => t,
            Some(Err(e)) => {
                return Err(Error::validation(&mcq.id, format!("key failed to parse: {e}")))
            }
            None => return Err(Error::validation(&mcq.id, "no key parse available")),
        };
        let body = &texts[mcq.text_id.as_str()].body;
        let sentences = parses.text_sentences(&mcq.text_id);
        let sugg = generate_baseline(mcq, body, sentences, key_tree, config)?;
        out.insert(mcq.id.clone(), sugg);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AnswerSpan, SpanKind};
    use crate::udtree::UdToken;

    fn mcq(key: &str, start: Option<usize>) -> Mcq {
        Mcq {
            id: "q".into(),
            text_id: "t".into(),
            stem: "?".into(),
            key: AnswerSpan {
                surface: key.into(),
                start,
                kind: SpanKind::Key,
            },
            distractors: vec![],
        }
    }

    fn noun_key() -> DepTree {
        DepTree::new(
            vec![UdToken::new(1, "skog", "NOUN", 0, "root").with_feats("Number=Sing")],
            vec![],
        )
        .unwrap()
    }

    fn sent(tokens: Vec<UdToken>, span: (usize, usize)) -> SentenceParse {
        SentenceParse {
            tree: DepTree::new(tokens, vec![]).unwrap(),
            span: Some(span),
        }
    }

    #[test]
    fn only_match_in_key_sentence_gives_empty() {
        let body = "Skog finns. Det regnar.";
        let s = vec![
            sent(
                vec![
                    UdToken::new(1, "Skog", "NOUN", 2, "nsubj").with_feats("Number=Sing"),
                    UdToken::new(2, "finns", "VERB", 0, "root"),
                ],
                (0, 11),
            ),
            sent(
                vec![
                    UdToken::new(1, "Det", "PRON", 2, "nsubj"),
                    UdToken::new(2, "regnar", "VERB", 0, "root"),
                ],
                (12, 23),
            ),
        ];
        let out = generate_baseline(&mcq("Skog", Some(0)), body, &s, &noun_key(), &BaselineConfig::default()).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|d| d.surface.is_empty()));
    }

    #[test]
    fn fallback_to_surface_search() {
        let body = "Skog finns. Sjö finns.";
        let s = vec![
            sent(vec![UdToken::new(1, "Skog", "NOUN", 0, "root").with_feats("Number=Sing")], (0, 11)),
            sent(vec![UdToken::new(1, "Sjö", "NOUN", 0, "root").with_feats("Number=Sing")], (12, 22)),
        ];
        let out = generate_baseline(&mcq("Skog", None), body, &s, &noun_key(), &BaselineConfig::default()).unwrap();
        assert_eq!(out[0].surface, "Sjö");
        assert_eq!(out[0].source_sentence, Some(1));
        assert!(out[1].surface.is_empty());
    }

    #[test]
    fn no_sentences_gives_k_empty() {
        let out = generate_baseline(&mcq("x", None), "x", &[], &noun_key(), &BaselineConfig::default()).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|d| d.surface.is_empty() && d.score.is_none()));
    }

    #[test]
    fn padding_can_be_disabled() {
        let cfg = BaselineConfig {
            pad: false,
            ..BaselineConfig::default()
        };
        let out = generate_baseline(&mcq("x", None), "x", &[], &noun_key(), &cfg).unwrap();
        assert!(out.is_empty());
    }
}
