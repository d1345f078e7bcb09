//! Generation controllers driving a masked-LM predictor.
//!
//! Left-to-right: a single `[MASK]` is appended after the context, the top
//! candidate is committed and a fresh `[MASK]` appended, until `[SEP]` is
//! predicted or the length cap is reached.
//!
//! u-PMLM: the planned number of `[MASK]`s is placed after the context; at
//! every step the position whose top candidate has the highest probability is
//! unmasked (leftmost on ties). The controller closes each distractor with
//! `[SEP]`.
//!
//! In both variants finished distractors become part of the context for the
//! next one.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::Mcq;
use crate::error::{Error, Result};
use crate::extract::Variant;
use crate::predictor::{candidate_token, Predictor, PredictorQuery};
use crate::seeding::item_rng;
use crate::tokens::{Token, TokenSeq, Tokenizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderMode {
    Sf,
    Lf,
    Rnd,
}

impl std::str::FromStr for OrderMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sf" => Ok(OrderMode::Sf),
            "lf" => Ok(OrderMode::Lf),
            "rnd" => Ok(OrderMode::Rnd),
            other => Err(Error::InvalidArgument(format!("unknown order mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub variant: Variant,
    pub max_len: usize,
    pub n_distractors: usize,
    pub top_k: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            variant: Variant::Upmlm,
            max_len: 20,
            n_distractors: 3,
            top_k: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationPlan {
    pub lengths: Vec<usize>,
    pub order_mode: OrderMode,
    pub seed: u64,
}

impl GenerationPlan {
    pub fn ordered(&self) -> Vec<usize> {
        order_lengths(&self.lengths, self.order_mode, self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopReason {
    Sep,
    Length,
    Planned,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Sep => "sep",
            StopReason::Length => "length",
            StopReason::Planned => "planned",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedDistractor {
    pub tokens: Vec<String>,
    pub text: String,
    pub stop: StopReason,
}

/// Lengths to generate: the first `n - 1` reference distractor lengths and the
/// key length. Without references, lengths around the key length
/// (`len - 1, len, len + 1`, at least 1). A single reference is completed
/// from the same key-based list.
pub fn plan_lengths(mcq: &Mcq, tokenizer: &dyn Tokenizer, n: usize) -> Result<Vec<usize>> {
    let key_len = tokenizer.tokenize(&mcq.key.surface)?.len().max(1);
    let mut lengths = Vec::with_capacity(n);
    for d in mcq.distractors.iter().take(n.saturating_sub(1)) {
        lengths.push(tokenizer.tokenize(&d.surface)?.len().max(1));
    }
    if lengths.is_empty() {
        let mut around = vec![key_len.saturating_sub(1).max(1), key_len, key_len + 1];
        around.resize(n, key_len);
        return Ok(around);
    }
    lengths.push(key_len);
    let mut fill = [key_len + 1, key_len.saturating_sub(1).max(1)].into_iter().cycle();
    while lengths.len() < n {
        lengths.push(fill.next().expect("cycle"));
    }
    Ok(lengths)
}

/// Shortest-first, longest-first (both stable) or a seeded shuffle.
pub fn order_lengths(lengths: &[usize], mode: OrderMode, seed: u64) -> Vec<usize> {
    let mut out = lengths.to_vec();
    match mode {
        OrderMode::Sf => out.sort(),
        OrderMode::Lf => out.sort_by(|a, b| b.cmp(a)),
        OrderMode::Rnd => {
            let mut rng = item_rng(seed, "order");
            out.shuffle(&mut rng);
        }
    }
    out
}

fn query(predictor: &dyn Predictor, seq: &TokenSeq, positions: Vec<usize>, top_k: usize) -> Result<crate::predictor::PredictorReply> {
    let q = PredictorQuery::new(seq.clone(), positions, top_k)?;
    let reply = predictor.predict(&q)?;
    reply.validate(&q)?;
    Ok(reply)
}

fn finish(tokens: Vec<String>, stop: StopReason, tokenizer: &dyn Tokenizer) -> Result<GeneratedDistractor> {
    let text = tokenizer.detokenize(&tokens)?;
    Ok(GeneratedDistractor { tokens, text, stop })
}

pub fn generate_l2r(
    ctx: &TokenSeq,
    predictor: &dyn Predictor,
    tokenizer: &dyn Tokenizer,
    config: &GenConfig,
) -> Result<Vec<GeneratedDistractor>> {
    if config.max_len == 0 {
        return Err(Error::InvalidArgument("max_len must be at least 1".into()));
    }
    let mut seq = ctx.clone();
    seq.push(Token::Sep);
    let mut out = Vec::with_capacity(config.n_distractors);
    for _ in 0..config.n_distractors {
        let mut committed: Vec<String> = Vec::new();
        let stop = loop {
            let mut input = seq.clone();
            input.extend_pieces(&committed);
            let pos = input.len();
            input.push(Token::Mask);
            input.check_len("l2r generation")?;
            let reply = query(predictor, &input, vec![pos], config.top_k)?;
            let top = reply.predictions[0].top();
            if candidate_token(top) == Token::Sep {
                break StopReason::Sep;
            }
            committed.push(top.token.clone());
            if committed.len() >= config.max_len {
                break StopReason::Length;
            }
        };
        seq.extend_pieces(&committed);
        seq.push(Token::Sep);
        out.push(finish(committed, stop, tokenizer)?);
    }
    Ok(out)
}

pub fn generate_upmlm(
    ctx: &TokenSeq,
    predictor: &dyn Predictor,
    tokenizer: &dyn Tokenizer,
    lengths: &[usize],
    config: &GenConfig,
) -> Result<Vec<GeneratedDistractor>> {
    if lengths.iter().any(|&l| l == 0) {
        return Err(Error::InvalidArgument("planned distractor lengths must be positive".into()));
    }
    let mut seq = ctx.clone();
    seq.push(Token::Sep);
    let mut out = Vec::with_capacity(lengths.len());
    for &len in lengths {
        let start = seq.len();
        seq.0.extend(std::iter::repeat(Token::Mask).take(len));
        seq.check_len("u-PMLM generation")?;
        let mut open: BTreeSet<usize> = (start..start + len).collect();
        while !open.is_empty() {
            let positions: Vec<usize> = open.iter().copied().collect();
            let reply = query(predictor, &seq, positions, config.top_k)?;
            // Strictly greater keeps the leftmost position on ties.
            let mut best = &reply.predictions[0];
            for p in &reply.predictions[1..] {
                if p.top().p > best.top().p {
                    best = p;
                }
            }
            seq.0[best.position] = Token::Piece(best.top().token.clone());
            open.remove(&best.position);
        }
        let tokens: Vec<String> = seq.0[start..start + len]
            .iter()
            .map(|t| t.as_str().to_string())
            .collect();
        seq.push(Token::Sep);
        out.push(finish(tokens, StopReason::Planned, tokenizer)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AnswerSpan, SpanKind};
    use crate::predictor::{Candidate, MockPredictor, ScriptedReply};
    use crate::tokens::WhitespaceTokenizer;

    fn mcq(key: &str, ds: &[&str]) -> Mcq {
        let span = |s: &str, kind| AnswerSpan {
            surface: s.into(),
            start: None,
            kind,
        };
        Mcq {
            id: "q".into(),
            text_id: "t".into(),
            stem: "?".into(),
            key: span(key, SpanKind::Key),
            distractors: ds.iter().map(|d| span(d, SpanKind::Distractor)).collect(),
        }
    }

    #[test]
    fn plan_from_references() {
        let m = mcq("a b c d", &["x y z", "u v w s t r"]);
        assert_eq!(plan_lengths(&m, &WhitespaceTokenizer, 3).unwrap(), vec![3, 6, 4]);
    }

    #[test]
    fn plan_without_references() {
        assert_eq!(plan_lengths(&mcq("a", &[]), &WhitespaceTokenizer, 3).unwrap(), vec![1, 1, 2]);
        assert_eq!(
            plan_lengths(&mcq("a b c d e", &[]), &WhitespaceTokenizer, 3).unwrap(),
            vec![4, 5, 6]
        );
    }

    #[test]
    fn plan_with_one_reference() {
        assert_eq!(plan_lengths(&mcq("a b", &["x"]), &WhitespaceTokenizer, 3).unwrap(), vec![1, 2, 3]);
    }

    #[test]
    fn orderings() {
        assert_eq!(order_lengths(&[3, 6, 4], OrderMode::Sf, 42), vec![3, 4, 6]);
        assert_eq!(order_lengths(&[3, 6, 4], OrderMode::Lf, 42), vec![6, 4, 3]);
        let a = order_lengths(&[3, 6, 4], OrderMode::Rnd, 42);
        assert_eq!(a, order_lengths(&[3, 6, 4], OrderMode::Rnd, 42));
        let mut sorted = a.clone();
        sorted.sort();
        assert_eq!(sorted, vec![3, 4, 6]);
    }

    fn ctx() -> TokenSeq {
        TokenSeq(vec![Token::Cls, "t".into(), Token::Sep, "q".into(), Token::Sep, "a".into()])
    }

    #[test]
    fn l2r_length_cap() {
        let m = MockPredictor::with_default(ScriptedReply::always(vec![Candidate::new("x", 0.9)]));
        let cfg = GenConfig {
            variant: Variant::L2r,
            n_distractors: 1,
            ..GenConfig::default()
        };
        let out = generate_l2r(&ctx(), &m, &WhitespaceTokenizer, &cfg).unwrap();
        assert_eq!(out[0].tokens.len(), 20);
        assert_eq!(out[0].stop, StopReason::Length);
        assert_eq!(m.queries().len(), 20);
    }

    #[test]
    fn upmlm_single_position() {
        let m = MockPredictor::with_default(ScriptedReply::always(vec![
            Candidate::new("hund", 0.7),
            Candidate::new("katt", 0.2),
        ]));
        let out = generate_upmlm(&ctx(), &m, &WhitespaceTokenizer, &[1], &GenConfig::default()).unwrap();
        assert_eq!(out[0].text, "hund");
        assert_eq!(m.queries().len(), 1);
    }

    #[test]
    fn upmlm_rejects_zero_length() {
        let m = MockPredictor::default();
        assert!(generate_upmlm(&ctx(), &m, &WhitespaceTokenizer, &[0], &GenConfig::default()).is_err());
    }
}
