//! Training datapoints for the two generation variants.
//!
//! Both variants share the context `[CLS] T[..limit] [SEP] Q [SEP] A` followed
//! by `[SEP]`; earlier distractors of the same MCQ are always visible and
//! closed by `[SEP]`.
//!
//! * left-to-right: one datapoint per distractor token plus one whose target
//!   is the closing `[SEP]`, with the gold prefix visible (teacher forcing);
//! * u-PMLM: for each distractor, `min(len, max_maskings)` masking ratios
//!   `r ~ U(0, 1)` are drawn and each token is masked with probability `r`.
//!   The current distractor is not followed by `[SEP]`.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Mcq};
use crate::error::{Error, Result};
use crate::io::{write_jsonl_record, Header};
use crate::seeding::item_rng;
use crate::tokens::{Token, TokenSeq, Tokenizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    L2r,
    Upmlm,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2r" | "left-to-right" => Ok(Variant::L2r),
            "upmlm" | "u-pmlm" => Ok(Variant::Upmlm),
            other => Err(Error::InvalidArgument(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub variant: Variant,
    pub max_maskings: usize,
    pub context_limit: usize,
    pub seed: u64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            variant: Variant::Upmlm,
            max_maskings: 20,
            context_limit: 384,
            seed: 42,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_maskings == 0 || self.context_limit == 0 {
            return Err(Error::InvalidArgument(
                "max_maskings and context_limit must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub mcq_id: String,
    pub input: TokenSeq,
    pub targets: Vec<(usize, Token)>,
}

#[derive(Serialize, Deserialize)]
struct ExampleRecord {
    mcq_id: String,
    input: TokenSeq,
    mask_positions: Vec<usize>,
    targets: Vec<Token>,
}

impl TrainingExample {
    fn new(mcq_id: &str, input: TokenSeq, targets: Vec<(usize, Token)>) -> Result<Self> {
        input.check_len(mcq_id)?;
        debug_assert!(targets.iter().all(|(p, _)| input.0[*p].is_mask()));
        Ok(TrainingExample {
            mcq_id: mcq_id.to_string(),
            input,
            targets,
        })
    }

    pub fn mask_positions(&self) -> Vec<usize> {
        self.targets.iter().map(|(p, _)| *p).collect()
    }

    pub fn to_json_line(&self) -> Result<String> {
        let rec = ExampleRecord {
            mcq_id: self.mcq_id.clone(),
            input: self.input.clone(),
            mask_positions: self.mask_positions(),
            targets: self.targets.iter().map(|(_, t)| t.clone()).collect(),
        };
        Ok(serde_json::to_string(&rec)?)
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        let rec: ExampleRecord = serde_json::from_str(line)?;
        if rec.mask_positions.len() != rec.targets.len() || rec.targets.is_empty() {
            return Err(Error::validation(&rec.mcq_id, "mask positions and targets disagree"));
        }
        if rec
            .mask_positions
            .iter()
            .any(|&p| rec.input.0.get(p).map_or(true, |t| !t.is_mask()))
        {
            return Err(Error::validation(&rec.mcq_id, "target position does not hold [MASK]"));
        }
        Ok(TrainingExample {
            mcq_id: rec.mcq_id,
            input: rec.input,
            targets: rec.mask_positions.into_iter().zip(rec.targets).collect(),
        })
    }
}

/// `[CLS] text[..limit] [SEP] stem [SEP] key`.
pub fn build_context(text: &[String], stem: &[String], key: &[String], limit: usize) -> Result<TokenSeq> {
    if stem.is_empty() {
        return Err(Error::InvalidArgument("stem has no tokens".into()));
    }
    if key.is_empty() {
        return Err(Error::InvalidArgument("key has no tokens".into()));
    }
    let mut seq = TokenSeq(Vec::with_capacity(limit.min(text.len()) + stem.len() + key.len() + 3));
    seq.push(Token::Cls);
    seq.extend_pieces(text.iter().take(limit));
    seq.push(Token::Sep);
    seq.extend_pieces(stem);
    seq.push(Token::Sep);
    seq.extend_pieces(key);
    Ok(seq)
}

/// Tokenized pieces of one MCQ.
pub struct TokenizedMcq {
    pub context: TokenSeq,
    pub distractors: Vec<Vec<String>>,
}

pub fn tokenize_mcq(mcq: &Mcq, body: &str, tokenizer: &dyn Tokenizer, limit: usize) -> Result<TokenizedMcq> {
    let context = build_context(
        &tokenizer.tokenize(body)?,
        &tokenizer.tokenize(&mcq.stem)?,
        &tokenizer.tokenize(&mcq.key.surface)?,
        limit,
    )
    .map_err(|e| Error::validation(&mcq.id, e.to_string()))?;
    let distractors = mcq
        .distractors
        .iter()
        .map(|d| tokenizer.tokenize(&d.surface))
        .collect::<Result<_>>()?;
    Ok(TokenizedMcq { context, distractors })
}

fn prefix_with(context: &TokenSeq, done: &[Vec<String>]) -> TokenSeq {
    let mut seq = context.clone();
    seq.push(Token::Sep);
    for d in done {
        seq.extend_pieces(d);
        seq.push(Token::Sep);
    }
    seq
}

pub fn extract_l2r(mcq_id: &str, tm: &TokenizedMcq) -> Result<Vec<TrainingExample>> {
    let mut out = Vec::new();
    for (i, d) in tm.distractors.iter().enumerate() {
        let base = prefix_with(&tm.context, &tm.distractors[..i]);
        for j in 0..=d.len() {
            let mut input = base.clone();
            input.extend_pieces(&d[..j]);
            let pos = input.len();
            input.push(Token::Mask);
            let target = d.get(j).map_or(Token::Sep, |p| Token::Piece(p.clone()));
            out.push(TrainingExample::new(mcq_id, input, vec![(pos, target)])?);
        }
    }
    Ok(out)
}

/// Masks each token independently with probability `ratio`.
pub fn mask_with_ratio<R: Rng>(len: usize, ratio: f64, rng: &mut R) -> Vec<bool> {
    (0..len).map(|_| rng.gen::<f64>() < ratio).collect()
}

pub fn extract_upmlm<R: Rng>(
    mcq_id: &str,
    tm: &TokenizedMcq,
    max_maskings: usize,
    rng: &mut R,
) -> Result<Vec<TrainingExample>> {
    let mut out = Vec::new();
    for (i, d) in tm.distractors.iter().enumerate() {
        let base = prefix_with(&tm.context, &tm.distractors[..i]);
        let offset = base.len();
        for _ in 0..d.len().min(max_maskings) {
            let ratio: f64 = rng.gen();
            let mask = mask_with_ratio(d.len(), ratio, rng);
            if !mask.iter().any(|&m| m) {
                continue;
            }
            let mut input = base.clone();
            let mut targets = Vec::new();
            for (j, (piece, &m)) in d.iter().zip(&mask).enumerate() {
                if m {
                    input.push(Token::Mask);
                    targets.push((offset + j, Token::Piece(piece.clone())));
                } else {
                    input.push(Token::Piece(piece.clone()));
                }
            }
            out.push(TrainingExample::new(mcq_id, input, targets)?);
        }
    }
    Ok(out)
}

/// Extracts datapoints for a whole corpus in corpus order. Each MCQ draws from
/// its own stream derived from `(seed, mcq id)`.
pub fn extract_corpus(
    corpus: &Corpus,
    tokenizer: &dyn Tokenizer,
    config: &ExtractionConfig,
) -> Result<Vec<TrainingExample>> {
    config.validate()?;
    let texts = corpus.text_index();
    let mut out = Vec::new();
    for mcq in &corpus.mcqs {
        let body = &texts[mcq.text_id.as_str()].body;
        let tm = tokenize_mcq(mcq, body, tokenizer, config.context_limit)?;
        match config.variant {
            Variant::L2r => out.extend(extract_l2r(&mcq.id, &tm)?),
            Variant::Upmlm => {
                let mut rng = item_rng(config.seed, &mcq.id);
                out.extend(extract_upmlm(&mcq.id, &tm, config.max_maskings, &mut rng)?)
            }
        }
    }
    Ok(out)
}

pub fn write_examples<W: Write>(mut out: W, header: &Header, examples: &[TrainingExample]) -> Result<()> {
    write_jsonl_record(&mut out, header)?;
    for e in examples {
        out.write_all(e.to_json_line()?.as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_examples(src: &str) -> Result<Vec<TrainingExample>> {
    src.lines()
        .filter(|l| !l.trim().is_empty() && !l.contains(r#""kind":"header""#))
        .map(TrainingExample::from_json_line)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokens::WhitespaceTokenizer;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn words(s: &str) -> Vec<String> {
        WhitespaceTokenizer.tokenize(s).unwrap()
    }

    fn tm(ds: &[&str]) -> TokenizedMcq {
        TokenizedMcq {
            context: build_context(&words("t1 t2 t3"), &words("q"), &words("a"), 384).unwrap(),
            distractors: ds.iter().map(|d| words(d)).collect(),
        }
    }

    #[test]
    fn context_trims_text() {
        let text: Vec<String> = (0..500).map(|i| format!("w{i}")).collect();
        let ctx = build_context(&text, &words("q"), &words("a"), 384).unwrap();
        assert_eq!(ctx.len(), 1 + 384 + 1 + 1 + 1 + 1);
        assert_eq!(ctx.0[384].as_str(), "w383");
        let short = build_context(&text[..10], &words("q"), &words("a"), 384).unwrap();
        assert_eq!(short.len(), 1 + 10 + 4);
    }

    #[test]
    fn empty_stem_is_error() {
        assert!(build_context(&words("t"), &[], &words("a"), 384).is_err());
    }

    #[test]
    fn l2r_table_rows() {
        let ex = extract_l2r("q", &tm(&["d11 d12", "d21 d22 d23"])).unwrap();
        assert_eq!(ex.len(), 7);
        let ctx = "[CLS] t1 t2 t3 [SEP] q [SEP] a";
        let rows: Vec<(String, String)> = ex
            .iter()
            .map(|e| (e.input.to_string(), e.targets[0].1.to_string()))
            .collect();
        let expected = [
            ("[SEP] [MASK]", "d11"),
            ("[SEP] d11 [MASK]", "d12"),
            ("[SEP] d11 d12 [MASK]", "[SEP]"),
            ("[SEP] d11 d12 [SEP] [MASK]", "d21"),
            ("[SEP] d11 d12 [SEP] d21 [MASK]", "d22"),
            ("[SEP] d11 d12 [SEP] d21 d22 [MASK]", "d23"),
            ("[SEP] d11 d12 [SEP] d21 d22 d23 [MASK]", "[SEP]"),
        ];
        for (got, (suffix, target)) in rows.iter().zip(expected) {
            assert_eq!(got.0, format!("{ctx} {suffix}"));
            assert_eq!(got.1, target);
        }
    }

    #[test]
    fn l2r_single_token() {
        let ex = extract_l2r("q", &tm(&["x"])).unwrap();
        assert_eq!(ex.len(), 2);
        assert_eq!(ex[1].targets[0].1, Token::Sep);
    }

    #[test]
    fn full_ratio_masks_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(mask_with_ratio(50, 1.0, &mut rng).into_iter().all(|m| m));
        assert!(mask_with_ratio(50, 0.0, &mut rng).into_iter().all(|m| !m));
    }

    #[test]
    fn upmlm_bounds_and_mask_locations() {
        let t = tm(&["d11 d12", "d21 d22 d23"]);
        let mut rng = item_rng(42, "q");
        let ex = extract_upmlm("q", &t, 20, &mut rng).unwrap();
        assert!(ex.len() <= 5);
        for e in &ex {
            // No trailing [SEP] after the current distractor.
            assert_ne!(e.input.0.last(), Some(&Token::Sep));
            for (p, target) in &e.targets {
                assert!(e.input.0[*p].is_mask());
                assert!(target.as_str().starts_with('d'));
            }
        }
    }

    #[test]
    fn max_maskings_caps_draws() {
        let t = tm(&["a b c d e f g h"]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(extract_upmlm("q", &t, 2, &mut rng).unwrap().len() <= 2);
    }

    #[test]
    fn overflow_names_mcq() {
        let long: Vec<String> = (0..600).map(|i| format!("w{i}")).collect();
        let t = TokenizedMcq {
            context: build_context(&words("t"), &words("q"), &words("a"), 384).unwrap(),
            distractors: vec![long],
        };
        match extract_l2r("q7", &t) {
            Err(Error::SequenceOverflow { id, .. }) => assert_eq!(id, "q7"),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn json_line_round_trip() {
        let ex = extract_l2r("q", &tm(&["d11 d12"])).unwrap();
        for e in ex {
            assert_eq!(TrainingExample::from_json_line(&e.to_json_line().unwrap()).unwrap(), e);
        }
    }
}
