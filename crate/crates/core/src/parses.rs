//! Directory of CoNLL-U parses exported for a corpus.
//!
//! Sentence blocks are routed by their comment metadata:
//!
//! * `# text_id = T` and `# char_span = START END` (character offsets into
//!   the base text, END exclusive): a sentence of base text `T`;
//! * `# mcq_id = Q` and `# role = key`: the parse of Q's key;
//! * `# mcq_id = Q`, `# role = generated` and `# slot = N`: the parse of the
//!   N-th (0-based) generated distractor;
//! * `# role = distractor` with a slot: a reference distractor parse.
//!
//! When a phrase was split into several sentences only the first block is
//! kept. Blocks that fail validation are remembered as failures.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::udtree::{parse_conllu_blocks, Block, DepTree};

#[derive(Debug, Clone)]
pub struct SentenceParse {
    pub tree: DepTree,
    /// Character range `[start, end)` in the base text.
    pub span: Option<(usize, usize)>,
}

pub type PhraseParse = std::result::Result<DepTree, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PhraseRole {
    Key,
    Distractor(usize),
    Generated(usize),
}

#[derive(Debug, Default)]
pub struct ParseStore {
    pub sentences: BTreeMap<String, Vec<SentenceParse>>,
    pub phrases: BTreeMap<(String, PhraseRole), PhraseParse>,
    pub failed_sentences: Vec<String>,
}

impl ParseStore {
    /// Loads a single `.conllu` file or every `.conllu` file in a directory,
    /// in file-name order.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let files: Vec<PathBuf> = if path.is_dir() {
            let mut v: Vec<PathBuf> = std::fs::read_dir(path)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "conllu"))
                .collect();
            v.sort();
            v
        } else {
            vec![path.to_path_buf()]
        };
        let mut store = ParseStore::default();
        for f in files {
            let blocks = parse_conllu_blocks(BufReader::new(File::open(&f)?))?;
            store.add_blocks(blocks, &f.display().to_string())?;
        }
        store.finish();
        Ok(store)
    }

    pub fn from_conllu(src: &str) -> Result<Self> {
        let mut store = ParseStore::default();
        store.add_blocks(parse_conllu_blocks(src.as_bytes())?, "input")?;
        store.finish();
        Ok(store)
    }

    fn add_blocks(&mut self, blocks: Vec<Block>, context: &str) -> Result<()> {
        for b in blocks {
            let meta = |key: &str| {
                b.comments.iter().find_map(|c| {
                    let (k, v) = c.split_once('=')?;
                    (k.trim() == key).then(|| v.trim().to_string())
                })
            };
            if let Some(text_id) = meta("text_id") {
                let span = match meta("char_span") {
                    Some(s) => Some(parse_span(&s).ok_or_else(|| {
                        Error::parse(context, b.line, format!("malformed char_span `{s}`"))
                    })?),
                    None => None,
                };
                match b.tree {
                    Ok(tree) => self
                        .sentences
                        .entry(text_id)
                        .or_default()
                        .push(SentenceParse { tree, span }),
                    Err(e) => self
                        .failed_sentences
                        .push(format!("{context}:{}: {text_id}: {e}", b.line)),
                }
            } else if let Some(mcq_id) = meta("mcq_id") {
                let slot = || -> Result<usize> {
                    meta("slot")
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| Error::parse(context, b.line, "phrase block without a valid slot"))
                };
                let role = match meta("role").as_deref() {
                    Some("key") => PhraseRole::Key,
                    Some("generated") => PhraseRole::Generated(slot()?),
                    Some("distractor") => PhraseRole::Distractor(slot()?),
                    other => {
                        return Err(Error::parse(
                            context,
                            b.line,
                            format!("unknown phrase role {other:?}"),
                        ))
                    }
                };
                self.phrases.entry((mcq_id, role)).or_insert(b.tree);
            } else {
                return Err(Error::parse(
                    context,
                    b.line,
                    "sentence block has neither text_id nor mcq_id metadata",
                ));
            }
        }
        Ok(())
    }

    fn finish(&mut self) {
        for sents in self.sentences.values_mut() {
            if sents.iter().all(|s| s.span.is_some()) {
                sents.sort_by_key(|s| s.span.map(|(a, _)| a));
            }
        }
    }

    pub fn text_sentences(&self, text_id: &str) -> &[SentenceParse] {
        self.sentences.get(text_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn phrase(&self, mcq_id: &str, role: PhraseRole) -> Option<&PhraseParse> {
        self.phrases.get(&(mcq_id.to_string(), role))
    }

    pub fn key(&self, mcq_id: &str) -> Option<&PhraseParse> {
        self.phrase(mcq_id, PhraseRole::Key)
    }

    pub fn generated(&self, mcq_id: &str, slot: usize) -> Option<&PhraseParse> {
        self.phrase(mcq_id, PhraseRole::Generated(slot))
    }
}

fn parse_span(s: &str) -> Option<(usize, usize)> {
    let mut it = s.split(|c: char| c.is_whitespace() || c == ':' || c == '-').filter(|p| !p.is_empty());
    let a = it.next()?.parse().ok()?;
    let b = it.next()?.parse().ok()?;
    (it.next().is_none() && a <= b).then_some((a, b))
}

/// Writes a phrase tree as a block carrying routing metadata.
pub fn phrase_block(tree: &DepTree, mcq_id: &str, role: PhraseRole) -> String {
    let mut t = tree.clone();
    let mut comments = vec![format!(" mcq_id = {mcq_id}")];
    match role {
        PhraseRole::Key => comments.push(" role = key".into()),
        PhraseRole::Distractor(s) => {
            comments.push(" role = distractor".into());
            comments.push(format!(" slot = {s}"));
        }
        PhraseRole::Generated(s) => {
            comments.push(" role = generated".into());
            comments.push(format!(" slot = {s}"));
        }
    }
    comments.extend(
        tree.comments
            .iter()
            .filter(|c| c.trim_start().starts_with("text"))
            .cloned(),
    );
    t.comments = comments;
    t.to_conllu()
}
