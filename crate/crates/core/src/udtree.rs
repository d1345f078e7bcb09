//! CoNLL-U ingestion and dependency trees.
//!
//! Multiword-token ranges (`3-4`) and empty nodes (`5.1`) are skipped, so
//! token indices in a [`DepTree`] are always `1..=n`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};

pub type Features = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UdToken {
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: Features,
    pub head: usize,
    pub deprel: String,
    pub deps: String,
    pub misc: String,
}

impl UdToken {
    /// Minimal token, mostly for fixtures.
    pub fn new(index: usize, form: &str, upos: &str, head: usize, deprel: &str) -> Self {
        UdToken {
            index,
            form: form.to_string(),
            lemma: "_".to_string(),
            upos: upos.to_string(),
            xpos: "_".to_string(),
            feats: Features::new(),
            head,
            deprel: deprel.to_string(),
            deps: "_".to_string(),
            misc: "_".to_string(),
        }
    }

    pub fn with_feats(mut self, feats: &str) -> Self {
        self.feats = parse_feats(feats).expect("fixture feats");
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepTree {
    tokens: Vec<UdToken>,
    root: usize,
    children: Vec<Vec<usize>>,
    /// Raw comment lines without the leading `#`.
    pub comments: Vec<String>,
}

impl DepTree {
    /// Validates a token list: sequential indices, in-range heads, a single
    /// root and no cycles.
    pub fn new(tokens: Vec<UdToken>, comments: Vec<String>) -> Result<Self> {
        Self::build(tokens, comments).map_err(|m| Error::validation("dependency tree", m))
    }

    fn build(tokens: Vec<UdToken>, comments: Vec<String>) -> std::result::Result<Self, String> {
        let n = tokens.len();
        if n == 0 {
            return Err("sentence has no tokens".into());
        }
        let mut root = None;
        let mut children = vec![Vec::new(); n + 1];
        for (i, t) in tokens.iter().enumerate() {
            if t.index != i + 1 {
                return Err(format!("token {} found at position {}", t.index, i + 1));
            }
            if t.head == t.index {
                return Err(format!("token {} is its own head", t.index));
            }
            if t.head > n {
                return Err(format!("token {} has out-of-range head {}", t.index, t.head));
            }
            if t.deprel.is_empty() || t.deprel == "_" {
                return Err(format!("token {} has no deprel", t.index));
            }
            if t.head == 0 {
                if let Some(r) = root {
                    return Err(format!("multiple roots: tokens {r} and {}", t.index));
                }
                root = Some(t.index);
            }
            children[t.head].push(t.index);
        }
        let root = root.ok_or_else(|| "no root token (head 0)".to_string())?;
        // Every token must reach the root by following heads.
        for t in &tokens {
            let mut cur = t.index;
            let mut steps = 0;
            while cur != 0 {
                cur = tokens[cur - 1].head;
                steps += 1;
                if steps > n {
                    return Err(format!("cycle through token {}", t.index));
                }
            }
        }
        Ok(DepTree {
            tokens,
            root,
            children,
            comments,
        })
    }

    pub fn tokens(&self) -> &[UdToken] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Token by 1-based index.
    pub fn token(&self, index: usize) -> &UdToken {
        &self.tokens[index - 1]
    }

    /// Dependents of a token in surface order. Index 0 gives the root.
    pub fn children(&self, index: usize) -> &[usize] {
        &self.children[index]
    }

    /// Value of a `# key = value` comment.
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| {
            let (k, v) = c.split_once('=')?;
            (k.trim() == key).then(|| v.trim())
        })
    }

    pub fn text(&self) -> Option<&str> {
        self.meta("text")
    }

    /// Root and all descendants of `index`, ascending.
    pub fn descendants(&self, index: usize) -> Vec<usize> {
        let mut out = vec![index];
        let mut stack = vec![index];
        while let Some(i) = stack.pop() {
            for &c in &self.children[i] {
                out.push(c);
                stack.push(c);
            }
        }
        out.sort_unstable();
        out
    }

    pub fn subtree(&self, root_index: usize) -> DepSubtree<'_> {
        DepSubtree {
            tree: self,
            root_index,
            members: self.descendants(root_index),
        }
    }

    /// Token forms joined with single spaces.
    pub fn surface(&self) -> String {
        join_forms(self.tokens.iter().map(|t| t.form.as_str()))
    }

    pub fn to_conllu(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            let _ = writeln!(s, "#{}", if c.starts_with(' ') { c.clone() } else { format!(" {c}") });
        }
        for t in &self.tokens {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                t.index,
                t.form,
                t.lemma,
                t.upos,
                t.xpos,
                format_feats(&t.feats),
                t.head,
                t.deprel,
                t.deps,
                t.misc
            );
        }
        s.push('\n');
        s
    }
}

fn join_forms<'a>(forms: impl Iterator<Item = &'a str>) -> String {
    forms.collect::<Vec<_>>().join(" ")
}

/// A token together with all of its descendants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepSubtree<'a> {
    pub tree: &'a DepTree,
    pub root_index: usize,
    pub members: Vec<usize>,
}

impl DepSubtree<'_> {
    pub fn root_token(&self) -> &UdToken {
        self.tree.token(self.root_index)
    }

    /// Member forms in surface order.
    pub fn text(&self) -> String {
        join_forms(self.members.iter().map(|&i| self.tree.token(i).form.as_str()))
    }

    /// Re-indexes the members into a standalone tree. The subtree root becomes
    /// the tree root (head 0, deprel `root`), as it would be when the phrase is
    /// parsed on its own.
    pub fn to_tree(&self) -> DepTree {
        let position: BTreeMap<usize, usize> = self
            .members
            .iter()
            .enumerate()
            .map(|(i, &m)| (m, i + 1))
            .collect();
        let tokens = self
            .members
            .iter()
            .map(|&m| {
                let mut t = self.tree.token(m).clone();
                t.index = position[&m];
                if m == self.root_index {
                    t.head = 0;
                    t.deprel = "root".to_string();
                } else {
                    t.head = position[&t.head];
                }
                t
            })
            .collect();
        DepTree::build(tokens, vec![format!(" text = {}", self.text())])
            .expect("descendant closure of a valid tree is a valid tree")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureMatch {
    /// Attribute=value sets must be identical.
    #[default]
    Exact,
    /// The query features must all be present on the candidate.
    Subset,
}

impl FeatureMatch {
    pub fn matches(self, query: &Features, candidate: &Features) -> bool {
        match self {
            FeatureMatch::Exact => query == candidate,
            FeatureMatch::Subset => query.iter().all(|(k, v)| candidate.get(k) == Some(v)),
        }
    }
}

/// Subtrees whose root has the given UPOS and exactly the given features,
/// ordered by root position.
pub fn subtrees_matching<'a>(tree: &'a DepTree, upos: &str, feats: &Features) -> Vec<DepSubtree<'a>> {
    subtrees_matching_with(tree, upos, feats, FeatureMatch::Exact)
}

pub fn subtrees_matching_with<'a>(
    tree: &'a DepTree,
    upos: &str,
    feats: &Features,
    mode: FeatureMatch,
) -> Vec<DepSubtree<'a>> {
    tree.tokens
        .iter()
        .filter(|t| t.upos == upos && mode.matches(feats, &t.feats))
        .map(|t| tree.subtree(t.index))
        .collect()
}

pub fn parse_feats(s: &str) -> std::result::Result<Features, String> {
    let mut feats = Features::new();
    if s == "_" || s.is_empty() {
        return Ok(feats);
    }
    for pair in s.split('|') {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| format!("malformed feature `{pair}`"))?;
        if feats.insert(k.to_string(), v.to_string()).is_some() {
            return Err(format!("duplicate feature key `{k}`"));
        }
    }
    Ok(feats)
}

pub fn format_feats(feats: &Features) -> String {
    if feats.is_empty() {
        return "_".to_string();
    }
    feats
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join("|")
}

/// One sentence block: either a tree or the reason it was rejected, plus the
/// line on which the block started.
#[derive(Debug)]
pub struct Block {
    pub line: usize,
    pub comments: Vec<String>,
    pub tree: std::result::Result<DepTree, String>,
}

/// Parses every block, keeping going past invalid ones.
pub fn parse_conllu_blocks<R: BufRead>(reader: R) -> Result<Vec<Block>> {
    let mut blocks = Vec::new();
    let mut comments: Vec<String> = Vec::new();
    let mut tokens: Vec<UdToken> = Vec::new();
    let mut error: Option<String> = None;
    let mut start = 0;

    let mut flush = |comments: &mut Vec<String>,
                     tokens: &mut Vec<UdToken>,
                     error: &mut Option<String>,
                     start: usize| {
        if tokens.is_empty() && error.is_none() {
            // Comment-only blocks carry document metadata, not sentences.
            comments.clear();
            return;
        }
        let c = std::mem::take(comments);
        let t = std::mem::take(tokens);
        let tree = match error.take() {
            Some(e) => Err(e),
            None => DepTree::build(t, c.clone()),
        };
        blocks.push(Block {
            line: start,
            comments: c,
            tree,
        });
    };

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() {
            flush(&mut comments, &mut tokens, &mut error, start);
            continue;
        }
        if comments.is_empty() && tokens.is_empty() && error.is_none() {
            start = lineno;
        }
        if let Some(c) = trimmed.strip_prefix('#') {
            comments.push(c.to_string());
            continue;
        }
        if error.is_some() {
            continue;
        }
        match parse_token_line(trimmed) {
            Ok(Some(t)) => tokens.push(t),
            Ok(None) => {}
            Err(e) => error = Some(format!("line {lineno}: {e}")),
        }
    }
    flush(&mut comments, &mut tokens, &mut error, start);
    Ok(blocks)
}

/// Parses a CoNLL-U stream; the first invalid sentence aborts with an error
/// naming the sentence and its starting line.
pub fn parse_conllu<R: BufRead>(reader: R) -> Result<Vec<DepTree>> {
    parse_conllu_blocks(reader)?
        .into_iter()
        .enumerate()
        .map(|(n, b)| {
            b.tree.map_err(|e| {
                let sent = b
                    .comments
                    .iter()
                    .find_map(|c| c.trim().strip_prefix("sent_id").map(|s| s.trim_start_matches([' ', '=']).to_string()))
                    .unwrap_or_else(|| format!("#{}", n + 1));
                Error::parse(format!("sentence {sent}"), b.line, e)
            })
        })
        .collect()
}

fn parse_token_line(line: &str) -> std::result::Result<Option<UdToken>, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(format!("expected 10 columns, found {}", cols.len()));
    }
    if cols[0].contains('-') || cols[0].contains('.') {
        return Ok(None);
    }
    let index: usize = cols[0]
        .parse()
        .map_err(|_| format!("non-integer token id `{}`", cols[0]))?;
    let head: usize = cols[6]
        .parse()
        .map_err(|_| format!("non-integer head `{}`", cols[6]))?;
    Ok(Some(UdToken {
        index,
        form: cols[1].to_string(),
        lemma: cols[2].to_string(),
        upos: cols[3].to_string(),
        xpos: cols[4].to_string(),
        feats: parse_feats(cols[5])?,
        head,
        deprel: cols[7].to_string(),
        deps: cols[8].to_string(),
        misc: cols[9].to_string(),
    }))
}
