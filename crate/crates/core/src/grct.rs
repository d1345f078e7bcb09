//! Grammatical-relation-centered trees (GRCT).
//!
//! Every dependency token becomes a relation node labelled with its deprel.
//! Its children are the relation nodes of its dependents plus its own
//! part-of-speech node, ordered by surface position; the POS node optionally
//! carries the word form as a lexical leaf.

use std::fmt;

use crate::error::{Error, Result};
use crate::udtree::DepTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Gr,
    Pos,
    Lex,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrctNode {
    pub kind: NodeKind,
    pub label: String,
    pub children: Vec<GrctNode>,
}

impl GrctNode {
    pub fn leaf(kind: NodeKind, label: impl Into<String>) -> Self {
        GrctNode {
            kind,
            label: label.into(),
            children: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(GrctNode::node_count).sum::<usize>()
    }

    /// Pre-order walk.
    pub fn iter(&self) -> impl Iterator<Item = &GrctNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let n = stack.pop()?;
            stack.extend(n.children.iter().rev());
            Some(n)
        })
    }

    /// Lexical leaves, left to right.
    pub fn lexicals(&self) -> Vec<&str> {
        self.iter()
            .filter(|n| n.kind == NodeKind::Lex)
            .map(|n| n.label.as_str())
            .collect()
    }

    /// Parses the bracketed form produced by `Display`. Node kinds are not
    /// written out, so they are recovered from shape: with lexicals the
    /// leaves are words and their parents POS tags; without, leaves are POS
    /// tags. Everything else is a relation node.
    pub fn parse_bracketed(s: &str, with_lexicals: bool) -> Result<Self> {
        let tokens = tokenize_brackets(s);
        let mut pos = 0;
        let raw = parse_raw(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(Error::parse("bracketed tree", 1, "trailing input after tree"));
        }
        Ok(assign_kinds(raw, with_lexicals))
    }
}

impl fmt::Display for GrctNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", escape(&self.label))?;
        for c in &self.children {
            write!(f, " {c}")?;
        }
        write!(f, ")")
    }
}

fn escape(label: &str) -> String {
    label
        .chars()
        .map(|c| match c {
            '(' => '{',
            ')' => '}',
            c if c.is_whitespace() => '_',
            c => c,
        })
        .collect()
}

struct RawNode {
    label: String,
    children: Vec<RawNode>,
}

fn tokenize_brackets(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' | ')' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn parse_raw(tokens: &[String], pos: &mut usize) -> Result<RawNode> {
    let err = |m: &str, at: usize| Error::parse("bracketed tree", 1, format!("{m} at token {}", at + 1));
    if tokens.get(*pos).map(String::as_str) != Some("(") {
        return Err(err("expected `(`", *pos));
    }
    *pos += 1;
    let label = match tokens.get(*pos) {
        Some(t) if t != "(" && t != ")" => t.clone(),
        _ => return Err(err("expected a label", *pos)),
    };
    *pos += 1;
    let mut children = Vec::new();
    loop {
        match tokens.get(*pos).map(String::as_str) {
            Some(")") => {
                *pos += 1;
                return Ok(RawNode { label, children });
            }
            Some("(") => children.push(parse_raw(tokens, pos)?),
            Some(_) => return Err(err("bare label inside node", *pos)),
            None => return Err(err("unbalanced brackets", *pos)),
        }
    }
}

fn assign_kinds(raw: RawNode, with_lexicals: bool) -> GrctNode {
    let is_leaf = raw.children.is_empty();
    let kind = if is_leaf {
        if with_lexicals {
            NodeKind::Lex
        } else {
            NodeKind::Pos
        }
    } else if with_lexicals && raw.children.len() == 1 && raw.children[0].children.is_empty() {
        NodeKind::Pos
    } else {
        NodeKind::Gr
    };
    GrctNode {
        kind,
        label: raw.label,
        children: raw
            .children
            .into_iter()
            .map(|c| assign_kinds(c, with_lexicals))
            .collect(),
    }
}

/// GRCT of the whole tree, rooted at the relation node of the tree root.
pub fn to_grct(tree: &DepTree, include_lexicals: bool) -> GrctNode {
    grct_at(tree, tree.root(), include_lexicals)
}

/// GRCT of the subtree rooted at `index`.
pub fn grct_at(tree: &DepTree, index: usize, include_lexicals: bool) -> GrctNode {
    let tok = tree.token(index);
    let mut pos = GrctNode::leaf(NodeKind::Pos, tok.upos.clone());
    if include_lexicals {
        pos.children.push(GrctNode::leaf(NodeKind::Lex, tok.form.clone()));
    }
    let deps = tree.children(index);
    let split = deps.partition_point(|&d| d < index);
    let mut children = Vec::with_capacity(deps.len() + 1);
    children.extend(deps[..split].iter().map(|&d| grct_at(tree, d, include_lexicals)));
    children.push(pos);
    children.extend(deps[split..].iter().map(|&d| grct_at(tree, d, include_lexicals)));
    GrctNode {
        kind: NodeKind::Gr,
        label: tok.deprel.clone(),
        children,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::udtree::UdToken;

    fn two() -> DepTree {
        DepTree::new(
            vec![
                UdToken::new(1, "hunden", "NOUN", 2, "nsubj"),
                UdToken::new(2, "springer", "VERB", 0, "root"),
            ],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn single_token() {
        let t = DepTree::new(vec![UdToken::new(1, "x", "X", 0, "root")], vec![]).unwrap();
        assert_eq!(to_grct(&t, true).to_string(), "(root (X (x)))");
        let g = to_grct(&t, false);
        assert_eq!(g.to_string(), "(root (X))");
        assert_eq!(g.children[0].kind, NodeKind::Pos);
    }

    #[test]
    fn two_tokens_order() {
        let g = to_grct(&two(), false);
        assert_eq!(g.to_string(), "(root (nsubj (NOUN)) (VERB))");
        assert_eq!(
            to_grct(&two(), true).to_string(),
            "(root (nsubj (NOUN (hunden))) (VERB (springer)))"
        );
    }

    #[test]
    fn head_pos_interleaved_between_dependents() {
        // a <- b -> c : POS of b sits between the two relation nodes.
        let t = DepTree::new(
            vec![
                UdToken::new(1, "a", "DET", 2, "det"),
                UdToken::new(2, "b", "NOUN", 0, "root"),
                UdToken::new(3, "c", "ADJ", 2, "amod"),
            ],
            vec![],
        )
        .unwrap();
        assert_eq!(to_grct(&t, false).to_string(), "(root (det (DET)) (NOUN) (amod (ADJ)))");
    }

    #[test]
    fn bracketed_round_trip() {
        for lex in [true, false] {
            let g = to_grct(&two(), lex);
            let back = GrctNode::parse_bracketed(&g.to_string(), lex).unwrap();
            assert_eq!(g, back);
        }
    }

    #[test]
    fn bracketed_errors() {
        assert!(GrctNode::parse_bracketed("(root (X)", false).is_err());
        assert!(GrctNode::parse_bracketed("root", false).is_err());
        assert!(GrctNode::parse_bracketed("(root) (x)", false).is_err());
    }
}
