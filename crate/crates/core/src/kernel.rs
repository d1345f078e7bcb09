//! Convolution partial tree kernel over GRCT trees and its normalized form.
//!
//! The kernel sums, over all node pairs, the weighted number of partial tree
//! fragments rooted at both nodes:
//!
//! ```text
//! Δ(n1, n2) = μ (λ² + Σ_{I1, I2, |I1| = |I2|} λ^{d(I1) + d(I2)} Π_k Δ(c1[I1_k], c2[I2_k]))
//! ```
//!
//! where `I1`, `I2` range over increasing child index sequences and `d(I)` is
//! the span `I_last - I_first + 1`. With `λ = μ = 1` this is the plain count
//! of shared fragments. The child-sequence sum is evaluated with the usual
//! prefix-sum dynamic program, one layer per subsequence length.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grct::{GrctNode, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub lambda: f64,
    pub mu: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            lambda: 1.0,
            mu: 1.0,
        }
    }
}

impl KernelParams {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        let ok = |v: f64| v > 0.0 && v <= 1.0;
        if !ok(lambda) || !ok(mu) {
            return Err(Error::InvalidArgument(format!(
                "kernel decays must lie in (0, 1], got lambda={lambda}, mu={mu}"
            )));
        }
        Ok(KernelParams { lambda, mu })
    }
}

/// Post-order arena of a tree with interned labels.
struct Flat {
    labels: Vec<u32>,
    children: Vec<Vec<usize>>,
}

impl Flat {
    fn build(root: &GrctNode, interner: &mut HashMap<(NodeKind, String), u32>) -> Flat {
        let mut flat = Flat {
            labels: Vec::with_capacity(root.node_count()),
            children: Vec::new(),
        };
        flat.push(root, interner);
        flat
    }

    fn push(&mut self, node: &GrctNode, interner: &mut HashMap<(NodeKind, String), u32>) -> usize {
        let kids: Vec<usize> = node.children.iter().map(|c| self.push(c, interner)).collect();
        let next = interner.len() as u32;
        let id = *interner
            .entry((node.kind, node.label.clone()))
            .or_insert(next);
        self.labels.push(id);
        self.children.push(kids);
        self.labels.len() - 1
    }
}

/// Partial tree kernel value between two trees.
pub fn ptk(t1: &GrctNode, t2: &GrctNode, params: &KernelParams) -> f64 {
    let mut interner = HashMap::new();
    let a = Flat::build(t1, &mut interner);
    let b = Flat::build(t2, &mut interner);
    ptk_flat(&a, &b, params)
}

fn ptk_flat(a: &Flat, b: &Flat, params: &KernelParams) -> f64 {
    let (n1, n2) = (a.labels.len(), b.labels.len());
    let lambda2 = params.lambda * params.lambda;
    let mut delta = vec![0.0f64; n1 * n2];
    let mut total = 0.0;
    // Post-order guarantees children are filled before their parents.
    for i in 0..n1 {
        for j in 0..n2 {
            if a.labels[i] != b.labels[j] {
                continue;
            }
            let inner = child_sequences(&a.children[i], &b.children[j], &delta, n2, params.lambda);
            let d = params.mu * (lambda2 + inner);
            delta[i * n2 + j] = d;
            total += d;
        }
    }
    total
}

/// Σ over equal-length child subsequence pairs of λ^{d(I1)+d(I2)} Π Δ.
fn child_sequences(ca: &[usize], cb: &[usize], delta: &[f64], stride: usize, lambda: f64) -> f64 {
    let (n, m) = (ca.len(), cb.len());
    if n == 0 || m == 0 {
        return 0.0;
    }
    let lambda2 = lambda * lambda;
    let d = |p: usize, q: usize| delta[ca[p] * stride + cb[q]];

    // s[p][q]: weighted sum over length-l sequence pairs ending exactly at (p, q).
    let mut s = vec![0.0f64; n * m];
    let mut total = 0.0;
    for p in 0..n {
        for q in 0..m {
            let v = lambda2 * d(p, q);
            s[p * m + q] = v;
            total += v;
        }
    }
    let mut acc = vec![0.0f64; n * m];
    for _len in 2..=n.min(m) {
        // acc[p][q] = Σ_{p' <= p, q' <= q} s[p'][q'] λ^{(p - p') + (q - q')}
        for p in 0..n {
            for q in 0..m {
                let mut v = s[p * m + q];
                if p > 0 {
                    v += lambda * acc[(p - 1) * m + q];
                }
                if q > 0 {
                    v += lambda * acc[p * m + q - 1];
                }
                if p > 0 && q > 0 {
                    v -= lambda2 * acc[(p - 1) * m + q - 1];
                }
                acc[p * m + q] = v;
            }
        }
        let mut any = false;
        for p in 0..n {
            for q in 0..m {
                let v = if p > 0 && q > 0 {
                    d(p, q) * lambda2 * acc[(p - 1) * m + q - 1]
                } else {
                    0.0
                };
                s[p * m + q] = v;
                if v != 0.0 {
                    any = true;
                    total += v;
                }
            }
        }
        if !any {
            break;
        }
    }
    total
}

/// Kernel normalized by the geometric mean of the self-kernels; lies in [0, 1].
pub fn ncptk(t1: &GrctNode, t2: &GrctNode, params: &KernelParams) -> Result<f64> {
    let mut interner = HashMap::new();
    let a = Flat::build(t1, &mut interner);
    let b = Flat::build(t2, &mut interner);
    let k11 = ptk_flat(&a, &a, params);
    let k22 = ptk_flat(&b, &b, params);
    let k12 = ptk_flat(&a, &b, params);
    normalize(k12, k11, k22)
}

pub(crate) fn normalize(k12: f64, k11: f64, k22: f64) -> Result<f64> {
    if !(k11 > 0.0 && k22 > 0.0) || !k11.is_finite() || !k22.is_finite() {
        return Err(Error::InvalidArgument(
            "normalized kernel undefined: zero self-kernel".into(),
        ));
    }
    Ok((k12 / (k11.sqrt() * k22.sqrt())).clamp(0.0, 1.0))
}

/// Scores many candidates against one fixed reference tree, computing the
/// reference self-kernel once.
pub struct KernelScorer {
    reference: GrctNode,
    self_kernel: f64,
    params: KernelParams,
}

impl KernelScorer {
    pub fn new(reference: GrctNode, params: KernelParams) -> Self {
        let self_kernel = ptk(&reference, &reference, &params);
        KernelScorer {
            reference,
            self_kernel,
            params,
        }
    }

    pub fn score(&self, candidate: &GrctNode) -> Result<f64> {
        let mut interner = HashMap::new();
        let a = Flat::build(&self.reference, &mut interner);
        let b = Flat::build(candidate, &mut interner);
        let k22 = ptk_flat(&b, &b, &self.params);
        let k12 = ptk_flat(&a, &b, &self.params);
        normalize(k12, self.self_kernel, k22)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> GrctNode {
        GrctNode::parse_bracketed(s, false).unwrap()
    }

    #[test]
    fn same_leaf_is_one() {
        let a = GrctNode::leaf(NodeKind::Pos, "NOUN");
        assert_eq!(ptk(&a, &a, &KernelParams::default()), 1.0);
    }

    #[test]
    fn different_leaves_are_zero() {
        let a = GrctNode::leaf(NodeKind::Pos, "NOUN");
        let b = GrctNode::leaf(NodeKind::Pos, "VERB");
        assert_eq!(ptk(&a, &b, &KernelParams::default()), 0.0);
    }

    #[test]
    fn kind_is_part_of_the_label() {
        let a = GrctNode::leaf(NodeKind::Pos, "x");
        let b = GrctNode::leaf(NodeKind::Lex, "x");
        assert_eq!(ptk(&a, &b, &KernelParams::default()), 0.0);
    }

    #[test]
    fn root_over_noun_vs_root_over_verb() {
        // Only the bare `root` fragment is shared: K12 = 1. Each self-kernel:
        // fragments root, root(POS), POS -> 2 at the root pair + 1 at the leaf = 3.
        let a = parse("(root (NOUN))");
        let b = parse("(root (VERB))");
        let p = KernelParams::default();
        assert_eq!(ptk(&a, &b, &p), 1.0);
        assert_eq!(ptk(&a, &a, &p), 3.0);
        assert!((ncptk(&a, &b, &p).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn two_children_count() {
        // X(a b) with itself: at the root pair 1 + a + b + ab = 4 ; leaves 1 + 1.
        let t = parse("(X (a) (b))");
        assert_eq!(ptk(&t, &t, &KernelParams::default()), 6.0);
    }

    #[test]
    fn identical_trees_normalize_to_one() {
        let t = parse("(root (nsubj (det (DET)) (NOUN)) (VERB) (obj (NOUN)))");
        let v = ncptk(&t, &t, &KernelParams::new(0.4, 0.4).unwrap()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_decays_single_child_match() {
        // Root pair: μ(λ² + λ²·Δ(leaf)) with Δ(leaf) = μλ².
        let t = parse("(X (a))");
        let (l, m) = (0.5, 0.8);
        let p = KernelParams::new(l, m).unwrap();
        let leaf = m * l * l;
        let expected = m * (l * l + l * l * leaf) + leaf;
        assert!((ptk(&t, &t, &p) - expected).abs() < 1e-15);
    }

    #[test]
    fn gap_weighting() {
        // X(a b a) vs X(a a): sequences of length 2 matching (a, a) use child
        // positions (0, 2) in the first tree -> span 3, and (0, 1) -> span 2.
        let t1 = parse("(X (a) (b) (a))");
        let t2 = parse("(X (a) (a))");
        let l: f64 = 0.5;
        let p = KernelParams::new(l, 1.0).unwrap();
        let leaf = l * l;
        // Single-child matches: 2 a's x 2 a's, each λ^{1+1} leaf.
        let singles = 4.0 * l.powi(2) * leaf;
        let pair = l.powi(3 + 2) * leaf * leaf;
        let root = l * l + singles + pair;
        let expected = root + 4.0 * leaf;
        assert!((ptk(&t1, &t2, &p) - expected).abs() < 1e-15);
    }

    #[test]
    fn invalid_params() {
        assert!(KernelParams::new(0.0, 1.0).is_err());
        assert!(KernelParams::new(1.0, 1.5).is_err());
    }

    #[test]
    fn scorer_matches_ncptk() {
        let a = parse("(root (nsubj (NOUN)) (VERB))");
        let b = parse("(root (NOUN) (amod (ADJ)))");
        let p = KernelParams::default();
        let s = KernelScorer::new(a.clone(), p);
        assert_eq!(s.score(&b).unwrap(), ncptk(&a, &b, &p).unwrap());
    }
}
