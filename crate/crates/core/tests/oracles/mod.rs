//! Independent reference implementations shared by the integration and
//! acceptance tests. They favour obviousness over speed.
#![allow(dead_code)]

use std::collections::HashMap;

use mcqdg::grct::{GrctNode, NodeKind};
use rand::Rng;

fn node_key(n: &GrctNode) -> String {
    format!("{:?}:{}", n.kind, n.label)
}

/// Every partial fragment rooted at `n`, with multiplicity: the node alone,
/// or the node over any non-empty ordered subsequence of its children, each
/// child contributing one of its own fragments.
pub fn fragments_at(n: &GrctNode) -> Vec<String> {
    let key = node_key(n);
    let child_frags: Vec<Vec<String>> = n.children.iter().map(fragments_at).collect();
    let mut out = vec![format!("({key})")];
    let m = n.children.len();
    for mask in 1u32..(1 << m) {
        let chosen: Vec<&Vec<String>> = (0..m).filter(|i| mask & (1 << i) != 0).map(|i| &child_frags[i]).collect();
        let mut partial = vec![String::new()];
        for frags in chosen {
            partial = partial
                .iter()
                .flat_map(|p| frags.iter().map(move |f| format!("{p} {f}")))
                .collect();
        }
        out.extend(partial.into_iter().map(|p| format!("({key}{p})")));
    }
    out
}

pub fn fragment_counts(t: &GrctNode) -> HashMap<String, u64> {
    let mut counts = HashMap::new();
    for n in t.iter() {
        for f in fragments_at(n) {
            *counts.entry(f).or_insert(0) += 1;
        }
    }
    counts
}

/// Number of pairs of identical fragments, one from each tree.
pub fn brute_ptk(t1: &GrctNode, t2: &GrctNode) -> f64 {
    let c1 = fragment_counts(t1);
    let c2 = fragment_counts(t2);
    c1.iter()
        .map(|(f, a)| a * c2.get(f).copied().unwrap_or(0))
        .sum::<u64>() as f64
}

/// Random tree with exactly `nodes` nodes over a small label alphabet so
/// that fragments collide often.
pub fn random_grct<R: Rng>(rng: &mut R, nodes: usize) -> GrctNode {
    assert!(nodes >= 1);
    let labels = ["a", "b", "c"];
    let kinds = [NodeKind::Gr, NodeKind::Pos];
    let make = |rng: &mut R| GrctNode::leaf(kinds[rng.gen_range(0..2)], labels[rng.gen_range(0..3)]);
    let mut root = make(rng);
    for _ in 1..nodes {
        let leaf = make(rng);
        insert_random(&mut root, leaf, rng);
    }
    root
}

fn insert_random<R: Rng>(root: &mut GrctNode, leaf: GrctNode, rng: &mut R) {
    let total = root.node_count();
    let target = rng.gen_range(0..total);
    fn walk<R: Rng>(n: &mut GrctNode, target: &mut usize, leaf: &mut Option<GrctNode>, rng: &mut R) {
        if *target == 0 {
            let pos = rng.gen_range(0..=n.children.len());
            n.children.insert(pos, leaf.take().expect("inserted once"));
            return;
        }
        *target -= 1;
        for c in n.children.iter_mut() {
            if leaf.is_none() {
                return;
            }
            let size = c.node_count();
            if *target < size {
                walk(c, target, leaf, rng);
                return;
            }
            *target -= size;
        }
    }
    let mut t = target;
    walk(root, &mut t, &mut Some(leaf), rng);
}

/// Concordant and discordant counts by enumerating ordered rater pairs and
/// ordered item pairs, then removing the 4-fold symmetry.
/// `ranks[mcq][rater][item]`.
pub fn brute_concordance(ranks: &[Vec<Vec<u8>>]) -> (u64, u64) {
    let (mut c, mut d) = (0u64, 0u64);
    for q in ranks {
        for (a, ra) in q.iter().enumerate() {
            for (b, rb) in q.iter().enumerate() {
                if a == b {
                    continue;
                }
                for i in 0..ra.len() {
                    for j in 0..ra.len() {
                        if i == j {
                            continue;
                        }
                        let x = ra[i] as i32 - ra[j] as i32;
                        let y = rb[i] as i32 - rb[j] as i32;
                        if x * y > 0 {
                            c += 1;
                        } else if x * y < 0 {
                            d += 1;
                        }
                    }
                }
            }
        }
    }
    (c / 4, d / 4)
}

/// Lanczos approximation of ln Γ(x), x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn t_density(x: f64, df: f64) -> f64 {
    let ln_norm = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    (ln_norm - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp()
}

/// Two-tailed p by composite Simpson integration of the density over [0, |t|].
pub fn t_two_tailed_p_simpson(t: f64, df: f64) -> f64 {
    let b = t.abs();
    if b == 0.0 {
        return 1.0;
    }
    let n = 20_000;
    let h = b / n as f64;
    let mut s = t_density(0.0, df) + t_density(b, df);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * t_density(i as f64 * h, df);
    }
    1.0 - 2.0 * s * h / 3.0
}
