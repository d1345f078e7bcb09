mod oracles;

use mcqdg::grct::{GrctNode, NodeKind};
use mcqdg::kernel::{ncptk, ptk, KernelParams};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tree(seed: u64, max_nodes: usize) -> GrctNode {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1 + (seed as usize) % max_nodes;
    oracles::random_grct(&mut rng, n)
}

#[test]
fn oracle_counts_known_tree() {
    // X(a b): X, X(a), X(b), X(a b), a, b
    let t = GrctNode::parse_bracketed("(X (a) (b))", false).unwrap();
    assert_eq!(oracles::brute_ptk(&t, &t), 6.0);
}

#[test]
fn repeated_children_counted_with_multiplicity() {
    let t = GrctNode {
        kind: NodeKind::Gr,
        label: "X".into(),
        children: vec![GrctNode::leaf(NodeKind::Pos, "a"), GrctNode::leaf(NodeKind::Pos, "a")],
    };
    let p = KernelParams::default();
    assert_eq!(ptk(&t, &t, &p), oracles::brute_ptk(&t, &t));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn ptk_matches_fragment_oracle(s1 in any::<u64>(), s2 in any::<u64>()) {
        let (a, b) = (tree(s1, 6), tree(s2, 6));
        prop_assert_eq!(ptk(&a, &b, &KernelParams::default()), oracles::brute_ptk(&a, &b));
    }

    #[test]
    fn ptk_symmetric(s1 in any::<u64>(), s2 in any::<u64>(), l in 0.05f64..=1.0, m in 0.05f64..=1.0) {
        let (a, b) = (tree(s1, 12), tree(s2, 12));
        let p = KernelParams::new(l, m).unwrap();
        let (x, y) = (ptk(&a, &b, &p), ptk(&b, &a, &p));
        prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
    }

    #[test]
    fn ncptk_in_unit_range_and_self_is_one(s1 in any::<u64>(), s2 in any::<u64>(), l in 0.05f64..=1.0, m in 0.05f64..=1.0) {
        let (a, b) = (tree(s1, 15), tree(s2, 15));
        let p = KernelParams::new(l, m).unwrap();
        let k = ncptk(&a, &b, &p).unwrap();
        prop_assert!((0.0..=1.0).contains(&k));
        prop_assert!((ncptk(&a, &a, &p).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn self_kernel_dominates(s1 in any::<u64>(), s2 in any::<u64>()) {
        let (a, b) = (tree(s1, 8), tree(s2, 8));
        let p = KernelParams::default();
        let k = ptk(&a, &b, &p);
        prop_assert!(k * k <= ptk(&a, &a, &p) * ptk(&b, &b, &p) + 1e-9);
    }
}
