//! PQ-tree operations checked against explicit sets of circular orders.

use std::collections::BTreeSet;

use itertools::Itertools;
use levelplan::pqtree::{CircularOrder, PqTree};
use proptest::prelude::*;

type Orders = BTreeSet<CircularOrder<u8>>;

fn all_orders(ground: &[u8]) -> Orders {
    if ground.len() <= 1 {
        return [CircularOrder::new(ground.to_vec()).unwrap()].into();
    }
    ground[1..]
        .iter()
        .copied()
        .permutations(ground.len() - 1)
        .map(|p| {
            let mut v = vec![ground[0]];
            v.extend(p);
            CircularOrder::new(v).unwrap()
        })
        .collect()
}

fn filter(orders: &Orders, x: &[u8]) -> Orders {
    orders.iter().filter(|o| o.is_consecutive(|e| x.contains(e))).cloned().collect()
}

fn tree_orders(t: &PqTree<u8>) -> Orders {
    t.enumerate(usize::MAX).unwrap().into_iter().collect()
}

fn subset(ground: &[u8], bits: u32) -> Vec<u8> {
    ground.iter().enumerate().filter(|(i, _)| bits >> i & 1 == 1).map(|(_, &g)| g).collect()
}

/// Builds a tree from a sequence of reductions alongside its explicit set.
fn build(n: usize, masks: &[u32]) -> (PqTree<u8>, Orders) {
    let ground: Vec<u8> = (0..n as u8).collect();
    let mut t = PqTree::universal(ground.clone()).unwrap();
    let mut set = all_orders(&ground);
    for &m in masks {
        let x = subset(&ground, m);
        t = t.reduce(&x).unwrap();
        set = filter(&set, &x);
    }
    (t, set)
}

fn instance() -> impl Strategy<Value = (usize, Vec<u32>)> {
    (1usize..=6).prop_flat_map(|n| (Just(n), prop::collection::vec(0u32..(1 << n), 0..5)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn reduce_matches_filtering((n, masks) in instance()) {
        let (t, set) = build(n, &masks);
        prop_assert_eq!(t.is_empty(), set.is_empty());
        prop_assert_eq!(t.order_count(), set.len() as u128);
        prop_assert_eq!(tree_orders(&t), set.clone());
        prop_assert_eq!(t.any_order().map(|o| set.contains(&o)), (!set.is_empty()).then_some(true));
    }

    #[test]
    fn reduce_order_is_irrelevant((n, masks) in instance()) {
        let (a, _) = build(n, &masks);
        let rev: Vec<u32> = masks.iter().rev().copied().collect();
        let (b, _) = build(n, &rev);
        prop_assert_eq!(a.canonical_form(), b.canonical_form());
    }

    #[test]
    fn project_matches_restriction((n, masks) in instance(), keep in 1u32..64) {
        let (t, set) = build(n, &masks);
        let ground: Vec<u8> = (0..n as u8).collect();
        let x = subset(&ground, keep & ((1 << n) - 1));
        prop_assume!(!x.is_empty());
        let p = t.project(&x).unwrap();
        let expect: Orders = set.iter().map(|o| o.restrict(|e| x.contains(e))).collect();
        prop_assert_eq!(p.ground(), &x[..]);
        prop_assert_eq!(tree_orders(&p), expect);
    }

    #[test]
    fn intersect_matches_set_intersection((n, m1) in instance(), m2 in prop::collection::vec(0u32..64, 0..5)) {
        let m2: Vec<u32> = m2.iter().map(|m| m & ((1 << n) - 1)).collect();
        let (a, sa) = build(n, &m1);
        let (b, sb) = build(n, &m2);
        let i = a.intersect(&b).unwrap();
        let expect: Orders = sa.intersection(&sb).cloned().collect();
        prop_assert_eq!(tree_orders(&i), expect);
        prop_assert_eq!(i.canonical_form(), b.intersect(&a).unwrap().canonical_form());
    }

    #[test]
    fn contains_matches_membership((n, masks) in instance()) {
        let (t, set) = build(n, &masks);
        let ground: Vec<u8> = (0..n as u8).collect();
        for o in all_orders(&ground) {
            prop_assert_eq!(t.contains(&o).unwrap(), set.contains(&o));
        }
    }

    #[test]
    fn canonical_equality_is_set_equality((n, m1) in instance(), m2 in prop::collection::vec(0u32..64, 0..5)) {
        let m2: Vec<u32> = m2.iter().map(|m| m & ((1 << n) - 1)).collect();
        let (a, sa) = build(n, &m1);
        let (b, sb) = build(n, &m2);
        prop_assert_eq!(a == b, sa == sb);
    }

    #[test]
    fn relabel_preserves_orders((n, masks) in instance()) {
        let (t, set) = build(n, &masks);
        let r = t.relabel(|x| 10 - x).unwrap();
        let expect: Orders = set.iter().map(|o| o.map(|x| 10 - x).unwrap()).collect();
        prop_assert_eq!(tree_orders(&r), expect);
    }

    #[test]
    fn constraints_rebuild_the_tree((n, masks) in instance()) {
        let (t, _) = build(n, &masks);
        prop_assume!(!t.is_empty());
        let mut u = PqTree::universal(t.ground().to_vec()).unwrap();
        for c in t.constraints() {
            u = u.reduce(&c).unwrap();
        }
        prop_assert_eq!(u, t);
    }
}
