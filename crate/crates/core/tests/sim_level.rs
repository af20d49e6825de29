use itertools::Itertools;
use levelplan::corpus;
use levelplan::level_graph::LevelGraph;
use levelplan::oracle::{self, OracleBudget};
use levelplan::sim_level::*;
use levelplan::torus_planarity::test_cyclic;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn b(text: &str) -> BetweennessInstance {
    BetweennessInstance::parse(text).unwrap()
}

fn four_elements() -> BetweennessInstance {
    b("elem s1\nelem s2\nelem s3\nelem s4\ntriplet s1 s2 s4\ntriplet s2 s3 s4\ntriplet s1 s3 s4\n")
}

fn unsat() -> BetweennessInstance {
    b("elem a\nelem b\nelem c\ntriplet a b c\ntriplet b c a\n")
}

fn budget() -> OracleBudget {
    OracleBudget { max_level_vertices: 64, ..OracleBudget::default() }
}

/// Checks a gadget against its instance and, when planar, the row and
/// triplet properties of the witness.
fn check_gadget(inst: &BetweennessInstance, gadget: &Gadget) -> bool {
    let sat = solve_betweenness(inst).unwrap().is_some();
    let proper = plane_proper(&gadget.graph).unwrap();
    let full = oracle::brute_sim_level(&proper, &budget()).unwrap();
    let found = oracle_sim(&gadget.graph, &budget()).unwrap();
    assert_eq!(found.is_some(), sat, "{}", inst.to_text());
    assert_eq!(full.is_some(), sat);
    if let (Some(orders), Some(full)) = (&found, &full) {
        assert!(oracle::sim_crossing_free(&proper, full).unwrap());
        assert!(rows_agree(gadget, orders));
        assert!(triplets_between(gadget, inst, orders));
        let order = betweenness_order(gadget, orders);
        assert!(inst.satisfied_by(&order));
        assert_eq!(order, normalize_order(order.clone()));
    }
    sat
}

#[test]
fn four_element_gadgets_are_planar() {
    let inst = four_elements();
    assert_eq!(solve_betweenness(&inst).unwrap(), Some(vec![0, 1, 2, 3]));
    let g3 = gen_gadget_3x2(&inst).unwrap();
    assert_eq!(g3.graph.vertex_count(), 26);
    assert!(check_gadget(&inst, &g3));
    let g2 = gen_gadget_2x3(&inst).unwrap();
    assert_eq!(g2.graph.levels(), 3);
    assert_eq!(g2.graph.graph_count(), 2);
    assert!(check_gadget(&inst, &g2));
}

#[test]
fn unsatisfiable_instance_gives_nonplanar_gadgets() {
    let inst = unsat();
    assert_eq!(solve_betweenness(&inst).unwrap(), None);
    assert!(!check_gadget(&inst, &gen_gadget_3x2(&inst).unwrap()));
    assert!(!check_gadget(&inst, &gen_gadget_2x3(&inst).unwrap()));
}

#[test]
fn single_triplet_is_planar() {
    let inst = b("elem p\nelem q\nelem r\ntriplet p q r\n");
    let g = gen_gadget_3x2(&inst).unwrap();
    assert_eq!(g.graph.vertex_count(), 3 + 2);
    assert!(g.links.is_empty());
    assert!(check_gadget(&inst, &g));
    assert!(check_gadget(&inst, &gen_gadget_2x3(&inst).unwrap()));
}

#[test]
fn gadget_vertex_counts() {
    for inst in corpus::exhaustive_betweenness(4, 2) {
        let (n, k) = (inst.elems.len(), inst.triplets.len());
        let g = gen_gadget_3x2(&inst).unwrap();
        assert_eq!(g.graph.vertex_count(), n * k + n * (k - 1) + 2 * k);
        assert_eq!(gen_gadget_2x3(&inst).unwrap().graph.vertex_count(), n * k + n * (k - 1) + 2 * k);
    }
}

#[test]
fn gadgets_match_betweenness_on_small_corpus() {
    for inst in corpus::exhaustive_betweenness(4, 2) {
        let a = check_gadget(&inst, &gen_gadget_3x2(&inst).unwrap());
        let c = check_gadget(&inst, &gen_gadget_2x3(&inst).unwrap());
        assert_eq!(a, c);
    }
}

#[test]
fn betweenness_text_round_trips() {
    let inst = four_elements();
    assert_eq!(BetweennessInstance::parse(&inst.to_text()).unwrap(), inst);
}

fn two_by_two(text: &str) -> LevelGraph {
    LevelGraph::parse(text).unwrap()
}

#[test]
fn disjoint_edges_reduce_to_one_edge_per_direction() {
    let g = two_by_two("levels 2\nv a 1\nv b 1\nv c 2\nv d 2\ne a c 1\ne b d 2");
    let cyc = reduce_2x2_to_cyclic(&g).unwrap();
    assert_eq!(cyc.edges().len(), 2);
    assert_eq!(cyc.level(cyc.edge(0).from), 1);
    assert_eq!(cyc.level(cyc.edge(1).from), 2);
    assert!(test_cyclic(&cyc).unwrap().is_planar());
    assert!(test_sim_2x2(&g).unwrap().is_some());
}

#[test]
fn shared_k22_matches_oracle() {
    let g = two_by_two(
        "levels 2\nv a 1\nv b 1\nv c 2\nv d 2\n\
         e a c 1\ne a d 1\ne b c 1\ne b d 1\ne a c 2\ne a d 2\ne b c 2\ne b d 2",
    );
    let ours = test_sim_2x2(&g).unwrap();
    let brute = oracle::brute_sim_level(&g, &OracleBudget::default()).unwrap();
    assert_eq!(ours.is_some(), brute.is_some());
    assert!(ours.is_none());
}

#[test]
fn wrong_shapes_are_rejected() {
    let three = two_by_two("levels 3\nv a 1\nv b 2");
    assert!(matches!(reduce_2x2_to_cyclic(&three), Err(SimError::WrongShape(_))));
    let g3 = two_by_two("levels 2\nv a 1\nv b 2\ne a b 3");
    assert!(matches!(test_sim_2x2(&g3), Err(SimError::WrongShape(_))));
}

#[test]
fn two_by_two_matches_oracle_exhaustively() {
    for (n1, n2) in [(1, 1), (1, 2), (2, 1), (2, 2), (1, 3), (3, 1)] {
        for g in corpus::exhaustive_sim_2x2(n1, n2) {
            let ours = test_sim_2x2(&g).unwrap();
            let brute = oracle::brute_sim_level(&g, &OracleBudget::default()).unwrap();
            assert_eq!(ours.is_some(), brute.is_some(), "{g}");
            if let Some(o) = ours {
                assert!(oracle::sim_crossing_free(&g, &o).unwrap());
            }
        }
    }
}

#[test]
fn two_by_two_matches_oracle_randomly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..300 {
        let g = corpus::random_sim_2x2(&mut rng, 4);
        let ours = test_sim_2x2(&g).unwrap();
        let brute = oracle::brute_sim_level(&g, &OracleBudget::default()).unwrap();
        assert_eq!(ours.is_some(), brute.is_some(), "{g}");
        if let Some(o) = ours {
            assert!(oracle::sim_crossing_free(&g, &o).unwrap());
        }
    }
}

#[test]
fn pair_search_agrees_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let g = corpus::random_sim_2x2(&mut rng, 4);
        let fast = oracle::brute_sim_level(&g, &OracleBudget::default()).unwrap();
        let slow = oracle::enumerate_sim_level(&g, &OracleBudget::default()).unwrap();
        assert_eq!(fast.is_some(), slow.is_some(), "{g}");
        if let Some(o) = fast {
            assert!(oracle::sim_crossing_free(&g, &o).unwrap());
        }
    }
}

#[test]
fn normalize_order_picks_smaller_direction() {
    assert_eq!(normalize_order(vec![2, 0, 1]), vec![1, 0, 2]);
    assert_eq!(normalize_order(vec![0, 2, 1]), vec![0, 2, 1]);
    for p in (0..4).permutations(4) {
        let n = normalize_order(p.clone());
        let mut r = p.clone();
        r.reverse();
        assert!(n == p || n == r);
        assert!(n <= p && n <= r);
    }
}
