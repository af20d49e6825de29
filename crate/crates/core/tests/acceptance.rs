//! Acceptance suite: one line per criterion, each with its tolerance.
//!
//! Run with `cargo test -p levelplan --test acceptance -- --nocapture` to
//! see the report.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use itertools::Itertools;
use levelplan::corpus::{self, RandomSpec};
use levelplan::level_graph::{self, LevelGraph};
use levelplan::oracle::{self, LinearOrders, OracleBudget};
use levelplan::pqtree::{CircularOrder, NodeKind, PqTree};
use levelplan::sim_level::{self, BetweennessInstance};
use levelplan::torus_planarity::{self, build_instance, check_embedding, Planarity, Surface, Witness};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Default)]
struct Witnesses {
    checked: usize,
    invalid: usize,
}

impl Witnesses {
    fn torus(&mut self, p: &Planarity) {
        if let Some(w) = p.witness() {
            self.checked += 1;
            if !witness_ok(w) {
                self.invalid += 1;
            }
        }
    }

    fn plane(&mut self, g: &LevelGraph, orders: &Option<LinearOrders>) {
        if let Some(o) = orders {
            self.checked += 1;
            if !oracle::sim_crossing_free(g, o).unwrap() {
                self.invalid += 1;
            }
        }
    }
}

fn witness_ok(w: &Witness) -> bool {
    let g = &w.graph;
    if !check_embedding(g, &w.embedding).unwrap() {
        return false;
    }
    match w.surface {
        Surface::Torus => true,
        Surface::Radial => g.layer(g.levels()).edges.is_empty() || g.levels() == 1,
        Surface::Cyclic => cyclic_orders_ok(w),
    }
}

/// Cutting every level at its gadget vertex leaves linear orders under
/// which no two input edges of one layer cross.
fn cyclic_orders_ok(w: &Witness) -> bool {
    let g = &w.graph;
    let Some(cuts) = &w.cuts else { return g.levels() == 1 };
    let mut pos = vec![0i64; g.vertex_count()];
    for i in 1..=g.levels() {
        for (r, &v) in w.embedding.level(i).starting_at(&cuts[i - 1]).unwrap().iter().enumerate() {
            pos[v] = r as i64;
        }
    }
    let real: Vec<usize> = (0..g.edges().len()).filter(|&e| w.edge_origin[e].is_some()).collect();
    real.iter().tuple_combinations().all(|(&e, &f)| {
        let (a, b, c, d) = (g.edge(e).from, g.edge(e).to, g.edge(f).from, g.edge(f).to);
        g.level(a) != g.level(c) || a == c || b == d || (pos[a] - pos[c]).signum() * (pos[b] - pos[d]).signum() >= 0
    })
}

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn line(&mut self, n: usize, name: &str, pass: bool, detail: String, tolerance: &str, took: Duration) {
        let status = if pass { "PASS" } else { "FAIL" };
        let text = format!("[{status}] {n} {name}: {detail} (tolerance: {tolerance}; {:.1}s)", took.as_secs_f64());
        println!("{text}");
        self.lines.push((pass, text));
    }
}

type Orders = BTreeSet<CircularOrder<u8>>;

fn all_orders(ground: &[u8]) -> Orders {
    if ground.len() <= 1 {
        return [CircularOrder::new(ground.to_vec()).unwrap()].into();
    }
    ground[1..]
        .iter()
        .copied()
        .permutations(ground.len() - 1)
        .map(|p| CircularOrder::new(std::iter::once(ground[0]).chain(p).collect()).unwrap())
        .collect()
}

fn random_subset(rng: &mut ChaCha8Rng, ground: &[u8]) -> Vec<u8> {
    ground.iter().copied().filter(|_| rng.gen_bool(0.5)).collect()
}

/// A tree built by random reductions, with its order set computed by
/// filtering all circular orders.
fn random_tree(rng: &mut ChaCha8Rng, ground: &[u8]) -> (PqTree<u8>, Orders) {
    let mut t = PqTree::universal(ground.to_vec()).unwrap();
    let mut set = all_orders(ground);
    for _ in 0..rng.gen_range(0..5) {
        let x = random_subset(rng, ground);
        t = t.reduce(&x).unwrap();
        set.retain(|o| o.is_consecutive(|e| x.contains(e)));
    }
    (t, set)
}

fn tree_orders(t: &PqTree<u8>) -> Orders {
    t.enumerate(usize::MAX).unwrap().into_iter().collect()
}

fn pq_algebra(cases: usize) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut bad = 0;
    for _ in 0..cases {
        let n = rng.gen_range(1..=6u8);
        let ground: Vec<u8> = (0..n).collect();
        let (t, set) = random_tree(&mut rng, &ground);
        let x = random_subset(&mut rng, &ground);
        let reduced: Orders = set.iter().filter(|o| o.is_consecutive(|e| x.contains(e))).cloned().collect();
        let ok_reduce = tree_orders(&t.reduce(&x).unwrap()) == reduced;
        let ok_project = x.is_empty() || {
            let projected: Orders = set.iter().map(|o| o.restrict(|e| x.contains(e))).collect();
            let p = t.project(&x).unwrap();
            if set.is_empty() {
                p.is_empty()
            } else {
                tree_orders(&p) == projected
            }
        };
        let (u, uset) = random_tree(&mut rng, &ground);
        let both: Orders = set.intersection(&uset).cloned().collect();
        let ok_intersect = tree_orders(&t.intersect(&u).unwrap()) == both;
        if !(ok_reduce && ok_project && ok_intersect) {
            bad += 1;
        }
    }
    (cases, bad)
}

/// Every graph of the exhaustive family plus random proper and non-proper
/// graphs within the oracle budget.
fn torus_corpus() -> (Vec<LevelGraph>, Vec<LevelGraph>) {
    let exhaustive: Vec<LevelGraph> = corpus::exhaustive_proper(2, 2).into_iter().chain(corpus::exhaustive_proper(3, 2)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut random = Vec::new();
    let budget = OracleBudget::default();
    while random.len() < 600 {
        let spec = RandomSpec { proper: random.len() % 2 == 0, ..RandomSpec::default() };
        let g = corpus::random_graph(&mut rng, &spec);
        if g.make_proper().is_ok_and(|(p, _)| oracle::brute_torus(&p, &budget).is_ok()) {
            random.push(g);
        }
    }
    (exhaustive, random)
}

fn bounds_hold(g: &LevelGraph) -> (bool, bool) {
    if g.levels() < 2 {
        return (true, true);
    }
    let (p, _) = g.make_proper().unwrap();
    let ti = build_instance(&p, None).unwrap();
    let inst = &ti.instance;
    let p_nodes_ok = |inst: &levelplan::spqo::SpqoInstance<usize>| {
        inst.fixedness().iter().all(|(&(t, node), &f)| inst.tree(t).node_kind(node) != Some(NodeKind::P) || f <= 2)
    };
    let fixed = p_nodes_ok(inst) && p_nodes_ok(&inst.normalize().unwrap());
    let vertices: usize = (1..=p.levels()).map(|i| p.level_vertices(i).len()).sum();
    let leaves_ok = inst.leaf_count() <= 3 * vertices + p.edges().len();
    (fixed, leaves_ok)
}

fn sim_2x2_corpus() -> Vec<LevelGraph> {
    let mut out = Vec::new();
    for (n1, n2) in [(1, 1), (1, 2), (2, 1), (1, 3), (3, 1), (2, 2), (2, 3), (3, 2)] {
        out.extend(corpus::exhaustive_sim_2x2(n1, n2));
    }
    let full = corpus::exhaustive_sim_2x2(3, 3);
    let stride = full.len() / 20_000;
    out.extend(full.into_iter().step_by(stride));
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    out.extend((0..500).map(|_| corpus::random_sim_2x2(&mut rng, 4)));
    out
}

fn gadget_corpus() -> Vec<BetweennessInstance> {
    let mut out = corpus::exhaustive_betweenness(4, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    out.extend((0..120).map(|_| corpus::random_betweenness(&mut rng, 5, 3)));
    out
}

#[test]
fn acceptance() {
    println!("\nacceptance report");
    let mut report = Report { lines: Vec::new() };
    let mut witnesses = Witnesses::default();
    let budget = OracleBudget::default();

    let t = Instant::now();
    let (cases, bad) = pq_algebra(1500);
    let took = t.elapsed();
    report.line(
        1,
        "pq-tree algebra",
        bad == 0 && took < Duration::from_secs(60),
        format!("{cases} trees over ground sets of size <= 6, {bad} mismatches for reduce/project/intersect"),
        "0 mismatches, >= 1000 cases, < 60 s",
        took,
    );

    let t = Instant::now();
    let (exhaustive, random) = torus_corpus();
    let mut bad = 0;
    for g in exhaustive.iter().chain(&random) {
        let p = torus_planarity::test_torus(g, None).unwrap();
        witnesses.torus(&p);
        if p.is_planar() != oracle::oracle_torus(g, &budget).unwrap().is_some() {
            bad += 1;
        }
    }
    let took = t.elapsed();
    report.line(
        2,
        "torus vs brute force",
        bad == 0 && random.len() >= 500 && took < Duration::from_secs(600),
        format!("{} exhaustive (k in 2..=3, <= 2 per level) + {} random, {bad} mismatches", exhaustive.len(), random.len()),
        "0 mismatches, >= 500 random, < 10 min",
        took,
    );

    let t = Instant::now();
    let mut fixed_bad = 0;
    let mut leaf_bad = 0;
    let mut instances = 0;
    for g in exhaustive.iter().chain(&random) {
        let cyc = level_graph::cyclic_to_torus(g).unwrap().graph;
        for h in [g, &cyc] {
            let (f, l) = bounds_hold(h);
            instances += 1;
            fixed_bad += usize::from(!f);
            leaf_bad += usize::from(!l);
        }
    }
    report.line(
        3,
        "instance structure",
        fixed_bad == 0 && leaf_bad == 0,
        format!("{instances} instances, {fixed_bad} with a P-node fixedness > 2, {leaf_bad} over the leaf bound"),
        "0 violations",
        t.elapsed(),
    );

    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut tiny: Vec<LevelGraph> = corpus::exhaustive_proper(2, 2).into_iter().chain(corpus::exhaustive_proper(3, 1)).collect();
    while tiny.len() < 315 + 400 {
        let upward = rng.gen_bool(0.5);
        let g = corpus::random_graph(&mut rng, &RandomSpec { upward, max_vertices: 6, max_edges: 7, ..RandomSpec::default() });
        if oracle::brute_cyclic(&g, &budget).is_ok() && oracle::brute_radial(&g, &budget).is_ok() {
            tiny.push(g);
        }
    }
    let (mut cyc_bad, mut rad_bad, mut gadget_bad, mut upward) = (0, 0, 0, 0);
    for g in &tiny {
        let c = torus_planarity::test_cyclic(g).unwrap();
        witnesses.torus(&c);
        cyc_bad += usize::from(c.is_planar() != oracle::brute_cyclic(g, &budget).unwrap().is_some());
        let r = torus_planarity::test_radial(g).unwrap();
        witnesses.torus(&r);
        let direct = oracle::brute_radial(g, &budget).unwrap().is_some();
        rad_bad += usize::from(r.is_planar() != direct);
        if g.is_upward() {
            upward += 1;
            let aug = level_graph::radial_to_torus(g).unwrap().graph;
            if let Ok(v) = oracle::oracle_torus(&aug, &budget) {
                gadget_bad += usize::from(v.is_some() != direct);
            }
        }
    }
    report.line(
        4,
        "cyclic and radial reductions",
        cyc_bad == 0 && rad_bad == 0,
        format!(
            "{} graphs, cyclic {cyc_bad} mismatches, radial {rad_bad} mismatches \
             (radial decided on the torus without a gadget; the four-cycle gadget disagrees on {gadget_bad} of {upward} upward graphs)",
            tiny.len()
        ),
        "0 mismatches",
        t.elapsed(),
    );

    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut n, mut bad) = (0, 0);
    while n < 250 {
        let g = corpus::random_graph(&mut rng, &RandomSpec { max_levels: 5, ..RandomSpec::default() });
        if g.is_proper() {
            continue;
        }
        let (p, _) = g.make_proper().unwrap();
        if oracle::brute_torus(&p, &budget).is_err() {
            continue;
        }
        n += 1;
        let before = torus_planarity::test_torus(&g, None).unwrap();
        let after = torus_planarity::test_torus(&p, None).unwrap();
        witnesses.torus(&before);
        witnesses.torus(&after);
        let brute = oracle::brute_torus(&p, &budget).unwrap().is_some();
        bad += usize::from(before.is_planar() != after.is_planar() || after.is_planar() != brute);
    }
    report.line(
        5,
        "subdivision invariance",
        bad == 0,
        format!("{n} non-proper graphs, {bad} verdict changes"),
        "0 changes, >= 200 graphs",
        t.elapsed(),
    );

    let t = Instant::now();
    let sims = sim_2x2_corpus();
    let mut bad = 0;
    for g in &sims {
        let ours = sim_level::test_sim_2x2(g).unwrap();
        witnesses.plane(g, &ours);
        let brute = oracle::brute_sim_level(g, &budget).unwrap();
        witnesses.plane(g, &brute);
        bad += usize::from(ours.is_some() != brute.is_some());
    }
    report.line(
        6,
        "two graphs on two levels",
        bad == 0,
        format!("{} instances (<= 3 vertices per level, 3x3 sampled to a 20000 cap, plus random), {bad} mismatches", sims.len()),
        "0 mismatches",
        t.elapsed(),
    );

    let t = Instant::now();
    let wide = OracleBudget { max_level_vertices: 64, ..budget };
    let gadgets = gadget_corpus();
    let (mut bad, mut satisfiable) = (0, 0);
    for b in &gadgets {
        let sat = sim_level::solve_betweenness(b).unwrap().is_some();
        satisfiable += usize::from(sat);
        for gadget in [sim_level::gen_gadget_3x2(b).unwrap(), sim_level::gen_gadget_2x3(b).unwrap()] {
            let proper = sim_level::plane_proper(&gadget.graph).unwrap();
            let found = oracle::brute_sim_level(&proper, &wide).unwrap();
            witnesses.plane(&proper, &found);
            bad += usize::from(found.is_some() != sat);
        }
    }
    report.line(
        7,
        "betweenness gadgets",
        bad == 0,
        format!(
            "{} instances ({satisfiable} satisfiable; exhaustive n <= 4, k <= 2; 120 random n <= 5, k <= 3), both families, {bad} mismatches",
            gadgets.len()
        ),
        "0 mismatches, >= 100 random",
        t.elapsed(),
    );

    let t = Instant::now();
    let fixture = LevelGraph::parse(include_str!("fixtures/torus_only.lvl")).unwrap();
    let verdicts = [Surface::Torus, Surface::Radial, Surface::Cyclic].map(|s| {
        let p = torus_planarity::test(&fixture, s).unwrap();
        witnesses.torus(&p);
        (p.is_planar(), oracle::oracle_planar(&fixture, s, &budget).unwrap())
    });
    let size = (fixture.vertex_count(), fixture.edges().len());
    let smaller = corpus::exhaustive_proper(2, 2)
        .into_iter()
        .chain(corpus::exhaustive_proper(3, 2))
        .filter(|g| (g.vertex_count(), g.edges().len()) < size)
        .filter(|g| {
            oracle::oracle_planar(g, Surface::Torus, &budget).unwrap()
                && !oracle::oracle_planar(g, Surface::Radial, &budget).unwrap()
                && !oracle::oracle_planar(g, Surface::Cyclic, &budget).unwrap()
        })
        .count();
    report.line(
        8,
        "torus-only fixture",
        verdicts == [(true, true), (false, false), (false, false)] && smaller == 0,
        format!("{} vertices, {} edges; torus/radial/cyclic = {verdicts:?}; {smaller} smaller examples in the search family", size.0, size.1),
        "exact verdicts",
        t.elapsed(),
    );

    report.line(
        9,
        "witness validity",
        witnesses.invalid == 0 && witnesses.checked > 0,
        format!("{} witnesses checked, {} invalid", witnesses.checked, witnesses.invalid),
        "100% valid",
        Duration::ZERO,
    );

    let failed: Vec<&String> = report.lines.iter().filter(|(p, _)| !p).map(|(_, l)| l).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:#?}");
}
