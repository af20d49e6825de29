//! Small level graphs and Betweenness instances for cross-checking the
//! algorithms against the brute-force oracles.

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::level_graph::LevelGraph;
use crate::sim_level::BetweennessInstance;

/// `a0, a1, ...` on level 1, `b0, ...` on level 2, and so on.
pub fn vertex_name(level: usize, index: usize) -> String {
    format!("{}{}", (b'a' + (level - 1) as u8) as char, index)
}

fn with_vertices(sizes: &[usize]) -> LevelGraph {
    let mut g = LevelGraph::new(sizes.len()).unwrap();
    for (l, &n) in sizes.iter().enumerate() {
        for i in 0..n {
            g.add_vertex(vertex_name(l + 1, i), l + 1).unwrap();
        }
    }
    g
}

/// Every proper graph on `k` levels with at most `max_per_level` vertices
/// per level and any set of (non-parallel) edges.
pub fn exhaustive_proper(k: usize, max_per_level: usize) -> Vec<LevelGraph> {
    let mut out = Vec::new();
    for sizes in (0..k).map(|_| 0..=max_per_level).multi_cartesian_product() {
        let base = with_vertices(&sizes);
        let candidates: Vec<(usize, usize)> = (1..=k)
            .flat_map(|i| {
                let j = base.next_level(i);
                let lo = base.level_vertices(i);
                let up = base.level_vertices(j);
                lo.into_iter().cartesian_product(up).collect::<Vec<_>>()
            })
            .collect();
        for mask in 0u64..(1 << candidates.len()) {
            let mut g = base.clone();
            for (b, &(u, v)) in candidates.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    g.add_edge(u, v, 1).unwrap();
                }
            }
            out.push(g);
        }
    }
    out
}

/// Shape limits for [`random_graph`].
#[derive(Debug, Clone, Copy)]
pub struct RandomSpec {
    pub min_levels: usize,
    pub max_levels: usize,
    pub max_vertices: usize,
    pub max_edges: usize,
    /// Only edges between cyclically consecutive levels.
    pub proper: bool,
    /// Only edges from a lower to a higher level.
    pub upward: bool,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec { min_levels: 2, max_levels: 4, max_vertices: 7, max_edges: 8, proper: false, upward: false }
    }
}

/// A random graph without intra-level edges or self-loops.
pub fn random_graph(rng: &mut impl Rng, spec: &RandomSpec) -> LevelGraph {
    let k = rng.gen_range(spec.min_levels..=spec.max_levels);
    let n = rng.gen_range(2.min(spec.max_vertices)..=spec.max_vertices);
    let mut sizes = vec![0; k];
    for _ in 0..n {
        sizes[rng.gen_range(0..k)] += 1;
    }
    let mut g = with_vertices(&sizes);
    let candidates: Vec<(usize, usize)> = (0..n)
        .cartesian_product(0..n)
        .filter(|&(u, v)| {
            let (a, b) = (g.level(u), g.level(v));
            a != b && (!spec.proper || g.next_level(a) == b) && (!spec.upward || a < b)
        })
        .collect();
    let m = rng.gen_range(0..=spec.max_edges.min(candidates.len()));
    for &(u, v) in candidates.choose_multiple(rng, m) {
        g.add_edge(u, v, 1).unwrap();
    }
    g
}

/// Every two-graph instance on two levels with the given level sizes: each
/// pair of vertices on different levels is unused, in graph 1, in graph 2,
/// or in both.
pub fn exhaustive_sim_2x2(n1: usize, n2: usize) -> Vec<LevelGraph> {
    let base = with_vertices(&[n1, n2]);
    let pairs: Vec<(usize, usize)> = (0..n1).cartesian_product(n1..n1 + n2).collect();
    let mut out = Vec::new();
    for code in 0..4u64.pow(pairs.len() as u32) {
        let mut g = base.clone();
        let mut c = code;
        for &(u, v) in &pairs {
            let s = c % 4;
            c /= 4;
            if s & 1 == 1 {
                g.add_edge(u, v, 1).unwrap();
            }
            if s & 2 == 2 {
                g.add_edge(u, v, 2).unwrap();
            }
        }
        out.push(g);
    }
    out
}

/// A random two-graph instance on two levels.
pub fn random_sim_2x2(rng: &mut impl Rng, max_per_level: usize) -> LevelGraph {
    let n1 = rng.gen_range(1..=max_per_level);
    let n2 = rng.gen_range(1..=max_per_level);
    let mut g = with_vertices(&[n1, n2]);
    let p = rng.gen_range(0.2..0.8);
    for u in 0..n1 {
        for v in n1..n1 + n2 {
            for graph in [1, 2] {
                if rng.gen_bool(p) {
                    g.add_edge(u, v, graph).unwrap();
                }
            }
        }
    }
    g
}

fn elems(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{}", i + 1)).collect()
}

/// Triplets up to reversal: `(a, b, c)` with `a < c`.
fn triplet_classes(n: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for b in 0..n {
        for (a, c) in (0..n).filter(|&x| x != b).tuple_combinations() {
            out.push([a, b, c]);
        }
    }
    out
}

/// Every instance with `3..=max_n` elements and `1..=max_k` triplets,
/// taking triplets up to reversal and as a multiset.
pub fn exhaustive_betweenness(max_n: usize, max_k: usize) -> Vec<BetweennessInstance> {
    let mut out = Vec::new();
    for n in 3..=max_n {
        let classes = triplet_classes(n);
        for k in 1..=max_k {
            for combo in classes.iter().copied().combinations_with_replacement(k) {
                out.push(BetweennessInstance::new(elems(n), combo).unwrap());
            }
        }
    }
    out
}

pub fn random_betweenness(rng: &mut impl Rng, max_n: usize, max_k: usize) -> BetweennessInstance {
    let n = rng.gen_range(3..=max_n);
    let k = rng.gen_range(1..=max_k);
    let triplets = (0..k)
        .map(|_| {
            let mut t: Vec<usize> = (0..n).collect();
            t.shuffle(rng);
            [t[0], t[1], t[2]]
        })
        .collect();
    BetweennessInstance::new(elems(n), triplets).unwrap()
}
