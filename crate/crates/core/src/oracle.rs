//! Brute-force deciders used as ground truth for the PQ-tree pipeline.
//!
//! Everything here enumerates explicitly and refuses inputs beyond an
//! [`OracleBudget`] instead of truncating. Enumeration order is
//! lexicographic, so the witness returned for a given input never changes.

use std::collections::HashMap;

use itertools::Itertools;

use crate::level_graph::{EdgeId, GraphError, Layer, LevelGraph, VertexId};
use crate::pqtree::CircularOrder;
use crate::torus_planarity::{Surface, TorusEmbedding};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("oracle budget exceeded: {0}")]
    Budget(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("a graph on a single level cannot have edges")]
    SingleLevelWithEdges,
    #[error("edge {0} does not join adjacent levels")]
    NotAdjacentLevels(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_level_vertices: usize,
    pub max_layer_edges: usize,
    /// Cap on the number of order tuples (or search nodes) visited.
    pub max_enumeration: u128,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_level_vertices: 7, max_layer_edges: 8, max_enumeration: 20_000_000 }
    }
}

/// Linear vertex order per level, index `i - 1` for level `i`.
pub type LinearOrders = Vec<Vec<VertexId>>;

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// All circular orders of `items` in lexicographic order (first element
/// fixed to the smallest).
fn circular_orders(items: &[usize]) -> Vec<CircularOrder<usize>> {
    let mut sorted = items.to_vec();
    sorted.sort_unstable();
    if sorted.len() <= 1 {
        return vec![CircularOrder::new(sorted).unwrap()];
    }
    let first = sorted[0];
    sorted[1..]
        .iter()
        .copied()
        .permutations(sorted.len() - 1)
        .map(|rest| {
            let mut v = Vec::with_capacity(rest.len() + 1);
            v.push(first);
            v.extend(rest);
            CircularOrder::new(v).unwrap()
        })
        .collect()
}

fn check_budget(g: &LevelGraph, budget: &OracleBudget, circular: bool) -> Result<(), OracleError> {
    let mut total: u128 = 1;
    for i in 1..=g.levels() {
        let n = g.level_vertices(i).len();
        if n > budget.max_level_vertices {
            return Err(OracleError::Budget(format!("level {i} has {n} vertices, limit {}", budget.max_level_vertices)));
        }
        total = total.saturating_mul(if circular { factorial(n.saturating_sub(1)) } else { factorial(n) });
    }
    if total > budget.max_enumeration {
        return Err(OracleError::Budget(format!("{total} order tuples, limit {}", budget.max_enumeration)));
    }
    Ok(())
}

fn check_layer_budget(layer: &Layer, budget: &OracleBudget) -> Result<(), OracleError> {
    if layer.edges.len() > budget.max_layer_edges {
        return Err(OracleError::Budget(format!(
            "layer {} has {} edges, limit {}",
            layer.index,
            layer.edges.len(),
            budget.max_layer_edges
        )));
    }
    Ok(())
}

/// Lower and upper vertex sequences of an edge order with repeated runs
/// collapsed, or `None` if some vertex's edges are not contiguous.
fn endpoint_orders(g: &LevelGraph, order: &[EdgeId]) -> Option<(CircularOrder<VertexId>, CircularOrder<VertexId>)> {
    let collapse = |seq: Vec<VertexId>| -> Option<CircularOrder<VertexId>> {
        let n = seq.len();
        let runs: Vec<VertexId> = (0..n).filter(|&i| seq[i] != seq[(i + n - 1) % n]).map(|i| seq[i]).collect();
        if runs.is_empty() {
            return Some(CircularOrder::new(vec![seq[0]]).unwrap());
        }
        CircularOrder::new(runs).ok()
    };
    let lower = collapse(order.iter().map(|&e| g.edge(e).from).collect())?;
    let upper = collapse(order.iter().map(|&e| g.edge(e).to).collect())?;
    Some((lower, upper))
}

/// The first circular edge order of `layer` that keeps every vertex's
/// edges together and induces `lower` and `upper` on the vertices it
/// touches.
pub fn brute_layer_feasible(
    g: &LevelGraph,
    layer: &Layer,
    lower: &CircularOrder<VertexId>,
    upper: &CircularOrder<VertexId>,
    budget: &OracleBudget,
) -> Result<Option<CircularOrder<EdgeId>>, OracleError> {
    check_layer_budget(layer, budget)?;
    if layer.edges.is_empty() {
        return Ok(Some(CircularOrder::new(Vec::new()).unwrap()));
    }
    for o in circular_orders(&layer.edges) {
        if let Some((lo, up)) = endpoint_orders(g, o.as_slice()) {
            if lower.restrict(|v| lo.contains(v)) == lo && upper.restrict(|v| up.contains(v)) == up {
                return Ok(Some(o));
            }
        }
    }
    Ok(None)
}

/// For each pair of induced endpoint orders, the first edge order that
/// realises it.
fn layer_table(
    g: &LevelGraph,
    layer: &Layer,
    budget: &OracleBudget,
) -> Result<HashMap<(CircularOrder<VertexId>, CircularOrder<VertexId>), CircularOrder<EdgeId>>, OracleError> {
    check_layer_budget(layer, budget)?;
    let mut table = HashMap::new();
    for o in circular_orders(&layer.edges) {
        if let Some(key) = endpoint_orders(g, o.as_slice()) {
            table.entry(key).or_insert(o);
        }
    }
    Ok(table)
}

/// Calls `visit` on every tuple of per-level orders, first level varying
/// slowest, until it returns `Some`.
fn search_tuples<O, R>(choices: &[Vec<O>], mut visit: impl FnMut(&[&O]) -> Option<R>) -> Option<R> {
    if choices.iter().any(|c| c.is_empty()) {
        return None;
    }
    let mut idx = vec![0; choices.len()];
    loop {
        let tuple: Vec<&O> = idx.iter().enumerate().map(|(l, &i)| &choices[l][i]).collect();
        if let Some(r) = visit(&tuple) {
            return Some(r);
        }
        let mut l = choices.len();
        loop {
            if l == 0 {
                return None;
            }
            l -= 1;
            idx[l] += 1;
            if idx[l] < choices[l].len() {
                break;
            }
            idx[l] = 0;
        }
    }
}

/// Which layers a surface uses: all of them on the torus, all but the
/// wrap-around layer on the standing cylinder.
fn drawn_layers(g: &LevelGraph, wrap: bool) -> Vec<usize> {
    let k = g.levels();
    (1..=k).filter(|&i| wrap || i < k).collect()
}

fn brute_circular(g: &LevelGraph, budget: &OracleBudget, wrap: bool) -> Result<Option<TorusEmbedding>, OracleError> {
    let k = g.levels();
    g.check_proper()?;
    check_budget(g, budget, true)?;
    let layers: Vec<Layer> = drawn_layers(g, wrap).into_iter().map(|i| g.layer(i)).filter(|l| !l.edges.is_empty()).collect();
    let tables = layers.iter().map(|l| layer_table(g, l, budget)).collect::<Result<Vec<_>, _>>()?;
    let choices: Vec<Vec<CircularOrder<VertexId>>> = (1..=k).map(|i| circular_orders(&g.level_vertices(i))).collect();
    let found = search_tuples(&choices, |tuple| {
        let mut edge_orders = Vec::new();
        for (layer, table) in layers.iter().zip(&tables) {
            let j = g.next_level(layer.index);
            let lo = lower_active(g, layer);
            let up = upper_active(g, layer);
            let key = (tuple[layer.index - 1].restrict(|v| lo.contains(v)), tuple[j - 1].restrict(|v| up.contains(v)));
            edge_orders.push((layer.index, table.get(&key)?.clone()));
        }
        Some(embedding(g, tuple, edge_orders))
    });
    Ok(found)
}

fn lower_active(g: &LevelGraph, layer: &Layer) -> Vec<VertexId> {
    layer.edges.iter().map(|&e| g.edge(e).from).collect()
}

fn upper_active(g: &LevelGraph, layer: &Layer) -> Vec<VertexId> {
    layer.edges.iter().map(|&e| g.edge(e).to).collect()
}

fn embedding(g: &LevelGraph, levels: &[&CircularOrder<VertexId>], edge_orders: Vec<(usize, CircularOrder<EdgeId>)>) -> TorusEmbedding {
    let mut layers: Vec<CircularOrder<EdgeId>> = (0..g.levels()).map(|_| CircularOrder::new(Vec::new()).unwrap()).collect();
    for (i, o) in edge_orders {
        layers[i - 1] = o;
    }
    TorusEmbedding { levels: levels.iter().map(|&o| o.clone()).collect(), layers }
}

/// Torus level planarity of a proper graph by enumerating circular orders
/// on every level and testing each layer.
pub fn brute_torus(g: &LevelGraph, budget: &OracleBudget) -> Result<Option<TorusEmbedding>, OracleError> {
    brute_circular(g, budget, true)
}

/// Same decision as [`brute_torus`], calling [`brute_layer_feasible`] for
/// every layer of every tuple instead of tabulating layers once.
pub fn brute_torus_raw(g: &LevelGraph, budget: &OracleBudget) -> Result<Option<TorusEmbedding>, OracleError> {
    let k = g.levels();
    g.check_proper()?;
    check_budget(g, budget, true)?;
    let choices: Vec<Vec<CircularOrder<VertexId>>> = (1..=k).map(|i| circular_orders(&g.level_vertices(i))).collect();
    let layers: Vec<Layer> = (1..=k).map(|i| g.layer(i)).collect();
    for l in &layers {
        check_layer_budget(l, budget)?;
    }
    let found = search_tuples(&choices, |tuple| {
        let mut edge_orders = Vec::new();
        for layer in &layers {
            let j = g.next_level(layer.index);
            let o = brute_layer_feasible(g, layer, tuple[layer.index - 1], tuple[j - 1], budget).ok()??;
            edge_orders.push((layer.index, o));
        }
        Some(embedding(g, tuple, edge_orders))
    });
    Ok(found)
}

/// Like [`brute_torus`], but only level orders accepted by `allowed`
/// (level index, order) are tried.
pub fn brute_torus_constrained(
    g: &LevelGraph,
    budget: &OracleBudget,
    mut allowed: impl FnMut(usize, &CircularOrder<VertexId>) -> bool,
) -> Result<Option<TorusEmbedding>, OracleError> {
    let k = g.levels();
    g.check_proper()?;
    check_budget(g, budget, true)?;
    let layers: Vec<Layer> = (1..=k).map(|i| g.layer(i)).filter(|l| !l.edges.is_empty()).collect();
    let tables = layers.iter().map(|l| layer_table(g, l, budget)).collect::<Result<Vec<_>, _>>()?;
    let choices: Vec<Vec<CircularOrder<VertexId>>> = (1..=k)
        .map(|i| circular_orders(&g.level_vertices(i)).into_iter().filter(|o| allowed(i, o)).collect())
        .collect();
    let found = search_tuples(&choices, |tuple| {
        let mut edge_orders = Vec::new();
        for (layer, table) in layers.iter().zip(&tables) {
            let j = g.next_level(layer.index);
            let lo = lower_active(g, layer);
            let up = upper_active(g, layer);
            let key = (tuple[layer.index - 1].restrict(|v| lo.contains(v)), tuple[j - 1].restrict(|v| up.contains(v)));
            edge_orders.push((layer.index, table.get(&key)?.clone()));
        }
        Some(embedding(g, tuple, edge_orders))
    });
    Ok(found)
}

/// Radial level planarity, decided directly on the standing cylinder:
/// circular level orders, no layer between the last and first level.
pub fn brute_radial(g: &LevelGraph, budget: &OracleBudget) -> Result<Option<TorusEmbedding>, OracleError> {
    if g.levels() == 1 {
        return single_level(g).map(|ok| ok.then(|| trivial(g)));
    }
    if !g.is_upward() {
        return Ok(None);
    }
    let (p, _) = g.make_proper()?;
    brute_circular(&p, budget, false)
}

/// Cyclic level planarity, decided directly on the rolling cylinder:
/// linear level orders, and two edges of one layer cross iff their
/// endpoints are ordered oppositely on the two levels.
pub fn brute_cyclic(g: &LevelGraph, budget: &OracleBudget) -> Result<Option<LinearOrders>, OracleError> {
    if g.levels() == 1 {
        return single_level(g).map(|ok| ok.then(|| vec![g.level_vertices(1)]));
    }
    let (p, _) = g.make_proper()?;
    check_budget(&p, budget, false)?;
    let k = p.levels();
    let choices: Vec<Vec<Vec<VertexId>>> =
        (1..=k).map(|i| p.level_vertices(i).into_iter().permutations(p.level_vertices(i).len()).collect()).collect();
    let layers: Vec<Vec<(VertexId, VertexId)>> =
        (1..=k).map(|i| p.layer(i).edges.iter().map(|&e| (p.edge(e).from, p.edge(e).to)).collect()).collect();
    let found = search_tuples(&choices, |tuple| {
        let mut pos = vec![0usize; p.vertex_count()];
        for order in tuple {
            for (r, &v) in order.iter().enumerate() {
                pos[v] = r;
            }
        }
        let ok = layers.iter().all(|edges| crossing_free(edges, &pos));
        ok.then(|| tuple.iter().map(|o| o.iter().copied().filter(|&v| v < g.vertex_count()).collect()).collect())
    });
    Ok(found)
}

fn crossing_free(edges: &[(VertexId, VertexId)], pos: &[usize]) -> bool {
    edges.iter().tuple_combinations().all(|(&(a, b), &(c, d))| {
        let s = (pos[a] as i64 - pos[c] as i64).signum() * (pos[b] as i64 - pos[d] as i64).signum();
        s >= 0
    })
}

fn single_level(g: &LevelGraph) -> Result<bool, OracleError> {
    if g.edges().is_empty() {
        Ok(true)
    } else {
        Err(OracleError::SingleLevelWithEdges)
    }
}

fn trivial(g: &LevelGraph) -> TorusEmbedding {
    let k = g.levels();
    TorusEmbedding {
        levels: (1..=k).map(|i| CircularOrder::new(g.level_vertices(i)).unwrap()).collect(),
        layers: (1..=k).map(|_| CircularOrder::new(Vec::new()).unwrap()).collect(),
    }
}

/// Torus level planarity of any graph: subdivides, then [`brute_torus`].
pub fn oracle_torus(g: &LevelGraph, budget: &OracleBudget) -> Result<Option<TorusEmbedding>, OracleError> {
    if g.levels() == 1 {
        return single_level(g).map(|ok| ok.then(|| trivial(g)));
    }
    let (p, _) = g.make_proper()?;
    brute_torus(&p, budget)
}

/// Oracle verdict for `surface`.
pub fn oracle_planar(g: &LevelGraph, surface: Surface, budget: &OracleBudget) -> Result<bool, OracleError> {
    Ok(match surface {
        Surface::Torus => oracle_torus(g, budget)?.is_some(),
        Surface::Radial => brute_radial(g, budget)?.is_some(),
        Surface::Cyclic => brute_cyclic(g, budget)?.is_some(),
    })
}

/// Per layer, the pairs of same-graph edges that must not cross. Edges
/// must join adjacent levels (in either direction); they are stored as
/// (lower endpoint, upper endpoint).
fn sim_layers(g: &LevelGraph) -> Result<Vec<Vec<((VertexId, VertexId), (VertexId, VertexId))>>, OracleError> {
    let k = g.levels();
    let mut per_layer: Vec<Vec<(u32, VertexId, VertexId)>> = vec![Vec::new(); k];
    for (e, edge) in g.edges().iter().enumerate() {
        let (a, b) = (g.level(edge.from), g.level(edge.to));
        let (lo, hi) = if a + 1 == b {
            (edge.from, edge.to)
        } else if b + 1 == a {
            (edge.to, edge.from)
        } else {
            return Err(OracleError::NotAdjacentLevels(g.edge_label(e)));
        };
        per_layer[g.level(lo) - 1].push((edge.graph, lo, hi));
    }
    Ok(per_layer
        .into_iter()
        .map(|edges| {
            edges
                .iter()
                .tuple_combinations()
                .filter(|(x, y)| x.0 == y.0 && x.1 != y.1 && x.2 != y.2)
                .map(|(x, y)| ((x.1, x.2), (y.1, y.2)))
                .collect()
        })
        .collect())
}

/// Simultaneous level planarity on the plane by trying every tuple of
/// linear level orders. Only for small inputs; see [`brute_sim_level`].
pub fn enumerate_sim_level(g: &LevelGraph, budget: &OracleBudget) -> Result<Option<LinearOrders>, OracleError> {
    let pairs = sim_layers(g)?;
    check_budget(g, budget, false)?;
    let k = g.levels();
    let choices: Vec<Vec<Vec<VertexId>>> =
        (1..=k).map(|i| g.level_vertices(i).into_iter().permutations(g.level_vertices(i).len()).collect()).collect();
    Ok(search_tuples(&choices, |tuple| {
        let mut pos = vec![0i64; g.vertex_count()];
        for order in tuple {
            for (r, &v) in order.iter().enumerate() {
                pos[v] = r as i64;
            }
        }
        let ok = pairs
            .iter()
            .flatten()
            .all(|&((a, b), (c, d))| (pos[a] - pos[c]).signum() * (pos[b] - pos[d]).signum() >= 0);
        ok.then(|| tuple.iter().map(|o| o.to_vec()).collect())
    }))
}

/// Simultaneous level planarity on the plane by exhaustive search over the
/// relative order of every pair of vertices on a level. Two edges of one
/// graph in one layer force their lower pair and upper pair into the same
/// relative order; transitivity is propagated after every decision.
pub fn brute_sim_level(g: &LevelGraph, budget: &OracleBudget) -> Result<Option<LinearOrders>, OracleError> {
    let pairs = sim_layers(g)?;
    let mut search = PairSearch::new(g, budget.max_enumeration);
    for &((a, b), (c, d)) in pairs.iter().flatten() {
        search.link(a, c, b, d);
    }
    match search.run() {
        Err(()) => Err(OracleError::Budget(format!("more than {} search nodes", budget.max_enumeration))),
        Ok(found) => Ok(found),
    }
}

/// Depth-first search over "x before y" facts per level.
struct PairSearch {
    levels: Vec<Vec<VertexId>>,
    level_of: Vec<usize>,
    slot: Vec<usize>,
    /// `before[l][i][j]`: `Some(true)` if vertex slot `i` precedes slot `j`.
    before: Vec<Vec<Vec<Option<bool>>>>,
    /// Equalities between ordered pairs: `(x, y)` ordered like `(z, w)`.
    links: HashMap<(VertexId, VertexId), Vec<(VertexId, VertexId)>>,
    nodes: u128,
    limit: u128,
}

impl PairSearch {
    fn new(g: &LevelGraph, limit: u128) -> Self {
        let levels: Vec<Vec<VertexId>> = (1..=g.levels()).map(|i| g.level_vertices(i)).collect();
        let mut level_of = vec![0; g.vertex_count()];
        let mut slot = vec![0; g.vertex_count()];
        for (l, vs) in levels.iter().enumerate() {
            for (i, &v) in vs.iter().enumerate() {
                level_of[v] = l;
                slot[v] = i;
            }
        }
        let before = levels.iter().map(|vs| vec![vec![None; vs.len()]; vs.len()]).collect();
        PairSearch { levels, level_of, slot, before, links: HashMap::new(), nodes: 0, limit }
    }

    fn link(&mut self, x: VertexId, y: VertexId, z: VertexId, w: VertexId) {
        for (p, q) in [((x, y), (z, w)), ((y, x), (w, z)), ((z, w), (x, y)), ((w, z), (y, x))] {
            self.links.entry(p).or_default().push(q);
        }
    }

    fn get(&self, x: VertexId, y: VertexId) -> Option<bool> {
        self.before[self.level_of[x]][self.slot[x]][self.slot[y]]
    }

    /// Records "x before y" and everything it implies; false on conflict.
    fn assert_before(&mut self, x: VertexId, y: VertexId, trail: &mut Vec<(usize, usize, usize)>) -> bool {
        let mut queue = vec![(x, y)];
        while let Some((x, y)) = queue.pop() {
            match self.get(x, y) {
                Some(true) => continue,
                Some(false) => return false,
                None => {}
            }
            let l = self.level_of[x];
            let (i, j) = (self.slot[x], self.slot[y]);
            self.before[l][i][j] = Some(true);
            self.before[l][j][i] = Some(false);
            trail.push((l, i, j));
            if let Some(eq) = self.links.get(&(x, y)) {
                queue.extend(eq.iter().copied());
            }
            for &z in &self.levels[l] {
                let s = self.slot[z];
                if self.before[l][s][i] == Some(true) {
                    queue.push((z, y));
                }
                if self.before[l][j][s] == Some(true) {
                    queue.push((x, z));
                }
            }
        }
        true
    }

    fn undo(&mut self, trail: &[(usize, usize, usize)]) {
        for &(l, i, j) in trail {
            self.before[l][i][j] = None;
            self.before[l][j][i] = None;
        }
    }

    fn next_open(&self) -> Option<(VertexId, VertexId)> {
        for vs in &self.levels {
            for (a, b) in vs.iter().tuple_combinations() {
                if self.get(*a, *b).is_none() {
                    return Some((*a, *b));
                }
            }
        }
        None
    }

    fn run(&mut self) -> Result<Option<LinearOrders>, ()> {
        self.nodes += 1;
        if self.nodes > self.limit {
            return Err(());
        }
        let Some((a, b)) = self.next_open() else { return Ok(Some(self.orders())) };
        for (x, y) in [(a, b), (b, a)] {
            let mut trail = Vec::new();
            if self.assert_before(x, y, &mut trail) {
                if let Some(found) = self.run()? {
                    return Ok(Some(found));
                }
            }
            self.undo(&trail);
        }
        Ok(None)
    }

    fn orders(&self) -> LinearOrders {
        self.levels
            .iter()
            .map(|vs| {
                let mut v = vs.clone();
                v.sort_by_key(|&x| vs.iter().filter(|&&y| y != x && self.get(y, x) == Some(true)).count());
                v
            })
            .collect()
    }
}

/// True if no two same-graph edges of one layer cross under `orders`.
pub fn sim_crossing_free(g: &LevelGraph, orders: &LinearOrders) -> Result<bool, OracleError> {
    let pairs = sim_layers(g)?;
    let mut pos = vec![usize::MAX; g.vertex_count()];
    for (l, order) in orders.iter().enumerate() {
        for (r, &v) in order.iter().enumerate() {
            if v >= g.vertex_count() || g.level(v) != l + 1 || pos[v] != usize::MAX {
                return Ok(false);
            }
            pos[v] = r;
        }
    }
    if orders.len() != g.levels() || pos.contains(&usize::MAX) {
        return Ok(false);
    }
    Ok(pairs.iter().flatten().all(|&((a, b), (c, d))| {
        (pos[a] as i64 - pos[c] as i64).signum() * (pos[b] as i64 - pos[d] as i64).signum() >= 0
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circular_orders_are_lexicographic() {
        let all = circular_orders(&[2, 0, 1, 3]);
        assert_eq!(all.len(), 6);
        assert_eq!(all[0].as_slice(), &[0, 1, 2, 3]);
        assert_eq!(all[5].as_slice(), &[0, 3, 2, 1]);
    }

    #[test]
    fn empty_layer_is_feasible() {
        let g = LevelGraph::parse("levels 2\nv a 1\nv b 2").unwrap();
        let o = CircularOrder::new(vec![0]).unwrap();
        let p = CircularOrder::new(vec![1]).unwrap();
        let r = brute_layer_feasible(&g, &g.layer(1), &o, &p, &OracleBudget::default()).unwrap();
        assert_eq!(r, Some(CircularOrder::new(vec![]).unwrap()));
    }

    #[test]
    fn budget_is_enforced() {
        let mut text = String::from("levels 2\n");
        for i in 0..9 {
            text.push_str(&format!("v a{i} 1\nv b{i} 2\ne a{i} b{i}\n"));
        }
        let g = LevelGraph::parse(&text).unwrap();
        assert!(matches!(brute_torus(&g, &OracleBudget::default()), Err(OracleError::Budget(_))));
    }
}
