//! Simultaneous PQ-ordering: a DAG of PQ-trees whose arcs demand that the
//! order chosen for the source extends the (mapped) order of the target.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt::{self, Write as _};

use crate::pqtree::{CircularOrder, Label, NodeId, NodeKind, PqError, PqTree};

pub type TreeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpqoError {
    #[error("unknown tree {0}")]
    UnknownTree(TreeId),
    #[error("arc {from}->{to}: map is not injective")]
    NotInjective { from: TreeId, to: TreeId },
    #[error("arc {from}->{to}: map must cover exactly the target leaves")]
    BadDomain { from: TreeId, to: TreeId },
    #[error("arc {from}->{to}: image contains {leaf}, not a leaf of the source")]
    BadImage { from: TreeId, to: TreeId, leaf: String },
    #[error("arc {from}->{to} would close a cycle")]
    Cycle { from: TreeId, to: TreeId },
    #[error("unsupported instance shape: {0}")]
    Unsupported(String),
    #[error("tree {tree} has {count} orders, more than the solver limit {cap}")]
    TooLarge { tree: TreeId, count: u128, cap: u128 },
    #[error("solution assigns {got} orders for {expected} trees")]
    MissingAssignment { got: usize, expected: usize },
    #[error(transparent)]
    Pq(#[from] PqError),
}

/// `map[i]` is the source leaf assigned to the `i`-th leaf of the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcMap<T> {
    pub source: TreeId,
    pub target: TreeId,
    pub map: Vec<T>,
}

#[derive(Clone)]
pub struct SpqoInstance<T> {
    trees: Vec<PqTree<T>>,
    names: Vec<String>,
    arcs: Vec<ArcMap<T>>,
}

/// One circular order per tree, indexed by tree id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution<T> {
    pub orders: Vec<CircularOrder<T>>,
}

/// Upper bound on the orders the solver enumerates for a single source tree.
pub const SOURCE_ORDER_CAP: u128 = 2_000_000;

impl<T: Label> Default for SpqoInstance<T> {
    fn default() -> Self {
        SpqoInstance { trees: Vec::new(), names: Vec::new(), arcs: Vec::new() }
    }
}

impl<T: Label> SpqoInstance<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_tree(&mut self, name: impl Into<String>, tree: PqTree<T>) -> TreeId {
        self.trees.push(tree);
        self.names.push(name.into());
        self.trees.len() - 1
    }

    /// Adds the arc `source -> target`, where `map(x)` gives the source leaf
    /// for each target leaf `x`.
    pub fn add_arc(&mut self, source: TreeId, target: TreeId, mut map: impl FnMut(&T) -> T) -> Result<(), SpqoError> {
        for id in [source, target] {
            if id >= self.trees.len() {
                return Err(SpqoError::UnknownTree(id));
            }
        }
        let image: Vec<T> = self.trees[target].ground().iter().map(&mut map).collect();
        self.add_arc_map(ArcMap { source, target, map: image })
    }

    pub fn add_arc_map(&mut self, arc: ArcMap<T>) -> Result<(), SpqoError> {
        let ArcMap { source, target, .. } = arc;
        for id in [source, target] {
            if id >= self.trees.len() {
                return Err(SpqoError::UnknownTree(id));
            }
        }
        if arc.map.len() != self.trees[target].ground().len() {
            return Err(SpqoError::BadDomain { from: source, to: target });
        }
        let distinct: HashSet<&T> = arc.map.iter().collect();
        if distinct.len() != arc.map.len() {
            return Err(SpqoError::NotInjective { from: source, to: target });
        }
        if let Some(x) = arc.map.iter().find(|x| self.trees[source].ground_index(x).is_none()) {
            return Err(SpqoError::BadImage { from: source, to: target, leaf: format!("{x:?}") });
        }
        if source == target || self.reaches(target, source) {
            return Err(SpqoError::Cycle { from: source, to: target });
        }
        self.arcs.push(arc);
        Ok(())
    }

    fn reaches(&self, from: TreeId, to: TreeId) -> bool {
        let mut seen = vec![false; self.trees.len()];
        let mut stack = vec![from];
        while let Some(t) = stack.pop() {
            if t == to {
                return true;
            }
            if std::mem::replace(&mut seen[t], true) {
                continue;
            }
            stack.extend(self.arcs.iter().filter(|a| a.source == t).map(|a| a.target));
        }
        false
    }

    pub fn trees(&self) -> &[PqTree<T>] {
        &self.trees
    }

    pub fn tree(&self, id: TreeId) -> &PqTree<T> {
        &self.trees[id]
    }

    pub fn name(&self, id: TreeId) -> &str {
        &self.names[id]
    }

    pub fn arcs(&self) -> &[ArcMap<T>] {
        &self.arcs
    }

    pub fn parents(&self, id: TreeId) -> Vec<TreeId> {
        self.arcs.iter().filter(|a| a.target == id).map(|a| a.source).collect()
    }

    pub fn children(&self, id: TreeId) -> Vec<TreeId> {
        self.arcs.iter().filter(|a| a.source == id).map(|a| a.target).collect()
    }

    /// True if some tree represents no order.
    pub fn has_empty_tree(&self) -> bool {
        self.trees.iter().any(|t| t.is_empty())
    }

    pub fn leaf_count(&self) -> usize {
        self.trees.iter().map(|t| t.ground().len()).sum()
    }

    fn topological_order(&self) -> Vec<TreeId> {
        let mut indeg = vec![0; self.trees.len()];
        for a in &self.arcs {
            indeg[a.target] += 1;
        }
        let mut queue: VecDeque<TreeId> = (0..self.trees.len()).filter(|&t| indeg[t] == 0).collect();
        let mut out = Vec::new();
        while let Some(t) = queue.pop_front() {
            out.push(t);
            for a in self.arcs.iter().filter(|a| a.source == t) {
                indeg[a.target] -= 1;
                if indeg[a.target] == 0 {
                    queue.push_back(a.target);
                }
            }
        }
        out
    }

    /// `source|φ(L(target))`, relabelled onto the target leaves.
    fn projected_parent(&self, arc: &ArcMap<T>) -> Result<PqTree<T>, SpqoError> {
        let target = &self.trees[arc.target];
        let projected = self.trees[arc.source].project(&arc.map)?;
        let back: HashMap<&T, &T> = arc.map.iter().zip(target.ground()).collect();
        Ok(projected.relabel(|x| back[x].clone())?)
    }

    /// Replaces every arc target by its intersection with the projection of
    /// its source, visiting arcs with sources in topological order.
    pub fn normalize(&self) -> Result<SpqoInstance<T>, SpqoError> {
        let out = self.normalize_pass()?;
        debug_assert!(out.normalize_pass()?.trees == out.trees, "normalization did not reach a fixpoint");
        Ok(out)
    }

    fn normalize_pass(&self) -> Result<SpqoInstance<T>, SpqoError> {
        let rank: HashMap<TreeId, usize> = self.topological_order().into_iter().enumerate().map(|(i, t)| (t, i)).collect();
        let mut order: Vec<usize> = (0..self.arcs.len()).collect();
        order.sort_by_key(|&i| (rank[&self.arcs[i].source], self.arcs[i].source, self.arcs[i].target));
        let mut out = self.clone();
        for i in order {
            let arc = &self.arcs[i];
            let target = &out.trees[arc.target];
            if target.is_empty() {
                continue;
            }
            let p = out.projected_parent(arc)?;
            out.trees[arc.target] = target.intersect(&p)?;
        }
        Ok(out)
    }

    /// True if `child_node` of the arc's target fixes `node` of its source.
    pub fn fixes(&self, arc: &ArcMap<T>, child_node: NodeId, node: NodeId) -> bool {
        let child = &self.trees[arc.target];
        let parent = &self.trees[arc.source];
        let cb = child.leaf_branches(child_node);
        let pb = parent.leaf_branches(node);
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for (i, x) in arc.map.iter().enumerate() {
            if let (Some(b), Some(j)) = (cb[i], parent.ground_index(x)) {
                if let Some(c) = pb[j] {
                    pairs.push((b, c));
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        rainbow_triple(&pairs)
    }

    /// Fixedness of every internal node, keyed by `(tree, node)`. Q-nodes
    /// get 1, so they add nothing to the nodes they fix.
    pub fn fixedness(&self) -> BTreeMap<(TreeId, NodeId), usize> {
        let mut fixed = BTreeMap::new();
        for t in self.topological_order() {
            let tree = &self.trees[t];
            for mu in tree.internal_nodes() {
                if tree.node_kind(mu) == Some(NodeKind::Q) {
                    fixed.insert((t, mu), 1);
                    continue;
                }
                let omega = self
                    .arcs
                    .iter()
                    .filter(|a| a.source == t)
                    .filter(|a| self.trees[a.target].internal_nodes().into_iter().any(|c| self.fixes(a, c, mu)))
                    .count();
                let mut total = omega;
                for a in self.arcs.iter().filter(|a| a.target == t) {
                    let best = self.trees[a.source]
                        .internal_nodes()
                        .into_iter()
                        .filter(|&p| self.fixes(a, mu, p))
                        .map(|p| fixed[&(a.source, p)])
                        .max();
                    total += best.map_or(0, |f: usize| f.saturating_sub(1));
                }
                fixed.insert((t, mu), total);
            }
        }
        fixed
    }

    /// True if every P-node has fixedness at most 2.
    pub fn is_2fixed(&self) -> bool {
        self.fixedness().values().all(|&f| f <= 2)
    }

    /// True if every tree is a source with at most two children or a sink
    /// with at most two parents.
    pub fn check_supported(&self) -> Result<(), SpqoError> {
        for t in 0..self.trees.len() {
            let (p, c) = (self.parents(t).len(), self.children(t).len());
            if p > 0 && c > 0 {
                return Err(SpqoError::Unsupported(format!("{} has both parents and children", self.names[t])));
            }
            if p > 2 || c > 2 {
                return Err(SpqoError::Unsupported(format!("{} has more than two neighbours", self.names[t])));
            }
        }
        Ok(())
    }

    /// Finds orders for all trees satisfying every arc, or `None`.
    pub fn solve(&self) -> Result<Option<Solution<T>>, SpqoError> {
        self.check_supported()?;
        if self.has_empty_tree() {
            return Ok(None);
        }
        let n = self.trees.len();
        let is_sink: Vec<bool> = (0..n).map(|t| !self.parents(t).is_empty()).collect();
        let sources: Vec<TreeId> = (0..n).filter(|&t| !is_sink[t]).collect();
        for &s in &sources {
            let count = self.trees[s].order_count();
            if count > SOURCE_ORDER_CAP {
                return Err(SpqoError::TooLarge { tree: s, count, cap: SOURCE_ORDER_CAP });
            }
        }

        // Domain values of each sink, as indices into `values[sink]`.
        let mut values: Vec<Vec<CircularOrder<T>>> = vec![Vec::new(); n];
        let mut index: Vec<HashMap<CircularOrder<T>, usize>> = vec![HashMap::new(); n];
        let mut relations: Vec<Relation<T>> = Vec::new();
        for &s in &sources {
            let arcs: Vec<&ArcMap<T>> = self.arcs.iter().filter(|a| a.source == s).collect();
            let mut rel = Relation { source: s, sinks: arcs.iter().map(|a| a.target).collect(), tuples: HashMap::new() };
            for o in self.trees[s].enumerate(usize::MAX)? {
                let mut tuple = Vec::with_capacity(arcs.len());
                for a in &arcs {
                    let induced = induced_child_order(&o, a, self.trees[a.target].ground());
                    let slot = index[a.target].len();
                    let v = *index[a.target].entry(induced.clone()).or_insert_with(|| {
                        values[a.target].push(induced);
                        slot
                    });
                    tuple.push(v);
                }
                rel.tuples.entry(tuple).or_insert(o);
            }
            relations.push(rel);
        }

        let mut alive: Vec<Vec<bool>> = Vec::with_capacity(n);
        for t in 0..n {
            let mut row = Vec::with_capacity(values[t].len());
            for v in &values[t] {
                row.push(self.trees[t].contains(v)?);
            }
            alive.push(row);
        }
        if !arc_consistency(&relations, &mut alive) {
            return Ok(None);
        }

        let sinks: Vec<TreeId> = (0..n).filter(|&t| is_sink[t]).collect();
        let mut assignment: Vec<Option<usize>> = vec![None; n];
        if !assign(&sinks_in_search_order(&sinks, &relations), 0, &relations, &alive, &mut assignment) {
            return Ok(None);
        }

        let mut orders = Vec::with_capacity(n);
        for t in 0..n {
            if is_sink[t] {
                orders.push(values[t][assignment[t].unwrap()].clone());
            } else {
                let rel = relations.iter().find(|r| r.source == t).unwrap();
                let key: Vec<usize> = rel.sinks.iter().map(|&c| assignment[c].unwrap()).collect();
                orders.push(rel.tuples[&key].clone());
            }
        }
        let solution = Solution { orders };
        assert!(self.check_solution(&solution)?, "solver produced an invalid solution");
        Ok(Some(solution))
    }

    /// True if every order belongs to its tree and every arc is satisfied.
    pub fn check_solution(&self, sol: &Solution<T>) -> Result<bool, SpqoError> {
        if sol.orders.len() != self.trees.len() {
            return Err(SpqoError::MissingAssignment { got: sol.orders.len(), expected: self.trees.len() });
        }
        for (t, o) in self.trees.iter().zip(&sol.orders) {
            if o.len() != t.ground().len() || !t.contains(o)? {
                return Ok(false);
            }
        }
        for a in &self.arcs {
            let mapped = sol.orders[a.target].map(|x| {
                let i = self.trees[a.target].ground_index(x).unwrap();
                a.map[i].clone()
            })?;
            if !sol.orders[a.source].extends(&mapped) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Human-readable listing of trees and arcs.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (i, t) in self.trees.iter().enumerate() {
            writeln!(s, "tree {i} {}: {t}", self.names[i]).unwrap();
        }
        for a in &self.arcs {
            let pairs: Vec<String> = self.trees[a.target]
                .ground()
                .iter()
                .zip(&a.map)
                .map(|(x, y)| format!("{x:?}->{y:?}"))
                .collect();
            writeln!(s, "arc {} -> {}: {}", self.names[a.source], self.names[a.target], pairs.join(" ")).unwrap();
        }
        s
    }
}

impl<T: Label> fmt::Debug for SpqoInstance<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

impl<T: Label> fmt::Display for SpqoInstance<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// The order a source order imposes on an arc's target.
fn induced_child_order<T: Label>(o: &CircularOrder<T>, arc: &ArcMap<T>, target: &[T]) -> CircularOrder<T> {
    let back: HashMap<&T, &T> = arc.map.iter().zip(target).collect();
    CircularOrder::new(o.as_slice().iter().filter_map(|x| back.get(x).map(|&y| y.clone())).collect()).unwrap()
}

struct Relation<T> {
    source: TreeId,
    sinks: Vec<TreeId>,
    /// Allowed value tuples (one per sink) with a source order realising each.
    tuples: HashMap<Vec<usize>, CircularOrder<T>>,
}

fn arc_consistency<T>(relations: &[Relation<T>], alive: &mut [Vec<bool>]) -> bool {
    loop {
        let mut changed = false;
        for rel in relations {
            for (pos, &sink) in rel.sinks.iter().enumerate() {
                let mut supported = vec![false; alive[sink].len()];
                for tuple in rel.tuples.keys() {
                    if tuple.iter().zip(&rel.sinks).all(|(&v, &c)| alive[c][v]) {
                        supported[tuple[pos]] = true;
                    }
                }
                for (v, ok) in supported.into_iter().enumerate() {
                    if alive[sink][v] && !ok {
                        alive[sink][v] = false;
                        changed = true;
                    }
                }
                if !alive[sink].iter().any(|&b| b) {
                    return false;
                }
            }
        }
        if !changed {
            return true;
        }
    }
}

/// Sinks ordered so that each one after the first of its component shares a
/// relation with an earlier one.
fn sinks_in_search_order<T>(sinks: &[TreeId], relations: &[Relation<T>]) -> Vec<TreeId> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for &start in sinks {
        if !seen.insert(start) {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        while let Some(t) = queue.pop_front() {
            out.push(t);
            for rel in relations.iter().filter(|r| r.sinks.contains(&t)) {
                for &c in &rel.sinks {
                    if seen.insert(c) {
                        queue.push_back(c);
                    }
                }
            }
        }
    }
    out
}

fn assign<T>(
    order: &[TreeId],
    depth: usize,
    relations: &[Relation<T>],
    alive: &[Vec<bool>],
    assignment: &mut [Option<usize>],
) -> bool {
    let Some(&sink) = order.get(depth) else { return true };
    for v in 0..alive[sink].len() {
        if !alive[sink][v] {
            continue;
        }
        assignment[sink] = Some(v);
        let consistent = relations.iter().filter(|r| r.sinks.contains(&sink)).all(|r| {
            r.tuples.keys().any(|tuple| tuple.iter().zip(&r.sinks).all(|(&x, &c)| assignment[c].map_or(alive[c][x], |y| y == x)))
        });
        if consistent && assign(order, depth + 1, relations, alive, assignment) {
            return true;
        }
    }
    assignment[sink] = None;
    false
}

/// True if three pairs have pairwise distinct first and second components.
fn rainbow_triple(pairs: &[(usize, usize)]) -> bool {
    let n = pairs.len();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (pairs[i], pairs[j]);
            if a.0 == b.0 || a.1 == b.1 {
                continue;
            }
            if pairs[j + 1..].iter().any(|c| c.0 != a.0 && c.0 != b.0 && c.1 != a.1 && c.1 != b.1) {
                return true;
            }
        }
    }
    false
}
