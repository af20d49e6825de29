//! Torus level planarity through simultaneous PQ-ordering, plus the cyclic
//! and radial variants via their torus reductions.
//!
//! A proper level graph is torus level planar iff circular vertex orders on
//! the levels exist such that every layer can be drawn between its two
//! levels. A layer can be drawn for given level orders iff some circular
//! edge order keeps each vertex's edges together and induces the level
//! orders on the vertices it touches. The instance built here links one
//! PQ-tree per level, per layer, and per layer side, and the solver picks
//! compatible orders for all of them.

use std::collections::{BTreeMap, HashMap};

use crate::level_graph::{self, EdgeId, GraphError, Layer, LevelGraph, SubdivisionMap, VertexId};
use crate::pqtree::{CircularOrder, PqError, PqTree};
use crate::spqo::{SpqoError, SpqoInstance, TreeId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TorusError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Spqo(#[from] SpqoError),
    #[error(transparent)]
    Pq(#[from] PqError),
    #[error("a graph on a single level cannot have edges")]
    SingleLevelWithEdges,
    #[error("need at least two levels")]
    TooFewLevels,
    #[error("edge order is not vertex-consecutive at {0}")]
    NotVConsecutive(String),
    #[error("constraint tree for level {0} must have exactly the level's vertices as leaves")]
    ConstraintGround(usize),
    #[error("level constraints need a proper graph")]
    ConstraintsNeedProper,
    #[error("embedding does not match the graph: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Surface {
    Torus,
    Cyclic,
    Radial,
}

/// PQ-tree per level restricting that level's vertex order.
pub type ConstraintTrees = BTreeMap<usize, PqTree<VertexId>>;

/// Circular vertex order per level and circular edge order per layer.
/// Index `i - 1` holds level `i` and layer `i` (edges from level `i` to
/// level `i + 1`); empty levels and layers hold empty orders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TorusEmbedding {
    pub levels: Vec<CircularOrder<VertexId>>,
    pub layers: Vec<CircularOrder<EdgeId>>,
}

impl TorusEmbedding {
    pub fn level(&self, i: usize) -> &CircularOrder<VertexId> {
        &self.levels[i - 1]
    }

    pub fn layer(&self, i: usize) -> &CircularOrder<EdgeId> {
        &self.layers[i - 1]
    }
}

/// What a tree of the instance stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeRole {
    /// Vertex orders of level `i`.
    Level(usize),
    /// Vertex-consecutive edge orders of layer `i`.
    Layer(usize),
    /// Vertices of level `i` with edges in layer `i`.
    LayerLower(usize),
    /// Vertices of level `i + 1` with edges in layer `i`.
    LayerUpper(usize),
}

#[derive(Debug, Clone)]
pub struct TorusInstance {
    /// Normalized instance.
    pub instance: SpqoInstance<usize>,
    pub roles: Vec<TreeRole>,
    /// `3 * (sum of level sizes) + (sum of layer sizes)`.
    pub leaf_bound: usize,
}

impl TorusInstance {
    pub fn find(&self, role: TreeRole) -> Option<TreeId> {
        self.roles.iter().position(|&r| r == role)
    }

    pub fn count(&self, pred: impl Fn(TreeRole) -> bool) -> usize {
        self.roles.iter().filter(|&&r| pred(r)).count()
    }
}

/// Planar embedding of a graph derived from the input, and how to read it
/// back in terms of the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub surface: Surface,
    /// The proper graph that was embedded. Its first `input_vertices`
    /// vertices are the input's, with the same ids.
    pub graph: LevelGraph,
    pub embedding: TorusEmbedding,
    pub input_vertices: usize,
    /// Input edge of every edge of `graph`, `None` for gadget edges.
    pub edge_origin: Vec<Option<EdgeId>>,
    /// Gadget vertex per level at which circular orders are cut into linear
    /// ones (cyclic surface only).
    pub cuts: Option<Vec<VertexId>>,
}

impl Witness {
    /// Input vertices of level `i`, in embedding order. Circular orders start
    /// at the smallest name; linear ones at the leftmost vertex.
    pub fn level_sequence(&self, i: usize) -> Vec<VertexId> {
        let order = self.embedding.level(i);
        let seq = match &self.cuts {
            Some(cuts) => {
                let mut s = order.starting_at(&cuts[i - 1]).unwrap();
                s.remove(0);
                s
            }
            None => order.as_slice().to_vec(),
        };
        let seq: Vec<VertexId> = seq.into_iter().filter(|&v| v < self.input_vertices).collect();
        if self.cuts.is_some() {
            seq
        } else {
            rotate_to_min(seq, |&v| self.graph.name(v).to_string())
        }
    }

    /// Input edges crossing layer `i`, in embedding order, with the same
    /// starting convention as [`Witness::level_sequence`].
    pub fn layer_sequence(&self, i: usize) -> Vec<EdgeId> {
        let order = self.embedding.layer(i);
        let seq = match &self.cuts {
            Some(_) => {
                let gadget = order.as_slice().iter().find(|&&e| self.edge_origin[e].is_none());
                match gadget {
                    Some(g) => {
                        let mut s = order.starting_at(g).unwrap();
                        s.remove(0);
                        s
                    }
                    None => order.as_slice().to_vec(),
                }
            }
            None => order.as_slice().to_vec(),
        };
        let seq: Vec<EdgeId> = seq.into_iter().filter_map(|e| self.edge_origin[e]).collect();
        if self.cuts.is_some() {
            seq
        } else {
            rotate_to_min(seq, |&e| e)
        }
    }

    /// The embedding restricted to input vertices, with each layer listing
    /// the input edges that cross it.
    pub fn input_embedding(&self) -> TorusEmbedding {
        let k = self.graph.levels();
        TorusEmbedding {
            levels: (1..=k).map(|i| self.embedding.level(i).restrict(|&v| v < self.input_vertices)).collect(),
            layers: (1..=k)
                .map(|i| {
                    let kept = self.embedding.layer(i).restrict(|&e| self.edge_origin[e].is_some());
                    kept.map(|&e| self.edge_origin[e].unwrap()).unwrap()
                })
                .collect(),
        }
    }
}

fn rotate_to_min<T, K: Ord>(mut seq: Vec<T>, key: impl Fn(&T) -> K) -> Vec<T> {
    if let Some(pos) = (0..seq.len()).min_by_key(|&i| key(&seq[i])) {
        seq.rotate_left(pos);
    }
    seq
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Planarity {
    Planar(Box<Witness>),
    NonPlanar,
}

impl Planarity {
    pub fn is_planar(&self) -> bool {
        matches!(self, Planarity::Planar(_))
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Planarity::Planar(w) => Some(w),
            Planarity::NonPlanar => None,
        }
    }
}

/// Tree on the layer's edges representing exactly its vertex-consecutive
/// circular orders. The layer must have at least one edge.
pub fn build_layer_tree(g: &LevelGraph, layer: &Layer) -> Result<PqTree<EdgeId>, TorusError> {
    let mut tree = PqTree::universal(layer.edges.iter().copied())?;
    for group in incident_groups(g, layer) {
        if group.len() >= 2 {
            tree = tree.reduce(&group)?;
        }
    }
    Ok(tree)
}

/// Layer edges grouped by lower endpoint, then by upper endpoint.
fn incident_groups(g: &LevelGraph, layer: &Layer) -> Vec<Vec<EdgeId>> {
    let mut lower: BTreeMap<VertexId, Vec<EdgeId>> = BTreeMap::new();
    let mut upper: BTreeMap<VertexId, Vec<EdgeId>> = BTreeMap::new();
    for &e in &layer.edges {
        let edge = g.edge(e);
        lower.entry(edge.from).or_default().push(e);
        upper.entry(edge.to).or_default().push(e);
    }
    lower.into_values().chain(upper.into_values()).collect()
}

/// Vertex orders on the lower and upper endpoints induced by a
/// vertex-consecutive edge order.
pub fn induced_orders(
    g: &LevelGraph,
    order: &CircularOrder<EdgeId>,
) -> Result<(CircularOrder<VertexId>, CircularOrder<VertexId>), TorusError> {
    let lower: Vec<VertexId> = order.as_slice().iter().map(|&e| g.edge(e).from).collect();
    let upper: Vec<VertexId> = order.as_slice().iter().map(|&e| g.edge(e).to).collect();
    Ok((dedup_runs(g, &lower)?, dedup_runs(g, &upper)?))
}

fn dedup_runs(g: &LevelGraph, seq: &[VertexId]) -> Result<CircularOrder<VertexId>, TorusError> {
    let mut out: Vec<VertexId> = Vec::new();
    for (i, &v) in seq.iter().enumerate() {
        if i == 0 || seq[i - 1] != v {
            out.push(v);
        }
    }
    if out.len() > 1 && out[0] == out[out.len() - 1] {
        out.pop();
    }
    CircularOrder::new(out).map_err(|_| {
        let v = first_repeat(seq);
        TorusError::NotVConsecutive(g.name(v).to_string())
    })
}

fn first_repeat(seq: &[VertexId]) -> VertexId {
    let mut counts: HashMap<VertexId, usize> = HashMap::new();
    let n = seq.len();
    for i in 0..n {
        if seq[i] != seq[(i + 1) % n] {
            *counts.entry(seq[i]).or_default() += 1;
        }
    }
    counts.into_iter().filter(|&(_, c)| c > 1).map(|(v, _)| v).min().unwrap_or(seq[0])
}

/// True if every vertex's edges are consecutive in `order`.
pub fn is_v_consecutive(g: &LevelGraph, layer: &Layer, order: &CircularOrder<EdgeId>) -> bool {
    incident_groups(g, layer).iter().all(|group| order.is_consecutive(|e| group.contains(e)))
}

/// Builds and normalizes the instance for a proper graph with `k >= 2`.
pub fn build_instance(g: &LevelGraph, constraints: Option<&ConstraintTrees>) -> Result<TorusInstance, TorusError> {
    let k = g.levels();
    if k < 2 {
        return Err(TorusError::TooFewLevels);
    }
    g.check_proper()?;
    let mut inst = SpqoInstance::new();
    let mut roles = Vec::new();
    let mut level_tree: Vec<Option<TreeId>> = vec![None; k + 1];
    let mut leaf_bound = 0;
    for i in 1..=k {
        let vs = g.level_vertices(i);
        leaf_bound += 3 * vs.len();
        let tree = match constraints.and_then(|c| c.get(&i)) {
            Some(t) => {
                let mut sorted = vs.clone();
                sorted.sort_unstable();
                if t.ground() != sorted.as_slice() {
                    return Err(TorusError::ConstraintGround(i));
                }
                t.clone()
            }
            None if vs.is_empty() => continue,
            None => PqTree::universal(vs)?,
        };
        level_tree[i] = Some(inst.add_tree(format!("T{i}"), tree));
        roles.push(TreeRole::Level(i));
    }
    if let Some(c) = constraints {
        if let Some((&i, _)) = c.iter().find(|(&i, _)| i == 0 || i > k) {
            return Err(TorusError::ConstraintGround(i));
        }
    }
    for i in 1..=k {
        let layer = g.layer(i);
        if layer.edges.is_empty() {
            continue;
        }
        leaf_bound += layer.edges.len();
        let j = g.next_level(i);
        let lt = inst.add_tree(format!("T{i},{j}"), build_layer_tree(g, &layer)?);
        roles.push(TreeRole::Layer(i));
        let mut lower: BTreeMap<VertexId, EdgeId> = BTreeMap::new();
        let mut upper: BTreeMap<VertexId, EdgeId> = BTreeMap::new();
        for &e in &layer.edges {
            let edge = g.edge(e);
            lower.entry(edge.from).or_insert(e);
            upper.entry(edge.to).or_insert(e);
        }
        let plus = inst.add_tree(format!("T{i}+"), PqTree::universal(lower.keys().copied())?);
        roles.push(TreeRole::LayerLower(i));
        let minus = inst.add_tree(format!("T{j}-"), PqTree::universal(upper.keys().copied())?);
        roles.push(TreeRole::LayerUpper(i));
        inst.add_arc(level_tree[i].unwrap(), plus, |&v| v)?;
        inst.add_arc(level_tree[j].unwrap(), minus, |&v| v)?;
        inst.add_arc(lt, plus, |v| lower[v])?;
        inst.add_arc(lt, minus, |v| upper[v])?;
    }
    Ok(TorusInstance { instance: inst.normalize()?, roles, leaf_bound })
}

/// Checks the per-layer drawability conditions for a proper graph.
pub fn check_embedding(g: &LevelGraph, emb: &TorusEmbedding) -> Result<bool, TorusError> {
    let k = g.levels();
    if emb.levels.len() != k || emb.layers.len() != k {
        return Err(TorusError::Mismatch(format!("expected {k} levels and layers")));
    }
    g.check_proper()?;
    for i in 1..=k {
        let mut expect = g.level_vertices(i);
        expect.sort_unstable();
        let mut got = emb.level(i).as_slice().to_vec();
        got.sort_unstable();
        if got != expect {
            return Err(TorusError::Mismatch(format!("level {i} vertex set")));
        }
    }
    for i in 1..=k {
        let layer = g.layer(i);
        let order = emb.layer(i);
        let mut got = order.as_slice().to_vec();
        got.sort_unstable();
        if got != layer.edges {
            return Err(TorusError::Mismatch(format!("layer {i} edge set")));
        }
        if layer.edges.is_empty() {
            continue;
        }
        if !is_v_consecutive(g, &layer, order) {
            return Ok(false);
        }
        let (lo, up) = induced_orders(g, order)?;
        if !emb.level(i).extends(&lo) || !emb.level(g.next_level(i)).extends(&up) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn trivial_embedding(g: &LevelGraph) -> TorusEmbedding {
    let k = g.levels();
    let level = |i| CircularOrder::new(g.level_vertices(i)).unwrap();
    TorusEmbedding {
        levels: (1..=k).map(level).collect(),
        layers: (1..=k).map(|_| CircularOrder::new(Vec::new()).unwrap()).collect(),
    }
}

/// Decides torus level planarity, subdividing long edges first.
pub fn test_torus(g: &LevelGraph, constraints: Option<&ConstraintTrees>) -> Result<Planarity, TorusError> {
    let edge_origin: Vec<Option<EdgeId>> = (0..g.edges().len()).map(Some).collect();
    run(g, constraints, Surface::Torus, g.vertex_count(), edge_origin, None)
}

fn run(
    g: &LevelGraph,
    constraints: Option<&ConstraintTrees>,
    surface: Surface,
    input_vertices: usize,
    edge_origin: Vec<Option<EdgeId>>,
    cuts: Option<Vec<VertexId>>,
) -> Result<Planarity, TorusError> {
    if g.levels() == 1 {
        if !g.edges().is_empty() {
            return Err(TorusError::SingleLevelWithEdges);
        }
        let embedding = trivial_embedding(g);
        let w = Witness { surface, graph: g.clone(), embedding, input_vertices, edge_origin, cuts };
        return Ok(Planarity::Planar(Box::new(w)));
    }
    let (proper, map): (LevelGraph, SubdivisionMap) = if g.is_proper() {
        (g.clone(), SubdivisionMap { chains: Vec::new(), edge_origin: (0..g.edges().len()).collect() })
    } else {
        if constraints.is_some() {
            return Err(TorusError::ConstraintsNeedProper);
        }
        g.make_proper()?
    };
    let ti = build_instance(&proper, constraints)?;
    debug_assert!(ti.instance.is_2fixed());
    let Some(sol) = ti.instance.solve()? else { return Ok(Planarity::NonPlanar) };
    let mut embedding = trivial_embedding(&proper);
    for (t, role) in ti.roles.iter().enumerate() {
        match *role {
            TreeRole::Level(i) => embedding.levels[i - 1] = sol.orders[t].clone(),
            TreeRole::Layer(i) => embedding.layers[i - 1] = sol.orders[t].clone(),
            _ => {}
        }
    }
    assert!(check_embedding(&proper, &embedding)?, "extracted embedding fails the layer conditions");
    let edge_origin = map.edge_origin.iter().map(|&e| edge_origin[e]).collect();
    let w = Witness { surface, graph: proper, embedding, input_vertices, edge_origin, cuts };
    Ok(Planarity::Planar(Box::new(w)))
}

/// Decides cyclic level planarity: linear vertex orders, with edges allowed
/// to wrap from the last level to the first.
pub fn test_cyclic(g: &LevelGraph) -> Result<Planarity, TorusError> {
    if g.levels() == 1 {
        return test_torus(g, None).map(|p| with_surface(p, Surface::Cyclic));
    }
    g.check_no_intra_level()?;
    let aug = level_graph::cyclic_to_torus(g)?;
    let m = g.edges().len();
    let edge_origin = (0..aug.graph.edges().len()).map(|e| (e < m).then_some(e)).collect();
    run(&aug.graph, None, Surface::Cyclic, g.vertex_count(), edge_origin, Some(aug.gadget_vertices))
}

/// Decides radial level planarity: circular vertex orders, every edge
/// pointing to a higher level.
///
/// An upward graph leaves the strip between the top level and level 1
/// empty, so cutting a torus embedding along that strip gives a radial one.
/// The graph is therefore tested on the torus as it is; the four-cycle of
/// [`level_graph::radial_to_torus`] is not used.
pub fn test_radial(g: &LevelGraph) -> Result<Planarity, TorusError> {
    if g.levels() > 1 && !g.is_upward() {
        return Ok(Planarity::NonPlanar);
    }
    test_torus(g, None).map(|p| with_surface(p, Surface::Radial))
}

fn with_surface(p: Planarity, surface: Surface) -> Planarity {
    match p {
        Planarity::Planar(mut w) => {
            w.surface = surface;
            Planarity::Planar(w)
        }
        n => n,
    }
}

/// Dispatches to the test for `surface`.
pub fn test(g: &LevelGraph, surface: Surface) -> Result<Planarity, TorusError> {
    match surface {
        Surface::Torus => test_torus(g, None),
        Surface::Cyclic => test_cyclic(g),
        Surface::Radial => test_radial(g),
    }
}
