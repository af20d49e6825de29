//! Level graphs, subdivision into proper graphs, and the reductions of the
//! radial and cyclic problems to the torus problem.
//!
//! Levels are numbered `1..=k` and treated cyclically: the level after `k`
//! is `1`. Layer `i` holds the edges going from level `i` to level `i + 1`.
//!
//! The text format is line oriented:
//!
//! ```text
//! # a 3-cycle that wraps around
//! levels 3
//! v a1 1
//! v a2 2
//! v a3 3
//! e a1 a2
//! e a2 a3
//! e a3 a1
//! ```
//!
//! `e <from> <to> <graph>` tags an edge with a graph id (default 1), used by
//! simultaneous instances.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("a level graph needs at least one level")]
    NoLevels,
    #[error("vertex {name} has level {level}, outside 1..={levels}")]
    LevelOutOfRange { name: String, level: usize, levels: usize },
    #[error("duplicate vertex name {0}")]
    DuplicateVertex(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("self-loop at {0}")]
    SelfLoop(String),
    #[error("intra-level edge {from}->{to} unsupported")]
    IntraLevelEdge { from: String, to: String },
    #[error("graph is not proper: edge {from}->{to} spans {span} levels")]
    NotProper { from: String, to: String, span: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    pub name: String,
    pub level: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub from: VertexId,
    pub to: VertexId,
    /// Which graph of a simultaneous instance the edge belongs to.
    pub graph: u32,
}

/// A directed graph with a level in `1..=levels` for every vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelGraph {
    levels: usize,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    by_name: HashMap<String, VertexId>,
}

/// The edges between two consecutive levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub index: usize,
    /// All vertices of level `index`.
    pub lower: Vec<VertexId>,
    /// All vertices of level `index + 1` (cyclically).
    pub upper: Vec<VertexId>,
    pub edges: Vec<EdgeId>,
}

/// Where the edges of a subdivided graph came from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SubdivisionMap {
    /// For each original edge, the inserted vertices in order from its tail.
    pub chains: Vec<Vec<VertexId>>,
    /// For each edge of the proper graph, the original edge it is part of.
    pub edge_origin: Vec<EdgeId>,
}

impl LevelGraph {
    pub fn new(levels: usize) -> Result<Self, GraphError> {
        if levels == 0 {
            return Err(GraphError::NoLevels);
        }
        Ok(LevelGraph { levels, vertices: Vec::new(), edges: Vec::new(), by_name: HashMap::new() })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v]
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.vertices[v].name
    }

    pub fn level(&self, v: VertexId) -> usize {
        self.vertices[v].level
    }

    pub fn vertex_named(&self, name: &str) -> Option<VertexId> {
        self.by_name.get(name).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> Edge {
        self.edges[e]
    }

    /// `from->to`, with vertex names.
    pub fn edge_label(&self, e: EdgeId) -> String {
        let Edge { from, to, .. } = self.edges[e];
        format!("{}->{}", self.name(from), self.name(to))
    }

    pub fn add_vertex(&mut self, name: impl Into<String>, level: usize) -> Result<VertexId, GraphError> {
        let name = name.into();
        if level == 0 || level > self.levels {
            return Err(GraphError::LevelOutOfRange { name, level, levels: self.levels });
        }
        if self.by_name.contains_key(&name) {
            return Err(GraphError::DuplicateVertex(name));
        }
        let id = self.vertices.len();
        self.by_name.insert(name.clone(), id);
        self.vertices.push(Vertex { name, level });
        Ok(id)
    }

    /// Adds a vertex whose name starts with `base` and is not yet taken.
    pub fn add_fresh_vertex(&mut self, base: &str, level: usize) -> Result<VertexId, GraphError> {
        let mut name = base.to_string();
        let mut k = 1;
        while self.by_name.contains_key(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        self.add_vertex(name, level)
    }

    pub fn add_edge(&mut self, from: VertexId, to: VertexId, graph: u32) -> Result<EdgeId, GraphError> {
        if from >= self.vertices.len() {
            return Err(GraphError::UnknownVertex(format!("#{from}")));
        }
        if to >= self.vertices.len() {
            return Err(GraphError::UnknownVertex(format!("#{to}")));
        }
        if from == to {
            return Err(GraphError::SelfLoop(self.vertices[from].name.clone()));
        }
        self.edges.push(Edge { from, to, graph });
        Ok(self.edges.len() - 1)
    }

    pub fn add_edge_by_name(&mut self, from: &str, to: &str, graph: u32) -> Result<EdgeId, GraphError> {
        let f = self.vertex_named(from).ok_or_else(|| GraphError::UnknownVertex(from.to_string()))?;
        let t = self.vertex_named(to).ok_or_else(|| GraphError::UnknownVertex(to.to_string()))?;
        self.add_edge(f, t, graph)
    }

    /// Vertices on `level`, in insertion order.
    pub fn level_vertices(&self, level: usize) -> Vec<VertexId> {
        (0..self.vertices.len()).filter(|&v| self.vertices[v].level == level).collect()
    }

    /// The level after `level`, cyclically.
    pub fn next_level(&self, level: usize) -> usize {
        level % self.levels + 1
    }

    /// Number of level lines crossed walking forward from the tail's level
    /// to the head's level; `None` for an intra-level edge.
    pub fn span(&self, e: EdgeId) -> Option<usize> {
        let Edge { from, to, .. } = self.edges[e];
        let (a, b) = (self.level(from), self.level(to));
        let d = (b + self.levels - a) % self.levels;
        (d != 0).then_some(d)
    }

    /// True if every edge `(u, v)` goes to the next level (cyclically).
    pub fn is_proper(&self) -> bool {
        (0..self.edges.len()).all(|e| self.span(e) == Some(1))
    }

    /// True if every edge goes strictly upward, i.e. no edge wraps from a
    /// level to a lower-numbered one.
    pub fn is_upward(&self) -> bool {
        self.edges.iter().all(|e| self.level(e.from) < self.level(e.to))
    }

    pub fn check_no_intra_level(&self) -> Result<(), GraphError> {
        for (e, edge) in self.edges.iter().enumerate() {
            if self.span(e).is_none() {
                return Err(GraphError::IntraLevelEdge {
                    from: self.name(edge.from).to_string(),
                    to: self.name(edge.to).to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn check_proper(&self) -> Result<(), GraphError> {
        self.check_no_intra_level()?;
        for (e, edge) in self.edges.iter().enumerate() {
            let span = self.span(e).unwrap();
            if span != 1 {
                return Err(GraphError::NotProper {
                    from: self.name(edge.from).to_string(),
                    to: self.name(edge.to).to_string(),
                    span,
                });
            }
        }
        Ok(())
    }

    /// Layer `index` (`1..=levels`): edges from level `index` to the next.
    pub fn layer(&self, index: usize) -> Layer {
        let up = self.next_level(index);
        let edges = if self.levels == 1 {
            Vec::new()
        } else {
            (0..self.edges.len())
                .filter(|&e| self.level(self.edges[e].from) == index && self.level(self.edges[e].to) == up)
                .collect()
        };
        Layer { index, lower: self.level_vertices(index), upper: self.level_vertices(up), edges }
    }

    /// Subdivides every edge spanning `h > 1` level gaps with `h - 1` new
    /// vertices on the intermediate levels, walking forward cyclically.
    pub fn make_proper(&self) -> Result<(LevelGraph, SubdivisionMap), GraphError> {
        self.check_no_intra_level()?;
        let mut g = LevelGraph::new(self.levels)?;
        for v in &self.vertices {
            g.add_vertex(v.name.clone(), v.level)?;
        }
        let mut map = SubdivisionMap::default();
        for (e, edge) in self.edges.iter().enumerate() {
            let span = self.span(e).unwrap();
            let mut chain = Vec::new();
            let mut prev = edge.from;
            let mut level = self.level(edge.from);
            for j in 1..span {
                level = g.next_level(level);
                let base = format!("{}~{}~{}", self.name(edge.from), self.name(edge.to), j);
                let w = g.add_fresh_vertex(&base, level)?;
                g.add_edge(prev, w, edge.graph)?;
                map.edge_origin.push(e);
                chain.push(w);
                prev = w;
            }
            g.add_edge(prev, edge.to, edge.graph)?;
            map.edge_origin.push(e);
            map.chains.push(chain);
        }
        Ok((g, map))
    }

    /// Same vertices and levels, no edges.
    pub fn without_edges(&self) -> LevelGraph {
        LevelGraph { edges: Vec::new(), ..self.clone() }
    }

    /// The graph with only the edges of simultaneous graph `graph`.
    pub fn subgraph(&self, graph: u32) -> LevelGraph {
        LevelGraph { edges: self.edges.iter().copied().filter(|e| e.graph == graph).collect(), ..self.clone() }
    }

    /// Largest graph id used by an edge (0 for an edgeless graph).
    pub fn graph_count(&self) -> u32 {
        self.edges.iter().map(|e| e.graph).max().unwrap_or(0)
    }

    pub fn parse(text: &str) -> Result<LevelGraph, GraphError> {
        let mut graph: Option<LevelGraph> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |msg: String| GraphError::Parse { line, msg };
            let tokens: Vec<&str> = content.split_whitespace().collect();
            let number = |s: &str, what: &str| -> Result<usize, GraphError> {
                s.parse::<usize>().map_err(|_| err(format!("invalid {what} '{s}'")))
            };
            let Some(g) = graph.as_mut() else {
                if tokens[0] != "levels" || tokens.len() != 2 {
                    return Err(err("expected 'levels <k>' first".to_string()));
                }
                let k = number(tokens[1], "level count")?;
                graph = Some(LevelGraph::new(k).map_err(|e| err(e.to_string()))?);
                continue;
            };
            match tokens[0] {
                "v" if tokens.len() == 3 => {
                    let level = number(tokens[2], "level")?;
                    g.add_vertex(tokens[1], level).map_err(|e| err(e.to_string()))?;
                }
                "e" if tokens.len() == 3 || tokens.len() == 4 => {
                    let id = match tokens.get(3) {
                        Some(s) => s.parse::<u32>().ok().filter(|&x| x >= 1).ok_or_else(|| err(format!("invalid graph id '{s}'")))?,
                        None => 1,
                    };
                    g.add_edge_by_name(tokens[1], tokens[2], id).map_err(|e| err(e.to_string()))?;
                }
                "levels" => return Err(err("duplicate 'levels' line".to_string())),
                other => return Err(err(format!("unrecognised line starting with '{other}'"))),
            }
        }
        graph.ok_or(GraphError::Parse { line: 0, msg: "missing 'levels <k>' line".to_string() })
    }

    /// Serialises to the text format accepted by [`LevelGraph::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "levels {}", self.levels).unwrap();
        for v in &self.vertices {
            writeln!(s, "v {} {}", v.name, v.level).unwrap();
        }
        for e in &self.edges {
            if e.graph == 1 {
                writeln!(s, "e {} {}", self.name(e.from), self.name(e.to)).unwrap();
            } else {
                writeln!(s, "e {} {} {}", self.name(e.from), self.name(e.to), e.graph).unwrap();
            }
        }
        s
    }
}

impl fmt::Display for LevelGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// A graph extended by a reduction gadget. The input's vertices and edges
/// keep their ids; gadget vertices and edges are appended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Augmented {
    pub graph: LevelGraph,
    pub gadget_vertices: Vec<VertexId>,
    pub gadget_edges: Vec<EdgeId>,
}

/// Adds the 4-cycle `a -> b -> c -> d -> a` with `a, c` on the top level and
/// `b, d` on level 1.
///
/// This gadget does not preserve radial planarity: the cycle meets every
/// level twice, so it must also wind around the level circles and crosses
/// any cycle of the input that does. `K_{2,2}` on two levels is radial level
/// planar, but its augmentation is not torus level planar.
/// [`crate::torus_planarity::test_radial`] does without it.
pub fn radial_to_torus(g: &LevelGraph) -> Result<Augmented, GraphError> {
    let mut out = g.clone();
    let k = g.levels();
    let a = out.add_fresh_vertex("a", k)?;
    let b = out.add_fresh_vertex("b", 1)?;
    let c = out.add_fresh_vertex("c", k)?;
    let d = out.add_fresh_vertex("d", 1)?;
    let mut edges = Vec::new();
    for (x, y) in [(a, b), (b, c), (c, d), (d, a)] {
        edges.push(out.add_edge(x, y, 1)?);
    }
    Ok(Augmented { graph: out, gadget_vertices: vec![a, b, c, d], gadget_edges: edges })
}

/// Adds a cycle `w_1 -> w_2 -> ... -> w_k -> w_1` with `w_i` on level `i`.
/// The result is torus level planar iff the input is cyclic level planar.
pub fn cyclic_to_torus(g: &LevelGraph) -> Result<Augmented, GraphError> {
    let mut out = g.clone();
    let k = g.levels();
    let ws: Vec<VertexId> = (1..=k).map(|i| out.add_fresh_vertex(&format!("w{i}"), i)).collect::<Result<_, _>>()?;
    let mut edges = Vec::new();
    if k >= 2 {
        for i in 0..k {
            edges.push(out.add_edge(ws[i], ws[(i + 1) % k], 1)?);
        }
    }
    Ok(Augmented { graph: out, gadget_vertices: ws, gadget_edges: edges })
}
