//! Simultaneous level planarity on the plane: several level graphs on one
//! shared vertex set must be drawn with the same linear vertex order on
//! every level, each graph crossing-free on its own.
//!
//! Two graphs on two levels reduce to cyclic level planarity. Three graphs
//! on two levels, or two graphs on three levels, can encode Betweenness;
//! the generators here build those encodings.

use std::fmt::Write as _;

use itertools::Itertools;

use crate::level_graph::{GraphError, LevelGraph, VertexId};
use crate::oracle::{self, LinearOrders, OracleBudget, OracleError};
use crate::torus_planarity::{self, TorusError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Torus(#[from] TorusError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown element {0}")]
    UnknownElement(String),
    #[error("duplicate element {0}")]
    DuplicateElement(String),
    #[error("triplet {0} repeats an element")]
    BadTriplet(usize),
    #[error("need at least {need} elements, got {got}")]
    TooFewElements { need: usize, got: usize },
    #[error("need at least one triplet")]
    NoTriplets,
    #[error("betweenness instance with {0} elements is too large to solve exhaustively (limit 8)")]
    TooLarge(usize),
    #[error("expected two graphs on two levels: {0}")]
    WrongShape(String),
}

/// Elements and triplets `(a, b, c)` asking for `b` strictly between `a`
/// and `c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BetweennessInstance {
    pub elems: Vec<String>,
    pub triplets: Vec<[usize; 3]>,
}

impl BetweennessInstance {
    pub fn new(elems: Vec<String>, triplets: Vec<[usize; 3]>) -> Result<Self, SimError> {
        for (i, e) in elems.iter().enumerate() {
            if elems[..i].contains(e) {
                return Err(SimError::DuplicateElement(e.clone()));
            }
        }
        for (i, t) in triplets.iter().enumerate() {
            if t.iter().any(|&x| x >= elems.len()) {
                return Err(SimError::UnknownElement(format!("#{}", t.iter().max().unwrap())));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(SimError::BadTriplet(i));
            }
        }
        Ok(BetweennessInstance { elems, triplets })
    }

    /// Parses `elem <name>` lines followed by `triplet <a> <b> <c>` lines.
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut elems: Vec<String> = Vec::new();
        let mut triplets = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |msg: String| SimError::Parse { line, msg };
            let tokens: Vec<&str> = content.split_whitespace().collect();
            match (tokens[0], tokens.len()) {
                ("elem", 2) => {
                    if !triplets.is_empty() {
                        return Err(err("elements must precede triplets".into()));
                    }
                    if elems.iter().any(|e| e == tokens[1]) {
                        return Err(err(format!("duplicate element {}", tokens[1])));
                    }
                    elems.push(tokens[1].to_string());
                }
                ("triplet", 4) => {
                    let mut t = [0; 3];
                    for (slot, name) in t.iter_mut().zip(&tokens[1..]) {
                        *slot = elems.iter().position(|e| e == name).ok_or_else(|| err(format!("unknown element {name}")))?;
                    }
                    if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                        return Err(err("triplet repeats an element".into()));
                    }
                    triplets.push(t);
                }
                _ => return Err(err(format!("unrecognised line '{content}'"))),
            }
        }
        Ok(BetweennessInstance { elems, triplets })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.elems {
            writeln!(s, "elem {e}").unwrap();
        }
        for t in &self.triplets {
            writeln!(s, "triplet {} {} {}", self.elems[t[0]], self.elems[t[1]], self.elems[t[2]]).unwrap();
        }
        s
    }

    /// True if the linear order `order` (element indices) satisfies every
    /// triplet.
    pub fn satisfied_by(&self, order: &[usize]) -> bool {
        let mut pos = vec![usize::MAX; self.elems.len()];
        for (r, &e) in order.iter().enumerate() {
            pos[e] = r;
        }
        self.triplets.iter().all(|&[a, b, c]| {
            let (a, b, c) = (pos[a], pos[b], pos[c]);
            (a < b && b < c) || (c < b && b < a)
        })
    }
}

/// Of an order and its reverse, the lexicographically smaller one.
pub fn normalize_order(mut order: Vec<usize>) -> Vec<usize> {
    let mut rev = order.clone();
    rev.reverse();
    if rev < order {
        order = rev;
    }
    order
}

/// Lexicographically first satisfying order, by exhaustive search.
pub fn solve_betweenness(b: &BetweennessInstance) -> Result<Option<Vec<usize>>, SimError> {
    let n = b.elems.len();
    if n > 8 {
        return Err(SimError::TooLarge(n));
    }
    Ok((0..n).permutations(n).find(|p| b.satisfied_by(p)))
}

/// A generated instance and the roles of its vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gadget {
    pub graph: LevelGraph,
    /// `rows[i][j]`: copy `i` of element `j` on level 1.
    pub rows: Vec<Vec<VertexId>>,
    /// `links[i][j]`: the level-2 vertex tying rows `i` and `i + 1` at `j`.
    pub links: Vec<Vec<VertexId>>,
    /// The two inner path vertices of each triplet path.
    pub triplet_inner: Vec<[VertexId; 2]>,
}

fn ordering_gadget(b: &BetweennessInstance, extra_level: bool) -> Result<Gadget, SimError> {
    let n = b.elems.len();
    let k = b.triplets.len();
    if n < 3 {
        return Err(SimError::TooFewElements { need: 3, got: n });
    }
    if k == 0 {
        return Err(SimError::NoTriplets);
    }
    let mut g = LevelGraph::new(if extra_level { 3 } else { 2 })?;
    let mut rows = Vec::new();
    for i in 1..=k {
        let row = b.elems.iter().map(|e| g.add_vertex(format!("u{i}.{e}"), 1)).collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let mut links = Vec::new();
    for i in 1..k {
        let row = b.elems.iter().map(|e| g.add_vertex(format!("v{i}.{e}"), 2)).collect::<Result<Vec<_>, _>>()?;
        links.push(row);
    }
    for i in 0..k.saturating_sub(1) {
        for j in 0..n {
            g.add_edge(rows[i][j], links[i][j], 1)?;
        }
    }
    for i in 0..k.saturating_sub(1) {
        for j in 0..n {
            g.add_edge(rows[i + 1][j], links[i][j], 2)?;
        }
    }
    Ok(Gadget { graph: g, rows, links, triplet_inner: Vec::new() })
}

fn add_triplet_paths(gadget: &mut Gadget, b: &BetweennessInstance, level: usize, graph: u32) -> Result<(), SimError> {
    for (i, &[a, m, c]) in b.triplets.iter().enumerate() {
        let g = &mut gadget.graph;
        let x = g.add_vertex(format!("x{}", i + 1), level)?;
        let y = g.add_vertex(format!("y{}", i + 1), level)?;
        let row = &gadget.rows[i];
        for (p, q) in [(row[a], x), (row[m], x), (row[m], y), (row[c], y)] {
            g.add_edge(p, q, graph)?;
        }
        gadget.triplet_inner.push([x, y]);
    }
    Ok(())
}

/// Three graphs on two levels: graphs 1 and 2 force all rows into one
/// common order, graph 3 holds one path per triplet.
pub fn gen_gadget_3x2(b: &BetweennessInstance) -> Result<Gadget, SimError> {
    let mut gadget = ordering_gadget(b, false)?;
    add_triplet_paths(&mut gadget, b, 2, 3)?;
    Ok(gadget)
}

/// Two graphs on three levels: the ordering part as in
/// [`gen_gadget_3x2`], with the triplet paths added to graph 1 and their
/// inner vertices on level 3. Triplet edges span two levels; use
/// [`plane_proper`] before deciding.
pub fn gen_gadget_2x3(b: &BetweennessInstance) -> Result<Gadget, SimError> {
    let mut gadget = ordering_gadget(b, true)?;
    add_triplet_paths(&mut gadget, b, 3, 1)?;
    Ok(gadget)
}

/// Subdivides edges that skip levels, treating every edge as running from
/// its lower to its upper endpoint. Original vertices keep their ids.
pub fn plane_proper(g: &LevelGraph) -> Result<LevelGraph, SimError> {
    let mut up = g.without_edges();
    for e in g.edges() {
        let (a, b) = (g.level(e.from), g.level(e.to));
        if a == b {
            return Err(GraphError::IntraLevelEdge { from: g.name(e.from).into(), to: g.name(e.to).into() }.into());
        }
        let (lo, hi) = if a < b { (e.from, e.to) } else { (e.to, e.from) };
        up.add_edge(lo, hi, e.graph)?;
    }
    Ok(up.make_proper()?.0)
}

/// Simultaneous level planarity by exact search (any number of graphs and
/// levels), restricted to the input's vertices.
pub fn oracle_sim(g: &LevelGraph, budget: &OracleBudget) -> Result<Option<LinearOrders>, SimError> {
    let p = plane_proper(g)?;
    let found = oracle::brute_sim_level(&p, budget)?;
    Ok(found.map(|orders| orders.into_iter().map(|o| o.into_iter().filter(|&v| v < g.vertex_count()).collect()).collect()))
}

fn check_2x2(g: &LevelGraph) -> Result<(), SimError> {
    if g.levels() != 2 {
        return Err(SimError::WrongShape(format!("{} levels", g.levels())));
    }
    if let Some(e) = g.edges().iter().find(|e| e.graph > 2) {
        return Err(SimError::WrongShape(format!("edge in graph {}", e.graph)));
    }
    g.check_no_intra_level()?;
    Ok(())
}

/// One level graph whose graph-1 edges point from level 1 to level 2 and
/// whose graph-2 edges point back. Edge ids are preserved.
pub fn reduce_2x2_to_cyclic(g: &LevelGraph) -> Result<LevelGraph, SimError> {
    check_2x2(g)?;
    let mut out = g.without_edges();
    for e in g.edges() {
        let (lo, hi) = if g.level(e.from) == 1 { (e.from, e.to) } else { (e.to, e.from) };
        if e.graph == 1 {
            out.add_edge(lo, hi, 1)?;
        } else {
            out.add_edge(hi, lo, 1)?;
        }
    }
    Ok(out)
}

/// Decides two graphs on two levels through cyclic level planarity and
/// returns a common linear order per level.
pub fn test_sim_2x2(g: &LevelGraph) -> Result<Option<LinearOrders>, SimError> {
    let cyc = reduce_2x2_to_cyclic(g)?;
    let Some(w) = torus_planarity::test_cyclic(&cyc)?.witness().cloned() else { return Ok(None) };
    let orders: LinearOrders = (1..=2).map(|i| w.level_sequence(i)).collect();
    debug_assert!(oracle::sim_crossing_free(g, &orders).unwrap_or(false));
    Ok(Some(orders))
}

/// True if, on level 1, every row lists its elements in the same relative
/// order as the first row, and likewise every link row on level 2.
pub fn rows_agree(gadget: &Gadget, orders: &LinearOrders) -> bool {
    let pattern = |row: &Vec<VertexId>, level: usize| -> Vec<usize> {
        let order = &orders[level - 1];
        let mut idx: Vec<usize> = (0..row.len()).collect();
        idx.sort_by_key(|&j| order.iter().position(|&v| v == row[j]));
        idx
    };
    let first = pattern(&gadget.rows[0], 1);
    gadget.rows.iter().all(|r| pattern(r, 1) == first) && gadget.links.iter().all(|r| pattern(r, 2) == first)
}

/// True if each triplet's middle copy lies between the outer copies in its
/// row.
pub fn triplets_between(gadget: &Gadget, b: &BetweennessInstance, orders: &LinearOrders) -> bool {
    let pos = |v: VertexId| orders[0].iter().position(|&x| x == v).unwrap();
    b.triplets.iter().enumerate().all(|(i, &[a, m, c])| {
        let row = &gadget.rows[i];
        let (a, m, c) = (pos(row[a]), pos(row[m]), pos(row[c]));
        (a < m && m < c) || (c < m && m < a)
    })
}

/// The element order encoded by the first row of a witness, normalized
/// against reversal.
pub fn betweenness_order(gadget: &Gadget, orders: &LinearOrders) -> Vec<usize> {
    let row = &gadget.rows[0];
    let order: Vec<usize> = orders[0].iter().filter_map(|v| row.iter().position(|x| x == v)).collect();
    normalize_order(order)
}
