//! Unrooted PQ-trees over circular orderings.
//!
//! An unrooted PQ-tree over a ground set `A` represents a set of circular
//! orderings of `A`: the leaves are the elements of `A`, a P-node lets its
//! neighbours be arranged in any circular order, and a Q-node fixes a circular
//! order of its neighbours up to reversal. The tree can also be the explicit
//! `EMPTY` value, which represents no ordering at all.
//!
//! Three set operations are supported:
//!
//! * [`PqTree::reduce`] keeps the orderings in which a subset is consecutive,
//! * [`PqTree::project`] restricts every ordering to a subset,
//! * [`PqTree::intersect`] keeps the orderings represented by both trees.
//!
//! Trees are immutable values; every operation returns a new tree. Internally
//! a tree is kept in a canonical shape (no internal node of degree two, and
//! degree-three Q-nodes are stored as P-nodes), so two trees over the same
//! ground set are `==` exactly when they represent the same orderings.
//!
//! ```
//! use levelplan::pqtree::PqTree;
//!
//! let u = PqTree::universal(["a", "b", "c", "d"]).unwrap();
//! assert_eq!(u.order_count(), 6);
//! let t = u.reduce(&["a", "b"]).unwrap();
//! assert_eq!(t.order_count(), 4);
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::Hash;

use itertools::Itertools;

/// Anything usable as a leaf label.
pub trait Label: Clone + Ord + Hash + fmt::Debug {}
impl<T: Clone + Ord + Hash + fmt::Debug> Label for T {}

/// Index of a node inside a [`PqTree`].
pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PqError {
    #[error("ground set is empty")]
    EmptyGround,
    #[error("element {0} occurs more than once")]
    Duplicate(String),
    #[error("element {0} is not in the ground set")]
    NotInGround(String),
    #[error("ground sets differ")]
    GroundMismatch,
    #[error("cannot project onto an empty set")]
    EmptyProjection,
    #[error("too large to enumerate: {count} orderings exceed the cap of {cap}")]
    TooLarge { count: u128, cap: usize },
    #[error("relabelling is not injective")]
    NotInjective,
}

/// A circular ordering, equal to its rotations but not to its reverse.
///
/// The elements are stored rotated so that the smallest element comes first,
/// which makes the derived `Eq`, `Ord` and `Hash` rotation-invariant.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CircularOrder<T> {
    elems: Vec<T>,
}

impl<T: Label> CircularOrder<T> {
    pub fn new(elems: Vec<T>) -> Result<Self, PqError> {
        let mut seen = BTreeSet::new();
        for e in &elems {
            if !seen.insert(e) {
                return Err(PqError::Duplicate(format!("{e:?}")));
            }
        }
        Ok(Self::from_distinct(elems))
    }

    pub(crate) fn from_distinct(mut elems: Vec<T>) -> Self {
        if let Some((pos, _)) = elems.iter().enumerate().min_by(|a, b| a.1.cmp(b.1)) {
            elems.rotate_left(pos);
        }
        CircularOrder { elems }
    }

    /// Elements in order, starting from the smallest.
    pub fn as_slice(&self) -> &[T] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn contains(&self, x: &T) -> bool {
        self.elems.contains(x)
    }

    pub fn reversed(&self) -> Self {
        let mut e = self.elems.clone();
        e.reverse();
        Self::from_distinct(e)
    }

    /// The rotation starting at `x`, or `None` if `x` is absent.
    pub fn starting_at(&self, x: &T) -> Option<Vec<T>> {
        let pos = self.elems.iter().position(|e| e == x)?;
        let mut e = self.elems.clone();
        e.rotate_left(pos);
        Some(e)
    }

    /// The suborder on the elements satisfying `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(&T) -> bool) -> Self {
        Self::from_distinct(self.elems.iter().filter(|e| keep(e)).cloned().collect())
    }

    /// Maps every element through `f`, which must be injective on the order.
    pub fn map<U: Label>(&self, f: impl FnMut(&T) -> U) -> Result<CircularOrder<U>, PqError> {
        CircularOrder::new(self.elems.iter().map(f).collect())
    }

    /// True if the elements satisfying `member` form one contiguous block.
    pub fn is_consecutive(&self, mut member: impl FnMut(&T) -> bool) -> bool {
        let flags: Vec<bool> = self.elems.iter().map(&mut member).collect();
        boundary_count(&flags) <= 2
    }

    /// True if `self` restricted to the elements of `sub` equals `sub`.
    pub fn extends(&self, sub: &CircularOrder<T>) -> bool {
        let set: BTreeSet<&T> = sub.elems.iter().collect();
        set.len() == sub.len()
            && sub.elems.iter().all(|e| self.contains(e))
            && self.restrict(|e| set.contains(e)) == *sub
    }
}

impl<T: fmt::Debug> fmt::Debug for CircularOrder<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.elems.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{e:?}")?;
        }
        write!(f, ")")
    }
}

fn boundary_count(flags: &[bool]) -> usize {
    let n = flags.len();
    (0..n).filter(|&i| flags[i] != flags[(i + 1) % n]).count()
}

/// What a node of the tree is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Leaf,
    P,
    Q,
}

#[derive(Debug, Clone)]
struct Node {
    kind: NodeKind,
    // Circular order of neighbours for Q-nodes; arbitrary for P-nodes.
    adj: Vec<NodeId>,
    dead: bool,
}

impl Node {
    fn new(kind: NodeKind) -> Self {
        Node { kind, adj: Vec::new(), dead: false }
    }
}

/// An unrooted PQ-tree; see the module documentation.
///
/// Node `i` for `i < ground().len()` is the leaf of `ground()[i]`; internal
/// nodes follow.
#[derive(Clone)]
pub struct PqTree<T> {
    ground: Vec<T>,
    nodes: Option<Vec<Node>>,
}

impl<T: Label> PqTree<T> {
    /// The tree representing every circular ordering of `ground`.
    pub fn universal(ground: impl IntoIterator<Item = T>) -> Result<Self, PqError> {
        let ground = sorted_ground(ground)?;
        let n = ground.len();
        let mut nodes: Vec<Node> = (0..n).map(|_| Node::new(NodeKind::Leaf)).collect();
        match n {
            1 => {}
            2 => {
                nodes[0].adj.push(1);
                nodes[1].adj.push(0);
            }
            _ => {
                let mut center = Node::new(NodeKind::P);
                for (i, leaf) in nodes.iter_mut().enumerate() {
                    leaf.adj.push(n);
                    center.adj.push(i);
                }
                nodes.push(center);
            }
        }
        Ok(PqTree { ground, nodes: Some(nodes) })
    }

    /// The `EMPTY` tree over `ground`, representing no ordering.
    pub fn empty(ground: impl IntoIterator<Item = T>) -> Result<Self, PqError> {
        Ok(PqTree { ground: sorted_ground(ground)?, nodes: None })
    }

    /// True for the `EMPTY` tree.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_none()
    }

    /// The ground set in ascending order.
    pub fn ground(&self) -> &[T] {
        &self.ground
    }

    pub fn ground_index(&self, x: &T) -> Option<usize> {
        self.ground.binary_search(x).ok()
    }

    fn mask_of(&self, xs: &[T]) -> Result<Vec<bool>, PqError> {
        let mut mask = vec![false; self.ground.len()];
        for x in xs {
            let i = self.ground_index(x).ok_or_else(|| PqError::NotInGround(format!("{x:?}")))?;
            mask[i] = true;
        }
        Ok(mask)
    }

    /// Keeps the orderings in which the elements of `x` are consecutive.
    pub fn reduce(&self, x: &[T]) -> Result<Self, PqError> {
        let mask = self.mask_of(x)?;
        Ok(self.reduce_mask(&mask))
    }

    fn reduce_mask(&self, full: &[bool]) -> Self {
        let nodes = self.nodes.as_ref().and_then(|nodes| reduce_nodes(nodes, full));
        PqTree { ground: self.ground.clone(), nodes }
    }

    /// Restricts every represented ordering to the elements of `x`.
    pub fn project(&self, x: &[T]) -> Result<Self, PqError> {
        let mask = self.mask_of(x)?;
        let ground: Vec<T> =
            self.ground.iter().zip(&mask).filter(|(_, &m)| m).map(|(g, _)| g.clone()).collect();
        if ground.is_empty() {
            return Err(PqError::EmptyProjection);
        }
        let Some(nodes) = &self.nodes else {
            return Ok(PqTree { ground, nodes: None });
        };
        let mut nodes = nodes.clone();
        let n = self.ground.len();
        for v in 0..n {
            if !mask[v] {
                detach(&mut nodes, v);
            }
        }
        let mut next = 0;
        let leaf_map: Vec<Option<usize>> = mask
            .iter()
            .map(|&m| {
                m.then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        let nodes = finish(nodes, &leaf_map);
        Ok(PqTree { ground, nodes: Some(nodes) })
    }

    /// Keeps the orderings represented by both trees.
    pub fn intersect(&self, other: &PqTree<T>) -> Result<Self, PqError> {
        if self.ground != other.ground {
            return Err(PqError::GroundMismatch);
        }
        if other.is_empty() {
            return Ok(other.clone());
        }
        let mut acc = self.clone();
        for c in other.constraint_masks() {
            if acc.is_empty() {
                break;
            }
            acc = acc.reduce_mask(&c);
        }
        Ok(acc)
    }

    /// True if `o` is one of the represented orderings.
    pub fn contains(&self, o: &CircularOrder<T>) -> Result<bool, PqError> {
        if o.len() != self.ground.len() || o.as_slice().iter().any(|x| self.ground_index(x).is_none()) {
            return Err(PqError::GroundMismatch);
        }
        if self.is_empty() {
            return Ok(false);
        }
        let idx: Vec<usize> = o.as_slice().iter().map(|x| self.ground_index(x).unwrap()).collect();
        Ok(self.constraint_masks().iter().all(|m| {
            let flags: Vec<bool> = idx.iter().map(|&i| m[i]).collect();
            boundary_count(&flags) <= 2
        }))
    }

    /// Consecutivity constraints whose reduction of the universal tree yields
    /// this tree. Trivial sets (one element, or all but one) are omitted.
    pub fn constraints(&self) -> Vec<Vec<T>> {
        self.constraint_masks()
            .into_iter()
            .map(|m| self.ground.iter().zip(&m).filter(|(_, &b)| b).map(|(g, _)| g.clone()).collect())
            .collect()
    }

    fn constraint_masks(&self) -> Vec<Vec<bool>> {
        let Some(nodes) = &self.nodes else { return Vec::new() };
        let n = self.ground.len();
        if n < 4 {
            return Vec::new();
        }
        let rooted = Rooted::new(nodes, n);
        let mut out = Vec::new();
        let nontrivial = |m: &Vec<bool>| {
            let c = m.iter().filter(|b| **b).count();
            c >= 2 && c + 2 <= n
        };
        for v in 0..nodes.len() {
            if nodes[v].dead || rooted.parent[v].is_none() {
                continue;
            }
            let m = rooted.subtree_mask(v);
            if nontrivial(&m) {
                out.push(m);
            }
        }
        for v in n..nodes.len() {
            if nodes[v].dead || nodes[v].kind != NodeKind::Q {
                continue;
            }
            let branches: Vec<Vec<bool>> = nodes[v].adj.iter().map(|&w| rooted.branch_mask(v, w)).collect();
            let d = branches.len();
            for i in 0..d {
                let m: Vec<bool> = branches[i].iter().zip(&branches[(i + 1) % d]).map(|(a, b)| *a || *b).collect();
                if nontrivial(&m) {
                    out.push(m);
                }
            }
        }
        out
    }

    /// Number of represented orderings.
    pub fn order_count(&self) -> u128 {
        let Some(nodes) = &self.nodes else { return 0 };
        nodes
            .iter()
            .filter(|n| !n.dead)
            .map(|node| match node.kind {
                NodeKind::Leaf => 1,
                NodeKind::P => (1..node.adj.len() as u128).product(),
                NodeKind::Q => 2,
            })
            .product()
    }

    /// All represented orderings, each exactly once up to rotation, in
    /// ascending order.
    pub fn enumerate(&self, cap: usize) -> Result<Vec<CircularOrder<T>>, PqError> {
        let count = self.order_count();
        if count > cap as u128 {
            return Err(PqError::TooLarge { count, cap });
        }
        let Some(nodes) = &self.nodes else { return Ok(Vec::new()) };
        let mut out: Vec<CircularOrder<T>> = if self.ground.len() == 1 {
            vec![CircularOrder { elems: self.ground.clone() }]
        } else {
            arrangements(nodes, nodes[0].adj[0], 0)
                .into_iter()
                .map(|rest| {
                    let mut seq = vec![self.ground[0].clone()];
                    seq.extend(rest.into_iter().map(|i| self.ground[i].clone()));
                    CircularOrder::from_distinct(seq)
                })
                .collect()
        };
        out.sort();
        Ok(out)
    }

    /// One represented ordering, or `None` for `EMPTY`.
    pub fn any_order(&self) -> Option<CircularOrder<T>> {
        let nodes = self.nodes.as_ref()?;
        if self.ground.len() == 1 {
            return Some(CircularOrder { elems: self.ground.clone() });
        }
        let mut seq = vec![0];
        first_arrangement(nodes, nodes[0].adj[0], 0, &mut seq);
        Some(CircularOrder::from_distinct(seq.into_iter().map(|i| self.ground[i].clone()).collect()))
    }

    /// Renames every leaf through the injective map `f`.
    pub fn relabel<U: Label>(&self, mut f: impl FnMut(&T) -> U) -> Result<PqTree<U>, PqError> {
        let labels: Vec<U> = self.ground.iter().map(&mut f).collect();
        let ground = sorted_ground(labels.clone()).map_err(|_| PqError::NotInjective)?;
        let leaf_map: Vec<Option<usize>> =
            labels.iter().map(|l| Some(ground.binary_search(l).unwrap())).collect();
        let nodes = self.nodes.as_ref().map(|nodes| finish(nodes.clone(), &leaf_map));
        Ok(PqTree { ground, nodes })
    }

    /// Ids of the internal (P and Q) nodes.
    pub fn internal_nodes(&self) -> Vec<NodeId> {
        match &self.nodes {
            None => Vec::new(),
            Some(nodes) => (self.ground.len()..nodes.len()).filter(|&v| !nodes[v].dead).collect(),
        }
    }

    pub fn node_kind(&self, v: NodeId) -> Option<NodeKind> {
        self.nodes.as_ref()?.get(v).map(|n| n.kind)
    }

    /// Neighbours of `v`, in circular order for Q-nodes.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        self.nodes.as_ref().and_then(|n| n.get(v)).map(|n| n.adj.as_slice()).unwrap_or(&[])
    }

    /// For every ground element (by index), the position in
    /// `neighbors(v)` of the branch at `v` that contains it. `None` for the
    /// leaf `v` itself.
    pub fn leaf_branches(&self, v: NodeId) -> Vec<Option<usize>> {
        let n = self.ground.len();
        let mut out = vec![None; n];
        let Some(nodes) = &self.nodes else { return out };
        for (b, &w) in nodes[v].adj.iter().enumerate() {
            let mut stack = vec![(w, v)];
            while let Some((x, from)) = stack.pop() {
                if x < n {
                    out[x] = Some(b);
                }
                for &y in &nodes[x].adj {
                    if y != from {
                        stack.push((y, x));
                    }
                }
            }
        }
        out
    }

    /// Structural key that is equal for two trees iff they represent the same
    /// orderings on the same ground set.
    pub fn canonical_form(&self) -> String {
        match &self.nodes {
            None => "EMPTY".to_string(),
            Some(_) if self.ground.len() == 1 => "0".to_string(),
            Some(nodes) => format!("0:{}", canon(nodes, nodes[0].adj[0], 0, &|i| i.to_string())),
        }
    }
}

impl<T: Label> PartialEq for PqTree<T> {
    fn eq(&self, other: &Self) -> bool {
        self.ground == other.ground && self.canonical_form() == other.canonical_form()
    }
}

impl<T: Label> Eq for PqTree<T> {}

impl<T: Label> fmt::Display for PqTree<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = |i: usize| format!("{:?}", self.ground[i]);
        match &self.nodes {
            None => write!(f, "EMPTY"),
            Some(_) if self.ground.len() == 1 => write!(f, "{}", label(0)),
            Some(nodes) => write!(f, "{} {}", label(0), canon(nodes, nodes[0].adj[0], 0, &label)),
        }
    }
}

impl<T: Label> fmt::Debug for PqTree<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PqTree({self})")
    }
}

fn sorted_ground<T: Label>(ground: impl IntoIterator<Item = T>) -> Result<Vec<T>, PqError> {
    let mut g: Vec<T> = ground.into_iter().collect();
    if g.is_empty() {
        return Err(PqError::EmptyGround);
    }
    g.sort();
    if let Some((a, _)) = g.iter().tuple_windows().find(|(a, b)| a == b) {
        return Err(PqError::Duplicate(format!("{a:?}")));
    }
    Ok(g)
}

/// Children of `v` when entered from `from`, in the order the node imposes.
fn children(nodes: &[Node], v: NodeId, from: NodeId) -> Vec<NodeId> {
    let adj = &nodes[v].adj;
    let pos = adj.iter().position(|&w| w == from).expect("from is a neighbour");
    (1..adj.len()).map(|k| adj[(pos + k) % adj.len()]).collect()
}

fn canon(nodes: &[Node], v: NodeId, from: NodeId, label: &dyn Fn(usize) -> String) -> String {
    match nodes[v].kind {
        NodeKind::Leaf => label(v),
        NodeKind::P => {
            let mut parts: Vec<String> =
                children(nodes, v, from).into_iter().map(|c| canon(nodes, c, v, label)).collect();
            parts.sort();
            format!("P({})", parts.join(", "))
        }
        NodeKind::Q => {
            let fwd: Vec<String> =
                children(nodes, v, from).into_iter().map(|c| canon(nodes, c, v, label)).collect();
            let mut rev = fwd.clone();
            rev.reverse();
            format!("Q[{}]", fwd.min(rev).join(", "))
        }
    }
}

fn arrangements(nodes: &[Node], v: NodeId, from: NodeId) -> Vec<Vec<usize>> {
    match nodes[v].kind {
        NodeKind::Leaf => vec![vec![v]],
        NodeKind::P => {
            let kids = children(nodes, v, from);
            let sub: Vec<Vec<Vec<usize>>> = kids.iter().map(|&c| arrangements(nodes, c, v)).collect();
            let mut out = Vec::new();
            for perm in (0..kids.len()).permutations(kids.len()) {
                concat_products(&perm.iter().map(|&i| &sub[i]).collect::<Vec<_>>(), &mut out);
            }
            out
        }
        NodeKind::Q => {
            let kids = children(nodes, v, from);
            let sub: Vec<Vec<Vec<usize>>> = kids.iter().map(|&c| arrangements(nodes, c, v)).collect();
            let mut out = Vec::new();
            concat_products(&sub.iter().collect::<Vec<_>>(), &mut out);
            concat_products(&sub.iter().rev().collect::<Vec<_>>(), &mut out);
            out
        }
    }
}

fn concat_products(parts: &[&Vec<Vec<usize>>], out: &mut Vec<Vec<usize>>) {
    let mut acc: Vec<Vec<usize>> = vec![Vec::new()];
    for part in parts {
        acc = acc
            .iter()
            .flat_map(|prefix| {
                part.iter().map(move |s| {
                    let mut p = prefix.clone();
                    p.extend_from_slice(s);
                    p
                })
            })
            .collect();
    }
    out.extend(acc);
}

fn first_arrangement(nodes: &[Node], v: NodeId, from: NodeId, out: &mut Vec<usize>) {
    if nodes[v].kind == NodeKind::Leaf {
        out.push(v);
        return;
    }
    for c in children(nodes, v, from) {
        first_arrangement(nodes, c, v, out);
    }
}

/// The tree rooted at leaf 0, with subtree leaf sets.
struct Rooted {
    n: usize,
    parent: Vec<Option<NodeId>>,
    // Preorder; children after parents.
    order: Vec<NodeId>,
}

impl Rooted {
    fn new(nodes: &[Node], n: usize) -> Self {
        let mut parent = vec![None; nodes.len()];
        let mut order = Vec::with_capacity(nodes.len());
        let mut stack = vec![0];
        let mut seen = vec![false; nodes.len()];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            order.push(v);
            for &w in &nodes[v].adj {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(v);
                    stack.push(w);
                }
            }
        }
        Rooted { n, parent, order }
    }

    fn subtree_mask(&self, v: NodeId) -> Vec<bool> {
        let mut inside = vec![false; self.parent.len()];
        inside[v] = true;
        let mut mask = vec![false; self.n];
        for &x in &self.order {
            if x != v {
                if let Some(p) = self.parent[x] {
                    if inside[p] {
                        inside[x] = true;
                    }
                }
            }
            if inside[x] && x < self.n {
                mask[x] = true;
            }
        }
        mask
    }

    /// Leaves reached from `v` through its neighbour `w`.
    fn branch_mask(&self, v: NodeId, w: NodeId) -> Vec<bool> {
        if self.parent[w] == Some(v) {
            self.subtree_mask(w)
        } else {
            self.subtree_mask(v).into_iter().map(|b| !b).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Full,
    Empty,
    Partial,
}

fn classify(full: usize, size: usize) -> Side {
    if full == 0 {
        Side::Empty
    } else if full == size {
        Side::Full
    } else {
        Side::Partial
    }
}

/// One reduction step. Returns `None` if no ordering survives.
fn reduce_nodes(nodes: &[Node], full: &[bool]) -> Option<Vec<Node>> {
    let n = full.len();
    let fx = full.iter().filter(|b| **b).count();
    if fx <= 1 || n - fx <= 1 {
        return Some(nodes.to_vec());
    }
    let rooted = Rooted::new(nodes, n);
    let mut sub_full = vec![0usize; nodes.len()];
    let mut sub_size = vec![0usize; nodes.len()];
    for &v in rooted.order.iter().rev() {
        if v < n {
            sub_size[v] += 1;
            sub_full[v] += full[v] as usize;
        }
        if let Some(p) = rooted.parent[v] {
            sub_full[p] += sub_full[v];
            sub_size[p] += sub_size[v];
        }
    }
    // Label of the branch at `v` through neighbour `w`.
    let side = |v: NodeId, w: NodeId| -> Side {
        if rooted.parent[w] == Some(v) {
            classify(sub_full[w], sub_size[w])
        } else {
            classify(fx - sub_full[v], n - sub_size[v])
        }
    };
    let terminal: Vec<(NodeId, NodeId)> = (1..nodes.len())
        .filter(|&v| !nodes[v].dead)
        .filter_map(|v| {
            let p = rooted.parent[v]?;
            (side(p, v) == Side::Partial && side(v, p) == Side::Partial).then_some((p, v))
        })
        .collect();

    let mut out = nodes.to_vec();
    if terminal.is_empty() {
        let center = (n..nodes.len())
            .find(|&c| !nodes[c].dead && nodes[c].adj.iter().all(|&w| side(c, w) != Side::Partial))?;
        let sides: Vec<Side> = nodes[center].adj.iter().map(|&w| side(center, w)).collect();
        match nodes[center].kind {
            NodeKind::Q => {
                let flags: Vec<bool> = sides.iter().map(|s| *s == Side::Full).collect();
                if boundary_count(&flags) > 2 {
                    return None;
                }
            }
            _ => {
                let fulls: Vec<NodeId> =
                    nodes[center].adj.iter().zip(&sides).filter(|(_, s)| **s == Side::Full).map(|(w, _)| *w).collect();
                let empties: Vec<NodeId> =
                    nodes[center].adj.iter().zip(&sides).filter(|(_, s)| **s == Side::Empty).map(|(w, _)| *w).collect();
                if fulls.len() >= 2 && empties.len() >= 2 {
                    let pe = out.len();
                    out.push(Node::new(NodeKind::P));
                    for &w in &empties {
                        replace_neighbor(&mut out, w, center, pe);
                    }
                    out[pe].adj = empties;
                    out[pe].adj.push(center);
                    out[center].adj = fulls;
                    out[center].adj.push(pe);
                }
            }
        }
        return Some(out);
    }

    // The terminal edges must form a path.
    let mut tdeg: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for &(a, b) in &terminal {
        tdeg.entry(a).or_default().push(b);
        tdeg.entry(b).or_default().push(a);
    }
    if tdeg.values().any(|nb| nb.len() > 2) {
        return None;
    }
    let start = *tdeg.iter().find(|(_, nb)| nb.len() == 1)?.0;
    let mut path = vec![start];
    let mut prev = None;
    let mut cur = start;
    loop {
        let next = tdeg[&cur].iter().copied().find(|&x| Some(x) != prev);
        match next {
            Some(x) => {
                prev = Some(cur);
                cur = x;
                path.push(x);
            }
            None => break,
        }
    }
    if path.len() != terminal.len() + 1 {
        return None;
    }

    // Split every path node into a full and an empty segment.
    let mut full_segs: Vec<Vec<NodeId>> = Vec::with_capacity(path.len());
    let mut empty_segs: Vec<Vec<NodeId>> = Vec::with_capacity(path.len());
    for (i, &p) in path.iter().enumerate() {
        let before = (i > 0).then(|| path[i - 1]);
        let after = path.get(i + 1).copied();
        let (fseq, eseq) = match nodes[p].kind {
            NodeKind::Q => split_q(&nodes[p].adj, before, after, |w| side(p, w))?,
            _ => {
                let others = nodes[p].adj.iter().copied().filter(|&w| Some(w) != before && Some(w) != after);
                let (f, e): (Vec<NodeId>, Vec<NodeId>) = others.partition(|&w| side(p, w) == Side::Full);
                (f, e)
            }
        };
        full_segs.push(fseq);
        empty_segs.push(eseq);
    }

    let c = out.len();
    out.push(Node::new(NodeKind::Q));
    let mut cycle = Vec::new();
    let attach = |out: &mut Vec<Node>, p: NodeId, seg: Vec<NodeId>, kind: NodeKind, cycle: &mut Vec<NodeId>| {
        if seg.is_empty() {
            return;
        }
        if kind == NodeKind::P && seg.len() >= 2 {
            let np = out.len();
            out.push(Node::new(NodeKind::P));
            for &w in &seg {
                replace_neighbor(out, w, p, np);
            }
            out[np].adj = seg;
            out[np].adj.push(c);
            cycle.push(np);
        } else {
            for &w in &seg {
                replace_neighbor(out, w, p, c);
            }
            cycle.extend(seg);
        }
    };
    for (i, &p) in path.iter().enumerate() {
        attach(&mut out, p, std::mem::take(&mut full_segs[i]), nodes[p].kind, &mut cycle);
    }
    for (i, &p) in path.iter().enumerate().rev() {
        attach(&mut out, p, std::mem::take(&mut empty_segs[i]), nodes[p].kind, &mut cycle);
    }
    out[c].adj = cycle;
    for &p in &path {
        out[p].dead = true;
        out[p].adj.clear();
    }
    let identity: Vec<Option<usize>> = (0..n).map(Some).collect();
    Some(finish(out, &identity))
}

/// Orients a Q-node on the terminal path so that it reads
/// `before, full..., after, empty...` cyclically. Returns the two segments.
fn split_q(
    adj: &[NodeId],
    before: Option<NodeId>,
    after: Option<NodeId>,
    side: impl Fn(NodeId) -> Side,
) -> Option<(Vec<NodeId>, Vec<NodeId>)> {
    let anchor = before.or(after).expect("path node has a path neighbour");
    for reversed in [false, true] {
        let mut seq: Vec<NodeId> = adj.to_vec();
        if reversed {
            seq.reverse();
        }
        let pos = seq.iter().position(|&w| w == anchor).unwrap();
        seq.rotate_left(pos);
        let rest = &seq[1..];
        let (fseq, eseq): (Vec<NodeId>, Vec<NodeId>) = match (before, after) {
            (Some(_), Some(b)) => {
                let bpos = rest.iter().position(|&w| w == b).unwrap();
                (rest[..bpos].to_vec(), rest[bpos + 1..].to_vec())
            }
            (Some(_), None) => {
                // reads before, full..., empty...
                let k = rest.iter().take_while(|&&w| side(w) == Side::Full).count();
                (rest[..k].to_vec(), rest[k..].to_vec())
            }
            (None, Some(_)) => {
                // reads after, empty..., full...
                let k = rest.iter().take_while(|&&w| side(w) == Side::Empty).count();
                (rest[k..].to_vec(), rest[..k].to_vec())
            }
            (None, None) => unreachable!(),
        };
        if fseq.iter().all(|&w| side(w) == Side::Full) && eseq.iter().all(|&w| side(w) == Side::Empty) {
            return Some((fseq, eseq));
        }
    }
    None
}

fn replace_neighbor(nodes: &mut [Node], v: NodeId, old: NodeId, new: NodeId) {
    for w in nodes[v].adj.iter_mut() {
        if *w == old {
            *w = new;
        }
    }
}

fn detach(nodes: &mut [Node], v: NodeId) {
    let adj = std::mem::take(&mut nodes[v].adj);
    for w in adj {
        nodes[w].adj.retain(|&x| x != v);
    }
    nodes[v].dead = true;
}

/// Restores the canonical shape and compacts the arena. `leaf_map` sends each
/// old leaf index to its new index, or `None` if the leaf was removed.
fn finish(mut nodes: Vec<Node>, leaf_map: &[Option<usize>]) -> Vec<Node> {
    let old_n = leaf_map.len();
    loop {
        let mut changed = false;
        for v in old_n..nodes.len() {
            if nodes[v].dead {
                continue;
            }
            match nodes[v].adj.len() {
                0 | 1 => {
                    detach(&mut nodes, v);
                    changed = true;
                }
                2 => {
                    let (a, b) = (nodes[v].adj[0], nodes[v].adj[1]);
                    replace_neighbor(&mut nodes, a, v, b);
                    replace_neighbor(&mut nodes, b, v, a);
                    nodes[v].adj.clear();
                    nodes[v].dead = true;
                    changed = true;
                }
                3 if nodes[v].kind == NodeKind::Q => nodes[v].kind = NodeKind::P,
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }
    let new_n = leaf_map.iter().flatten().count();
    let mut remap = vec![usize::MAX; nodes.len()];
    for (old, new) in leaf_map.iter().enumerate() {
        if let Some(new) = new {
            remap[old] = *new;
        }
    }
    let mut next = new_n;
    for v in old_n..nodes.len() {
        if !nodes[v].dead {
            remap[v] = next;
            next += 1;
        }
    }
    let mut out: Vec<Node> = (0..next).map(|_| Node::new(NodeKind::Leaf)).collect();
    for (v, node) in nodes.into_iter().enumerate() {
        if node.dead || remap[v] == usize::MAX {
            continue;
        }
        out[remap[v]] = Node { kind: node.kind, adj: node.adj.iter().map(|&w| remap[w]).collect(), dead: false };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn co(s: &str) -> CircularOrder<char> {
        CircularOrder::new(s.chars().collect()).unwrap()
    }

    fn u(s: &str) -> PqTree<char> {
        PqTree::universal(s.chars()).unwrap()
    }

    fn set(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn circular_order_equality_is_rotation_only() {
        assert_eq!(co("abc"), co("bca"));
        assert_ne!(co("abc"), co("acb"));
        assert_eq!(co("abcd").reversed(), co("dcba"));
        assert!(CircularOrder::new(vec!['a', 'a']).is_err());
    }

    #[test]
    fn consecutive_wraps_around() {
        assert!(co("abcd").is_consecutive(|c| "da".contains(*c)));
        assert!(!co("abcd").is_consecutive(|c| "ac".contains(*c)));
        assert!(co("abcd").is_consecutive(|_| true));
    }

    #[test]
    fn universal_counts() {
        assert_eq!(u("abc").order_count(), 2);
        assert_eq!(u("abcd").order_count(), 6);
        assert_eq!(u("a").enumerate(10).unwrap(), vec![co("a")]);
        assert_eq!(u("ab").enumerate(10).unwrap(), vec![co("ab")]);
        assert!(PqTree::<char>::universal([]).is_err());
        assert!(PqTree::universal(['a', 'a']).is_err());
    }

    #[test]
    fn reduce_pair_of_four() {
        let t = u("abcd").reduce(&set("ab")).unwrap();
        assert_eq!(t.order_count(), 4);
        assert!(!t.contains(&co("acbd")).unwrap());
        assert!(t.contains(&co("abdc")).unwrap());
        assert_eq!(u("abcd").reduce(&set("abcd")).unwrap(), u("abcd"));
        assert!(u("abc").reduce(&set("x")).is_err());
    }

    #[test]
    fn reduce_to_empty() {
        let t = u("abcd").reduce(&set("ab")).unwrap().reduce(&set("bc")).unwrap();
        assert_eq!(t.enumerate(10).unwrap(), vec![co("abcd"), co("adcb")]);
        let e = t.reduce(&set("ac")).unwrap();
        assert!(e.is_empty());
        assert!(e.enumerate(10).unwrap().is_empty());
        assert!(!e.contains(&co("abcd")).unwrap());
    }

    #[test]
    fn projection_basics() {
        assert_eq!(u("abcd").project(&set("abc")).unwrap(), u("abc"));
        let t = u("abcd").reduce(&set("ab")).unwrap();
        assert_eq!(t.project(&set("acd")).unwrap(), u("acd"));
        let single = t.project(&set("a")).unwrap();
        assert_eq!(single.ground(), &['a']);
        assert_eq!(single.order_count(), 1);
        assert_eq!(t.project(&[]).unwrap_err(), PqError::EmptyProjection);
    }

    #[test]
    fn intersection_identity_and_idempotence() {
        let t = u("abcde").reduce(&set("abc")).unwrap().reduce(&set("bc")).unwrap();
        assert_eq!(t.intersect(&u("abcde")).unwrap(), t);
        assert_eq!(t.intersect(&t).unwrap(), t);
        assert_eq!(t.intersect(&u("abcd")).unwrap_err(), PqError::GroundMismatch);
    }

    #[test]
    fn enumerate_respects_cap() {
        assert!(matches!(u("abcdef").enumerate(10), Err(PqError::TooLarge { count: 120, cap: 10 })));
    }

    #[test]
    fn relabel_keeps_structure() {
        let t = u("abcd").reduce(&set("ab")).unwrap();
        let r = t.relabel(|c| c.to_ascii_uppercase()).unwrap();
        assert_eq!(r, PqTree::universal("ABCD".chars()).unwrap().reduce(&['A', 'B']).unwrap());
        assert_eq!(t.relabel(|_| 0).unwrap_err(), PqError::NotInjective);
    }

    #[test]
    fn display_is_stable() {
        let t = u("abcde").reduce(&set("bc")).unwrap().reduce(&set("bcd")).unwrap();
        assert_eq!(t.to_string(), "'a' P('e', P('d', P('b', 'c')))");
        let q = u("abcde").reduce(&set("ab")).unwrap().reduce(&set("bc")).unwrap().reduce(&set("cd")).unwrap();
        assert_eq!(q.to_string(), "'a' Q['b', 'c', 'd', 'e']");
    }
}
