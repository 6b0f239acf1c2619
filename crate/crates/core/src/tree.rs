//! Rooted binary leaf-labelled trees.
//!
//! A [`PhyloTree`] is an immutable node table. Node ids are indices into the
//! table and stay fixed for the lifetime of the value; every tree carries a
//! [`PreorderIndex`] so ancestor queries are interval containment checks.
//!
//! Edges are named by their child node: every non-root node has exactly one
//! parent edge, so `Element::Edge(v)` is the edge from `parent(v)` to `v`.

use std::borrow::Borrow;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

pub type NodeId = usize;

/// A leaf label. Restricted to `[A-Za-z0-9_.-]+` and compared case-sensitively.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Taxon(String);

impl Taxon {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if !name.is_empty() && name.bytes().all(is_taxon_byte) {
            Ok(Taxon(name))
        } else {
            Err(Error::InvalidTaxon(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub(crate) fn is_taxon_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-')
}

impl Borrow<str> for Taxon {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Taxon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An edge or a vertex of a tree. Edges are identified by their child endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Element {
    Node(NodeId),
    Edge(NodeId),
}

#[derive(Clone, Debug)]
struct Node {
    parent: Option<NodeId>,
    children: Option<[NodeId; 2]>,
    taxon: Option<Taxon>,
}

/// Preorder visit numbers and descendant intervals for one tree.
///
/// `u` is a strict ancestor of `v` iff `lo(u) <= visit(v) <= hi(u)` and `u != v`.
#[derive(Clone, Debug, Default)]
pub struct PreorderIndex {
    visit: Vec<usize>,
    hi: Vec<usize>,
    depth: Vec<usize>,
    order: Vec<NodeId>,
}

impl PreorderIndex {
    pub fn visit(&self, u: NodeId) -> usize {
        self.visit[u]
    }

    /// Smallest preorder number in the subtree of `u`, which is `u`'s own.
    pub fn lo(&self, u: NodeId) -> usize {
        self.visit[u]
    }

    pub fn hi(&self, u: NodeId) -> usize {
        self.hi[u]
    }

    pub fn depth(&self, u: NodeId) -> usize {
        self.depth[u]
    }

    /// Nodes in preorder; `order()[visit(u)] == u`.
    pub fn order(&self) -> &[NodeId] {
        &self.order
    }

    pub fn is_ancestor(&self, u: NodeId, v: NodeId) -> bool {
        u != v && self.is_ancestor_or_self(u, v)
    }

    pub fn is_ancestor_or_self(&self, u: NodeId, v: NodeId) -> bool {
        self.visit[u] <= self.visit[v] && self.visit[v] <= self.hi[u]
    }

    /// Subtree size of `u`, counted in nodes.
    pub fn subtree_len(&self, u: NodeId) -> usize {
        self.hi[u] - self.visit[u] + 1
    }
}

/// Incremental construction of a [`PhyloTree`] from the leaves up.
#[derive(Default)]
pub struct TreeBuilder {
    nodes: Vec<Node>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        TreeBuilder {
            nodes: Vec::with_capacity(n),
        }
    }

    pub fn leaf(&mut self, taxon: Taxon) -> NodeId {
        self.nodes.push(Node {
            parent: None,
            children: None,
            taxon: Some(taxon),
        });
        self.nodes.len() - 1
    }

    /// Creates a new internal node over two parentless nodes.
    ///
    /// # Panics
    /// If either child already has a parent or the two children coincide.
    pub fn join(&mut self, left: NodeId, right: NodeId) -> NodeId {
        assert_ne!(left, right, "join of a node with itself");
        assert!(
            self.nodes[left].parent.is_none(),
            "node {left} already attached"
        );
        assert!(
            self.nodes[right].parent.is_none(),
            "node {right} already attached"
        );
        let id = self.nodes.len();
        self.nodes.push(Node {
            parent: None,
            children: Some([left, right]),
            taxon: None,
        });
        self.nodes[left].parent = Some(id);
        self.nodes[right].parent = Some(id);
        id
    }

    pub fn finish(self, root: NodeId) -> Result<PhyloTree> {
        PhyloTree::from_nodes(self.nodes, root)
    }
}

#[derive(Clone, Debug)]
pub struct PhyloTree {
    nodes: Vec<Node>,
    root: NodeId,
    index: PreorderIndex,
    leaf_of: HashMap<Taxon, NodeId>,
}

impl PhyloTree {
    fn from_nodes(nodes: Vec<Node>, root: NodeId) -> Result<Self> {
        if root >= nodes.len() {
            return Err(Error::NoSuchNode(root));
        }
        if nodes[root].parent.is_some() {
            return Err(Error::MalformedTree("root has a parent".into()));
        }
        let n = nodes.len();
        let mut index = PreorderIndex {
            visit: vec![usize::MAX; n],
            hi: vec![0; n],
            depth: vec![0; n],
            order: Vec::with_capacity(n),
        };
        let mut leaf_of = HashMap::new();
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            if index.visit[u] != usize::MAX {
                return Err(Error::MalformedTree(format!("node {u} reached twice")));
            }
            index.visit[u] = index.order.len();
            index.order.push(u);
            match (&nodes[u].children, &nodes[u].taxon) {
                (Some([l, r]), None) => {
                    for &c in [l, r] {
                        if nodes[c].parent != Some(u) {
                            return Err(Error::MalformedTree(format!(
                                "child {c} does not point back to {u}"
                            )));
                        }
                        index.depth[c] = index.depth[u] + 1;
                    }
                    stack.push(*r);
                    stack.push(*l);
                }
                (None, Some(t)) => {
                    if leaf_of.insert(t.clone(), u).is_some() {
                        return Err(Error::DuplicateTaxon(t.to_string()));
                    }
                }
                (Some(_), Some(t)) => {
                    return Err(Error::MalformedTree(format!(
                        "internal node labelled `{t}`"
                    )))
                }
                (None, None) => return Err(Error::MalformedTree(format!("unlabelled leaf {u}"))),
            }
        }
        if index.order.len() != n {
            return Err(Error::MalformedTree("unreachable nodes in table".into()));
        }
        for &u in index.order.iter().rev() {
            index.hi[u] = match nodes[u].children {
                Some([_, r]) => index.hi[r],
                None => index.visit[u],
            };
        }
        Ok(PhyloTree {
            nodes,
            root,
            index,
            leaf_of,
        })
    }

    pub fn single(taxon: Taxon) -> Self {
        let mut b = TreeBuilder::new();
        let root = b.leaf(taxon);
        b.finish(root).expect("single leaf is valid")
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Number of nodes in the table.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_of.len()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn index(&self) -> &PreorderIndex {
        &self.index
    }

    pub fn contains(&self, u: NodeId) -> bool {
        u < self.nodes.len()
    }

    pub fn parent(&self, u: NodeId) -> Option<NodeId> {
        self.nodes[u].parent
    }

    pub fn children(&self, u: NodeId) -> Option<[NodeId; 2]> {
        self.nodes[u].children
    }

    pub fn is_leaf(&self, u: NodeId) -> bool {
        self.nodes[u].children.is_none()
    }

    pub fn taxon(&self, u: NodeId) -> Option<&Taxon> {
        self.nodes[u].taxon.as_ref()
    }

    pub fn leaf(&self, name: &str) -> Option<NodeId> {
        self.leaf_of.get(name).copied()
    }

    pub fn has_taxon(&self, name: &str) -> bool {
        self.leaf_of.contains_key(name)
    }

    pub fn sibling(&self, u: NodeId) -> Option<NodeId> {
        let [l, r] = self.children(self.parent(u)?)?;
        Some(if l == u { r } else { l })
    }

    /// Leaves in preorder (left to right).
    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.index
            .order
            .iter()
            .copied()
            .filter(|&u| self.is_leaf(u))
    }

    pub fn taxa(&self) -> impl Iterator<Item = &Taxon> + '_ {
        self.leaves()
            .map(|u| self.taxon(u).expect("leaf carries a taxon"))
    }

    pub fn taxon_set(&self) -> BTreeSet<Taxon> {
        self.leaf_of.keys().cloned().collect()
    }

    /// Non-root nodes in preorder, i.e. every edge by its child.
    pub fn edges(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.index.order.iter().copied().skip(1)
    }

    /// Nodes of the subtree rooted at `u`, in preorder.
    pub fn subtree(&self, u: NodeId) -> &[NodeId] {
        &self.index.order[self.index.visit(u)..=self.index.hi(u)]
    }

    pub fn leaves_below(&self, u: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.subtree(u).iter().copied().filter(|&v| self.is_leaf(v))
    }

    pub fn taxa_below(&self, u: NodeId) -> Vec<Taxon> {
        let mut out: Vec<Taxon> = self
            .leaves_below(u)
            .map(|v| self.taxon(v).expect("leaf").clone())
            .collect();
        out.sort();
        out
    }

    pub fn lca_nodes(&self, mut u: NodeId, mut v: NodeId) -> NodeId {
        while self.index.depth(u) > self.index.depth(v) {
            u = self.parent(u).expect("depth > 0");
        }
        while self.index.depth(v) > self.index.depth(u) {
            v = self.parent(v).expect("depth > 0");
        }
        while u != v {
            u = self.parent(u).expect("common root");
            v = self.parent(v).expect("common root");
        }
        u
    }

    /// Lowest common ancestor of a nonempty set of nodes.
    pub fn lca_of_nodes<I: IntoIterator<Item = NodeId>>(&self, nodes: I) -> Option<NodeId> {
        let mut lo: Option<NodeId> = None;
        let mut hi_visit = 0;
        for u in nodes {
            let v = self.index.visit(u);
            match lo {
                Some(l) if self.index.visit(l) <= v => {}
                _ => lo = Some(u),
            }
            hi_visit = hi_visit.max(v);
        }
        let mut u = lo?;
        while self.index.hi(u) < hi_visit {
            u = self.parent(u).expect("root spans everything");
        }
        Some(u)
    }

    /// Most recent common ancestor of the named leaves.
    pub fn lca<S: AsRef<str>>(&self, leaves: &[S]) -> Result<NodeId> {
        let nodes = self.resolve(leaves)?;
        self.lca_of_nodes(nodes).ok_or(Error::EmptyTaxa)
    }

    pub(crate) fn resolve<S: AsRef<str>>(&self, leaves: &[S]) -> Result<Vec<NodeId>> {
        leaves
            .iter()
            .map(|s| {
                self.leaf(s.as_ref())
                    .ok_or_else(|| Error::UnknownTaxon(s.as_ref().to_string()))
            })
            .collect()
    }

    /// The minimal subtree connecting `leaves`, with degree-2 vertices suppressed.
    pub fn restrict<S: AsRef<str>>(&self, leaves: &[S]) -> Result<PhyloTree> {
        let nodes = self.resolve(leaves)?;
        if nodes.is_empty() {
            return Err(Error::EmptyTaxa);
        }
        Ok(self.restrict_nodes(&nodes))
    }

    /// [`restrict`](Self::restrict) on leaf node ids. Children keep their order.
    pub(crate) fn restrict_nodes(&self, leaves: &[NodeId]) -> PhyloTree {
        let mut keep = vec![false; self.len()];
        for &u in leaves {
            debug_assert!(self.is_leaf(u));
            keep[u] = true;
        }
        let mut image: Vec<Option<NodeId>> = vec![None; self.len()];
        let mut b = TreeBuilder::with_capacity(2 * leaves.len());
        for &u in self.index.order.iter().rev() {
            image[u] = match self.children(u) {
                None if keep[u] => Some(b.leaf(self.taxon(u).expect("leaf").clone())),
                None => None,
                Some([l, r]) => match (image[l], image[r]) {
                    (Some(x), Some(y)) => Some(b.join(x, y)),
                    (x, None) => x,
                    (None, y) => y,
                },
            };
        }
        let root = image[self.root].expect("nonempty leaf set");
        b.finish(root)
            .expect("restriction of a valid tree is valid")
    }

    /// `x < y`: `y` lies on the path from `x` to the root.
    pub fn element_less(&self, x: Element, y: Element) -> Result<bool> {
        for e in [x, y] {
            match e {
                Element::Node(u) if !self.contains(u) => return Err(Error::NoSuchNode(u)),
                Element::Edge(u) if !self.contains(u) || u == self.root => {
                    return Err(Error::NoSuchEdge(format!("edge above node {u}")))
                }
                _ => {}
            }
        }
        let ix = &self.index;
        Ok(match (x, y) {
            (Element::Node(u), Element::Node(w)) => ix.is_ancestor(w, u),
            (Element::Node(u), Element::Edge(c)) => ix.is_ancestor_or_self(c, u),
            (Element::Edge(c), Element::Node(w)) => ix.is_ancestor(w, c),
            (Element::Edge(c), Element::Edge(d)) => ix.is_ancestor(d, c),
        })
    }

    /// Order-independent canonical string: children sorted at every node.
    pub fn canonical(&self) -> String {
        let mut form: Vec<String> = vec![String::new(); self.len()];
        for &u in self.index.order.iter().rev() {
            form[u] = match self.children(u) {
                None => self.taxon(u).expect("leaf").to_string(),
                Some([l, r]) => {
                    let (a, b) = (std::mem::take(&mut form[l]), std::mem::take(&mut form[r]));
                    let (a, b) = if a <= b { (a, b) } else { (b, a) };
                    format!("({a},{b})")
                }
            };
        }
        std::mem::take(&mut form[self.root])
    }

    /// Rooted leaf-labelled isomorphism.
    pub fn isomorphic(&self, other: &PhyloTree) -> bool {
        self.leaf_count() == other.leaf_count() && self.canonical() == other.canonical()
    }
}

impl fmt::Display for PhyloTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::newick::serialize(self))
    }
}

/// All pairwise leaf LCAs of one tree, indexed by node id.
#[derive(Clone, Debug)]
pub(crate) struct PairLca {
    n: usize,
    table: Vec<NodeId>,
}

impl PairLca {
    pub fn new(t: &PhyloTree) -> Self {
        let n = t.len();
        let mut table = vec![usize::MAX; n * n];
        for u in 0..n {
            if let Some([l, r]) = t.children(u) {
                let left: Vec<NodeId> = t.leaves_below(l).collect();
                for y in t.leaves_below(r) {
                    for &x in &left {
                        table[x * n + y] = u;
                        table[y * n + x] = u;
                    }
                }
            } else {
                table[u * n + u] = u;
            }
        }
        PairLca { n, table }
    }

    pub fn get(&self, x: NodeId, y: NodeId) -> NodeId {
        self.table[x * self.n + y]
    }
}
