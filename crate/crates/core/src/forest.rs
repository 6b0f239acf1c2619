//! Forests of a tree: edge deletion and agreement-forest validation.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tree::{NodeId, PhyloTree, Taxon};

/// An edge of a forest: the parent edge of `child` in component `component`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ForestEdge {
    pub component: usize,
    pub child: NodeId,
}

/// A set of components with pairwise disjoint leaf sets.
#[derive(Clone, Debug)]
pub struct Forest {
    components: Vec<PhyloTree>,
    origin_labels: BTreeSet<Taxon>,
    owner: HashMap<Taxon, usize>,
}

/// The first reason a forest fails to be an agreement forest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// The tree's restriction to the component's leaves has another shape.
    Restriction { tree: usize, component: usize },
    /// Two components' connecting subtrees share a node of the tree.
    Overlap {
        tree: usize,
        components: (usize, usize),
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Restriction { tree, component } => write!(
                f,
                "component {component} is not the restriction of tree {tree} to its leaves"
            ),
            Violation::Overlap {
                tree,
                components: (x, y),
            } => write!(f, "components {x} and {y} overlap in tree {tree}"),
        }
    }
}

impl Forest {
    /// The one-component forest `{t}`.
    pub fn from_tree(t: &PhyloTree) -> Self {
        Self::from_components(vec![t.clone()]).expect("a tree is a forest")
    }

    /// Builds a forest whose label set is the union of the components'.
    pub fn from_components(components: Vec<PhyloTree>) -> Result<Self> {
        let mut owner = HashMap::new();
        for (i, c) in components.iter().enumerate() {
            for x in c.taxa() {
                if owner.insert(x.clone(), i).is_some() {
                    return Err(Error::DuplicateTaxon(x.to_string()));
                }
            }
        }
        let origin_labels = owner.keys().cloned().collect();
        Ok(Forest {
            components,
            origin_labels,
            owner,
        })
    }

    pub fn components(&self) -> &[PhyloTree] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &PhyloTree {
        &self.components[i]
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn origin_labels(&self) -> &BTreeSet<Taxon> {
        &self.origin_labels
    }

    pub fn edge_count(&self) -> usize {
        self.components.iter().map(|c| c.edge_count()).sum()
    }

    pub fn component_of(&self, taxon: &str) -> Option<usize> {
        self.owner.get(taxon).copied()
    }

    /// Every edge of every component, components in order, edges in preorder.
    pub fn edges(&self) -> Vec<ForestEdge> {
        self.components
            .iter()
            .enumerate()
            .flat_map(|(component, c)| c.edges().map(move |child| ForestEdge { component, child }))
            .collect()
    }

    /// Deletes `edges`, returning a new forest.
    pub fn cut_edges(&self, edges: &[ForestEdge]) -> Result<Forest> {
        let mut f = self.clone();
        f.cut_in_place(edges)?;
        Ok(f)
    }

    /// Deletes `edges` in place.
    ///
    /// A component that loses edges is replaced by its labelled pieces: the
    /// topmost piece keeps the component's index and the others are appended,
    /// in preorder of their top vertices. Returns the indices of all pieces.
    pub fn cut_in_place(&mut self, edges: &[ForestEdge]) -> Result<Vec<usize>> {
        let mut by_component: Vec<(usize, Vec<NodeId>)> = Vec::new();
        for e in edges {
            let c = self
                .components
                .get(e.component)
                .ok_or_else(|| Error::NoSuchEdge(format!("no component {}", e.component)))?;
            if !c.contains(e.child) || e.child == c.root() {
                return Err(Error::NoSuchEdge(format!(
                    "component {} has no edge above node {}",
                    e.component, e.child
                )));
            }
            match by_component.iter_mut().find(|(i, _)| *i == e.component) {
                Some((_, v)) => v.push(e.child),
                None => by_component.push((e.component, vec![e.child])),
            }
        }
        by_component.sort_by_key(|(i, _)| *i);

        let mut touched = Vec::new();
        for (ci, cut) in by_component {
            let mut pieces = split(&self.components[ci], &cut).into_iter();
            self.components[ci] = pieces.next().expect("a component keeps at least one leaf");
            touched.push(ci);
            for p in pieces {
                self.components.push(p);
                touched.push(self.components.len() - 1);
            }
        }
        self.reindex();
        Ok(touched)
    }

    fn reindex(&mut self) {
        self.owner.clear();
        for (i, c) in self.components.iter().enumerate() {
            for x in c.taxa() {
                self.owner.insert(x.clone(), i);
            }
        }
    }

    fn check_labels(&self, trees: &[PhyloTree]) -> Result<()> {
        if self.owner.len() != self.origin_labels.len() {
            return Err(Error::LabelMismatch(
                "forest components do not cover the origin label set".into(),
            ));
        }
        for (i, t) in trees.iter().enumerate() {
            if t.leaf_count() != self.origin_labels.len()
                || !self.origin_labels.iter().all(|x| t.has_taxon(x.as_str()))
            {
                return Err(Error::LabelMismatch(format!(
                    "tree {i} has a different label set from the forest"
                )));
            }
        }
        Ok(())
    }

    /// Returns the first violation of the agreement-forest conditions, if any.
    pub fn check_agreement(&self, trees: &[PhyloTree]) -> Result<Option<Violation>> {
        self.check_labels(trees)?;
        for (ti, t) in trees.iter().enumerate() {
            let mut owner: Vec<Option<usize>> = vec![None; t.len()];
            for (ci, c) in self.components.iter().enumerate() {
                let leaves: Vec<NodeId> = c
                    .taxa()
                    .map(|x| t.leaf(x.as_str()).expect("labels checked"))
                    .collect();
                if t.restrict_nodes(&leaves).canonical() != c.canonical() {
                    return Ok(Some(Violation::Restriction {
                        tree: ti,
                        component: ci,
                    }));
                }
                let top = t.lca_of_nodes(leaves.iter().copied()).expect("nonempty");
                for &x in &leaves {
                    let mut u = x;
                    loop {
                        match owner[u] {
                            Some(o) if o == ci => break,
                            Some(o) => {
                                return Ok(Some(Violation::Overlap {
                                    tree: ti,
                                    components: (o, ci),
                                }))
                            }
                            None => owner[u] = Some(ci),
                        }
                        if u == top {
                            break;
                        }
                        u = t.parent(u).expect("top is an ancestor");
                    }
                }
            }
        }
        Ok(None)
    }

    pub fn is_agreement_forest(&self, trees: &[PhyloTree]) -> Result<bool> {
        Ok(self.check_agreement(trees)?.is_none())
    }

    /// Canonical forms of all components, sorted.
    pub fn canonical(&self) -> Vec<String> {
        let mut v: Vec<String> = self.components.iter().map(|c| c.canonical()).collect();
        v.sort();
        v
    }

    /// Isomorphism as leaf-labelled forests (component order is irrelevant).
    pub fn isomorphic(&self, other: &Forest) -> bool {
        self.len() == other.len() && self.canonical() == other.canonical()
    }
}

/// Splits `t` at the parent edges of `cut`; returns the labelled pieces in
/// preorder of their top vertices. Pieces with no leaf are dropped.
pub(crate) fn split(t: &PhyloTree, cut: &[NodeId]) -> Vec<PhyloTree> {
    let mut head = vec![false; t.len()];
    head[t.root()] = true;
    for &c in cut {
        head[c] = true;
    }
    let mut group = vec![0usize; t.len()];
    let mut members: Vec<Vec<NodeId>> = Vec::new();
    for &u in t.index().order() {
        group[u] = if head[u] {
            members.push(Vec::new());
            members.len() - 1
        } else {
            group[t.parent(u).expect("non-head has a parent")]
        };
        if t.is_leaf(u) {
            members[group[u]].push(u);
        }
    }
    members
        .into_iter()
        .filter(|m| !m.is_empty())
        .map(|m| t.restrict_nodes(&m))
        .collect()
}
