//! Exact minimum agreement forests by exhaustive edge-subset search.
//!
//! Only usable on small instances. Subsets of the starting forest's edges are
//! tried in order of size and, within a size, lexicographically by edge
//! position; the first subset whose deletion yields a valid forest is the
//! witness. This is the ground truth the approximations are checked against.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::forest::{Forest, ForestEdge};
use crate::maaf::build_gf;
use crate::maf::check_instance;
use crate::tree::{NodeId, PhyloTree};

/// Largest taxon count the exhaustive search accepts.
pub const MAX_ORACLE_TAXA: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleMode {
    /// Agreement forests.
    Maf,
    /// Agreement forests whose `G_F` is acyclic.
    Maaf,
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub min_cuts: usize,
    pub witness_forest: Forest,
    pub witness_edges: Vec<ForestEdge>,
}

fn accepts(f: &Forest, trees: &[PhyloTree], mode: OracleMode) -> Result<bool> {
    if !f.is_agreement_forest(trees)? {
        return Ok(false);
    }
    Ok(match mode {
        OracleMode::Maf => true,
        OracleMode::Maaf => build_gf(f, trees)?.is_acyclic(),
    })
}

/// Fewest edges of `start` whose deletion gives a valid forest for `trees`,
/// searching subsets of at most `max_cuts` edges. `None` if the budget is
/// too small.
pub fn exact_from_forest(
    start: &Forest,
    trees: &[PhyloTree],
    mode: OracleMode,
    max_cuts: usize,
) -> Result<Option<OracleResult>> {
    let n = start.origin_labels().len();
    if n > MAX_ORACLE_TAXA {
        return Err(Error::TooLarge {
            n,
            limit: MAX_ORACLE_TAXA,
        });
    }
    let edges = start.edges();
    for size in 0..=max_cuts.min(edges.len()) {
        for subset in edges.iter().copied().combinations(size) {
            let f = start.cut_edges(&subset)?;
            if accepts(&f, trees, mode)? {
                return Ok(Some(OracleResult {
                    min_cuts: size,
                    witness_forest: f,
                    witness_edges: subset,
                }));
            }
        }
    }
    Ok(None)
}

pub fn exact_maf(trees: &[PhyloTree], max_cuts: usize) -> Result<Option<OracleResult>> {
    check_instance(trees)?;
    exact_from_forest(
        &Forest::from_tree(&trees[0]),
        trees,
        OracleMode::Maf,
        max_cuts,
    )
}

pub fn exact_maaf(trees: &[PhyloTree], max_cuts: usize) -> Result<Option<OracleResult>> {
    check_instance(trees)?;
    exact_from_forest(
        &Forest::from_tree(&trees[0]),
        trees,
        OracleMode::Maaf,
        max_cuts,
    )
}

/// Rooted SPR distance as `|MAF| - 1`.
pub fn exact_rspr(t1: &PhyloTree, t2: &PhyloTree) -> Result<usize> {
    let r = exact_maf(&[t1.clone(), t2.clone()], t1.edge_count())?
        .expect("deleting every edge always yields an agreement forest");
    Ok(r.witness_forest.len() - 1)
}

/// Hybridization number as `|MAAF| - 1`.
pub fn exact_hybridization(trees: &[PhyloTree]) -> Result<usize> {
    check_instance(trees)?;
    let r = exact_maaf(trees, trees[0].edge_count())?
        .expect("the all-singleton forest is an acyclic agreement forest");
    Ok(r.witness_forest.len() - 1)
}

/// Connected components of `t` after deleting the parent edges of `cut`.
fn components(t: &PhyloTree, cut: &[NodeId]) -> Vec<usize> {
    let mut removed = vec![false; t.len()];
    for &c in cut {
        removed[c] = true;
    }
    let mut comp = vec![0usize; t.len()];
    for &u in t.index().order() {
        comp[u] = match t.parent(u) {
            Some(p) if !removed[u] => comp[p],
            _ => u,
        };
    }
    comp
}

fn distance(t: &PhyloTree, u: NodeId, v: NodeId) -> usize {
    let ix = t.index();
    ix.depth(u) + ix.depth(v) - 2 * ix.depth(t.lca_nodes(u, v))
}

/// Whether the edge-exchange conditions hold for deleting `e` instead of `f`.
///
/// `cut` is the edge set `E` (by child node) with `f` in it and `e` not.
/// `v_f` is the endpoint of `f` nearest `e` and `v_e` the endpoint of `e`
/// nearest `v_f`. The conditions are: `v_f` and `v_e` are connected in
/// `T - E`, and `v_f` reaches no leaf in `T - (E + e)`.
pub fn exchange_applies(t: &PhyloTree, cut: &[NodeId], e: NodeId, f: NodeId) -> bool {
    if e == f || cut.contains(&e) || !cut.contains(&f) || e == t.root() || f == t.root() {
        return false;
    }
    let ends = |x: NodeId| [x, t.parent(x).expect("edge child has a parent")];
    let near = |from: [NodeId; 2], to: NodeId| {
        from.into_iter()
            .min_by_key(|&u| distance(t, u, to))
            .expect("two endpoints")
    };
    let e_ends = ends(e);
    let v_f = ends(f)
        .into_iter()
        .min_by_key(|&u| {
            e_ends
                .iter()
                .map(|&w| distance(t, u, w))
                .min()
                .expect("two")
        })
        .expect("two endpoints");
    let v_e = near(e_ends, v_f);

    let with_e: Vec<NodeId> = cut.iter().copied().chain([e]).collect();
    let before = components(t, cut);
    if before[v_f] != before[v_e] {
        return false;
    }
    let after = components(t, &with_e);
    t.leaves().all(|x| after[x] != after[v_f])
}

/// The labelled forest left after deleting `cut` from `t`.
pub fn forest_after(t: &PhyloTree, cut: &[NodeId]) -> Forest {
    let edges: Vec<ForestEdge> = cut
        .iter()
        .map(|&child| ForestEdge {
            component: 0,
            child,
        })
        .collect();
    Forest::from_tree(t)
        .cut_edges(&edges)
        .expect("cut edges come from the tree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newick::parse;

    fn t(s: &str) -> PhyloTree {
        parse(s).unwrap()
    }

    #[test]
    fn identical_trees() {
        let tree = t("((a,b),(c,d));");
        let r = exact_maf(&[tree.clone(), tree.clone()], 6)
            .unwrap()
            .unwrap();
        assert_eq!(r.min_cuts, 0);
        assert!(r.witness_forest.component(0).isomorphic(&tree));
        assert_eq!(
            exact_maaf(&[tree.clone(), tree.clone()], 6)
                .unwrap()
                .unwrap()
                .min_cuts,
            0
        );
        assert_eq!(exact_rspr(&tree, &tree).unwrap(), 0);
    }

    #[test]
    fn three_leaf_pair() {
        let trees = [t("((a,b),c);"), t("((a,c),b);")];
        let r = exact_maf(&trees, 4).unwrap().unwrap();
        assert_eq!(r.min_cuts, 1);
        // Of the four single-edge cuts only removing c (or the equivalent
        // root-side edge) agrees; the first in preorder is the (a,b) edge.
        assert!(r
            .witness_forest
            .isomorphic(&Forest::from_components(vec![t("(a,b);"), t("c;")]).unwrap()));
        assert_eq!(exact_maaf(&trees, 4).unwrap().unwrap().min_cuts, 1);
        assert_eq!(exact_rspr(&trees[0], &trees[1]).unwrap(), 1);
        assert_eq!(exact_hybridization(&trees).unwrap(), 1);
    }

    #[test]
    fn four_leaf_pair() {
        let trees = [t("(((a,b),c),d);"), t("(((a,c),b),d);")];
        assert_eq!(exact_maf(&trees, 6).unwrap().unwrap().min_cuts, 1);
    }

    #[test]
    fn budget_and_size_limits() {
        let trees = [t("((a,b),c);"), t("((a,c),b);")];
        assert!(exact_maf(&trees, 0).unwrap().is_none());
        let big = crate::gen::random_tree(17, 1);
        assert!(matches!(
            exact_maf(&[big.clone(), big], 1),
            Err(Error::TooLarge { n: 17, .. })
        ));
    }

    #[test]
    fn exchange_on_a_stripped_node() {
        // Both children of (a,b) are cut, so its node is bare: cutting the
        // edge above it instead of the edge to a leaves the same forest.
        let tree = t("((a,b),c);");
        let a = tree.leaf("a").unwrap();
        let b = tree.leaf("b").unwrap();
        let ab = tree.parent(a).unwrap();
        assert!(exchange_applies(&tree, &[a, b], ab, a));
        let left = forest_after(&tree, &[a, b]);
        let right = forest_after(&tree, &[ab, b]);
        assert!(left.isomorphic(&right));
        // Not applicable when v_f still reaches a leaf.
        assert!(!exchange_applies(&tree, &[a], ab, a));
    }
}
