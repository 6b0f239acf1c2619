//! Approximate maximum agreement forest for `k >= 2` trees.
//!
//! Starting from `F = T1`, every incompatible triple of `F` with respect to
//! `T2..Tk` is resolved (minimal triple first) by deleting `e_a`, `e_c` and
//! `e_r`. Once no incompatible triple remains, components whose embeddings
//! overlap in some `Ti` are separated by deleting `e_x` and `e_y`. Each
//! triple step deletes at most three edges and each overlap step two, while
//! each step lowers the optimal number of remaining cuts by at least one, so
//! the total is within a factor three of optimal.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forest::{Forest, ForestEdge};
use crate::tree::{NodeId, PhyloTree, Taxon};
use crate::triples::{find_incompatible_in, locate_cuts_in, TreeContext, Triple};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Triple,
    Overlap,
    Cycle,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Triple => "triple",
            Phase::Overlap => "overlap",
            Phase::Cycle => "cycle",
        })
    }
}

/// A deleted edge, remembered by position at deletion time and by the taxa
/// hanging below it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CutEdge {
    pub component: usize,
    pub child: NodeId,
    pub below: Vec<Taxon>,
}

impl CutEdge {
    pub(crate) fn of(f: &Forest, e: ForestEdge) -> Self {
        CutEdge {
            component: e.component,
            child: e.child,
            below: f.component(e.component).taxa_below(e.child),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Justification {
    Triple { a: Taxon, b: Taxon, c: Taxon },
    Overlap { x: Vec<Taxon>, y: Vec<Taxon> },
    Roots { r: Vec<Taxon>, r_prime: Vec<Taxon> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CutEntry {
    pub phase: Phase,
    /// Input tree that witnessed the conflict (0-based).
    pub tree: usize,
    pub edges: Vec<CutEdge>,
    pub justification: Justification,
}

impl fmt::Display for CutEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[Taxon]| v.iter().map(|t| t.as_str()).collect::<Vec<_>>().join(",");
        write!(f, "{} tree={} ", self.phase, self.tree)?;
        match &self.justification {
            Justification::Triple { a, b, c } => write!(f, "{a}{b}|{c}")?,
            Justification::Overlap { x, y } => write!(f, "{{{}}} ~ {{{}}}", join(x), join(y))?,
            Justification::Roots { r, r_prime } => {
                write!(f, "{{{}}} <-> {{{}}}", join(r), join(r_prime))?
            }
        }
        write!(f, " cut")?;
        for e in &self.edges {
            write!(f, " [{}]", join(&e.below))?;
        }
        Ok(())
    }
}

/// Ordered log of edge deletions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CutSet {
    pub entries: Vec<CutEntry>,
}

impl CutSet {
    pub fn edges_cut(&self) -> usize {
        self.entries.iter().map(|e| e.edges.len()).sum()
    }

    pub fn edges_in(&self, phase: Phase) -> usize {
        self.entries
            .iter()
            .filter(|e| e.phase == phase)
            .map(|e| e.edges.len())
            .sum()
    }

    /// Number of steps (entries) in a phase.
    pub fn steps_in(&self, phase: Phase) -> usize {
        self.entries.iter().filter(|e| e.phase == phase).count()
    }

    pub fn extend(&mut self, other: CutSet) {
        self.entries.extend(other.entries);
    }
}

/// Two components whose embeddings in some input tree share a node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OverlapWitness {
    pub x: usize,
    pub y: usize,
    /// A lowest node of the input tree lying in both embeddings.
    pub v_xy: NodeId,
    pub e_x: ForestEdge,
    pub e_y: ForestEdge,
}

pub(crate) fn check_instance(trees: &[PhyloTree]) -> Result<()> {
    if trees.len() < 2 {
        return Err(Error::TooFewTrees {
            needed: 2,
            got: trees.len(),
        });
    }
    let labels = trees[0].taxon_set();
    for (i, t) in trees.iter().enumerate().skip(1) {
        if t.leaf_count() != labels.len() || !labels.iter().all(|x| t.has_taxon(x.as_str())) {
            return Err(Error::LabelMismatch(format!(
                "tree {i} has a different label set from tree 0"
            )));
        }
    }
    Ok(())
}

/// Finds a pair of components whose embeddings in `ti` share a node.
///
/// Pairs are tried in order of component index. `v_xy` is the common node
/// with no child common to both embeddings, smallest preorder number first.
/// `e_x` is the highest edge of `t_x` whose leaves all descend from `v_xy` in
/// `ti` (ties: more leaves, then earlier in preorder); likewise `e_y`.
pub fn find_overlap(f: &Forest, ti: &PhyloTree) -> Option<OverlapWitness> {
    let ix = ti.index();
    let images: Vec<Vec<NodeId>> = f
        .components()
        .iter()
        .map(|c| {
            c.taxa()
                .map(|x| ti.leaf(x.as_str()).expect("forest taxa appear in the tree"))
                .collect()
        })
        .collect();

    // Embedding membership: owners[u] lists the components whose connecting
    // subtree contains u.
    let mut owners: Vec<Vec<usize>> = vec![Vec::new(); ti.len()];
    for (ci, leaves) in images.iter().enumerate() {
        let top = ti
            .lca_of_nodes(leaves.iter().copied())
            .expect("nonempty component");
        for &x in leaves {
            let mut u = x;
            loop {
                if owners[u].last() == Some(&ci) {
                    break;
                }
                owners[u].push(ci);
                if u == top {
                    break;
                }
                u = ti.parent(u).expect("top is an ancestor");
            }
        }
    }

    let mut pair: Option<(usize, usize)> = None;
    for own in &owners {
        for (i, &x) in own.iter().enumerate() {
            for &y in &own[i + 1..] {
                let p = (x.min(y), x.max(y));
                if pair.is_none_or(|q| p < q) {
                    pair = Some(p);
                }
            }
        }
    }
    let (x, y) = pair?;

    let common = |u: NodeId| owners[u].contains(&x) && owners[u].contains(&y);
    let v_xy = ix
        .order()
        .iter()
        .copied()
        .find(|&u| common(u) && ti.children(u).is_none_or(|[l, r]| !common(l) && !common(r)))
        .expect("a common node has a lowest common descendant");

    let e_x = highest_edge_below(f, x, ti, v_xy)?;
    let e_y = highest_edge_below(f, y, ti, v_xy)?;
    Some(OverlapWitness {
        x,
        y,
        v_xy,
        e_x,
        e_y,
    })
}

/// The maximal edge of component `ci` whose leaves all descend from `v` in `ti`.
fn highest_edge_below(f: &Forest, ci: usize, ti: &PhyloTree, v: NodeId) -> Option<ForestEdge> {
    let comp = f.component(ci);
    let ix = ti.index();
    let mut inside = vec![false; comp.len()];
    for &u in comp.index().order().iter().rev() {
        inside[u] = match comp.children(u) {
            None => {
                let img = ti
                    .leaf(comp.taxon(u).expect("leaf").as_str())
                    .expect("shared taxa");
                ix.is_ancestor_or_self(v, img)
            }
            Some([l, r]) => inside[l] && inside[r],
        };
    }
    let root = comp.root();
    comp.edges()
        .filter(|&u| {
            let p = comp.parent(u).expect("edge child has a parent");
            inside[u] && (p == root || !inside[p])
        })
        .max_by(|&a, &b| {
            let size = |u| comp.leaves_below(u).count();
            size(a)
                .cmp(&size(b))
                .then(comp.index().visit(b).cmp(&comp.index().visit(a)))
        })
        .map(|child| ForestEdge {
            component: ci,
            child,
        })
}

/// Runs the approximation; see [`maf_approx_observed`].
pub fn maf_approx(trees: &[PhyloTree]) -> Result<(Forest, CutSet)> {
    maf_approx_observed(trees, |_, _, _| {})
}

/// Runs the approximation, calling `observe(before, entry, after)` on every step.
///
/// Both phases sweep `T2..Tk` in input order and repeat the sweep until a
/// full pass makes no cut.
pub fn maf_approx_observed<O>(trees: &[PhyloTree], mut observe: O) -> Result<(Forest, CutSet)>
where
    O: FnMut(&Forest, &CutEntry, &Forest),
{
    check_instance(trees)?;
    let contexts: Vec<TreeContext<'_>> = trees.iter().map(TreeContext::new).collect();
    let mut forest = Forest::from_tree(&trees[0]);
    let mut log = CutSet::default();

    loop {
        let mut progressed = false;
        for (i, ctx) in contexts.iter().enumerate().skip(1) {
            while let Some(tr) = find_incompatible_in(&forest, ctx) {
                let cuts = locate_cuts_in(&forest, &tr, ctx)?;
                let edges = [cuts.e_a, cuts.e_c, cuts.e_r];
                let Triple { a, b, c, .. } = tr;
                let entry = CutEntry {
                    phase: Phase::Triple,
                    tree: i,
                    edges: edges.iter().map(|&e| CutEdge::of(&forest, e)).collect(),
                    justification: Justification::Triple { a, b, c },
                };
                let before = forest.clone();
                forest.cut_in_place(&edges)?;
                observe(&before, &entry, &forest);
                log.entries.push(entry);
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }

    loop {
        let mut progressed = false;
        for (i, t) in trees.iter().enumerate().skip(1) {
            while let Some(w) = find_overlap(&forest, t) {
                let entry = CutEntry {
                    phase: Phase::Overlap,
                    tree: i,
                    edges: vec![CutEdge::of(&forest, w.e_x), CutEdge::of(&forest, w.e_y)],
                    justification: Justification::Overlap {
                        x: forest
                            .component(w.x)
                            .taxa_below(forest.component(w.x).root()),
                        y: forest
                            .component(w.y)
                            .taxa_below(forest.component(w.y).root()),
                    },
                };
                let before = forest.clone();
                forest.cut_in_place(&[w.e_x, w.e_y])?;
                observe(&before, &entry, &forest);
                log.entries.push(entry);
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }

    if let Some(v) = forest.check_agreement(trees)? {
        return Err(Error::Contract(format!(
            "approximation produced an invalid forest: {v}"
        )));
    }
    Ok((forest, log))
}

/// `|F| - 1` for the approximate forest of two trees: an upper bound on the
/// rooted SPR distance, at most three times the optimum.
pub fn rspr_upper_bound(t1: &PhyloTree, t2: &PhyloTree) -> Result<usize> {
    let (f, _) = maf_approx(&[t1.clone(), t2.clone()])?;
    Ok(f.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newick::parse;
    use crate::oracle::exact_maf;

    fn t(s: &str) -> PhyloTree {
        parse(s).unwrap()
    }

    fn forest(parts: &[&str]) -> Forest {
        Forest::from_components(parts.iter().map(|s| t(s)).collect()).unwrap()
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(
            find_overlap(&forest(&["(a,b);", "c;"]), &t("((a,c),b);")),
            None
        );

        let ti = t("((a,c),(b,d));");
        let f = forest(&["(a,b);", "(c,d);"]);
        let w = find_overlap(&f, &ti).unwrap();
        assert_eq!((w.x, w.y), (0, 1));
        // node(a,c) is common to both embeddings and lies below the root.
        assert_eq!(w.v_xy, ti.lca(&["a", "c"]).unwrap());
        assert_eq!(w.e_x.child, f.component(0).leaf("a").unwrap());
        assert_eq!(w.e_y.child, f.component(1).leaf("c").unwrap());

        let whole = t("((a,b),(c,d));");
        assert_eq!(find_overlap(&Forest::from_tree(&whole), &whole), None);
    }

    #[test]
    fn overlap_cuts_whole_cluster() {
        // {a1,a2} of component x hang below v_xy together, so e_x is the
        // edge above their cherry rather than a leaf edge.
        let ti = t("(((a1,a2),c),(b,d));");
        let f = forest(&["((a1,a2),b);", "(c,d);"]);
        let w = find_overlap(&f, &ti).unwrap();
        assert_eq!(w.v_xy, ti.lca(&["a1", "c"]).unwrap());
        let x = f.component(w.x);
        assert_eq!(w.e_x.child, x.lca(&["a1", "a2"]).unwrap());
        let y = f.component(w.y);
        assert_eq!(w.e_y.child, y.leaf("c").unwrap());
    }

    #[test]
    fn identical_trees() {
        let tree = t("(((a,b),c),(d,e));");
        let (f, cuts) = maf_approx(&[tree.clone(), tree.clone()]).unwrap();
        assert_eq!(f.len(), 1);
        assert!(f.component(0).isomorphic(&tree));
        assert_eq!(cuts.edges_cut(), 0);
        assert_eq!(rspr_upper_bound(&tree, &tree).unwrap(), 0);
    }

    #[test]
    fn three_leaf_pair() {
        let trees = [t("((a,b),c);"), t("((a,c),b);")];
        let (f, cuts) = maf_approx(&trees).unwrap();
        assert!(f.is_agreement_forest(&trees).unwrap());
        assert!(cuts.edges_cut() <= 3);
        assert!(f.len() <= 4);
        let exact = exact_maf(&trees, 4).unwrap().unwrap();
        assert_eq!(exact.min_cuts, 1);
        assert_eq!(exact.witness_forest.len(), 2);
        let bound = rspr_upper_bound(&trees[0], &trees[1]).unwrap();
        assert!((1..=3).contains(&bound));
    }

    #[test]
    fn outlier_among_copies() {
        let base = t("((a,b),c);");
        let trees = [base.clone(), base.clone(), base, t("((b,c),a);")];
        let (f, cuts) = maf_approx(&trees).unwrap();
        assert!(f.is_agreement_forest(&trees).unwrap());
        let exact = exact_maf(&trees, 4).unwrap().unwrap();
        assert!(cuts.edges_cut() <= 3 * exact.min_cuts);
        assert!(cuts.edges_cut() >= exact.min_cuts);
    }

    #[test]
    fn single_leaf_trees() {
        let a = t("a;");
        assert_eq!(rspr_upper_bound(&a, &a).unwrap(), 0);
    }

    #[test]
    fn rejects_bad_instances() {
        let tree = t("((a,b),c);");
        assert!(matches!(
            maf_approx(std::slice::from_ref(&tree)),
            Err(Error::TooFewTrees { .. })
        ));
        assert!(matches!(
            maf_approx(&[tree, t("((a,b),d);")]),
            Err(Error::LabelMismatch(_))
        ));
    }

    #[test]
    fn cut_log_accounting() {
        let trees = crate::gen::instance(&crate::gen::GenSpec {
            n: 12,
            k: 3,
            moves: 4,
            seed: 11,
        })
        .unwrap();
        let (f, cuts) = maf_approx(&trees).unwrap();
        let total = cuts.edges_in(Phase::Triple) + cuts.edges_in(Phase::Overlap);
        assert_eq!(total, cuts.edges_cut());
        assert!(trees[0].edge_count() - f.edge_count() >= total);
        for e in &cuts.entries {
            match e.phase {
                Phase::Triple => assert_eq!(e.edges.len(), 3),
                Phase::Overlap => assert_eq!(e.edges.len(), 2),
                Phase::Cycle => unreachable!(),
            }
        }
        if f.len() > 1 {
            assert!(!cuts.entries.is_empty());
        }
    }
}
