//! Rooted triples, incompatible-triple search and the candidate cut edges
//! around a minimal incompatible triple.
//!
//! A triple `ab|c` holds in a tree when `lca(a, b)` is a strict descendant of
//! `lca(a, b, c)`. A triple of a forest component is incompatible with an
//! input tree when the tree resolves the same three taxa differently.
//!
//! Minimality compares triples of the same component by their anchor nodes:
//! `ab|c < xy|z` when `r_xyz` is a strict ancestor of `r_abc`, or when the two
//! coincide and `r_xy` is a strict ancestor of `r_ab`. Among the minimal
//! triples (of all components) the lexicographically smallest `(a, b, c)` is
//! returned, with `a < b`.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forest::{Forest, ForestEdge};
use crate::tree::{NodeId, PairLca, PhyloTree, Taxon};

/// `ab|c` in component `host`, with its anchors in that component.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Triple {
    pub a: Taxon,
    pub b: Taxon,
    pub c: Taxon,
    pub host: usize,
    pub r_ab: NodeId,
    pub r_abc: NodeId,
}

/// Candidate cut edges around a triple, all in the triple's host component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TripleCuts {
    pub e_a: ForestEdge,
    pub e_b: ForestEdge,
    pub e_c: ForestEdge,
    pub e_r: ForestEdge,
}

/// Index (0, 1 or 2) of the leaf that is *not* in the cherry of `{x, y, z}`.
fn outgroup(t: &PhyloTree, lca: &PairLca, x: NodeId, y: NodeId, z: NodeId) -> usize {
    let d = |u, v| t.index().depth(lca.get(u, v));
    let (xy, xz, yz) = (d(x, y), d(x, z), d(y, z));
    if xy > xz {
        2
    } else if xz > xy {
        1
    } else {
        debug_assert!(yz > xy);
        0
    }
}

/// The resolution of three taxa in `t`.
pub fn triple_of<S: AsRef<str>>(t: &PhyloTree, taxa: [S; 3]) -> Result<Triple> {
    let nodes = t.resolve(&taxa)?;
    if nodes[0] == nodes[1] || nodes[0] == nodes[2] || nodes[1] == nodes[2] {
        return Err(Error::Contract("triple needs three distinct taxa".into()));
    }
    let pair = |u, v| t.lca_nodes(u, v);
    let depth = |u| t.index().depth(u);
    let (x, y, z) = (nodes[0], nodes[1], nodes[2]);
    let (xy, xz, yz) = (depth(pair(x, y)), depth(pair(x, z)), depth(pair(y, z)));
    let (a, b, c) = if xy > xz {
        (x, y, z)
    } else if xz > xy {
        (x, z, y)
    } else {
        debug_assert!(yz > xy);
        (y, z, x)
    };
    Ok(make_triple(t, 0, a, b, c, pair(a, b), pair(a, c)))
}

fn make_triple(
    t: &PhyloTree,
    host: usize,
    a: NodeId,
    b: NodeId,
    c: NodeId,
    r_ab: NodeId,
    r_abc: NodeId,
) -> Triple {
    let name = |u| t.taxon(u).expect("leaf").clone();
    let (a, b) = if name(a) <= name(b) {
        (name(a), name(b))
    } else {
        (name(b), name(a))
    };
    Triple {
        a,
        b,
        c: name(c),
        host,
        r_ab,
        r_abc,
    }
}

/// An input tree with its pairwise leaf-LCA table, reused across queries.
pub(crate) struct TreeContext<'a> {
    pub tree: &'a PhyloTree,
    pub lca: PairLca,
}

impl<'a> TreeContext<'a> {
    pub fn new(tree: &'a PhyloTree) -> Self {
        TreeContext {
            tree,
            lca: PairLca::new(tree),
        }
    }

    /// Does `cc'|a` hold, i.e. is `lca(c, c')` strictly below `lca(c, a)`?
    fn cherry(&self, c: NodeId, c2: NodeId, a: NodeId) -> bool {
        let ix = self.tree.index();
        ix.depth(self.lca.get(c, c2)) > ix.depth(self.lca.get(c, a))
    }
}

/// A minimal triple of `t` incompatible with `ti`, if any.
pub fn find_incompatible(f: &Forest, ti: &PhyloTree) -> Option<Triple> {
    find_incompatible_in(f, &TreeContext::new(ti))
}

pub(crate) fn find_incompatible_in(f: &Forest, ctx: &TreeContext<'_>) -> Option<Triple> {
    let mut best: Option<Triple> = None;
    for (ci, comp) in f.components().iter().enumerate() {
        if comp.leaf_count() < 3 {
            continue;
        }
        if let Some(tr) = minimal_in_component(ci, comp, ctx) {
            let better = match &best {
                None => true,
                Some(b) => (&tr.a, &tr.b, &tr.c) < (&b.a, &b.b, &b.c),
            };
            if better {
                best = Some(tr);
            }
        }
    }
    best
}

struct Candidate {
    r_abc: NodeId,
    r_ab: NodeId,
    leaves: [NodeId; 3],
}

fn minimal_in_component(ci: usize, comp: &PhyloTree, ctx: &TreeContext<'_>) -> Option<Triple> {
    let leaves: Vec<NodeId> = comp.leaves().collect();
    let image: Vec<NodeId> = leaves
        .iter()
        .map(|&u| {
            ctx.tree
                .leaf(comp.taxon(u).expect("leaf").as_str())
                .expect("component taxa appear in every input tree")
        })
        .collect();
    let lca = PairLca::new(comp);
    let m = leaves.len();
    let mut found: Vec<Candidate> = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                let here = outgroup(comp, &lca, leaves[i], leaves[j], leaves[k]);
                let there = outgroup(ctx.tree, &ctx.lca, image[i], image[j], image[k]);
                if here == there {
                    continue;
                }
                let [a, b, c] = match here {
                    0 => [leaves[j], leaves[k], leaves[i]],
                    1 => [leaves[i], leaves[k], leaves[j]],
                    _ => [leaves[i], leaves[j], leaves[k]],
                };
                found.push(Candidate {
                    r_abc: lca.get(a, c),
                    r_ab: lca.get(a, b),
                    leaves: [a, b, c],
                });
            }
        }
    }
    if found.is_empty() {
        return None;
    }

    let ix = comp.index();
    // Minimal top anchors: no other top anchor strictly below them.
    let mut tops: Vec<usize> = found.iter().map(|c| ix.visit(c.r_abc)).collect();
    tops.sort_unstable();
    tops.dedup();
    let has_strict_descendant = |sorted: &[usize], u: NodeId| {
        let lo = ix.visit(u);
        let at = sorted.partition_point(|&v| v <= lo);
        at < sorted.len() && sorted[at] <= ix.hi(u)
    };
    found.retain(|c| !has_strict_descendant(&tops, c.r_abc));

    // Within one top anchor, minimal lower anchors.
    let mut lows: HashMap<NodeId, Vec<usize>> = HashMap::new();
    for c in &found {
        lows.entry(c.r_abc).or_default().push(ix.visit(c.r_ab));
    }
    for v in lows.values_mut() {
        v.sort_unstable();
        v.dedup();
    }
    let keep = found
        .iter()
        .filter(|c| !has_strict_descendant(&lows[&c.r_abc], c.r_ab));

    keep.map(|c| {
        let [a, b, cc] = c.leaves;
        make_triple(comp, ci, a, b, cc, c.r_ab, c.r_abc)
    })
    .min_by(|x, y| (&x.a, &x.b, &x.c).cmp(&(&y.a, &y.b, &y.c)))
}

/// The child of `anc` on the path down to `desc`.
fn child_toward(t: &PhyloTree, anc: NodeId, desc: NodeId) -> NodeId {
    let [l, r] = t.children(anc).expect("ancestor is internal");
    if t.index().is_ancestor_or_self(l, desc) {
        l
    } else {
        r
    }
}

/// Locates `e_a`, `e_b`, `e_c` and `e_r` for an incompatible triple.
///
/// `e_c` is the first edge on the path from `r_abc` down to `c` such that
/// every other leaf `c'` below it forms `cc'|a` and `cc'|b` in both `ti` and
/// the host component; the leaf edge of `c` always qualifies.
pub fn locate_cuts(f: &Forest, tr: &Triple, ti: &PhyloTree) -> Result<TripleCuts> {
    locate_cuts_in(f, tr, &TreeContext::new(ti))
}

pub(crate) fn locate_cuts_in(f: &Forest, tr: &Triple, ctx: &TreeContext<'_>) -> Result<TripleCuts> {
    let comp = f
        .components()
        .get(tr.host)
        .ok_or_else(|| Error::Contract(format!("no host component {}", tr.host)))?;
    let find = |t: &PhyloTree, x: &Taxon| {
        t.leaf(x.as_str())
            .ok_or_else(|| Error::UnknownTaxon(x.to_string()))
    };
    let (a, b, c) = (find(comp, &tr.a)?, find(comp, &tr.b)?, find(comp, &tr.c)?);
    let (ia, ib, ic) = (
        find(ctx.tree, &tr.a)?,
        find(ctx.tree, &tr.b)?,
        find(ctx.tree, &tr.c)?,
    );
    let here = comp.lca_nodes(a, b);
    let top = comp.lca_nodes(a, c);
    if here != tr.r_ab || top != tr.r_abc || here == top {
        return Err(Error::Contract(format!(
            "{}{}|{} is not a triple of component {}",
            tr.a, tr.b, tr.c, tr.host
        )));
    }
    if ctx.cherry(ia, ib, ic) {
        return Err(Error::Contract(format!(
            "{}{}|{} also holds in the input tree",
            tr.a, tr.b, tr.c
        )));
    }

    let edge = |child| ForestEdge {
        component: tr.host,
        child,
    };
    let comp_lca = PairLca::new(comp);
    let holds_in_comp = |x: NodeId, y: NodeId, z: NodeId| {
        let ix = comp.index();
        ix.depth(comp_lca.get(x, y)) > ix.depth(comp_lca.get(x, z))
    };

    let mut v = child_toward(comp, top, c);
    let e_c = loop {
        let qualifies = comp.leaves_below(v).filter(|&u| u != c).all(|u| {
            let iu = ctx
                .tree
                .leaf(comp.taxon(u).expect("leaf").as_str())
                .expect("component taxa appear in every input tree");
            holds_in_comp(c, u, a)
                && holds_in_comp(c, u, b)
                && ctx.cherry(ic, iu, ia)
                && ctx.cherry(ic, iu, ib)
        });
        if qualifies {
            break v;
        }
        v = child_toward(comp, v, c);
    };

    Ok(TripleCuts {
        e_a: edge(child_toward(comp, here, a)),
        e_b: edge(child_toward(comp, here, b)),
        e_c: edge(e_c),
        e_r: edge(child_toward(comp, top, here)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newick::parse;

    fn t(s: &str) -> PhyloTree {
        parse(s).unwrap()
    }

    fn names(tr: &Triple) -> (&str, &str, &str) {
        (tr.a.as_str(), tr.b.as_str(), tr.c.as_str())
    }

    #[test]
    fn triple_shapes() {
        assert_eq!(
            names(&triple_of(&t("((a,b),c);"), ["a", "b", "c"]).unwrap()),
            ("a", "b", "c")
        );
        assert_eq!(
            names(&triple_of(&t("((a,c),b);"), ["a", "b", "c"]).unwrap()),
            ("a", "c", "b")
        );
        let tree = t("(((a,b),c),d);");
        let tr = triple_of(&tree, ["a", "c", "d"]).unwrap();
        assert_eq!(names(&tr), ("a", "c", "d"));
        assert_eq!(tr.r_abc, tree.root());
        assert_eq!(tr.r_ab, tree.lca(&["a", "c"]).unwrap());
        assert!(triple_of(&tree, ["a", "c", "z"]).is_err());
    }

    #[test]
    fn incompatible_examples() {
        let f = Forest::from_tree(&t("((a,b),c);"));
        assert_eq!(find_incompatible(&f, &t("((a,b),c);")), None);
        let tr = find_incompatible(&f, &t("((a,c),b);")).unwrap();
        assert_eq!(names(&tr), ("a", "b", "c"));
        let split = Forest::from_components(vec![t("(a,b);"), t("c;")]).unwrap();
        assert_eq!(find_incompatible(&split, &t("((a,c),b);")), None);
    }

    #[test]
    fn minimal_triple_is_deepest_conflict() {
        // Conflicts exist at the root (d vs the rest) and inside (a,b,c);
        // the minimal one is anchored below the root.
        let tree = t("((((a,b),c),d),e);");
        let other = t("((((a,c),b),e),d);");
        let f = Forest::from_tree(&tree);
        let tr = find_incompatible(&f, &other).unwrap();
        assert_eq!(names(&tr), ("a", "b", "c"));
        assert_eq!(tr.r_abc, tree.lca(&["a", "c"]).unwrap());
    }

    #[test]
    fn cuts_on_three_leaves() {
        let tree = t("((a,b),c);");
        let ti = t("((a,c),b);");
        let f = Forest::from_tree(&tree);
        let tr = find_incompatible(&f, &ti).unwrap();
        let cuts = locate_cuts(&f, &tr, &ti).unwrap();
        let node = |x| tree.leaf(x).unwrap();
        assert_eq!(cuts.e_a.child, node("a"));
        assert_eq!(cuts.e_b.child, node("b"));
        assert_eq!(cuts.e_c.child, node("c"));
        assert_eq!(cuts.e_r.child, tree.lca(&["a", "b"]).unwrap());
    }

    #[test]
    fn cuts_on_four_leaves() {
        let tree = t("(((a,b),c),d);");
        let ti = t("(((a,c),b),d);");
        let f = Forest::from_tree(&tree);
        let tr = find_incompatible(&f, &ti).unwrap();
        assert_eq!(names(&tr), ("a", "b", "c"));
        let cuts = locate_cuts(&f, &tr, &ti).unwrap();
        assert_eq!(cuts.e_r.child, tree.lca(&["a", "b"]).unwrap());
        assert_eq!(cuts.e_c.child, tree.leaf("c").unwrap());
        let g = f.cut_edges(&[cuts.e_a, cuts.e_c, cuts.e_r]).unwrap();
        let (ca, cb, cc) = (
            g.component_of("a"),
            g.component_of("b"),
            g.component_of("c"),
        );
        assert!(!(ca == cb && cb == cc));
    }

    #[test]
    fn e_c_stops_at_first_qualifying_edge() {
        // c sits in a clade (c,(d,e)) that both trees agree on, so the whole
        // clade edge qualifies and is the first edge below r_abc.
        let tree = t("((a,b),(c,(d,e)));");
        let ti = t("((a,(c,(d,e))),b);");
        let f = Forest::from_tree(&tree);
        let tr = find_incompatible(&f, &ti).unwrap();
        assert_eq!(names(&tr), ("a", "b", "c"));
        let cuts = locate_cuts(&f, &tr, &ti).unwrap();
        assert_eq!(cuts.e_c.child, tree.lca(&["c", "d", "e"]).unwrap());

        // A deeper conflict inside (c,(d,e)) takes precedence over ab|c.
        let ti = t("((a,(d,(c,e))),b);");
        let tr = find_incompatible(&f, &ti).unwrap();
        assert_eq!(names(&tr), ("d", "e", "c"));
        let cuts = locate_cuts(&f, &tr, &ti).unwrap();
        assert_eq!(cuts.e_c.child, tree.leaf("c").unwrap());
        assert_eq!(cuts.e_r.child, tree.lca(&["d", "e"]).unwrap());

        // d sits with a in ti, so the clade edge above (c,d) fails the
        // cc'|a test and the walk continues down to c.
        let tree = t("((a,b),(c,d));");
        let ti = t("((a,d),(b,c));");
        let f = Forest::from_tree(&tree);
        let tr = find_incompatible(&f, &ti).unwrap();
        assert_eq!(names(&tr), ("a", "b", "c"));
        let cuts = locate_cuts(&f, &tr, &ti).unwrap();
        assert_eq!(cuts.e_c.child, tree.leaf("c").unwrap());
    }

    #[test]
    fn compatible_triple_is_rejected() {
        let tree = t("((a,b),c);");
        let f = Forest::from_tree(&tree);
        let tr = triple_of(&tree, ["a", "b", "c"]).unwrap();
        assert!(matches!(
            locate_cuts(&f, &tr, &tree),
            Err(Error::Contract(_))
        ));
    }
}
