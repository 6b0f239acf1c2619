//! The forest digraph `G_F` and the acyclic agreement forest approximation.
//!
//! Each component root is mapped into every input tree as the LCA of the
//! component's leaves. `G_F` has an edge `i -> j` when, in some input tree,
//! the mapped root of `i` is a strict ancestor of the mapped root of `j`.
//!
//! The approximation keeps processed roots in `R_p` and pending roots in
//! `R_up`. A pending root forming a 2-cycle with a processed one causes one
//! child edge of each root to be deleted; the resulting subtree roots are
//! queued again. A final check breaks any longer cycle the pairwise test
//! cannot see with the same two-edge rule, then resumes the loop.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::forest::{Forest, ForestEdge};
use crate::maf::{check_instance, maf_approx, CutEdge, CutEntry, CutSet, Justification, Phase};
use crate::tree::{NodeId, PhyloTree, Taxon};

/// `G_F`: one vertex per component, edges labelled by witnessing trees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForestDigraph {
    labels: Vec<Vec<Taxon>>,
    edges: BTreeMap<(usize, usize), Vec<usize>>,
}

impl ForestDigraph {
    /// A bare graph, for callers building `G_F`-shaped inputs by hand.
    pub fn from_edges(vertices: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = ForestDigraph {
            labels: vec![Vec::new(); vertices],
            edges: BTreeMap::new(),
        };
        for &(i, j) in edges {
            assert!(i < vertices && j < vertices, "edge endpoint out of range");
            g.edges.entry((i, j)).or_default();
        }
        g
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Leaf set of the component behind vertex `i`.
    pub fn label(&self, i: usize) -> &[Taxon] {
        &self.labels[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains_key(&(i, j))
    }

    /// `(from, to, witnessing trees)` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, &[usize])> + '_ {
        self.edges.iter().map(|(&(i, j), w)| (i, j, w.as_slice()))
    }

    pub fn is_acyclic(&self) -> bool {
        self.find_cycle().is_none()
    }

    /// Some directed cycle `v0 -> v1 -> ... -> v0`, listed without repeating `v0`.
    pub fn find_cycle(&self) -> Option<Vec<usize>> {
        let n = self.vertex_count();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(i, j) in self.edges.keys() {
            adj[i].push(j);
        }
        // 0 = unseen, 1 = on stack, 2 = done
        let mut state = vec![0u8; n];
        let mut parent = vec![usize::MAX; n];
        for s in 0..n {
            if state[s] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(s, 0)];
            state[s] = 1;
            while let Some(&mut (u, ref mut next)) = stack.last_mut() {
                if let Some(&v) = adj[u].get(*next) {
                    *next += 1;
                    match state[v] {
                        0 => {
                            state[v] = 1;
                            parent[v] = u;
                            stack.push((v, 0));
                        }
                        1 => {
                            let mut cycle = vec![u];
                            let mut w = u;
                            while w != v {
                                w = parent[w];
                                cycle.push(w);
                            }
                            cycle.reverse();
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    state[u] = 2;
                    stack.pop();
                }
            }
        }
        None
    }

    /// Graphviz rendering: one node per component, edges annotated with trees.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph G_F {\n");
        for (i, l) in self.labels.iter().enumerate() {
            let names: Vec<&str> = l.iter().map(|t| t.as_str()).collect();
            let _ = writeln!(out, "  c{i} [label=\"{{{}}}\"];", names.join(","));
        }
        for (i, j, w) in self.edges() {
            let trees: Vec<String> = w.iter().map(|t| t.to_string()).collect();
            let _ = writeln!(out, "  c{i} -> c{j} [label=\"{}\"];", trees.join(","));
        }
        out.push_str("}\n");
        out
    }
}

/// Mapped roots of every component in every tree: `roots[c][t]`.
fn mapped_roots(f: &Forest, trees: &[PhyloTree]) -> Vec<Vec<NodeId>> {
    f.components()
        .iter()
        .map(|c| trees.iter().map(|t| map_leaves(t, c, c.root())).collect())
        .collect()
}

/// LCA in `t` of the leaves below `u` in component `c`.
fn map_leaves(t: &PhyloTree, c: &PhyloTree, u: NodeId) -> NodeId {
    t.lca_of_nodes(c.leaves_below(u).map(|x| {
        t.leaf(c.taxon(x).expect("leaf").as_str())
            .expect("component taxa appear in every tree")
    }))
    .expect("nonempty subtree")
}

fn build_unchecked(f: &Forest, trees: &[PhyloTree]) -> ForestDigraph {
    let roots = mapped_roots(f, trees);
    let mut edges: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (ti, t) in trees.iter().enumerate() {
        let ix = t.index();
        for i in 0..roots.len() {
            for j in 0..roots.len() {
                if i != j && ix.is_ancestor(roots[i][ti], roots[j][ti]) {
                    edges.entry((i, j)).or_default().push(ti);
                }
            }
        }
    }
    ForestDigraph {
        labels: f
            .components()
            .iter()
            .map(|c| c.taxa_below(c.root()))
            .collect(),
        edges,
    }
}

/// Builds `G_F` for an agreement forest of `trees`.
pub fn build_gf(f: &Forest, trees: &[PhyloTree]) -> Result<ForestDigraph> {
    if let Some(v) = f.check_agreement(trees)? {
        return Err(Error::NotAgreementForest(v.to_string()));
    }
    Ok(build_unchecked(f, trees))
}

pub fn is_acyclic(g: &ForestDigraph) -> bool {
    g.is_acyclic()
}

/// Component identity that survives re-indexing: its smallest taxon.
type RootKey = Taxon;

fn key_of(c: &PhyloTree) -> RootKey {
    c.taxa().min().expect("nonempty component").clone()
}

struct Work<'a> {
    trees: &'a [PhyloTree],
    forest: Forest,
    mapped: HashMap<RootKey, Vec<NodeId>>,
}

impl Work<'_> {
    fn index_of(&self, key: &RootKey) -> usize {
        self.forest
            .component_of(key.as_str())
            .expect("root keys name live components")
    }

    fn mapped(&mut self, key: &RootKey) -> &[NodeId] {
        if !self.mapped.contains_key(key) {
            let c = self.forest.component(self.index_of(key));
            let m = self
                .trees
                .iter()
                .map(|t| map_leaves(t, c, c.root()))
                .collect();
            self.mapped.insert(key.clone(), m);
        }
        &self.mapped[key]
    }

    /// First tree in which `r` maps strictly above `s`.
    fn above(&mut self, r: &RootKey, s: &RootKey) -> Option<usize> {
        let mr = self.mapped(r).to_vec();
        let ms = self.mapped(s).to_vec();
        (0..self.trees.len()).find(|&t| self.trees[t].index().is_ancestor(mr[t], ms[t]))
    }

    /// `(tree where r is above s, tree where s is above r)`, if both exist.
    fn two_cycle(&mut self, r: &RootKey, s: &RootKey) -> Option<(usize, usize)> {
        Some((self.above(r, s)?, self.above(s, r)?))
    }

    /// The child edge of `r` on the side of `s`, judged in tree `ti` where
    /// `r` maps strictly above `s`. Falls back to the left child.
    fn edge_toward(&mut self, r: &RootKey, s: &RootKey, ti: usize) -> ForestEdge {
        let t = &self.trees[ti];
        let ms = self.mapped(s)[ti];
        let mr = self.mapped(r)[ti];
        let ci = self.index_of(r);
        let c = self.forest.component(ci);
        let [l, rc] = c
            .children(c.root())
            .expect("a root above another root is internal");
        let [tl, tr] = t.children(mr).expect("mapped ancestor is internal");
        let side = if t.index().is_ancestor_or_self(tl, ms) {
            tl
        } else {
            tr
        };
        let child = if t.index().is_ancestor_or_self(side, map_leaves(t, c, l)) {
            l
        } else if t.index().is_ancestor_or_self(side, map_leaves(t, c, rc)) {
            rc
        } else {
            l
        };
        ForestEdge {
            component: ci,
            child,
        }
    }

    /// Deletes one child edge of each root; returns keys of the new roots.
    fn cut_pair(
        &mut self,
        r: &RootKey,
        s: &RootKey,
        (t_rs, t_sr): (usize, usize),
        log: &mut CutSet,
    ) -> Result<Vec<RootKey>> {
        let e_r = self.edge_toward(r, s, t_rs);
        let e_s = self.edge_toward(s, r, t_sr);
        let label = |f: &Forest, k: &RootKey| {
            let c = f.component(f.component_of(k.as_str()).expect("live"));
            c.taxa_below(c.root())
        };
        let entry = CutEntry {
            phase: Phase::Cycle,
            tree: t_rs,
            edges: vec![
                CutEdge::of(&self.forest, e_r),
                CutEdge::of(&self.forest, e_s),
            ],
            justification: Justification::Roots {
                r: label(&self.forest, r),
                r_prime: label(&self.forest, s),
            },
        };
        self.mapped.remove(r);
        self.mapped.remove(s);
        let touched = self.forest.cut_in_place(&[e_r, e_s])?;
        log.entries.push(entry);
        Ok(touched
            .into_iter()
            .map(|i| key_of(self.forest.component(i)))
            .collect())
    }
}

/// Runs the approximation on an agreement forest; see [`maaf_approx_observed`].
pub fn maaf_approx(f: &Forest, trees: &[PhyloTree]) -> Result<(Forest, CutSet)> {
    maaf_approx_observed(f, trees, |_, _, _| {})
}

/// Turns an agreement forest into an acyclic one, calling
/// `observe(before, entry, after)` for every two-edge deletion.
///
/// Pending roots are processed first-in first-out, starting in component
/// order; processed roots are scanned in the order they were accepted.
pub fn maaf_approx_observed<O>(
    f: &Forest,
    trees: &[PhyloTree],
    mut observe: O,
) -> Result<(Forest, CutSet)>
where
    O: FnMut(&Forest, &CutEntry, &Forest),
{
    if let Some(v) = f.check_agreement(trees)? {
        return Err(Error::NotAgreementForest(v.to_string()));
    }
    let mut work = Work {
        trees,
        forest: f.clone(),
        mapped: HashMap::new(),
    };
    let mut log = CutSet::default();
    let mut pending: VecDeque<RootKey> = f.components().iter().map(key_of).collect();
    let mut done: Vec<RootKey> = Vec::new();

    loop {
        while let Some(r) = pending.pop_front() {
            if work.forest.component(work.index_of(&r)).leaf_count() == 1 {
                done.push(r);
                continue;
            }
            let mut hit = None;
            for (pos, s) in done.iter().enumerate() {
                if let Some(w) = work.two_cycle(&r, s) {
                    hit = Some((pos, w));
                    break;
                }
            }
            match hit {
                None => done.push(r),
                Some((pos, w)) => {
                    let s = done.remove(pos);
                    let before = work.forest.clone();
                    let fresh = work.cut_pair(&r, &s, w, &mut log)?;
                    observe(
                        &before,
                        log.entries.last().expect("just pushed"),
                        &work.forest,
                    );
                    pending.extend(fresh);
                }
            }
        }

        let g = build_unchecked(&work.forest, trees);
        let Some(cycle) = g.find_cycle() else { break };
        // A longer cycle v0 -> v1 -> v2 -> ... : cut v0 toward v1 and v1 toward v2.
        let key_at = |i: usize| key_of(work.forest.component(cycle[i % cycle.len()]));
        let (v0, v1, v2) = (key_at(0), key_at(1), key_at(2));
        let t01 = g.edges.get(&(cycle[0], cycle[1])).expect("cycle edge")[0];
        let t12 = g
            .edges
            .get(&(cycle[1], cycle[2 % cycle.len()]))
            .expect("cycle edge")[0];
        let before = work.forest.clone();
        let e0 = work.edge_toward(&v0, &v1, t01);
        let e1 = work.edge_toward(&v1, &v2, t12);
        let entry = CutEntry {
            phase: Phase::Cycle,
            tree: t01,
            edges: vec![CutEdge::of(&work.forest, e0), CutEdge::of(&work.forest, e1)],
            justification: Justification::Roots {
                r: g.label(cycle[0]).to_vec(),
                r_prime: g.label(cycle[1]).to_vec(),
            },
        };
        work.mapped.remove(&v0);
        work.mapped.remove(&v1);
        done.retain(|k| k != &v0 && k != &v1);
        let touched = work.forest.cut_in_place(&[e0, e1])?;
        observe(&before, &entry, &work.forest);
        log.entries.push(entry);
        pending.extend(
            touched
                .into_iter()
                .map(|i| key_of(work.forest.component(i))),
        );
    }

    Ok((work.forest, log))
}

/// `|F| - 1` for the approximate acyclic agreement forest of `trees`: an
/// upper bound on the hybridization number.
pub fn hybridization_upper_bound(trees: &[PhyloTree]) -> Result<usize> {
    check_instance(trees)?;
    let (f, _) = maf_approx(trees)?;
    let (g, _) = maaf_approx(&f, trees)?;
    Ok(g.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newick::parse;

    fn t(s: &str) -> PhyloTree {
        parse(s).unwrap()
    }

    fn forest(parts: &[&str]) -> Forest {
        Forest::from_components(parts.iter().map(|s| t(s)).collect()).unwrap()
    }

    #[test]
    fn acyclicity() {
        assert!(ForestDigraph::from_edges(1, &[]).is_acyclic());
        assert!(!ForestDigraph::from_edges(3, &[(1, 2), (2, 1)]).is_acyclic());
        assert!(ForestDigraph::from_edges(4, &[(1, 2), (2, 3), (1, 3)]).is_acyclic());
        let g = ForestDigraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 1)]);
        let mut c = g.find_cycle().unwrap();
        c.sort();
        assert_eq!(c, vec![1, 2, 3]);
    }

    #[test]
    fn single_component_graph() {
        let tree = t("((a,b),(c,d));");
        let g = build_gf(
            &Forest::from_tree(&tree),
            &[tree.clone(), t("((a,c),(b,d));")],
        );
        // The whole tree is not an agreement forest for a different tree.
        assert!(matches!(g, Err(Error::NotAgreementForest(_))));
        let g = build_gf(&Forest::from_tree(&tree), &[tree.clone(), tree]).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (1, 0));
    }

    #[test]
    fn two_component_graph() {
        let trees = [t("((a,b),c);"), t("((a,c),b);")];
        let f = forest(&["(a,b);", "c;"]);
        let g = build_gf(&f, &trees).unwrap();
        // (a,b) maps to the root of the second tree, above leaf c.
        assert!(g.has_edge(0, 1));
        assert!(!g.has_edge(1, 0));
        assert_eq!(g.edges().next().unwrap().2, &[1]);
        assert!(g.is_acyclic());
        let dot = g.to_dot();
        assert!(dot.contains("c0 [label=\"{a,b}\"]"));
        assert!(dot.contains("c0 -> c1 [label=\"1\"]"));
    }

    /// Two cherries whose mapped roots swap ancestry between the trees.
    fn swapped() -> ([PhyloTree; 2], Forest) {
        let trees = [t("((a,(c,d)),b);"), t("((c,(a,b)),d);")];
        let f = forest(&["(a,b);", "(c,d);"]);
        (trees, f)
    }

    #[test]
    fn two_cycle_is_present() {
        let (trees, f) = swapped();
        let g = build_gf(&f, &trees).unwrap();
        assert!(g.has_edge(0, 1) && g.has_edge(1, 0));
        assert_eq!(
            g.edges().map(|(_, _, w)| w.to_vec()).collect::<Vec<_>>(),
            [vec![0], vec![1]]
        );
        assert!(!g.is_acyclic());
    }

    #[test]
    fn two_cycle_is_broken_with_one_entry() {
        let (trees, f) = swapped();
        let (out, cuts) = maaf_approx(&f, &trees).unwrap();
        assert_eq!(cuts.entries.len(), 1);
        assert_eq!(cuts.edges_in(Phase::Cycle), 2);
        assert!(out.is_agreement_forest(&trees).unwrap());
        assert!(build_gf(&out, &trees).unwrap().is_acyclic());
        // The sides facing the other root are cut: a in the first tree, c in the second.
        let cut: Vec<&str> = cuts.entries[0]
            .edges
            .iter()
            .map(|e| e.below[0].as_str())
            .collect();
        assert_eq!(cut, ["c", "a"]);
    }

    #[test]
    fn three_cycle_uses_the_fallback() {
        // A above B in the first tree, B above C in the second, C above A in
        // the third: a cycle with no two-cycle inside it.
        let trees = [
            t("(((a1,(b1,b2)),a2),(c1,c2));"),
            t("(((b1,(c1,c2)),b2),(a1,a2));"),
            t("(((c1,(a1,a2)),c2),(b1,b2));"),
        ];
        let f = forest(&["(a1,a2);", "(b1,b2);", "(c1,c2);"]);
        let g = build_gf(&f, &trees).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.find_cycle().map(|c| c.len()), Some(3));

        let (out, cuts) = maaf_approx(&f, &trees).unwrap();
        assert_eq!(cuts.entries.len(), 1);
        assert_eq!(cuts.edges_in(Phase::Cycle), 2);
        assert!(out.is_agreement_forest(&trees).unwrap());
        assert!(build_gf(&out, &trees).unwrap().is_acyclic());
        assert_eq!(out.len(), 5);
    }

    #[test]
    fn rejects_non_agreement_input() {
        let (trees, _) = swapped();
        assert!(matches!(
            maaf_approx(&Forest::from_tree(&trees[0]), &trees),
            Err(Error::NotAgreementForest(_))
        ));
    }

    #[test]
    fn acyclic_forest_is_unchanged() {
        let trees = [t("((a,b),c);"), t("((a,c),b);")];
        let f = forest(&["(a,b);", "c;"]);
        let (g, cuts) = maaf_approx(&f, &trees).unwrap();
        assert_eq!(cuts.edges_cut(), 0);
        assert!(g.isomorphic(&f));
    }

    #[test]
    fn singletons_need_no_cuts() {
        let trees = [t("((a,b),(c,d));"), t("((a,c),(b,d));")];
        let f = forest(&["a;", "b;", "c;", "d;"]);
        let g = build_gf(&f, &trees).unwrap();
        assert_eq!(g.edge_count(), 0);
        let (out, cuts) = maaf_approx(&f, &trees).unwrap();
        assert_eq!(cuts.edges_cut(), 0);
        assert_eq!(out.len(), 4);
    }

    #[test]
    fn identical_trees_have_zero_bound() {
        let tree = t("(((a,b),c),(d,e));");
        assert_eq!(hybridization_upper_bound(&[tree.clone(), tree]).unwrap(), 0);
    }

    #[test]
    fn three_leaf_bound() {
        let trees = [t("((a,b),c);"), t("((a,c),b);")];
        let h = hybridization_upper_bound(&trees).unwrap();
        assert!((1..=3).contains(&h));
        assert!(h >= crate::maf::rspr_upper_bound(&trees[0], &trees[1]).unwrap());
    }
}
