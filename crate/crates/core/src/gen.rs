//! Seeded random instances: random trees and rooted SPR walks.
//!
//! All randomness comes from a 64-bit linear congruential generator with
//! Knuth's MMIX constants, so instances can be reproduced bit for bit in any
//! language:
//!
//! ```text
//! state(seed, stream) = seed + stream * 0x9E3779B97F4A7C15        (wrapping)
//! next:   state = state * 6364136223846793005 + 1442695040888963407 (wrapping)
//!         output = state
//! below(n) = (next() >> 33) % n
//! ```
//!
//! `random_tree(n, seed)` uses stream 0. Leaves `t1..tn` are added in order;
//! leaf `ti` (i >= 2) picks `below(2i - 3)` among the existing nodes in
//! creation order and is attached through a new internal node inserted
//! above the chosen node, as that node's right sibling.
//!
//! `spr_move` picks the pruned node with `below(#non-root nodes)` (preorder)
//! and the regraft edge with `below(#edges of the pruned remainder)`
//! (remainder preorder, by child); a single-leaf remainder takes no draw and
//! the subtree goes back above it. Tree `i` of an instance (i >= 1) draws all
//! of its moves from stream `i`.

use crate::error::{Error, Result};
use crate::tree::{NodeId, PhyloTree, Taxon, TreeBuilder};

/// Splittable 64-bit LCG.
#[derive(Clone, Debug)]
pub struct Lcg {
    state: u64,
}

impl Lcg {
    pub const MUL: u64 = 6364136223846793005;
    pub const INC: u64 = 1442695040888963407;
    pub const STREAM: u64 = 0x9E3779B97F4A7C15;

    pub fn new(seed: u64, stream: u64) -> Self {
        Lcg {
            state: seed.wrapping_add(stream.wrapping_mul(Self::STREAM)),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(Self::MUL).wrapping_add(Self::INC);
        self.state
    }

    /// Uniform-ish integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        ((self.next_u64() >> 33) % n as u64) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenSpec {
    pub n: usize,
    pub k: usize,
    pub moves: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidSpec(format!("n = {} < 2", self.n)));
        }
        if self.k < 2 {
            return Err(Error::InvalidSpec(format!("k = {} < 2", self.k)));
        }
        if self.moves > 0 && self.n < 3 {
            return Err(Error::InvalidSpec("SPR moves need n >= 3".into()));
        }
        Ok(())
    }
}

/// Mutable parent/child table used while editing a topology.
struct Draft {
    parent: Vec<Option<usize>>,
    children: Vec<Option<[usize; 2]>>,
    taxon: Vec<Option<Taxon>>,
    root: usize,
}

impl Draft {
    fn from_tree(t: &PhyloTree) -> Self {
        let n = t.len();
        Draft {
            parent: (0..n).map(|u| t.parent(u)).collect(),
            children: (0..n).map(|u| t.children(u)).collect(),
            taxon: (0..n).map(|u| t.taxon(u).cloned()).collect(),
            root: t.root(),
        }
    }

    fn push(&mut self, children: Option<[usize; 2]>, taxon: Option<Taxon>) -> usize {
        self.parent.push(None);
        self.children.push(children);
        self.taxon.push(taxon);
        self.parent.len() - 1
    }

    fn replace_child(&mut self, p: usize, old: usize, new: usize) {
        let ch = self.children[p].as_mut().expect("parent is internal");
        if ch[0] == old {
            ch[0] = new;
        } else {
            ch[1] = new;
        }
        self.parent[new] = Some(p);
    }

    /// Inserts a new internal node above `below` with children `[below, extra]`.
    fn attach_above(&mut self, below: usize, extra: usize) {
        let up = self.parent[below];
        let w = self.push(Some([below, extra]), None);
        match up {
            Some(p) => self.replace_child(p, below, w),
            None => self.root = w,
        }
        self.parent[below] = Some(w);
        self.parent[extra] = Some(w);
    }

    /// Nodes reachable from `from`, in preorder.
    fn preorder(&self, from: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![from];
        while let Some(u) = stack.pop() {
            out.push(u);
            if let Some([l, r]) = self.children[u] {
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    fn finish(&self) -> PhyloTree {
        let order = self.preorder(self.root);
        let mut image: Vec<NodeId> = vec![usize::MAX; self.parent.len()];
        let mut b = TreeBuilder::with_capacity(order.len());
        for &u in order.iter().rev() {
            image[u] = match self.children[u] {
                None => b.leaf(self.taxon[u].clone().expect("leaf")),
                Some([l, r]) => b.join(image[l], image[r]),
            };
        }
        b.finish(image[self.root]).expect("draft is a valid tree")
    }
}

fn taxon(i: usize) -> Taxon {
    Taxon::new(format!("t{i}")).expect("valid name")
}

/// A random rooted binary tree on `t1..tn` by sequential leaf attachment.
pub fn random_tree(n: usize, seed: u64) -> PhyloTree {
    assert!(n >= 1, "a tree needs at least one leaf");
    let mut rng = Lcg::new(seed, 0);
    let mut d = Draft {
        parent: Vec::new(),
        children: Vec::new(),
        taxon: Vec::new(),
        root: 0,
    };
    d.push(None, Some(taxon(1)));
    for i in 2..=n {
        let at = rng.below(d.parent.len());
        let leaf = d.push(None, Some(taxon(i)));
        d.attach_above(at, leaf);
    }
    d.finish()
}

/// One rooted SPR move drawn from `seed`; see [`spr_move_with`].
pub fn spr_move(t: &PhyloTree, seed: u64) -> Result<PhyloTree> {
    spr_move_with(t, &mut Lcg::new(seed, 0))
}

/// Prunes a random non-root subtree, suppresses its former parent and
/// regrafts it on a random edge of the remainder. Regrafting where it came
/// from is allowed.
pub fn spr_move_with(t: &PhyloTree, rng: &mut Lcg) -> Result<PhyloTree> {
    if t.leaf_count() < 3 {
        return Err(Error::TooFewLeaves {
            needed: 3,
            got: t.leaf_count(),
        });
    }
    let mut d = Draft::from_tree(t);
    let candidates: Vec<NodeId> = t.edges().collect();
    let u = candidates[rng.below(candidates.len())];
    let v = d.parent[u].expect("non-root");
    let s = t.sibling(u).expect("binary");

    // Prune u and suppress v.
    match d.parent[v] {
        Some(g) => d.replace_child(g, v, s),
        None => {
            d.root = s;
            d.parent[s] = None;
        }
    }
    d.parent[u] = None;
    d.children[v] = None;
    d.parent[v] = None;

    // A single-leaf remainder has no edge; the only move is back above it.
    let remainder = d.preorder(d.root);
    let w = match &remainder[1..] {
        [] => d.root,
        edges => edges[rng.below(edges.len())],
    };
    d.attach_above(w, u);
    Ok(d.finish())
}

/// `T1` is a random tree; every other tree is `moves` SPR moves away from it.
pub fn instance(spec: &GenSpec) -> Result<Vec<PhyloTree>> {
    spec.validate()?;
    let first = random_tree(spec.n, spec.seed);
    let mut trees = vec![first.clone()];
    for i in 1..spec.k {
        let mut rng = Lcg::new(spec.seed, i as u64);
        let mut t = first.clone();
        for _ in 0..spec.moves {
            t = spr_move_with(&t, &mut rng)?;
        }
        trees.push(t);
    }
    Ok(trees)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newick::{parse, serialize};
    use crate::oracle::exact_rspr;

    #[test]
    fn lcg_reference_values() {
        let mut r = Lcg::new(0, 0);
        assert_eq!(r.next_u64(), Lcg::INC);
        assert_eq!(
            r.next_u64(),
            Lcg::INC.wrapping_mul(Lcg::MUL).wrapping_add(Lcg::INC)
        );
        let mut s = Lcg::new(1, 1);
        assert_eq!(
            s.next_u64(),
            (1u64.wrapping_add(Lcg::STREAM))
                .wrapping_mul(Lcg::MUL)
                .wrapping_add(Lcg::INC)
        );
    }

    #[test]
    fn random_tree_shapes() {
        assert_eq!(serialize(&random_tree(1, 5)), "t1;");
        let a = random_tree(3, 42);
        assert_eq!(serialize(&a), serialize(&random_tree(3, 42)));
        assert_eq!(a.leaf_count(), 3);
        let big = random_tree(8, 9);
        assert_eq!(big.len() - big.leaf_count(), 7);
        assert_eq!(big.edge_count(), 14);
    }

    #[test]
    fn all_three_leaf_shapes_occur() {
        let mut shapes: Vec<String> = (0..200).map(|s| random_tree(3, s).canonical()).collect();
        shapes.sort();
        shapes.dedup();
        assert_eq!(shapes.len(), 3);
    }

    #[test]
    fn spr_keeps_size_and_taxa() {
        let t = random_tree(9, 3);
        for seed in 0..50 {
            let m = spr_move(&t, seed).unwrap();
            assert_eq!(m.taxon_set(), t.taxon_set());
            assert_eq!(m.edge_count(), t.edge_count());
            assert!(exact_rspr(&t, &m).unwrap() <= 1);
        }
        assert!(spr_move(&random_tree(2, 0), 0).is_err());
    }

    #[test]
    fn spr_reaches_the_hand_traced_move() {
        // Moving c next to a in ((a,b),c) gives ((a,c),b).
        let t = parse("((a,b),c);").unwrap();
        let target = parse("((a,c),b);").unwrap();
        let identity = (0..100u64).any(|s| spr_move(&t, s).unwrap().isomorphic(&t));
        let moved = (0..100u64).any(|s| spr_move(&t, s).unwrap().isomorphic(&target));
        assert!(identity && moved);
    }

    #[test]
    fn instances_are_deterministic() {
        let spec = GenSpec {
            n: 7,
            k: 3,
            moves: 2,
            seed: 99,
        };
        let a: Vec<String> = instance(&spec).unwrap().iter().map(serialize).collect();
        let b: Vec<String> = instance(&spec).unwrap().iter().map(serialize).collect();
        assert_eq!(a, b);
        let zero = instance(&GenSpec { moves: 0, ..spec }).unwrap();
        assert!(zero.iter().all(|t| serialize(t) == serialize(&zero[0])));
        assert!(instance(&GenSpec { k: 1, ..spec }).is_err());
    }

    #[test]
    fn one_move_bounds_distance() {
        for seed in 0..20 {
            let trees = instance(&GenSpec {
                n: 6,
                k: 2,
                moves: 1,
                seed,
            })
            .unwrap();
            assert!(exact_rspr(&trees[0], &trees[1]).unwrap() <= 1);
        }
    }
}
