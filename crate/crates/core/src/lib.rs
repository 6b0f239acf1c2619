//! Agreement forests for rooted binary phylogenetic trees.
//!
//! Approximate maximum agreement forests (MAF) and maximum acyclic agreement
//! forests (MAAF) for any number of trees on a shared taxon set, an exact
//! exhaustive oracle for small instances, and a seeded instance generator.

pub mod error;
pub mod forest;
pub mod gen;
pub mod maaf;
pub mod maf;
pub mod newick;
pub mod oracle;
pub mod tree;
pub mod triples;

pub use error::{Error, ParseError, ParseErrorKind, Result};
pub use forest::{Forest, ForestEdge, Violation};
pub use gen::{instance, random_tree, spr_move, GenSpec, Lcg};
pub use maaf::{build_gf, hybridization_upper_bound, maaf_approx, ForestDigraph};
pub use maf::{maf_approx, rspr_upper_bound, CutEntry, CutSet, Phase};
pub use oracle::{exact_hybridization, exact_maaf, exact_maf, exact_rspr, OracleResult};
pub use tree::{NodeId, PhyloTree, Taxon, TreeBuilder};
