use serde::Serialize;

use agforest::maf::{CutSet, Phase};
use agforest::newick::serialize;
use agforest::Forest;

pub const SCHEMA: &str = "agforest.report/1";

#[derive(Serialize, Default, Clone, Copy)]
pub struct PhaseCount {
    pub steps: usize,
    pub edges: usize,
}

#[derive(Serialize, Default)]
pub struct Cuts {
    pub triple: PhaseCount,
    pub overlap: PhaseCount,
    pub cycle: PhaseCount,
    pub total: usize,
}

impl Cuts {
    pub fn of(log: &CutSet) -> Self {
        let count = |p| PhaseCount {
            steps: log.steps_in(p),
            edges: log.edges_in(p),
        };
        Cuts {
            triple: count(Phase::Triple),
            overlap: count(Phase::Overlap),
            cycle: count(Phase::Cycle),
            total: log.edges_cut(),
        }
    }
}

#[derive(Serialize, Default)]
pub struct Bounds {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rspr: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hybridization: Option<usize>,
}

#[derive(Serialize)]
pub struct Oracle {
    pub mode: &'static str,
    pub min_cuts: usize,
    pub forest_size: usize,
    pub forest: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rspr: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hybridization: Option<usize>,
}

#[derive(Serialize)]
pub struct Check {
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<agforest::Violation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acyclic: Option<bool>,
}

#[derive(Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: &'static str,
    pub input_digest: String,
    pub n_taxa: usize,
    pub n_trees: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cuts: Option<Cuts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forest_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forest: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<Oracle>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<u128>,
}

impl Report {
    pub fn new(command: &'static str, input_digest: String, n_taxa: usize, n_trees: usize) -> Self {
        Report {
            schema: SCHEMA,
            command,
            input_digest,
            n_taxa,
            n_trees,
            cuts: None,
            forest_size: None,
            forest: None,
            bounds: None,
            oracle: None,
            check: None,
            wall_ms: None,
        }
    }

    pub fn with_forest(mut self, f: &Forest) -> Self {
        self.forest_size = Some(f.len());
        self.forest = Some(newick_list(f));
        self
    }
}

pub fn newick_list(f: &Forest) -> Vec<String> {
    f.components().iter().map(serialize).collect()
}
