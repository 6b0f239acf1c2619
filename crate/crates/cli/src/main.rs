mod report;

use std::io::{self, Read, Write};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use agforest::maaf::{build_gf, maaf_approx_observed};
use agforest::maf::maf_approx_observed;
use agforest::newick::{parse_many, serialize};
use agforest::oracle::{exact_maaf, exact_maf};
use agforest::{instance, Error, Forest, GenSpec, PhyloTree};

use report::{newick_list, Bounds, Check, Cuts, Oracle, Report};

#[derive(Parser)]
#[command(
    name = "agforest",
    version,
    about = "Agreement forests for rooted binary trees"
)]
struct Cli {
    /// Output format (json for reports, newick for `gen`, unless given).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Print every cut step to stderr.
    #[arg(long, global = true)]
    verbose: bool,
    /// Include wall-clock time in JSON reports.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Newick,
    Dot,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Maf,
    Maaf,
}

#[derive(Subcommand)]
enum Command {
    /// Approximate maximum agreement forest of all trees in FILE.
    Maf { file: String },
    /// Approximate maximum acyclic agreement forest of all trees in FILE.
    Maaf { file: String },
    /// rSPR distance bound for the first two trees in FILE.
    Rspr {
        file: String,
        /// Also compute the exact value by exhaustive search.
        #[arg(long)]
        oracle: bool,
    },
    /// Hybridization number bound for all trees in FILE.
    Hyb {
        file: String,
        #[arg(long)]
        oracle: bool,
    },
    /// Exact minimum forest by exhaustive search.
    Exact {
        file: String,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        max_cuts: usize,
    },
    /// Random instance: a tree and k-1 SPR walks from it.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        moves: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check whether FOREST_FILE (one component per line) is an agreement
    /// forest for the trees in FILE.
    Check { file: String, forest_file: String },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::ParseLine { .. } => 1,
            Error::TooLarge { .. } => 3,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

struct Input {
    trees: Vec<PhyloTree>,
    digest: String,
}

impl Input {
    fn n_taxa(&self) -> usize {
        self.trees.first().map_or(0, |t| t.leaf_count())
    }
}

fn read_source(path: &str) -> Result<String, Failure> {
    let mut text = String::new();
    let res = if path == "-" {
        io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        std::fs::read_to_string(path).map(|s| text = s)
    };
    res.map_err(|e| fail(2, format!("{path}: {e}")))?;
    Ok(text)
}

fn load(path: &str) -> Result<Input, Failure> {
    let text = read_source(path)?;
    let trees = parse_many(&text).map_err(|e| Failure {
        message: format!("{path}: {e}"),
        ..Failure::from(e)
    })?;
    Ok(Input {
        trees,
        digest: hex::encode(Sha256::digest(text.as_bytes())),
    })
}

/// Output produced by a command, before formatting.
struct Outcome {
    report: Report,
    forest: Option<Forest>,
    trees: Vec<PhyloTree>,
    /// Exit code to use after printing (non-zero for a rejected `check`).
    code: u8,
}

fn log_step(verbose: bool) -> impl FnMut(&Forest, &agforest::CutEntry, &Forest) {
    move |_, entry, _| {
        if verbose {
            eprintln!("{entry}");
        }
    }
}

fn run_approx(
    cmd: &'static str,
    input: Input,
    acyclic: bool,
    oracle: bool,
    verbose: bool,
) -> Result<Outcome, Failure> {
    let trees = if cmd == "rspr" {
        let mut t = input.trees.clone();
        if t.len() < 2 {
            return Err(Error::TooFewTrees {
                needed: 2,
                got: t.len(),
            }
            .into());
        }
        t.truncate(2);
        t
    } else {
        input.trees.clone()
    };
    let (mut forest, mut log) = maf_approx_observed(&trees, log_step(verbose))?;
    let mut bounds = Bounds {
        rspr: Some(forest.len() - 1),
        hybridization: None,
    };
    if acyclic {
        let (g, cyc) = maaf_approx_observed(&forest, &trees, log_step(verbose))?;
        forest = g;
        log.extend(cyc);
        bounds.hybridization = Some(forest.len() - 1);
    }
    if cmd == "rspr" {
        bounds.hybridization = None;
    }
    let mut report = Report::new(cmd, input.digest.clone(), input.n_taxa(), input.trees.len())
        .with_forest(&forest);
    report.cuts = Some(Cuts::of(&log));
    report.bounds = Some(bounds);
    if oracle {
        let o = if acyclic {
            let r = exact_maaf(&trees, trees[0].edge_count())?.expect("full budget");
            Oracle {
                mode: "maaf",
                min_cuts: r.min_cuts,
                forest_size: r.witness_forest.len(),
                forest: newick_list(&r.witness_forest),
                rspr: None,
                hybridization: Some(r.witness_forest.len() - 1),
            }
        } else {
            let r = exact_maf(&trees, trees[0].edge_count())?.expect("full budget");
            Oracle {
                mode: "maf",
                min_cuts: r.min_cuts,
                forest_size: r.witness_forest.len(),
                forest: newick_list(&r.witness_forest),
                rspr: Some(r.witness_forest.len() - 1),
                hybridization: None,
            }
        };
        report.oracle = Some(o);
    }
    Ok(Outcome {
        report,
        forest: Some(forest),
        trees,
        code: 0,
    })
}

fn run_exact(input: Input, mode: Mode, max_cuts: usize) -> Result<Outcome, Failure> {
    let trees = input.trees.clone();
    let (name, result) = match mode {
        Mode::Maf => ("maf", exact_maf(&trees, max_cuts)?),
        Mode::Maaf => ("maaf", exact_maaf(&trees, max_cuts)?),
    };
    let r = result.ok_or_else(|| fail(3, format!("no solution within {max_cuts} cuts")))?;
    let size = r.witness_forest.len();
    let mut report = Report::new("exact", input.digest.clone(), input.n_taxa(), trees.len());
    report.oracle = Some(Oracle {
        mode: name,
        min_cuts: r.min_cuts,
        forest_size: size,
        forest: newick_list(&r.witness_forest),
        rspr: (mode == Mode::Maf && trees.len() == 2).then(|| size - 1),
        hybridization: (mode == Mode::Maaf).then(|| size - 1),
    });
    Ok(Outcome {
        report,
        forest: Some(r.witness_forest),
        trees,
        code: 0,
    })
}

fn run_check(input: Input, forest_file: &str) -> Result<Outcome, Failure> {
    let components = load(forest_file)?.trees;
    let forest = Forest::from_components(components)?;
    let trees = input.trees.clone();
    let violation = match forest.check_agreement(&trees) {
        Ok(v) => v,
        Err(Error::LabelMismatch(m)) => return Err(fail(2, format!("label mismatch: {m}"))),
        Err(e) => return Err(e.into()),
    };
    let valid = violation.is_none();
    let acyclic = if valid {
        Some(build_gf(&forest, &trees)?.is_acyclic())
    } else {
        None
    };
    let mut report = Report::new("check", input.digest.clone(), input.n_taxa(), trees.len())
        .with_forest(&forest);
    report.check = Some(Check {
        valid,
        violation,
        acyclic,
    });
    Ok(Outcome {
        report,
        forest: Some(forest),
        trees,
        code: if valid { 0 } else { 2 },
    })
}

fn emit(out: &mut impl Write, outcome: Outcome, format: Format) -> Result<u8, Failure> {
    let io = |e: io::Error| fail(2, e.to_string());
    match format {
        Format::Json => {
            let text = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
            writeln!(out, "{text}").map_err(io)?;
        }
        Format::Newick => {
            let f = outcome
                .forest
                .ok_or_else(|| fail(2, "this command produces no forest"))?;
            for c in f.components() {
                writeln!(out, "{}", serialize(c)).map_err(io)?;
            }
        }
        Format::Dot => {
            let f = outcome
                .forest
                .ok_or_else(|| fail(2, "this command produces no forest"))?;
            let g = build_gf(&f, &outcome.trees)?;
            write!(out, "{}", g.to_dot()).map_err(io)?;
        }
    }
    Ok(outcome.code)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let start = Instant::now();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let verbose = cli.verbose;
    let outcome = match cli.command {
        Command::Gen { n, k, moves, seed } => {
            let trees = instance(&GenSpec { n, k, moves, seed })?;
            match cli.format.unwrap_or(Format::Newick) {
                Format::Newick => {
                    for t in &trees {
                        writeln!(out, "{}", serialize(t)).map_err(|e| fail(2, e.to_string()))?;
                    }
                }
                Format::Json => {
                    let list: Vec<String> = trees.iter().map(serialize).collect();
                    let v = serde_json::json!({
                        "schema": "agforest.instance/1",
                        "n": n, "k": k, "moves": moves, "seed": seed,
                        "trees": list,
                    });
                    writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json"))
                        .map_err(|e| fail(2, e.to_string()))?;
                }
                Format::Dot => return Err(fail(2, "gen has no DOT output")),
            }
            return Ok(0);
        }
        Command::Maf { file } => run_approx("maf", load(&file)?, false, false, verbose)?,
        Command::Maaf { file } => run_approx("maaf", load(&file)?, true, false, verbose)?,
        Command::Rspr { file, oracle } => run_approx("rspr", load(&file)?, false, oracle, verbose)?,
        Command::Hyb { file, oracle } => run_approx("hyb", load(&file)?, true, oracle, verbose)?,
        Command::Exact {
            file,
            mode,
            max_cuts,
        } => run_exact(load(&file)?, mode, max_cuts)?,
        Command::Check { file, forest_file } => run_check(load(&file)?, &forest_file)?,
    };
    let mut outcome = outcome;
    if cli.timing {
        outcome.report.wall_ms = Some(start.elapsed().as_millis());
    }
    emit(&mut out, outcome, cli.format.unwrap_or(Format::Json))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("agforest: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
