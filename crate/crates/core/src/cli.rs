//! Command-line driver: instance generation, end-to-end verification, probe
//! and space benchmarks, and a walkthrough of the worked example.
//!
//! Instances are drawn with ChaCha8 seeded from a `u64`: every edge, in
//! enumeration order, is missing when the next `f64` sample is below the
//! missing probability. The output is identical on every platform.

use std::fmt::{self, Write as _};
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::butterfly::{oracle_reachable, ButterflyEdge, ButterflyShape, ButterflySubgraph};
use crate::cell::CellWord;
use crate::error::{Error, Result};
use crate::fixtures::butterfly_example;
use crate::reduction::{build_instance, edge_to_update};

#[derive(Debug, Parser)]
#[command(name = "cellprobe", version, about = "Cell-probe reduction laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random butterfly subgraph as JSON.
    Gen(GenArgs),
    /// Check reduction answers against direct reachability.
    Verify(VerifyArgs),
    /// Emit probe and space measurements as CSV.
    Bench(BenchArgs),
    /// Walk through the degree-2, depth-2 worked example.
    #[command(name = "demo-figure3")]
    DemoFigure3,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub degree: u64,
    #[arg(long)]
    pub depth: u32,
    #[arg(long = "missing-prob")]
    pub missing_prob: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Instance file in the JSON format written by `gen`.
    pub instance: PathBuf,
    /// Check every source-sink pair instead of a sample.
    #[arg(long = "exhaustive-pairs")]
    pub exhaustive_pairs: bool,
    /// Seed for pair sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of sampled pairs when not exhaustive.
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub degree: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub depth: Vec<u32>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "missing-prob", default_value_t = 0.5)]
    pub missing_prob: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Independent per-edge removal with probability `missing_prob`.
pub fn generate(shape: ButterflyShape, missing_prob: f64, seed: u64) -> Result<ButterflySubgraph> {
    if !(0.0..=1.0).contains(&missing_prob) {
        return Err(Error::InvalidParams(format!(
            "missing probability {missing_prob} not in [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let missing: Vec<ButterflyEdge> = shape
        .edges()
        .filter(|_| rng.gen::<f64>() < missing_prob)
        .collect();
    ButterflySubgraph::with_missing(shape, missing)
}

pub fn cmd_gen(degree: u64, depth: u32, missing_prob: f64, seed: u64) -> Result<String> {
    let shape = ButterflyShape::new(degree, depth)?;
    Ok(generate(shape, missing_prob, seed)?.to_json())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSelection {
    All,
    Sample { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub degree: u64,
    pub depth: u32,
    pub present_edges: u64,
    pub updates: usize,
    pub pairs_checked: usize,
    pub reachable_pairs: usize,
    pub mismatches: Vec<(u64, u64)>,
    pub max_probes: u64,
    pub mean_probes: f64,
    pub measured_s: usize,
    pub width: u32,
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "instance: degree {} depth {}", self.degree, self.depth)?;
        writeln!(f, "present edges: {}", self.present_edges)?;
        writeln!(f, "updates: {}", self.updates)?;
        writeln!(f, "pairs checked: {}", self.pairs_checked)?;
        writeln!(f, "reachable pairs: {}", self.reachable_pairs)?;
        writeln!(f, "mismatches: {}", self.mismatches.len())?;
        for (s, t) in &self.mismatches {
            writeln!(f, "  mismatch: source {s} sink {t}")?;
        }
        writeln!(f, "probes per query: max {} mean {:.3}", self.max_probes, self.mean_probes)?;
        writeln!(f, "measured s: {} cells of {} bits", self.measured_s, self.width)
    }
}

pub fn verify_subgraph(g: &ButterflySubgraph, pairs: PairSelection) -> Result<VerifyReport> {
    let shape = *g.shape();
    let n = shape.nodes_per_layer();
    let selected: Vec<(u64, u64)> = match pairs {
        PairSelection::All => (0..n).flat_map(|s| (0..n).map(move |t| (s, t))).collect(),
        PairSelection::Sample { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
                .collect()
        }
    };
    let inst = build_instance(g);
    let store = inst.build_store()?;
    let mut report = VerifyReport {
        degree: shape.degree(),
        depth: shape.depth(),
        present_edges: g.present_edges(),
        updates: inst.version_tree().update_count(),
        pairs_checked: selected.len(),
        reachable_pairs: 0,
        mismatches: Vec::new(),
        max_probes: 0,
        mean_probes: 0.0,
        measured_s: store.measured_s(),
        width: store.width(),
    };
    let mut total = 0u64;
    for (s, t) in selected {
        let out = inst.answer_reachability(&store, s, t)?;
        let truth = oracle_reachable(g, s, t)?;
        if out.answer != truth {
            report.mismatches.push((s, t));
        }
        report.reachable_pairs += truth as usize;
        report.max_probes = report.max_probes.max(out.probes);
        total += out.probes;
    }
    if report.pairs_checked > 0 {
        report.mean_probes = total as f64 / report.pairs_checked as f64;
    }
    Ok(report)
}

pub fn cmd_verify(text: &str, pairs: PairSelection) -> Result<VerifyReport> {
    let g = ButterflySubgraph::from_json(text)?;
    verify_subgraph(&g, pairs)
}

/// One benchmark row. CSV columns: `b,d,n,m,s,w,t_max,bound_curve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub b: u64,
    pub d: u32,
    /// Present edges.
    pub n: u64,
    /// Updates, one per missing edge.
    pub m: usize,
    /// Measured store size in cells.
    pub s: usize,
    /// Store cell width in bits.
    pub w: u32,
    /// Most probes used by any reachability query.
    pub t_max: u64,
    /// `lg n / lg(s w / n)`, empty unless `s w > n > 0`.
    pub bound_curve: Option<f64>,
}

pub fn bound_curve(n: u64, s: usize, w: u32) -> Option<f64> {
    let n = n as f64;
    let sw = s as f64 * w as f64;
    (n > 0.0 && sw > n).then(|| n.log2() / (sw / n).log2())
}

pub fn bench(
    degrees: &[u64],
    depths: &[u32],
    trials: usize,
    seed: u64,
    missing_prob: f64,
) -> Result<Vec<BenchRecord>> {
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for &b in degrees {
        for &d in depths {
            let shape = ButterflyShape::new(b, d)?;
            for _ in 0..trials {
                let g = generate(shape, missing_prob, seeds.gen())?;
                let report = verify_subgraph(&g, PairSelection::All)?;
                if !report.mismatches.is_empty() {
                    return Err(Error::VerificationFailure(format!(
                        "{} mismatches on a degree {b} depth {d} instance",
                        report.mismatches.len()
                    )));
                }
                rows.push(BenchRecord {
                    b,
                    d,
                    n: report.present_edges,
                    m: report.updates,
                    s: report.measured_s,
                    w: report.width,
                    t_max: report.max_probes,
                    bound_curve: bound_curve(report.present_edges, report.measured_s, report.width),
                });
            }
        }
    }
    Ok(rows)
}

pub const BENCH_HEADER: &str = "b,d,n,m,s,w,t_max,bound_curve";

pub fn write_bench_csv<W: Write>(rows: &[BenchRecord], out: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    wtr.write_record(BENCH_HEADER.split(','))
        .map_err(|e| Error::Io(e.to_string()))?;
    for row in rows {
        wtr.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

fn digits_str(digits: &[u64]) -> String {
    let parts: Vec<String> = digits.iter().map(u64::to_string).collect();
    format!("({})", parts.join(","))
}

/// Transcript for the degree-2, depth-2 example with missing edges
/// `e_1..e_5`: the placement arithmetic for `e_1`, the update lists of the
/// version tree, and the marks seen at version `s_1`.
pub fn demo_figure3() -> Result<String> {
    let ex = butterfly_example();
    let shape = *ex.graph.shape();
    let (b, d) = (shape.degree(), shape.depth());
    let inst = build_instance(&ex.graph);
    let store = inst.build_store()?;
    let mut out = String::new();
    let w = &mut out;
    let fmt_err = |_| Error::Io("formatting failed".into());

    writeln!(w, "butterfly: degree {b}, depth {d}, missing {}", ex.named.len()).map_err(fmt_err)?;
    for (name, e) in &ex.named {
        writeln!(
            w,
            "  {name}: layer {} {} -> {}",
            e.layer,
            digits_str(&shape.digits(e.lower)),
            digits_str(&shape.digits(e.upper))
        )
        .map_err(fmt_err)?;
    }

    let (name, e1) = ex.named[0];
    let i = e1.layer;
    let lower = shape.digits(e1.lower);
    let upper = shape.digits(e1.upper);
    let p = edge_to_update(&shape, &e1)?;
    writeln!(w, "placement of {name}: i = {i}, v_l = {}, v_u = {}", digits_str(&lower), digits_str(&upper))
        .map_err(fmt_err)?;
    let version_terms: Vec<String> = (0..d - i)
        .map(|k| format!("{} * {b}^{k}", lower[(i + k) as usize]))
        .collect();
    writeln!(
        w,
        "  version index = sum_{{k=0}}^{{d-i-1}} b^k v_l[i+k] = {} = {} in layer d-i = {}",
        version_terms.join(" + "),
        p.version_node.index,
        p.version_node.layer
    )
    .map_err(fmt_err)?;
    let mark_terms: Vec<String> = (0..=i)
        .map(|k| format!("{} * {b}^{}", upper[k as usize], i - k))
        .collect();
    writeln!(
        w,
        "  mark index = sum_{{k=0}}^{{i}} b^(i-k) v_u[k] = {} = {} in layer i+1 = {}",
        mark_terms.join(" + "),
        p.mark_target.index,
        p.mark_target.layer
    )
    .map_err(fmt_err)?;
    writeln!(
        w,
        "{name}: version layer {} index {}; mark layer {} index {}",
        p.version_node.layer, p.version_node.index, p.mark_target.layer, p.mark_target.index
    )
    .map_err(fmt_err)?;

    writeln!(w, "version tree updates:").map_err(fmt_err)?;
    let vt = inst.version_tree();
    for layer in 0..=d {
        for pos in 0..b.pow(layer) {
            let node = crate::dynamic::TreeNode::new(layer, pos);
            let id = inst.version_id(node);
            let names: Vec<&str> = ex
                .named
                .iter()
                .filter(|(_, e)| {
                    edge_to_update(&shape, e).is_ok_and(|p| p.version_node == node)
                })
                .map(|&(n, _)| n)
                .collect();
            debug_assert_eq!(names.len(), vt.updates(id).len());
            let label = if layer == d {
                format!(" (s_{})", pos + 1)
            } else {
                String::new()
            };
            writeln!(w, "  layer {layer} index {pos}{label}: {{{}}}", names.join(", "))
                .map_err(fmt_err)?;
        }
    }

    let s1 = inst.version_id(crate::dynamic::TreeNode::new(d, 0));
    let t = inst.marked_tree();
    let mut marks = Vec::new();
    for node in t.nodes() {
        if store.cell_at_version(t.address(node), s1)?.0 != CellWord::ZERO {
            marks.push(format!("layer {} index {}", node.layer, node.index));
        }
    }
    writeln!(w, "marks at version s_1: {}", marks.join("; ")).map_err(fmt_err)?;

    let mut reach = Vec::new();
    for sink in 0..shape.nodes_per_layer() {
        let ok = inst.answer_reachability(&store, 0, sink)?.answer;
        reach.push(format!("t_{}={}", sink + 1, if ok { "yes" } else { "no" }));
    }
    writeln!(w, "s_1 reaches: {}", reach.join(" ")).map_err(fmt_err)?;
    Ok(out)
}

/// Process exit status: 0 success, 1 verification failure, 2 input error.
pub fn exit_code(result: &Result<()>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(Error::VerificationFailure(_)) => 1,
        Err(_) => 2,
    }
}

fn emit(out: Option<&PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Runs a parsed command, writing results to `stdout` unless `--out` is set.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Gen(a) => {
            let text = cmd_gen(a.degree, a.depth, a.missing_prob, a.seed)?;
            emit(a.out.as_ref(), &text, stdout)
        }
        Command::Verify(a) => {
            let text = std::fs::read_to_string(&a.instance)?;
            let pairs = if a.exhaustive_pairs {
                PairSelection::All
            } else {
                PairSelection::Sample {
                    count: a.samples,
                    seed: a.seed,
                }
            };
            let report = cmd_verify(&text, pairs)?;
            emit(a.out.as_ref(), &report.to_string(), stdout)?;
            if report.mismatches.is_empty() {
                Ok(())
            } else {
                Err(Error::VerificationFailure(format!(
                    "{} of {} pairs disagree",
                    report.mismatches.len(),
                    report.pairs_checked
                )))
            }
        }
        Command::Bench(a) => {
            let rows = bench(&a.degree, &a.depth, a.trials, a.seed, a.missing_prob)?;
            let mut buf = Vec::new();
            write_bench_csv(&rows, &mut buf)?;
            emit(a.out.as_ref(), &String::from_utf8_lossy(&buf), stdout)
        }
        Command::DemoFigure3 => emit(None, &demo_figure3()?, stdout),
    }
}
