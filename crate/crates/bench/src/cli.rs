//! Subcommands of the `gann` binary.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use gann_core::builder::{build_dc, build_ii, nndescent, refine_with_nd, BuildParams, BuildReport, NnDescentParams};
use gann_core::data::{
    complexity_report, gen_noise_queries, gen_powerlaw, ground_truth, noise_label, sample_query_indices,
    write_fvecs, write_ground_truth, NoiseSpec, PowerLawSpec, Vectors, DEFAULT_COMPLEXITY_K,
};
use gann_core::diversify::{Diversifier, DEFAULT_ALPHA, DEFAULT_THETA_DEG};
use gann_core::graph::{save_index, BuildMeta, Index, IndexFile, PartitionMode};
use gann_core::seeds::{SeedIndex, SeedStrategy};
use gann_core::DistCounter;

use crate::load_vectors;
use crate::sweep::{run_sweep, write_csv, SweepSpec, DEFAULT_REPEATS};

#[derive(Parser, Debug)]
#[command(name = "gann", version, about = "Graph-based approximate nearest neighbor benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a power-law dataset as fvecs
    Gen(GenArgs),
    /// Exact k nearest neighbors by brute force
    Gt(GtArgs),
    /// Noisy query workload derived from dataset rows
    Noise(NoiseArgs),
    /// Build an index file and print the build report as JSON
    Build(BuildArgs),
    /// Per-query LID and LRC as CSV
    Complexity(ComplexityArgs),
    /// Recall and efficiency over beam widths, written as CSV
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long = "pow-a", default_value_t = 0.0)]
    pub pow_a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GtArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long = "out-ids")]
    pub out_ids: PathBuf,
    #[arg(long = "out-dists")]
    pub out_dists: PathBuf,
}

#[derive(Args, Debug)]
pub struct NoiseArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub variance: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algo {
    Ii,
    Nnd,
    Dc,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum NdArg {
    Nond,
    Rnd,
    Rrnd,
    Mond,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SsArg {
    Sn,
    Kd,
    Km,
    Md,
    Sf,
    Ks,
}

impl From<SsArg> for SeedStrategy {
    fn from(s: SsArg) -> Self {
        match s {
            SsArg::Sn => SeedStrategy::Sn,
            SsArg::Kd => SeedStrategy::Kd,
            SsArg::Km => SeedStrategy::Km,
            SsArg::Md => SeedStrategy::Md,
            SsArg::Sf => SeedStrategy::Sf,
            SsArg::Ks => SeedStrategy::Ks,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum DcMode {
    Merged,
    Separate,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "ii")]
    pub algo: Algo,
    #[arg(long, value_enum, default_value = "rnd")]
    pub nd: NdArg,
    #[arg(long, value_enum, default_value = "ks")]
    pub ss: SsArg,
    /// Maximum out-degree (also the NN-Descent list size)
    #[arg(long = "R", alias = "r", default_value_t = 60)]
    pub r: usize,
    /// Build beam width
    #[arg(long = "L", alias = "l", default_value_t = 800)]
    pub l: usize,
    /// Layer-assignment parameter for SN
    #[arg(long = "M", alias = "m", default_value_t = 16.0)]
    pub m: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f32,
    #[arg(long, default_value_t = DEFAULT_THETA_DEG)]
    pub theta: f32,
    /// Seeds per insertion for KD, KM, KS (default: L)
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long = "leaf-size", default_value_t = 10_000)]
    pub leaf_size: usize,
    #[arg(long = "dc-mode", value_enum, default_value = "separate")]
    pub dc_mode: DcMode,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub deterministic: bool,
    #[arg(long)]
    pub shuffle: bool,
    /// Repair reachability from the entry after building
    #[arg(long)]
    pub connect: bool,
    #[arg(long = "nnd-iters", default_value_t = 10)]
    pub nnd_iters: usize,
    #[arg(long = "nnd-delta", default_value_t = 0.001)]
    pub nnd_delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ComplexityArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, default_value_t = DEFAULT_COMPLEXITY_K)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long = "gt-ids")]
    pub gt_ids: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long = "l-list", value_delimiter = ',', required = true)]
    pub l_list: Vec<usize>,
    #[arg(long = "nprobe-list", value_delimiter = ',', default_value = "1")]
    pub nprobe_list: Vec<usize>,
    /// Search with a freshly built seed structure instead of the stored one
    #[arg(long, value_enum)]
    pub ss: Option<SsArg>,
    /// Seeds per query (default: the beam width)
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_REPEATS)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Probe partitions concurrently within a query
    #[arg(long = "parallel-probes")]
    pub parallel_probes: bool,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Gt(a) => gt(a),
        Command::Noise(a) => noise(a),
        Command::Build(a) => build(a),
        Command::Complexity(a) => complexity(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let spec = PowerLawSpec { scale_k: a.scale, ..PowerLawSpec::new(a.n, a.d, a.pow_a, a.seed) };
    let set = gen_powerlaw(&spec)?;
    write_fvecs(&a.out, &set)?;
    Ok(())
}

fn gt(a: GtArgs) -> Result<()> {
    let data = load_vectors(&a.data)?;
    let queries = load_vectors(&a.queries)?;
    let (truth, counter) = ground_truth(&data, &queries, a.k)?;
    write_ground_truth(&truth, &a.out_ids, &a.out_dists)?;
    println!("{}", json!({ "queries": truth.len(), "k": a.k, "distance_calcs": counter.count() }));
    Ok(())
}

fn noise(a: NoiseArgs) -> Result<()> {
    let data = load_vectors(&a.data)?;
    let indices = sample_query_indices(data.len(), a.count, a.seed)?;
    let spec = NoiseSpec { variance: a.variance, seed: a.seed };
    let queries = gen_noise_queries(&data, &indices, &spec)?;
    write_fvecs(&a.out, &queries)?;
    println!("{}", json!({ "queries": queries.len(), "noise": noise_label(a.variance) }));
    Ok(())
}

fn diversifier(a: &BuildArgs) -> Result<Diversifier> {
    Ok(match a.nd {
        NdArg::Nond => Diversifier::NoNd,
        NdArg::Rnd => Diversifier::Rnd,
        NdArg::Rrnd => Diversifier::rrnd(a.alpha)?,
        NdArg::Mond => Diversifier::mond(a.theta)?,
    })
}

fn build(a: BuildArgs) -> Result<()> {
    let nd = diversifier(&a)?;
    let data = load_vectors(&a.data)?;
    let params = BuildParams {
        cap_r: a.r,
        beam_l: a.l,
        m: a.m,
        nd,
        ss: a.ss.into(),
        seed_count: a.s,
        leaf_size: a.leaf_size,
        seed: a.seed,
        threads: a.threads,
        deterministic: a.deterministic,
        shuffle: a.shuffle,
        connect: a.connect,
        ..BuildParams::default()
    };
    params.validate()?;
    let (index, seeds, report, ratio, method) = match a.algo {
        Algo::Ii => {
            let b = build_ii(&data, &params)?;
            (b.index, b.seeds, b.report, None, "ii")
        }
        Algo::Dc => {
            let mode = match a.dc_mode {
                DcMode::Merged => PartitionMode::Merged,
                DcMode::Separate => PartitionMode::Separate,
            };
            let b = build_dc(&data, &params, mode)?;
            (b.index, b.seeds, b.report, None, "dc")
        }
        Algo::Nnd => {
            if params.ss == SeedStrategy::Sn {
                return Err(gann_core::Error::param("SN seeds need an insertion-built layered index").into());
            }
            let np = NnDescentParams { max_iters: a.nnd_iters, delta: a.nnd_delta, ..NnDescentParams::new(a.r, a.seed) };
            let (g, mut report) = nndescent(&data, &np)?;
            let (g, refine, ratio) = refine_with_nd(&g, &data, &nd, a.r)?;
            let mut counter = DistCounter::new();
            let seeds = SeedIndex::build(params.ss, &data, &params_seed(&params), &mut counter)?;
            report.phases.pruning += refine.phases.pruning;
            report.phases.seeding += counter.count();
            report.distance_calcs = report.phases.total();
            report.wall_time += refine.wall_time;
            (Index::Flat(g), seeds, report, Some(ratio), "nnd")
        }
    };
    let meta = BuildMeta { method: method.into(), nd: nd.label().into(), ss: seeds.strategy().label().into() };
    let file = IndexFile { dim: data.dim(), index, seeds: Some(seeds), meta: Some(meta) };
    save_index(&a.out, &file).with_context(|| format!("writing {}", a.out.display()))?;
    println!("{}", report_json(&file, &report, ratio));
    Ok(())
}

fn params_seed(p: &BuildParams) -> gann_core::seeds::SeedParams {
    gann_core::seeds::SeedParams { seed: p.seed, ..p.seed_params }
}

fn report_json(file: &IndexFile, r: &BuildReport, ratio: Option<f64>) -> serde_json::Value {
    let meta = file.meta.clone().unwrap_or_default();
    json!({
        "method": meta.method,
        "nd": meta.nd,
        "ss": meta.ss,
        "index_kind": file.index.kind_label(),
        "n": file.index.len(),
        "dim": file.dim,
        "distance_calcs": r.distance_calcs,
        "wall_time_s": r.wall_time,
        "phases": {
            "seeding": r.phases.seeding,
            "search": r.phases.search,
            "pruning": r.phases.pruning,
            "repair": r.phases.repair,
            "partition": r.phases.partition,
        },
        "iteration_updates": r.iteration_updates,
        "repair_edges": r.repair_edges,
        "pruning_ratio": ratio,
    })
}

fn complexity(a: ComplexityArgs) -> Result<()> {
    let data = load_vectors(&a.data)?;
    let queries = load_vectors(&a.queries)?;
    let report = complexity_report(&data, &queries, a.k)?;
    report.save_csv(&a.out)?;
    println!(
        "{}",
        json!({
            "queries": queries.len(),
            "k": a.k,
            "mean_lid": report.mean_lid(),
            "median_lid": report.median_lid(),
            "mean_lrc": report.mean_lrc(),
            "median_lrc": report.median_lrc(),
        })
    );
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let spec = SweepSpec {
        index: a.index,
        data: a.data,
        queries: a.queries,
        gt_ids: a.gt_ids,
        k: a.k,
        l_list: a.l_list,
        nprobe_list: a.nprobe_list,
        ss: a.ss.map(Into::into),
        s: a.s,
        repeats: a.repeats,
        seed: a.seed,
        parallel_probes: a.parallel_probes,
    };
    let rows = run_sweep(&spec)?;
    write_csv(&rows, &a.out)?;
    println!(
        "{}",
        json!({
            "rows": rows.len(),
            "out": display(&a.out),
            "repeats": spec.repeats,
            "trimmed_each_end": if spec.repeats > 2 * crate::sweep::TRIM { crate::sweep::TRIM } else { 0 },
            "warmup": "one untimed pass per setting; caches are not flushed",
        })
    );
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
