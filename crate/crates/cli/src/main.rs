use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use denscale::bench::{
    corrected_rand, generate_planted, generate_two_scale, run_experiment, ExperimentSpec,
    PlantedConfig, TwoScaleConfig,
};
use denscale::detect::greedy_agglomerate;
use denscale::envelope::Tolerances;
use denscale::multiscale::find_multiscale_partitions;
use denscale::optimize::{best_straight_cut, find_best_partition, find_best_partition_at};
use denscale::quality::d_out_for_expected_modularity;
use denscale::relevance::{relevance_curve, relevant_scales};
use denscale::{Dendrogram, Graph, Partition, QualityFamily, QualityModel, SimilarityData};

#[derive(Parser)]
#[command(name = "denscale", version, about = "Optimal and multi-scale cuts of community dendrograms")]
struct Cli {
    /// Print summaries as a single JSON document.
    #[arg(long, global = true)]
    json: bool,

    /// Override the envelope tolerances (breakpoint merging and ties).
    #[arg(long, global = true, value_name = "EPS")]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic graph with planted communities.
    Generate(GenerateArgs),
    /// Build a dendrogram by greedy modularity merging.
    Detect(DetectArgs),
    /// Extract a straight cut of a dendrogram.
    Cut(CutArgs),
    /// Best partition over all cuts of a dendrogram.
    Best(BestArgs),
    /// Optimal partitions at every scale.
    Multiscale(MultiscaleArgs),
    /// Relevance of scales and the most relevant partitions.
    Relevance(RelevanceArgs),
    /// Adjusted Rand index between two partitions.
    Compare(CompareArgs),
    /// Run a benchmark experiment.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Planted,
    TwoScale,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "planted")]
    model: Model,
    #[arg(long)]
    n: usize,
    /// Number of blocks (planted).
    #[arg(long, default_value_t = 4)]
    c: usize,
    #[arg(long, default_value_t = 6.0)]
    d_in: f64,
    #[arg(long, conflicts_with = "q_exp")]
    d_out: Option<f64>,
    /// Expected modularity of the reference; sets d_out (planted).
    #[arg(long)]
    q_exp: Option<f64>,
    #[arg(long = "macro", default_value_t = 10)]
    macro_count: usize,
    #[arg(long = "micro", default_value_t = 10)]
    micro_count: usize,
    #[arg(long, default_value_t = 6.0)]
    d_in_micro: f64,
    #[arg(long, default_value_t = 3.0)]
    d_in_macro: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output edge list.
    #[arg(long)]
    graph: PathBuf,
    /// Output reference partition (planted).
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    macro_reference: Option<PathBuf>,
    #[arg(long)]
    micro_reference: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the merge sequence as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct QualityInput {
    #[arg(long, default_value = "modularity")]
    quality: QualityFamily,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    dendrogram: PathBuf,
    /// Vertex coordinates for the similarity quality.
    #[arg(long, conflicts_with = "distances")]
    embedding: Option<PathBuf>,
    /// Distance matrix for the similarity quality.
    #[arg(long)]
    distances: Option<PathBuf>,
}

#[derive(Args)]
struct CutArgs {
    #[command(flatten)]
    input: QualityInput,
    /// Number of merges to apply; without it the best straight cut is taken.
    #[arg(long)]
    step: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn unit_interval(s: &str) -> std::result::Result<f64, String> {
    let a: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if (0.0..=1.0).contains(&a) {
        Ok(a)
    } else {
        Err(format!("{a} is outside [0, 1]"))
    }
}

#[derive(Args)]
struct BestArgs {
    #[command(flatten)]
    input: QualityInput,
    /// Optimize the scaled quality at this α instead.
    #[arg(long, value_parser = unit_interval)]
    alpha: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MultiscaleArgs {
    #[command(flatten)]
    input: QualityInput,
    /// Write the optimal partition at this scale to --out.
    #[arg(long, value_parser = unit_interval, requires = "out")]
    alpha: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the reordered dendrogram, lifespans and scale table here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct RelevanceArgs {
    #[command(flatten)]
    input: QualityInput,
    /// Number of local maxima to report.
    #[arg(long, default_value_t = 2)]
    top: usize,
    /// Also report maxima on the all-singletons and whole-set partitions.
    #[arg(long)]
    include_trivial: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Replaces the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
}

/// A problem with the invocation rather than the data; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn fmt9(x: f64) -> String {
    format!("{x:.9}")
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load<T>(path: &Path, parse: impl FnOnce(&str) -> denscale::Result<T>) -> Result<T> {
    let text = read(path)?;
    parse(&text).with_context(|| format!("{}", path.display()))
}

/// Files are written only once every result is ready, each through a
/// temporary sibling and a rename.
struct Outputs(Vec<(PathBuf, String)>);

impl Outputs {
    fn new() -> Self {
        Outputs(Vec::new())
    }

    fn add(&mut self, path: impl Into<PathBuf>, contents: String) {
        self.0.push((path.into(), contents));
    }

    fn commit(self) -> Result<()> {
        for (path, contents) in self.0 {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)
                    .with_context(|| format!("cannot create {}", dir.display()))?;
            }
            let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
            fs::write(&tmp, contents).with_context(|| format!("cannot write {}", tmp.display()))?;
            fs::rename(&tmp, &path).with_context(|| format!("cannot write {}", path.display()))?;
        }
        Ok(())
    }
}

fn emit(json: bool, text: String, doc: Value) {
    if json {
        println!("{doc}");
    } else {
        print!("{text}");
    }
}

struct Loaded {
    graph: Option<Graph>,
    data: Option<SimilarityData>,
    dendrogram: Dendrogram,
}

impl Loaded {
    fn read(input: &QualityInput) -> Result<Self> {
        let graph = input.graph.as_deref().map(|p| load(p, Graph::parse)).transpose()?;
        let data = match (&input.embedding, &input.distances) {
            (Some(p), _) => Some(load(p, SimilarityData::parse_embedding)?),
            (_, Some(p)) => Some(load(p, SimilarityData::parse_distances)?),
            _ => None,
        };
        let dendrogram = load(&input.dendrogram, Dendrogram::parse)?;
        let n = dendrogram.leaf_count();
        if let Some(g) = &graph {
            if g.vertex_count() != n {
                bail!(
                    "{}: dendrogram has {n} leaves but the graph has {} vertices",
                    input.dendrogram.display(),
                    g.vertex_count()
                );
            }
        }
        if let Some(d) = &data {
            if d.vertex_count() != n {
                bail!("similarity data covers {} vertices, dendrogram has {n} leaves", d.vertex_count());
            }
        }
        Ok(Loaded {
            graph,
            data,
            dendrogram,
        })
    }

    fn model(&self, family: QualityFamily) -> Result<QualityModel<'_>> {
        Ok(match family {
            QualityFamily::Modularity => QualityModel::modularity(self.need_graph(family)?)?,
            QualityFamily::Performance => QualityModel::performance(self.need_graph(family)?)?,
            QualityFamily::Similarity => {
                let data = self
                    .data
                    .as_ref()
                    .ok_or_else(|| usage("the similarity quality needs --embedding or --distances"))?;
                QualityModel::similarity(data)?
            }
        })
    }

    fn need_graph(&self, family: QualityFamily) -> Result<&Graph> {
        self.graph
            .as_ref()
            .ok_or_else(|| usage(format!("the {family} quality needs --graph")))
    }
}

fn tolerances(tol: Option<f64>) -> Result<Tolerances> {
    match tol {
        None => Ok(Tolerances::default()),
        Some(eps) if eps.is_finite() && eps >= 0.0 && eps < 0.1 => Ok(Tolerances {
            collinear: eps,
            crossing: eps,
        }),
        Some(eps) => Err(usage(format!("--tol {eps} must lie in [0, 0.1)"))),
    }
}

fn generate(args: &GenerateArgs, json: bool) -> Result<()> {
    let mut out = Outputs::new();
    let (graph, doc) = match args.model {
        Model::Planted => {
            let d_out = match (args.d_out, args.q_exp) {
                (Some(d), _) => d,
                (None, Some(q)) => d_out_for_expected_modularity(args.c, args.d_in, q)?,
                (None, None) => return Err(usage("planted graphs need --d-out or --q-exp")),
            };
            let cfg = PlantedConfig {
                n: args.n,
                c: args.c,
                d_in: args.d_in,
                d_out,
                seed: args.seed,
            };
            let (g, reference) = generate_planted(&cfg)?;
            if let Some(p) = &args.reference {
                out.add(p, reference.to_text());
            }
            (g, json!({ "model": "planted", "config": cfg }))
        }
        Model::TwoScale => {
            let cfg = TwoScaleConfig {
                n: args.n,
                macro_count: args.macro_count,
                micro_count: args.micro_count,
                d_in_micro: args.d_in_micro,
                d_in_macro: args.d_in_macro,
                d_out: args.d_out.unwrap_or(1.0),
                seed: args.seed,
            };
            let (g, macro_p, micro_p) = generate_two_scale(&cfg)?;
            if let Some(p) = &args.macro_reference {
                out.add(p, macro_p.to_text());
            }
            if let Some(p) = &args.micro_reference {
                out.add(p, micro_p.to_text());
            }
            (g, json!({ "model": "two-scale", "config": cfg }))
        }
    };
    out.add(&args.graph, graph.to_text());
    out.commit()?;
    let mut doc = doc;
    doc["vertices"] = json!(graph.vertex_count());
    doc["edges"] = json!(graph.edge_count());
    emit(
        json,
        format!("vertices = {}\nedges = {}\n", graph.vertex_count(), graph.edge_count()),
        doc,
    );
    Ok(())
}

fn detect(args: &DetectArgs, json: bool) -> Result<()> {
    let graph = load(&args.graph, Graph::parse)?;
    let trace = greedy_agglomerate(&graph)?;
    let mut out = Outputs::new();
    out.add(&args.out, trace.dendrogram.to_text());
    if let Some(p) = &args.trace {
        let mut csv = String::from("step,left,right,new_id,delta_q\n");
        for s in &trace.steps {
            writeln!(csv, "{},{},{},{},{}", s.step, s.left, s.right, s.new_id, fmt9(s.delta_q)).unwrap();
        }
        out.add(p, csv);
    }
    out.commit()?;
    let d = &trace.dendrogram;
    emit(
        json,
        format!(
            "merges = {}\nvirtual root = {}\n",
            trace.steps.len(),
            d.has_virtual_root()
        ),
        json!({ "merges": trace.steps.len(), "virtual_root": d.has_virtual_root() }),
    );
    Ok(())
}

fn cut(args: &CutArgs, json: bool) -> Result<()> {
    let loaded = Loaded::read(&args.input)?;
    let d = &loaded.dendrogram;
    let (partition, value) = match args.step {
        Some(k) => {
            let mut cuts = d.straight_cuts();
            if k >= cuts.len() {
                return Err(usage(format!(
                    "step {k} is out of range: the dendrogram has {} merges",
                    cuts.len() - 1
                )));
            }
            let p = cuts.swap_remove(k);
            let q = match loaded.model(args.input.quality) {
                Ok(model) => Some(model.partition_quality(&p)),
                Err(_) => None,
            };
            (p, q)
        }
        None => {
            let terms = loaded.model(args.input.quality)?.node_terms(d);
            let best = best_straight_cut(d, &terms);
            (best.partition, Some(best.value))
        }
    };
    let mut out = Outputs::new();
    out.add(&args.out, partition.to_text());
    out.commit()?;
    let mut text = format!("communities = {}\n", partition.community_count());
    if let Some(q) = value {
        writeln!(text, "Q = {}", fmt9(q)).unwrap();
    }
    emit(
        json,
        text,
        json!({ "communities": partition.community_count(), "quality": value }),
    );
    Ok(())
}

fn best(args: &BestArgs, json: bool) -> Result<()> {
    let loaded = Loaded::read(&args.input)?;
    let model = loaded.model(args.input.quality)?;
    let d = &loaded.dendrogram;
    let terms = model.node_terms(d);
    let result = match args.alpha {
        Some(a) => find_best_partition_at(d, &terms, a),
        None => find_best_partition(d, &terms),
    };
    let mut out = Outputs::new();
    out.add(&args.out, result.partition.to_text());
    out.commit()?;
    let label = if args.alpha.is_some() { "Q_alpha" } else { "Q" };
    emit(
        json,
        format!(
            "{label} = {}\ncommunities = {}\n",
            fmt9(result.value),
            result.partition.community_count()
        ),
        json!({
            "quality": args.input.quality.to_string(),
            "alpha": args.alpha,
            "value": result.value,
            "communities": result.partition.community_count(),
        }),
    );
    Ok(())
}

fn multiscale(args: &MultiscaleArgs, tol: Tolerances, json: bool) -> Result<()> {
    if args.out.is_none() && args.out_dir.is_none() {
        return Err(usage("nothing to do: give --alpha with --out, or --out-dir"));
    }
    let loaded = Loaded::read(&args.input)?;
    let model = loaded.model(args.input.quality)?;
    let d = &loaded.dendrogram;
    let terms = model.node_terms(d);
    let profile = find_multiscale_partitions(d, &terms, tol);
    let parts = profile.distinct_partitions();

    let mut out = Outputs::new();
    let mut text = String::new();
    let mut doc = json!({
        "quality": args.input.quality.to_string(),
        "distinct_partitions": parts.len(),
        "envelope_segments": profile.envelope().segment_count(),
    });
    writeln!(text, "distinct partitions = {}", parts.len()).unwrap();
    if let (Some(a), Some(path)) = (args.alpha, &args.out) {
        let p = profile.partition_at(a);
        let value = profile.envelope().eval(a);
        writeln!(text, "Q_alpha = {}\ncommunities = {}", fmt9(value), p.community_count()).unwrap();
        doc["alpha"] = json!(a);
        doc["value"] = json!(value);
        doc["communities"] = json!(p.community_count());
        out.add(path, p.to_text());
    }
    if let Some(dir) = &args.out_dir {
        out.add(dir.join("reordered.txt"), profile.reordered_dendrogram()?.to_text());
        let mut lifespans = String::from("node,size,alpha_min,alpha_max\n");
        for l in profile.lifespans() {
            writeln!(lifespans, "{},{},{},{}", l.node, l.size, fmt9(l.alpha_min), fmt9(l.alpha_max)).unwrap();
        }
        out.add(dir.join("lifespans.csv"), lifespans);
        let mut scales = String::from("alpha_lo,alpha_hi,communities\n");
        for (lo, hi, p) in &parts {
            writeln!(scales, "{},{},{}", fmt9(*lo), fmt9(*hi), p.community_count()).unwrap();
        }
        out.add(dir.join("scales.csv"), scales);
    }
    out.commit()?;
    emit(json, text, doc);
    Ok(())
}

fn relevance(args: &RelevanceArgs, tol: Tolerances, json: bool) -> Result<()> {
    let loaded = Loaded::read(&args.input)?;
    let model = loaded.model(args.input.quality)?;
    let d = &loaded.dendrogram;
    let terms = model.node_terms(d);
    let profile = find_multiscale_partitions(d, &terms, tol);
    let curve = relevance_curve(&profile, d.leaf_count());
    let scales = relevant_scales(&curve, args.top, args.include_trivial);

    let mut out = Outputs::new();
    let mut csv = String::from("alpha_lo,alpha_hi,A,B,C\n");
    for (iv, q) in curve.intervals().iter().zip(curve.coefficients()) {
        writeln!(csv, "{},{},{},{},{}", fmt9(iv.lo), fmt9(iv.hi), fmt9(q.a), fmt9(q.b), fmt9(q.c)).unwrap();
    }
    out.add(args.out_dir.join("relevance.csv"), csv);
    let mut text = String::new();
    let mut rows = Vec::new();
    for (rank, m) in scales.iter().enumerate() {
        let path = args.out_dir.join(format!("scale_{}.txt", rank + 1));
        out.add(&path, profile.interval_partition(m.interval).to_text());
        writeln!(
            text,
            "rank {}: alpha = {}, R = {}, communities = {}, partition = {}",
            rank + 1,
            fmt9(m.alpha),
            fmt9(m.value),
            m.community_count,
            path.display()
        )
        .unwrap();
        rows.push(json!({
            "rank": rank + 1,
            "alpha": m.alpha,
            "relevance": m.value,
            "communities": m.community_count,
            "partition": path.display().to_string(),
        }));
    }
    if scales.is_empty() {
        text.push_str("no relevant scale found\n");
    }
    out.commit()?;
    emit(json, text, json!({ "maxima": rows, "intervals": curve.intervals().len() }));
    Ok(())
}

fn compare(args: &CompareArgs, json: bool) -> Result<()> {
    let a: Partition = load(&args.a, Partition::parse)?;
    let b: Partition = load(&args.b, Partition::parse)?;
    let ari = corrected_rand(&a, &b)?;
    emit(json, format!("ARI = {}\n", fmt9(ari)), json!({ "ari": ari }));
    Ok(())
}

fn bench(args: &BenchArgs, json: bool) -> Result<()> {
    let mut spec = load(&args.spec, ExperimentSpec::parse)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let threads = match std::env::var("DENSCALE_THREADS") {
        Ok(v) => Some(
            v.parse::<usize>()
                .ok()
                .filter(|&t| t > 0)
                .with_context(|| format!("DENSCALE_THREADS='{v}' is not a positive integer"))?,
        ),
        Err(_) => None,
    };
    let report = run_experiment(&spec, threads)?;
    for (method, seconds) in report.timings() {
        eprintln!("{method}: {seconds:.3} s");
    }
    let mut out = Outputs::new();
    out.add(args.out_dir.join("report.csv"), report.to_csv());
    out.add(args.out_dir.join("summary.txt"), report.summary_text());
    out.commit()?;
    let doc = serde_json::to_value(&report).context("cannot serialize the report")?;
    emit(json, report.summary_text(), doc);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let tol = tolerances(cli.tol)?;
    match &cli.command {
        Command::Generate(a) => generate(a, cli.json),
        Command::Detect(a) => detect(a, cli.json),
        Command::Cut(a) => cut(a, cli.json),
        Command::Best(a) => best(a, cli.json),
        Command::Multiscale(a) => multiscale(a, tol, cli.json),
        Command::Relevance(a) => relevance(a, tol, cli.json),
        Command::Compare(a) => compare(a, cli.json),
        Command::Bench(a) => bench(a, cli.json),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(ToString::to_string).collect();
            eprintln!("error: {}", chain.join(": "));
            ExitCode::from(if e.is::<Usage>() { 2 } else { 1 })
        }
    }
}
