//! Synthetic benchmarks: planted-partition generators, the corrected Rand
//! index and the method comparison harness.
//!
//! Every replicate draws from its own ChaCha8 stream seeded with
//! `seed + replicate`, so reports are reproducible byte for byte and do not
//! depend on how replicates are scheduled across threads.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::detect::greedy_agglomerate;
use crate::dendrogram::Dendrogram;
use crate::envelope::Tolerances;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::multiscale::find_multiscale_partitions;
use crate::optimize::{best_straight_cut, find_best_partition};
use crate::partition::Partition;
use crate::quality::{d_out_for_expected_modularity, modularity, modularity_numerator, QualityModel};
use crate::relevance::{relevance_curve, relevant_scales};
use crate::similarity::SimilarityData;

fn probability(name: &str, p: f64) -> Result<f64> {
    if p.is_finite() && (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::Config(format!("derived probability {name} = {p} is outside [0, 1]")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlantedConfig {
    pub n: usize,
    pub c: usize,
    pub d_in: f64,
    pub d_out: f64,
    pub seed: u64,
}

impl PlantedConfig {
    pub fn block_size(&self) -> usize {
        self.n / self.c
    }

    /// `(p_in, p_out)`, validated.
    pub fn probabilities(&self) -> Result<(f64, f64)> {
        if self.c == 0 || self.n % self.c != 0 || self.n < 2 {
            return Err(Error::Config(format!(
                "{} vertices cannot be split into {} equal blocks",
                self.n, self.c
            )));
        }
        let s = self.block_size();
        let p_in = if s > 1 { self.d_in / (s - 1) as f64 } else { 0.0 };
        let p_out = if self.n > s { self.d_out / (self.n - s) as f64 } else { 0.0 };
        Ok((probability("p_in", p_in)?, probability("p_out", p_out)?))
    }

    pub fn reference(&self) -> Partition {
        let s = self.block_size();
        Partition::from_assignment(&(0..self.n).map(|v| v / s).collect::<Vec<_>>())
    }
}

/// Planted partition graph with `c` equal consecutive blocks.
pub fn generate_planted(cfg: &PlantedConfig) -> Result<(Graph, Partition)> {
    let (p_in, p_out) = cfg.probabilities()?;
    let s = cfg.block_size();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut edges = Vec::new();
    for u in 0..cfg.n {
        for v in u + 1..cfg.n {
            let p = if u / s == v / s { p_in } else { p_out };
            if rng.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Ok((Graph::from_edges(cfg.n, &edges)?, cfg.reference()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoScaleConfig {
    pub n: usize,
    pub macro_count: usize,
    /// Micro blocks per macro block.
    pub micro_count: usize,
    pub d_in_micro: f64,
    pub d_in_macro: f64,
    pub d_out: f64,
    pub seed: u64,
}

impl TwoScaleConfig {
    pub fn micro_size(&self) -> usize {
        self.n / (self.macro_count * self.micro_count)
    }

    pub fn macro_size(&self) -> usize {
        self.n / self.macro_count
    }

    /// `(p_micro, p_macro, p_out)`, validated.
    pub fn probabilities(&self) -> Result<(f64, f64, f64)> {
        let blocks = self.macro_count * self.micro_count;
        if blocks == 0 || self.n % blocks != 0 || self.n < 2 {
            return Err(Error::Config(format!(
                "{} vertices cannot be split into {}x{} equal blocks",
                self.n, self.macro_count, self.micro_count
            )));
        }
        let (sm, sb) = (self.micro_size(), self.macro_size());
        let ratio = |d: f64, pairs: usize| if pairs > 0 { d / pairs as f64 } else { 0.0 };
        Ok((
            probability("p_micro", ratio(self.d_in_micro, sm - 1))?,
            probability("p_macro", ratio(self.d_in_macro, sb - sm))?,
            probability("p_out", ratio(self.d_out, self.n - sb))?,
        ))
    }

    pub fn macro_reference(&self) -> Partition {
        let s = self.macro_size();
        Partition::from_assignment(&(0..self.n).map(|v| v / s).collect::<Vec<_>>())
    }

    pub fn micro_reference(&self) -> Partition {
        let s = self.micro_size();
        Partition::from_assignment(&(0..self.n).map(|v| v / s).collect::<Vec<_>>())
    }
}

/// Two nested levels of planted blocks. Returns the graph with the macro and
/// micro references.
pub fn generate_two_scale(cfg: &TwoScaleConfig) -> Result<(Graph, Partition, Partition)> {
    let (p_micro, p_macro, p_out) = cfg.probabilities()?;
    let (sm, sb) = (cfg.micro_size(), cfg.macro_size());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut edges = Vec::new();
    for u in 0..cfg.n {
        for v in u + 1..cfg.n {
            let p = if u / sm == v / sm {
                p_micro
            } else if u / sb == v / sb {
                p_macro
            } else {
                p_out
            };
            if rng.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Ok((
        Graph::from_edges(cfg.n, &edges)?,
        cfg.macro_reference(),
        cfg.micro_reference(),
    ))
}

fn pairs(x: u64) -> i128 {
    let x = x as i128;
    x * (x - 1) / 2
}

/// Hubert–Arabie adjusted Rand index. When the chance correction is
/// undefined (both partitions trivial) the result is 1 for equal partitions
/// and 0 otherwise.
pub fn corrected_rand(p1: &Partition, p2: &Partition) -> Result<f64> {
    let n = p1.vertex_count();
    if n != p2.vertex_count() {
        return Err(Error::Partition(format!(
            "partitions cover {} and {} vertices",
            n,
            p2.vertex_count()
        )));
    }
    if n < 2 {
        return Err(Error::Partition("the Rand index needs at least two vertices".into()));
    }
    let mut table = std::collections::HashMap::new();
    for v in 0..n {
        *table.entry((p1.community_of(v), p2.community_of(v))).or_insert(0u64) += 1;
    }
    let sum_ij: i128 = table.values().map(|&x| pairs(x)).sum();
    let sum_a: i128 = p1.communities().iter().map(|c| pairs(c.len() as u64)).sum();
    let sum_b: i128 = p2.communities().iter().map(|c| pairs(c.len() as u64)).sum();
    let total = pairs(n as u64);
    // (Σnij − ΣaΣb/N) / (½(Σa+Σb) − ΣaΣb/N), cleared of fractions
    let num = 2 * total * sum_ij - 2 * sum_a * sum_b;
    let den = total * (sum_a + sum_b) - 2 * sum_a * sum_b;
    if den == 0 {
        return Ok(if p1 == p2 { 1.0 } else { 0.0 });
    }
    Ok(num as f64 / den as f64)
}

/// Vertex features for the similarity methods: row `v` of `A + I` divided by
/// `deg(v) + 1`, so vertices sharing neighbourhoods lie close together.
pub fn neighborhood_embedding(g: &Graph) -> Result<SimilarityData> {
    let n = g.vertex_count();
    let points: Vec<Vec<f64>> = (0..n)
        .map(|v| {
            let mut row = vec![0.0; n];
            let w = 1.0 / (g.degree(v) + 1) as f64;
            row[v] = w;
            for &u in g.neighbors(v) {
                row[u] = w;
            }
            row
        })
        .collect();
    SimilarityData::from_coordinates(&points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Method {
    CM,
    BM,
    MM,
    BP,
    MP,
    BS,
    MS,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::CM,
        Method::BM,
        Method::MM,
        Method::BP,
        Method::MP,
        Method::BS,
        Method::MS,
    ];

    fn is_multiscale(self) -> bool {
        matches!(self, Method::MM | Method::MP | Method::MS)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown method '{}'", s.trim())))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Generator {
    Planted {
        n: usize,
        c: usize,
        d_in: f64,
        d_out: f64,
    },
    TwoScale {
        n: usize,
        macro_count: usize,
        micro_count: usize,
        d_in_micro: f64,
        d_in_macro: f64,
        d_out: f64,
    },
}

/// Experiment description, read from `key = value` lines:
///
/// ```text
/// generator = planted      # or two-scale
/// n = 400
/// c = 8
/// d_in = 6
/// q_exp = 0.4              # or d_out = ...
/// replicates = 20
/// seed = 1
/// methods = CM, BM, MM
/// scales = 1               # relevance maxima reported per multi-scale method
/// ```
///
/// Two-scale keys: `macro`, `micro`, `d_in_micro`, `d_in_macro`, `d_out`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub generator: Generator,
    pub replicates: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub scales: usize,
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = std::collections::BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected key = value, got '{line}'")))?;
            if kv.insert(k.trim().to_string(), (i + 1, v.trim().to_string())).is_some() {
                return Err(Error::parse(i + 1, format!("duplicate key '{}'", k.trim())));
            }
        }
        let take = |kv: &mut std::collections::BTreeMap<String, (usize, String)>, key: &str| {
            kv.remove(key)
        };
        fn num<T: FromStr>(entry: Option<(usize, String)>, key: &str, default: Option<T>) -> Result<T> {
            match entry {
                Some((line, v)) => v
                    .parse()
                    .map_err(|_| Error::parse(line, format!("invalid value '{v}' for {key}"))),
                None => default.ok_or_else(|| Error::Config(format!("missing key '{key}'"))),
            }
        }

        let kind = take(&mut kv, "generator").map(|(_, v)| v).unwrap_or_else(|| "planted".into());
        let generator = match kind.as_str() {
            "planted" => {
                let n = num(take(&mut kv, "n"), "n", None)?;
                let c = num(take(&mut kv, "c"), "c", None)?;
                let d_in = num(take(&mut kv, "d_in"), "d_in", None)?;
                let d_out = match (take(&mut kv, "d_out"), take(&mut kv, "q_exp")) {
                    (Some(_), Some((line, _))) => {
                        return Err(Error::parse(line, "give either d_out or q_exp, not both"))
                    }
                    (Some(entry), None) => num(Some(entry), "d_out", None)?,
                    (None, Some(entry)) => {
                        let target: f64 = num(Some(entry), "q_exp", None)?;
                        d_out_for_expected_modularity(c, d_in, target)?
                    }
                    (None, None) => return Err(Error::Config("missing key 'd_out' (or 'q_exp')".into())),
                };
                Generator::Planted { n, c, d_in, d_out }
            }
            "two-scale" => Generator::TwoScale {
                n: num(take(&mut kv, "n"), "n", None)?,
                macro_count: num(take(&mut kv, "macro"), "macro", Some(10))?,
                micro_count: num(take(&mut kv, "micro"), "micro", Some(10))?,
                d_in_micro: num(take(&mut kv, "d_in_micro"), "d_in_micro", None)?,
                d_in_macro: num(take(&mut kv, "d_in_macro"), "d_in_macro", None)?,
                d_out: num(take(&mut kv, "d_out"), "d_out", None)?,
            },
            other => return Err(Error::Config(format!("unknown generator '{other}'"))),
        };
        let default_scales = match generator {
            Generator::Planted { .. } => 1,
            Generator::TwoScale { .. } => 2,
        };
        let replicates = num(take(&mut kv, "replicates"), "replicates", Some(20))?;
        let seed = num(take(&mut kv, "seed"), "seed", Some(0))?;
        let scales = num(take(&mut kv, "scales"), "scales", Some(default_scales))?;
        let methods = match take(&mut kv, "methods") {
            Some((_, v)) => v.split(',').map(str::parse).collect::<Result<Vec<Method>>>()?,
            None => vec![Method::CM, Method::BM, Method::MM],
        };
        if let Some((key, (line, _))) = kv.into_iter().next() {
            return Err(Error::parse(line, format!("unknown key '{key}'")));
        }
        if methods.is_empty() || replicates == 0 {
            return Err(Error::Config("an experiment needs methods and at least one replicate".into()));
        }
        let spec = ExperimentSpec {
            generator,
            replicates,
            seed,
            methods,
            scales,
        };
        spec.instance(0)?;
        Ok(spec)
    }

    /// The graph and named reference partitions of replicate `r`.
    pub fn instance(&self, r: usize) -> Result<(Graph, Vec<(String, Partition)>)> {
        let seed = self.seed.wrapping_add(r as u64);
        match self.generator {
            Generator::Planted { n, c, d_in, d_out } => {
                let (g, p) = generate_planted(&PlantedConfig { n, c, d_in, d_out, seed })?;
                Ok((g, vec![("reference".into(), p)]))
            }
            Generator::TwoScale {
                n,
                macro_count,
                micro_count,
                d_in_micro,
                d_in_macro,
                d_out,
            } => {
                let (g, macro_p, micro_p) = generate_two_scale(&TwoScaleConfig {
                    n,
                    macro_count,
                    micro_count,
                    d_in_micro,
                    d_in_macro,
                    d_out,
                    seed,
                })?;
                Ok((g, vec![("macro".into(), macro_p), ("micro".into(), micro_p)]))
            }
        }
    }
}

/// One partition found by one method on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodOutcome {
    pub replicate: usize,
    pub method: Method,
    /// 1 for single-answer methods; relevance rank for multi-scale ones.
    pub rank: usize,
    pub alpha: Option<f64>,
    pub communities: usize,
    pub modularity: f64,
    /// Adjusted Rand index against each reference, in reference order.
    pub ari: Vec<f64>,
    #[serde(skip)]
    pub partition: Partition,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateReport {
    pub replicate: usize,
    pub seed: u64,
    pub edges: usize,
    pub reference_modularity: Vec<f64>,
    pub outcomes: Vec<MethodOutcome>,
    /// Whether BM reached at least CM's modularity (exact integer check);
    /// `None` unless both ran.
    pub dominance: Option<bool>,
    #[serde(skip)]
    pub seconds: Vec<(Method, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub rank: usize,
    pub runs: usize,
    pub mean_modularity: f64,
    pub mean_communities: f64,
    pub ari_mean: [f64; 2],
    pub ari_stddev: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub references: Vec<String>,
    pub replicates: Vec<ReplicateReport>,
    pub summary: Vec<MethodSummary>,
    pub mean_reference_modularity: Vec<f64>,
    pub dominance_violations: usize,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
    (mean, var.sqrt())
}

struct Scored<'a> {
    graph: &'a Graph,
    references: &'a [(String, Partition)],
}

impl Scored<'_> {
    fn outcome(&self, r: usize, method: Method, rank: usize, alpha: Option<f64>, p: Partition) -> Result<MethodOutcome> {
        let ari = self
            .references
            .iter()
            .map(|(_, reference)| corrected_rand(&p, reference))
            .collect::<Result<Vec<f64>>>()?;
        Ok(MethodOutcome {
            replicate: r,
            method,
            rank,
            alpha,
            communities: p.community_count(),
            modularity: modularity(&p, self.graph),
            ari,
            partition: p,
        })
    }
}

fn multiscale_outcomes(
    scored: &Scored<'_>,
    r: usize,
    method: Method,
    model: &QualityModel<'_>,
    d: &Dendrogram,
    scales: usize,
) -> Result<Vec<MethodOutcome>> {
    let terms = model.node_terms(d);
    let profile = find_multiscale_partitions(d, &terms, Tolerances::default());
    let curve = relevance_curve(&profile, d.leaf_count());
    let mut maxima = relevant_scales(&curve, scales, false);
    if maxima.is_empty() {
        warn!("replicate {r}: {method} found no non-trivial relevant scale");
        maxima = relevant_scales(&curve, scales, true);
    }
    maxima
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let p = profile.interval_partition(m.interval);
            scored.outcome(r, method, k + 1, Some(m.alpha), p)
        })
        .collect()
}

fn run_replicate(spec: &ExperimentSpec, r: usize) -> Result<ReplicateReport> {
    let (graph, references) = spec.instance(r)?;
    let trace = greedy_agglomerate(&graph)?;
    let d = &trace.dendrogram;
    let scored = Scored {
        graph: &graph,
        references: &references,
    };
    let needs = |ms: &[Method]| spec.methods.iter().any(|m| ms.contains(m));
    let modularity_model = QualityModel::modularity(&graph)?;
    let performance_model = if needs(&[Method::BP, Method::MP]) {
        Some(QualityModel::performance(&graph)?)
    } else {
        None
    };
    let embedding = if needs(&[Method::BS, Method::MS]) {
        Some(neighborhood_embedding(&graph)?)
    } else {
        None
    };
    let similarity_model = embedding.as_ref().map(QualityModel::similarity).transpose()?;

    let mut outcomes = Vec::new();
    let mut seconds = Vec::new();
    let mut cm_num = None;
    let mut bm_num = None;
    for &method in &spec.methods {
        let start = Instant::now();
        let model = match method {
            Method::CM | Method::BM | Method::MM => &modularity_model,
            Method::BP | Method::MP => performance_model.as_ref().expect("built above"),
            Method::BS | Method::MS => similarity_model.as_ref().expect("built above"),
        };
        if method.is_multiscale() {
            outcomes.extend(multiscale_outcomes(&scored, r, method, model, d, spec.scales)?);
        } else {
            let terms = model.node_terms(d);
            let best = if method == Method::CM {
                best_straight_cut(d, &terms)
            } else {
                find_best_partition(d, &terms)
            };
            let num = modularity_numerator(&best.partition, &graph);
            match method {
                Method::CM => cm_num = Some(num),
                Method::BM => bm_num = Some(num),
                _ => {}
            }
            outcomes.push(scored.outcome(r, method, 1, None, best.partition)?);
        }
        seconds.push((method, start.elapsed().as_secs_f64()));
    }
    let dominance = cm_num.zip(bm_num).map(|(cm, bm)| bm >= cm);
    Ok(ReplicateReport {
        replicate: r,
        seed: spec.seed.wrapping_add(r as u64),
        edges: graph.edge_count(),
        reference_modularity: references.iter().map(|(_, p)| modularity(p, &graph)).collect(),
        outcomes,
        dominance,
        seconds,
    })
}

/// Runs every replicate (in parallel, on at most `threads` threads when
/// given) and aggregates in replicate order.
pub fn run_experiment(spec: &ExperimentSpec, threads: Option<usize>) -> Result<ExperimentReport> {
    let run = || {
        (0..spec.replicates)
            .into_par_iter()
            .map(|r| run_replicate(spec, r))
            .collect::<Result<Vec<_>>>()
    };
    let replicates = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    let (_, references) = spec.instance(0)?;
    let references: Vec<String> = references.into_iter().map(|(name, _)| name).collect();

    let mut keys: Vec<(Method, usize)> = replicates
        .iter()
        .flat_map(|rep| rep.outcomes.iter().map(|o| (o.method, o.rank)))
        .collect();
    keys.sort_by_key(|&(m, rank)| (spec.methods.iter().position(|&x| x == m), rank));
    keys.dedup();
    let summary = keys
        .into_iter()
        .map(|(method, rank)| {
            let rows: Vec<&MethodOutcome> = replicates
                .iter()
                .flat_map(|rep| rep.outcomes.iter())
                .filter(|o| o.method == method && o.rank == rank)
                .collect();
            let mut ari_mean = [f64::NAN; 2];
            let mut ari_stddev = [f64::NAN; 2];
            for k in 0..references.len().min(2) {
                let xs: Vec<f64> = rows.iter().map(|o| o.ari[k]).collect();
                (ari_mean[k], ari_stddev[k]) = mean_std(&xs);
            }
            let q: Vec<f64> = rows.iter().map(|o| o.modularity).collect();
            let c: Vec<f64> = rows.iter().map(|o| o.communities as f64).collect();
            MethodSummary {
                method,
                rank,
                runs: rows.len(),
                mean_modularity: mean_std(&q).0,
                mean_communities: mean_std(&c).0,
                ari_mean,
                ari_stddev,
            }
        })
        .collect();
    let mean_reference_modularity = (0..references.len())
        .map(|k| {
            let xs: Vec<f64> = replicates.iter().map(|r| r.reference_modularity[k]).collect();
            mean_std(&xs).0
        })
        .collect();
    let dominance_violations = replicates.iter().filter(|r| r.dominance == Some(false)).count();
    if dominance_violations > 0 {
        warn!("{dominance_violations} replicates where BM fell below CM");
    }
    info!("experiment finished: {} replicates", replicates.len());
    Ok(ExperimentReport {
        spec: spec.clone(),
        references,
        replicates,
        summary,
        mean_reference_modularity,
        dominance_violations,
    })
}

fn fmt9(x: f64) -> String {
    format!("{x:.9}")
}

impl ExperimentReport {
    /// One row per replicate, method and rank. Timings are left out so the
    /// file is reproducible.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("replicate,seed,method,rank,alpha,communities,modularity");
        for name in &self.references {
            write!(out, ",ari_{name}").unwrap();
        }
        out.push('\n');
        for rep in &self.replicates {
            for o in &rep.outcomes {
                write!(
                    out,
                    "{},{},{},{},{},{},{}",
                    rep.replicate,
                    rep.seed,
                    o.method,
                    o.rank,
                    o.alpha.map(fmt9).unwrap_or_default(),
                    o.communities,
                    fmt9(o.modularity)
                )
                .unwrap();
                for a in &o.ari {
                    write!(out, ",{}", fmt9(*a)).unwrap();
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "replicates = {}", self.replicates.len()).unwrap();
        for (name, q) in self.references.iter().zip(&self.mean_reference_modularity) {
            writeln!(out, "reference {name}: mean Q = {}", fmt9(*q)).unwrap();
        }
        for s in &self.summary {
            write!(
                out,
                "{} rank {}: runs = {}, mean Q = {}, mean communities = {}",
                s.method,
                s.rank,
                s.runs,
                fmt9(s.mean_modularity),
                fmt9(s.mean_communities)
            )
            .unwrap();
            for (k, name) in self.references.iter().enumerate().take(2) {
                write!(
                    out,
                    ", ARI {name} = {} ± {}",
                    fmt9(s.ari_mean[k]),
                    fmt9(s.ari_stddev[k])
                )
                .unwrap();
            }
            out.push('\n');
        }
        writeln!(out, "dominance violations = {}", self.dominance_violations).unwrap();
        out
    }

    /// Wall-clock seconds per method summed over replicates.
    pub fn timings(&self) -> Vec<(Method, f64)> {
        self.spec
            .methods
            .iter()
            .map(|&m| {
                let total = self
                    .replicates
                    .iter()
                    .flat_map(|r| r.seconds.iter())
                    .filter(|(x, _)| *x == m)
                    .map(|(_, s)| s)
                    .sum();
                (m, total)
            })
            .collect()
    }
}
