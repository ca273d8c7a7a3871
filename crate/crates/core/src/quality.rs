//! Additive quality functions and their scale decompositions.
//!
//! Every supported quality is a sum over communities of an elementary
//! function `q(C) = h(C) + l(C)`, where `h` grows with merging
//! (superadditive) and `l` shrinks (subadditive). The scale-dependent form
//! is `q_α(C) = α·h(C) + (1−α)·l(C)`, so `q_½ = q/2` and each community
//! contributes an affine function of α with slope `h − l` and intercept `l`.
//!
//! | family      | h(C)                         | l(C)                                  |
//! |-------------|------------------------------|---------------------------------------|
//! | modularity  | internal edges / m           | −(degree sum / 2m)²                   |
//! | performance | 2·internal edges / n(n−1)    | (|C|(n−|C|) − cut edges) / n(n−1)     |
//! | similarity  | −1/n                         | −σ(C)/σ_max                           |
//!
//! Integer counters (edges, degree sums, sizes) are kept exact and divided
//! once at the end.

use std::fmt;
use std::str::FromStr;

use crate::dendrogram::{Dendrogram, NodeId};
use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::partition::Partition;
use crate::similarity::{sigma, SimilarityData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QualityFamily {
    Modularity,
    Performance,
    Similarity,
}

impl FromStr for QualityFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modularity" => Ok(QualityFamily::Modularity),
            "performance" => Ok(QualityFamily::Performance),
            "similarity" => Ok(QualityFamily::Similarity),
            other => Err(Error::Config(format!("unknown quality `{other}`"))),
        }
    }
}

impl fmt::Display for QualityFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QualityFamily::Modularity => "modularity",
            QualityFamily::Performance => "performance",
            QualityFamily::Similarity => "similarity",
        })
    }
}

/// The two scale components of one community's contribution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScaleTerms {
    pub h: f64,
    pub l: f64,
}

impl ScaleTerms {
    pub fn new(h: f64, l: f64) -> Self {
        ScaleTerms { h, l }
    }

    /// `q(C)`, the fixed-scale contribution.
    pub fn total(self) -> f64 {
        self.h + self.l
    }

    /// `q_α(C) = α h + (1−α) l`.
    pub fn at(self, alpha: f64) -> f64 {
        alpha * self.h + (1.0 - alpha) * self.l
    }

    pub fn slope(self) -> f64 {
        self.h - self.l
    }

    pub fn intercept(self) -> f64 {
        self.l
    }
}

impl std::ops::Add for ScaleTerms {
    type Output = ScaleTerms;

    fn add(self, o: ScaleTerms) -> ScaleTerms {
        ScaleTerms::new(self.h + o.h, self.l + o.l)
    }
}

/// Exact counters describing one community.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CommunityStats {
    pub size: usize,
    /// Sum of degrees; `a(C) = degree_sum / 2m`.
    pub degree_sum: u64,
    /// Edges with both ends inside; `e(C) = internal_edges / m`.
    pub internal_edges: u64,
    /// `σ(C)`, only meaningful for the similarity family.
    pub sigma: f64,
}

impl CommunityStats {
    /// Stats of a disjoint union given the number of edges between the parts.
    pub fn merge(parts: &[CommunityStats], cross_edges: u64, sigma: f64) -> Self {
        CommunityStats {
            size: parts.iter().map(|p| p.size).sum(),
            degree_sum: parts.iter().map(|p| p.degree_sum).sum(),
            internal_edges: parts.iter().map(|p| p.internal_edges).sum::<u64>() + cross_edges,
            sigma,
        }
    }

    /// Edges leaving the community.
    pub fn cut_edges(&self) -> u64 {
        self.degree_sum - 2 * self.internal_edges
    }
}

/// Something that can report `(h, l)` for dendrogram nodes.
pub trait NodeScorer {
    fn terms(&self, node: NodeId) -> ScaleTerms;
}

/// Memoized scale terms for every node of one dendrogram.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTerms {
    terms: Vec<ScaleTerms>,
}

impl NodeTerms {
    pub fn new(terms: Vec<ScaleTerms>) -> Self {
        NodeTerms { terms }
    }

    pub fn as_slice(&self) -> &[ScaleTerms] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Nodes where `h` fails superadditivity or `l` fails subadditivity
    /// against the children, beyond `tol`.
    pub fn scale_violations(&self, d: &Dendrogram, tol: f64) -> Vec<NodeId> {
        d.internal_nodes()
            .filter(|&node| {
                let sum = d
                    .children(node)
                    .iter()
                    .fold(ScaleTerms::default(), |acc, &c| acc + self.terms[c]);
                let own = self.terms[node];
                own.h < sum.h - tol || own.l > sum.l + tol
            })
            .collect()
    }
}

impl NodeScorer for NodeTerms {
    fn terms(&self, node: NodeId) -> ScaleTerms {
        self.terms[node]
    }
}

#[derive(Debug, Clone, Copy)]
pub enum QualityModel<'a> {
    Modularity(&'a Graph),
    Performance(&'a Graph),
    Similarity {
        data: &'a SimilarityData,
        sigma_max: f64,
    },
}

impl<'a> QualityModel<'a> {
    pub fn modularity(graph: &'a Graph) -> Result<Self> {
        if graph.edge_count() == 0 {
            return Err(Error::Quality("modularity needs at least one edge".into()));
        }
        Ok(QualityModel::Modularity(graph))
    }

    pub fn performance(graph: &'a Graph) -> Result<Self> {
        if graph.vertex_count() < 2 {
            return Err(Error::Quality("performance needs at least two vertices".into()));
        }
        Ok(QualityModel::Performance(graph))
    }

    pub fn similarity(data: &'a SimilarityData) -> Result<Self> {
        let all: Vec<Vertex> = (0..data.vertex_count()).collect();
        let sigma_max = sigma(&all, data);
        if !(sigma_max > 0.0) {
            return Err(Error::Quality(
                "degenerate similarity data: all points coincide".into(),
            ));
        }
        Ok(QualityModel::Similarity { data, sigma_max })
    }

    /// Builds the model for `family`; similarity requires `data` covering
    /// the graph's vertices.
    pub fn for_family(
        family: QualityFamily,
        graph: &'a Graph,
        data: Option<&'a SimilarityData>,
    ) -> Result<Self> {
        match family {
            QualityFamily::Modularity => Self::modularity(graph),
            QualityFamily::Performance => Self::performance(graph),
            QualityFamily::Similarity => {
                let data = data.ok_or_else(|| {
                    Error::Config("similarity needs an embedding or a distance matrix".into())
                })?;
                if data.vertex_count() != graph.vertex_count() {
                    return Err(Error::Similarity(format!(
                        "{} similarity entries for {} vertices",
                        data.vertex_count(),
                        graph.vertex_count()
                    )));
                }
                Self::similarity(data)
            }
        }
    }

    pub fn family(&self) -> QualityFamily {
        match self {
            QualityModel::Modularity(_) => QualityFamily::Modularity,
            QualityModel::Performance(_) => QualityFamily::Performance,
            QualityModel::Similarity { .. } => QualityFamily::Similarity,
        }
    }

    pub fn vertex_count(&self) -> usize {
        match self {
            QualityModel::Modularity(g) | QualityModel::Performance(g) => g.vertex_count(),
            QualityModel::Similarity { data, .. } => data.vertex_count(),
        }
    }

    /// Counters of an arbitrary vertex set, computed from scratch.
    pub fn stats(&self, community: &[Vertex]) -> CommunityStats {
        match self {
            QualityModel::Modularity(g) | QualityModel::Performance(g) => {
                graph_stats(g, community)
            }
            QualityModel::Similarity { data, .. } => CommunityStats {
                size: community.len(),
                sigma: sigma(community, data),
                ..CommunityStats::default()
            },
        }
    }

    pub fn terms_from_stats(&self, s: &CommunityStats) -> ScaleTerms {
        match self {
            QualityModel::Modularity(g) => {
                let m = g.edge_count() as f64;
                let a = s.degree_sum as f64 / (2.0 * m);
                ScaleTerms::new(s.internal_edges as f64 / m, -(a * a))
            }
            QualityModel::Performance(g) => {
                let n = g.vertex_count() as u64;
                let pairs = (n * (n - 1)) as f64;
                let size = s.size as u64;
                let outside_non_edges = size * (n - size) - s.cut_edges();
                ScaleTerms::new(
                    (2 * s.internal_edges) as f64 / pairs,
                    outside_non_edges as f64 / pairs,
                )
            }
            QualityModel::Similarity { data, sigma_max } => ScaleTerms::new(
                -1.0 / data.vertex_count() as f64,
                -s.sigma / sigma_max,
            ),
        }
    }

    pub fn terms(&self, community: &[Vertex]) -> ScaleTerms {
        self.terms_from_stats(&self.stats(community))
    }

    /// Elementary quality `q(C)`.
    pub fn q(&self, community: &[Vertex]) -> f64 {
        self.terms(community).total()
    }

    /// `q_α(C)`.
    pub fn q_alpha(&self, community: &[Vertex], alpha: f64) -> f64 {
        self.terms(community).at(alpha)
    }

    /// `Q(P) = Σ q(C)`.
    pub fn partition_quality(&self, p: &Partition) -> f64 {
        p.communities().iter().map(|c| self.q(c)).sum()
    }

    pub fn partition_quality_at(&self, p: &Partition, alpha: f64) -> f64 {
        p.communities().iter().map(|c| self.q_alpha(c, alpha)).sum()
    }

    /// One evaluation per dendrogram node, reusing the children's counters.
    pub fn node_terms(&self, d: &Dendrogram) -> NodeTerms {
        let stats = match self {
            QualityModel::Modularity(g) | QualityModel::Performance(g) => {
                graph_node_stats(g, d)
            }
            QualityModel::Similarity { data, .. } => similarity_node_stats(data, d),
        };
        NodeTerms::new(stats.iter().map(|s| self.terms_from_stats(s)).collect())
    }
}

fn graph_stats(g: &Graph, community: &[Vertex]) -> CommunityStats {
    let mut inside = vec![false; g.vertex_count()];
    for &v in community {
        inside[v] = true;
    }
    let mut degree_sum = 0u64;
    let mut endpoints_inside = 0u64;
    for &v in community {
        degree_sum += g.degree(v) as u64;
        endpoints_inside += g.neighbors(v).iter().filter(|&&w| inside[w]).count() as u64;
    }
    CommunityStats {
        size: community.len(),
        degree_sum,
        internal_edges: endpoints_inside / 2,
        sigma: 0.0,
    }
}

/// Counters for every dendrogram node. Edges between the children of a node
/// are counted by scanning all but the largest child (small-to-large), with a
/// union-find mapping each vertex to its current top node.
fn graph_node_stats(g: &Graph, d: &Dendrogram) -> Vec<CommunityStats> {
    let n = d.leaf_count();
    let mut stats = vec![CommunityStats::default(); d.node_count()];
    for v in 0..n {
        stats[v] = CommunityStats {
            size: 1,
            degree_sum: g.degree(v) as u64,
            internal_edges: 0,
            sigma: 0.0,
        };
    }
    let mut dsu: Vec<usize> = (0..n).collect();
    let mut top: Vec<NodeId> = (0..n).collect();
    let mut mark: Vec<NodeId> = vec![usize::MAX; d.node_count()];

    fn find(dsu: &mut [usize], mut x: usize) -> usize {
        let mut root = x;
        while dsu[root] != root {
            root = dsu[root];
        }
        while dsu[x] != root {
            let next = dsu[x];
            dsu[x] = root;
            x = next;
        }
        root
    }

    for node in d.internal_nodes() {
        let kids = d.children(node);
        let big = *kids.iter().max_by_key(|&&k| (d.size(k), k)).unwrap();
        for &k in kids {
            mark[k] = node;
        }
        let (mut with_big, mut among_small) = (0u64, 0u64);
        for &k in kids.iter().filter(|&&k| k != big) {
            for &v in d.vertices(k) {
                for &w in g.neighbors(v) {
                    let r = find(&mut dsu, w);
                    let t = top[r];
                    if t == k || mark[t] != node {
                        continue;
                    }
                    if t == big {
                        with_big += 1;
                    } else {
                        among_small += 1;
                    }
                }
            }
        }
        let parts: Vec<CommunityStats> = kids.iter().map(|&k| stats[k]).collect();
        stats[node] = CommunityStats::merge(&parts, with_big + among_small / 2, 0.0);

        let anchor = find(&mut dsu, d.vertices(kids[0])[0]);
        for &k in &kids[1..] {
            let r = find(&mut dsu, d.vertices(k)[0]);
            dsu[r] = anchor;
        }
        top[anchor] = node;
    }
    stats
}

fn similarity_node_stats(data: &SimilarityData, d: &Dendrogram) -> Vec<CommunityStats> {
    let mut stats = vec![CommunityStats::default(); d.node_count()];
    for v in 0..d.leaf_count() {
        stats[v].size = 1;
    }
    match data {
        SimilarityData::Euclidean { dim, .. } => {
            // Per node: coordinate sum and Σ|x − μ|². For a union of parts
            // with sizes s_k and centroids μ_k, the overall centroid is μ and
            //   SSE = Σ_k SSE_k + Σ_k s_k |μ_k − μ|²,
            // so σ of a merge costs one centroid distance per child.
            let dim = *dim;
            let mut sums: Vec<Vec<f64>> = vec![Vec::new(); d.node_count()];
            for v in 0..d.leaf_count() {
                sums[v] = data.point(v).to_vec();
            }
            for node in d.internal_nodes() {
                let kids = d.children(node);
                let size: usize = kids.iter().map(|&k| stats[k].size).sum();
                let mut total = vec![0.0; dim];
                for &k in kids {
                    for (t, x) in total.iter_mut().zip(&sums[k]) {
                        *t += x;
                    }
                }
                let mut sse = 0.0;
                for &k in kids {
                    let sk = stats[k].size as f64;
                    let gap: f64 = sums[k]
                        .iter()
                        .zip(&total)
                        .map(|(a, t)| {
                            let diff = a / sk - t / size as f64;
                            diff * diff
                        })
                        .sum();
                    sse += stats[k].sigma + sk * gap;
                }
                stats[node] = CommunityStats {
                    size,
                    sigma: sse,
                    ..CommunityStats::default()
                };
                sums[node] = total;
            }
        }
        SimilarityData::Matrix { .. } => {
            // pair sums Σ d² over unordered pairs; cross pairs are visited once
            // at their lowest common ancestor
            let mut pair_sum = vec![0.0f64; d.node_count()];
            for node in d.internal_nodes() {
                let kids = d.children(node);
                let mut total: f64 = kids.iter().map(|&k| pair_sum[k]).sum();
                for (i, &a) in kids.iter().enumerate() {
                    for &b in &kids[i + 1..] {
                        for &u in d.vertices(a) {
                            for &v in d.vertices(b) {
                                total += data.squared_distance(u, v);
                            }
                        }
                    }
                }
                pair_sum[node] = total;
                let size = d.size(node);
                stats[node] = CommunityStats {
                    size,
                    sigma: total / size as f64,
                    ..CommunityStats::default()
                };
            }
        }
    }
    stats
}

/// `q^M(C) = e(C) − a(C)²`.
pub fn modularity_q(community: &[Vertex], g: &Graph) -> Result<f64> {
    Ok(QualityModel::modularity(g)?.q(community))
}

/// Correctly classified pairs touching `C`, over `n(n−1)`.
pub fn performance_q(community: &[Vertex], g: &Graph) -> Result<f64> {
    Ok(QualityModel::performance(g)?.q(community))
}

/// `q^S(C) = −1/n − σ(C)/σ_max` with `σ_max = σ(V)`.
pub fn similarity_q(community: &[Vertex], data: &SimilarityData) -> Result<f64> {
    Ok(QualityModel::similarity(data)?.q(community))
}

/// Expected modularity of the planted reference partition with `c` equal
/// blocks and average internal/external degrees `d_in`, `d_out`.
pub fn expected_modularity(c: usize, d_in: f64, d_out: f64) -> Result<f64> {
    if c < 2 || d_in < 0.0 || d_out < 0.0 || d_in + d_out <= 0.0 {
        return Err(Error::Config(format!(
            "need c >= 2 and nonnegative degrees with positive sum (c={c}, d_in={d_in}, d_out={d_out})"
        )));
    }
    Ok(d_in / (d_in + d_out) - 1.0 / c as f64)
}

/// The `d_out` for which the planted reference has expected modularity
/// `target`.
pub fn d_out_for_expected_modularity(c: usize, d_in: f64, target: f64) -> Result<f64> {
    let share = target + 1.0 / c as f64;
    if c < 2 || d_in <= 0.0 || !(share > 0.0 && share <= 1.0) {
        return Err(Error::Config(format!(
            "no d_out reaches expected modularity {target} with c={c}, d_in={d_in}"
        )));
    }
    Ok(d_in / share - d_in)
}

/// Whole-partition modularity via the pairwise form
/// `(1/2m) Σ_ij [A_ij − k_i k_j / 2m] δ(c_i, c_j)`.
pub fn modularity(p: &Partition, g: &Graph) -> f64 {
    let two_m = 2.0 * g.edge_count() as f64;
    let n = g.vertex_count();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if p.community_of(i) == p.community_of(j) {
                let a = if g.has_edge(i, j) { 1.0 } else { 0.0 };
                total += a - (g.degree(i) * g.degree(j)) as f64 / two_m;
            }
        }
    }
    total / two_m
}

/// Exact modularity as a numerator over `4m²`:
/// `4m Σ internal(C) − Σ degree_sum(C)²`.
pub fn modularity_numerator(p: &Partition, g: &Graph) -> i128 {
    let m = g.edge_count() as i128;
    let mut internal = 0i128;
    for &(u, v) in g.edges() {
        if p.community_of(u) == p.community_of(v) {
            internal += 1;
        }
    }
    let mut sums = vec![0i128; p.community_count()];
    for v in 0..g.vertex_count() {
        sums[p.community_of(v)] += g.degree(v) as i128;
    }
    4 * m * internal - sums.iter().map(|s| s * s).sum::<i128>()
}

/// Whole-partition performance by direct pair classification.
pub fn performance(p: &Partition, g: &Graph) -> f64 {
    let n = g.vertex_count();
    let mut correct = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            let same = p.community_of(i) == p.community_of(j);
            if same == g.has_edge(i, j) {
                correct += 1;
            }
        }
    }
    correct as f64 / (n * (n - 1) / 2) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dendrogram::random_dendrogram;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn barbell() -> Graph {
        Graph::parse("0 1\n0 2\n1 2\n3 4\n3 5\n4 5\n2 3").unwrap()
    }

    fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        if edges.is_empty() {
            edges.push((0, 1));
        }
        Graph::from_edges(n, &edges).unwrap()
    }

    fn random_partition(rng: &mut ChaCha8Rng, n: usize) -> Partition {
        let k = rng.gen_range(1..=n);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        Partition::from_assignment(&labels)
    }

    #[test]
    fn modularity_examples() {
        let g = barbell();
        assert!((modularity_q(&[0, 1, 2], &g).unwrap() - 5.0 / 28.0).abs() < 1e-12);
        assert!(modularity_q(&[0, 1, 2, 3, 4, 5], &g).unwrap().abs() < 1e-15);
        let singles: f64 = (0..6).map(|v| modularity_q(&[v], &g).unwrap()).sum();
        assert!((singles + 17.0 / 98.0).abs() < 1e-12);
        let empty = Graph::from_edges(3, &[]).unwrap();
        assert!(modularity_q(&[0], &empty).is_err());
    }

    #[test]
    fn performance_examples() {
        let g = barbell();
        let halves = performance_q(&[0, 1, 2], &g).unwrap() + performance_q(&[3, 4, 5], &g).unwrap();
        assert!((halves - 14.0 / 15.0).abs() < 1e-12);
        let singles: f64 = (0..6).map(|v| performance_q(&[v], &g).unwrap()).sum();
        assert!((singles - 8.0 / 15.0).abs() < 1e-12);
        let k4 = Graph::parse("0 1\n0 2\n0 3\n1 2\n1 3\n2 3").unwrap();
        assert!((performance_q(&[0, 1, 2, 3], &k4).unwrap() - 1.0).abs() < 1e-15);
        let lone = Graph::from_edges(1, &[]).unwrap();
        assert!(performance_q(&[0], &lone).is_err());
    }

    #[test]
    fn similarity_examples() {
        let pts: Vec<Vec<f64>> = [0.0, 1.0, 2.0, 9.0].iter().map(|&x| vec![x]).collect();
        let data = SimilarityData::from_coordinates(&pts).unwrap();
        assert!((similarity_q(&[0, 1, 2, 3], &data).unwrap() - (-0.25 - 1.0)).abs() < 1e-12);
        assert_eq!(similarity_q(&[2], &data).unwrap(), -0.25);
        // σ_max by brute force over the six pairs of V
        let mut pairs = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                pairs += (pts[i][0] - pts[j][0]) * (pts[i][0] - pts[j][0]);
            }
        }
        let sigma_max = pairs / 4.0;
        let expected = -0.25 - 2.0 / sigma_max;
        assert!((similarity_q(&[0, 1, 2], &data).unwrap() - expected).abs() < 1e-12);

        let same = SimilarityData::from_coordinates(&[vec![1.0], vec![1.0]]).unwrap();
        assert!(similarity_q(&[0], &same).is_err());
    }

    #[test]
    fn scale_form() {
        let g = barbell();
        let model = QualityModel::modularity(&g).unwrap();
        let c = [0, 1, 2];
        assert_eq!(model.q_alpha(&c, 0.5), 0.5 * model.q(&c));
        assert!((model.q_alpha(&c, 0.0) + 0.25).abs() < 1e-15);
        let all: Vec<usize> = (0..6).collect();
        for alpha in [0.0, 0.3, 1.0] {
            assert!((model.q_alpha(&all, alpha) - (2.0 * alpha - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn expected_modularity_examples() {
        assert!((expected_modularity(4, 6.0, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((expected_modularity(2, 5.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((expected_modularity(10, 3.0, 3.0).unwrap() - 0.4).abs() < 1e-15);
        assert!(expected_modularity(1, 3.0, 3.0).is_err());
        let d_out = d_out_for_expected_modularity(4, 6.0, 0.5).unwrap();
        assert!((d_out - 2.0).abs() < 1e-12);
    }

    #[test]
    fn additivity_against_whole_partition_formulas() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(2..=14);
            let density = rng.gen_range(0.1..0.7);
            let g = random_graph(&mut rng, n, density);
            let p = random_partition(&mut rng, n);
            let m = QualityModel::modularity(&g).unwrap();
            let qm = m.partition_quality(&p);
            assert!((qm - modularity(&p, &g)).abs() < 1e-12);
            let exact = modularity_numerator(&p, &g) as f64
                / (4.0 * (g.edge_count() * g.edge_count()) as f64);
            assert!((qm - exact).abs() < 1e-12);
            assert!((-1.0..=1.0).contains(&qm));

            let perf = QualityModel::performance(&g).unwrap().partition_quality(&p);
            assert!((perf - performance(&p, &g)).abs() < 1e-12);
            assert!((-1e-12..=1.0 + 1e-12).contains(&perf));

            let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen(), rng.gen()]).collect();
            let data = SimilarityData::from_coordinates(&pts).unwrap();
            let s = QualityModel::similarity(&data).unwrap();
            let qs = s.partition_quality(&p);
            let direct = -(p.community_count() as f64) / n as f64
                - p.communities().iter().map(|c| sigma(c, &data)).sum::<f64>()
                    / sigma(&(0..n).collect::<Vec<_>>(), &data);
            assert!((qs - direct).abs() < 1e-12);
            assert!((-2.0 - 1e-12..=0.0).contains(&qs));
        }
    }

    #[test]
    fn scale_terms_super_and_subadditive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut similarity_failures = 0;
        for _ in 0..1000 {
            let n = rng.gen_range(3..=12);
            let g = random_graph(&mut rng, n, 0.4);
            let mut perm: Vec<usize> = (0..n).collect();
            rand::seq::SliceRandom::shuffle(&mut perm[..], &mut rng);
            let cut = rng.gen_range(1..n);
            let end = rng.gen_range(cut + 1..=n);
            let (c1, c2) = (&perm[..cut], &perm[cut..end]);
            let union: Vec<usize> = perm[..end].to_vec();
            for model in [
                QualityModel::modularity(&g).unwrap(),
                QualityModel::performance(&g).unwrap(),
            ] {
                let (a, b, u) = (model.terms(c1), model.terms(c2), model.terms(&union));
                assert!(u.h >= a.h + b.h - 1e-12);
                assert!(u.l <= a.l + b.l + 1e-12);
            }
            let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen(), rng.gen()]).collect();
            let data = SimilarityData::from_coordinates(&pts).unwrap();
            if sigma(&union, &data) < sigma(c1, &data) + sigma(c2, &data) - 1e-12 {
                similarity_failures += 1;
            }
        }
        // reported, not asserted; for Euclidean data this is Ward's identity
        assert_eq!(similarity_failures, 0, "σ superadditivity failures");
    }

    #[test]
    fn merge_identities_on_counters() {
        let g = barbell();
        let model = QualityModel::modularity(&g).unwrap();
        let (a, b) = (model.stats(&[0, 1]), model.stats(&[2, 3]));
        let u = model.stats(&[0, 1, 2, 3]);
        assert_eq!(u.degree_sum, a.degree_sum + b.degree_sum);
        // cross edges 0-2, 1-2
        assert_eq!(u.internal_edges, a.internal_edges + b.internal_edges + 2);
    }

    #[test]
    fn node_terms_match_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = rng.gen_range(1..=16);
            let g = random_graph(&mut rng, n.max(2), 0.3);
            let n = g.vertex_count();
            let d = random_dendrogram(n, rng.gen_bool(0.5), &mut rng);
            let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen(), rng.gen(), rng.gen()]).collect();
            let euclid = SimilarityData::from_coordinates(&pts).unwrap();
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| euclid.distance(i, j)).collect())
                .collect();
            let matrix = SimilarityData::from_matrix(&rows).unwrap();
            let models = [
                QualityModel::modularity(&g).unwrap(),
                QualityModel::performance(&g).unwrap(),
                QualityModel::similarity(&euclid).unwrap(),
                QualityModel::similarity(&matrix).unwrap(),
            ];
            for model in models {
                let terms = model.node_terms(&d);
                for node in 0..d.node_count() {
                    let direct = model.terms(d.vertices(node));
                    let got = terms.terms(node);
                    assert!((direct.h - got.h).abs() < 1e-12, "{:?} h", model.family());
                    assert!((direct.l - got.l).abs() < 1e-12, "{:?} l", model.family());
                }
                if model.family() != QualityFamily::Similarity {
                    assert!(terms.scale_violations(&d, 1e-12).is_empty());
                }
            }
        }
    }
}
