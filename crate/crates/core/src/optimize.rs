//! Fixed-scale optimization over dendrogram cuts.
//!
//! [`find_best_partition`] maximizes an additive quality over every cut of
//! the tree in one bottom-up pass: a node is kept as a single community only
//! when its own value strictly beats the best it can do by splitting into its
//! children's optimal cuts. [`best_straight_cut`] is the classical baseline
//! that only looks at prefixes of the merge sequence.

use crate::dendrogram::{Cut, Dendrogram, NodeId};
use crate::partition::Partition;
use crate::quality::NodeScorer;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Kept,
    Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestPartitionResult {
    pub cut: Cut,
    pub partition: Partition,
    /// `Q(P)` for the returned partition.
    pub value: f64,
    /// Per node: kept as a whole or split. `None` for nodes below the chosen
    /// cut in the straight-cut baseline.
    pub decisions: Vec<Option<Decision>>,
}

/// Maximizes `Q = Σ q(C)` over all cuts, with `q = h + l`.
pub fn find_best_partition<S: NodeScorer>(d: &Dendrogram, scorer: &S) -> BestPartitionResult {
    best_cut_by(d, |node| scorer.terms(node).total())
}

/// Maximizes `Q_α = Σ q_α(C)` over all cuts.
pub fn find_best_partition_at<S: NodeScorer>(
    d: &Dendrogram,
    scorer: &S,
    alpha: f64,
) -> BestPartitionResult {
    best_cut_by(d, |node| scorer.terms(node).at(alpha))
}

/// Relative margin below which keeping a node and splitting it count as a
/// tie (and the split wins). Matches the envelope's crossing tolerance, so
/// rounding noise cannot make the two optimizers disagree.
pub const TIE_TOLERANCE: f64 = 1e-12;

fn strictly_better(own: f64, split: f64) -> bool {
    own - split > TIE_TOLERANCE * (1.0 + own.abs() + split.abs())
}

/// Post-order maximization with one `value` call per node. Node ids grow in
/// creation order, so a plain ascending scan visits children first.
pub fn best_cut_by(d: &Dendrogram, mut value: impl FnMut(NodeId) -> f64) -> BestPartitionResult {
    let mut best = vec![0.0f64; d.node_count()];
    let mut decisions = vec![None; d.node_count()];
    for node in 0..d.node_count() {
        let own = value(node);
        let kids = d.children(node);
        if kids.is_empty() {
            best[node] = own;
            decisions[node] = Some(Decision::Kept);
            continue;
        }
        let split: f64 = kids.iter().map(|&c| best[c]).sum();
        if strictly_better(own, split) {
            best[node] = own;
            decisions[node] = Some(Decision::Kept);
        } else {
            best[node] = split;
            decisions[node] = Some(Decision::Split);
        }
    }
    let mut cut = Vec::new();
    let mut stack = vec![d.root()];
    while let Some(node) = stack.pop() {
        match decisions[node] {
            Some(Decision::Kept) => cut.push(node),
            _ => stack.extend_from_slice(d.children(node)),
        }
    }
    cut.sort_unstable();
    let cut = Cut(cut);
    BestPartitionResult {
        partition: cut.to_partition(d),
        cut,
        value: best[d.root()],
        decisions,
    }
}

/// Best of the straight cuts `P_0 … P_c`. Ties go to the cut with fewer
/// communities (i.e. the later step).
pub fn best_straight_cut<S: NodeScorer>(d: &Dendrogram, scorer: &S) -> BestPartitionResult {
    let q: Vec<f64> = (0..d.node_count())
        .map(|node| scorer.terms(node).total())
        .collect();
    let mut running: f64 = q[..d.leaf_count()].iter().sum();
    let (mut best_step, mut best_value) = (0usize, running);
    for (step, node) in d.internal_nodes().enumerate() {
        running += q[node] - d.children(node).iter().map(|&c| q[c]).sum::<f64>();
        if running >= best_value {
            best_value = running;
            best_step = step + 1;
        }
    }
    let cut = d.straight_cut_nodes().swap_remove(best_step);

    let mut decisions = vec![None; d.node_count()];
    for &node in cut.nodes() {
        decisions[node] = Some(Decision::Kept);
        let mut up = d.parent(node);
        while let Some(p) = up {
            if decisions[p].is_some() {
                break;
            }
            decisions[p] = Some(Decision::Split);
            up = d.parent(p);
        }
    }
    BestPartitionResult {
        partition: cut.to_partition(d),
        value: cut.nodes().iter().map(|&c| q[c]).sum(),
        cut,
        decisions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dendrogram::random_dendrogram;
    use crate::graph::Graph;
    use crate::quality::{NodeTerms, QualityModel, ScaleTerms};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::cell::Cell;

    const BARBELL: &str = "0 1\n0 2\n1 2\n3 4\n3 5\n4 5\n2 3";
    const GOOD: &str = "n 6\n6 0 1\n7 6 2\n8 3 4\n9 8 5\n10 7 9";
    const BAD: &str = "n 6\n6 2 3\n7 0 1\n8 4 5\n9 7 6\n10 9 8";

    struct Counting<'a> {
        inner: &'a NodeTerms,
        calls: Cell<usize>,
    }

    impl NodeScorer for Counting<'_> {
        fn terms(&self, node: NodeId) -> ScaleTerms {
            self.calls.set(self.calls.get() + 1);
            self.inner.terms(node)
        }
    }

    #[test]
    fn barbell_good_order() {
        let g = Graph::parse(BARBELL).unwrap();
        let d = Dendrogram::parse_for(GOOD, &g).unwrap();
        let terms = QualityModel::modularity(&g).unwrap().node_terms(&d);
        let halves = Partition::from_assignment(&[0, 0, 0, 1, 1, 1]);

        let cm = best_straight_cut(&d, &terms);
        assert_eq!(cm.partition, halves);
        assert!((cm.value - 5.0 / 14.0).abs() < 1e-12);

        let bm = find_best_partition(&d, &terms);
        assert_eq!(bm.partition, halves);
        assert!((bm.value - 5.0 / 14.0).abs() < 1e-12);
        assert_eq!(bm.cut, Cut(vec![7, 9]));
        assert_eq!(bm.decisions[10], Some(Decision::Split));
        assert_eq!(bm.decisions[7], Some(Decision::Kept));
    }

    #[test]
    fn barbell_bad_order_straight_cut() {
        let g = Graph::parse(BARBELL).unwrap();
        let d = Dendrogram::parse_for(BAD, &g).unwrap();
        let model = QualityModel::modularity(&g).unwrap();
        let terms = model.node_terms(&d);
        // oracle: evaluate every straight cut directly
        let best = d
            .straight_cuts()
            .iter()
            .map(|p| model.partition_quality(p))
            .fold(f64::NEG_INFINITY, f64::max);
        let cm = best_straight_cut(&d, &terms);
        assert!((cm.value - best).abs() < 1e-12);
        assert!((cm.value - 6.0 / 49.0).abs() < 1e-12);
        assert_eq!(cm.partition, Partition::from_assignment(&[0, 0, 0, 0, 1, 1]));
        let bm = find_best_partition(&d, &terms);
        assert!(bm.value >= cm.value);
    }

    #[test]
    fn single_edge_keeps_root() {
        let g = Graph::parse("0 1").unwrap();
        let d = Dendrogram::parse("n 2\n2 0 1").unwrap();
        let terms = QualityModel::modularity(&g).unwrap().node_terms(&d);
        assert_eq!(terms.terms(0).total(), -0.25);
        let bm = find_best_partition(&d, &terms);
        assert_eq!(bm.partition, Partition::whole(2));
        assert_eq!(bm.value, 0.0);
    }

    #[test]
    fn rounding_noise_is_a_tie() {
        let d = Dendrogram::parse("n 2\n2 0 1").unwrap();
        let terms = NodeTerms::new(vec![
            ScaleTerms::new(0.1, 0.0),
            ScaleTerms::new(0.2, 0.0),
            ScaleTerms::new(0.30000000000000004, 0.0),
        ]);
        assert_eq!(find_best_partition(&d, &terms).cut, Cut(vec![0, 1]));
    }

    #[test]
    fn single_leaf() {
        let d = Dendrogram::parse("n 1").unwrap();
        let terms = NodeTerms::new(vec![ScaleTerms::new(0.3, -0.1)]);
        let bm = find_best_partition(&d, &terms);
        assert_eq!(bm.cut, Cut(vec![0]));
        assert!((bm.value - 0.2).abs() < 1e-15);
        let cm = best_straight_cut(&d, &terms);
        assert_eq!(cm.cut, Cut(vec![0]));
        assert_eq!(cm.value, bm.value);
    }

    #[test]
    fn ties_split() {
        let d = Dendrogram::parse("n 2\n2 0 1").unwrap();
        let terms = NodeTerms::new(vec![
            ScaleTerms::new(0.25, 0.0),
            ScaleTerms::new(0.25, 0.0),
            ScaleTerms::new(0.5, 0.0),
        ]);
        assert_eq!(find_best_partition(&d, &terms).cut, Cut(vec![0, 1]));
        // the baseline prefers fewer communities on ties
        assert_eq!(best_straight_cut(&d, &terms).cut, Cut(vec![2]));
    }

    #[test]
    fn one_evaluation_per_node() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1, 2, 5, 40] {
            let d = random_dendrogram(n, false, &mut rng);
            let terms = NodeTerms::new(
                (0..d.node_count())
                    .map(|_| ScaleTerms::new(rng.gen(), -rng.gen::<f64>()))
                    .collect(),
            );
            let counting = Counting {
                inner: &terms,
                calls: Cell::new(0),
            };
            find_best_partition(&d, &counting);
            assert_eq!(counting.calls.get(), d.node_count());
        }
    }

    #[test]
    fn deep_chain_does_not_overflow() {
        let n = 200_000;
        let merges: Vec<Vec<NodeId>> = (1..n)
            .map(|k| vec![if k == 1 { 0 } else { n + k - 2 }, k])
            .collect();
        let d = Dendrogram::from_merges(n, &merges).unwrap();
        let terms = NodeTerms::new(vec![ScaleTerms::new(0.0, -1.0); d.node_count()]);
        let bm = find_best_partition(&d, &terms);
        assert_eq!(bm.cut.nodes(), &[d.root()]);
    }

    #[test]
    fn value_matches_recomputed_sum_and_randomized_dominance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut strict = 0;
        for _ in 0..100 {
            let n = rng.gen_range(4..=30);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    let same = u % 3 == v % 3;
                    if rng.gen_bool(if same { 0.5 } else { 0.1 }) {
                        edges.push((u, v));
                    }
                }
            }
            if edges.is_empty() {
                edges.push((0, 1));
            }
            let g = Graph::from_edges(n, &edges).unwrap();
            let d = random_dendrogram(n, true, &mut rng);
            let model = QualityModel::modularity(&g).unwrap();
            let terms = model.node_terms(&d);
            let bm = find_best_partition(&d, &terms);
            let cm = best_straight_cut(&d, &terms);
            let recomputed: f64 = bm.cut.nodes().iter().map(|&c| terms.terms(c).total()).sum();
            assert!((bm.value - recomputed).abs() < 1e-12);
            assert!((bm.value - model.partition_quality(&bm.partition)).abs() < 1e-12);
            assert!(bm.value >= cm.value - 1e-12);
            if bm.value > cm.value + 1e-12 {
                strict += 1;
            }
        }
        assert!(strict > 0);
    }
}
