//! Merge trees over the vertex set.
//!
//! Nodes `0..n` are the singleton leaves; internal node `n + k` is created by
//! the `k`-th merge and groups two or more earlier nodes. Every partition the
//! tree can express is an antichain of nodes covering all leaves (a *cut*).
//!
//! Text format:
//!
//! ```text
//! n 4
//! 4 0 1
//! 5 2 3
//! 6 4 5 : 0.25
//! ```
//!
//! The optional `: value` suffix annotates a node with the scale at which it
//! splits (`never-selected` is also accepted); plain dendrograms omit it.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::partition::Partition;

pub type NodeId = usize;

/// Refuse to enumerate more cuts than this.
pub const ENUMERATION_GUARD: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitAnnotation {
    Alpha(f64),
    NeverSelected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    leaf_count: usize,
    children: Vec<Vec<NodeId>>,
    parent: Vec<Option<NodeId>>,
    virtual_root: bool,
    /// Leaves in depth-first order; every subtree is a contiguous run.
    leaf_order: Vec<Vertex>,
    span: Vec<(usize, usize)>,
    annotations: Vec<Option<SplitAnnotation>>,
}

/// An antichain of nodes whose vertex sets partition the leaves, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cut(pub Vec<NodeId>);

impl Cut {
    pub fn nodes(&self) -> &[NodeId] {
        &self.0
    }

    pub fn to_partition(&self, d: &Dendrogram) -> Partition {
        let mut labels = vec![0usize; d.leaf_count()];
        for (c, &node) in self.0.iter().enumerate() {
            for &v in d.vertices(node) {
                labels[v] = c;
            }
        }
        Partition::from_assignment(&labels)
    }
}

impl Dendrogram {
    /// Builds a dendrogram from its merge list. Merge `k` creates node
    /// `n + k`. If the last merge does not cover every leaf, a virtual root
    /// over the remaining maximal nodes is appended and flagged.
    pub fn from_merges(leaf_count: usize, merges: &[Vec<NodeId>]) -> Result<Self> {
        Self::build(leaf_count, merges.to_vec(), vec![None; merges.len()])
    }

    fn build(
        leaf_count: usize,
        mut merges: Vec<Vec<NodeId>>,
        mut merge_annotations: Vec<Option<SplitAnnotation>>,
    ) -> Result<Self> {
        if leaf_count == 0 {
            return Err(Error::Dendrogram("no leaves".into()));
        }
        let mut parent: Vec<Option<NodeId>> = vec![None; leaf_count + merges.len()];
        for (k, kids) in merges.iter().enumerate() {
            let id = leaf_count + k;
            if kids.len() < 2 {
                return Err(Error::Dendrogram(format!(
                    "node {id} has {} child(ren); merges need at least two",
                    kids.len()
                )));
            }
            for &child in kids {
                if child >= id {
                    return Err(Error::Dendrogram(format!(
                        "node {id} lists child {child}, which is not created before it"
                    )));
                }
                if let Some(p) = parent[child] {
                    return Err(Error::Dendrogram(format!(
                        "node {child} is a child of both {p} and {id}"
                    )));
                }
                parent[child] = Some(id);
            }
        }
        let roots: Vec<NodeId> = (0..parent.len()).filter(|&v| parent[v].is_none()).collect();
        let virtual_root = roots.len() > 1;
        if virtual_root {
            let id = parent.len();
            for &r in &roots {
                parent[r] = Some(id);
            }
            parent.push(None);
            merges.push(roots);
            merge_annotations.push(None);
        }

        let mut children = vec![Vec::new(); leaf_count];
        children.extend(merges);
        let mut annotations = vec![None; leaf_count];
        annotations.extend(merge_annotations);

        let node_count = children.len();
        let root = node_count - 1;
        let mut leaf_order = Vec::with_capacity(leaf_count);
        let mut span = vec![(0usize, 0usize); node_count];
        let mut stack = vec![(root, false)];
        while let Some((node, expanded)) = stack.pop() {
            if node < leaf_count {
                span[node] = (leaf_order.len(), 1);
                leaf_order.push(node);
            } else if expanded {
                let kids = &children[node];
                let start = span[kids[0]].0;
                let len = kids.iter().map(|&c| span[c].1).sum();
                span[node] = (start, len);
            } else {
                stack.push((node, true));
                for &c in children[node].iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        debug_assert_eq!(leaf_order.len(), leaf_count);

        Ok(Dendrogram {
            leaf_count,
            children,
            parent,
            virtual_root,
            leaf_order,
            span,
            annotations,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut leaf_count: Option<usize> = None;
        let mut merges = Vec::new();
        let mut annotations = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some(n) = leaf_count else {
                let mut tokens = line.split_whitespace();
                let count = match (tokens.next(), tokens.next(), tokens.next()) {
                    (Some("n"), Some(t), None) => t.parse::<usize>().ok(),
                    _ => None,
                }
                .ok_or_else(|| Error::parse(lineno, "expected header `n <leaf count>`"))?;
                leaf_count = Some(count);
                continue;
            };
            let (merge, annotation) = match line.split_once(':') {
                Some((m, a)) => (m, Some(a.trim())),
                None => (line, None),
            };
            let ids = merge
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| Error::parse(lineno, format!("`{t}` is not a node id")))
                })
                .collect::<Result<Vec<_>>>()?;
            let expected = n + merges.len();
            match ids.first() {
                None => return Err(Error::parse(lineno, "empty merge line")),
                Some(&id) if id != expected => {
                    return Err(Error::parse(
                        lineno,
                        format!("node id {id} out of sequence, expected {expected}"),
                    ))
                }
                _ => {}
            }
            let annotation = match annotation {
                None => None,
                Some("never-selected") => Some(SplitAnnotation::NeverSelected),
                Some(a) => Some(SplitAnnotation::Alpha(a.parse::<f64>().map_err(|_| {
                    Error::parse(lineno, format!("`{a}` is not a split scale"))
                })?)),
            };
            merges.push(ids[1..].to_vec());
            annotations.push(annotation);
        }
        let n = leaf_count.ok_or_else(|| Error::parse(1, "missing header `n <leaf count>`"))?;
        Self::build(n, merges, annotations)
    }

    /// Parses and checks that the leaves match the graph's vertices.
    pub fn parse_for(text: &str, graph: &Graph) -> Result<Self> {
        let d = Self::parse(text)?;
        if d.leaf_count() != graph.vertex_count() {
            return Err(Error::Dendrogram(format!(
                "{} leaves but the graph has {} vertices",
                d.leaf_count(),
                graph.vertex_count()
            )));
        }
        Ok(d)
    }

    /// Serializes every merge, including an appended virtual root, so the
    /// output reloads to an identical tree.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "n {}", self.leaf_count).unwrap();
        for node in self.internal_nodes() {
            write!(out, "{node}").unwrap();
            for c in &self.children[node] {
                write!(out, " {c}").unwrap();
            }
            match self.annotations[node] {
                Some(SplitAnnotation::Alpha(a)) => write!(out, " : {a:.9}").unwrap(),
                Some(SplitAnnotation::NeverSelected) => write!(out, " : never-selected").unwrap(),
                None => {}
            }
            out.push('\n');
        }
        out
    }

    /// Returns a copy of this tree with internal nodes renumbered by `order`
    /// (a permutation of the internal nodes that lists children before
    /// parents) and annotated.
    pub fn relabeled(
        &self,
        order: &[NodeId],
        annotation: impl Fn(NodeId) -> Option<SplitAnnotation>,
    ) -> Result<Self> {
        let n = self.leaf_count;
        if order.len() != self.internal_count() {
            return Err(Error::Dendrogram("order must list every internal node".into()));
        }
        let mut new_id: Vec<NodeId> = (0..self.node_count()).collect();
        for (k, &node) in order.iter().enumerate() {
            new_id[node] = n + k;
        }
        let merges: Vec<Vec<NodeId>> = order
            .iter()
            .map(|&node| self.children[node].iter().map(|&c| new_id[c]).collect())
            .collect();
        let annotations = order.iter().map(|&node| annotation(node)).collect();
        Self::build(n, merges, annotations)
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    pub fn node_count(&self) -> usize {
        self.children.len()
    }

    pub fn internal_count(&self) -> usize {
        self.children.len() - self.leaf_count
    }

    pub fn root(&self) -> NodeId {
        self.children.len() - 1
    }

    pub fn has_virtual_root(&self) -> bool {
        self.virtual_root
    }

    pub fn children(&self, node: NodeId) -> &[NodeId] {
        &self.children[node]
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.parent[node]
    }

    pub fn is_leaf(&self, node: NodeId) -> bool {
        node < self.leaf_count
    }

    pub fn internal_nodes(&self) -> std::ops::Range<NodeId> {
        self.leaf_count..self.children.len()
    }

    pub fn annotation(&self, node: NodeId) -> Option<SplitAnnotation> {
        self.annotations[node]
    }

    /// Vertices below `node`, in depth-first leaf order.
    pub fn vertices(&self, node: NodeId) -> &[Vertex] {
        let (start, len) = self.span[node];
        &self.leaf_order[start..start + len]
    }

    pub fn size(&self, node: NodeId) -> usize {
        self.span[node].1
    }

    /// `P_0, …, P_c`: the partitions reached after each prefix of the merge
    /// sequence, from all singletons to the root.
    pub fn straight_cuts(&self) -> Vec<Partition> {
        let n = self.leaf_count;
        let mut labels: Vec<usize> = (0..n).collect();
        let mut out = Vec::with_capacity(self.internal_count() + 1);
        out.push(Partition::from_assignment(&labels));
        for node in self.internal_nodes() {
            for &v in self.vertices(node) {
                labels[v] = node;
            }
            out.push(Partition::from_assignment(&labels));
        }
        out
    }

    /// Node sets of the straight cuts, in the same order as
    /// [`Dendrogram::straight_cuts`].
    pub fn straight_cut_nodes(&self) -> Vec<Cut> {
        let mut current: std::collections::BTreeSet<NodeId> = (0..self.leaf_count).collect();
        let mut out = vec![Cut(current.iter().copied().collect())];
        for node in self.internal_nodes() {
            for c in &self.children[node] {
                current.remove(c);
            }
            current.insert(node);
            out.push(Cut(current.iter().copied().collect()));
        }
        out
    }

    /// Number of cuts of the subtree at `node`: `N = 1 + Π N(child)`,
    /// saturating at `u128::MAX`.
    pub fn count_cuts(&self, node: NodeId) -> u128 {
        let mut counts = vec![1u128; self.node_count()];
        for v in self.leaf_count..=node {
            let product = self.children[v]
                .iter()
                .fold(1u128, |acc, &c| acc.saturating_mul(counts[c]));
            counts[v] = product.saturating_add(1);
        }
        counts[node]
    }

    /// Every cut of the subtree at `node`. Test oracle only: refuses when the
    /// count exceeds [`ENUMERATION_GUARD`].
    pub fn enumerate_cuts(&self, node: NodeId) -> Result<Vec<Cut>> {
        let count = self.count_cuts(node);
        if count > ENUMERATION_GUARD {
            return Err(Error::EnumerationGuard(count, ENUMERATION_GUARD));
        }
        let mut all = self.enumerate_rec(node);
        for cut in &mut all {
            cut.sort_unstable();
        }
        Ok(all.into_iter().map(Cut).collect())
    }

    fn enumerate_rec(&self, node: NodeId) -> Vec<Vec<NodeId>> {
        let mut combos: Vec<Vec<NodeId>> = vec![vec![node]];
        if self.is_leaf(node) {
            return combos;
        }
        let mut product: Vec<Vec<NodeId>> = vec![Vec::new()];
        for &c in &self.children[node] {
            let sub = self.enumerate_rec(c);
            let mut next = Vec::with_capacity(product.len() * sub.len());
            for prefix in &product {
                for s in &sub {
                    let mut joined = prefix.clone();
                    joined.extend_from_slice(s);
                    next.push(joined);
                }
            }
            product = next;
        }
        combos.extend(product);
        combos
    }
}

/// Random merge tree: repeatedly joins two (occasionally three) uniformly
/// chosen current roots. With `complete = false` the process may stop early,
/// leaving a virtual root.
pub fn random_dendrogram<R: Rng>(leaf_count: usize, complete: bool, rng: &mut R) -> Dendrogram {
    let mut roots: Vec<NodeId> = (0..leaf_count).collect();
    let mut merges = Vec::new();
    let mut next = leaf_count;
    while roots.len() > 1 {
        if !complete && roots.len() > 2 && rng.gen_bool(0.1) {
            break;
        }
        let arity = if roots.len() >= 3 && rng.gen_bool(0.2) { 3 } else { 2 };
        roots.shuffle(rng);
        let mut kids: Vec<NodeId> = roots.split_off(roots.len() - arity);
        kids.sort_unstable();
        merges.push(kids);
        roots.push(next);
        next += 1;
    }
    Dendrogram::from_merges(leaf_count, &merges).expect("random merges are valid")
}

/// Perfectly balanced binary tree (leaf count rounded by pairing adjacent
/// roots level by level).
pub fn balanced_dendrogram(leaf_count: usize) -> Dendrogram {
    let mut level: Vec<NodeId> = (0..leaf_count).collect();
    let mut merges = Vec::new();
    let mut next = leaf_count;
    while level.len() > 1 {
        let mut upper = Vec::with_capacity(level.len() / 2 + 1);
        for pair in level.chunks(2) {
            if pair.len() == 2 {
                merges.push(pair.to_vec());
                upper.push(next);
                next += 1;
            } else {
                upper.push(pair[0]);
            }
        }
        level = upper;
    }
    Dendrogram::from_merges(leaf_count, &merges).expect("balanced merges are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn load_examples() {
        let d = Dendrogram::parse("n 2\n2 0 1").unwrap();
        assert_eq!(d.root(), 2);
        assert_eq!(d.vertices(2), &[0, 1]);
        assert!(!d.has_virtual_root());

        let d = Dendrogram::parse("n 3\n3 0 1\n4 3 2").unwrap();
        assert_eq!(d.node_count(), 5);

        let d = Dendrogram::parse("n 4\n4 0 1\n5 2 3").unwrap();
        assert!(d.has_virtual_root());
        assert_eq!(d.root(), 6);
        assert_eq!(d.children(6), &[4, 5]);
    }

    #[test]
    fn load_errors() {
        assert!(Dendrogram::parse("n 3\n3 0 1\n4 0 2").is_err());
        assert!(Dendrogram::parse("n 3\n3 0 1\n5 3 2").is_err());
        assert!(Dendrogram::parse("n 3\n3 0 4\n4 3 2").is_err());
        assert!(Dendrogram::parse("n 3\n3 0").is_err());
        assert!(Dendrogram::parse("3 0 1").is_err());
    }

    #[test]
    fn single_leaf() {
        let d = Dendrogram::parse("n 1").unwrap();
        assert_eq!(d.root(), 0);
        assert_eq!(d.straight_cuts(), vec![Partition::singletons(1)]);
        assert_eq!(d.enumerate_cuts(0).unwrap(), vec![Cut(vec![0])]);
    }

    #[test]
    fn straight_cuts_of_chain() {
        let d = Dendrogram::parse("n 3\n3 0 1\n4 3 2").unwrap();
        let cuts = d.straight_cuts();
        assert_eq!(
            cuts,
            vec![
                Partition::from_assignment(&[0, 1, 2]),
                Partition::from_assignment(&[0, 0, 1]),
                Partition::from_assignment(&[0, 0, 0]),
            ]
        );
        assert_eq!(
            d.straight_cut_nodes(),
            vec![Cut(vec![0, 1, 2]), Cut(vec![2, 3]), Cut(vec![4])]
        );
    }

    #[test]
    fn barbell_straight_cuts() {
        let d = Dendrogram::parse("n 6\n6 0 1\n7 6 2\n8 3 4\n9 8 5\n10 7 9").unwrap();
        let cuts = d.straight_cuts();
        assert_eq!(cuts.len(), 6);
        assert_eq!(cuts[4], Partition::from_assignment(&[0, 0, 0, 1, 1, 1]));
    }

    #[test]
    fn enumeration_counts() {
        let chain = Dendrogram::parse("n 3\n3 0 1\n4 3 2").unwrap();
        assert_eq!(chain.enumerate_cuts(4).unwrap().len(), 3);
        let balanced = Dendrogram::parse("n 4\n4 0 1\n5 2 3\n6 4 5").unwrap();
        assert_eq!(balanced.enumerate_cuts(6).unwrap().len(), 5);
        assert_eq!(balanced.enumerate_cuts(2).unwrap(), vec![Cut(vec![2])]);
        let ternary = Dendrogram::parse("n 4\n4 0 1\n5 4 2 3").unwrap();
        assert_eq!(ternary.count_cuts(5), 3);
        assert_eq!(ternary.enumerate_cuts(5).unwrap().len(), 3);
    }

    #[test]
    fn enumeration_guard() {
        let d = balanced_dendrogram(64);
        assert!(matches!(
            d.enumerate_cuts(d.root()),
            Err(Error::EnumerationGuard(..))
        ));
    }

    #[test]
    fn random_trees_obey_recurrence() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.gen_range(1..=12);
            let complete = rng.gen_bool(0.7);
            let d = random_dendrogram(n, complete, &mut rng);
            assert!(d.node_count() <= 2 * n);
            let cuts = d.enumerate_cuts(d.root()).unwrap();
            assert_eq!(cuts.len() as u128, d.count_cuts(d.root()));
            for cut in &cuts {
                let mut covered = vec![false; n];
                for &node in cut.nodes() {
                    for &v in d.vertices(node) {
                        assert!(!covered[v], "overlap in {cut:?}");
                        covered[v] = true;
                    }
                }
                assert!(covered.iter().all(|&c| c));
            }
            let all: std::collections::HashSet<_> = cuts.into_iter().collect();
            for cut in d.straight_cut_nodes() {
                assert!(all.contains(&cut));
            }
        }
    }

    #[test]
    fn some_cut_is_not_straight() {
        // node 4 = {0,1} is consumed by 5 before 6 = {2,3} exists, so
        // {{0},{1},{2,3}} is a cut but never a merge prefix.
        let d = Dendrogram::parse("n 5\n5 0 1\n6 5 4\n7 2 3\n8 6 7").unwrap();
        let straight: Vec<Cut> = d.straight_cut_nodes();
        let target = Cut(vec![0, 1, 4, 7]);
        assert!(d.enumerate_cuts(d.root()).unwrap().contains(&target));
        assert!(!straight.contains(&target));
    }

    #[test]
    fn text_round_trip_with_annotations() {
        let d = Dendrogram::parse("n 4\n4 0 1 : 0.25\n5 2 3 : never-selected\n6 4 5 : 1").unwrap();
        assert_eq!(d.annotation(4), Some(SplitAnnotation::Alpha(0.25)));
        assert_eq!(d.annotation(5), Some(SplitAnnotation::NeverSelected));
        assert_eq!(Dendrogram::parse(&d.to_text()).unwrap(), d);

        let v = Dendrogram::parse("n 4\n4 0 1\n5 2 3").unwrap();
        assert_eq!(Dendrogram::parse(&v.to_text()).unwrap().children(6), &[4, 5]);
    }

    #[test]
    fn relabel_keeps_structure() {
        let d = Dendrogram::parse("n 4\n4 0 1\n5 2 3\n6 4 5").unwrap();
        let r = d.relabeled(&[5, 4, 6], |_| None).unwrap();
        assert_eq!(r.children(4), &[2, 3]);
        assert_eq!(r.children(5), &[0, 1]);
        assert_eq!(r.children(6), &[5, 4]);
        assert!(d.relabeled(&[6, 4, 5], |_| None).is_err());
    }
}
