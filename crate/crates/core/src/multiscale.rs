//! Optimal partitions at every scale.
//!
//! For each node the best achievable `Q_α` over the cuts of its subtree is a
//! convex piecewise-affine function of `α`: the maximum of the node's own
//! line `q_α(C)` and the sum of its children's functions. One bottom-up pass
//! builds these functions and records, per node, the scales at which keeping
//! the node whole strictly wins. A top-down pass then turns those regions into
//! lifespans: the scales at which each community belongs to the optimal
//! partition `P_α`.
//!
//! Boundary convention: a community with lifespan `(α_min, α_max)` belongs to
//! `P_α` for `α_min < α ≤ α_max`, so at a split scale the finer partition
//! wins, as it does for ties at fixed `α`. At `α = 0` the partition is all
//! singletons and at `α = 1` it is the whole vertex set.

use log::warn;

use crate::dendrogram::{Dendrogram, NodeId, SplitAnnotation};
use crate::envelope::{pw_add, pw_max_regions, pw_sum, PiecewiseAffine, Tolerances};
use crate::error::Result;
use crate::optimize::find_best_partition_at;
use crate::partition::Partition;
use crate::quality::{NodeScorer, NodeTerms};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lifespan {
    pub node: NodeId,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub size: usize,
}

impl Lifespan {
    pub fn width(&self) -> f64 {
        self.alpha_max - self.alpha_min
    }
}

/// `node` stops being a single community when `α` drops to `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitEvent {
    pub alpha: f64,
    pub node: NodeId,
}

/// A maximal scale range `(lo, hi]` over which `P_α` does not change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleInterval {
    pub lo: f64,
    pub hi: f64,
    pub community_count: usize,
}

#[derive(Debug, Clone)]
pub struct ScaleProfile<'d> {
    dendrogram: &'d Dendrogram,
    terms: NodeTerms,
    envelope: PiecewiseAffine,
    keep: Vec<Vec<(f64, f64)>>,
    lifespans: Vec<Lifespan>,
    events: Vec<SplitEvent>,
    intervals: Vec<ScaleInterval>,
    evaluations: usize,
    path_length: usize,
    tolerances: Tolerances,
}

type IntervalSet = Vec<(f64, f64)>;

fn intersect(a: &[(f64, f64)], b: &[(f64, f64)]) -> IntervalSet {
    let mut out = Vec::new();
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            let (lo, hi) = (a0.max(b0), a1.min(b1));
            if lo < hi {
                out.push((lo, hi));
            }
        }
    }
    out
}

fn subtract(a: &[(f64, f64)], b: &[(f64, f64)]) -> IntervalSet {
    let mut current: IntervalSet = a.to_vec();
    for &(b0, b1) in b {
        let mut next = Vec::with_capacity(current.len() + 1);
        for &(a0, a1) in &current {
            if b1 <= a0 || a1 <= b0 {
                next.push((a0, a1));
                continue;
            }
            if a0 < b0 {
                next.push((a0, b0));
            }
            if b1 < a1 {
                next.push((b1, a1));
            }
        }
        current = next;
    }
    current
}

/// Runs the scale recursion. `scorer` is queried exactly once per node.
pub fn find_multiscale_partitions<'d, S: NodeScorer>(
    d: &'d Dendrogram,
    scorer: &S,
    tol: Tolerances,
) -> ScaleProfile<'d> {
    let count = d.node_count();
    let mut terms = Vec::with_capacity(count);
    let mut envs: Vec<Option<PiecewiseAffine>> = vec![None; count];
    let mut keep: Vec<IntervalSet> = vec![Vec::new(); count];
    let mut path_length = 0usize;

    for node in 0..count {
        let t = scorer.terms(node);
        terms.push(t);
        let line = PiecewiseAffine::affine(t.slope(), t.intercept());
        let kids = d.children(node);
        if kids.is_empty() {
            envs[node] = Some(line);
            continue;
        }
        let mut take = |c: NodeId| envs[c].take().expect("children precede parents");
        let split = if let [a, b] = kids {
            let (fa, fb) = (take(*a), take(*b));
            path_length += fa.segment_count() + fb.segment_count();
            pw_add(&fa, &fb, tol)
        } else {
            let child_envs: Vec<PiecewiseAffine> = kids.iter().map(|&c| take(c)).collect();
            path_length += child_envs.iter().map(PiecewiseAffine::segment_count).sum::<usize>();
            let refs: Vec<&PiecewiseAffine> = child_envs.iter().collect();
            pw_sum(&refs, tol)
        };
        let (env, regions) = pw_max_regions(&line, &split, tol);
        envs[node] = Some(env);
        keep[node] = regions;
    }
    let envelope = envs[d.root()].take().expect("root envelope");

    let mut profile = ScaleProfile {
        dendrogram: d,
        terms: NodeTerms::new(terms),
        envelope,
        keep,
        lifespans: Vec::new(),
        events: Vec::new(),
        intervals: Vec::new(),
        evaluations: count,
        path_length,
        tolerances: tol,
    };
    profile.derive_lifespans();
    profile.derive_intervals();
    profile
}

impl<'d> ScaleProfile<'d> {
    fn derive_lifespans(&mut self) {
        let d = self.dendrogram;
        let eps = self.tolerances.crossing;
        let mut avail: Vec<IntervalSet> = vec![Vec::new(); d.node_count()];
        avail[d.root()] = vec![(0.0, 1.0)];
        let mut lifespans = Vec::new();
        let mut fragmented = 0usize;
        for node in (0..d.node_count()).rev() {
            let here = std::mem::take(&mut avail[node]);
            let keep = self.keep_regions(node);
            let mut life: IntervalSet = intersect(&here, keep)
                .into_iter()
                .filter(|&(lo, hi)| hi - lo > eps)
                .collect();
            if let Some((&last, others)) = d.children(node).split_last() {
                let rest = subtract(&here, keep);
                for &c in others {
                    avail[c] = rest.clone();
                }
                avail[last] = rest;
            }
            // the extremes belong to the singletons and to the root
            if d.is_leaf(node) && life.first().map_or(true, |&(lo, _)| lo > 0.0) {
                life.insert(0, (0.0, 0.0));
            }
            if node == d.root() && life.last().map_or(true, |&(_, hi)| hi < 1.0) {
                life.push((1.0, 1.0));
            }
            if life.len() > 1 {
                fragmented += 1;
            }
            for (lo, hi) in life {
                lifespans.push(Lifespan {
                    node,
                    alpha_min: lo,
                    alpha_max: hi,
                    size: d.size(node),
                });
            }
        }
        if fragmented > 0 {
            warn!(
                "{fragmented} communities have non-contiguous lifespans; \
                 the quality is not monotone in scale on this dendrogram"
            );
        }
        lifespans.sort_by(|a, b| a.node.cmp(&b.node).then(a.alpha_min.total_cmp(&b.alpha_min)));

        let mut events: Vec<SplitEvent> = lifespans
            .iter()
            .filter(|l| !d.is_leaf(l.node) && l.alpha_min > 0.0)
            .map(|l| SplitEvent {
                alpha: l.alpha_min,
                node: l.node,
            })
            .collect();
        events.sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then(a.node.cmp(&b.node)));
        self.lifespans = lifespans;
        self.events = events;
    }

    fn derive_intervals(&mut self) {
        let eps = self.tolerances.crossing;
        let mut grid: Vec<f64> = self
            .lifespans
            .iter()
            .flat_map(|l| [l.alpha_min, l.alpha_max])
            .chain([0.0, 1.0])
            .collect();
        grid.sort_by(f64::total_cmp);
        let mut points: Vec<f64> = Vec::with_capacity(grid.len());
        for x in grid {
            match points.last() {
                Some(&last) if x - last <= eps => {
                    if x == 1.0 {
                        *points.last_mut().unwrap() = 1.0;
                    }
                }
                _ => points.push(x),
            }
        }
        if points.len() == 1 {
            points.push(1.0);
        }
        // sweep: counts of communities alive on each grid interval
        let mut delta = vec![0i64; points.len()];
        let index = |x: f64| -> usize {
            let i = points.partition_point(|&p| p < x - eps);
            i.min(points.len() - 1)
        };
        for l in &self.lifespans {
            let (a, b) = (index(l.alpha_min), index(l.alpha_max));
            if a < b {
                delta[a] += 1;
                delta[b] -= 1;
            }
        }
        let mut alive = 0i64;
        self.intervals = points
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                alive += delta[i];
                ScaleInterval {
                    lo: w[0],
                    hi: w[1],
                    community_count: alive as usize,
                }
            })
            .collect();
    }

    pub fn dendrogram(&self) -> &'d Dendrogram {
        self.dendrogram
    }

    pub fn terms(&self) -> &NodeTerms {
        &self.terms
    }

    /// `Q^Π_max(α)` at the root.
    pub fn envelope(&self) -> &PiecewiseAffine {
        &self.envelope
    }

    /// Regions where node `node` strictly prefers staying whole over
    /// splitting into its children's best cuts.
    pub fn keep_regions(&self, node: NodeId) -> &[(f64, f64)] {
        if self.dendrogram.is_leaf(node) {
            &[(0.0, 1.0)]
        } else {
            &self.keep[node]
        }
    }

    /// One entry per selected community (more than one only if the quality
    /// is not monotone in scale), sorted by node.
    pub fn lifespans(&self) -> &[Lifespan] {
        &self.lifespans
    }

    pub fn events(&self) -> &[SplitEvent] {
        &self.events
    }

    pub fn intervals(&self) -> &[ScaleInterval] {
        &self.intervals
    }

    /// Number of elementary quality evaluations performed.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Total size of the piecewise functions combined at internal nodes.
    pub fn path_length(&self) -> usize {
        self.path_length
    }

    /// Communities of `P_α` according to the lifespans.
    pub fn members_at(&self, alpha: f64) -> Vec<NodeId> {
        let d = self.dendrogram;
        if alpha <= 0.0 {
            return (0..d.leaf_count()).collect();
        }
        if alpha >= 1.0 {
            return vec![d.root()];
        }
        // breakpoints within the crossing tolerance of `alpha` count as `alpha`
        let eps = self.tolerances.crossing;
        let mut nodes: Vec<NodeId> = self
            .lifespans
            .iter()
            .filter(|l| l.alpha_min + eps < alpha && alpha <= l.alpha_max + eps)
            .map(|l| l.node)
            .collect();
        nodes.dedup();
        nodes
    }

    fn nodes_to_partition(&self, nodes: &[NodeId]) -> Partition {
        let d = self.dendrogram;
        let mut labels = vec![usize::MAX; d.leaf_count()];
        for (c, &node) in nodes.iter().enumerate() {
            for &v in d.vertices(node) {
                labels[v] = c;
            }
        }
        debug_assert!(labels.iter().all(|&l| l != usize::MAX));
        Partition::from_assignment(&labels)
    }

    /// `P_α` read off the lifespans.
    pub fn partition_from_lifespans(&self, alpha: f64) -> Partition {
        self.nodes_to_partition(&self.members_at(alpha))
    }

    /// `P_α` by direct maximization of `Q_α` over all cuts with the stored
    /// per-node terms (the same arithmetic as the fixed-scale optimizer).
    /// At `α = 1` this is the whole vertex set.
    pub fn partition_at(&self, alpha: f64) -> Partition {
        let d = self.dendrogram;
        if alpha >= 1.0 {
            return Partition::whole(d.leaf_count());
        }
        find_best_partition_at(d, &self.terms, alpha).partition
    }

    /// The partition on interval `i` of [`ScaleProfile::intervals`].
    pub fn interval_partition(&self, i: usize) -> Partition {
        let iv = self.intervals[i];
        self.partition_from_lifespans(0.5 * (iv.lo + iv.hi))
    }

    /// All distinct optimal partitions with the scale range each one holds
    /// on, from finest to coarsest. The endpoints `α = 0` and `α = 1` appear
    /// as degenerate ranges when their partition differs from the neighbouring
    /// interval.
    pub fn distinct_partitions(&self) -> Vec<(f64, f64, Partition)> {
        let n = self.dendrogram.leaf_count();
        let mut out: Vec<(f64, f64, Partition)> = Vec::new();
        let singletons = Partition::singletons(n);
        let push = |lo: f64, hi: f64, p: Partition, out: &mut Vec<(f64, f64, Partition)>| {
            match out.last_mut() {
                Some(last) if last.2 == p => last.1 = hi,
                _ => out.push((lo, hi, p)),
            }
        };
        push(0.0, 0.0, singletons, &mut out);
        for i in 0..self.intervals.len() {
            let iv = self.intervals[i];
            push(iv.lo, iv.hi, self.interval_partition(i), &mut out);
        }
        push(1.0, 1.0, Partition::whole(n), &mut out);
        out
    }

    /// Scale at which an internal node is formed (its earliest `α_min`), or
    /// `None` if it never belongs to an optimal partition.
    pub fn split_alpha(&self, node: NodeId) -> Option<f64> {
        self.lifespans
            .iter()
            .find(|l| l.node == node)
            .map(|l| l.alpha_min)
    }

    /// The dendrogram renumbered so that merges happen in order of the scale
    /// at which they appear, each internal node annotated with that scale.
    /// Nodes that are never selected keep their place (at the height of their
    /// tallest child) and are flagged.
    pub fn reordered_dendrogram(&self) -> Result<Dendrogram> {
        let d = self.dendrogram;
        let mut height = vec![0.0f64; d.node_count()];
        let mut first_alpha: Vec<Option<f64>> = vec![None; d.node_count()];
        for l in &self.lifespans {
            if first_alpha[l.node].is_none() {
                first_alpha[l.node] = Some(l.alpha_min);
            }
        }
        for node in d.internal_nodes() {
            let floor = d
                .children(node)
                .iter()
                .map(|&c| height[c])
                .fold(0.0, f64::max);
            height[node] = first_alpha[node].map_or(floor, |a| a.max(floor));
        }
        let mut order: Vec<NodeId> = d.internal_nodes().collect();
        order.sort_by(|&a, &b| height[a].total_cmp(&height[b]).then(a.cmp(&b)));
        d.relabeled(&order, |node| {
            Some(match first_alpha[node] {
                Some(a) => SplitAnnotation::Alpha(a),
                None => SplitAnnotation::NeverSelected,
            })
        })
    }
}
