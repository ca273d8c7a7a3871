//! Relevance of scales.
//!
//! A community living on `[a, b]` has relevance
//! `R_α(C) = (b − a)/2 + 2(b − α)(α − a)/(b − a)`, a concave parabola that
//! peaks at the middle of its lifespan with value `b − a`. The global
//! relevance `R(α)` is the size-weighted mean over the communities of `P_α`;
//! it is quadratic between consecutive split events, so one sweep over the
//! events that adds and removes each community's coefficients gives it
//! exactly. Local maxima of `R` point at meaningful scales.

use log::debug;

use crate::multiscale::{Lifespan, ScaleInterval, ScaleProfile};

/// `R_α(C)` for one lifespan. Zero-width lifespans carry no relevance, and
/// scales outside the lifespan give 0.
pub fn community_relevance(lifespan: &Lifespan, alpha: f64) -> f64 {
    let (a, b) = (lifespan.alpha_min, lifespan.alpha_max);
    let w = b - a;
    if w <= 0.0 || alpha < a || alpha > b {
        return 0.0;
    }
    w / 2.0 + 2.0 * (b - alpha) * (alpha - a) / w
}

/// `A α² + B α + C`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Quadratic {
    pub fn eval(&self, x: f64) -> f64 {
        (self.a * x + self.b) * x + self.c
    }

    pub fn derivative(&self, x: f64) -> f64 {
        2.0 * self.a * x + self.b
    }

    /// Coefficients of `weight · R_α(C)` for a lifespan `[lo, hi]`.
    fn for_lifespan(lo: f64, hi: f64, weight: f64) -> Self {
        let w = hi - lo;
        Quadratic {
            a: -2.0 * weight / w,
            b: 2.0 * weight * (lo + hi) / w,
            c: weight * (w / 2.0 - 2.0 * lo * hi / w),
        }
    }

    fn add(&mut self, o: &Quadratic) {
        self.a += o.a;
        self.b += o.b;
        self.c += o.c;
    }

    fn sub(&mut self, o: &Quadratic) {
        self.a -= o.a;
        self.b -= o.b;
        self.c -= o.c;
    }
}

/// A local maximum of `R`, attained on interval `interval` of the curve (as
/// a limit when `alpha` is that interval's open left end).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelevanceMaximum {
    pub alpha: f64,
    pub value: f64,
    pub interval: usize,
    pub community_count: usize,
}

#[derive(Debug, Clone)]
pub struct RelevanceCurve {
    vertex_count: usize,
    intervals: Vec<ScaleInterval>,
    coefficients: Vec<Quadratic>,
    maxima: Vec<RelevanceMaximum>,
    updates: usize,
    excluded: usize,
}

/// Builds `R(α)` with one add and one remove per community.
pub fn relevance_curve(profile: &ScaleProfile<'_>, n: usize) -> RelevanceCurve {
    let intervals = profile.intervals().to_vec();
    let mut points: Vec<f64> = intervals.iter().map(|iv| iv.lo).collect();
    if let Some(last) = intervals.last() {
        points.push(last.hi);
    }
    // lifespan endpoints coincide with grid points up to the merge tolerance
    let locate = |x: f64| -> usize {
        let i = points.partition_point(|&p| p < x);
        if i > 0 && (i == points.len() || (points[i] - x).abs() > (x - points[i - 1]).abs()) {
            i - 1
        } else {
            i
        }
    };

    // bucket the add/remove events by grid point (counting sort)
    let mut spans: Vec<(usize, usize, Quadratic)> = Vec::with_capacity(profile.lifespans().len());
    let mut excluded = 0usize;
    for l in profile.lifespans() {
        let (start, end) = (locate(l.alpha_min), locate(l.alpha_max));
        if l.width() <= 0.0 || start >= end {
            excluded += 1;
            continue;
        }
        let q = Quadratic::for_lifespan(l.alpha_min, l.alpha_max, l.size as f64 / n as f64);
        spans.push((start, end, q));
    }
    if excluded > 0 {
        debug!("{excluded} zero-width lifespans excluded from relevance");
    }
    let mut offsets = vec![0usize; points.len() + 1];
    for &(start, end, _) in &spans {
        offsets[start + 1] += 1;
        offsets[end + 1] += 1;
    }
    for i in 0..points.len() {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut events = vec![(false, Quadratic::default()); 2 * spans.len()];
    for &(start, end, q) in &spans {
        events[fill[start]] = (true, q);
        fill[start] += 1;
        events[fill[end]] = (false, q);
        fill[end] += 1;
    }

    let mut running = Quadratic::default();
    let mut updates = 0usize;
    let mut coefficients = Vec::with_capacity(intervals.len());
    for i in 0..points.len() {
        for (add, q) in &events[offsets[i]..offsets[i + 1]] {
            if *add {
                running.add(q);
            } else {
                running.sub(q);
            }
            updates += 1;
        }
        if i < intervals.len() {
            coefficients.push(running);
        }
    }

    let mut curve = RelevanceCurve {
        vertex_count: n,
        intervals,
        coefficients,
        maxima: Vec::new(),
        updates,
        excluded,
    };
    curve.maxima = curve.find_maxima();
    curve
}

impl RelevanceCurve {
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn intervals(&self) -> &[ScaleInterval] {
        &self.intervals
    }

    pub fn coefficients(&self) -> &[Quadratic] {
        &self.coefficients
    }

    /// Local maxima sorted by decreasing `R`.
    pub fn maxima(&self) -> &[RelevanceMaximum] {
        &self.maxima
    }

    /// Coefficient additions plus removals performed by the sweep.
    pub fn update_count(&self) -> usize {
        self.updates
    }

    /// Lifespans of zero width, which carry no relevance.
    pub fn excluded_count(&self) -> usize {
        self.excluded
    }

    /// Index of the interval `(lo, hi]` holding `alpha`; `α = 0` maps to the
    /// first interval.
    pub fn interval_of(&self, alpha: f64) -> usize {
        let i = self.intervals.partition_point(|iv| iv.hi < alpha);
        i.min(self.intervals.len().saturating_sub(1))
    }

    /// `R(α)`. At `α = 0` this is the limit from the right.
    pub fn eval(&self, alpha: f64) -> f64 {
        if self.intervals.is_empty() {
            return 0.0;
        }
        self.coefficients[self.interval_of(alpha)].eval(alpha)
    }

    /// The quadratic of interval `i` evaluated at `alpha`.
    pub fn eval_in(&self, i: usize, alpha: f64) -> f64 {
        self.coefficients[i].eval(alpha)
    }

    fn find_maxima(&self) -> Vec<RelevanceMaximum> {
        let mut out = Vec::new();
        let count = self.intervals.len();
        let entry = |i: usize, alpha: f64| RelevanceMaximum {
            alpha,
            value: self.coefficients[i].eval(alpha),
            interval: i,
            community_count: self.intervals[i].community_count,
        };
        for i in 0..count {
            let iv = self.intervals[i];
            let q = self.coefficients[i];
            if q.a < 0.0 {
                let v = -q.b / (2.0 * q.a);
                if iv.lo < v && v < iv.hi {
                    out.push(entry(i, v));
                }
            }
            // right end, approached from inside the interval
            let right = q.eval(iv.hi);
            let beyond = (i + 1 < count).then(|| self.coefficients[i + 1].eval(iv.hi));
            if q.derivative(iv.hi) >= 0.0 && beyond.map_or(true, |r| right >= r) {
                out.push(entry(i, iv.hi));
            }
            // left end, as the limit from the right
            let left = q.eval(iv.lo);
            let before = (i > 0).then(|| self.coefficients[i - 1].eval(iv.lo));
            if q.derivative(iv.lo) <= 0.0 && before.map_or(true, |l| left > l) {
                out.push(entry(i, iv.lo));
            }
        }
        out.sort_by(|x, y| y.value.total_cmp(&x.value).then(x.alpha.total_cmp(&y.alpha)));
        out
    }
}

/// The `k` most relevant local maxima. Unless `include_trivial` is set,
/// maxima on the all-singletons or whole-set partitions are skipped.
pub fn relevant_scales(
    curve: &RelevanceCurve,
    k: usize,
    include_trivial: bool,
) -> Vec<RelevanceMaximum> {
    let n = curve.vertex_count();
    curve
        .maxima()
        .iter()
        .filter(|m| include_trivial || (m.community_count != n && m.community_count != 1))
        .take(k)
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dendrogram::{random_dendrogram, Dendrogram};
    use crate::envelope::Tolerances;
    use crate::multiscale::find_multiscale_partitions;
    use crate::quality::{NodeTerms, ScaleTerms};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn span(a: f64, b: f64) -> Lifespan {
        Lifespan {
            node: 0,
            alpha_min: a,
            alpha_max: b,
            size: 1,
        }
    }

    /// Independent of the sweep: walk the lifespans directly.
    fn direct(profile: &ScaleProfile<'_>, n: usize, alpha: f64) -> f64 {
        profile
            .lifespans()
            .iter()
            .filter(|l| {
                l.width() > 0.0
                    && ((l.alpha_min < alpha && alpha <= l.alpha_max)
                        || (alpha == 0.0 && l.alpha_min == 0.0))
            })
            .map(|l| {
                let (a, b) = (l.alpha_min, l.alpha_max);
                let r = (b - a) / 2.0 + 2.0 * (b - alpha) * (alpha - a) / (b - a);
                l.size as f64 * r
            })
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn community_relevance_examples() {
        let l = span(0.2, 0.6);
        assert!((community_relevance(&l, 0.4) - 0.4).abs() < 1e-15);
        assert!((community_relevance(&l, 0.2) - 0.2).abs() < 1e-15);
        assert!((community_relevance(&l, 0.3) - 0.35).abs() < 1e-15);
        assert_eq!(community_relevance(&span(0.3, 0.3), 0.3), 0.0);
    }

    #[test]
    fn per_community_peak_is_width_at_midpoint() {
        for (a, b) in [(0.0, 1.0), (0.2, 0.6), (0.55, 0.56)] {
            let q = Quadratic::for_lifespan(a, b, 1.0);
            let v = -q.b / (2.0 * q.a);
            assert!((v - (a + b) / 2.0).abs() < 1e-12);
            assert!((q.eval(v) - (b - a)).abs() < 1e-12);
        }
    }

    fn toy_profile(d: &Dendrogram) -> ScaleProfile<'_> {
        // halves win on (0, ½], the root on (½, 1]
        let terms = NodeTerms::new(vec![
            ScaleTerms::new(-1.0, 0.0),
            ScaleTerms::new(-1.0, 0.0),
            ScaleTerms::new(-1.0, 0.0),
            ScaleTerms::new(-1.0, 0.0),
            ScaleTerms::new(0.0, 0.0),
            ScaleTerms::new(0.0, 0.0),
            ScaleTerms::new(1.0, -1.0),
        ]);
        find_multiscale_partitions(d, &terms, Tolerances::default())
    }

    #[test]
    fn two_community_toy() {
        let d = Dendrogram::parse("n 4\n4 0 1\n5 2 3\n6 4 5").unwrap();
        let profile = toy_profile(&d);
        let root = profile.lifespans().iter().find(|l| l.node == 6).unwrap();
        assert_eq!((root.alpha_min, root.alpha_max), (0.5, 1.0));
        let curve = relevance_curve(&profile, 4);
        assert_eq!(curve.intervals().len(), 2);
        for alpha in [0.1, 0.25, 0.6, 0.9] {
            assert!((curve.eval(alpha) - direct(&profile, 4, alpha)).abs() < 1e-12);
        }
        // both scales peak at 0.5 in the middle of their lifespans
        assert!((curve.eval(0.25) - 0.5).abs() < 1e-12);
        assert!((curve.eval(0.75) - 0.5).abs() < 1e-12);
        assert_eq!(curve.update_count(), 6);
        assert_eq!(curve.excluded_count(), 4);
        let top = relevant_scales(&curve, 5, false);
        assert_eq!(top.len(), 1);
        assert_eq!(top[0].community_count, 2);
        assert!((top[0].alpha - 0.25).abs() < 1e-12);
        let all = relevant_scales(&curve, 5, true);
        assert_eq!(all.len(), 2);
        assert!(relevant_scales(&curve, 0, true).is_empty());
    }

    #[test]
    fn whole_set_everywhere() {
        let d = Dendrogram::parse("n 2\n2 0 1").unwrap();
        let terms = NodeTerms::new(vec![
            ScaleTerms::new(-1.0, -1.0),
            ScaleTerms::new(-1.0, -1.0),
            ScaleTerms::new(0.0, 0.0),
        ]);
        let profile = find_multiscale_partitions(&d, &terms, Tolerances::default());
        let curve = relevance_curve(&profile, 2);
        assert_eq!(curve.maxima().len(), 1);
        let m = curve.maxima()[0];
        assert!((m.alpha - 0.5).abs() < 1e-12);
        assert!((m.value - 1.0).abs() < 1e-12);
    }

    fn random_profile_terms(d: &Dendrogram, rng: &mut ChaCha8Rng) -> NodeTerms {
        // superadditive h, subadditive l: leaves start at h = 0, l < 0
        let mut terms: Vec<ScaleTerms> = Vec::with_capacity(d.node_count());
        for node in 0..d.node_count() {
            let kids = d.children(node);
            let t = if kids.is_empty() {
                ScaleTerms::new(0.0, -rng.gen_range(0.1..1.0))
            } else {
                let h: f64 = kids.iter().map(|&c| terms[c].h).sum::<f64>() + rng.gen_range(0.0..1.0);
                let l: f64 = kids.iter().map(|&c| terms[c].l).sum::<f64>() - rng.gen_range(0.0..1.0);
                ScaleTerms::new(h, l)
            };
            terms.push(t);
        }
        NodeTerms::new(terms)
    }

    #[test]
    fn sweep_matches_direct_on_random_profiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let n = rng.gen_range(2..=40);
            let d = random_dendrogram(n, true, &mut rng);
            let terms = random_profile_terms(&d, &mut rng);
            let profile = find_multiscale_partitions(&d, &terms, Tolerances::default());
            let curve = relevance_curve(&profile, n);
            let live = profile.lifespans().iter().filter(|l| l.width() > 0.0).count();
            assert!(curve.update_count() <= 2 * live);
            for k in 0..=100 {
                let alpha = k as f64 / 100.0;
                assert!((curve.eval(alpha) - direct(&profile, n, alpha)).abs() < 1e-9);
            }
            for m in curve.maxima() {
                assert!((0.0..=1.0).contains(&m.alpha));
                let iv = curve.intervals()[m.interval];
                for probe in [m.alpha - 1e-4, m.alpha + 1e-4] {
                    if iv.lo <= probe && probe <= iv.hi {
                        assert!(m.value >= curve.eval_in(m.interval, probe) - 1e-12);
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn relevance_bounded_by_width(a in 0.0f64..1.0, w in 1e-3f64..1.0, t in 0.0f64..1.0) {
            let b = (a + w).min(1.0);
            prop_assume!(b > a);
            let l = span(a, b);
            let r = community_relevance(&l, a + t * (b - a));
            prop_assert!(r >= (b - a) / 2.0 - 1e-12);
            prop_assert!(r <= (b - a) + 1e-12);
        }
    }
}
