//! Continuous piecewise-affine functions on `[0, 1]`.
//!
//! Only the two operations the scale recursion needs are provided: the
//! pointwise sum and the pointwise maximum. Both run in time linear in the
//! total number of segments.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Adjacent segments whose slopes differ by at most this are merged.
    pub collinear: f64,
    /// Breakpoints closer than this are identified; differences of values
    /// within this (relative to magnitude) count as ties.
    pub crossing: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            collinear: 1e-12,
            crossing: 1e-12,
        }
    }
}

/// Largest value mismatch accepted at an interior breakpoint.
pub const CONTINUITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub slope: f64,
    pub intercept: f64,
}

impl Affine {
    pub fn new(slope: f64, intercept: f64) -> Self {
        Affine { slope, intercept }
    }

    pub fn eval(self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

impl std::ops::Add for Affine {
    type Output = Affine;

    fn add(self, o: Affine) -> Affine {
        Affine::new(self.slope + o.slope, self.intercept + o.intercept)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseAffine {
    /// `0 = b_0 < b_1 < … < b_k = 1`.
    breaks: Vec<f64>,
    /// Piece `i` is active on `[b_i, b_{i+1}]`.
    pieces: Vec<Affine>,
}

impl PiecewiseAffine {
    pub fn affine(slope: f64, intercept: f64) -> Self {
        PiecewiseAffine {
            breaks: vec![0.0, 1.0],
            pieces: vec![Affine::new(slope, intercept)],
        }
    }

    pub fn zero() -> Self {
        Self::affine(0.0, 0.0)
    }

    /// Validates ordering, domain and continuity, then drops joints between
    /// collinear pieces.
    pub fn new(breaks: Vec<f64>, pieces: Vec<Affine>, tol: Tolerances) -> Result<Self> {
        if pieces.is_empty() || breaks.len() != pieces.len() + 1 {
            return Err(Error::Envelope(format!(
                "{} breakpoints for {} pieces",
                breaks.len(),
                pieces.len()
            )));
        }
        if breaks[0] != 0.0 || *breaks.last().unwrap() != 1.0 {
            return Err(Error::Envelope("domain must be [0, 1]".into()));
        }
        if let Some(w) = breaks.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::Envelope(format!(
                "breakpoints not increasing at {} .. {}",
                w[0], w[1]
            )));
        }
        for (i, pair) in pieces.windows(2).enumerate() {
            let x = breaks[i + 1];
            let gap = (pair[0].eval(x) - pair[1].eval(x)).abs();
            if gap >= CONTINUITY_TOLERANCE {
                return Err(Error::Envelope(format!(
                    "discontinuity of {gap:e} at breakpoint {x}"
                )));
            }
        }
        let mut builder = Builder::with_capacity(tol, pieces.len());
        for (i, &piece) in pieces.iter().enumerate() {
            builder.push(breaks[i], piece);
        }
        Ok(builder.finish())
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn pieces(&self) -> &[Affine] {
        &self.pieces
    }

    pub fn segment_count(&self) -> usize {
        self.pieces.len()
    }

    /// `(lo, hi, piece)` for each segment.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, Affine)> + '_ {
        self.pieces
            .iter()
            .enumerate()
            .map(|(i, &p)| (self.breaks[i], self.breaks[i + 1], p))
    }

    fn piece_index(&self, x: f64) -> usize {
        let interior = &self.breaks[1..self.breaks.len() - 1];
        interior.partition_point(|&b| b <= x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.pieces[self.piece_index(x)].eval(x)
    }

    /// Slopes never decrease from one segment to the next (within `tol`).
    pub fn is_convex(&self, tol: f64) -> bool {
        self.pieces.windows(2).all(|w| w[1].slope >= w[0].slope - tol)
    }

    /// Largest value mismatch between neighbouring pieces at interior breaks.
    pub fn continuity_gap(&self) -> f64 {
        self.pieces
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let x = self.breaks[i + 1];
                (w[0].eval(x) - w[1].eval(x)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Accumulates pieces left to right, collapsing collinear neighbours.
struct Builder {
    tol: Tolerances,
    breaks: Vec<f64>,
    pieces: Vec<Affine>,
}

impl Builder {
    fn with_capacity(tol: Tolerances, capacity: usize) -> Self {
        Builder {
            tol,
            breaks: Vec::with_capacity(capacity + 1),
            pieces: Vec::with_capacity(capacity),
        }
    }

    fn push(&mut self, start: f64, piece: Affine) {
        if let Some(last) = self.pieces.last_mut() {
            let last_start = *self.breaks.last().unwrap();
            if (last.slope - piece.slope).abs() <= self.tol.collinear {
                return;
            }
            if start - last_start <= self.tol.crossing {
                // a sliver; the new piece takes over from the same start
                *last = piece;
                if self.pieces.len() >= 2 {
                    let prev = self.pieces[self.pieces.len() - 2];
                    if (prev.slope - piece.slope).abs() <= self.tol.collinear {
                        self.pieces.pop();
                        self.breaks.pop();
                    }
                }
                return;
            }
        }
        self.breaks.push(start);
        self.pieces.push(piece);
    }

    fn finish(mut self) -> PiecewiseAffine {
        self.breaks[0] = 0.0;
        self.breaks.push(1.0);
        PiecewiseAffine {
            breaks: self.breaks,
            pieces: self.pieces,
        }
    }
}

/// Merged breakpoints of two functions, identifying points closer than
/// `tol`.
fn merged_breaks(f: &PiecewiseAffine, g: &PiecewiseAffine, tol: f64) -> Vec<f64> {
    let (a, b) = (&f.breaks, &g.breaks);
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x <= y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        match out.last() {
            Some(&last) if next - last <= tol => {
                if next == 1.0 {
                    *out.last_mut().unwrap() = 1.0;
                }
            }
            _ => out.push(next),
        }
    }
    out
}

/// Walks the merged intervals of `f` and `g`, yielding
/// `(lo, hi, piece of f, piece of g)`.
fn aligned<'a>(
    f: &'a PiecewiseAffine,
    g: &'a PiecewiseAffine,
    tol: f64,
) -> impl Iterator<Item = (f64, f64, Affine, Affine)> + 'a {
    let breaks = merged_breaks(f, g, tol);
    let (mut i, mut j) = (0usize, 0usize);
    (0..breaks.len() - 1).map(move |k| {
        let (lo, hi) = (breaks[k], breaks[k + 1]);
        let mid = 0.5 * (lo + hi);
        while f.breaks[i + 1] < mid {
            i += 1;
        }
        while g.breaks[j + 1] < mid {
            j += 1;
        }
        (lo, hi, f.pieces[i], g.pieces[j])
    })
}

/// Pointwise sum of two functions.
pub fn pw_add(f: &PiecewiseAffine, g: &PiecewiseAffine, tol: Tolerances) -> PiecewiseAffine {
    let mut builder = Builder::with_capacity(tol, f.pieces.len() + g.pieces.len());
    for (lo, _, pf, pg) in aligned(f, g, tol.crossing) {
        builder.push(lo, pf + pg);
    }
    builder.finish()
}

/// Pointwise sum of any number of functions (the zero function when empty).
pub fn pw_sum(fs: &[&PiecewiseAffine], tol: Tolerances) -> PiecewiseAffine {
    match fs {
        [] => PiecewiseAffine::zero(),
        [only] => (*only).clone(),
        [first, second, rest @ ..] => rest
            .iter()
            .fold(pw_add(first, second, tol), |acc, f| pw_add(&acc, f, tol)),
    }
}

/// Pointwise maximum.
pub fn pw_max(f: &PiecewiseAffine, g: &PiecewiseAffine, tol: Tolerances) -> PiecewiseAffine {
    pw_max_regions(f, g, tol).0
}

/// Pointwise maximum, plus the maximal intervals where `f` is strictly above
/// `g`. Where the two agree (within tolerance) `g` is taken, so ties never
/// count toward `f`'s regions.
pub fn pw_max_regions(
    f: &PiecewiseAffine,
    g: &PiecewiseAffine,
    tol: Tolerances,
) -> (PiecewiseAffine, Vec<(f64, f64)>) {
    let mut builder = Builder::with_capacity(tol, f.pieces.len() + g.pieces.len() + 1);
    let mut regions: Vec<(f64, f64)> = Vec::new();
    let f_wins = |lo: f64, hi: f64, regions: &mut Vec<(f64, f64)>| match regions.last_mut() {
        Some(last) if lo - last.1 <= tol.crossing => last.1 = hi,
        _ => regions.push((lo, hi)),
    };
    for (lo, hi, pf, pg) in aligned(f, g, tol.crossing) {
        let d_lo = pf.eval(lo) - pg.eval(lo);
        let d_hi = pf.eval(hi) - pg.eval(hi);
        let scale = 1.0
            + pf.eval(lo).abs().max(pg.eval(lo).abs())
            + pf.eval(hi).abs().max(pg.eval(hi).abs());
        let sign = |d: f64| {
            if d > tol.crossing * scale {
                1
            } else if d < -tol.crossing * scale {
                -1
            } else {
                0
            }
        };
        let (s_lo, s_hi) = (sign(d_lo), sign(d_hi));
        if s_lo * s_hi < 0 {
            let x = (lo + (hi - lo) * d_lo / (d_lo - d_hi)).clamp(lo, hi);
            let (first, second) = if s_lo > 0 { (pf, pg) } else { (pg, pf) };
            builder.push(lo, first);
            builder.push(x, second);
            if s_lo > 0 {
                f_wins(lo, x, &mut regions);
            } else {
                f_wins(x, hi, &mut regions);
            }
        } else if s_lo > 0 || s_hi > 0 {
            builder.push(lo, pf);
            f_wins(lo, hi, &mut regions);
        } else {
            builder.push(lo, pg);
        }
    }
    // drop slivers produced by snapping
    regions.retain(|&(lo, hi)| hi - lo > tol.crossing);
    (builder.finish(), regions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn two_piece(x: f64, s0: f64, s1: f64, c: f64) -> PiecewiseAffine {
        // slope s0 on [0, x], slope s1 after, value c at 0
        let second = Affine::new(s1, c + s0 * x - s1 * x);
        PiecewiseAffine::new(vec![0.0, x, 1.0], vec![Affine::new(s0, c), second], tol()).unwrap()
    }

    #[test]
    fn sum_examples() {
        let f = PiecewiseAffine::affine(1.0, 0.0);
        let g = PiecewiseAffine::affine(-1.0, 1.0);
        let s = pw_sum(&[&f, &g], tol());
        assert_eq!(s.segment_count(), 1);
        assert_eq!(s.eval(0.3), 1.0);

        let h = two_piece(0.4, -1.0, 2.0, 0.5);
        assert_eq!(pw_sum(&[&h, &PiecewiseAffine::zero()], tol()), h);

        let a = two_piece(0.3, 0.0, 1.0, 0.0);
        let b = two_piece(0.7, -1.0, 0.5, 1.0);
        let s = pw_sum(&[&a, &b], tol());
        assert!(s.segment_count() <= 3);
        for x in [0.0, 0.3, 0.5, 0.7, 1.0] {
            assert!((s.eval(x) - (a.eval(x) + b.eval(x))).abs() < 1e-12, "at {x}");
        }
    }

    #[test]
    fn max_examples() {
        let f = PiecewiseAffine::affine(1.0, 0.0);
        let g = PiecewiseAffine::affine(-1.0, 1.0);
        let (m, regions) = pw_max_regions(&f, &g, tol());
        assert_eq!(m.breakpoints(), &[0.0, 0.5, 1.0]);
        assert!((m.eval(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(regions, vec![(0.5, 1.0)]);

        let h = two_piece(0.4, -1.0, 2.0, 0.5);
        let (m, regions) = pw_max_regions(&h, &h, tol());
        assert_eq!(m, h);
        assert!(regions.is_empty());

        let line = PiecewiseAffine::affine(2.0, -1.0);
        let flat = PiecewiseAffine::affine(0.0, -0.2);
        let m = pw_max(&line, &flat, tol());
        assert_eq!(m.segment_count(), 2);
        assert!((m.breakpoints()[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn rejects_discontinuity() {
        let pieces = vec![Affine::new(0.0, 0.0), Affine::new(0.0, 1.0)];
        assert!(PiecewiseAffine::new(vec![0.0, 0.5, 1.0], pieces, tol()).is_err());
        assert!(PiecewiseAffine::new(vec![0.0, 1.0, 0.5], vec![Affine::new(0.0, 0.0); 2], tol()).is_err());
    }

    #[test]
    fn collinear_joints_removed() {
        let pieces = vec![Affine::new(1.0, 0.0), Affine::new(1.0, 0.0)];
        let f = PiecewiseAffine::new(vec![0.0, 0.5, 1.0], pieces, tol()).unwrap();
        assert_eq!(f.segment_count(), 1);
    }

    fn random_convex() -> impl Strategy<Value = PiecewiseAffine> {
        (
            proptest::collection::vec(-3.0f64..3.0, 1..6),
            -1.0f64..1.0,
            proptest::collection::vec(0.01f64..1.0, 5),
        )
            .prop_map(|(mut slopes, c, gaps)| {
                slopes.sort_by(f64::total_cmp);
                let k = slopes.len();
                let total: f64 = gaps[..k].iter().sum();
                let mut breaks = vec![0.0];
                for g in &gaps[..k - 1] {
                    breaks.push(breaks.last().unwrap() + g / total);
                }
                breaks.push(1.0);
                let mut pieces = vec![Affine::new(slopes[0], c)];
                for i in 1..k {
                    let x = breaks[i];
                    let v = pieces[i - 1].eval(x);
                    pieces.push(Affine::new(slopes[i], v - slopes[i] * x));
                }
                // strip coincident breaks produced by tiny gaps
                PiecewiseAffine::new(breaks, pieces, Tolerances::default())
                    .unwrap_or_else(|_| PiecewiseAffine::affine(slopes[0], c))
            })
    }

    proptest! {
        #[test]
        fn sum_and_max_are_pointwise(f in random_convex(), g in random_convex()) {
            let s = pw_sum(&[&f, &g], tol());
            let (m, regions) = pw_max_regions(&f, &g, tol());
            prop_assert!(s.is_convex(1e-9));
            prop_assert!(m.is_convex(1e-9));
            prop_assert!(m.continuity_gap() < 1e-9);
            prop_assert!(m.segment_count() <= f.segment_count() + g.segment_count() + 1);
            for k in 0..=100 {
                let x = k as f64 / 100.0;
                prop_assert!((s.eval(x) - (f.eval(x) + g.eval(x))).abs() < 1e-9);
                prop_assert!((m.eval(x) - f.eval(x).max(g.eval(x))).abs() < 1e-9);
                let inside = regions.iter().any(|&(lo, hi)| lo < x && x < hi);
                if f.eval(x) > g.eval(x) + 1e-9 {
                    prop_assert!(inside || regions.iter().any(|&(lo, hi)| lo <= x && x <= hi));
                }
                if inside {
                    prop_assert!(f.eval(x) >= g.eval(x) - 1e-9);
                }
            }
        }
    }
}
