//! Per-vertex dissimilarity data for the similarity quality.
//!
//! Two sources are supported: an explicit symmetric distance matrix, and
//! per-vertex coordinates whose Euclidean distances are used. Only squared
//! distances are consumed downstream, so the matrix form stores `d²`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::Vertex;

#[derive(Debug, Clone, PartialEq)]
pub enum SimilarityData {
    /// Row-major `n × n` squared distances.
    Matrix { n: usize, squared: Vec<f64> },
    /// Row-major `n × dim` coordinates.
    Euclidean { n: usize, dim: usize, coords: Vec<f64> },
}

impl SimilarityData {
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut squared = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Similarity(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::Similarity(format!("d[{i}][{j}] = {d} is not >= 0")));
                }
                if i == j && d != 0.0 {
                    return Err(Error::Similarity(format!("d[{i}][{i}] = {d} is not 0")));
                }
                if d != rows[j][i] {
                    return Err(Error::Similarity(format!(
                        "d[{i}][{j}] = {d} differs from d[{j}][{i}] = {}",
                        rows[j][i]
                    )));
                }
                squared.push(d * d);
            }
        }
        Ok(SimilarityData::Matrix { n, squared })
    }

    pub fn from_coordinates(points: &[Vec<f64>]) -> Result<Self> {
        let n = points.len();
        let dim = points.first().map_or(0, Vec::len);
        let mut coords = Vec::with_capacity(n * dim);
        for (v, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Similarity(format!(
                    "vertex {v} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            if let Some(x) = p.iter().find(|x| !x.is_finite()) {
                return Err(Error::Similarity(format!("vertex {v} has coordinate {x}")));
            }
            coords.extend_from_slice(p);
        }
        Ok(SimilarityData::Euclidean { n, dim, coords })
    }

    /// Embedding file: lines `vertex x1 … xd`, every vertex exactly once.
    pub fn parse_embedding(text: &str) -> Result<Self> {
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let v = tokens
                .next()
                .and_then(|t| t.parse::<usize>().ok())
                .ok_or_else(|| Error::parse(lineno, "expected a vertex id"))?;
            let xs = tokens
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::parse(lineno, format!("`{t}` is not a number")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push((v, xs));
        }
        let n = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
        let mut points: Vec<Option<Vec<f64>>> = vec![None; n];
        for (v, xs) in rows {
            if points[v].replace(xs).is_some() {
                return Err(Error::Similarity(format!("vertex {v} listed twice")));
            }
        }
        let points = points
            .into_iter()
            .enumerate()
            .map(|(v, p)| p.ok_or_else(|| Error::Similarity(format!("vertex {v} is missing"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_coordinates(&points)
    }

    /// Distance file: a line with `n`, then `n` lines of `n` reals.
    pub fn parse_distances(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (lineno, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing size header"))?;
        let n = header
            .parse::<usize>()
            .map_err(|_| Error::parse(lineno, "size header is not an integer"))?;
        let mut rows = Vec::with_capacity(n);
        for (lineno, line) in lines {
            let row = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::parse(lineno, format!("`{t}` is not a number")))
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != n {
                return Err(Error::parse(
                    lineno,
                    format!("missing distance entries: {} of {n}", row.len()),
                ));
            }
            rows.push(row);
        }
        if rows.len() != n {
            return Err(Error::Similarity(format!(
                "missing distance rows: {} of {n}",
                rows.len()
            )));
        }
        Self::from_matrix(&rows)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self {
            SimilarityData::Matrix { n, .. } => {
                writeln!(out, "{n}").unwrap();
                for i in 0..*n {
                    let row: Vec<String> = (0..*n)
                        .map(|j| format!("{:?}", self.distance(i, j)))
                        .collect();
                    writeln!(out, "{}", row.join(" ")).unwrap();
                }
            }
            SimilarityData::Euclidean { n, .. } => {
                for v in 0..*n {
                    write!(out, "{v}").unwrap();
                    for x in self.point(v) {
                        write!(out, " {x:?}").unwrap();
                    }
                    out.push('\n');
                }
            }
        }
        out
    }

    pub fn vertex_count(&self) -> usize {
        match self {
            SimilarityData::Matrix { n, .. } | SimilarityData::Euclidean { n, .. } => *n,
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self, SimilarityData::Euclidean { .. })
    }

    pub fn dimension(&self) -> Option<usize> {
        match self {
            SimilarityData::Euclidean { dim, .. } => Some(*dim),
            SimilarityData::Matrix { .. } => None,
        }
    }

    /// Coordinates of `v`; empty in matrix mode.
    pub fn point(&self, v: Vertex) -> &[f64] {
        match self {
            SimilarityData::Euclidean { dim, coords, .. } => &coords[v * dim..(v + 1) * dim],
            SimilarityData::Matrix { .. } => &[],
        }
    }

    pub fn squared_distance(&self, i: Vertex, j: Vertex) -> f64 {
        match self {
            SimilarityData::Matrix { n, squared } => squared[i * n + j],
            SimilarityData::Euclidean { .. } => self
                .point(i)
                .iter()
                .zip(self.point(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum(),
        }
    }

    pub fn distance(&self, i: Vertex, j: Vertex) -> f64 {
        self.squared_distance(i, j).sqrt()
    }
}

/// Heterogeneity `σ(C) = (1/|C|) Σ d²` over unordered pairs of `C`.
///
/// With Euclidean data this equals the sum of squared deviations from the
/// centroid, `Σ_i |x_i − μ|²`, which is what gets computed.
pub fn sigma(community: &[Vertex], data: &SimilarityData) -> f64 {
    if community.len() < 2 {
        return 0.0;
    }
    match data {
        SimilarityData::Euclidean { dim, .. } => {
            let mut centroid = vec![0.0; *dim];
            for &v in community {
                for (c, x) in centroid.iter_mut().zip(data.point(v)) {
                    *c += x;
                }
            }
            let size = community.len() as f64;
            centroid.iter_mut().for_each(|c| *c /= size);
            community
                .iter()
                .map(|&v| {
                    data.point(v)
                        .iter()
                        .zip(&centroid)
                        .map(|(x, c)| (x - c) * (x - c))
                        .sum::<f64>()
                })
                .sum()
        }
        SimilarityData::Matrix { .. } => {
            let mut total = 0.0;
            for (k, &i) in community.iter().enumerate() {
                for &j in &community[k + 1..] {
                    total += data.squared_distance(i, j);
                }
            }
            total / community.len() as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> SimilarityData {
        SimilarityData::from_coordinates(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn sigma_examples() {
        let pts = line(&[0.0, 2.0, 1.0]);
        assert_eq!(sigma(&[0], &pts), 0.0);
        assert!((sigma(&[0, 1], &pts) - 2.0).abs() < 1e-12);
        let pts = line(&[0.0, 1.0, 2.0]);
        assert!((sigma(&[0, 1, 2], &pts) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_and_euclidean_agree() {
        let pts = line(&[0.0, 1.0, 2.0, 9.0]);
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| pts.distance(i, j)).collect())
            .collect();
        let matrix = SimilarityData::from_matrix(&rows).unwrap();
        let all = [0, 1, 2, 3];
        assert!((sigma(&all, &pts) - sigma(&all, &matrix)).abs() < 1e-12);
        // brute force over the six pairs: (1+4+81+1+64+49)/4
        assert!((sigma(&all, &matrix) - 200.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_matrices() {
        assert!(SimilarityData::from_matrix(&[vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(SimilarityData::from_matrix(&[vec![1.0, 1.0], vec![1.0, 0.0]]).is_err());
        assert!(SimilarityData::from_matrix(&[vec![0.0, -1.0], vec![-1.0, 0.0]]).is_err());
        assert!(SimilarityData::parse_distances("2\n0 1\n1\n").is_err());
        assert!(SimilarityData::parse_distances("3\n0 1 1\n1 0 1\n").is_err());
    }

    #[test]
    fn file_round_trips() {
        let pts = SimilarityData::parse_embedding("1 0.5 2\n0 -1 3.25\n").unwrap();
        assert_eq!(pts.dimension(), Some(2));
        assert_eq!(pts.point(0), &[-1.0, 3.25]);
        assert_eq!(SimilarityData::parse_embedding(&pts.to_text()).unwrap(), pts);

        let m = SimilarityData::parse_distances("3\n0 1 2\n1 0 1.5\n2 1.5 0\n").unwrap();
        assert_eq!(m.squared_distance(0, 2), 4.0);
        assert_eq!(SimilarityData::parse_distances(&m.to_text()).unwrap(), m);
    }

    proptest! {
        #[test]
        fn euclidean_triangle_inequality(
            pts in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 3), 3)
        ) {
            let data = SimilarityData::from_coordinates(&pts).unwrap();
            let (a, b, c) = (data.distance(0, 1), data.distance(1, 2), data.distance(0, 2));
            prop_assert!(c <= a + b + 1e-9);
            prop_assert!(a <= b + c + 1e-9);
            prop_assert!(b <= a + c + 1e-9);
            prop_assert_eq!(data.distance(0, 1), data.distance(1, 0));
        }

        #[test]
        fn centroid_form_matches_pair_sum(
            pts in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 2), 1..8)
        ) {
            let data = SimilarityData::from_coordinates(&pts).unwrap();
            let members: Vec<usize> = (0..pts.len()).collect();
            let mut pairs = 0.0;
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    pairs += data.squared_distance(i, j);
                }
            }
            let direct = pairs / pts.len() as f64;
            prop_assert!((sigma(&members, &data) - direct).abs() < 1e-9 * (1.0 + direct));
        }
    }
}
