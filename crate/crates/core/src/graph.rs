//! Undirected simple graphs over dense vertex ids.
//!
//! Edge-list text format: one `u v` pair per line, `#` starts a comment, and
//! an optional `n <count>` line fixes the vertex count (otherwise it is the
//! largest id plus one). Lines with a third column are rejected since only
//! unweighted graphs are supported.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type Vertex = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<Vertex>>,
    edges: Vec<(Vertex, Vertex)>,
}

impl Graph {
    /// Builds a graph from an edge list. Each edge is stored once with its
    /// smaller endpoint first; adjacency lists are sorted.
    pub fn from_edges(vertex_count: usize, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); vertex_count];
        let mut normalized = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= vertex_count || v >= vertex_count {
                return Err(Error::Graph(format!(
                    "edge {u}-{v} has an endpoint outside 0..{vertex_count}"
                )));
            }
            if u == v {
                return Err(Error::Graph(format!("self-loop on vertex {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Graph(format!(
                "duplicate edge {}-{}",
                w[0].0, w[0].1
            )));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph {
            adjacency,
            edges: normalized,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut declared: Option<usize> = None;
        let mut edges = Vec::new();
        let mut seen = std::collections::HashMap::new();
        let mut max_id: Option<usize> = None;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens[0] == "n" {
                if tokens.len() != 2 || declared.is_some() || !edges.is_empty() {
                    return Err(Error::parse(lineno, "malformed vertex-count header"));
                }
                let count = tokens[1]
                    .parse::<usize>()
                    .map_err(|_| Error::parse(lineno, "vertex count is not an integer"))?;
                declared = Some(count);
                continue;
            }
            match tokens.len() {
                2 => {}
                3 => {
                    return Err(Error::parse(
                        lineno,
                        "weighted edges are not supported (expected `u v`)",
                    ))
                }
                _ => return Err(Error::parse(lineno, "expected `u v`")),
            }
            let parse_id = |t: &str| {
                t.parse::<usize>()
                    .map_err(|_| Error::parse(lineno, format!("`{t}` is not a vertex id")))
            };
            let u = parse_id(tokens[0])?;
            let v = parse_id(tokens[1])?;
            if u == v {
                return Err(Error::parse(lineno, format!("self-loop on vertex {u}")));
            }
            let key = (u.min(v), u.max(v));
            if let Some(first) = seen.insert(key, lineno) {
                return Err(Error::parse(
                    lineno,
                    format!("duplicate edge {}-{} (first on line {first})", key.0, key.1),
                ));
            }
            max_id = Some(max_id.map_or(key.1, |m: usize| m.max(key.1)));
            edges.push((u, v));
        }
        let n = match (declared, max_id) {
            (Some(n), Some(m)) if m >= n => {
                return Err(Error::Graph(format!(
                    "vertex id {m} exceeds declared count {n}"
                )))
            }
            (Some(n), _) => n,
            (None, Some(m)) => m + 1,
            (None, None) => 0,
        };
        Graph::from_edges(n, &edges)
    }

    /// Serializes with an explicit `n` header so isolated trailing vertices
    /// survive a round trip.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "n {}", self.vertex_count()).unwrap();
        for &(u, v) in &self.edges {
            writeln!(out, "{u} {v}").unwrap();
        }
        out
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adjacency[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adjacency[v]
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }
}
