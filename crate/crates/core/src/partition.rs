//! Partitions of the vertex set into disjoint communities.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::Vertex;

/// A partition in canonical form: communities are sorted vertex lists,
/// numbered in increasing order of their smallest member. Two partitions of
/// the same vertex set are equal iff they group vertices identically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    community_of: Vec<usize>,
    communities: Vec<Vec<Vertex>>,
}

impl Partition {
    /// Groups vertices by label. Labels are arbitrary; the result is
    /// relabeled `0..k` by smallest member vertex.
    pub fn from_assignment<L: Eq + std::hash::Hash + Copy>(labels: &[L]) -> Self {
        let mut ids: HashMap<L, usize> = HashMap::new();
        let mut communities: Vec<Vec<Vertex>> = Vec::new();
        let mut community_of = Vec::with_capacity(labels.len());
        for (v, label) in labels.iter().enumerate() {
            let next = communities.len();
            let id = *ids.entry(*label).or_insert(next);
            if id == next {
                communities.push(Vec::new());
            }
            communities[id].push(v);
            community_of.push(id);
        }
        // scanning vertices in order already numbers communities by first member
        Partition {
            community_of,
            communities,
        }
    }

    /// Like [`Partition::from_assignment`] but checks the label count.
    pub fn from_labels<L: Eq + std::hash::Hash + Copy>(labels: &[L], n: usize) -> Result<Self> {
        if labels.len() != n {
            return Err(Error::Partition(format!(
                "{} labels for {n} vertices",
                labels.len()
            )));
        }
        Ok(Self::from_assignment(labels))
    }

    /// Builds a partition from explicit communities, checking that they are
    /// nonempty, pairwise disjoint and cover `0..n`.
    pub fn from_communities(n: usize, communities: &[Vec<Vertex>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (c, members) in communities.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::Partition(format!("community {c} is empty")));
            }
            for &v in members {
                if v >= n {
                    return Err(Error::Partition(format!("vertex {v} outside 0..{n}")));
                }
                if labels[v] != usize::MAX {
                    return Err(Error::Partition(format!(
                        "vertex {v} belongs to two communities"
                    )));
                }
                labels[v] = c;
            }
        }
        if let Some(v) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::Partition(format!("vertex {v} is not covered")));
        }
        Ok(Self::from_assignment(&labels))
    }

    pub fn singletons(n: usize) -> Self {
        Self::from_assignment(&(0..n).collect::<Vec<_>>())
    }

    pub fn whole(n: usize) -> Self {
        Self::from_assignment(&vec![0usize; n])
    }

    /// Parses lines `vertex community_id`; every vertex `0..n` must appear
    /// exactly once (`n` = largest vertex + 1).
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs: Vec<(usize, i64)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != 2 {
                return Err(Error::parse(lineno, "expected `vertex community_id`"));
            }
            let v = tokens[0]
                .parse::<usize>()
                .map_err(|_| Error::parse(lineno, format!("`{}` is not a vertex id", tokens[0])))?;
            let c = tokens[1].parse::<i64>().map_err(|_| {
                Error::parse(lineno, format!("`{}` is not a community id", tokens[1]))
            })?;
            pairs.push((v, c));
        }
        let n = pairs.iter().map(|p| p.0 + 1).max().unwrap_or(0);
        let mut labels: Vec<Option<i64>> = vec![None; n];
        for &(v, c) in &pairs {
            if labels[v].replace(c).is_some() {
                return Err(Error::Partition(format!("vertex {v} listed twice")));
            }
        }
        let labels = labels
            .into_iter()
            .enumerate()
            .map(|(v, l)| l.ok_or_else(|| Error::Partition(format!("vertex {v} is missing"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_assignment(&labels))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (v, c) in self.community_of.iter().enumerate() {
            writeln!(out, "{v} {c}").unwrap();
        }
        out
    }

    pub fn vertex_count(&self) -> usize {
        self.community_of.len()
    }

    pub fn community_count(&self) -> usize {
        self.communities.len()
    }

    pub fn communities(&self) -> &[Vec<Vertex>] {
        &self.communities
    }

    pub fn community_of(&self, v: Vertex) -> usize {
        self.community_of[v]
    }

    pub fn labels(&self) -> &[usize] {
        &self.community_of
    }

    pub fn is_singletons(&self) -> bool {
        self.communities.len() == self.community_of.len()
    }

    pub fn is_whole(&self) -> bool {
        self.communities.len() == 1
    }

    /// `self ⪯ coarser`: every community of `self` lies inside one community
    /// of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.vertex_count() == coarser.vertex_count()
            && self.communities.iter().all(|c| {
                let target = coarser.community_of(c[0]);
                c.iter().all(|&v| coarser.community_of(v) == target)
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_examples() {
        let p = Partition::from_assignment(&[0, 0, 1, 1]);
        assert_eq!(p.communities(), &[vec![0, 1], vec![2, 3]]);
        assert_eq!(p.community_count(), 2);

        let p = Partition::from_assignment(&[5, 5, 5]);
        assert_eq!(p.communities(), &[vec![0, 1, 2]]);

        let p = Partition::from_assignment(&[0, 1, 0, 1]);
        assert_eq!(p.communities(), &[vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn relabels_by_smallest_member() {
        let p = Partition::from_assignment(&[7, 3, 7, 9]);
        assert_eq!(p.labels(), &[0, 1, 0, 2]);
        assert_eq!(p, Partition::from_assignment(&[1, 2, 1, 0]));
    }

    #[test]
    fn label_count_mismatch() {
        assert!(Partition::from_labels(&[0, 1], 3).is_err());
    }

    #[test]
    fn communities_must_cover() {
        assert!(Partition::from_communities(3, &[vec![0, 1]]).is_err());
        assert!(Partition::from_communities(3, &[vec![0, 1], vec![1, 2]]).is_err());
        let p = Partition::from_communities(3, &[vec![2], vec![1, 0]]).unwrap();
        assert_eq!(p.communities(), &[vec![0, 1], vec![2]]);
    }

    #[test]
    fn refinement() {
        let fine = Partition::from_assignment(&[0, 0, 1, 2]);
        let coarse = Partition::from_assignment(&[0, 0, 1, 1]);
        assert!(fine.refines(&coarse));
        assert!(!coarse.refines(&fine));
        assert!(Partition::singletons(4).refines(&fine));
        assert!(coarse.refines(&Partition::whole(4)));
    }

    #[test]
    fn parse_and_serialize() {
        let p = Partition::parse("# labels\n0 4\n2 4\n1 -1\n").unwrap();
        assert_eq!(p.communities(), &[vec![0, 2], vec![1]]);
        assert_eq!(Partition::parse(&p.to_text()).unwrap(), p);
        assert!(Partition::parse("0 1\n2 1\n").is_err());
        assert!(Partition::parse("0 1\n0 2\n").is_err());
    }
}
