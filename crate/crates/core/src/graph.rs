//! Immutable simple undirected graphs over dense vertex ids.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense vertex index in `[0, n)`.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct VertexId(pub usize);

impl VertexId {
    #[inline]
    pub const fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<usize> for VertexId {
    fn from(i: usize) -> Self {
        VertexId(i)
    }
}

/// A simple undirected graph in compressed adjacency form.
///
/// Neighbor lists are sorted ascending, which is the canonical form every
/// tie-breaking rule downstream relies on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<VertexId>,
    labels: BTreeMap<VertexId, String>,
}

impl Graph {
    /// Builds a canonical graph from an unordered edge list.
    ///
    /// Duplicate edges (in either orientation) and self-loops are rejected.
    pub fn build(
        n: usize,
        edges: &[(usize, usize)],
        labels: BTreeMap<VertexId, String>,
    ) -> Result<Self> {
        let mut adjacency: Vec<Vec<VertexId>> = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::EndpointOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(VertexId(u)));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::DuplicateEdge(VertexId(u), VertexId(v)));
            }
            adjacency[u].push(VertexId(v));
            adjacency[v].push(VertexId(u));
        }
        if let Some((&id, _)) = labels.iter().find(|(id, _)| id.0 >= n) {
            return Err(Error::EndpointOutOfRange { vertex: id.0, n });
        }

        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::with_capacity(2 * edges.len());
        offsets.push(0);
        for mut list in adjacency {
            list.sort_unstable();
            neighbors.extend(list);
            offsets.push(neighbors.len());
        }
        Ok(Graph {
            offsets,
            neighbors,
            labels,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.neighbors[self.offsets[v.0]..self.offsets[v.0 + 1]]
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        self.offsets[v.0 + 1] - self.offsets[v.0]
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.n()).map(VertexId)
    }

    /// Each edge once, as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.vertices().flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v > u)
                .map(move |&v| (u, v))
        })
    }

    pub fn labels(&self) -> &BTreeMap<VertexId, String> {
        &self.labels
    }

    pub fn label(&self, v: VertexId) -> Option<&str> {
        self.labels.get(&v).map(String::as_str)
    }

    /// Label if present, otherwise the numeric id.
    pub fn display_name(&self, v: VertexId) -> String {
        self.label(v)
            .map(str::to_owned)
            .unwrap_or_else(|| v.to_string())
    }

    pub fn find_label(&self, name: &str) -> Option<VertexId> {
        self.labels
            .iter()
            .find(|(_, l)| l.as_str() == name)
            .map(|(&v, _)| v)
    }

    pub fn validate(&self) -> ValidationReport {
        let n = self.n();
        let max_degree = self.vertices().map(|v| self.degree(v)).max().unwrap_or(0);
        let mut degree_histogram = vec![0; max_degree + 1];
        for v in self.vertices() {
            degree_histogram[self.degree(v)] += 1;
        }
        let connected = n == 0 || self.reachable_from(VertexId(0)).iter().all(|&r| r);
        ValidationReport {
            connected,
            max_degree,
            degree_histogram,
        }
    }

    fn reachable_from(&self, start: VertexId) -> Vec<bool> {
        let mut seen = vec![false; self.n()];
        let mut queue = VecDeque::from([start]);
        seen[start.0] = true;
        while let Some(u) = queue.pop_front() {
            for &w in self.neighbors(u) {
                if !seen[w.0] {
                    seen[w.0] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }
}

/// Structural summary of a graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub connected: bool,
    pub max_degree: usize,
    /// `degree_histogram[d]` is the number of vertices of degree `d`.
    pub degree_histogram: Vec<usize>,
}

/// The set of excited vertices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExcitationSet {
    members: BTreeSet<VertexId>,
}

impl ExcitationSet {
    pub fn new(g: &Graph, members: impl IntoIterator<Item = VertexId>) -> Result<Self> {
        let members: BTreeSet<VertexId> = members.into_iter().collect();
        if let Some(v) = members.iter().find(|v| v.0 >= g.n()) {
            return Err(Error::EndpointOutOfRange {
                vertex: v.0,
                n: g.n(),
            });
        }
        Ok(ExcitationSet { members })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.members.contains(&v)
    }

    pub fn iter(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.members.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}
