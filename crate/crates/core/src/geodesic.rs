//! Distances to the target and the forced step taken from excited vertices.

use std::collections::VecDeque;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{ExcitationSet, Graph, VertexId};

/// Unweighted graph distance from every vertex to a fixed target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceField {
    target: VertexId,
    dist: Vec<usize>,
}

impl DistanceField {
    pub fn target(&self) -> VertexId {
        self.target
    }

    #[inline]
    pub fn get(&self, v: VertexId) -> usize {
        self.dist[v.0]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.dist
    }
}

/// Breadth-first distances to `target`. Fails if any vertex cannot reach it.
pub fn bfs_distances(g: &Graph, target: VertexId) -> Result<DistanceField> {
    if target.0 >= g.n() {
        return Err(Error::EndpointOutOfRange {
            vertex: target.0,
            n: g.n(),
        });
    }
    let mut dist = vec![usize::MAX; g.n()];
    dist[target.0] = 0;
    let mut queue = VecDeque::from([target]);
    while let Some(u) = queue.pop_front() {
        for &w in g.neighbors(u) {
            if dist[w.0] == usize::MAX {
                dist[w.0] = dist[u.0] + 1;
                queue.push_back(w);
            }
        }
    }
    if let Some(v) = dist.iter().position(|&d| d == usize::MAX) {
        return Err(Error::DisconnectedGraph(VertexId(v)));
    }
    Ok(DistanceField { target, dist })
}

/// Which distance-decreasing neighbor an excited vertex steps to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieBreak {
    #[default]
    SmallestId,
    LargestId,
}

impl FromStr for TieBreak {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" | "smallest-id" => Ok(TieBreak::SmallestId),
            "max" | "largest-id" => Ok(TieBreak::LargestId),
            other => Err(Error::InvalidInput(format!("unknown tie-break rule {other:?}"))),
        }
    }
}

/// Forced next vertex for every excited vertex other than the target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BiasMap {
    target: VertexId,
    forced: Vec<Option<VertexId>>,
}

impl BiasMap {
    pub fn target(&self) -> VertexId {
        self.target
    }

    #[inline]
    pub fn forced_step(&self, v: VertexId) -> Option<VertexId> {
        self.forced[v.0]
    }

    /// `(excited, next)` pairs in increasing vertex order.
    pub fn entries(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.forced
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.map(|y| (VertexId(i), y)))
    }

    pub fn len(&self) -> usize {
        self.forced.iter().filter(|f| f.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of vertices the map is defined over.
    pub fn n(&self) -> usize {
        self.forced.len()
    }
}

pub fn bias_map(g: &Graph, field: &DistanceField, excited: &ExcitationSet) -> BiasMap {
    bias_map_with(g, field, excited, TieBreak::SmallestId)
}

pub fn bias_map_with(
    g: &Graph,
    field: &DistanceField,
    excited: &ExcitationSet,
    rule: TieBreak,
) -> BiasMap {
    let mut forced = vec![None; g.n()];
    for x in excited.iter().filter(|&x| x != field.target) {
        let want = field.get(x) - 1;
        let mut closer = g.neighbors(x).iter().copied().filter(|&y| field.get(y) == want);
        // Neighbor lists are sorted, so first/last are the smallest/largest id.
        forced[x.0] = match rule {
            TieBreak::SmallestId => closer.next(),
            TieBreak::LargestId => closer.next_back(),
        };
    }
    BiasMap {
        target: field.target,
        forced,
    }
}

/// Convenience wrapper: distances to `target` followed by the forced-step map.
pub fn compute_bias(
    g: &Graph,
    target: VertexId,
    excited: &ExcitationSet,
    rule: TieBreak,
) -> Result<(DistanceField, BiasMap)> {
    let field = bfs_distances(g, target)?;
    let bias = bias_map_with(g, &field, excited, rule);
    Ok((field, bias))
}

/// True when every excited vertex has exactly one distance-decreasing neighbor,
/// so the forced step does not depend on the tie-break rule.
pub fn is_tie_free(g: &Graph, field: &DistanceField, excited: &ExcitationSet) -> bool {
    excited.iter().filter(|&x| x != field.target).all(|x| {
        g.neighbors(x)
            .iter()
            .filter(|&&y| field.get(y) + 1 == field.get(x))
            .count()
            == 1
    })
}
