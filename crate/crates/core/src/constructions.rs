//! Parametric graph families with designated start, target and excitations.
//!
//! Vertex ids are laid out spine first (`a = 0`, `v_1..v_m = 1..m`,
//! `b = m + 1`), followed by gadget vertices in nested loop order.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{ExcitationSet, Graph, VertexId};

/// A graph together with start `a`, target `b` and the excited set.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledInstance {
    pub graph: Graph,
    pub a: VertexId,
    pub b: VertexId,
    pub excited: ExcitationSet,
    pub params: BTreeMap<String, u64>,
}

impl LabeledInstance {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Same graph and endpoints with a different excitation set.
    pub fn with_excited(&self, excited: ExcitationSet) -> Self {
        LabeledInstance {
            excited,
            ..self.clone()
        }
    }

    /// Vertex with the given label. Panics if absent; meant for the fixed
    /// labels the generators in this module emit.
    pub fn vertex(&self, label: &str) -> VertexId {
        self.graph
            .find_label(label)
            .unwrap_or_else(|| panic!("no vertex labelled {label:?}"))
    }
}

/// Accumulates vertices and edges, handing out dense ids in creation order.
struct Builder {
    labels: BTreeMap<VertexId, String>,
    edges: Vec<(usize, usize)>,
    next: usize,
}

impl Builder {
    fn new() -> Self {
        Builder {
            labels: BTreeMap::new(),
            edges: Vec::new(),
            next: 0,
        }
    }

    fn vertex(&mut self, label: impl Into<String>) -> usize {
        let id = self.next;
        self.labels.insert(VertexId(id), label.into());
        self.next += 1;
        id
    }

    fn edge(&mut self, u: usize, v: usize) {
        self.edges.push((u, v));
    }

    fn finish(
        self,
        a: usize,
        b: usize,
        excited: &[usize],
        params: &[(&str, u64)],
    ) -> Result<LabeledInstance> {
        let graph = Graph::build(self.next, &self.edges, self.labels)?;
        let excited = ExcitationSet::new(&graph, excited.iter().map(|&v| VertexId(v)))?;
        Ok(LabeledInstance {
            graph,
            a: VertexId(a),
            b: VertexId(b),
            excited,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        })
    }
}

/// Spine `a, v_1, .., v_m, b`; returns the builder and the spine ids.
fn spine(m: usize) -> (Builder, usize, Vec<usize>, usize) {
    let mut bld = Builder::new();
    let a = bld.vertex("a");
    let vs: Vec<usize> = (1..=m).map(|i| bld.vertex(format!("v{i}"))).collect();
    let b = bld.vertex("b");
    let mut prev = a;
    for &v in vs.iter().chain(std::iter::once(&b)) {
        bld.edge(prev, v);
        prev = v;
    }
    (bld, a, vs, b)
}

pub fn isqrt(k: u64) -> u64 {
    let mut m = (k as f64).sqrt() as u64;
    while m * m > k {
        m -= 1;
    }
    while (m + 1) * (m + 1) <= k {
        m += 1;
    }
    m
}

/// Single excitation at `a`; each `v_i` is joined to `a` by `k` internally
/// disjoint paths of length `i + 1`, with `m = floor(sqrt(k))`.
pub fn unbounded_construction(k: u64) -> Result<LabeledInstance> {
    if k < 1 {
        return Err(Error::Domain("unbounded construction needs k >= 1".into()));
    }
    unbounded_construction_with_m(k, isqrt(k))
}

/// As [`unbounded_construction`] with the spine length chosen independently.
pub fn unbounded_construction_with_m(k: u64, m: u64) -> Result<LabeledInstance> {
    if k < 1 || m < 1 {
        return Err(Error::Domain("unbounded construction needs k, m >= 1".into()));
    }
    let (mut bld, a, vs, b) = spine(m as usize);
    for (idx, &v) in vs.iter().enumerate() {
        let i = idx + 1;
        for l in 1..=k {
            let mut prev = a;
            // r_{t,i,l}: t-th internal vertex (counted from a) of the l-th path to v_i
            for t in 1..=i {
                let r = bld.vertex(format!("r_{t}_{i}_{l}"));
                bld.edge(prev, r);
                prev = r;
            }
            bld.edge(prev, v);
        }
    }
    bld.finish(a, b, &[a], &[("k", k), ("m", m)])
}

/// Maximum degree 3; a path of length `2m + 2` hangs off every `v_i` and
/// its far ends `s_1..s_m` are chained back to `a`. Excited: `a` and all `s_i`.
pub fn bounded_construction(m: u64) -> Result<LabeledInstance> {
    if m < 1 {
        return Err(Error::Domain("bounded construction needs m >= 1".into()));
    }
    let (mut bld, a, vs, b) = spine(m as usize);
    let mut ss = Vec::with_capacity(vs.len());
    for (idx, &v) in vs.iter().enumerate() {
        let i = idx + 1;
        let s = bld.vertex(format!("s{i}"));
        let mut prev = s;
        for j in 1..=2 * m + 1 {
            let r = bld.vertex(format!("r_{i}_{j}"));
            bld.edge(prev, r);
            prev = r;
        }
        bld.edge(prev, v);
        ss.push(s);
    }
    bld.edge(a, ss[0]);
    for w in ss.windows(2) {
        bld.edge(w[0], w[1]);
    }
    let excited: Vec<usize> = std::iter::once(a).chain(ss).collect();
    bld.finish(a, b, &excited, &[("m", m)])
}

/// `a` and `b` joined by a 2-path through `w` and a 3-path through `u1, u2`;
/// `w` also touches one vertex of a clique. Excited: `a`.
pub fn trap_construction(clique_size: u64) -> Result<LabeledInstance> {
    if clique_size < 3 {
        return Err(Error::Domain("trap construction needs clique size >= 3".into()));
    }
    let mut bld = Builder::new();
    let a = bld.vertex("a");
    let w = bld.vertex("w");
    let b = bld.vertex("b");
    let u1 = bld.vertex("u1");
    let u2 = bld.vertex("u2");
    let clique: Vec<usize> = (1..=clique_size).map(|i| bld.vertex(format!("c{i}"))).collect();
    for (x, y) in [(a, w), (w, b), (a, u1), (u1, u2), (u2, b), (w, clique[0])] {
        bld.edge(x, y);
    }
    for (i, &x) in clique.iter().enumerate() {
        for &y in &clique[i + 1..] {
            bld.edge(x, y);
        }
    }
    bld.finish(a, b, &[a], &[("clique", clique_size)])
}

/// The interval `0, 1, .., n` with `a = 0`, `b = n` and no excitation.
pub fn path_construction(n: u64) -> Result<LabeledInstance> {
    if n < 1 {
        return Err(Error::Domain("path construction needs n >= 1".into()));
    }
    let mut bld = Builder::new();
    let ids: Vec<usize> = (0..=n).map(|i| bld.vertex(i.to_string())).collect();
    for w in ids.windows(2) {
        bld.edge(w[0], w[1]);
    }
    bld.finish(ids[0], ids[n as usize], &[], &[("n", n)])
}

/// Graph family selector used by the command line and the sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Construction {
    Unbounded,
    Bounded,
    Trap,
    Path,
}

impl Construction {
    pub fn build(self, param: u64) -> Result<LabeledInstance> {
        match self {
            Construction::Unbounded => unbounded_construction(param),
            Construction::Bounded => bounded_construction(param),
            Construction::Trap => trap_construction(param),
            Construction::Path => path_construction(param),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Construction::Unbounded => "unbounded",
            Construction::Bounded => "bounded",
            Construction::Trap => "trap",
            Construction::Path => "path",
        }
    }

    /// Name of the size parameter (`k`, `m`, `clique`, `n`).
    pub fn param_name(self) -> &'static str {
        match self {
            Construction::Unbounded => "k",
            Construction::Bounded => "m",
            Construction::Trap => "clique",
            Construction::Path => "n",
        }
    }
}

impl std::str::FromStr for Construction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unbounded" => Ok(Construction::Unbounded),
            "bounded" => Ok(Construction::Bounded),
            "trap" => Ok(Construction::Trap),
            "path" => Ok(Construction::Path),
            other => Err(Error::InvalidInput(format!("unknown construction {other:?}"))),
        }
    }
}

/// Closed-form vertex count of [`unbounded_construction`].
pub fn unbounded_vertex_count(k: u64) -> u64 {
    let m = isqrt(k);
    2 + m + k * m * (m + 1) / 2
}

/// Closed-form vertex count of [`bounded_construction`].
pub fn bounded_vertex_count(m: u64) -> u64 {
    2 + m * (2 * m + 3)
}
