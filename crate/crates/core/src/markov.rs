//! Exact numerics for the geodesic-biased walk.
//!
//! Every quantity here comes from a first-step linear system over the
//! transient vertices, solved either in floating point (sparse LU plus
//! iterative refinement, backward error reported) or exactly over the
//! rationals. The two share the system assembly but not the arithmetic, and the
//! rational result is certified by exact substitution.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::constructions::bounded_construction;
use crate::error::{Error, Result};
use crate::geodesic::{compute_bias, BiasMap, DistanceField, TieBreak};
use crate::graph::{ExcitationSet, Graph, VertexId};
use crate::linalg::{Arithmetic, SparseMatrix};

/// Exact transition probability; denominators are vertex degrees.
pub type Prob = Ratio<u64>;

/// Largest graph the rational solver is offered for.
pub const EXACT_MAX_N: usize = 2000;

pub const DEFAULT_TOL: f64 = 1e-9;

/// Row-stochastic transition matrix with exact entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionMatrix {
    rows: Vec<Vec<(VertexId, Prob)>>,
    absorbing: BTreeSet<VertexId>,
}

impl TransitionMatrix {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, x: VertexId) -> &[(VertexId, Prob)] {
        &self.rows[x.0]
    }

    pub fn prob(&self, x: VertexId, y: VertexId) -> Prob {
        self.row(x)
            .iter()
            .find(|(z, _)| *z == y)
            .map_or_else(Prob::zero, |(_, p)| *p)
    }

    pub fn is_absorbing(&self, x: VertexId) -> bool {
        self.absorbing.contains(&x)
    }

    pub fn absorbing(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.absorbing.iter().copied()
    }

    /// Exact row sum, before any float conversion.
    pub fn row_sum(&self, x: VertexId) -> Prob {
        self.row(x).iter().map(|(_, p)| *p).sum()
    }

    pub fn row_f64(&self, x: VertexId) -> Vec<(VertexId, f64)> {
        self.row(x)
            .iter()
            .map(|(y, p)| (*y, p.to_f64().unwrap_or(f64::NAN)))
            .collect()
    }

    /// Same dynamics with `states` made absorbing.
    fn absorbed_at(&self, states: impl IntoIterator<Item = VertexId>) -> Self {
        let mut tm = self.clone();
        for s in states {
            tm.rows[s.0] = vec![(s, Prob::one())];
            tm.absorbing.insert(s);
        }
        tm
    }

    /// Vertices that reach some vertex of `goal` with positive probability.
    fn can_reach(&self, goal: &[bool]) -> Vec<bool> {
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); self.n()];
        for (x, row) in self.rows.iter().enumerate() {
            for (y, p) in row {
                if !p.is_zero() && y.0 != x {
                    rev[y.0].push(x);
                }
            }
        }
        let mut seen = goal.to_vec();
        let mut queue: VecDeque<usize> = (0..self.n()).filter(|&i| goal[i]).collect();
        while let Some(y) = queue.pop_front() {
            for &x in &rev[y] {
                if !seen[x] && !goal[x] {
                    seen[x] = true;
                    queue.push_back(x);
                }
            }
        }
        seen
    }
}

/// A graph, a target and the forced steps of the excited vertices.
///
/// Dynamics: excited non-target vertices take their forced step, every other
/// vertex (the target included, when the walk is not stopped there) moves to a
/// uniform neighbour.
#[derive(Clone, Debug)]
pub struct GeodesicWalk<'g> {
    graph: &'g Graph,
    field: DistanceField,
    bias: BiasMap,
}

impl<'g> GeodesicWalk<'g> {
    pub fn new(graph: &'g Graph, target: VertexId, excited: &ExcitationSet) -> Result<Self> {
        Self::with_tie_break(graph, target, excited, TieBreak::default())
    }

    pub fn with_tie_break(
        graph: &'g Graph,
        target: VertexId,
        excited: &ExcitationSet,
        rule: TieBreak,
    ) -> Result<Self> {
        let (field, bias) = compute_bias(graph, target, excited, rule)?;
        Ok(GeodesicWalk { graph, field, bias })
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn target(&self) -> VertexId {
        self.field.target()
    }

    pub fn distances(&self) -> &DistanceField {
        &self.field
    }

    pub fn bias(&self) -> &BiasMap {
        &self.bias
    }

    fn move_row(&self, x: VertexId) -> Vec<(VertexId, Prob)> {
        match self.bias.forced_step(x) {
            Some(y) => vec![(y, Prob::one())],
            None => {
                let d = self.graph.degree(x) as u64;
                self.graph
                    .neighbors(x)
                    .iter()
                    .map(|&y| (y, Prob::new(1, d)))
                    .collect()
            }
        }
    }

    /// Dynamics without stopping anywhere.
    pub fn free_matrix(&self) -> TransitionMatrix {
        TransitionMatrix {
            rows: self.graph.vertices().map(|x| self.move_row(x)).collect(),
            absorbing: BTreeSet::new(),
        }
    }

    /// The walk stopped at the target.
    pub fn transition_matrix(&self) -> TransitionMatrix {
        self.free_matrix().absorbed_at([self.target()])
    }

    /// Expected hitting times of the target (walk stopped there).
    pub fn hitting_times(&self, tol: f64) -> Result<HittingSolution> {
        self.hitting_times_to(self.target(), tol)
    }

    /// Expected hitting times of `goal` under the same biased dynamics.
    pub fn hitting_times_to(&self, goal: VertexId, tol: f64) -> Result<HittingSolution> {
        let (times, residual) = hitting_in::<f64>(&self.free_matrix(), goal, tol)?;
        Ok(HittingSolution {
            target: goal,
            times,
            residual,
        })
    }

    /// Rational counterpart of [`Self::hitting_times_to`].
    pub fn hitting_times_exact(&self, goal: VertexId) -> Result<Vec<BigRational>> {
        self.check_exact_size()?;
        hitting_in::<BigRational>(&self.free_matrix(), goal, 0.0).map(|(t, _)| t)
    }

    /// Probability of reaching `reach` before `avoid`, walk stopped at the target.
    pub fn absorption(
        &self,
        avoid: &[VertexId],
        reach: &[VertexId],
        tol: f64,
    ) -> Result<AbsorptionSolution> {
        let (q, residual) = absorption_in::<f64>(&self.transition_matrix(), avoid, reach, tol)?;
        Ok(AbsorptionSolution {
            avoid: avoid.to_vec(),
            reach: reach.to_vec(),
            q,
            residual,
        })
    }

    pub fn absorption_exact(&self, avoid: &[VertexId], reach: &[VertexId]) -> Result<Vec<BigRational>> {
        self.check_exact_size()?;
        absorption_in::<BigRational>(&self.transition_matrix(), avoid, reach, 0.0).map(|(q, _)| q)
    }

    /// Chain of successive distinct visits to `states`.
    pub fn induce_chain(
        &self,
        states: &[VertexId],
        absorbing: &[VertexId],
        tol: f64,
    ) -> Result<InducedChain> {
        let (m, residual) = induce_in::<f64>(&self.transition_matrix(), states, absorbing, tol)?;
        Ok(InducedChain {
            states: states.to_vec(),
            matrix: m,
            absorbing: absorbing_with_target(states, absorbing, self.target()),
            residual,
        })
    }

    pub fn induce_chain_exact(
        &self,
        states: &[VertexId],
        absorbing: &[VertexId],
    ) -> Result<Vec<Vec<BigRational>>> {
        self.check_exact_size()?;
        induce_in::<BigRational>(&self.transition_matrix(), states, absorbing, 0.0).map(|(m, _)| m)
    }

    fn check_exact_size(&self) -> Result<()> {
        if self.graph.n() > EXACT_MAX_N {
            return Err(Error::InvalidInput(format!(
                "exact rational mode is limited to {EXACT_MAX_N} vertices, graph has {}",
                self.graph.n()
            )));
        }
        Ok(())
    }
}

fn absorbing_with_target(states: &[VertexId], absorbing: &[VertexId], target: VertexId) -> Vec<VertexId> {
    let mut out: Vec<VertexId> = absorbing.to_vec();
    if states.contains(&target) && !out.contains(&target) {
        out.push(target);
    }
    out
}

/// Expected hitting times of a single vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct HittingSolution {
    pub target: VertexId,
    pub times: Vec<f64>,
    /// Componentwise backward error of the linear solve.
    pub residual: f64,
}

impl HittingSolution {
    pub fn time(&self, from: VertexId) -> f64 {
        self.times[from.0]
    }
}

/// Probability of hitting `reach` before `avoid`, per start vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct AbsorptionSolution {
    pub avoid: Vec<VertexId>,
    pub reach: Vec<VertexId>,
    pub q: Vec<f64>,
    pub residual: f64,
}

impl AbsorptionSolution {
    pub fn prob(&self, from: VertexId) -> f64 {
        self.q[from.0]
    }
}

/// Transition matrix of the walk watched only on `states`.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedChain {
    pub states: Vec<VertexId>,
    /// `matrix[i][j]`: probability that the next state visited after `states[i]`
    /// (other than `states[i]` itself) is `states[j]`.
    pub matrix: Vec<Vec<f64>>,
    pub absorbing: Vec<VertexId>,
    pub residual: f64,
}

impl InducedChain {
    pub fn index_of(&self, v: VertexId) -> Option<usize> {
        self.states.iter().position(|&s| s == v)
    }

    pub fn entry(&self, from: VertexId, to: VertexId) -> f64 {
        match (self.index_of(from), self.index_of(to)) {
            (Some(i), Some(j)) => self.matrix[i][j],
            _ => 0.0,
        }
    }

    /// Probability that the induced chain started at `start` is absorbed in
    /// `reach` rather than elsewhere, by a dense solve over its states.
    pub fn absorption(&self, start: VertexId, reach: &[VertexId]) -> Result<f64> {
        let k = self.states.len();
        let is_abs = |i: usize| self.absorbing.contains(&self.states[i]);
        let transient: Vec<usize> = (0..k).filter(|&i| !is_abs(i)).collect();
        let pos: BTreeMap<usize, usize> = transient.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        let rows = transient
            .iter()
            .map(|&i| {
                let mut r = vec![(pos[&i], 1.0)];
                for (j, &mij) in self.matrix[i].iter().enumerate() {
                    if let Some(&pj) = pos.get(&j) {
                        r.push((pj, -mij));
                    }
                }
                r
            })
            .collect();
        let rhs: Vec<f64> = transient
            .iter()
            .map(|&i| {
                (0..k)
                    .filter(|&j| is_abs(j) && reach.contains(&self.states[j]))
                    .map(|j| self.matrix[i][j])
                    .sum()
            })
            .collect();
        let i0 = self
            .index_of(start)
            .ok_or_else(|| Error::InvalidInput(format!("{start} is not an induced state")))?;
        if is_abs(i0) {
            return Ok(if reach.contains(&start) { 1.0 } else { 0.0 });
        }
        let f = f64::factor(SparseMatrix::from_rows(rows), DEFAULT_TOL)?;
        let (x, _) = f64::solve(&f, &rhs)?;
        Ok(x[pos[&i0]])
    }
}

fn prob_as<T: Arithmetic>(p: &Prob) -> T {
    T::ratio(*p.numer(), *p.denom())
}

fn check_finite<T: Arithmetic>(xs: &[T]) -> Result<()> {
    if xs.iter().any(|x| !x.to_f64().is_finite()) {
        return Err(Error::SolveOverflow);
    }
    Ok(())
}

/// `(I - Q) x = rhs` over `transient`, with `Q` the transient block of `tm`.
fn assemble<T: Arithmetic>(
    tm: &TransitionMatrix,
    transient: &[usize],
    pos: &[Option<usize>],
) -> SparseMatrix<T> {
    let rows = transient
        .iter()
        .map(|&x| {
            let mut r = vec![(pos[x].unwrap(), T::one())];
            for (y, p) in tm.row(VertexId(x)) {
                if let Some(py) = pos[y.0] {
                    r.push((py, T::zero() - prob_as::<T>(p)));
                }
            }
            r
        })
        .collect();
    SparseMatrix::from_rows(rows)
}

fn positions(n: usize, transient: &[usize]) -> Vec<Option<usize>> {
    let mut pos = vec![None; n];
    for (p, &x) in transient.iter().enumerate() {
        pos[x] = Some(p);
    }
    pos
}

fn hitting_in<T: Arithmetic>(
    dynamics: &TransitionMatrix,
    goal: VertexId,
    tol: f64,
) -> Result<(Vec<T>, f64)> {
    let n = dynamics.n();
    if goal.0 >= n {
        return Err(Error::EndpointOutOfRange { vertex: goal.0, n });
    }
    let tm = dynamics.absorbed_at([goal]);
    let mut is_goal = vec![false; n];
    is_goal[goal.0] = true;
    let reach = tm.can_reach(&is_goal);
    if let Some(v) = reach.iter().position(|&r| !r) {
        return Err(Error::Unreachable(VertexId(v)));
    }
    let transient: Vec<usize> = (0..n).filter(|&x| x != goal.0).collect();
    let pos = positions(n, &transient);
    let mut times = vec![T::zero(); n];
    if transient.is_empty() {
        return Ok((times, 0.0));
    }
    let a = assemble::<T>(&tm, &transient, &pos);
    let f = T::factor(a, tol)?;
    let (x, residual) = T::solve(&f, &vec![T::one(); transient.len()])?;
    check_finite(&x)?;
    for (&v, t) in transient.iter().zip(x) {
        times[v] = t;
    }
    Ok((times, residual))
}

fn absorption_in<T: Arithmetic>(
    tm: &TransitionMatrix,
    avoid: &[VertexId],
    reach: &[VertexId],
    tol: f64,
) -> Result<(Vec<T>, f64)> {
    let n = tm.n();
    if avoid.is_empty() || reach.is_empty() {
        return Err(Error::InvalidInput("avoid and reach sets must be nonempty".into()));
    }
    let mut boundary = vec![false; n];
    let mut is_reach = vec![false; n];
    for &v in reach {
        if v.0 >= n {
            return Err(Error::EndpointOutOfRange { vertex: v.0, n });
        }
        is_reach[v.0] = true;
        boundary[v.0] = true;
    }
    for &v in avoid {
        if v.0 >= n {
            return Err(Error::EndpointOutOfRange { vertex: v.0, n });
        }
        if is_reach[v.0] {
            return Err(Error::StatesOverlap(v));
        }
        boundary[v.0] = true;
    }
    let tm = tm.absorbed_at(avoid.iter().chain(reach).copied());
    // Vertices that never meet the boundary (closed classes) stay at q = 0.
    let live = tm.can_reach(&boundary);
    let transient: Vec<usize> = (0..n).filter(|&x| !boundary[x] && live[x]).collect();
    let pos = positions(n, &transient);
    let mut q: Vec<T> = (0..n)
        .map(|x| if is_reach[x] { T::one() } else { T::zero() })
        .collect();
    if transient.is_empty() {
        return Ok((q, 0.0));
    }
    let rhs: Vec<T> = transient
        .iter()
        .map(|&x| {
            tm.row(VertexId(x))
                .iter()
                .filter(|(y, _)| is_reach[y.0])
                .fold(T::zero(), |acc, (_, p)| acc + prob_as::<T>(p))
        })
        .collect();
    let f = T::factor(assemble::<T>(&tm, &transient, &pos), tol)?;
    let (x, residual) = T::solve(&f, &rhs)?;
    check_finite(&x)?;
    for (&v, val) in transient.iter().zip(x) {
        q[v] = val;
    }
    Ok((q, residual))
}

fn induce_in<T: Arithmetic>(
    tm: &TransitionMatrix,
    states: &[VertexId],
    absorbing: &[VertexId],
    tol: f64,
) -> Result<(Vec<Vec<T>>, f64)> {
    let n = tm.n();
    if states.is_empty() {
        return Err(Error::InvalidInput("induced chain needs at least one state".into()));
    }
    let mut state_index = vec![None; n];
    for (i, &s) in states.iter().enumerate() {
        if s.0 >= n {
            return Err(Error::EndpointOutOfRange { vertex: s.0, n });
        }
        if state_index[s.0].replace(i).is_some() {
            return Err(Error::InvalidInput(format!("state {s} listed twice")));
        }
    }
    if let Some(v) = absorbing.iter().find(|v| v.0 >= n || state_index[v.0].is_none()) {
        return Err(Error::InvalidInput(format!("absorbing vertex {v} is not a state")));
    }
    let k = states.len();
    let is_state: Vec<bool> = state_index.iter().map(Option::is_some).collect();

    // Between visits the walk lives on the non-state vertices; the hitting
    // distribution on the states solves one system per state.
    let live = tm.can_reach(&is_state);
    let inner: Vec<usize> = (0..n).filter(|&x| !is_state[x] && live[x]).collect();
    let pos = positions(n, &inner);
    let (exit, residual): (Vec<Vec<T>>, f64) = if inner.is_empty() {
        (vec![Vec::new(); k], 0.0)
    } else {
        let f = T::factor(assemble::<T>(tm, &inner, &pos), tol)?;
        let solved: Vec<(Vec<T>, f64)> = states
            .par_iter()
            .map(|&s| {
                let rhs: Vec<T> = inner.iter().map(|&x| prob_as::<T>(&tm.prob(VertexId(x), s))).collect();
                T::solve(&f, &rhs)
            })
            .collect::<Result<_>>()?;
        let residual = solved.iter().map(|(_, r)| *r).fold(0.0, f64::max);
        (solved.into_iter().map(|(x, _)| x).collect(), residual)
    };

    let mut m = vec![vec![T::zero(); k]; k];
    for (i, &s) in states.iter().enumerate() {
        if absorbing.contains(&s) || tm.is_absorbing(s) {
            m[i][i] = T::one();
            continue;
        }
        let mut row = vec![T::zero(); k];
        for (y, p) in tm.row(s) {
            let p = prob_as::<T>(p);
            if let Some(j) = state_index[y.0] {
                row[j] = row[j].clone() + p;
            } else if let Some(py) = pos[y.0] {
                for (j, hj) in exit.iter().enumerate() {
                    row[j] = row[j].clone() + p.clone() * hj[py].clone();
                }
            }
        }
        let stay = std::mem::replace(&mut row[i], T::zero());
        let leave = T::one() - stay;
        if leave.to_f64() <= 0.0 {
            return Err(Error::InvalidInput(format!("state {s} never moves to another state")));
        }
        for v in &mut row {
            *v = v.clone() / leave.clone();
        }
        let total: f64 = row.iter().map(|v| v.to_f64()).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "walk from state {s} escapes the state set with probability {:e}",
                1.0 - total
            )));
        }
        m[i] = row;
    }
    check_finite(&m.concat())?;
    Ok((m, residual))
}

/// Retrace probability of the bounded-degree construction, measured per spine
/// vertex from absorption probabilities on the actual graph.
#[derive(Clone, Debug, PartialEq)]
pub struct RetraceReport {
    pub m: u64,
    /// Value measured at `v_1, .., v_m`.
    pub per_vertex: Vec<f64>,
    pub epsilon: f64,
}

/// Folds the per-visit escape probability into the retrace probability:
/// from `v_i` (degree `d`) the walk enters its hanging path with probability
/// `1/d`, reaches `s_i` first with probability `h`, and otherwise comes back
/// to `v_i` and starts over.
fn fold_retrace<T: Arithmetic>(h: T, degree: u64) -> T {
    let d = T::ratio(1, degree);
    let enter = d.clone() * h.clone();
    enter / (T::one() - d * (T::one() - h))
}

fn retrace_in<T: Arithmetic>(m: u64, tol: f64) -> Result<Vec<T>> {
    if m < 1 {
        return Err(Error::Domain("retrace probability needs m >= 1".into()));
    }
    let inst = bounded_construction(m)?;
    let walk = GeodesicWalk::new(&inst.graph, inst.b, &inst.excited)?;
    let tm = walk.transition_matrix();
    let mut out = Vec::with_capacity(m as usize);
    for i in 1..=m {
        let v = inst.vertex(&format!("v{i}"));
        let s = inst.vertex(&format!("s{i}"));
        let entry = inst.vertex(&format!("r_{i}_{}", 2 * m + 1));
        // s_i must lead to a deterministically for reaching s_i to be a retrace.
        let mut x = s;
        while x != inst.a {
            x = walk
                .bias()
                .forced_step(x)
                .ok_or_else(|| Error::InvalidInput(format!("{x} is not excited")))?;
        }
        let (q, _) = absorption_in::<T>(&tm, &[v], &[s], tol)?;
        out.push(fold_retrace(q[entry.0].clone(), inst.graph.degree(v) as u64));
    }
    Ok(out)
}

pub fn retrace_probability(m: u64, tol: f64) -> Result<RetraceReport> {
    let per_vertex = retrace_in::<f64>(m, tol)?;
    let epsilon = per_vertex[0];
    if let Some(bad) = per_vertex.iter().find(|e| (*e - epsilon).abs() > 1e-12) {
        return Err(Error::InvalidInput(format!(
            "retrace probability differs across spine vertices: {epsilon} vs {bad}"
        )));
    }
    Ok(RetraceReport {
        m,
        per_vertex,
        epsilon,
    })
}

/// Exact per-vertex retrace probabilities.
pub fn retrace_probability_exact(m: u64) -> Result<Vec<BigRational>> {
    retrace_in::<BigRational>(m, 0.0)
}

pub fn transition_matrix(g: &Graph, target: VertexId, excited: &ExcitationSet) -> Result<TransitionMatrix> {
    Ok(GeodesicWalk::new(g, target, excited)?.transition_matrix())
}

pub fn expected_hitting_times(
    g: &Graph,
    target: VertexId,
    excited: &ExcitationSet,
    tol: f64,
) -> Result<HittingSolution> {
    GeodesicWalk::new(g, target, excited)?.hitting_times(tol)
}

pub fn absorption_probabilities(
    g: &Graph,
    target: VertexId,
    excited: &ExcitationSet,
    avoid: &[VertexId],
    reach: &[VertexId],
    tol: f64,
) -> Result<AbsorptionSolution> {
    GeodesicWalk::new(g, target, excited)?.absorption(avoid, reach, tol)
}

pub fn induce_chain(
    g: &Graph,
    target: VertexId,
    excited: &ExcitationSet,
    states: &[VertexId],
    absorbing: &[VertexId],
    tol: f64,
) -> Result<InducedChain> {
    GeodesicWalk::new(g, target, excited)?.induce_chain(states, absorbing, tol)
}

/// Exact `t`-step distribution from `start`, with the target absorbing.
/// Returns the probability mass absorbed at the target within `steps` steps.
pub fn absorbed_mass_within(tm: &TransitionMatrix, start: VertexId, target: VertexId, steps: u64) -> f64 {
    let n = tm.n();
    let mut mass = vec![0.0; n];
    mass[start.0] = 1.0;
    let rows: Vec<Vec<(VertexId, f64)>> = (0..n).map(|x| tm.row_f64(VertexId(x))).collect();
    for _ in 0..steps {
        let mut next = vec![0.0; n];
        for (x, &w) in mass.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for &(y, p) in &rows[x] {
                next[y.0] += w * p;
            }
        }
        mass = next;
    }
    mass[target.0]
}
