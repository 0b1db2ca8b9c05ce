//! Monte Carlo engine for the geodesic-biased walk.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geodesic::{compute_bias, BiasMap, TieBreak};
use crate::graph::{ExcitationSet, Graph, VertexId};
use crate::rng::{trial_rng, uniform_below, TrialRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WalkConfig {
    pub start: VertexId,
    pub target: VertexId,
    pub max_steps: u64,
    pub seed: u64,
    pub record: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkOutcome {
    pub hit: bool,
    /// Hitting time if `hit`, otherwise the step cap.
    pub steps: u64,
    /// Start vertex followed by every vertex visited, when recorded.
    pub trajectory: Option<Vec<VertexId>>,
}

/// Aggregate over a batch of capped walks.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    pub trials: u64,
    pub hits: u64,
    pub censored: u64,
    /// Mean hitting time over the trials that hit; NaN when none did.
    pub mean_hit_time: f64,
    pub censoring_fraction: f64,
    /// Standard error of `mean_hit_time`, over hit trials only.
    pub standard_error: f64,
}

/// One move of the walk from `current`.
///
/// Excited vertices take their forced step without touching the generator;
/// other vertices pick a uniform neighbour with one bounded integer draw.
#[inline]
pub fn step(g: &Graph, bias: &BiasMap, current: VertexId, rng: &mut TrialRng) -> VertexId {
    if let Some(next) = bias.forced_step(current) {
        return next;
    }
    let nbrs = g.neighbors(current);
    nbrs[uniform_below(rng, nbrs.len() as u64) as usize]
}

/// Walk state shared by every trial of a batch.
#[derive(Clone, Debug)]
pub struct Simulator<'g> {
    graph: &'g Graph,
    bias: BiasMap,
}

impl<'g> Simulator<'g> {
    pub fn new(graph: &'g Graph, target: VertexId, excited: &ExcitationSet) -> Result<Self> {
        Self::with_tie_break(graph, target, excited, TieBreak::default())
    }

    pub fn with_tie_break(
        graph: &'g Graph,
        target: VertexId,
        excited: &ExcitationSet,
        rule: TieBreak,
    ) -> Result<Self> {
        let (_, bias) = compute_bias(graph, target, excited, rule)?;
        Ok(Simulator { graph, bias })
    }

    pub fn target(&self) -> VertexId {
        self.bias.target()
    }

    fn check(&self, start: VertexId, max_steps: u64) -> Result<()> {
        if start.0 >= self.graph.n() {
            return Err(Error::EndpointOutOfRange {
                vertex: start.0,
                n: self.graph.n(),
            });
        }
        if max_steps == 0 {
            return Err(Error::InvalidInput("max_steps must be at least 1".into()));
        }
        Ok(())
    }

    fn walk(&self, start: VertexId, max_steps: u64, record: bool, rng: &mut TrialRng) -> WalkOutcome {
        let target = self.target();
        let mut trajectory = record.then(|| vec![start]);
        let mut at = start;
        let mut steps = 0;
        while at != target && steps < max_steps {
            at = step(self.graph, &self.bias, at, rng);
            steps += 1;
            if let Some(t) = trajectory.as_mut() {
                t.push(at);
            }
        }
        WalkOutcome {
            hit: at == target,
            steps,
            trajectory,
        }
    }

    /// A single walk; the seed selects stream 0 of that master seed.
    pub fn run_walk(&self, cfg: &WalkConfig) -> Result<WalkOutcome> {
        if cfg.target != self.target() {
            return Err(Error::InvalidInput(format!(
                "walk target {} differs from simulator target {}",
                cfg.target,
                self.target()
            )));
        }
        self.check(cfg.start, cfg.max_steps)?;
        let mut rng = trial_rng(cfg.seed, 0);
        Ok(self.walk(cfg.start, cfg.max_steps, cfg.record, &mut rng))
    }

    /// Trial `i` of a batch, independent of how the batch is scheduled.
    pub fn trial(&self, start: VertexId, max_steps: u64, master_seed: u64, i: u64, record: bool) -> WalkOutcome {
        let mut rng = trial_rng(master_seed, i);
        self.walk(start, max_steps, record, &mut rng)
    }

    /// Runs `trials` capped walks in parallel and aggregates them exactly.
    ///
    /// Step counts are summed as integers, so the report is bitwise identical
    /// for every thread count.
    pub fn estimate(&self, start: VertexId, trials: u64, max_steps: u64, master_seed: u64) -> Result<EstimateReport> {
        self.check(start, max_steps)?;
        if trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        let tally = (0..trials)
            .into_par_iter()
            .map(|i| Tally::of(&self.trial(start, max_steps, master_seed, i, false)))
            .reduce(Tally::default, Tally::merge);
        Ok(tally.report(trials))
    }

    /// Like [`Self::estimate`] but also returns every trajectory in trial order.
    pub fn estimate_recorded(
        &self,
        start: VertexId,
        trials: u64,
        max_steps: u64,
        master_seed: u64,
    ) -> Result<(EstimateReport, Vec<Vec<VertexId>>)> {
        self.check(start, max_steps)?;
        if trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        let outcomes: Vec<WalkOutcome> = (0..trials)
            .into_par_iter()
            .map(|i| self.trial(start, max_steps, master_seed, i, true))
            .collect();
        let tally = outcomes.iter().map(Tally::of).fold(Tally::default(), Tally::merge);
        let paths = outcomes.into_iter().filter_map(|o| o.trajectory).collect();
        Ok((tally.report(trials), paths))
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Tally {
    hits: u64,
    sum: u128,
    sum_sq: u128,
}

impl Tally {
    fn of(o: &WalkOutcome) -> Self {
        if o.hit {
            let s = u128::from(o.steps);
            Tally { hits: 1, sum: s, sum_sq: s * s }
        } else {
            Tally::default()
        }
    }

    fn merge(self, other: Self) -> Self {
        Tally {
            hits: self.hits + other.hits,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
        }
    }

    fn report(&self, trials: u64) -> EstimateReport {
        let h = u128::from(self.hits);
        let mean = if h == 0 { f64::NAN } else { self.sum as f64 / h as f64 };
        let standard_error = if h < 2 {
            f64::NAN
        } else {
            // h * sum_sq - sum^2 = h^2 * (population variance), exact in integers
            let spread = h * self.sum_sq - self.sum * self.sum;
            let sample_var = spread as f64 / (h as f64 * (h - 1) as f64);
            (sample_var / h as f64).sqrt()
        };
        EstimateReport {
            trials,
            hits: self.hits,
            censored: trials - self.hits,
            mean_hit_time: mean,
            censoring_fraction: (trials - self.hits) as f64 / trials as f64,
            standard_error,
        }
    }
}

pub fn run_walk(g: &Graph, excited: &ExcitationSet, cfg: &WalkConfig) -> Result<WalkOutcome> {
    Simulator::new(g, cfg.target, excited)?.run_walk(cfg)
}

#[allow(clippy::too_many_arguments)]
pub fn estimate_hitting_time(
    g: &Graph,
    target: VertexId,
    excited: &ExcitationSet,
    start: VertexId,
    trials: u64,
    max_steps: u64,
    master_seed: u64,
) -> Result<EstimateReport> {
    Simulator::new(g, target, excited)?.estimate(start, trials, max_steps, master_seed)
}

/// Runs `f` on a dedicated pool of `threads` workers (all cores when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
