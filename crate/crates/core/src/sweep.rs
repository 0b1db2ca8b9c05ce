//! Table-producing analyses behind the command line: forced-step tables,
//! exact hitting-time tables, bound verification and parameter sweeps.

use std::collections::BTreeSet;

use crate::bounds::{
    self, excursion_bounds, lemma1_lower_bound, lemma1_step_ratio, relaxation_holds, theorem_bounds,
    BoundReport, Direction, Theorem,
};
use crate::constructions::{bounded_vertex_count, isqrt, unbounded_vertex_count, Construction, LabeledInstance};
use crate::error::{Error, Result};
use crate::geodesic::{is_tie_free, TieBreak};
use crate::linalg::rational_to_f64;
use crate::markov::{retrace_probability, GeodesicWalk};
use crate::report::{csv_line, fmt_real};
use crate::simulate::Simulator;

/// Forced-step table of an instance.
pub fn bias_csv(inst: &LabeledInstance, rule: TieBreak) -> Result<String> {
    let walk = GeodesicWalk::with_tie_break(&inst.graph, inst.b, &inst.excited, rule)?;
    let g = &inst.graph;
    let mut out = csv_line(&["excited_id", "excited_label", "next_id", "next_label", "dist_before", "dist_after"]);
    for (x, y) in walk.bias().entries() {
        out += &csv_line(&[
            x.to_string(),
            g.display_name(x),
            y.to_string(),
            g.display_name(y),
            walk.distances().get(x).to_string(),
            walk.distances().get(y).to_string(),
        ]);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactOptions {
    pub rational: bool,
    pub tol: f64,
    pub tie_break: TieBreak,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            rational: false,
            tol: crate::markov::DEFAULT_TOL,
            tie_break: TieBreak::default(),
        }
    }
}

/// Per-vertex expected hitting times of the target plus a `# T(a,b)` summary.
pub fn exact_csv(inst: &LabeledInstance, opts: &ExactOptions) -> Result<String> {
    let walk = GeodesicWalk::with_tie_break(&inst.graph, inst.b, &inst.excited, opts.tie_break)?;
    let (times, residual, exact_ab) = if opts.rational {
        let t = walk.hitting_times_exact(inst.b)?;
        let ab = t[inst.a.0].to_string();
        (t.iter().map(rational_to_f64).collect::<Vec<_>>(), 0.0, Some(ab))
    } else {
        let s = walk.hitting_times(opts.tol)?;
        (s.times, s.residual, None)
    };
    let g = &inst.graph;
    let mut out = csv_line(&["vertex_id", "label", "dist_to_target", "expected_hitting_time"]);
    for v in g.vertices() {
        out += &csv_line(&[
            v.to_string(),
            g.label(v).unwrap_or("").to_string(),
            walk.distances().get(v).to_string(),
            fmt_real(times[v.0]),
        ]);
    }
    out += &format!("# T(a,b)={} residual={}", fmt_real(times[inst.a.0]), fmt_real(residual));
    if let Some(q) = exact_ab {
        out += &format!(" exact={q}");
    }
    out.push('\n');
    Ok(out)
}

fn p(name: &str, v: impl ToString) -> (&str, String) {
    (name, v.to_string())
}

/// Relative slack allowed on every inequality checked against exact values.
pub const VERIFY_REL_TOL: f64 = 1e-9;

/// Bound checks for one parameter value.
pub fn verify_one(c: Construction, param: u64, tol: f64) -> Result<Vec<BoundReport>> {
    let inst = c.build(param)?;
    let walk = GeodesicWalk::new(&inst.graph, inst.b, &inst.excited)?;
    let n = inst.n() as u64;
    let mut out = Vec::new();
    let pname = c.param_name();
    match c {
        Construction::Unbounded => {
            let k = param;
            let m = isqrt(k);
            out.push(BoundReport::new("vertex_count", &[p(pname, k)], Direction::Equal,
                unbounded_vertex_count(k) as f64, n as f64, false, 0.0));
            out.push(BoundReport::new("spine_distance", &[p(pname, k)], Direction::Equal,
                (m + 1) as f64, walk.distances().get(inst.a) as f64, false, 0.0));
            out.push(BoundReport::new("tie_free", &[p(pname, k)], Direction::Equal, 1.0,
                f64::from(u8::from(is_tie_free(&inst.graph, walk.distances(), &inst.excited))), false, 0.0));
            // T(a, v_j) for j = 1..=m+1, with v_{m+1} = b.
            let spine: Vec<_> = (1..=m).map(|j| inst.vertex(&format!("v{j}"))).chain([inst.b]).collect();
            let mut t = Vec::with_capacity(spine.len());
            for &v in &spine {
                t.push(walk.hitting_times_to(v, tol)?.time(inst.a));
            }
            for (idx, &tj) in t.iter().enumerate() {
                let j = idx as u64 + 1;
                let b = lemma1_lower_bound(k, j)?;
                out.push(BoundReport::new("lemma1", &[p(pname, k), p("j", j)], Direction::AtLeast,
                    b.ln, tj.ln(), true, VERIFY_REL_TOL));
            }
            for j in 1..=m {
                let (tj, tj1) = (t[j as usize - 1], t[j as usize]);
                out.push(BoundReport::new("lemma1_step", &[p(pname, k), p("j", j)], Direction::AtLeast,
                    lemma1_step_ratio(k, j) * tj, tj1, false, VERIFY_REL_TOL));
            }
            out.push(BoundReport::new("theorem1_exponent", &[p(pname, k), p("n", n)], Direction::AtLeast,
                theorem_bounds(n, Theorem::Unbounded)?, t[m as usize].ln(), true, VERIFY_REL_TOL));
        }
        Construction::Bounded => {
            let m = param;
            let v1 = inst.vertex("v1");
            out.push(BoundReport::new("vertex_count", &[p(pname, m)], Direction::Equal,
                bounded_vertex_count(m) as f64, n as f64, false, 0.0));
            out.push(BoundReport::new("max_degree", &[p(pname, m)], Direction::Equal,
                3.0, inst.graph.validate().max_degree as f64, false, 0.0));
            let eps = retrace_probability(m, tol)?;
            let want = *bounds::epsilon_retrace(m)?.numer() as f64 / *bounds::epsilon_retrace(m)?.denom() as f64;
            out.push(BoundReport::new("epsilon_retrace", &[p(pname, m)], Direction::Equal,
                want, eps.epsilon, false, VERIFY_REL_TOL));
            let ex = excursion_bounds(m)?;
            out.push(BoundReport::new("long_excursion_relaxation", &[p(pname, m)], Direction::AtMost,
                ex.p_l_relaxed, ex.p_l_bound, false, 0.0));
            let hit = walk.hitting_times(tol)?;
            let (t_ab, t_v1) = (hit.time(inst.a), hit.time(v1));
            let q = walk.absorption(&[inst.a], &[inst.b], tol)?.prob(v1);
            out.push(BoundReport::new("escape_probability", &[p(pname, m)], Direction::AtMost,
                ex.p_bound, q, false, VERIFY_REL_TOL));
            out.push(BoundReport::new("renewal", &[p(pname, m)], Direction::AtLeast,
                1.0 / q, t_v1, false, VERIFY_REL_TOL));
            out.push(BoundReport::new("lemma2", &[p(pname, m)], Direction::AtLeast,
                ex.ln_t_bound_simplified, t_v1.ln(), true, VERIFY_REL_TOL));
            out.push(BoundReport::new("first_step", &[p(pname, m)], Direction::Equal,
                1.0 + t_v1, t_ab, false, VERIFY_REL_TOL));
            out.push(BoundReport::new("theorem2_exponent", &[p(pname, m), p("n", n)], Direction::AtLeast,
                theorem_bounds(n, Theorem::Bounded)?, t_ab.ln(), true, VERIFY_REL_TOL));
        }
        Construction::Path => {
            let q = walk.absorption(&[inst.a], &[inst.b], tol)?;
            let one = inst.graph.neighbors(inst.a)[0];
            out.push(BoundReport::new("gamblers_ruin", &[p(pname, param)], Direction::Equal,
                bounds::gamblers_ruin(param)?, q.prob(one), false, 1e-12));
        }
        Construction::Trap => {
            let excited = walk.hitting_times(tol)?.time(inst.a);
            let plain = GeodesicWalk::new(&inst.graph, inst.b, &crate::graph::ExcitationSet::empty())?
                .hitting_times(tol)?
                .time(inst.a);
            out.push(BoundReport::new("excitation_slowdown", &[p(pname, param)], Direction::AtLeast,
                plain, excited, false, 0.0));
        }
    }
    Ok(out)
}

pub fn verify(c: Construction, params: &[u64], tol: f64) -> Result<Vec<BoundReport>> {
    if params.is_empty() {
        return Err(Error::InvalidInput("empty parameter range".into()));
    }
    let mut out = Vec::new();
    for &v in params {
        out.extend(verify_one(c, v, tol)?);
    }
    Ok(out)
}

/// Pure-arithmetic sweep of the long-excursion relaxation over `1..=max_m`.
/// Returns the values of `m` where it fails.
pub fn relaxation_failures(max_m: u64) -> Vec<u64> {
    (1..=max_m).filter(|&m| !relaxation_holds(m)).collect()
}

/// Pairs `(m, t)` with `1 <= t <= floor(m^{3/2})` where the Chernoff step fails.
pub fn chernoff_step_failures(max_m: u64) -> Vec<(u64, u64)> {
    let mut bad = Vec::new();
    for m in 1..=max_m {
        for t in 1..=bounds::floor_m32(m) {
            if !bounds::chernoff_step_holds(m, t) {
                bad.push((m, t));
            }
        }
    }
    bad
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Analysis {
    Exact,
    Simulate,
    Verify,
}

impl std::str::FromStr for Analysis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Analysis::Exact),
            "simulate" => Ok(Analysis::Simulate),
            "verify" => Ok(Analysis::Verify),
            other => Err(Error::InvalidInput(format!("unknown analysis {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOptions {
    pub analyses: BTreeSet<Analysis>,
    pub trials: u64,
    pub max_steps: u64,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            analyses: [Analysis::Exact].into(),
            trials: 10_000,
            max_steps: 100_000,
            seed: 0,
            tol: crate::markov::DEFAULT_TOL,
        }
    }
}

/// One parameter value of a sweep. Unrequested or failed analyses are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub param: u64,
    pub n: usize,
    /// `ok`, or the first error met while analysing this row.
    pub status: String,
    pub t_ab: Option<f64>,
    /// Log of the lower bound the construction comes with, if any.
    pub ln_bound: Option<f64>,
    pub satisfied: Option<bool>,
    pub mc: Option<crate::simulate::EstimateReport>,
    /// `(passed, total)` bound checks.
    pub checks: Option<(usize, usize)>,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        self.status != "ok"
    }
}

fn sweep_row(c: Construction, param: u64, opts: &SweepOptions) -> SweepRow {
    let mut row = SweepRow {
        param,
        n: 0,
        status: "ok".into(),
        t_ab: None,
        ln_bound: None,
        satisfied: None,
        mc: None,
        checks: None,
    };
    let inst = match c.build(param) {
        Ok(i) => i,
        Err(e) => {
            row.status = e.to_string();
            return row;
        }
    };
    row.n = inst.n();
    let mut first_error: Option<Error> = None;

    if opts.analyses.contains(&Analysis::Exact) {
        let res = GeodesicWalk::new(&inst.graph, inst.b, &inst.excited).and_then(|w| w.hitting_times(opts.tol));
        match res {
            Ok(h) => {
                let t_ab = h.time(inst.a);
                row.t_ab = Some(t_ab);
                let bound = match c {
                    Construction::Unbounded => {
                        lemma1_lower_bound(param, isqrt(param) + 1).ok().map(|b| (b.ln, t_ab.ln()))
                    }
                    Construction::Bounded => excursion_bounds(param)
                        .ok()
                        .map(|e| (e.ln_t_bound_simplified, h.time(inst.vertex("v1")).ln())),
                    _ => None,
                };
                if let Some((ln_bound, ln_measured)) = bound {
                    row.ln_bound = Some(ln_bound);
                    row.satisfied = Some(ln_measured >= ln_bound - VERIFY_REL_TOL);
                }
            }
            Err(e) => first_error = first_error.or(Some(e)),
        }
    }
    if opts.analyses.contains(&Analysis::Simulate) {
        let res = Simulator::new(&inst.graph, inst.b, &inst.excited)
            .and_then(|s| s.estimate(inst.a, opts.trials, opts.max_steps, opts.seed));
        match res {
            Ok(r) => row.mc = Some(r),
            Err(e) => first_error = first_error.or(Some(e)),
        }
    }
    if opts.analyses.contains(&Analysis::Verify) {
        match verify_one(c, param, opts.tol) {
            Ok(reports) => {
                row.checks = Some((reports.iter().filter(|r| r.satisfied).count(), reports.len()));
            }
            Err(e) => first_error = first_error.or(Some(e)),
        }
    }
    if let Some(e) = first_error {
        row.status = e.to_string();
    }
    row
}

/// Runs the requested analyses for every parameter value. Per-row failures
/// are recorded in the row and never abort the sweep.
pub fn sweep(c: Construction, params: &[u64], opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    if params.is_empty() {
        return Err(Error::InvalidInput("empty parameter range".into()));
    }
    Ok(params.iter().map(|&v| sweep_row(c, v, opts)).collect())
}

pub fn sweep_csv(c: Construction, rows: &[SweepRow]) -> String {
    let opt = |x: Option<f64>| x.map(fmt_real).unwrap_or_default();
    let mut out = csv_line(&[
        "construction", "param", "n", "status", "t_ab", "ln_t_ab", "ln_bound", "satisfied",
        "mc_trials", "mc_mean", "mc_se", "mc_censoring", "checks_passed", "checks_total",
    ]);
    for r in rows {
        out += &csv_line(&[
            c.name().to_string(),
            r.param.to_string(),
            r.n.to_string(),
            r.status.clone(),
            opt(r.t_ab),
            opt(r.t_ab.map(f64::ln)),
            opt(r.ln_bound),
            r.satisfied.map(|s| s.to_string()).unwrap_or_default(),
            r.mc.as_ref().map(|m| m.trials.to_string()).unwrap_or_default(),
            opt(r.mc.as_ref().map(|m| m.mean_hit_time)),
            opt(r.mc.as_ref().map(|m| m.standard_error)),
            opt(r.mc.as_ref().map(|m| m.censoring_fraction)),
            r.checks.map(|c| c.0.to_string()).unwrap_or_default(),
            r.checks.map(|c| c.1.to_string()).unwrap_or_default(),
        ]);
    }
    out
}
