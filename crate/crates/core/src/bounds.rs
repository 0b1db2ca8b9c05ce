//! Closed-form evaluators for the inequalities that accompany the two
//! constructions. Anything that can leave the `f64` range is returned as a
//! natural logarithm.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::rng::{trial_rng, uniform_below};

fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

/// Upper tail bound `P(X >= (1 + delta) mu) <= exp(-delta^2 mu / (2 + delta))`
/// for a sum of independent Bernoulli variables with mean `mu`.
pub fn chernoff_bound(mu: f64, delta: f64) -> Result<f64> {
    if !(mu > 0.0 && delta > 0.0) {
        return Err(domain(format!("chernoff bound needs mu, delta > 0 (got {mu}, {delta})")));
    }
    Ok((-delta * delta * mu / (2.0 + delta)).exp())
}

/// Probability that the simple walk on `0..=n` started at 1 reaches `n` first.
pub fn gamblers_ruin(n: u64) -> Result<f64> {
    if n < 1 {
        return Err(domain("gambler's ruin needs n >= 1"));
    }
    Ok(1.0 / n as f64)
}

/// A value kept as its natural log, with the linear value when it fits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogValue {
    pub ln: f64,
    pub linear: Option<f64>,
}

impl LogValue {
    pub fn from_ln(ln: f64) -> Self {
        let linear = (ln < f64::MAX.ln()).then(|| ln.exp());
        LogValue { ln, linear }
    }
}

/// `ln(n!)`: exact product below 21, Stirling series above.
pub fn ln_factorial(n: u64) -> f64 {
    if n <= 20 {
        return ((1..=n).product::<u64>() as f64).ln();
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// Lower bound `k^(j-1) / (4^(j-1) (j-1)!)` on `T(a, v_j)` in the
/// single-excitation construction, valid for `1 <= j <= floor(sqrt(k)) + 1`.
pub fn lemma1_lower_bound(k: u64, j: u64) -> Result<LogValue> {
    let m = crate::constructions::isqrt(k);
    if k < 1 || j < 1 || j > m + 1 {
        return Err(domain(format!("need 1 <= j <= floor(sqrt(k)) + 1 (k = {k}, j = {j})")));
    }
    let e = (j - 1) as f64;
    Ok(LogValue::from_ln(e * (k as f64).ln() - e * 4f64.ln() - ln_factorial(j - 1)))
}

/// Per-step growth factor `(k + 2j + 2) / (2j + 2)` of `T(a, v_j)`.
pub fn lemma1_step_ratio(k: u64, j: u64) -> f64 {
    (k + 2 * j + 2) as f64 / (2 * j + 2) as f64
}

/// Retrace probability `1 / (4m + 5)` of the bounded-degree construction.
pub fn epsilon_retrace(m: u64) -> Result<Ratio<u64>> {
    if m < 1 {
        return Err(domain("retrace probability needs m >= 1"));
    }
    Ok(Ratio::new(1, 4 * m + 5))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExcursionBounds {
    pub m: u64,
    pub epsilon: f64,
    /// `(1 - epsilon)^floor(m^{3/2})`, bound on long excursions.
    pub p_l_bound: f64,
    /// `exp(-sqrt(m) / 10)`, the relaxation of `p_l_bound`.
    pub p_l_relaxed: f64,
    /// `m^{3/2} exp(-sqrt(m) / 10)`, bound on short excursions.
    pub p_s_bound: f64,
    pub p_bound: f64,
    /// `ln(1 / p_bound)`.
    pub ln_t_bound: f64,
    /// `ln(exp(sqrt(m) / 10) / (m^{3/2} + 1))`.
    pub ln_t_bound_simplified: f64,
}

pub fn excursion_bounds(m: u64) -> Result<ExcursionBounds> {
    if m < 1 {
        return Err(domain("excursion bounds need m >= 1"));
    }
    let mf = m as f64;
    let epsilon = 1.0 / (4.0 * mf + 5.0);
    let m32 = mf.powf(1.5);
    let p_l_bound = (floor_m32(m) as f64 * (-epsilon).ln_1p()).exp();
    let p_l_relaxed = (-mf.sqrt() / 10.0).exp();
    let p_s_bound = m32 * p_l_relaxed;
    let p_bound = p_l_bound + p_s_bound;
    Ok(ExcursionBounds {
        m,
        epsilon,
        p_l_bound,
        p_l_relaxed,
        p_s_bound,
        p_bound,
        ln_t_bound: -p_bound.ln(),
        ln_t_bound_simplified: mf.sqrt() / 10.0 - (m32 + 1.0).ln(),
    })
}

/// `floor(m^{3/2})` computed in integers.
pub fn floor_m32(m: u64) -> u64 {
    crate::constructions::isqrt(m * m * m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Theorem {
    /// Single excitation, unbounded degree.
    Unbounded,
    /// Maximum degree 3.
    Bounded,
}

/// Exponent of the asymptotic hitting-time lower bound on `n` vertices:
/// `n^{1/4} ln n / 100` or `n^{1/4} / 100`.
pub fn theorem_bounds(n: u64, which: Theorem) -> Result<f64> {
    if n < 2 {
        return Err(domain("theorem bounds need n >= 2"));
    }
    let root = (n as f64).powf(0.25);
    Ok(match which {
        Theorem::Unbounded => root * (n as f64).ln() / 100.0,
        Theorem::Bounded => root / 100.0,
    })
}

/// `(1 - 1/(4m+5))^e <= exp(-sqrt(m)/10)` for `e = m^{3/2}` and its floor.
pub fn relaxation_holds(m: u64) -> bool {
    let mf = m as f64;
    let lhs = (-1.0 / (4.0 * mf + 5.0)).ln_1p();
    let rhs = -mf.sqrt() / 10.0;
    floor_m32(m) as f64 * lhs <= rhs && mf.powf(1.5) * lhs <= rhs
}

/// `exp(-m^2 / (4t + 2m)) <= exp(-sqrt(m)/10)`, compared in the exponent.
pub fn chernoff_step_holds(m: u64, t: u64) -> bool {
    let (mf, tf) = (m as f64, t as f64);
    mf * mf / (4.0 * tf + 2.0 * mf) >= mf.sqrt() / 10.0
}

/// Bernoulli-sum parameters for `P(y_t >= m + 1 | y_0 = 1)` of the simple
/// integer walk: `y_t = 1 + 2 Bin(t, 1/2) - t`, so `mu = t/2`, `delta = m/t`.
pub fn integer_walk_chernoff(m: u64, t: u64) -> Result<(f64, f64)> {
    if m < 1 || t < 1 {
        return Err(domain("integer walk needs m, t >= 1"));
    }
    Ok((t as f64 / 2.0, m as f64 / t as f64))
}

/// Monte Carlo frequency of `{y_t >= m + 1}` for the simple walk from 1, and
/// its standard error.
pub fn integer_walk_tail(m: u64, t: u64, trials: u64, seed: u64) -> (f64, f64) {
    let hits = (0..trials)
        .filter(|&i| {
            let mut rng = trial_rng(seed, i);
            let ups: u64 = (0..t).map(|_| uniform_below(&mut rng, 2)).sum();
            1 + 2 * ups as i64 - t as i64 > m as i64
        })
        .count();
    let p = hits as f64 / trials as f64;
    (p, (p * (1.0 - p) / trials as f64).sqrt())
}

/// Which way a bound constrains the measured value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// measured >= bound
    AtLeast,
    /// measured <= bound
    AtMost,
    /// |measured - bound| <= tolerance
    Equal,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::AtLeast => ">=",
            Direction::AtMost => "<=",
            Direction::Equal => "==",
        })
    }
}

/// A measured value checked against a named bound.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub bound_value: f64,
    pub measured_value: f64,
    /// Both values are natural logs.
    pub log_domain: bool,
    pub direction: Direction,
    pub satisfied: bool,
    /// Distance by which the inequality holds (negative when violated).
    pub slack: f64,
}

impl BoundReport {
    /// Compares with relative tolerance `rel_tol` (absolute in the log domain).
    pub fn new(
        name: impl Into<String>,
        params: &[(&str, String)],
        direction: Direction,
        bound_value: f64,
        measured_value: f64,
        log_domain: bool,
        rel_tol: f64,
    ) -> Self {
        let allowance = if log_domain {
            rel_tol
        } else {
            rel_tol * bound_value.abs().max(measured_value.abs())
        };
        let slack = match direction {
            Direction::AtLeast => measured_value - bound_value,
            Direction::AtMost => bound_value - measured_value,
            Direction::Equal => -(measured_value - bound_value).abs(),
        };
        let satisfied = match direction {
            Direction::Equal => -slack <= allowance,
            _ => slack >= -allowance,
        };
        BoundReport {
            name: name.into(),
            params: params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            bound_value,
            measured_value,
            log_domain,
            direction,
            satisfied,
            slack,
        }
    }
}
