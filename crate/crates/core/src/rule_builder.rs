//! Order schedules for product Gauss–Hermite rules that guarantee `e <= eps`,
//! a greedy search for small feasible rules, and a fit of the exponential
//! convergence rate `e ~ C q^{n^p}`.
//!
//! Every builder applies its closed-form schedule, clamps orders to at least
//! one, and then certifies the plan twice: through the closed-form product
//! bound and through the measured worst-case error. A failed certification is
//! reported as an error, never silently repaired.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss_hermite::MAX_ORDER;
use crate::hermite_space::{growth_violation, WeightedSpace};
use crate::wce::{combine_product, one_dim_gh_wce, one_dim_upper_bound, product_gh_wce, product_upper_bound, ErrorReport, SQRT_8PI};

/// Horizon over which a supplied growth condition `a_j 2^{b_j} >= beta j^{1+eta}`
/// is verified before its integral tail is trusted.
pub const GROWTH_CHECK_HORIZON: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Uniform exponential convergence schedule.
    Uexp,
    /// Strong polynomial tractability schedule.
    Ecspt,
    /// Weak tractability schedule.
    Ecwt,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Uexp => "uexp",
            Scheme::Ecspt => "ecspt",
            Scheme::Ecwt => "ecwt",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uexp" => Ok(Scheme::Uexp),
            "ecspt" => Ok(Scheme::Ecspt),
            "ecwt" => Ok(Scheme::Ecwt),
            other => Err(Error::invalid(format!("unknown scheme '{other}' (expected uexp, ecspt or ecwt)"))),
        }
    }
}

/// A certified order vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchedulePlan {
    pub scheme: Scheme,
    pub epsilon: f64,
    pub m: Vec<usize>,
    pub n_total: u64,
    /// `sqrt` of the closed-form product bound; at most `epsilon`.
    pub guaranteed_e: f64,
    pub measured_e: f64,
    /// `B(s)` used by the uniform schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_s: Option<f64>,
    /// The intermediate order `m` of the uniform schedule, before the
    /// per-coordinate roots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_order: Option<f64>,
    /// The summability constant `A` used by the weak-tractability schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_constant: Option<f64>,
}

/// Source of the constant `A = sum_{j>=1} 1 / (a_j 2^{b_j})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AConstant {
    /// Supplied by the caller.
    Given(f64),
    /// Prefix sum plus `int_s^inf dt / (beta t^{1+eta})`, valid when
    /// `a_j 2^{b_j} >= beta j^{1+eta}`; generator spaces only.
    FromGrowth { beta: f64, eta: f64 },
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("epsilon must lie in (0, 1), got {epsilon}")))
    }
}

/// `sqrt(8 pi) / (1 - omega^2)`.
fn prop_constant(omega: f64) -> f64 {
    SQRT_8PI / (1.0 - omega * omega)
}

/// `ceil(base^{1/b})`, or 1 when the base is not positive.
fn clamped_ceil_root(base: f64, b: f64) -> usize {
    if base > 0.0 {
        (base.powf(1.0 / b).ceil() as usize).max(1)
    } else {
        1
    }
}

fn total_points(m: &[usize]) -> Result<u64> {
    m.iter()
        .try_fold(1u64, |acc, &mj| acc.checked_mul(mj as u64))
        .ok_or_else(|| Error::invalid("total number of points overflows u64"))
}

/// Uniform exponential convergence schedule:
///
/// ```text
/// m   = max_j ceil( ((1/a_j) log(C s / log(1+eps^2)) / log(1/omega))^{B(s)} )
/// m_j = floor( m^{1 / (B(s) b_j)} )
/// ```
///
/// with `C = sqrt(8 pi) / (1 - omega^2)`.
pub fn build_uexp(space: &WeightedSpace, epsilon: f64) -> Result<SchedulePlan> {
    check_epsilon(epsilon)?;
    let s = space.s();
    let omega = space.omega();
    let b_s: f64 = space.b().iter().map(|b| 1.0 / b).sum();
    let log_term = (prop_constant(omega) * s as f64 / epsilon.powi(2).ln_1p()).ln();
    let ln_inv_omega = -omega.ln();
    let master = space
        .a()
        .iter()
        .map(|a| ((log_term / a) / ln_inv_omega).powf(b_s).ceil())
        .fold(f64::NEG_INFINITY, f64::max)
        .max(1.0);
    let m: Vec<usize> = space
        .b()
        .iter()
        .map(|b| (master.powf(1.0 / (b_s * b)).floor() as usize).max(1))
        .collect();

    let budget = epsilon.powi(2).ln_1p() / s as f64;
    for (j, &mj) in m.iter().enumerate() {
        let term = one_dim_upper_bound(space.a()[j], space.b()[j], omega, mj);
        if term > budget {
            return Err(Error::Certification(format!(
                "uexp coordinate {} with order {mj}: bound {term:e} exceeds log(1+eps^2)/s = {budget:e}",
                j + 1
            )));
        }
    }
    let mut plan = certify(space, Scheme::Uexp, epsilon, m)?;
    plan.b_s = Some(b_s);
    plan.master_order = Some(master);
    Ok(plan)
}

/// Strong polynomial tractability schedule:
///
/// ```text
/// m_j = ceil( (log(C (pi^2/6) j^2 / log(1+eps^2)) / (a_j 2^{b_j} log(1/omega)))^{1/b_j} )
/// ```
///
/// `m_j` depends only on `j`, so plans for different `s` agree on shared
/// coordinates.
pub fn build_ecspt(space: &WeightedSpace, epsilon: f64) -> Result<SchedulePlan> {
    check_epsilon(epsilon)?;
    let omega = space.omega();
    let c = prop_constant(omega);
    let ln_eps = epsilon.powi(2).ln_1p();
    let ln_inv_omega = -omega.ln();
    let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
    let m: Vec<usize> = (0..space.s())
        .map(|i| {
            let j = (i + 1) as f64;
            let (a, b) = (space.a()[i], space.b()[i]);
            let log_term = (c * zeta2 * j * j / ln_eps).ln();
            let base = log_term / (a * b.exp2() * ln_inv_omega);
            clamped_ceil_root(base, b)
        })
        .collect();

    for (i, &mj) in m.iter().enumerate() {
        let j = (i + 1) as f64;
        let term = one_dim_upper_bound(space.a()[i], space.b()[i], omega, mj);
        let budget = ln_eps / (zeta2 * j * j);
        if term > budget {
            return Err(Error::Certification(format!(
                "ecspt coordinate {} with order {mj}: bound {term:e} exceeds {budget:e}",
                i + 1
            )));
        }
    }
    certify(space, Scheme::Ecspt, epsilon, m)
}

/// Resolves the constant `A` of the weak-tractability schedule.
pub fn resolve_a_constant(space: &WeightedSpace, a_const: AConstant) -> Result<f64> {
    let prefix: f64 = (1..=space.s())
        .map(|j| space.growth_at(j).map(|g| 1.0 / g))
        .sum::<Result<f64>>()?;
    let value = match a_const {
        AConstant::Given(a) => {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::invalid(format!("A must be positive and finite, got {a}")));
            }
            a
        }
        AConstant::FromGrowth { beta, eta } => {
            if !space.is_generator() {
                return Err(Error::invalid(
                    "explicit weight lists must supply A; it cannot be derived beyond the listed prefix",
                ));
            }
            if !(beta > 0.0 && eta > 0.0) {
                return Err(Error::invalid("growth parameters need beta > 0 and eta > 0"));
            }
            if let Some(j) = growth_violation(space, beta, eta, GROWTH_CHECK_HORIZON)? {
                return Err(Error::invalid(format!(
                    "a_j 2^(b_j) >= {beta} j^(1+{eta}) fails at j = {j}"
                )));
            }
            let s = space.s() as f64;
            prefix + 1.0 / (beta * eta * s.powf(eta))
        }
    };
    if value < prefix {
        return Err(Error::invalid(format!(
            "A = {value} is smaller than the prefix sum {prefix} over the first {} coordinates",
            space.s()
        )));
    }
    Ok(value)
}

/// Weak tractability schedule:
///
/// ```text
/// m_j = ceil( (log(C A a_j 2^{b_j} / log(1+eps^2)) / (a_j 2^{b_j} log(1/omega)))^{1/b_j} )
/// ```
pub fn build_ecwt(space: &WeightedSpace, epsilon: f64, a_const: AConstant) -> Result<SchedulePlan> {
    check_epsilon(epsilon)?;
    let a_value = resolve_a_constant(space, a_const)?;
    let omega = space.omega();
    let c = prop_constant(omega);
    let ln_eps = epsilon.powi(2).ln_1p();
    let ln_inv_omega = -omega.ln();
    let m: Vec<usize> = (0..space.s())
        .map(|i| {
            let (a, b) = (space.a()[i], space.b()[i]);
            let growth = a * b.exp2();
            let log_term = (c * a_value * growth / ln_eps).ln();
            let base = log_term / (growth * ln_inv_omega);
            clamped_ceil_root(base, b)
        })
        .collect();

    for (i, &mj) in m.iter().enumerate() {
        let (a, b) = (space.a()[i], space.b()[i]);
        let term = one_dim_upper_bound(a, b, omega, mj);
        let budget = ln_eps / (a_value * a * b.exp2());
        if term > budget {
            return Err(Error::Certification(format!(
                "ecwt coordinate {} with order {mj}: bound {term:e} exceeds {budget:e}",
                i + 1
            )));
        }
    }
    let mut plan = certify(space, Scheme::Ecwt, epsilon, m)?;
    plan.a_constant = Some(a_value);
    Ok(plan)
}

/// Dispatch on the scheme; `a_const` is only used by [`Scheme::Ecwt`].
pub fn build_plan(space: &WeightedSpace, scheme: Scheme, epsilon: f64, a_const: Option<AConstant>) -> Result<SchedulePlan> {
    match scheme {
        Scheme::Uexp => build_uexp(space, epsilon),
        Scheme::Ecspt => build_ecspt(space, epsilon),
        Scheme::Ecwt => {
            let a_const = a_const.ok_or_else(|| {
                Error::invalid("the ecwt scheme needs the constant A (given, or derived from beta and eta)")
            })?;
            build_ecwt(space, epsilon, a_const)
        }
    }
}

fn certify(space: &WeightedSpace, scheme: Scheme, epsilon: f64, m: Vec<usize>) -> Result<SchedulePlan> {
    if let Some(&big) = m.iter().find(|&&mj| mj > MAX_ORDER) {
        return Err(Error::invalid(format!(
            "{scheme} schedule asks for order {big}, above the supported maximum {MAX_ORDER}"
        )));
    }
    let n_total = total_points(&m)?;
    let bound = product_upper_bound(space, &m)?;
    let eps2 = epsilon * epsilon;
    if bound > eps2 {
        return Err(Error::Certification(format!(
            "{scheme} plan {m:?}: closed-form bound e^2 <= {bound:e} exceeds eps^2 = {eps2:e}"
        )));
    }
    let measured = product_gh_wce(space, &m, eps2 / 100.0)?;
    if measured.e_squared + measured.tail_bound > eps2 {
        return Err(Error::Certification(format!(
            "{scheme} plan {m:?}: measured e^2 = {:e} (+{:e}) exceeds eps^2 = {eps2:e}",
            measured.e_squared, measured.tail_bound
        )));
    }
    Ok(SchedulePlan {
        scheme,
        epsilon,
        m,
        n_total,
        guaranteed_e: bound.sqrt(),
        measured_e: measured.e(),
        b_s: None,
        master_order: None,
        a_constant: None,
    })
}

/// Outcome of [`information_complexity_upper`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyPlan {
    pub epsilon: f64,
    pub n_total: u64,
    pub m: Vec<usize>,
    pub measured_e: f64,
    pub evaluations: usize,
}

/// Per-coordinate error cache for product rules of one space.
struct ProductErrors<'a> {
    space: &'a WeightedSpace,
    tol: f64,
    cache: Vec<HashMap<usize, ErrorReport>>,
}

impl<'a> ProductErrors<'a> {
    fn new(space: &'a WeightedSpace, tol: f64) -> Self {
        ProductErrors {
            space,
            tol,
            cache: vec![HashMap::new(); space.s()],
        }
    }

    fn ensure(&mut self, wanted: &[(usize, usize)]) -> Result<()> {
        let missing: Vec<(usize, usize)> = wanted
            .iter()
            .copied()
            .filter(|&(j, mj)| !self.cache[j].contains_key(&mj))
            .collect();
        let space = self.space;
        let tol = self.tol;
        let fresh = missing
            .par_iter()
            .map(|&(j, mj)| one_dim_gh_wce(space.a()[j], space.b()[j], space.omega(), mj, tol))
            .collect::<Result<Vec<_>>>()?;
        for ((j, mj), report) in missing.into_iter().zip(fresh) {
            self.cache[j].insert(mj, report);
        }
        Ok(())
    }

    fn product(&self, m: &[usize]) -> ErrorReport {
        let per: Vec<ErrorReport> = m
            .iter()
            .enumerate()
            .map(|(j, mj)| self.cache[j][mj].clone())
            .collect();
        combine_product(&per)
    }
}

/// Greedy search for a small product rule with measured `e <= epsilon`.
///
/// Starting from all ones, each step raises the order `m_j` that yields the
/// largest `log` error reduction per `log` increase in the number of points
/// (ties to the lowest `j`), until the rule is feasible. The path does not
/// depend on `epsilon`, so smaller `epsilon` never returns fewer points.
/// Each candidate rule evaluated counts against `budget`.
pub fn information_complexity_upper(space: &WeightedSpace, epsilon: f64, budget: usize) -> Result<GreedyPlan> {
    check_epsilon(epsilon)?;
    let s = space.s();
    let eps2 = epsilon * epsilon;
    let mut errors = ProductErrors::new(space, 1e-16 / (3.0 * s as f64));
    let mut m = vec![1usize; s];
    errors.ensure(&(0..s).map(|j| (j, 1)).collect::<Vec<_>>())?;
    let mut current = errors.product(&m);
    let mut evaluations = 1usize;

    loop {
        if current.e_squared + current.tail_bound <= eps2 {
            return Ok(GreedyPlan {
                epsilon,
                n_total: total_points(&m)?,
                m,
                measured_e: current.e(),
                evaluations,
            });
        }
        let candidates: Vec<usize> = (0..s).filter(|&j| m[j] < MAX_ORDER).collect();
        if candidates.is_empty() || evaluations + candidates.len() > budget {
            return Err(Error::Budget {
                budget,
                best_n: total_points(&m)?,
                best_m: m,
                best_e: current.e(),
            });
        }
        errors.ensure(&candidates.iter().map(|&j| (j, m[j] + 1)).collect::<Vec<_>>())?;
        evaluations += candidates.len();

        let log_cur = current.e_squared.ln();
        let mut best: Option<(usize, f64, ErrorReport)> = None;
        for &j in &candidates {
            let mut trial = m.clone();
            trial[j] += 1;
            let report = errors.product(&trial);
            let gain = 0.5 * (log_cur - report.e_squared.ln());
            let cost = ((m[j] + 1) as f64 / m[j] as f64).ln();
            let score = gain / cost;
            if best.as_ref().is_none_or(|(_, b, _)| score > *b) {
                best = Some((j, score, report));
            }
        }
        let (j, _, report) = best.expect("at least one candidate");
        m[j] += 1;
        current = report;
    }
}

/// Fitted exponential-convergence parameters of `e ~ C q^{n^p}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub p_hat: f64,
    pub q_hat: f64,
    pub c_hat: f64,
}

/// Least-squares line through `(n_i^p, log e_i)`: `(intercept, slope, rss)`.
fn profile_fit(points: &[(f64, f64)], p: f64) -> (f64, f64, f64) {
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(n, _)| n.powf(p)).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, e)| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    (intercept, slope, rss)
}

/// Fits `log e = log C + n^p log q` on the tail half of `(n, e)` data (at
/// least four points), profiling the linear parameters out and minimizing the
/// residual over `p`.
pub fn rate_estimate(data: &[(f64, f64)]) -> Result<RateFit> {
    if data.len() < 4 {
        return Err(Error::invalid(format!("rate fit needs at least 4 points, got {}", data.len())));
    }
    for w in data.windows(2) {
        if w[1].0.is_nan() || w[1].0 <= w[0].0 {
            return Err(Error::invalid("rate fit needs strictly increasing n"));
        }
        if w[1].1.is_nan() || w[1].1 >= w[0].1 {
            return Err(Error::invalid(format!(
                "rate fit needs strictly decreasing errors; e({}) = {:e} follows e({}) = {:e}",
                w[1].0, w[1].1, w[0].0, w[0].1
            )));
        }
    }
    if data.iter().any(|&(n, e)| !(n > 0.0 && e > 0.0 && e.is_finite())) {
        return Err(Error::invalid("rate fit needs positive n and positive finite errors"));
    }
    let keep = data.len().div_ceil(2);
    let tail = &data[data.len() - keep.max(4)..];

    let (lo, hi) = (1e-3f64.ln(), 4f64.ln());
    let grid = 400;
    let at = |i: usize| (lo + (hi - lo) * i as f64 / grid as f64).exp();
    let mut best_i = 0;
    let mut best_rss = f64::INFINITY;
    for i in 0..=grid {
        let rss = profile_fit(tail, at(i)).2;
        if rss < best_rss {
            best_rss = rss;
            best_i = i;
        }
    }
    // golden-section refinement on log p around the best grid point
    let mut a = at(best_i.saturating_sub(1)).ln();
    let mut b = at((best_i + 1).min(grid)).ln();
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let f = |lp: f64| profile_fit(tail, lp.exp()).2;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let p_hat = (0.5 * (a + b)).exp();
    let (intercept, slope, _) = profile_fit(tail, p_hat);
    if slope.is_nan() || slope >= 0.0 {
        return Err(Error::invalid("rate fit found no decay"));
    }
    Ok(RateFit {
        p_hat,
        q_hat: slope.exp(),
        c_hat: intercept.exp(),
    })
}
