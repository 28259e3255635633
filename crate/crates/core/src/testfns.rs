//! Test functions with known Hermite coefficients and exact integrals.
//!
//! The exponential `f(x) = exp(s^{-1/2} sum_j x_j)` has coefficients
//! `f^(k) = sqrt(e) prod_j 1 / sqrt(k_j! s^{k_j})` and, when every `b_j = 1`,
//! squared norm `exp(1 + (1/s) sum_j omega^{-a_j})`.

use std::fmt;

use crate::error::{Error, Result};
use crate::gauss_hermite::gaussian_moment;
use crate::hermite::{hermite_eval_multi, ln_factorial, MultiIndex};
use crate::hermite_space::{series_norm_squared, HermiteSeries, WeightedSpace};

/// Dropped tail of a truncated norm sum, relative to the partial sum.
const NORM_TAIL_TOL: f64 = 1e-12;

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `sqrt(e) prod_j 1 / sqrt(k_j! s^{k_j})`.
pub fn exp_sum_coefficient(s: usize, k: &MultiIndex) -> Result<f64> {
    check_len(s, k.dim())?;
    let ln_s = (s as f64).ln();
    let log: f64 = 0.5
        - 0.5
            * k.entries()
                .iter()
                .map(|&kj| ln_factorial(kj as usize) + kj as f64 * ln_s)
                .sum::<f64>();
    Ok(log.exp())
}

/// `exp(s^{-1/2} sum_j x_j)` with `s = x.len()`.
pub fn exp_sum_eval(s: usize, x: &[f64]) -> Result<f64> {
    check_len(s, x.len())?;
    Ok((x.iter().sum::<f64>() / (s as f64).sqrt()).exp())
}

fn require_unit_b(space: &WeightedSpace) -> Result<()> {
    if let Some(j) = space.b().iter().position(|&b| b != 1.0) {
        return Err(Error::invalid(format!(
            "closed-form norm needs b_j = 1 for all j, but b_{} = {}",
            j + 1,
            space.b()[j]
        )));
    }
    Ok(())
}

/// `exp(1 + (1/s) sum_j omega^{-a_j})`, the squared norm for `b = 1`.
pub fn exp_sum_norm_squared(space: &WeightedSpace) -> Result<f64> {
    require_unit_b(space)?;
    let s = space.s() as f64;
    let ln_omega = space.omega().ln();
    let sum: f64 = space.a().iter().map(|&a| (-a * ln_omega).exp()).sum();
    Ok((1.0 + sum / s).exp())
}

/// Per-dimension truncation index `K_j`: beyond it the term ratio
/// `omega^{-a_j} / ((k+1) s)` is below 1/2 and the next term is below
/// [`NORM_TAIL_TOL`] of the partial sum, so the dropped tail is too.
pub fn exp_sum_truncation(space: &WeightedSpace) -> Result<Vec<usize>> {
    require_unit_b(space)?;
    let s = space.s() as f64;
    let ln_omega = space.omega().ln();
    space
        .a()
        .iter()
        .map(|&a| {
            let r = (-a * ln_omega).exp() / s;
            let (mut term, mut sum) = (1.0, 1.0);
            for k in 0..100_000usize {
                let ratio = r / (k + 1) as f64;
                let next = term * ratio;
                if ratio < 0.5 && 2.0 * next <= NORM_TAIL_TOL * sum {
                    return Ok(k);
                }
                term = next;
                sum += term;
            }
            Err(Error::Convergence("norm series truncation index exceeds 100000".into()))
        })
        .collect()
}

/// Partial sum of the squared norm over `max_j k_j <= k_max`, for any `b`.
/// Factorizes into one-dimensional sums; each term carries `omega^{-a k^b}`.
pub fn exp_sum_norm_partial(space: &WeightedSpace, k_max: usize) -> f64 {
    let s = space.s() as f64;
    let ln_omega = space.omega().ln();
    let log_prod: f64 = space
        .a()
        .iter()
        .zip(space.b())
        .map(|(&a, &b)| {
            let sum: f64 = (0..=k_max)
                .map(|k| {
                    let kf = k as f64;
                    (-a * kf.powf(b) * ln_omega - ln_factorial(k) - kf * s.ln()).exp()
                })
                .sum();
            sum.ln()
        })
        .sum();
    (1.0 + log_prod).exp()
}

/// The function's expansion over all `k` with `max_j k_j <= k_max`.
pub fn exp_sum_series(s: usize, k_max: u32) -> Result<HermiteSeries> {
    if s == 0 {
        return Err(Error::invalid("dimension s must be at least 1"));
    }
    let mut series = HermiteSeries::new(s);
    let mut k = vec![0u32; s];
    loop {
        let idx = MultiIndex::new(k.clone())?;
        let c = exp_sum_coefficient(s, &idx)?;
        series.add_term(idx, c)?;
        let mut j = s;
        loop {
            if j == 0 {
                return Ok(series);
            }
            j -= 1;
            if k[j] < k_max {
                k[j] += 1;
                break;
            }
            k[j] = 0;
        }
    }
}

/// Coefficients of `x^n` in the normalized basis:
/// `x^n = sum_m n! / (2^m m! sqrt((n-2m)!)) H_{n-2m}`, returned as `(degree, coef)`.
pub fn monomial_coefficients(n: u32) -> Vec<(u32, f64)> {
    let n_us = n as usize;
    (0..=n_us / 2)
        .map(|m| {
            let log = ln_factorial(n_us)
                - m as f64 * 2f64.ln()
                - ln_factorial(m)
                - 0.5 * ln_factorial(n_us - 2 * m);
            ((n_us - 2 * m) as u32, log.exp())
        })
        .collect()
}

/// A named test function.
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    /// `exp(s^{-1/2} sum_j x_j)`, named `appendixB` on the command line.
    ExpSum { s: usize },
    Hermite(MultiIndex),
    /// `prod_j x_j^{d_j}`.
    Monomial(Vec<u32>),
}

impl TestFunction {
    /// Parses `appendixB`, `hermite:k1,k2,...` or `monomial:d1,d2,...`.
    /// A single index is broadcast to all `s` coordinates.
    pub fn parse(name: &str, s: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::invalid("dimension s must be at least 1"));
        }
        let parse_list = |body: &str| -> Result<Vec<u32>> {
            let v = body
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::invalid(format!("bad index '{p}' in test function '{name}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            match v.len() {
                1 => Ok(vec![v[0]; s]),
                n if n == s => Ok(v),
                n => Err(Error::DimensionMismatch { expected: s, got: n }),
            }
        };
        if name == "appendixB" {
            Ok(TestFunction::ExpSum { s })
        } else if let Some(body) = name.strip_prefix("hermite:") {
            Ok(TestFunction::Hermite(MultiIndex::new(parse_list(body)?)?))
        } else if let Some(body) = name.strip_prefix("monomial:") {
            Ok(TestFunction::Monomial(parse_list(body)?))
        } else {
            Err(Error::invalid(format!(
                "unknown test function '{name}' (expected appendixB, hermite:k or monomial:d)"
            )))
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TestFunction::ExpSum { s } => *s,
            TestFunction::Hermite(k) => k.dim(),
            TestFunction::Monomial(d) => d.len(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_len(self.dim(), x.len())?;
        match self {
            TestFunction::ExpSum { s } => exp_sum_eval(*s, x),
            TestFunction::Hermite(k) => hermite_eval_multi(k, x),
            TestFunction::Monomial(d) => Ok(d.iter().zip(x).map(|(&dj, &xj)| xj.powi(dj as i32)).product()),
        }
    }

    pub fn exact_integral(&self) -> f64 {
        match self {
            TestFunction::ExpSum { .. } => 0.5f64.exp(),
            TestFunction::Hermite(k) => {
                if k.is_zero() {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::Monomial(d) => d.iter().map(|&dj| gaussian_moment(dj)).product(),
        }
    }

    pub fn coefficient(&self, k: &MultiIndex) -> Result<f64> {
        check_len(self.dim(), k.dim())?;
        match self {
            TestFunction::ExpSum { s } => exp_sum_coefficient(*s, k),
            TestFunction::Hermite(h) => Ok(if h == k { 1.0 } else { 0.0 }),
            TestFunction::Monomial(_) => Ok(self.finite_series()?.unwrap().coefficient(k)),
        }
    }

    /// The exact expansion for polynomial test functions; `None` otherwise.
    pub fn finite_series(&self) -> Result<Option<HermiteSeries>> {
        match self {
            TestFunction::ExpSum { .. } => Ok(None),
            TestFunction::Hermite(k) => {
                let mut series = HermiteSeries::new(k.dim());
                series.add_term(k.clone(), 1.0)?;
                Ok(Some(series))
            }
            TestFunction::Monomial(d) => {
                let per_dim: Vec<Vec<(u32, f64)>> = d.iter().map(|&dj| monomial_coefficients(dj)).collect();
                let mut series = HermiteSeries::new(d.len());
                let mut pick = vec![0usize; d.len()];
                loop {
                    let k: Vec<u32> = pick.iter().enumerate().map(|(j, &p)| per_dim[j][p].0).collect();
                    let c: f64 = pick.iter().enumerate().map(|(j, &p)| per_dim[j][p].1).product();
                    series.add_term(MultiIndex::new(k)?, c)?;
                    let mut j = d.len();
                    loop {
                        if j == 0 {
                            return Ok(Some(series));
                        }
                        j -= 1;
                        if pick[j] + 1 < per_dim[j].len() {
                            pick[j] += 1;
                            break;
                        }
                        pick[j] = 0;
                    }
                }
            }
        }
    }

    /// Squared norm in `space`; for the exponential this needs `b = 1`.
    pub fn norm_squared(&self, space: &WeightedSpace) -> Result<f64> {
        check_len(space.s(), self.dim())?;
        match self {
            TestFunction::ExpSum { .. } => exp_sum_norm_squared(space),
            _ => series_norm_squared(space, &self.finite_series()?.unwrap()),
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
        match self {
            TestFunction::ExpSum { .. } => write!(f, "appendixB"),
            TestFunction::Hermite(k) => write!(f, "hermite:{}", join(k.entries())),
            TestFunction::Monomial(d) => write!(f, "monomial:{}", join(d)),
        }
    }
}
