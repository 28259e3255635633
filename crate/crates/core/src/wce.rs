//! Worst-case errors of linear rules in the weighted Hermite space.
//!
//! For a rule `A(f) = sum_i alpha_i f(x_i)` the squared worst-case error is
//!
//! ```text
//! e^2 = (-1 + sum_i alpha_i)^2 + sum_{k != 0} omega^{|k|_{a,b}} (sum_i alpha_i H_k(x_i))^2
//!     = (-1 + sum_i alpha_i)^2 + sum_{i,i'} alpha_i alpha_i' (K(x_i, x_i') - 1).
//! ```
//!
//! [`general_wce`] evaluates the second (Gram) form, where the kernel
//! factorizes over coordinates. Product Gauss–Hermite rules have the exact
//! identity `e^2 = -1 + prod_j (1 + e_j^2)` with one-dimensional errors
//! `e_j^2 = sum_{k >= 2 m_j, k even} omega^{a_j k^{b_j}} err(H_k)^2`, which
//! [`product_gh_wce`] uses directly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss_hermite::{gh_rule, QuadratureRule};
use crate::hermite::recurrence_step;
use crate::hermite_space::{decay, kernel_certified, WeightedSpace, MAX_SERIES_TERMS};

/// `sqrt(8 pi)`, the bound on `err(H_{2l})^2` for Gauss–Hermite rules.
pub const SQRT_8PI: f64 = 5.013_256_549_262_000_5;

/// Largest `|err(H_k)|` tolerated for odd `k >= 2n`.
const ODD_TERM_TOL: f64 = 1e-12;

/// The one-dimensional series also stops only once its tail is this small
/// relative to the partial sum, so the reported value is never just a bound.
const REL_TAIL_TOL: f64 = 1e-10;

/// Squared worst-case error with its truncation certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub e_squared: f64,
    /// Certified bound on the truncated remainder: the exact value lies in
    /// `[e_squared, e_squared + tail_bound]` up to rounding.
    pub tail_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_dimension_e_squared: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic_upper_e_squared: Option<f64>,
    /// Set when a negative rounding residue was replaced by zero.
    #[serde(default)]
    pub clamped: bool,
}

impl ErrorReport {
    pub fn e(&self) -> f64 {
        self.e_squared.sqrt()
    }

    /// `sqrt(e_squared + tail_bound)`, an upper bound on the exact error.
    pub fn e_upper(&self) -> f64 {
        (self.e_squared + self.tail_bound).sqrt()
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("tolerance must be positive and finite, got {tol}")))
    }
}

/// `omega^{a (2n)^b} sqrt(8 pi) / (1 - omega^2)`.
pub fn one_dim_upper_bound(a: f64, b: f64, omega: f64, n: usize) -> f64 {
    decay(a, b, omega.ln(), 2 * n) * SQRT_8PI / (1.0 - omega * omega)
}

/// `-1 + prod_j (1 + omega^{a_j (2 m_j)^{b_j}} sqrt(8 pi) / (1 - omega^2))`.
pub fn product_upper_bound(space: &WeightedSpace, m: &[usize]) -> Result<f64> {
    if m.len() != space.s() {
        return Err(Error::DimensionMismatch {
            expected: space.s(),
            got: m.len(),
        });
    }
    let log_prod: f64 = m
        .iter()
        .enumerate()
        .map(|(j, &mj)| one_dim_upper_bound(space.a()[j], space.b()[j], space.omega(), mj).ln_1p())
        .sum();
    Ok(log_prod.exp_m1())
}

/// Squared worst-case error of a given one-dimensional Gauss–Hermite rule.
pub fn one_dim_rule_wce(rule: &QuadratureRule, a: f64, b: f64, omega: f64, tol: f64) -> Result<ErrorReport> {
    check_tol(tol)?;
    let n = rule.order;
    let ln_omega = omega.ln();
    let scale = SQRT_8PI / (1.0 - omega.powf(a));
    let mut prev = vec![0.0; n];
    let mut cur = vec![1.0; n];
    let mut acc = 0.0;
    let mut k = 0usize;
    loop {
        if k >= 2 * n {
            let err = -rule.weighted_sum(&cur);
            if k % 2 == 1 {
                if err.abs() > ODD_TERM_TOL {
                    return Err(Error::Numerical(format!(
                        "order-{n} rule gives |err(H_{k})| = {:e} for odd k; nodes are not symmetric",
                        err.abs()
                    )));
                }
            } else {
                acc += decay(a, b, ln_omega, k) * err * err;
            }
        }
        let tail = scale * decay(a, b, ln_omega, k + 1);
        if k >= 2 * n && tail <= tol && (tail <= REL_TAIL_TOL * acc || tail < f64::MIN_POSITIVE) {
            return Ok(ErrorReport {
                e_squared: acc,
                tail_bound: tail,
                per_dimension_e_squared: Some(vec![acc]),
                analytic_upper_e_squared: Some(one_dim_upper_bound(a, b, omega, n)),
                clamped: false,
            });
        }
        if k >= MAX_SERIES_TERMS {
            return Err(Error::Convergence(format!(
                "one-dimensional error series needs more than {MAX_SERIES_TERMS} terms for tolerance {tol:e}"
            )));
        }
        for i in 0..n {
            let next = if k == 0 {
                rule.nodes[i]
            } else {
                recurrence_step(k, rule.nodes[i], cur[i], prev[i])
            };
            prev[i] = cur[i];
            cur[i] = next;
        }
        k += 1;
    }
}

/// Squared worst-case error of the `n`-point Gauss–Hermite rule in the
/// one-dimensional space with weights `(a, b, omega)`.
pub fn one_dim_gh_wce(a: f64, b: f64, omega: f64, n: usize, tol: f64) -> Result<ErrorReport> {
    let rule = gh_rule(n)?;
    one_dim_rule_wce(&rule, a, b, omega, tol)
}

/// Combines per-dimension reports through `e^2 = -1 + prod_j (1 + e_j^2)`.
pub fn combine_product(per_dim: &[ErrorReport]) -> ErrorReport {
    let logs: Vec<f64> = per_dim.iter().map(|r| r.e_squared.ln_1p()).collect();
    let log_prod: f64 = logs.iter().sum();
    let widened: f64 = per_dim
        .iter()
        .zip(&logs)
        .map(|(r, &l)| (r.e_squared + r.tail_bound).ln_1p() - l)
        .sum();
    let tail_bound = log_prod.exp() * widened.exp_m1();
    let analytic = per_dim
        .iter()
        .map(|r| r.analytic_upper_e_squared.map(f64::ln_1p))
        .sum::<Option<f64>>()
        .map(f64::exp_m1);
    ErrorReport {
        e_squared: log_prod.exp_m1(),
        tail_bound,
        per_dimension_e_squared: Some(per_dim.iter().map(|r| r.e_squared).collect()),
        analytic_upper_e_squared: analytic,
        clamped: false,
    }
}

/// Squared worst-case error of the Cartesian product of Gauss–Hermite rules
/// of orders `m`.
pub fn product_gh_wce(space: &WeightedSpace, m: &[usize], tol: f64) -> Result<ErrorReport> {
    check_tol(tol)?;
    if m.len() != space.s() {
        return Err(Error::DimensionMismatch {
            expected: space.s(),
            got: m.len(),
        });
    }
    let per_tol = tol / (3.0 * space.s() as f64);
    let per_dim = m
        .par_iter()
        .enumerate()
        .map(|(j, &mj)| one_dim_gh_wce(space.a()[j], space.b()[j], space.omega(), mj, per_tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(combine_product(&per_dim))
}

/// Squared worst-case error of an arbitrary rule through the kernel Gram
/// form. An empty rule has `e = 1`.
pub fn general_wce(space: &WeightedSpace, nodes: &[Vec<f64>], weights: &[f64], tol: f64) -> Result<ErrorReport> {
    check_tol(tol)?;
    if nodes.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: nodes.len(),
            got: weights.len(),
        });
    }
    if let Some(bad) = nodes.iter().find(|x| x.len() != space.s()) {
        return Err(Error::DimensionMismatch {
            expected: space.s(),
            got: bad.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::invalid("rule weights must be finite"));
    }
    let n = nodes.len();
    let max_w = weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let total: f64 = weights.iter().sum();
    let constant = (total - 1.0) * (total - 1.0);
    if n == 0 || max_w == 0.0 {
        return Ok(ErrorReport {
            e_squared: constant,
            tail_bound: 0.0,
            per_dimension_e_squared: None,
            analytic_upper_e_squared: None,
            clamped: false,
        });
    }
    let pair_tol = tol / ((n * n) as f64 * max_w * max_w);

    // (gram contribution, certified remainder, absolute mass) per row i,
    // summing over i' >= i with off-diagonal pairs doubled
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut gram = 0.0;
            let mut rem = 0.0;
            let mut mass = 0.0;
            for ip in i..n {
                let (km1, bound) = kernel_certified(space, &nodes[i], &nodes[ip], pair_tol, true)?;
                let mult = if ip == i { 1.0 } else { 2.0 };
                let ww = mult * weights[i] * weights[ip];
                gram += ww * km1;
                rem += ww.abs() * bound;
                mass += (ww * km1).abs();
            }
            Ok((gram, rem, mass))
        })
        .collect::<Result<Vec<_>>>()?;
    let (gram, tail_bound, mass) = rows
        .iter()
        .fold((0.0, 0.0, 0.0), |(g, r, m), &(gi, ri, mi)| (g + gi, r + ri, m + mi));

    let mut e_squared = constant + gram;
    let mut clamped = false;
    if e_squared < 0.0 {
        let rounding = 1e-14 + 64.0 * f64::EPSILON * (mass + constant) + tail_bound;
        if -e_squared <= rounding {
            e_squared = 0.0;
            clamped = true;
        } else {
            return Err(Error::Numerical(format!(
                "Gram form produced e^2 = {e_squared:e}, beyond rounding scale {rounding:e}"
            )));
        }
    }
    Ok(ErrorReport {
        e_squared,
        tail_bound,
        per_dimension_e_squared: None,
        analytic_upper_e_squared: None,
        clamped,
    })
}

/// `|I(f) - A(f)| <= e ||f||`.
pub fn function_error_bound(e: f64, norm: f64) -> Result<f64> {
    if !(e >= 0.0 && norm >= 0.0) {
        return Err(Error::invalid("error and norm must be non-negative"));
    }
    Ok(e * norm)
}
