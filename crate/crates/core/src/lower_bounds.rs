//! Lower bounds on the n-th minimal worst-case error.
//!
//! For any `t` with `t_j >= 1` and every `n < prod_j (t_j + 1)`,
//!
//! ```text
//! e(n, s) >= omega^{sum_j a_j (2 t_j)^{b_j}} / prod_j (4^{t_j} 2 (t_j + 1)^2).
//! ```
//!
//! Everything is evaluated in log space; the bound underflows quickly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite_space::WeightedSpace;

/// A lower bound together with the `t` that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundResult {
    pub t: Vec<u32>,
    pub log_bound: f64,
    /// `exp(log_bound)`; may underflow to zero even though the bound is positive.
    pub bound: f64,
    /// `prod_j (t_j + 1)`, saturating at `u64::MAX`.
    pub valid_for_n_below: u64,
}

/// Log of the per-coordinate factor `omega^{a (2t)^b} / (4^t 2 (t+1)^2)`.
/// Strictly decreasing in `t`.
fn log_factor(a: f64, b: f64, ln_omega: f64, t: u32) -> f64 {
    let tf = t as f64;
    a * (2.0 * tf).powf(b) * ln_omega - tf * 4f64.ln() - 2f64.ln() - 2.0 * (tf + 1.0).ln()
}

fn validity(t: &[u32]) -> u64 {
    t.iter()
        .fold(1u64, |acc, &tj| acc.saturating_mul(tj as u64 + 1))
}

pub fn lower_bound(space: &WeightedSpace, t: &[u32]) -> Result<LowerBoundResult> {
    if t.len() != space.s() {
        return Err(Error::DimensionMismatch {
            expected: space.s(),
            got: t.len(),
        });
    }
    if let Some(j) = t.iter().position(|&tj| tj == 0) {
        return Err(Error::invalid(format!("t_{} must be at least 1", j + 1)));
    }
    let ln_omega = space.omega().ln();
    let log_bound: f64 = t
        .iter()
        .enumerate()
        .map(|(j, &tj)| log_factor(space.a()[j], space.b()[j], ln_omega, tj))
        .sum();
    Ok(LowerBoundResult {
        t: t.to_vec(),
        log_bound,
        bound: log_bound.exp(),
        valid_for_n_below: validity(t),
    })
}

/// `omega^{sum_j a_j 2^{b_j}} / 64^s`, valid for `n < 2^s`.
///
/// This is the weaker all-ones form with `(t+1)^2 = 4` replaced by 8; the
/// value of [`lower_bound`] at `t = (1, ..., 1)` dominates it by `2^s`.
pub fn all_ones_bound(space: &WeightedSpace) -> LowerBoundResult {
    let s = space.s();
    let exponent: f64 = space
        .a()
        .iter()
        .zip(space.b())
        .map(|(&a, &b)| a * b.exp2())
        .sum();
    let log_bound = exponent * space.omega().ln() - s as f64 * 64f64.ln();
    LowerBoundResult {
        t: vec![1; s],
        log_bound,
        bound: log_bound.exp(),
        valid_for_n_below: validity(&vec![1; s]),
    }
}

struct Search {
    factors: Vec<Vec<f64>>,
    /// `suffix_ones[j] = sum_{i >= j} factors[i][0]`, the largest possible
    /// contribution of coordinates `j..s`.
    suffix_ones: Vec<f64>,
    n: u64,
    best: Option<(f64, Vec<u32>)>,
    current: Vec<u32>,
}

impl Search {
    fn visit(&mut self, j: usize, partial: f64, prod: u64) {
        let s = self.factors.len();
        if j == s {
            if prod > self.n && self.best.as_ref().is_none_or(|(b, _)| partial > *b) {
                self.best = Some((partial, self.current.clone()));
            }
            return;
        }
        for idx in 0..self.factors[j].len() {
            let f = self.factors[j][idx];
            let optimistic = partial + f + self.suffix_ones[j + 1];
            if let Some((b, _)) = &self.best {
                if optimistic <= *b {
                    // factors decrease in t, so larger t_j cannot do better
                    break;
                }
            }
            let tj = idx as u32 + 1;
            self.current.push(tj);
            self.visit(j + 1, partial + f, prod.saturating_mul(tj as u64 + 1));
            self.current.pop();
        }
    }
}

/// Largest bound over all `t` with `1 <= t_j <= t_cap` and
/// `prod_j (t_j + 1) > n`. Ties go to the lexicographically smallest `t`.
pub fn best_lower_bound(space: &WeightedSpace, n: u64, t_cap: u32) -> Result<LowerBoundResult> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if t_cap == 0 {
        return Err(Error::invalid("t_cap must be at least 1"));
    }
    let s = space.s();
    let ln_omega = space.omega().ln();
    let factors: Vec<Vec<f64>> = (0..s)
        .map(|j| {
            (1..=t_cap)
                .map(|t| log_factor(space.a()[j], space.b()[j], ln_omega, t))
                .collect()
        })
        .collect();
    let mut suffix_ones = vec![0.0; s + 1];
    for j in (0..s).rev() {
        suffix_ones[j] = suffix_ones[j + 1] + factors[j][0];
    }
    let mut search = Search {
        factors,
        suffix_ones,
        n,
        best: None,
        current: Vec::with_capacity(s),
    };
    search.visit(0, 0.0, 1);
    match search.best {
        Some((_, t)) => lower_bound(space, &t),
        None => Err(Error::invalid(format!(
            "no t with entries <= {t_cap} satisfies prod(t_j + 1) > {n}"
        ))),
    }
}

/// Whether `a_j 2^{b_j}` is known to stay bounded in `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundedness {
    Yes,
    No,
    Unknown,
}

/// Obstruction to weak tractability: `n(epsilon, s) >= min_n` at the stated
/// `epsilon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obstruction {
    pub epsilon: f64,
    pub log_epsilon: f64,
    pub min_n: u64,
    /// `ln 2 / (1 + ln(1/eta))`, the positive limit of
    /// `ln n(eps, s) / (s + ln(1/eps))` along the obstruction.
    pub limit_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NecessityReport {
    pub bounded: Boundedness,
    /// `max_{j <= s} a_j 2^{b_j}`.
    pub a_sup: f64,
    /// `omega^A / 64`.
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obstruction: Option<Obstruction>,
}

/// If `a_j 2^{b_j} <= A` for all `j`, then `e(n, s) >= eta^s` for `n < 2^s`
/// with `eta = omega^A / 64`, so weak tractability fails.
pub fn ecwt_necessity_diagnostic(space: &WeightedSpace) -> NecessityReport {
    let bounded = match (space.a_sequence().is_bounded(), space.b_sequence().is_bounded()) {
        (Some(a), Some(b)) => {
            if a && b {
                Boundedness::Yes
            } else {
                Boundedness::No
            }
        }
        _ => match space.declared_bounded() {
            Some(true) => Boundedness::Yes,
            Some(false) => Boundedness::No,
            None => Boundedness::Unknown,
        },
    };
    let a_sup = space
        .a()
        .iter()
        .zip(space.b())
        .map(|(&a, &b)| a * b.exp2())
        .fold(f64::NEG_INFINITY, f64::max);
    let log_eta = a_sup * space.omega().ln() - 64f64.ln();
    let eta = log_eta.exp();
    let obstruction = (bounded == Boundedness::Yes).then(|| {
        let s = space.s();
        let log_epsilon = s as f64 * log_eta - 2f64.ln();
        Obstruction {
            epsilon: log_epsilon.exp(),
            log_epsilon,
            min_n: if s >= 64 { u64::MAX } else { 1u64 << s },
            limit_ratio: 2f64.ln() / (1.0 - log_eta),
        }
    });
    NecessityReport {
        bounded,
        a_sup,
        eta,
        obstruction,
    }
}
