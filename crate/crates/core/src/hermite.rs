//! Normalized probabilists' Hermite polynomials.
//!
//! `H_k = He_k / sqrt(k!)`, orthonormal in `L^2(R, phi)` where `phi` is the
//! standard Gaussian density. Evaluation uses the upward recurrence
//!
//! ```text
//! H_0(x) = 1,  H_1(x) = x,
//! H_{k+1}(x) = (x H_k(x) - sqrt(k) H_{k-1}(x)) / sqrt(k + 1)
//! ```
//!
//! obtained from `He_{k+1} = x He_k - k He_{k-1}` after dividing by
//! `sqrt((k+1)!)`. The normalized values stay bounded by
//! `(2 pi)^{1/4} exp(x^2/4)` for every `k`, so the recurrence neither
//! overflows nor underflows on the ranges used by the error sums.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(2 pi)^{1/4}`, the constant in Cramér's bound on `|H_k(x)| exp(-x^2/4)`.
pub const CRAMER_CONSTANT: f64 = 1.583_233_487_086_159_5;

/// A multi-index `k = (k_1, ..., k_s)` of non-negative integers.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("multi-index must have at least one entry"));
        }
        Ok(MultiIndex(entries))
    }

    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1, "multi-index dimension must be positive");
        MultiIndex(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }

    /// Concatenation `(k, l)` of two multi-indices.
    pub fn concat(&self, other: &MultiIndex) -> MultiIndex {
        let mut entries = self.0.clone();
        entries.extend_from_slice(&other.0);
        MultiIndex(entries)
    }
}

impl TryFrom<Vec<u32>> for MultiIndex {
    type Error = Error;

    fn try_from(entries: Vec<u32>) -> Result<Self> {
        MultiIndex::new(entries)
    }
}

impl From<MultiIndex> for Vec<u32> {
    fn from(k: MultiIndex) -> Self {
        k.0
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

/// One step of the normalized recurrence: returns `H_{k+1}(x)` from
/// `H_k(x)` and `H_{k-1}(x)`.
#[inline]
pub(crate) fn recurrence_step(k: usize, x: f64, h_k: f64, h_km1: f64) -> f64 {
    (x * h_k - (k as f64).sqrt() * h_km1) / ((k + 1) as f64).sqrt()
}

/// `H_k(x)` for the normalized probabilists' family.
pub fn hermite_eval(k: usize, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        _ => {
            let mut prev = 1.0;
            let mut cur = x;
            for j in 1..k {
                let next = recurrence_step(j, x, cur, prev);
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `H_k(x)` together with `H_{k-1}(x)` (the latter is 0 for `k = 0`).
pub(crate) fn hermite_eval_pair(k: usize, x: f64) -> (f64, f64) {
    match k {
        0 => (1.0, 0.0),
        1 => (x, 1.0),
        _ => {
            let mut prev = 1.0;
            let mut cur = x;
            for j in 1..k {
                let next = recurrence_step(j, x, cur, prev);
                prev = cur;
                cur = next;
            }
            (cur, prev)
        }
    }
}

/// `[H_0(x), ..., H_{k_max}(x)]`, element `j` identical to `hermite_eval(j, x)`.
pub fn hermite_eval_all(k_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(1.0);
    if k_max >= 1 {
        out.push(x);
    }
    for j in 1..k_max {
        let next = recurrence_step(j, x, out[j], out[j - 1]);
        out.push(next);
    }
    out
}

/// Tensor-product polynomial `H_k(x) = prod_j H_{k_j}(x_j)`.
pub fn hermite_eval_multi(k: &MultiIndex, x: &[f64]) -> Result<f64> {
    if k.dim() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            got: x.len(),
        });
    }
    Ok(k
        .entries()
        .iter()
        .zip(x)
        .map(|(&kj, &xj)| hermite_eval(kj as usize, xj))
        .product())
}

/// `ln(n!)` by direct summation of logarithms.
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// `int H_k H_l H_m phi dx`.
///
/// Nonzero only when `k + l + m = 2 sigma` is even and `k, l, m <= sigma`, in
/// which case it equals `sqrt(k! l! m!) / ((sigma-k)! (sigma-l)! (sigma-m)!)`.
/// Evaluated in log space so orders in the hundreds do not overflow.
pub fn triple_product_integral(k: usize, l: usize, m: usize) -> f64 {
    let total = k + l + m;
    if !total.is_multiple_of(2) {
        return 0.0;
    }
    let sigma = total / 2;
    if k > sigma || l > sigma || m > sigma {
        return 0.0;
    }
    let log_num = 0.5 * (ln_factorial(k) + ln_factorial(l) + ln_factorial(m));
    let log_den = ln_factorial(sigma - k) + ln_factorial(sigma - l) + ln_factorial(sigma - m);
    (log_num - log_den).exp()
}

/// Cramér's bound `(2 pi)^{1/4} exp(x^2/4)` on `|H_k(x)|`, uniform in `k`.
pub fn cramer_bound(x: f64) -> f64 {
    CRAMER_CONSTANT * (0.25 * x * x).exp()
}
