//! The weighted Hermite space with kernel
//!
//! ```text
//! K(x, y) = sum_{k in N_0^s} omega^{|k|_{a,b}} H_k(x) H_k(y),
//! |k|_{a,b} = sum_j a_j k_j^{b_j}
//! ```
//!
//! and norm `||f||^2 = sum_k f^(k)^2 omega^{-|k|_{a,b}}`.
//!
//! Truncated series carry a certificate built from Cramér's bound on `|H_k|`
//! and the geometric tail estimate
//! `sum_{k > K} omega^{a k^b} <= omega^{a (K+1)^b} / (1 - omega^a)`,
//! which holds for every `a >= 1, b >= 1` because `k^b - (K+1)^b >= k - (K+1)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{cramer_bound, hermite_eval_multi, recurrence_step, MultiIndex};

pub const OMEGA_MIN: f64 = 1e-6;
pub const OMEGA_MAX: f64 = 1.0 - 1e-6;

/// Hard cap on the number of terms of any univariate series.
pub(crate) const MAX_SERIES_TERMS: usize = 100_000;

/// How a weight sequence `a_j` or `b_j` is specified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightSequence {
    /// A finite list; entries beyond its length are undefined.
    Explicit { values: Vec<f64> },
    /// `alpha * j^gamma` for `j = 1, 2, ...`.
    Power { alpha: f64, gamma: f64 },
}

impl WeightSequence {
    /// The `j`-th entry, 1-based.
    pub fn at(&self, j: usize) -> Result<f64> {
        assert!(j >= 1, "weight sequences are 1-based");
        match self {
            WeightSequence::Explicit { values } => values.get(j - 1).copied().ok_or_else(|| {
                Error::invalid(format!(
                    "explicit weight list has {} entries; index {j} is undefined",
                    values.len()
                ))
            }),
            WeightSequence::Power { alpha, gamma } => Ok(alpha * (j as f64).powf(*gamma)),
        }
    }

    pub fn is_generator(&self) -> bool {
        matches!(self, WeightSequence::Power { .. })
    }

    /// `Some(true)` when the generator is constant in `j`, `Some(false)` when
    /// it grows without bound, `None` for explicit lists.
    pub fn is_bounded(&self) -> Option<bool> {
        match self {
            WeightSequence::Explicit { .. } => None,
            WeightSequence::Power { gamma, .. } => Some(*gamma == 0.0),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        match self {
            WeightSequence::Explicit { values } => {
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid(format!("{name}: non-finite weight")));
                }
            }
            WeightSequence::Power { alpha, gamma } => {
                if !(alpha.is_finite() && *alpha >= 1.0) {
                    return Err(Error::invalid(format!("{name}: alpha must be >= 1, got {alpha}")));
                }
                if !(gamma.is_finite() && *gamma >= 0.0) {
                    return Err(Error::invalid(format!("{name}: gamma must be >= 0, got {gamma}")));
                }
            }
        }
        Ok(())
    }
}

/// On-disk description of a space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    pub s: usize,
    pub omega: f64,
    pub a: WeightSequence,
    pub b: WeightSequence,
    /// Explicit declaration that `a_j 2^{b_j}` stays bounded (or not) beyond
    /// the listed prefix. Only consulted for explicit lists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_bounded: Option<bool>,
}

/// `H(K_{s,a,b,omega})` restricted to dimension `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSpace {
    omega: f64,
    a_seq: WeightSequence,
    b_seq: WeightSequence,
    a: Vec<f64>,
    b: Vec<f64>,
    declared_bounded: Option<bool>,
}

impl WeightedSpace {
    pub fn new(s: usize, omega: f64, a_seq: WeightSequence, b_seq: WeightSequence) -> Result<Self> {
        if s == 0 {
            return Err(Error::invalid("dimension s must be at least 1"));
        }
        if !(OMEGA_MIN..=OMEGA_MAX).contains(&omega) {
            return Err(Error::invalid(format!(
                "omega must lie in [{OMEGA_MIN}, {OMEGA_MAX}], got {omega}"
            )));
        }
        a_seq.validate("a")?;
        b_seq.validate("b")?;
        let a = (1..=s).map(|j| a_seq.at(j)).collect::<Result<Vec<_>>>()?;
        let b = (1..=s).map(|j| b_seq.at(j)).collect::<Result<Vec<_>>>()?;
        check_monotone("a", &a)?;
        check_monotone("b", &b)?;
        Ok(WeightedSpace {
            omega,
            a_seq,
            b_seq,
            a,
            b,
            declared_bounded: None,
        })
    }

    /// Space given by explicit weight lists of equal length.
    pub fn explicit(omega: f64, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        let s = a.len();
        WeightedSpace::new(
            s,
            omega,
            WeightSequence::Explicit { values: a },
            WeightSequence::Explicit { values: b },
        )
    }

    pub fn from_config(cfg: &SpaceConfig) -> Result<Self> {
        let mut space = WeightedSpace::new(cfg.s, cfg.omega, cfg.a.clone(), cfg.b.clone())?;
        space.declared_bounded = cfg.declared_bounded;
        Ok(space)
    }

    pub fn to_config(&self) -> SpaceConfig {
        SpaceConfig {
            s: self.s(),
            omega: self.omega,
            a: self.a_seq.clone(),
            b: self.b_seq.clone(),
            declared_bounded: self.declared_bounded,
        }
    }

    pub fn with_declared_bounded(mut self, bounded: Option<bool>) -> Self {
        self.declared_bounded = bounded;
        self
    }

    pub fn s(&self) -> usize {
        self.a.len()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn a_sequence(&self) -> &WeightSequence {
        &self.a_seq
    }

    pub fn b_sequence(&self) -> &WeightSequence {
        &self.b_seq
    }

    pub fn declared_bounded(&self) -> Option<bool> {
        self.declared_bounded
    }

    pub fn is_generator(&self) -> bool {
        self.a_seq.is_generator() && self.b_seq.is_generator()
    }

    /// `a_j` for any `j >= 1`; beyond `s` only generator sequences answer.
    pub fn a_at(&self, j: usize) -> Result<f64> {
        self.a_seq.at(j)
    }

    pub fn b_at(&self, j: usize) -> Result<f64> {
        self.b_seq.at(j)
    }

    /// `a_j 2^{b_j}`, 1-based.
    pub fn growth_at(&self, j: usize) -> Result<f64> {
        Ok(self.a_at(j)? * self.b_at(j)?.exp2())
    }

    /// The same weights in dimension `s'`.
    pub fn with_dimension(&self, s: usize) -> Result<Self> {
        let mut space = WeightedSpace::new(s, self.omega, self.a_seq.clone(), self.b_seq.clone())?;
        space.declared_bounded = self.declared_bounded;
        Ok(space)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.s() {
            return Err(Error::DimensionMismatch {
                expected: self.s(),
                got,
            });
        }
        Ok(())
    }
}

fn check_monotone(name: &str, w: &[f64]) -> Result<()> {
    if w[0] < 1.0 {
        return Err(Error::invalid(format!("{name}_1 must be >= 1, got {}", w[0])));
    }
    if let Some(i) = w.windows(2).position(|p| p[1] < p[0]) {
        return Err(Error::invalid(format!(
            "{name} must be nondecreasing: {name}_{} = {} > {name}_{} = {}",
            i + 1,
            w[i],
            i + 2,
            w[i + 1]
        )));
    }
    Ok(())
}

/// `|k|_{a,b} = sum_j a_j k_j^{b_j}`.
pub fn exponent_weight(space: &WeightedSpace, k: &MultiIndex) -> Result<f64> {
    space.check_dim(k.dim())?;
    Ok(k.entries()
        .iter()
        .zip(space.a().iter().zip(space.b()))
        .map(|(&kj, (&a, &b))| if kj == 0 { 0.0 } else { a * (kj as f64).powf(b) })
        .sum())
}

/// `omega^{a k^b}`.
#[inline]
pub(crate) fn decay(a: f64, b: f64, ln_omega: f64, k: usize) -> f64 {
    if k == 0 {
        1.0
    } else {
        (a * (k as f64).powf(b) * ln_omega).exp()
    }
}

/// Upper bound on `sum_{k > last} omega^{a k^b}`.
pub fn geometric_tail(a: f64, b: f64, omega: f64, last: usize) -> f64 {
    decay(a, b, omega.ln(), last + 1) / (1.0 - omega.powf(a))
}

/// Univariate kernel series `sum_{k >= first} omega^{a k^b} H_k(x) H_k(y)`,
/// truncated once the certified remainder is at most `delta`.
/// Returns `(value, remainder bound)`.
pub(crate) fn univariate_kernel(
    a: f64,
    b: f64,
    omega: f64,
    x: f64,
    y: f64,
    first: usize,
    delta: f64,
) -> Result<(f64, f64)> {
    let ln_omega = omega.ln();
    let scale = cramer_bound(x) * cramer_bound(y) / (1.0 - omega.powf(a));
    let (mut hx_prev, mut hx) = (0.0, 1.0);
    let (mut hy_prev, mut hy) = (0.0, 1.0);
    let mut acc = 0.0;
    let mut k = 0usize;
    loop {
        if k >= first {
            acc += decay(a, b, ln_omega, k) * hx * hy;
        }
        let tail = scale * decay(a, b, ln_omega, k + 1);
        if k + 1 >= first && tail <= delta {
            return Ok((acc, tail));
        }
        if k >= MAX_SERIES_TERMS {
            return Err(Error::Convergence(format!(
                "kernel series at ({x}, {y}) needs more than {MAX_SERIES_TERMS} terms for tolerance {delta:e}"
            )));
        }
        let (nx, ny) = if k == 0 {
            (x, y)
        } else {
            (
                recurrence_step(k, x, hx, hx_prev),
                recurrence_step(k, y, hy, hy_prev),
            )
        };
        hx_prev = hx;
        hx = nx;
        hy_prev = hy;
        hy = ny;
        k += 1;
    }
}

/// `prod_j (c_j + delta) - prod_j c_j` for `c_j >= 0`, summed telescopically.
fn product_perturbation(c: &[f64], delta: f64) -> f64 {
    let s = c.len();
    let mut suffix = vec![1.0; s + 1];
    for j in (0..s).rev() {
        suffix[j] = suffix[j + 1] * c[j];
    }
    let mut prefix = 1.0;
    let mut total = 0.0;
    for j in 0..s {
        total += delta * prefix * suffix[j + 1];
        prefix *= c[j] + delta;
    }
    total
}

/// Certified kernel value. With `minus_one` the constant `k = 0` term is
/// removed, i.e. `K(x, y) - 1` is returned without cancellation.
/// Returns `(value, remainder bound)` with remainder `<= tol`.
pub(crate) fn kernel_certified(
    space: &WeightedSpace,
    x: &[f64],
    y: &[f64],
    tol: f64,
    minus_one: bool,
) -> Result<(f64, f64)> {
    space.check_dim(x.len())?;
    space.check_dim(y.len())?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("kernel arguments must be finite"));
    }
    let s = space.s();
    let mut delta = tol / s as f64;
    for _ in 0..64 {
        let mut tails = Vec::with_capacity(s);
        let mut parts = Vec::with_capacity(s);
        for j in 0..s {
            let (t, tail) =
                univariate_kernel(space.a[j], space.b[j], space.omega, x[j], y[j], 1, delta)?;
            parts.push(t);
            tails.push(tail);
        }
        let factors: Vec<f64> = parts.iter().map(|t| (1.0 + t).abs()).collect();
        let bound = product_perturbation(&factors, delta);
        if bound <= tol {
            // prod (1 + t_j) - 1 accumulated as r <- r + t + r t
            let minus = parts.iter().fold(0.0, |r, &t| r + t + r * t);
            let value = if minus_one { minus } else { 1.0 + minus };
            return Ok((value, bound));
        }
        delta *= 0.5 * tol / bound;
    }
    Err(Error::Convergence(format!(
        "could not certify kernel product to tolerance {tol:e}"
    )))
}

/// `K_{s,a,b,omega}(x, y)` with absolute truncation error at most `tol`.
pub fn kernel_eval(space: &WeightedSpace, x: &[f64], y: &[f64], tol: f64) -> Result<f64> {
    kernel_certified(space, x, y, tol, false).map(|(v, _)| v)
}

/// One term of a series file: `{"k": [...], "coef": ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub k: MultiIndex,
    pub coef: f64,
}

/// A finite Hermite expansion `f = sum_k f^(k) H_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteSeries {
    dim: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl HermiteSeries {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "series dimension must be positive");
        HermiteSeries {
            dim,
            terms: BTreeMap::new(),
        }
    }

    /// Adds `coef` to the coefficient of `H_k`.
    pub fn add_term(&mut self, k: MultiIndex, coef: f64) -> Result<()> {
        if k.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: k.dim(),
            });
        }
        if !coef.is_finite() {
            return Err(Error::invalid(format!("coefficient of H_{k} is not finite")));
        }
        *self.terms.entry(k).or_insert(0.0) += coef;
        Ok(())
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = SeriesTerm>) -> Result<Self> {
        let mut series = HermiteSeries::new(dim);
        for t in terms {
            series.add_term(t.k, t.coef)?;
        }
        Ok(series)
    }

    /// Dimension taken from the first term.
    pub fn from_term_list(terms: Vec<SeriesTerm>) -> Result<Self> {
        let dim = terms
            .first()
            .map(|t| t.k.dim())
            .ok_or_else(|| Error::invalid("series file has no terms"))?;
        HermiteSeries::from_terms(dim, terms)
    }

    pub fn to_term_list(&self) -> Vec<SeriesTerm> {
        self.terms
            .iter()
            .map(|(k, &coef)| SeriesTerm { k: k.clone(), coef })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, k: &MultiIndex) -> f64 {
        self.terms.get(k).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(k, &c)| (k, c))
    }

    /// Pointwise value `sum_k f^(k) H_k(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        self.terms
            .iter()
            .map(|(k, &c)| hermite_eval_multi(k, x).map(|h| c * h))
            .sum()
    }

    /// `I_s(f) = f^(0)` by orthonormality.
    pub fn integral(&self) -> f64 {
        self.coefficient(&MultiIndex::zero(self.dim))
    }
}

/// `sum_k f^(k)^2 omega^{-|k|_{a,b}}`.
pub fn series_norm_squared(space: &WeightedSpace, f: &HermiteSeries) -> Result<f64> {
    space.check_dim(f.dim())?;
    let ln_omega = space.omega().ln();
    f.terms()
        .map(|(k, c)| exponent_weight(space, k).map(|w| c * c * (-w * ln_omega).exp()))
        .sum()
}

/// `||f||` in the Hermite space.
pub fn series_norm(space: &WeightedSpace, f: &HermiteSeries) -> Result<f64> {
    series_norm_squared(space, f).map(f64::sqrt)
}

pub fn series_eval(f: &HermiteSeries, x: &[f64]) -> Result<f64> {
    f.eval(x)
}

pub fn series_integral(f: &HermiteSeries) -> f64 {
    f.integral()
}

/// `<f, g>` restricted to the support of `f`; `g` is given by its
/// coefficient function.
pub fn inner_product_with<G: Fn(&MultiIndex) -> f64>(
    space: &WeightedSpace,
    f: &HermiteSeries,
    g: G,
) -> Result<f64> {
    space.check_dim(f.dim())?;
    let ln_omega = space.omega().ln();
    f.terms()
        .map(|(k, c)| exponent_weight(space, k).map(|w| c * g(k) * (-w * ln_omega).exp()))
        .sum()
}

/// Regime quantities of a space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeSummary {
    pub s: usize,
    /// `B(s) = sum_{j<=s} 1 / b_j`.
    pub b_s: f64,
    /// `A(s) = sum_{j<=s} 1 / (a_j 2^{b_j})`.
    pub a_s: f64,
    /// `1 / B(s)`, the best exponential rate.
    pub p_star_s: f64,
    /// `a_j 2^{b_j}` for `j = 1..s`.
    pub growth: Vec<f64>,
    /// `min_{j' >= j, j' <= s} a_{j'} 2^{b_{j'}}` for each `j`.
    pub running_min_growth: Vec<f64>,
    /// Whether `a_j 2^{b_j} >= beta j^{1+eta}` for all `j <= s`, when
    /// `(beta, eta)` was supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_condition: Option<GrowthCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub beta: f64,
    pub eta: f64,
    pub holds: bool,
    /// First index where the inequality fails.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_violation: Option<usize>,
}

/// First `j` in `1..=horizon` with `a_j 2^{b_j} < beta j^{1+eta}`.
pub(crate) fn growth_violation(
    space: &WeightedSpace,
    beta: f64,
    eta: f64,
    horizon: usize,
) -> Result<Option<usize>> {
    for j in 1..=horizon {
        if space.growth_at(j)? < beta * (j as f64).powf(1.0 + eta) {
            return Ok(Some(j));
        }
    }
    Ok(None)
}

pub fn regime_summary(space: &WeightedSpace, growth_params: Option<(f64, f64)>) -> Result<RegimeSummary> {
    let b_s: f64 = space.b().iter().map(|b| 1.0 / b).sum();
    let growth: Vec<f64> = space
        .a()
        .iter()
        .zip(space.b())
        .map(|(a, b)| a * b.exp2())
        .collect();
    let a_s: f64 = growth.iter().map(|g| 1.0 / g).sum();
    let mut running_min_growth = growth.clone();
    for j in (0..growth.len().saturating_sub(1)).rev() {
        running_min_growth[j] = running_min_growth[j].min(running_min_growth[j + 1]);
    }
    let growth_condition = match growth_params {
        Some((beta, eta)) => {
            if !(beta > 0.0 && eta > 0.0) {
                return Err(Error::invalid("growth check needs beta > 0 and eta > 0"));
            }
            let first_violation = growth_violation(space, beta, eta, space.s())?;
            Some(GrowthCheck {
                beta,
                eta,
                holds: first_violation.is_none(),
                first_violation,
            })
        }
        None => None,
    };
    Ok(RegimeSummary {
        s: space.s(),
        b_s,
        a_s,
        p_star_s: 1.0 / b_s,
        growth,
        running_min_growth,
        growth_condition,
    })
}
