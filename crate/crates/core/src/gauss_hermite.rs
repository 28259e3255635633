//! Gauss–Hermite rules for the standard Gaussian weight and their Cartesian
//! products.
//!
//! Nodes come from the eigenvalues of the symmetric tridiagonal Jacobi matrix
//! of the normalized Hermite recurrence (zero diagonal, off-diagonal
//! `sqrt(1), ..., sqrt(n-1)`), then each node is polished by Newton steps on
//! `H_n`. Weights use the closed form `1 / (n H_{n-1}(x_i)^2)`; their sum is
//! checked against 1 rather than renormalized, which makes it an independent
//! test of the node accuracy.
//!
//! All sums over a rule's nodes are accumulated over mirrored pairs
//! `(i, n-1-i)` in ascending order of `i`, with the middle node (odd `n`)
//! added last. Odd integrands therefore cancel exactly.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::hermite_eval_pair;

pub const MAX_ORDER: usize = 200;

/// Newton correction accepted as converged, relative to `max(1, |x|)`.
const NEWTON_STEP_TOL: f64 = 1e-10;
const NEWTON_MAX_STEPS: usize = 50;
const WEIGHT_SUM_TOL: f64 = 1e-12;

/// An `n`-point Gauss–Hermite rule with nodes in increasing order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// `sum_i weights[i] * values[i]` over mirrored pairs (see module docs).
    pub fn weighted_sum(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.order);
        let n = self.order;
        let mut acc = 0.0;
        for i in 0..n / 2 {
            let j = n - 1 - i;
            acc += self.weights[i] * values[i] + self.weights[j] * values[j];
        }
        if n % 2 == 1 {
            acc += self.weights[n / 2] * values[n / 2];
        }
        acc
    }

    /// Scaled Newton residual `|H_n(x)| / |H_n'(x)|` at each node.
    pub fn node_residuals(&self) -> Vec<f64> {
        self.nodes.iter().map(|&x| newton_correction(self.order, x).abs()).collect()
    }
}

/// Cartesian product of one-dimensional Gauss–Hermite rules.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductRule {
    pub per_dimension: Vec<QuadratureRule>,
}

impl ProductRule {
    pub fn dim(&self) -> usize {
        self.per_dimension.len()
    }

    pub fn orders(&self) -> Vec<usize> {
        self.per_dimension.iter().map(|r| r.order).collect()
    }

    /// `prod_j m_j`, or `None` on `u64` overflow.
    pub fn total_points(&self) -> Option<u64> {
        self.per_dimension
            .iter()
            .try_fold(1u64, |acc, r| acc.checked_mul(r.order as u64))
    }

    /// Explicit node list and product weights in lexicographic index order
    /// (last coordinate fastest).
    pub fn grid(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut nodes = vec![Vec::new()];
        let mut weights = vec![1.0];
        for rule in &self.per_dimension {
            let mut next_nodes = Vec::with_capacity(nodes.len() * rule.order);
            let mut next_weights = Vec::with_capacity(nodes.len() * rule.order);
            for (point, &w) in nodes.iter().zip(&weights) {
                for (&x, &a) in rule.nodes.iter().zip(&rule.weights) {
                    let mut p = point.clone();
                    p.push(x);
                    next_nodes.push(p);
                    next_weights.push(w * a);
                }
            }
            nodes = next_nodes;
            weights = next_weights;
        }
        (nodes, weights)
    }
}

/// `H_n(x) / H_n'(x)` with `H_n' = sqrt(n) H_{n-1}`.
fn newton_correction(n: usize, x: f64) -> f64 {
    let (h_n, h_nm1) = hermite_eval_pair(n, x);
    h_n / ((n as f64).sqrt() * h_nm1)
}

fn jacobi_eigenvalues(n: usize) -> Vec<f64> {
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let off = (i as f64).sqrt();
        jacobi[(i - 1, i)] = off;
        jacobi[(i, i - 1)] = off;
    }
    let mut eig: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    eig
}

fn polish_node(n: usize, mut x: f64) -> Result<f64> {
    for _ in 0..NEWTON_MAX_STEPS {
        let step = newton_correction(n, x);
        if !step.is_finite() {
            return Err(Error::Convergence(format!(
                "non-finite Newton step for order {n} near x = {x}"
            )));
        }
        x -= step;
        if step.abs() <= 1e-3 * NEWTON_STEP_TOL * x.abs().max(1.0) {
            return Ok(x);
        }
    }
    let residual = newton_correction(n, x).abs();
    if residual <= NEWTON_STEP_TOL * x.abs().max(1.0) {
        Ok(x)
    } else {
        Err(Error::Convergence(format!(
            "node of order {n} near x = {x} has residual {residual:e} after {NEWTON_MAX_STEPS} Newton steps"
        )))
    }
}

/// The `n`-point Gauss–Hermite rule, `1 <= n <= 200`.
pub fn gh_rule(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > MAX_ORDER {
        return Err(Error::OrderOutOfRange(n));
    }
    if n == 1 {
        return Ok(QuadratureRule {
            order: 1,
            nodes: vec![0.0],
            weights: vec![1.0],
        });
    }

    let mut nodes = jacobi_eigenvalues(n)
        .into_iter()
        .map(|x| polish_node(n, x))
        .collect::<Result<Vec<_>>>()?;
    nodes.sort_by(f64::total_cmp);
    if nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Convergence(format!(
            "Newton refinement merged two nodes of order {n}"
        )));
    }

    // enforce x_i = -x_{n+1-i} exactly; the middle node of an odd rule is 0
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let half = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -half;
        nodes[j] = half;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }

    for &x in &nodes {
        let r = newton_correction(n, x).abs();
        if r > NEWTON_STEP_TOL * x.abs().max(1.0) {
            return Err(Error::Convergence(format!(
                "symmetrized node {x} of order {n} has residual {r:e}"
            )));
        }
    }

    let nf = n as f64;
    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let (h_nm1, _) = hermite_eval_pair(n - 1, x);
            1.0 / (nf * h_nm1 * h_nm1)
        })
        .collect();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let avg = 0.5 * (weights[i] + weights[j]);
        weights[i] = avg;
        weights[j] = avg;
    }

    if weights.iter().any(|&w| w.is_nan() || w <= 0.0) {
        return Err(Error::Numerical(format!("non-positive weight in order-{n} rule")));
    }
    let rule = QuadratureRule { order: n, nodes, weights };
    let total = rule.weighted_sum(&vec![1.0; n]);
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::Numerical(format!(
            "order-{n} weights sum to {total:.17}, off by {:e}",
            total - 1.0
        )));
    }
    Ok(rule)
}

/// `sum_i alpha_i f(x_i)`.
pub fn apply_rule<F: Fn(f64) -> f64>(rule: &QuadratureRule, f: F) -> f64 {
    let values: Vec<f64> = rule.nodes.iter().map(|&x| f(x)).collect();
    rule.weighted_sum(&values)
}

/// Product of `gh_rule(m_j)` over the coordinates.
pub fn product_rule(orders: &[usize]) -> Result<ProductRule> {
    if orders.is_empty() {
        return Err(Error::invalid("product rule needs at least one dimension"));
    }
    let per_dimension = orders.iter().map(|&m| gh_rule(m)).collect::<Result<Vec<_>>>()?;
    Ok(ProductRule { per_dimension })
}

/// Tensor sum over the product grid.
///
/// Grid points are visited in lexicographic index order; the sum is nested,
/// innermost over the last coordinate, each level accumulated as in
/// [`QuadratureRule::weighted_sum`].
pub fn apply_product_rule<F: Fn(&[f64]) -> f64>(rule: &ProductRule, f: F) -> f64 {
    let mut point = vec![0.0; rule.dim()];
    nested_sum(&rule.per_dimension, 0, &mut point, &f)
}

fn nested_sum<F: Fn(&[f64]) -> f64>(
    rules: &[QuadratureRule],
    depth: usize,
    point: &mut Vec<f64>,
    f: &F,
) -> f64 {
    if depth == rules.len() {
        return f(point);
    }
    let rule = &rules[depth];
    let mut values = Vec::with_capacity(rule.order);
    for &x in &rule.nodes {
        point[depth] = x;
        values.push(nested_sum(rules, depth + 1, point, f));
    }
    rule.weighted_sum(&values)
}

/// `int x^k phi dx`: 0 for odd `k`, `(k-1)!!` for even `k`.
pub fn gaussian_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let mut acc = 1.0;
    let mut j = 1;
    while j < k {
        acc *= j as f64;
        j += 2;
    }
    acc
}
