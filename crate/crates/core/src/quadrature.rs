//! Tensorized Gauss-Hermite quadrature against the standard Gaussian measure.
//!
//! Rules use the probabilists' normalization: weights sum to one and the
//! rule integrates f against the standard Gaussian density per axis, exactly
//! for polynomials of degree below twice the order. Nodes and weights come
//! from the Golub-Welsch eigendecomposition of the Jacobi matrix of the
//! probabilists' Hermite recurrence (diagonal 0, off-diagonal sqrt(k)).

use std::collections::HashMap;
use std::sync::{LazyLock, Mutex};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Nodes and weights of a one-dimensional rule.
pub type HermiteRule = (Vec<f64>, Vec<f64>);

/// One-dimensional probabilists' Gauss-Hermite rule: `(nodes, weights)` with
/// weights summing to 1, nodes ascending. Cached per order.
pub fn hermite_rule(order: usize) -> Result<HermiteRule> {
    if order == 0 {
        return Err(Error::InvalidParameter {
            name: "order",
            reason: "quadrature order must be at least 1".into(),
        });
    }
    static CACHE: LazyLock<Mutex<HashMap<usize, HermiteRule>>> =
        LazyLock::new(|| Mutex::new(HashMap::new()));
    if let Some(rule) = CACHE.lock().unwrap().get(&order) {
        return Ok(rule.clone());
    }
    let rule = compute_hermite_rule(order);
    CACHE.lock().unwrap().insert(order, rule.clone());
    Ok(rule)
}

/// Orthonormal Hermite values `p_0(x) .. p_n(x)` where `p_k = He_k / sqrt(k!)`
/// is orthonormal for the standard Gaussian. The orthonormal recurrence keeps
/// magnitudes bounded by `1/sqrt(min weight)`, so nothing overflows even at
/// the extreme nodes of large rules.
fn orthonormal_hermite(n: usize, x: f64) -> Vec<f64> {
    let mut values = Vec::with_capacity(n + 1);
    values.push(1.0);
    if n == 0 {
        return values;
    }
    values.push(x);
    for k in 1..n {
        let next = (x * values[k] - (k as f64).sqrt() * values[k - 1]) / ((k + 1) as f64).sqrt();
        values.push(next);
    }
    values
}

fn compute_hermite_rule(order: usize) -> (Vec<f64>, Vec<f64>) {
    if order == 1 {
        return (vec![0.0], vec![1.0]);
    }
    let mut jacobi = DMatrix::<f64>::zeros(order, order);
    for k in 1..order {
        let b = (k as f64).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    // eigenvalues give the nodes to near machine accuracy; eigenvector first
    // components do NOT give usable weights at extreme nodes (their absolute
    // eps-level noise dominates the true ~1e-100 magnitudes), so weights come
    // from the Christoffel-Darboux identity w = 1 / sum_k p_k(x)^2 instead,
    // after a couple of Newton polishing steps on the node.
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sqrt_order = (order as f64).sqrt();
    let mut weights = Vec::with_capacity(order);
    for x in nodes.iter_mut() {
        for _ in 0..2 {
            let p = orthonormal_hermite(order, *x);
            // He_n' = n He_{n-1}, in orthonormal terms p_n / (sqrt(n) p_{n-1})
            *x -= p[order] / (sqrt_order * p[order - 1]);
        }
        let p = orthonormal_hermite(order - 1, *x);
        let christoffel: f64 = p.iter().map(|v| v * v).sum();
        weights.push(1.0 / christoffel);
    }
    // symmetrize the rule and pin the total mass
    let n = order;
    for i in 0..n / 2 {
        let node = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -node;
        nodes[n - 1 - i] = node;
        let weight = 0.5 * (weights[i] + weights[n - 1 - i]);
        weights[i] = weight;
        weights[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    (nodes, weights)
}

/// Tensorized Gauss-Hermite grid realizing integration against mu on R^d.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    dimension: usize,
    order: usize,
    axis_nodes: Vec<f64>,
    axis_weights: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn new(dimension: usize, order: usize) -> Result<Self> {
        if dimension == 0 || dimension > 4 {
            return Err(Error::InvalidParameter {
                name: "dimension",
                reason: format!("tensor grids support 1..=4 axes, got {dimension}"),
            });
        }
        let (axis_nodes, axis_weights) = hermite_rule(order)?;
        let count = order.pow(dimension as u32);
        let mut nodes = Vec::with_capacity(count * dimension);
        let mut weights = Vec::with_capacity(count);
        let mut idx = vec![0usize; dimension];
        loop {
            let mut weight = 1.0;
            for &i in idx.iter() {
                nodes.push(axis_nodes[i]);
                weight *= axis_weights[i];
            }
            weights.push(weight);
            // odometer increment
            let mut axis = dimension;
            loop {
                if axis == 0 {
                    return Ok(QuadratureGrid {
                        dimension,
                        order,
                        axis_nodes,
                        axis_weights,
                        nodes,
                        weights,
                    });
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < order {
                    break;
                }
                idx[axis] = 0;
            }
        }
    }

    /// Grid with the per-dimension default order (24 up to d = 3, 12 at d = 4).
    pub fn with_default_order(dimension: usize) -> Result<Self> {
        let order = if dimension <= 3 { 24 } else { 12 };
        QuadratureGrid::new(dimension, order)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    pub fn axis_nodes(&self) -> &[f64] {
        &self.axis_nodes
    }

    pub fn axis_weights(&self) -> &[f64] {
        &self.axis_weights
    }

    /// Iterates `(node, weight)` in a fixed lexicographic order.
    pub fn nodes(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.nodes
            .chunks_exact(self.dimension)
            .zip(self.weights.iter().copied())
    }
}

/// Neumaier-compensated accumulator: deterministic summation independent of
/// how callers might batch the terms.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        CompensatedSum::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Integrates a function against mu over the tensor grid.
pub fn integrate_mu<F>(mut f: F, grid: &QuadratureGrid) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let mut acc = CompensatedSum::new();
    for (node, weight) in grid.nodes() {
        acc.add(weight * f(node));
    }
    acc.total()
}

/// One-dimensional integral against the standard Gaussian measure.
pub fn integrate_mu1<F>(mut f: F, order: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (nodes, weights) = hermite_rule(order)?;
    let mut acc = CompensatedSum::new();
    for (&x, &w) in nodes.iter().zip(&weights) {
        acc.add(w * f(x));
    }
    Ok(acc.total())
}
