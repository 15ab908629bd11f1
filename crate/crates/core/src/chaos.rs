//! Finite Wiener-Ito chaos expansions and their pointwise evaluation.
//!
//! An expansion holds one symmetric kernel per order, `0..=K`. Order-k
//! components evaluate through products of probabilists' Hermite polynomials:
//! for a sorted key with per-axis multiplicities `alpha`, the component
//! contributes `mult(key) * coeff * prod_i He_{alpha_i}(w_i)`, the
//! multiplicity being the number of distinct permutations of the key. This
//! rule is pinned down by two checks the test suite enforces: summing the
//! rank-one components `h^(x)k / k!` reproduces the closed-form exponential
//! `exp{<w,h> - |h|^2/2}`, and the quadratic/quartic Hermite identities of
//! the worked example hold pointwise.

use crate::error::{Error, Result};
use crate::tensor::{factorial, CmVector, SymmetricTensor};

/// Probabilists' Hermite polynomial `He_n(x)`.
///
/// `He_0 = 1`, `He_1 = x`, `He_{n+1}(x) = x He_n(x) - n He_{n-1}(x)`.
pub fn hermite_prob(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let mut prev = 1.0;
            let mut cur = x;
            for k in 1..n {
                let next = x * cur - (k as f64) * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Table of `He_n(x)` for `n = 0..=max_order`.
fn hermite_table(max_order: usize, x: f64) -> Vec<f64> {
    let mut table = Vec::with_capacity(max_order + 1);
    table.push(1.0);
    if max_order == 0 {
        return table;
    }
    table.push(x);
    for k in 1..max_order {
        let next = x * table[k] - (k as f64) * table[k - 1];
        table.push(next);
    }
    table
}

/// A finite Wiener-Ito chaos expansion: one symmetric kernel per order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosExpansion {
    dimension: usize,
    kernels: Vec<SymmetricTensor>,
}

impl ChaosExpansion {
    /// Builds from a dense list of kernels, `kernels[k]` of order `k`.
    pub fn new(dimension: usize, kernels: Vec<SymmetricTensor>) -> Result<Self> {
        for (k, kernel) in kernels.iter().enumerate() {
            if kernel.dimension() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: kernel.dimension(),
                });
            }
            if kernel.order() != k {
                return Err(Error::OrderMismatch {
                    expected: k,
                    got: kernel.order(),
                });
            }
        }
        let mut expansion = ChaosExpansion { dimension, kernels };
        if expansion.kernels.is_empty() {
            expansion.kernels.push(SymmetricTensor::zero(dimension, 0));
        }
        Ok(expansion)
    }

    /// Builds from `(order, kernel)` pairs; missing orders are zero.
    pub fn from_kernels<I>(dimension: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, SymmetricTensor)>,
    {
        let pairs: Vec<_> = pairs.into_iter().collect();
        let max_order = pairs.iter().map(|(k, _)| *k).max().unwrap_or(0);
        let mut kernels: Vec<SymmetricTensor> = (0..=max_order)
            .map(|k| SymmetricTensor::zero(dimension, k))
            .collect();
        for (order, kernel) in pairs {
            if kernel.order() != order {
                return Err(Error::OrderMismatch {
                    expected: order,
                    got: kernel.order(),
                });
            }
            kernels[order] = kernels[order].add(&kernel)?;
        }
        ChaosExpansion::new(dimension, kernels)
    }

    /// The constant expansion `c`.
    pub fn constant(dimension: usize, c: f64) -> Self {
        ChaosExpansion {
            dimension,
            kernels: vec![SymmetricTensor::scalar(dimension, c)],
        }
    }

    /// The order-1 integral of `h`: the linear functional `<w, h>`.
    pub fn linear(h: &CmVector) -> Self {
        ChaosExpansion {
            dimension: h.dimension(),
            kernels: vec![
                SymmetricTensor::scalar(h.dimension(), 0.0),
                SymmetricTensor::rank_one_power(h, 1),
            ],
        }
    }

    /// A single order-k component.
    pub fn single(kernel: SymmetricTensor) -> Self {
        let dimension = kernel.dimension();
        let order = kernel.order();
        let mut kernels: Vec<SymmetricTensor> = (0..order)
            .map(|k| SymmetricTensor::zero(dimension, k))
            .collect();
        kernels.push(kernel);
        ChaosExpansion { dimension, kernels }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Highest stored order K (trailing zero kernels included).
    pub fn max_order(&self) -> usize {
        self.kernels.len() - 1
    }

    /// Kernel at a given order; orders beyond K read as zero.
    pub fn kernel(&self, order: usize) -> SymmetricTensor {
        self.kernels
            .get(order)
            .cloned()
            .unwrap_or_else(|| SymmetricTensor::zero(self.dimension, order))
    }

    pub fn kernels(&self) -> &[SymmetricTensor] {
        &self.kernels
    }

    /// Mean with respect to the Gaussian measure: the order-0 scalar.
    pub fn expectation(&self) -> f64 {
        self.kernels[0].scalar_value()
    }

    /// The order-1 kernel read back as a Cameron-Martin vector.
    pub fn first_kernel_vector(&self) -> CmVector {
        let mut components = vec![0.0; self.dimension];
        if let Some(kernel) = self.kernels.get(1) {
            for (idx, value) in kernel.coeffs() {
                components[(idx.entries()[0] - 1) as usize] = value;
            }
        }
        CmVector::new(components).expect("kernel coefficients are finite")
    }

    /// Pointwise evaluation at `w` via products of Hermite polynomials.
    pub fn evaluate(&self, w: &[f64]) -> Result<f64> {
        if w.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: w.len(),
            });
        }
        let tables: Vec<Vec<f64>> = w
            .iter()
            .map(|&x| hermite_table(self.max_order(), x))
            .collect();
        let mut total = 0.0;
        for kernel in &self.kernels {
            for (idx, coeff) in kernel.coeffs() {
                let mut term = coeff * idx.distinct_permutations();
                for (axis, run) in idx.runs() {
                    term *= tables[(axis - 1) as usize][run as usize];
                }
                total += term;
            }
        }
        Ok(total)
    }

    /// The L^2(mu) inner product: `sum_k k! <f_k, g_k>`.
    pub fn inner(&self, other: &ChaosExpansion) -> Result<f64> {
        if self.dimension != other.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: other.dimension,
            });
        }
        let mut total = 0.0;
        let shared = self.kernels.len().min(other.kernels.len());
        for k in 0..shared {
            total += factorial(k) * self.kernels[k].inner(&other.kernels[k])?;
        }
        Ok(total)
    }

    /// L^2(mu) norm.
    pub fn l2_norm(&self) -> f64 {
        self.inner(self).expect("same expansion").max(0.0).sqrt()
    }

    pub fn scale(&self, s: f64) -> ChaosExpansion {
        ChaosExpansion {
            dimension: self.dimension,
            kernels: self.kernels.iter().map(|k| k.scale(s)).collect(),
        }
    }

    pub fn add(&self, other: &ChaosExpansion) -> Result<ChaosExpansion> {
        if self.dimension != other.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: other.dimension,
            });
        }
        let max_order = self.max_order().max(other.max_order());
        let mut kernels = Vec::with_capacity(max_order + 1);
        for k in 0..=max_order {
            kernels.push(self.kernel(k).add(&other.kernel(k))?);
        }
        Ok(ChaosExpansion {
            dimension: self.dimension,
            kernels,
        })
    }

    pub fn sub(&self, other: &ChaosExpansion) -> Result<ChaosExpansion> {
        self.add(&other.scale(-1.0))
    }

    /// Explicitly truncates to `max_order`, returning the truncation and the
    /// L^2 norm of what was dropped.
    pub fn truncate(&self, max_order: usize) -> (ChaosExpansion, f64) {
        if self.max_order() <= max_order {
            return (self.clone(), 0.0);
        }
        let kept = ChaosExpansion {
            dimension: self.dimension,
            kernels: self.kernels[..=max_order].to_vec(),
        };
        let mut dropped_sq = 0.0;
        for (k, kernel) in self.kernels.iter().enumerate().skip(max_order + 1) {
            dropped_sq += factorial(k) * kernel.inner(kernel).expect("same tensor");
        }
        (kept, dropped_sq.max(0.0).sqrt())
    }

    /// Drops trailing all-zero kernels (keeps at least the order-0 kernel).
    pub fn trimmed(&self) -> ChaosExpansion {
        let mut last = 0;
        for (k, kernel) in self.kernels.iter().enumerate() {
            if !kernel.is_zero(0.0) {
                last = k;
            }
        }
        ChaosExpansion {
            dimension: self.dimension,
            kernels: self.kernels[..=last].to_vec(),
        }
    }

    /// Chaos expansion of the polynomial `sum_m a_m <w,h>^m`.
    ///
    /// Monomial powers are rewritten in the Hermite basis by synthetic
    /// division against the recurrence (repeated multiplication by x, using
    /// `x He_j = He_{j+1} + j He_{j-1}`), scaled by powers of `|h|`; the
    /// order-j kernel is a multiple of `h^(x)j`.
    pub fn from_polynomial_in_linear(coeffs: &[f64], h: &CmVector) -> Result<Self> {
        let norm = h.norm();
        if norm == 0.0 {
            return Err(Error::ZeroDirection);
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                context: "polynomial coefficients",
            });
        }
        let degree = coeffs.len().saturating_sub(1);
        // hermite_coeffs[j] accumulates the He_j(x)-coefficient of
        // sum_m a_m (norm * x)^m  with x = <w,h>/|h|
        let mut hermite_coeffs = vec![0.0f64; degree + 1];
        // power_rep[j]: He_j-coefficient of x^m for the current m
        let mut power_rep = vec![0.0f64; degree + 1];
        power_rep[0] = 1.0;
        let mut scale = 1.0; // norm^m
        for (m, &a) in coeffs.iter().enumerate() {
            if m > 0 {
                // multiply current representation by x
                let mut next = vec![0.0f64; degree + 1];
                for (j, &c) in power_rep.iter().enumerate().take(m) {
                    if c == 0.0 {
                        continue;
                    }
                    next[j + 1] += c;
                    if j > 0 {
                        next[j - 1] += (j as f64) * c;
                    }
                }
                power_rep = next;
                scale *= norm;
            }
            if a == 0.0 {
                continue;
            }
            for (j, &c) in power_rep.iter().enumerate().take(m + 1) {
                hermite_coeffs[j] += a * scale * c;
            }
        }
        // kernel_j = hermite_coeffs[j] / |h|^j * h^(x)j
        let mut kernels = Vec::with_capacity(degree + 1);
        let mut inv_norm_pow = 1.0;
        for (j, &c) in hermite_coeffs.iter().enumerate() {
            kernels.push(SymmetricTensor::rank_one_power(h, j).scale(c * inv_norm_pow));
            inv_norm_pow /= norm;
        }
        Ok(ChaosExpansion {
            dimension: h.dimension(),
            kernels,
        }
        .trimmed())
    }

    /// Largest absolute difference across per-permutation kernel coefficients.
    pub fn max_kernel_diff(&self, other: &ChaosExpansion) -> f64 {
        let mut worst = 0.0f64;
        let max_order = self.max_order().max(other.max_order());
        for k in 0..=max_order {
            worst = worst.max(self.kernel(k).max_abs_diff(&other.kernel(k)));
        }
        worst
    }
}

struct EvalTerm {
    factor: f64,
    runs: Vec<(u16, u16)>,
}

/// Reusable pointwise evaluator: term structure and Hermite tables are
/// precomputed once, so the per-call cost in sampling and quadrature loops
/// is allocation-free.
pub struct Evaluator {
    dimension: usize,
    max_order: usize,
    terms: Vec<EvalTerm>,
    table: Vec<f64>,
}

impl Evaluator {
    pub fn new(f: &ChaosExpansion) -> Evaluator {
        let max_order = f.max_order();
        let mut terms = Vec::new();
        for kernel in f.kernels() {
            for (idx, coeff) in kernel.coeffs() {
                terms.push(EvalTerm {
                    factor: coeff * idx.distinct_permutations(),
                    runs: idx
                        .runs()
                        .map(|(axis, run)| (axis as u16 - 1, run as u16))
                        .collect(),
                });
            }
        }
        Evaluator {
            dimension: f.dimension(),
            max_order,
            terms,
            table: vec![0.0; f.dimension() * (max_order + 1)],
        }
    }

    pub fn eval(&mut self, w: &[f64]) -> f64 {
        debug_assert_eq!(w.len(), self.dimension);
        let stride = self.max_order + 1;
        for (axis, &x) in w.iter().enumerate() {
            let row = &mut self.table[axis * stride..(axis + 1) * stride];
            row[0] = 1.0;
            if stride > 1 {
                row[1] = x;
                for k in 1..self.max_order {
                    row[k + 1] = x * row[k] - (k as f64) * row[k - 1];
                }
            }
        }
        let mut total = 0.0;
        for term in &self.terms {
            let mut value = term.factor;
            for &(axis, power) in &term.runs {
                value *= self.table[axis as usize * stride + power as usize];
            }
            total += value;
        }
        total
    }
}

/// The finite-dimensional Gaussian space (H, W, mu) with the numerical
/// configuration used to integrate and sample against mu.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpace {
    dimension: usize,
    quad_order: usize,
    sample_count: usize,
    seed: u64,
}

impl GaussianSpace {
    /// Dimension-appropriate defaults: per-axis order 24 up to d = 3; d = 4
    /// drops to order 12 (tensor grids grow as order^d, with a documented
    /// accuracy downgrade).
    pub fn new(dimension: usize) -> Result<Self> {
        let quad_order = if dimension <= 3 { 24 } else { 12 };
        GaussianSpace::with_config(dimension, quad_order, 100_000, 0)
    }

    pub fn with_config(
        dimension: usize,
        quad_order: usize,
        sample_count: usize,
        seed: u64,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter {
                name: "dimension",
                reason: "dimension must be at least 1".into(),
            });
        }
        if dimension > 4 {
            return Err(Error::InvalidParameter {
                name: "dimension",
                reason: format!("tensor quadrature grids are capped at d = 4, got {dimension}"),
            });
        }
        if quad_order == 0 {
            return Err(Error::InvalidParameter {
                name: "quad_order",
                reason: "per-axis quadrature order must be at least 1".into(),
            });
        }
        if sample_count == 0 {
            return Err(Error::InvalidParameter {
                name: "sample_count",
                reason: "sample count must be at least 1".into(),
            });
        }
        Ok(GaussianSpace {
            dimension,
            quad_order,
            sample_count,
            seed,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, count: usize) -> Self {
        self.sample_count = count.max(1);
        self
    }

    /// The tensor quadrature grid this space integrates with.
    pub fn grid(&self) -> crate::error::Result<crate::quadrature::QuadratureGrid> {
        crate::quadrature::QuadratureGrid::new(self.dimension, self.quad_order)
    }
}
