//! The Wick product and Wick exponentials on chaos expansions.
//!
//! The product concatenates kernels with the symmetric tensor product:
//! the order-n kernel of `f <> g` is `sum_{k+j=n} f_k (x)s g_j`. A general
//! Wick exponential is exposed only in truncated form with a reported tail
//! indicator, because the series need not converge in any L^p; the linear
//! and quadratic exponentials, which do have closed forms, are separate
//! types evaluable exactly.

use crate::chaos::ChaosExpansion;
use crate::error::{Error, Result};
use crate::quadrature::{hermite_rule, CompensatedSum};
use crate::tensor::{factorial, CmVector, SymmetricTensor};

/// Default series length for truncated Wick exponentials.
pub const DEFAULT_EXP_TERMS: usize = 16;
/// Default kernel-order cap for truncating operations.
pub const DEFAULT_MAX_ORDER: usize = 16;

fn check_dimensions(f: &ChaosExpansion, g: &ChaosExpansion) -> Result<()> {
    if f.dimension() != g.dimension() {
        return Err(Error::DimensionMismatch {
            expected: f.dimension(),
            got: g.dimension(),
        });
    }
    Ok(())
}

/// Wick product with a hard order cap: fails loudly if the exact result
/// would exceed `max_order` rather than silently truncating.
pub fn wick_product(
    f: &ChaosExpansion,
    g: &ChaosExpansion,
    max_order: usize,
) -> Result<ChaosExpansion> {
    check_dimensions(f, g)?;
    let required = f.trimmed().max_order() + g.trimmed().max_order();
    if required > max_order {
        return Err(Error::MaxOrderExceeded {
            required,
            max_order,
        });
    }
    wick_product_truncated(f, g, max_order)
}

/// Wick product with acknowledged truncation: kernels above `max_order`
/// are dropped.
pub fn wick_product_truncated(
    f: &ChaosExpansion,
    g: &ChaosExpansion,
    max_order: usize,
) -> Result<ChaosExpansion> {
    check_dimensions(f, g)?;
    let dimension = f.dimension();
    let top = (f.max_order() + g.max_order()).min(max_order);
    let mut kernels: Vec<SymmetricTensor> = (0..=top)
        .map(|n| SymmetricTensor::zero(dimension, n))
        .collect();
    for (k, fk) in f.kernels().iter().enumerate() {
        if fk.is_zero(0.0) {
            continue;
        }
        for (j, gj) in g.kernels().iter().enumerate() {
            let n = k + j;
            if n > top {
                break;
            }
            if gj.is_zero(0.0) {
                continue;
            }
            kernels[n] = kernels[n].add(&fk.sym_product(gj)?)?;
        }
    }
    ChaosExpansion::new(dimension, kernels)
}

/// Wick power `f^{<> n}`; `n = 0` is the constant 1.
pub fn wick_power(f: &ChaosExpansion, n: usize, max_order: usize) -> Result<ChaosExpansion> {
    let required = f.trimmed().max_order() * n;
    if required > max_order {
        return Err(Error::MaxOrderExceeded {
            required,
            max_order,
        });
    }
    let mut acc = ChaosExpansion::constant(f.dimension(), 1.0);
    for _ in 0..n {
        acc = wick_product_truncated(&acc, f, max_order)?;
    }
    Ok(acc)
}

/// A truncated Wick exponential together with its tail indicator.
#[derive(Debug, Clone)]
pub struct WickExpTruncated {
    /// `sum_{n <= N} Z^{<> n} / n!`, kernels above the order cap dropped.
    pub expansion: ChaosExpansion,
    /// L^2 norm of the last retained series increment.
    pub tail_norm: f64,
}

/// Truncated Wick exponential `sum_{n <= terms} Z^{<> n} / n!`.
pub fn wick_exp_truncated(
    z: &ChaosExpansion,
    terms: usize,
    max_order: usize,
) -> Result<WickExpTruncated> {
    if !z.expectation().is_finite() {
        return Err(Error::NonFinite {
            context: "Wick exponential argument",
        });
    }
    let mut acc = ChaosExpansion::constant(z.dimension(), 1.0);
    let mut increment = ChaosExpansion::constant(z.dimension(), 1.0);
    for n in 1..=terms {
        increment = wick_product_truncated(&increment, z, max_order)?.scale(1.0 / n as f64);
        acc = acc.add(&increment)?;
    }
    Ok(WickExpTruncated {
        expansion: acc,
        tail_norm: increment.l2_norm(),
    })
}

/// The linear Wick exponential, the exponential of an order-1 integral.
///
/// Lies in every L^p and evaluates in closed form to
/// `exp{<w,h> - |h|^2/2}`; its chaos kernels are `h^(x)k / k!`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearWickExp {
    h: CmVector,
}

impl LinearWickExp {
    pub fn new(h: CmVector) -> Self {
        LinearWickExp { h }
    }

    pub fn direction(&self) -> &CmVector {
        &self.h
    }

    pub fn dimension(&self) -> usize {
        self.h.dimension()
    }

    /// Closed-form evaluation; strictly positive.
    pub fn eval(&self, w: &[f64]) -> Result<f64> {
        Ok((self.h.pair_point(w)? - self.h.norm_sq() / 2.0).exp())
    }

    /// Chaos kernels `h^(x)k / k!` up to `max_order`.
    pub fn expansion(&self, max_order: usize) -> ChaosExpansion {
        let kernels = (0..=max_order)
            .map(|k| SymmetricTensor::rank_one_power(&self.h, k).scale(1.0 / factorial(k)))
            .collect();
        ChaosExpansion::new(self.h.dimension(), kernels)
            .expect("rank-one kernels are well-formed")
            .trimmed()
    }
}

/// The quadratic Wick exponential, the exponential of the centered square
/// of an order-1 integral.
///
/// Evaluates in closed form to
/// `(1 + |h|^2)^{-1/2} exp{<w,h>^2 / (2 (1 + |h|^2))}`; it lies in L^p
/// exactly when `|h|^2 < 1/(p-1)`. Its chaos kernels sit at even orders 2n
/// and equal `h^(x)2n / (2^n n!)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticWickExp {
    h: CmVector,
    norm_sq: f64,
}

impl QuadraticWickExp {
    pub fn new(h: CmVector) -> Self {
        let norm_sq = h.norm_sq();
        QuadraticWickExp { h, norm_sq }
    }

    pub fn direction(&self) -> &CmVector {
        &self.h
    }

    pub fn dimension(&self) -> usize {
        self.h.dimension()
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// Closed-form evaluation; strictly positive.
    pub fn eval(&self, w: &[f64]) -> Result<f64> {
        let t = self.h.pair_point(w)?;
        let denom = 1.0 + self.norm_sq;
        Ok((t * t / (2.0 * denom)).exp() / denom.sqrt())
    }

    /// Whether the exponential lies in L^p; the boundary is excluded.
    pub fn lp_integrable(&self, p: f64) -> Result<bool> {
        quadratic_exp_lp_integrable(&self.h, p)
    }

    /// Evaluation through the scale-mixture representation: a 1-D
    /// Gauss-Hermite quadrature of `lambda -> exp{lambda <w,h> -
    /// lambda^2 |h|^2 / 2}` against the standard Gaussian. Agrees with
    /// [`QuadraticWickExp::eval`] up to quadrature error.
    pub fn mixture_eval(&self, w: &[f64], order: usize) -> Result<f64> {
        let t = self.h.pair_point(w)?;
        let c = self.norm_sq;
        let (nodes, weights) = hermite_rule(order)?;
        let mut acc = CompensatedSum::new();
        for (&lambda, &weight) in nodes.iter().zip(&weights) {
            acc.add(weight * (lambda * t - lambda * lambda * c / 2.0).exp());
        }
        Ok(acc.total())
    }

    /// Chaos kernels: `h^(x)2n / (2^n n!)` at order 2n, up to `max_order`.
    pub fn expansion(&self, max_order: usize) -> ChaosExpansion {
        let d = self.h.dimension();
        let mut kernels: Vec<SymmetricTensor> = (0..=max_order)
            .map(|k| SymmetricTensor::zero(d, k))
            .collect();
        let mut n = 0usize;
        let mut coeff = 1.0f64;
        while 2 * n <= max_order {
            kernels[2 * n] = SymmetricTensor::rank_one_power(&self.h, 2 * n).scale(coeff);
            n += 1;
            coeff /= 2.0 * n as f64;
        }
        ChaosExpansion::new(d, kernels)
            .expect("rank-one kernels are well-formed")
            .trimmed()
    }
}

/// L^p membership test for the quadratic exponential: `|h|^2 < 1/(p-1)`,
/// strict at the boundary.
pub fn quadratic_exp_lp_integrable(h: &CmVector, p: f64) -> Result<bool> {
    // a NaN exponent must fail this check as well
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(p > 1.0) {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: format!("integrability exponent must exceed 1, got {p}"),
        });
    }
    Ok(h.norm_sq() < 1.0 / (p - 1.0))
}

/// The S-transform of `f` at `h`: the integral of `f` against the linear
/// Wick exponential in direction `h`, which on kernels collapses to
/// `sum_k <f_k, h^(x)k>` (the order weight cancels the exponential's 1/k!).
pub fn s_transform(f: &ChaosExpansion, h: &CmVector) -> Result<f64> {
    if f.dimension() != h.dimension() {
        return Err(Error::DimensionMismatch {
            expected: f.dimension(),
            got: h.dimension(),
        });
    }
    let mut acc = CompensatedSum::new();
    for (k, kernel) in f.kernels().iter().enumerate() {
        if kernel.is_zero(0.0) {
            continue;
        }
        acc.add(kernel.inner(&SymmetricTensor::rank_one_power(h, k))?);
    }
    Ok(acc.total())
}
