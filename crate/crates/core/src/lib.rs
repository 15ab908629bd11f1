//! Wick calculus on finite-dimensional Gaussian spaces.
//!
//! The crate realizes, at desk scale (W = R^d with the standard Gaussian
//! measure), the machinery needed to standardize probability densities with
//! respect to a Gaussian reference measure:
//!
//! - [`tensor`]: symmetric tensor kernels on sorted multi-indices and the
//!   Cameron-Martin vectors that generate them;
//! - [`chaos`]: finite Wiener-Ito chaos expansions, evaluated pointwise
//!   through probabilists' Hermite polynomials;
//! - [`wick`]: the Wick product, Wick powers, truncated Wick exponentials,
//!   the two closed-form exponentials, and the S-transform;
//! - [`standardize`]: the mean-zeroing and covariance-identity transforms on
//!   densities, plus the worked quartic example density;
//! - [`quadrature`]: tensorized Gauss-Hermite integration against the
//!   standard Gaussian measure;
//! - [`verify`]: characteristic functionals, rejection sampling, and the
//!   numerical check suites that exercise every identity above.

pub mod chaos;
pub mod error;
pub mod quadrature;
pub mod standardize;
pub mod tensor;
pub mod verify;
pub mod wick;

pub use chaos::{hermite_prob, ChaosExpansion, GaussianSpace};
pub use error::{Error, ErrorClass, Result};
pub use quadrature::{integrate_mu, QuadratureGrid};
pub use standardize::{CovarianceOperator, DensityExpansion, StandardizeOptions};
pub use tensor::{CmVector, MultiIndex, SymmetricTensor};
pub use wick::{LinearWickExp, QuadraticWickExp};
