//! Exact moments of self-normalized statistics `T(X) / S_n^a` for independent
//! non-negative samples.
//!
//! The expectation of such a ratio is an `n`-dimensional integral. Writing
//! `1/s^a` as a gamma integral and exponentially tilting each observation's law
//! turns it into a single integral over the tilt parameter `lambda`:
//!
//! ```text
//! E V = 1/Gamma(a) * int_0^inf lambda^(a-1) prod_i L_i(lambda) E_tilted[T] dlambda
//!       + r * prod_i P(X_i = 0)
//! ```
//!
//! where `L_i` is the Laplace transform of observation `i`. The crate is
//! organized bottom-up:
//!
//! - [`quadrature`]: adaptive Gauss-Kronrod integration over `[0, inf)`.
//! - [`distributions`]: Laplace transforms, zero masses and tilted moments.
//! - [`ratio`]: the tilting engine for general kernels `T`.
//! - [`statistics`]: Gini coefficient, squared coefficient of variation and
//!   Theil index moments, plus Gamma closed forms.
//! - [`estimators`]: sample statistics, Pareto fits and bias correction.
//! - [`oracle`]: Monte Carlo and exact enumeration ground truth.
//! - [`experiments`] and [`validation`]: parameter sweeps and the engine-vs-oracle
//!   checks behind the `snm` command line tool.

pub mod distributions;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod interp;
pub mod oracle;
pub mod quadrature;
pub mod ratio;
pub mod special;
pub mod statistics;
pub mod validation;


pub use distributions::{DistributionSpec, Family, Law, Moment, PopulationStat, SupportKind, TiltedLaw, TiltedMomentSet, TiltedView};
pub use error::{Error, Result};
pub use estimators::SampleData;
pub use quadrature::{IntegralResult, QuadratureConfig, Transform};
pub use ratio::{MomentResult, PairKernel, RatioStatistic, TKernel};
