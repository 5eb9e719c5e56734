//! Continuous semigroups of holomorphic self-maps of the unit disc and the right
//! half-plane: generators, flows, convergence rates to the identity, and
//! Monte Carlo harmonic measure on polygonal domains.
//!
//! Every numerical routine is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cplane;
pub mod curves;
pub mod error;
pub mod flow;
pub mod generators;
pub mod hmeasure;
pub mod io;
pub mod rates;
pub mod sampling;
pub mod scalar;
pub mod suites;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ComplexPoint = cplane::Point<f64>;
pub type Domain = cplane::CanonicalDomain<f64>;
pub type Generator = generators::GeneratorSpec<f64>;
pub type Herglotz = generators::HerglotzSpec<f64>;
pub type DirichletSeries = generators::DirichletSeriesSpec<f64>;
pub type Trajectory = flow::Trajectory<f64>;
pub type IntegratorConfig = flow::IntegratorConfig<f64>;
pub type JordanDomain = hmeasure::JordanDomain<f64>;
pub type BoundarySubset = hmeasure::BoundarySubset<f64>;
pub type Polyline = curves::Polyline<f64>;
pub type SupSamplerConfig = rates::SupSamplerConfig<f64>;
pub type RateReport = rates::RateReport<f64>;
