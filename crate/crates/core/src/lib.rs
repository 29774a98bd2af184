//! Conformally mapped generalized polynomial chaos surrogates.
//!
//! An input `y` on `[-1, 1]^N` with a product density is approximated by
//! polynomials in `s = g^-1(y)`, where `g` is a coordinatewise odd polynomial
//! map of `[-1, 1]` onto itself (for example the degree-9 "sausage" map).
//! The identity map recovers plain gPC.
//!
//! ```
//! use mapc_core::{build_basis, project, stats, ConformalMap1D, JointDensity,
//!     MultivariateMap, RlcModel, UnivariateDensity};
//!
//! let d = JointDensity::iid(UnivariateDensity::uniform(), 1).unwrap();
//! let g = MultivariateMap::uniform(ConformalMap1D::sausage9(), 1).unwrap();
//! let basis = build_basis(&d, &g, 16).unwrap();
//! let s = project(&RlcModel::reference(1.0).unwrap(), &basis, 17).unwrap();
//! // E[1 / sqrt(6.25 y^2 + 1)] for uniform y
//! let exact = 2.5f64.asinh() / 2.5;
//! assert!((stats::mean(&s).re - exact).abs() < 1e-4);
//! ```

// `!(x > 0.0)` is used deliberately so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conformal;
pub mod density;
pub mod error;
pub mod models;
pub mod orthopoly;
pub mod parallel;
pub mod pce;
pub mod quadrature;
pub mod stats;
pub mod study;

pub use num_complex::Complex64;

pub use conformal::{ConformalMap1D, MapKind, MapSpec, MultivariateMap};
pub use density::{transform_density, DensitySpec, JointDensity, UnivariateDensity};
pub use error::{Error, Result};
pub use models::{
    bernstein_rate, rlc_amplitude, rlc_pole_locations, runge_model, FnModel, ParametricModel,
    PolynomialModel, RlcModel, RungeModel, TabulatedModel,
};
pub use orthopoly::{golub_welsch, recurrence, OrthonormalBasis1D, RecurrenceCoefficients};
pub use parallel::Execution;
pub use pce::{
    build_basis, coefficient_decay, project, project_with, tensor_index_set, MultiIndex, PCBasis,
    Surrogate,
};
pub use quadrature::{gauss_rule, mapped_rule, tensor_rule, QuadratureRule1D, TensorQuadrature};
