//! Numerical toolkit for Gibbs measures of periodic KdV, mKdV and cubic NLS:
//! truncated Fourier fields, convexity certificates for log-Sobolev
//! inequalities, Gibbs samplers, concentration checks, cnoidal stationary
//! points with their Floquet stability analysis, and spectral integrators.

// Negated float comparisons are how parameter checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cnoidal;
pub mod concentration;
pub mod convexity;
pub mod elliptic;
pub mod error;
pub mod field;
pub mod floquet;
pub mod flow;
pub mod gibbs;
pub mod hamiltonians;
pub mod observables;
pub mod quadrature;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use field::{FourierField, GridField};
pub use hamiltonians::{EnsembleParams, Model, NlsField, PhasePoint};
