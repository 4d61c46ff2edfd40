//! Stochastic Galerkin finite elements for Stokes flow with lognormal
//! random viscosity.
//!
//! The viscosity is the exponential of a truncated Karhunen-Loève expansion
//! of a Gaussian field with separable exponential covariance ([`kle`]). It
//! is expanded in multivariate Hermite chaos ([`chaos`]), the velocity and
//! pressure are discretized with Taylor-Hood P2/P1 elements ([`fe`]), and
//! the resulting Kronecker-structured saddle point system ([`system`]) is
//! solved with block-diagonal preconditioned MINRES or block-triangular
//! preconditioned Bramble-Pasciak CG ([`krylov`], [`precond`]).

pub mod chaos;
pub mod error;
pub mod experiment;
pub mod fe;
pub mod kle;
pub mod krylov;
pub mod linalg;
pub mod mesh;
pub mod multigrid;
pub mod precond;
pub mod quadrature;
pub mod sparse;
pub mod system;

pub use error::{Error, Result};
