#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Canonically correlated gamma random vectors and the finite-dimensional
//! laws of canonically correlated gamma completely random measures.
//!
//! Everything is computed on a fixed finite partition `A_1, ..., A_d` with
//! masses `alpha_i = c P_0(A_i)`:
//!
//! - [`specfun`]: Pochhammer symbols, monic Laguerre polynomials, Bessel `I`,
//!   Bell polynomials and Gauss rules.
//! - [`dirichlet`]: moments and stick-breaking samples of Dirichlet random means.
//! - [`kernels`]: directing kernels and the exact correlation sequences,
//!   merge identities and joint Laplace ratios they determine.
//! - [`samplers`]: the pair-generating algorithms and Dawson-Watanabe steps.
//! - [`subordination`]: subordinators and time-changed Dawson-Watanabe dynamics.
//! - [`estimators`]: Monte Carlo estimation of canonical correlations with
//!   standard errors and z-gates.

pub mod dirichlet;
pub mod error;
pub mod estimators;
pub mod kernels;
pub mod samplers;
pub mod specfun;
pub mod subordination;

pub use error::{Error, Result};
