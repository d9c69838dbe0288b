//! Exact-arithmetic toolkit for differential modules on p-adic annuli.
//!
//! The crate computes, over Q(zeta_{p^h}) with everything kept as exact
//! rationals in the valuation picture:
//!
//! * Gauss valuations of truncated Laurent elements, optionally with a
//!   polynomial disk variable ([`laurent`]);
//! * derivative-power matrices, cyclic vectors, Newton-polygon spectral
//!   norms, and generic radius-of-convergence estimates ([`module`]);
//! * radius profiles r -> f(r), their convexity checks, and the
//!   solvability / ramification-break classification ([`profile`]);
//! * Frobenius antecedents through the mu_p-action projectors
//!   ([`frobenius`]);
//! * exponents in the sense of Christol-Mebkhout via twisted resolvent
//!   averages and a greedy digit search ([`exponent`]);
//! * fiberwise specialization of two-variable relative modules with unit
//!   factorization certificates and agreement reports ([`relative`]).
//!
//! The `padic-annuli` binary exposes the same operations on JSON module
//! descriptions; see [`format`] for the file layout.

pub mod error;
pub mod exponent;
pub mod format;
pub mod frobenius;
pub mod laurent;
pub mod matrix;
pub mod module;
pub mod padic;
pub mod profile;
pub mod relative;

pub use error::{Error, Result};
pub use padic::{LogValue, PadicApprox, Prime, Scalar};
