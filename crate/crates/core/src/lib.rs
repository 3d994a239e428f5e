//! Numerical core for a degenerate-kernel Fredholm equation of the second kind
//! built from Riccati–Bessel functions.
//!
//! The operator studied here is
//!
//! ```text
//! (K h)(s) = -∫_0^r g(s,t) h(t) t^-2 dt,    g(s,t) = Σ_m γ_m u_m(min(s,t)) v_m(max(s,t))
//! ```
//!
//! where `u_m`, `v_m` are the regular and irregular Riccati–Bessel functions and the
//! coefficients `γ_m` solve `Σ_m γ_m / (m(m+1) - l(l+1)) = 1` for every `l` in a
//! second index set. For `S = {0}`, `T = {2}` the homogeneous equation `h = K h`
//! has the nontrivial solution `u_2` exactly when the radius `r` is a zero of
//! `p(r) = v_0(r) u_2'(r) - v_0'(r) u_2(r)`; [`counterexample`] locates that radius
//! and checks the claim three independent ways.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]
// `!(x <= tol)` is deliberate throughout: a NaN must fail the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod counterexample;
mod error;
pub mod kernel;
pub mod operator;
pub mod quadrature;
pub mod riccati;
pub mod roots;

pub use error::{Error, Result};
pub use kernel::{IndexSets, KernelSpec};
pub use operator::{Assembly, NystromOperator, ScanReport, SpectralResult, SweepRow};
pub use quadrature::QuadratureGrid;
pub use riccati::{Family, FunctionPair, Order};
