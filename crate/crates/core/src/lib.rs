//! Numerical laboratory for controlled blow-up of the cubic wave equation
//! u_tt - Δu = 2u³.
//!
//! Given a prescribed surface t = ψ(x) with sup|∇ψ| < 1 and sup|ψ| < 1, the
//! crate constructs a solution that becomes singular exactly on that surface,
//! extracts the (small) Cauchy data and boundary traces that produce it, and
//! independently re-solves the equation from those data with an explicit
//! scheme to map where and when blow-up actually happens.
//!
//! Module map:
//! - [`surface`]: ψ, its exact derivative fields, γ = 1 - |∇ψ|², admissibility.
//! - [`expansion`]: singular-profile coefficients u₀ … u₄,₁ and the truncated
//!   profile Φ, with residual-order diagnostics.
//! - [`series`]: bivariate (T, ln T) series algebra and the order-matching
//!   oracle that re-derives the coefficient recursion from scratch.
//! - [`reduced`]: the first-order symmetric system for w⃗ = (w, w₍₀₎, w₍ᵢ₎),
//!   its matrices, and the weighted energies e₀, eₛ.
//! - [`integrator`]: log-time marching of the reduced system from T = 0⁺ with
//!   dense output.
//! - [`pipeline`]: slice extraction at t = α, time reversal, the ε-budget,
//!   boundary traces, and parameter sweeps.
//! - [`verifier`]: direct explicit solver of the wave equation and the
//!   per-point blow-up time map.
//! - [`spectral`]: Fourier derivatives, the multiplier (1 - Δ)^{s/2}, and
//!   discrete H^s norms.

pub mod error;
pub mod expansion;
pub mod grid;
pub mod integrator;
pub mod jet;
pub mod spectral;
pub mod pipeline;
pub mod reduced;
pub mod series;
pub mod surface;

pub mod verifier;

pub use error::{Error, ErrorKind, Result};
pub use grid::{Field, GridSpec};
