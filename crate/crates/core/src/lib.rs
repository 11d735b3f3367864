//! Numerical laboratory for a clamped Berger plate in an inviscid subsonic
//! potential flow, driven through the delay-reduced plate equation
//!
//! ```text
//! u_tt + Δ²u + k u_t + [b - ||∇u||²]Δu = p0 - (∂_t + U ∂_x)u - q^u(t)
//! ```
//!
//! where `q^u` is the explicit flow-memory term. The crate provides the
//! discrete plate operators, the delay quadratures, an IMEX time integrator
//! with its z/w decomposition, stationary solvers with parameter
//! continuation, flow reconstruction by the retarded representation, and
//! Lyapunov/continuity diagnostics.

pub mod band;
pub mod error;
pub mod grid;
pub mod history;
pub mod ops;
pub mod qeval;
pub mod tstar;

pub mod decompose;
pub mod dynamics;
pub mod energy;

pub use error::{Error, Result};
pub use grid::{build_grid, Field, PlateGrid};
