//! Numerical laboratory for the radial focusing cubic inhomogeneous NLS
//! i∂ₜu + Δu + |x|^{-b}|u|²u = 0 on ℝ³.

pub mod exponents;
pub mod ground_state;
pub mod diagnostics;
pub mod dynamics;
pub mod invariants;
pub mod io;
pub mod radial;
