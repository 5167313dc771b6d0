//! Path-sum propagators for driven spin-½ systems.
//!
//! The time-ordered exponential of `−iH(t)` is evaluated as a ⋆-resolvent of
//! two-time kernels discretized on a uniform grid, and compared against a
//! piecewise-constant propagator and an adaptive Runge–Kutta reference.

pub mod error;
pub mod evaluation;
pub mod export;
pub mod grid;
pub mod linalg;
pub mod pathsum;
pub mod quadrature;
pub mod reference;
pub mod spin;
pub mod star;
pub mod trajectory;
pub mod waveforms;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use quadrature::QuadratureRule;
