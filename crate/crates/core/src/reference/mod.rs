//! Baselines: piecewise-constant propagators and adaptive Runge–Kutta.

mod pcpa;
mod rk;

pub use pcpa::{pcpa, pcpa_state, Sampling};
pub use rk::{dopri5, rk_propagator, rk_solve, RkConfig, RkStats};
