//! Path-sum evaluation of propagators on a uniform grid.
//!
//! Every solver computes column 0 of the relevant ⋆-resolvents,
//! `G(t, t_0)`, and integrates it in the left variable to get `U(t)`.

mod bipartite;
mod fourier;
mod hybrid;
mod mono;
mod tripartite;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use bipartite::solve_bipartite;
pub use fourier::{b_kernel, fourier_kernel_b, BFunction, FourierTable};
pub use hybrid::solve_hybrid;
pub use mono::{neumann_u22, solve_mono_so3, solve_mono_su2, NeumannOrder};
pub use tripartite::solve_tripartite;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quadrature::QuadratureRule;
use crate::spin::{SystemKind, SystemSpec};
use crate::trajectory::PropagatorTrajectory;
use crate::waveforms::Pulse;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    /// Nodes per interval, `N_p`.
    pub n_points_per_interval: usize,
    /// Number of intervals, `N_I`.
    #[serde(default = "one")]
    pub n_intervals: usize,
    #[serde(default = "default_rule")]
    pub rule: QuadratureRule,
    /// Truncate the principal scalar resolvent of the single-spin solvers
    /// at this Neumann order.
    #[serde(default)]
    pub neumann_order: Option<usize>,
    /// Fourier tables of the drive are integrated on a grid this many
    /// times finer than the solver grid.
    #[serde(default = "one")]
    pub fourier_oversampling: usize,
}

fn one() -> usize {
    1
}

fn default_rule() -> QuadratureRule {
    QuadratureRule::AveragedSimpson
}

impl SolveConfig {
    pub fn pure(n: usize, rule: QuadratureRule) -> Self {
        Self {
            n_points_per_interval: n,
            n_intervals: 1,
            rule,
            neumann_order: None,
            fourier_oversampling: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points_per_interval < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_points_per_interval must be >= 2, got {}",
                self.n_points_per_interval
            )));
        }
        if self.n_intervals < 1 {
            return Err(Error::InvalidConfig("n_intervals must be >= 1".into()));
        }
        if self.fourier_oversampling < 1 {
            return Err(Error::InvalidConfig(
                "fourier_oversampling must be >= 1".into(),
            ));
        }
        if self.neumann_order == Some(0) {
            return Err(Error::InvalidConfig("neumann_order must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of output nodes (intervals share their boundary node).
    pub fn total_points(&self) -> usize {
        self.n_intervals * (self.n_points_per_interval - 1) + 1
    }

    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            rule: self.rule,
            neumann: match self.neumann_order {
                Some(m) => NeumannOrder::Finite(m),
                None => NeumannOrder::Exact,
            },
            fourier_oversampling: self.fourier_oversampling,
        }
    }
}

/// Per-grid solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub rule: QuadratureRule,
    pub neumann: NeumannOrder,
    pub fourier_oversampling: usize,
}

impl SolveOptions {
    pub fn new(rule: QuadratureRule) -> Self {
        Self {
            rule,
            neumann: NeumannOrder::Exact,
            fourier_oversampling: 1,
        }
    }

    /// `B_{t',t}(ω)` table; reuses `beta` (sampled on `grid`) when not oversampling.
    pub(crate) fn table(
        &self,
        pulse: &dyn Pulse,
        beta: &[Complex64],
        grid: &TimeGrid,
        omega: f64,
    ) -> Result<FourierTable> {
        if self.fourier_oversampling == 1 {
            Ok(FourierTable::from_samples(beta, grid, self.rule, omega))
        } else {
            FourierTable::oversampled(pulse, grid, self.rule, omega, self.fourier_oversampling)
        }
    }
}

/// Path-sum propagator on `grid` for any supported system kind.
pub fn solve_on_grid(
    spec: &SystemSpec,
    pulse: &dyn Pulse,
    grid: &TimeGrid,
    opts: &SolveOptions,
) -> Result<PropagatorTrajectory> {
    spec.validate()?;
    if opts.neumann != NeumannOrder::Exact
        && !matches!(
            spec.kind,
            SystemKind::MonoSu2 | SystemKind::MonoSo3Shift | SystemKind::MonoSo3Cartesian
        )
    {
        return Err(Error::UnsupportedKind {
            solver: "neumann truncation",
            kind: spec.kind.name().into(),
        });
    }
    let traj = match spec.kind {
        SystemKind::MonoSu2 => mono::su2_on_grid(spec, pulse, grid, opts)?,
        SystemKind::MonoSo3Shift | SystemKind::MonoSo3Cartesian => {
            mono::so3_on_grid(spec, pulse, grid, opts)?
        }
        SystemKind::Bipartite => bipartite::bipartite_on_grid(spec, pulse, grid, opts)?,
        SystemKind::Tripartite => tripartite::tripartite_on_grid(spec, pulse, grid, opts)?,
    };
    Ok(traj)
}

/// Solve over `[t_start, t_end]` with the node layout of `cfg`.
pub fn solve(
    spec: &SystemSpec,
    pulse: &dyn Pulse,
    cfg: &SolveConfig,
    t_start: f64,
    t_end: f64,
) -> Result<PropagatorTrajectory> {
    solve_hybrid(spec, pulse, cfg, t_start, t_end)
}

pub fn method_tag(rule: QuadratureRule) -> String {
    format!("ps_{}", rule.tag())
}
