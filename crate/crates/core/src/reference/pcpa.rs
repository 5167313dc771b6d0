use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::TimeGrid;
use crate::linalg::expm_hermitian;
use crate::spin::{hermitian_at, SystemSpec};
use crate::trajectory::PropagatorTrajectory;
use crate::waveforms::Pulse;

/// Where the Hamiltonian is frozen within each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    Midpoint,
    LeftEndpoint,
}

impl Sampling {
    fn time(self, grid: &TimeGrid, k: usize) -> f64 {
        match self {
            Sampling::Midpoint => grid.time(k) + 0.5 * grid.dt(),
            Sampling::LeftEndpoint => grid.time(k),
        }
    }
}

fn step(
    spec: &SystemSpec,
    pulse: &dyn Pulse,
    grid: &TimeGrid,
    sampling: Sampling,
    k: usize,
) -> DMatrix<Complex64> {
    let h = hermitian_at(spec, pulse.beta(sampling.time(grid, k)));
    expm_hermitian(&h, grid.dt())
}

/// `U(t_{k+1}) = exp(−i H(t*) Δt) U(t_k)`.
pub fn pcpa(
    spec: &SystemSpec,
    pulse: &dyn Pulse,
    grid: &TimeGrid,
    sampling: Sampling,
) -> Result<PropagatorTrajectory> {
    spec.validate()?;
    let d = spec.dim();
    let mut out = Vec::with_capacity(grid.len());
    let mut u = DMatrix::<Complex64>::identity(d, d);
    out.push(u.clone());
    for k in 0..grid.len() - 1 {
        u = step(spec, pulse, grid, sampling, k) * u;
        out.push(u.clone());
    }
    let tag = match sampling {
        Sampling::Midpoint => "pcpa",
        Sampling::LeftEndpoint => "pcpa_left",
    };
    Ok(PropagatorTrajectory::new(*grid, out, tag))
}

/// State-vector variant: evolves a single `ψ(0)`.
pub fn pcpa_state(
    spec: &SystemSpec,
    pulse: &dyn Pulse,
    grid: &TimeGrid,
    sampling: Sampling,
    psi0: &DVector<Complex64>,
) -> Result<Vec<DVector<Complex64>>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(grid.len());
    let mut psi = psi0.clone();
    out.push(psi.clone());
    for k in 0..grid.len() - 1 {
        psi = step(spec, pulse, grid, sampling, k) * psi;
        out.push(psi.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveforms::FnPulse;

    #[test]
    fn constant_hamiltonian_is_exact() {
        let spec = SystemSpec::bipartite(1.3, -0.4, 0.2);
        let beta = Complex64::new(0.5, 0.25);
        let pulse = FnPulse(move |_| beta);
        let grid = TimeGrid::new(0.0, 2.0, 37).unwrap();
        let u = pcpa(&spec, &pulse, &grid, Sampling::LeftEndpoint).unwrap();
        let exact = expm_hermitian(&hermitian_at(&spec, beta), 2.0);
        assert!((u.last() - exact).norm() < 1e-12);
    }

    #[test]
    fn free_su2_phases() {
        let spec = SystemSpec::mono_su2(3.0);
        let grid = TimeGrid::new(0.0, 1.0, 11).unwrap();
        let u = pcpa(
            &spec,
            &FnPulse(|_| Complex64::new(0.0, 0.0)),
            &grid,
            Sampling::Midpoint,
        )
        .unwrap();
        for (k, m) in u.matrices.iter().enumerate() {
            let t = grid.time(k);
            assert!((m[(0, 0)] - Complex64::new(0.0, -1.5 * t).exp()).norm() < 1e-13);
            assert!((m[(1, 1)] - Complex64::new(0.0, 1.5 * t).exp()).norm() < 1e-13);
        }
    }

    #[test]
    fn cartesian_steps_are_real_rotations() {
        let spec = SystemSpec::mono_so3_cartesian(2.0);
        let grid = TimeGrid::new(0.0, 1.0, 50).unwrap();
        let pulse = FnPulse(|t: f64| Complex64::new(t.cos(), 0.3 * t));
        let u = pcpa(&spec, &pulse, &grid, Sampling::Midpoint).unwrap();
        let last = u.last();
        assert!(last.iter().all(|z| z.im.abs() < 1e-13));
        assert!(u.unitarity_drift() < 1e-12);
    }
}
