//! Density propagation, the ℰ accuracy metric and benchmark sweeps.

mod benchmark;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64;

pub use benchmark::{
    benchmark, error_at, error_sweep, reports_to_csv, reports_to_markdown, sweep_to_tidy_csv,
    ErrorReport, Initial, Method, Observable, Scenario, SweepPoint,
};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::spin::{so3_basis, SystemKind, SystemSpec};
use crate::trajectory::PropagatorTrajectory;

/// `ρ(t_k)` (or a state column `ψ(t_k)`) at every node.
#[derive(Debug, Clone)]
pub struct DensityTrajectory {
    pub grid: TimeGrid,
    pub rho: Vec<DMatrix<Complex64>>,
}

/// `ρ(t) = U(t) ρ0 U(t)†`.
pub fn propagate_density(
    traj: &PropagatorTrajectory,
    rho0: &DMatrix<Complex64>,
) -> Result<DensityTrajectory> {
    let d = traj.dim();
    if rho0.shape() != (d, d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rho0.nrows(),
        });
    }
    if (rho0 - rho0.adjoint()).norm() > 1e-12 * rho0.norm().max(1.0) {
        log::warn!("initial density matrix is not Hermitian");
    }
    let rho = traj
        .matrices
        .iter()
        .map(|u| u * rho0 * u.adjoint())
        .collect();
    Ok(DensityTrajectory {
        grid: traj.grid,
        rho,
    })
}

/// `ψ(t) = U(t) ψ0`, stored as `d × 1` columns so [`relative_error`] applies.
pub fn propagate_state(
    traj: &PropagatorTrajectory,
    psi0: &DVector<Complex64>,
) -> Result<DensityTrajectory> {
    let d = traj.dim();
    if psi0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: psi0.len(),
        });
    }
    let rho = traj
        .matrices
        .iter()
        .map(|u| DMatrix::from_column_slice(d, 1, (u * psi0).as_slice()))
        .collect();
    Ok(DensityTrajectory {
        grid: traj.grid,
        rho,
    })
}

/// `1 − Re Tr(A†B) / √(Tr(A†A) Tr(B†B))`.
///
/// The normalization `Tr(A†A)` is the square of the usual Frobenius norm.
pub fn overlap_defect(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let ab: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    let aa = a.norm_squared();
    let bb = b.norm_squared();
    if aa == 0.0 && bb == 0.0 {
        return 0.0;
    }
    1.0 - ab.re / (aa * bb).sqrt()
}

/// Time-averaged overlap defect `ℰ_M`, trapezoidal in time.
pub fn relative_error(rho_m: &DensityTrajectory, rho_r: &DensityTrajectory) -> Result<f64> {
    if !rho_m.grid.same_as(&rho_r.grid) {
        return Err(Error::GridMismatch);
    }
    let vals: Vec<f64> = rho_m
        .rho
        .iter()
        .zip(&rho_r.rho)
        .map(|(a, b)| overlap_defect(a, b))
        .collect();
    let n = vals.len();
    let inner: f64 = vals[1..n - 1].iter().sum();
    let integral = rho_m.grid.dt() * (0.5 * (vals[0] + vals[n - 1]) + inner);
    Ok(integral / rho_m.grid.duration())
}

/// `Σ_i I_z^{(i)}` scaled to unit Frobenius norm, for the spin-½ kinds.
pub fn default_rho0(spec: &SystemSpec) -> Result<DMatrix<Complex64>> {
    let spins = match spec.kind {
        SystemKind::MonoSu2 => 1,
        SystemKind::Bipartite => 2,
        SystemKind::Tripartite => 3,
        k => {
            return Err(Error::UnsupportedKind {
                solver: "default_rho0",
                kind: k.name().into(),
            })
        }
    };
    let d = 1usize << spins;
    let diag: Vec<f64> = (0..d)
        .map(|s| {
            (0..spins)
                .map(|i| {
                    if s & (1 << (spins - 1 - i)) == 0 {
                        0.5
                    } else {
                        -0.5
                    }
                })
                .sum()
        })
        .collect();
    let norm = diag.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(DMatrix::from_diagonal(&DVector::from_iterator(
        d,
        diag.iter().map(|x| Complex64::new(x / norm, 0.0)),
    )))
}

/// `ẑ` expressed in the basis of the given SO(3) kind.
pub fn default_psi0(spec: &SystemSpec) -> Result<DVector<Complex64>> {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    match spec.kind {
        SystemKind::MonoSo3Cartesian => Ok(DVector::from_vec(vec![z, z, one])),
        SystemKind::MonoSo3Shift => Ok(DVector::from_vec(vec![z, one, z])),
        k => Err(Error::UnsupportedKind {
            solver: "default_psi0",
            kind: k.name().into(),
        }),
    }
}

/// Cartesian Bloch vectors `g(t_k) = U† 𝒰(t_k) U g0` from a shift-basis propagator.
pub fn bloch_trajectory(
    traj: &PropagatorTrajectory,
    g0: &Vector3<f64>,
) -> Result<Vec<Vector3<f64>>> {
    if traj.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: traj.dim(),
        });
    }
    let u = so3_basis();
    let psi = u * g0.map(|x| Complex64::new(x, 0.0));
    Ok(traj
        .matrices
        .iter()
        .map(|m| {
            let m3 = Matrix3::from_iterator(m.iter().copied());
            (u.adjoint() * (m3 * psi)).map(|z| z.re)
        })
        .collect())
}
