use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fourier::BFunction;
use super::{method_tag, SolveOptions};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quadrature::{cumulative, QuadratureRule};
use crate::spin::{so3_basis, SystemKind, SystemSpec};
use crate::star::{integrate_column, resolvent_column, ColumnSystem, Coupling, SquareSample};
use crate::trajectory::PropagatorTrajectory;
use crate::waveforms::Pulse;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Exact ⋆-resolvent, or its Neumann series truncated after `m` terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeumannOrder {
    Exact,
    Finite(usize),
}

fn cis(x: f64) -> Complex64 {
    Complex64::new(0.0, x).exp()
}

/// Smooth part of column 0 of `Σ_{n=1}^{m} f^{⋆n}`.
pub(crate) fn neumann_column<T: SquareSample>(
    grid: &TimeGrid,
    rule: QuadratureRule,
    f: impl Fn(usize, usize) -> T,
    m: usize,
) -> Result<Vec<T>> {
    let n = grid.len();
    let h = grid.dt();
    let mut table = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for k in 0..=i {
            let v = f(i, k);
            if !v.all_finite() {
                return Err(Error::NonFiniteSample { i, j: k });
            }
            table.push(v);
        }
    }
    let at = |i: usize, k: usize| table[i * (i + 1) / 2 + k];
    let mut term: Vec<T> = (0..n).map(|i| at(i, 0)).collect();
    let mut sum = term.clone();
    let mut w = Vec::with_capacity(n);
    for _ in 1..m {
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            rule.weights_into(i, &mut w);
            let mut acc = T::zero();
            for k in 0..=i {
                if i > 0 && w[k] != 0.0 {
                    acc += (at(i, k) * term[k]).scale(w[k] * h);
                }
            }
            next.push(acc);
        }
        for (s, x) in sum.iter_mut().zip(&next) {
            *s += *x;
        }
        term = next;
    }
    Ok(sum)
}

fn principal_column<T: SquareSample>(
    grid: &TimeGrid,
    rule: QuadratureRule,
    f: impl Fn(usize, usize) -> T,
    order: NeumannOrder,
) -> Result<Vec<T>> {
    match order {
        NeumannOrder::Exact => resolvent_column(grid, rule, f),
        NeumannOrder::Finite(0) => Err(Error::InvalidConfig("neumann order must be >= 1".into())),
        NeumannOrder::Finite(m) => neumann_column(grid, rule, f, m),
    }
}

fn offset(spec: &SystemSpec) -> f64 {
    spec.offsets_rad_s[0]
}

pub(crate) fn su2_on_grid(
    spec: &SystemSpec,
    pulse: &dyn Pulse,
    grid: &TimeGrid,
    opts: &SolveOptions,
) -> Result<PropagatorTrajectory> {
    let rule = opts.rule;
    if spec.kind != SystemKind::MonoSu2 {
        return Err(Error::UnsupportedKind {
            solver: "solve_mono_su2",
            kind: spec.kind.name().into(),
        });
    }
    let w = offset(spec);
    let h = grid.dt();
    let beta = pulse.sample(grid);
    let table = opts.table(pulse, &beta, grid, w / 2.0)?;
    let lead: Vec<Complex64> = beta
        .iter()
        .enumerate()
        .map(|(i, b)| b.conj() * cis(w * grid.time(i) / 2.0))
        .collect();
    let f = |i: usize, k: usize| -I * (w / 2.0) - lead[i] * table.get(i, k);
    let g11 = principal_column(grid, rule, f, opts.neumann)?;
    let u11 = integrate_column(Complex64::new(1.0, 0.0), &g11, rule, h);

    let y: Vec<Complex64> = (0..grid.len())
        .map(|k| cis(-w * grid.time(k) / 2.0) * beta[k] * u11[k])
        .collect();
    let acc = cumulative(&y, rule, h);
    let matrices = (0..grid.len())
        .map(|k| {
            let u21 = -I * cis(w * grid.time(k) / 2.0) * acc[k];
            DMatrix::from_row_slice(2, 2, &[u11[k], -u21.conj(), u21, u11[k].conj()])
        })
        .collect();
    Ok(PropagatorTrajectory::new(*grid, matrices, method_tag(rule)))
}

/// SU(2) propagator of a single spin-1/2.
pub fn solve_mono_su2(
    spec: &SystemSpec,
    pulse: &dyn Pulse,
    grid: &TimeGrid,
    rule: QuadratureRule,
) -> Result<PropagatorTrajectory> {
    su2_on_grid(spec, pulse, grid, &SolveOptions::new(rule))
}

/// `U_22(t_k)` of the shift-basis SO(3) propagator.
pub fn neumann_u22(
    spec: &SystemSpec,
    pulse: &dyn Pulse,
    grid: &TimeGrid,
    rule: QuadratureRule,
    order: NeumannOrder,
) -> Result<Vec<Complex64>> {
    if !matches!(
        spec.kind,
        SystemKind::MonoSo3Shift | SystemKind::MonoSo3Cartesian
    ) {
        return Err(Error::UnsupportedKind {
            solver: "neumann_u22",
            kind: spec.kind.name().into(),
        });
    }
    let beta = pulse.sample(grid);
    let opts = SolveOptions {
        neumann: order,
        ..SolveOptions::new(rule)
    };
    let b = BFunction::with_table(opts.table(pulse, &beta, grid, offset(spec))?, &beta);
    u22_from(&b, grid, rule, order)
}

fn u22_from(
    b: &BFunction,
    grid: &TimeGrid,
    rule: QuadratureRule,
    order: NeumannOrder,
) -> Result<Vec<Complex64>> {
    let f = |i: usize, k: usize| Complex64::new(-2.0 * b.get(i, k), 0.0);
    let g22 = principal_column(grid, rule, f, order)?;
    Ok(integrate_column(
        Complex64::new(1.0, 0.0),
        &g22,
        rule,
        grid.dt(),
    ))
}

pub(crate) fn so3_on_grid(
    spec: &SystemSpec,
    pulse: &dyn Pulse,
    grid: &TimeGrid,
    opts: &SolveOptions,
) -> Result<PropagatorTrajectory> {
    let shift = so3_shift_basis(spec, pulse, grid, opts)?;
    match spec.kind {
        SystemKind::MonoSo3Shift => Ok(shift),
        SystemKind::MonoSo3Cartesian => {
            let u = so3_basis();
            let ud = u.adjoint();
            // the change of basis rounds I to 1 + ulp, so the initial node is pinned
            let matrices = std::iter::once(DMatrix::identity(3, 3))
                .chain(shift.matrices.iter().skip(1).map(|m| {
                    let m3 = Matrix3::from_iterator(m.iter().copied());
                    let c = ud * m3 * u;
                    DMatrix::from_iterator(3, 3, c.iter().copied())
                }))
                .collect();
            Ok(PropagatorTrajectory::new(*grid, matrices, shift.method_tag))
        }
        k => Err(Error::UnsupportedKind {
            solver: "solve_mono_so3",
            kind: k.name().into(),
        }),
    }
}

fn so3_shift_basis(
    spec: &SystemSpec,
    pulse: &dyn Pulse,
    grid: &TimeGrid,
    opts: &SolveOptions,
) -> Result<PropagatorTrajectory> {
    let (rule, order) = (opts.rule, opts.neumann);
    let w = offset(spec);
    let n = grid.len();
    let h = grid.dt();
    let beta = pulse.sample(grid);
    let b = BFunction::with_table(opts.table(pulse, &beta, grid, w)?, &beta);
    let u22 = u22_from(&b, grid, rule, order)?;

    // U_12 = −i√2 e^{iΩt} ∫ e^{−iΩτ} β U_22
    let y: Vec<Complex64> = (0..n)
        .map(|k| cis(-w * grid.time(k)) * beta[k] * u22[k])
        .collect();
    let acc = cumulative(&y, rule, h);
    let u12: Vec<Complex64> = (0..n)
        .map(|k| -I * SQRT_2 * cis(w * grid.time(k)) * acc[k])
        .collect();

    // column 1: g = U̇_11, Y with U_21 = −i√2 ∫Y, and U_31 eliminated into a kernel on Y
    let table = b.table();
    let lead: Vec<Complex64> = (0..n)
        .map(|i| 2.0 * cis(-w * grid.time(i)) * beta[i])
        .collect();
    let one = |z: Complex64| DMatrix::from_element(1, 1, z);
    let mut sys = ColumnSystem::new(grid, rule, 1);
    let g = sys.unknown(1, Some(one(Complex64::new(1.0, 0.0))))?;
    let yv = sys.unknown(1, None)?;
    sys.couple(g, g, Coupling::Constant(one(I * w)))?;
    sys.couple(
        g,
        yv,
        Coupling::LeftFactor {
            factor: beta.iter().map(|b| -2.0 * b).collect(),
            matrix: one(Complex64::new(1.0, 0.0)),
        },
    )?;
    sys.couple(
        yv,
        g,
        Coupling::LeftFactor {
            factor: beta.iter().map(|b| b.conj()).collect(),
            matrix: one(Complex64::new(1.0, 0.0)),
        },
    )?;
    sys.couple(
        yv,
        yv,
        Coupling::Kernel {
            kernel: Box::new(|i, k| -lead[i] * table.get(i, k).conj()),
            matrix: one(Complex64::new(1.0, 0.0)),
        },
    )?;
    let sol = sys.solve()?;
    let u11: Vec<Complex64> = sol.integrated(g).iter().map(|m| m[(0, 0)]).collect();
    let iy: Vec<Complex64> = sol.integrated(yv).iter().map(|m| m[(0, 0)]).collect();
    let u21: Vec<Complex64> = iy.iter().map(|z| -I * SQRT_2 * z).collect();

    // U_31 = i√2 e^{−iΩt} ∫ e^{iΩτ} β̄ U_21
    let y: Vec<Complex64> = (0..n)
        .map(|k| cis(w * grid.time(k)) * beta[k].conj() * u21[k])
        .collect();
    let acc = cumulative(&y, rule, h);
    let u31: Vec<Complex64> = (0..n)
        .map(|k| I * SQRT_2 * cis(-w * grid.time(k)) * acc[k])
        .collect();

    let matrices = (0..n)
        .map(|k| {
            #[rustfmt::skip]
            let m = DMatrix::from_row_slice(3, 3, &[
                u11[k], u12[k], u31[k].conj(),
                u21[k], u22[k], u21[k].conj(),
                u31[k], u12[k].conj(), u11[k].conj(),
            ]);
            m
        })
        .collect();
    Ok(PropagatorTrajectory::new(*grid, matrices, method_tag(rule)))
}

/// SO(3) propagator in the basis named by `spec.kind`.
pub fn solve_mono_so3(
    spec: &SystemSpec,
    pulse: &dyn Pulse,
    grid: &TimeGrid,
    rule: QuadratureRule,
) -> Result<PropagatorTrajectory> {
    so3_on_grid(spec, pulse, grid, &SolveOptions::new(rule))
}
