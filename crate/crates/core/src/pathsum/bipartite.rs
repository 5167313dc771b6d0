use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use super::fourier::{BFunction, FourierTable};
use super::{method_tag, SolveOptions};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::linalg::spectral_projectors;
use crate::quadrature::{cumulative, QuadratureRule};
use crate::spin::{partition, SystemKind, SystemSpec};
use crate::star::{integrate_column, resolvent_column};
use crate::trajectory::PropagatorTrajectory;
use crate::waveforms::Pulse;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn cis(x: f64) -> Complex64 {
    Complex64::new(0.0, x).exp()
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub(crate) fn bipartite_on_grid(
    spec: &SystemSpec,
    pulse: &dyn Pulse,
    grid: &TimeGrid,
    opts: &SolveOptions,
) -> Result<PropagatorTrajectory> {
    let rule = opts.rule;
    if spec.kind != SystemKind::Bipartite {
        return Err(Error::UnsupportedKind {
            solver: "solve_bipartite",
            kind: spec.kind.name().into(),
        });
    }
    // everything below is in the gauge with h' = h − πJ/2, where h'_44 = −h'_11
    let layout = partition(spec)?;
    let w = layout.h_first;
    let h_ii = &layout.h_ii;
    let n = grid.len();
    let h = grid.dt();
    let beta = pulse.sample(grid);
    let time = |k: usize| grid.time(k);

    // middle block: f = −iH'_II − P b with P the all-ones matrix
    let b = BFunction::with_table(opts.table(pulse, &beta, grid, w)?, &beta);
    let mh = Matrix2::new(
        c(h_ii[(0, 0)]),
        c(h_ii[(0, 1)]),
        c(h_ii[(1, 0)]),
        c(h_ii[(1, 1)]),
    ) * -I;
    let g_ii = resolvent_column(grid, rule, |i, k| {
        let s = c(b.get(i, k));
        mh - Matrix2::from_element(s)
    })?;
    let u_ii = integrate_column(Matrix2::identity(), &g_ii, rule, h);

    // end rows of the middle columns
    let row_sum = |m: &Matrix2<Complex64>| [m[(0, 0)] + m[(1, 0)], m[(0, 1)] + m[(1, 1)]];
    let first: Vec<[Complex64; 2]> = (0..n)
        .map(|k| {
            let s = row_sum(&u_ii[k]);
            let f = cis(w * time(k)) * beta[k].conj();
            [f * s[0], f * s[1]]
        })
        .collect();
    let last: Vec<[Complex64; 2]> = (0..n)
        .map(|k| {
            let s = row_sum(&u_ii[k]);
            let f = cis(-w * time(k)) * beta[k];
            [f * s[0], f * s[1]]
        })
        .collect();
    let int_first =
        [0, 1].map(|j| cumulative(&first.iter().map(|v| v[j]).collect::<Vec<_>>(), rule, h));
    let int_last =
        [0, 1].map(|j| cumulative(&last.iter().map(|v| v[j]).collect::<Vec<_>>(), rule, h));

    // corner columns (1 and 4), with the middle block eliminated through its spectrum
    let (lambda, proj) = spectral_projectors(h_ii);
    let weights: Vec<f64> = proj.iter().map(|p| p.iter().map(|z| z.re).sum()).collect();
    let tb: Vec<FourierTable> = lambda
        .iter()
        .map(|&l| opts.table(pulse, &beta, grid, -l))
        .collect::<Result<_>>()?;
    let tc: Vec<FourierTable> = lambda
        .iter()
        .map(|&l| opts.table(pulse, &beta, grid, l))
        .collect::<Result<_>>()?;
    let lead: Vec<Vec<Complex64>> = lambda
        .iter()
        .zip(&weights)
        .map(|(&l, &s)| (0..n).map(|i| s * cis(-l * time(i))).collect())
        .collect();
    let diag = Matrix2::new(-I * w, c(0.0), c(0.0), I * w);
    let g_c = resolvent_column(grid, rule, |i, k| {
        let mut row = [c(0.0); 2];
        for m in 0..lambda.len() {
            row[0] += lead[m][i] * tb[m].get(i, k);
            row[1] += lead[m][i] * tc[m].get(i, k).conj();
        }
        let a = [beta[i].conj(), beta[i]];
        diag - Matrix2::new(a[0] * row[0], a[0] * row[1], a[1] * row[0], a[1] * row[1])
    })?;
    let u_c = integrate_column(Matrix2::identity(), &g_c, rule, h);

    // middle rows of the corner columns: −i Σ_m e^{−iλ_m t} P_m ∫ e^{iλ_m τ} B U_c
    let row_b: Vec<[Complex64; 2]> = (0..n)
        .map(|k| {
            let u = &u_c[k];
            [
                beta[k] * u[(0, 0)] + beta[k].conj() * u[(1, 0)],
                beta[k] * u[(0, 1)] + beta[k].conj() * u[(1, 1)],
            ]
        })
        .collect();
    let mut mid = vec![Matrix2::<Complex64>::zeros(); n];
    for (m, &l) in lambda.iter().enumerate() {
        let p = &proj[m];
        let pu = [p[(0, 0)] + p[(0, 1)], p[(1, 0)] + p[(1, 1)]];
        let ints = [0, 1].map(|j| {
            cumulative(
                &(0..n)
                    .map(|k| cis(l * time(k)) * row_b[k][j])
                    .collect::<Vec<_>>(),
                rule,
                h,
            )
        });
        for k in 0..n {
            let ph = -I * cis(-l * time(k));
            for r in 0..2 {
                for j in 0..2 {
                    mid[k][(r, j)] += ph * pu[r] * ints[j][k];
                }
            }
        }
    }

    let t0 = grid.t_start();
    let matrices = (0..n)
        .map(|k| {
            let mut u = DMatrix::<Complex64>::zeros(4, 4);
            let ends = [0usize, 3];
            for (a, &r) in ends.iter().enumerate() {
                for (bb, &s) in ends.iter().enumerate() {
                    u[(r, s)] = u_c[k][(a, bb)];
                }
            }
            for r in 0..2 {
                for s in 0..2 {
                    u[(r + 1, s + 1)] = u_ii[k][(r, s)];
                }
                u[(r + 1, 0)] = mid[k][(r, 0)];
                u[(r + 1, 3)] = mid[k][(r, 1)];
            }
            for j in 0..2 {
                u[(0, j + 1)] = -I * cis(-w * time(k)) * int_first[j][k];
                u[(3, j + 1)] = -I * cis(w * time(k)) * int_last[j][k];
            }
            u * cis(-layout.gauge_shift * (time(k) - t0))
        })
        .collect();
    Ok(PropagatorTrajectory::new(*grid, matrices, method_tag(rule)))
}

/// Propagator of two coupled spins-1/2 under a common drive.
pub fn solve_bipartite(
    spec: &SystemSpec,
    pulse: &dyn Pulse,
    grid: &TimeGrid,
    rule: QuadratureRule,
) -> Result<PropagatorTrajectory> {
    bipartite_on_grid(spec, pulse, grid, &SolveOptions::new(rule))
}
