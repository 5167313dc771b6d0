use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{method_tag, SolveOptions};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quadrature::{cumulative, QuadratureRule};
use crate::spin::{partition, SystemKind, SystemSpec};
use crate::star::{ColumnSystem, Coupling};
use crate::trajectory::PropagatorTrajectory;
use crate::waveforms::Pulse;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn cis(x: f64) -> Complex64 {
    Complex64::new(0.0, x).exp()
}

fn complexify(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Block {
    First,
    Second,
    Third,
    Last,
}

/// Propagator of three coupled spins-1/2, column block by column block.
///
/// For each column block the end vertices that do not carry the initial
/// condition are eliminated in closed form (leaving scalar ⋆-kernels on the
/// adjacent 3×3 block), and the remaining blocks are marched together.
pub(crate) fn tripartite_on_grid(
    spec: &SystemSpec,
    pulse: &dyn Pulse,
    grid: &TimeGrid,
    opts: &SolveOptions,
) -> Result<PropagatorTrajectory> {
    let rule = opts.rule;
    if spec.kind != SystemKind::Tripartite {
        return Err(Error::UnsupportedKind {
            solver: "solve_tripartite",
            kind: spec.kind.name().into(),
        });
    }
    let layout = partition(spec)?;
    let n = grid.len();
    let h = grid.dt();
    let beta = pulse.sample(grid);
    let beta_c: Vec<Complex64> = beta.iter().map(|b| b.conj()).collect();
    let (h1, h8) = (layout.h_first, layout.h_last);
    let time = |k: usize| grid.time(k);

    let u_row = DMatrix::from_element(1, 3, Complex64::new(1.0, 0.0));
    let u_col = u_row.transpose();
    let ones = DMatrix::from_element(3, 3, Complex64::new(1.0, 0.0));
    let mix = complexify(layout.mixing.as_ref().expect("tripartite mixing"));
    let h_ii = complexify(&layout.h_ii) * -I;
    let h_iii = complexify(layout.h_iii.as_ref().expect("tripartite block")) * -I;
    let scaled = |v: &[Complex64], s: Complex64| v.iter().map(|z| z * s).collect::<Vec<_>>();

    // s1(t, σ) = −β(t) e^{−ih₁t} ∫_σ^t e^{ih₁τ} β̄,  s8(t, σ) = −β̄(t) e^{−ih₈t} ∫_σ^t e^{ih₈τ} β
    let t1 = opts.table(pulse, &beta, grid, h1)?;
    let t8 = opts.table(pulse, &beta, grid, -h8)?;
    let lead1: Vec<Complex64> = (0..n).map(|i| -beta[i] * cis(-h1 * time(i))).collect();
    let lead8: Vec<Complex64> = (0..n).map(|i| -beta_c[i] * cis(-h8 * time(i))).collect();

    let mut out = vec![DMatrix::<Complex64>::zeros(8, 8); n];
    for col in [Block::First, Block::Second, Block::Third, Block::Last] {
        let cols = match col {
            Block::First | Block::Last => 1,
            _ => 3,
        };
        let id =
            |b: Block| (b == col).then(|| DMatrix::identity(if cols == 1 { 1 } else { 3 }, cols));
        let mut sys = ColumnSystem::new(grid, rule, cols);
        let x1 = if col == Block::First {
            Some(sys.unknown(1, id(Block::First))?)
        } else {
            None
        };
        let x2 = sys.unknown(3, id(Block::Second))?;
        let x3 = sys.unknown(3, id(Block::Third))?;
        let x8 = if col == Block::Last {
            Some(sys.unknown(1, id(Block::Last))?)
        } else {
            None
        };

        sys.couple(x2, x2, Coupling::Constant(h_ii.clone()))?;
        sys.couple(x3, x3, Coupling::Constant(h_iii.clone()))?;
        sys.couple(
            x2,
            x3,
            Coupling::LeftFactor {
                factor: scaled(&beta_c, -I),
                matrix: mix.clone(),
            },
        )?;
        sys.couple(
            x3,
            x2,
            Coupling::LeftFactor {
                factor: scaled(&beta, -I),
                matrix: mix.transpose(),
            },
        )?;
        match x1 {
            Some(x1) => {
                sys.couple(
                    x1,
                    x1,
                    Coupling::Constant(DMatrix::from_element(1, 1, -I * h1)),
                )?;
                sys.couple(
                    x1,
                    x2,
                    Coupling::LeftFactor {
                        factor: scaled(&beta_c, -I),
                        matrix: u_row.clone(),
                    },
                )?;
                sys.couple(
                    x2,
                    x1,
                    Coupling::LeftFactor {
                        factor: scaled(&beta, -I),
                        matrix: u_col.clone(),
                    },
                )?;
            }
            None => sys.couple(
                x2,
                x2,
                Coupling::Kernel {
                    kernel: Box::new(|i, k| lead1[i] * t1.get(i, k).conj()),
                    matrix: ones.clone(),
                },
            )?,
        }
        match x8 {
            Some(x8) => {
                sys.couple(
                    x8,
                    x8,
                    Coupling::Constant(DMatrix::from_element(1, 1, -I * h8)),
                )?;
                sys.couple(
                    x8,
                    x3,
                    Coupling::LeftFactor {
                        factor: scaled(&beta, -I),
                        matrix: u_row.clone(),
                    },
                )?;
                sys.couple(
                    x3,
                    x8,
                    Coupling::LeftFactor {
                        factor: scaled(&beta_c, -I),
                        matrix: u_col.clone(),
                    },
                )?;
            }
            None => sys.couple(
                x3,
                x3,
                Coupling::Kernel {
                    kernel: Box::new(|i, k| lead8[i] * t8.get(i, k)),
                    matrix: ones.clone(),
                },
            )?,
        }
        let sol = sys.solve()?;
        let u2 = sol.integrated(x2);
        let u3 = sol.integrated(x3);

        // end rows: closed form when eliminated
        let end_row =
            |ublk: &[DMatrix<Complex64>], drive: &[Complex64], e: f64| -> Vec<DMatrix<Complex64>> {
                let ints: Vec<Vec<Complex64>> = (0..cols)
                    .map(|j| {
                        let y: Vec<Complex64> = (0..n)
                            .map(|k| cis(e * time(k)) * drive[k] * ublk[k].column(j).sum())
                            .collect();
                        cumulative(&y, rule, h)
                    })
                    .collect();
                (0..n)
                    .map(|k| DMatrix::from_fn(1, cols, |_, j| -I * cis(-e * time(k)) * ints[j][k]))
                    .collect()
            };
        let u1 = match x1 {
            Some(x1) => sol.integrated(x1),
            None => end_row(&u2, &beta_c, h1),
        };
        let u8 = match x8 {
            Some(x8) => sol.integrated(x8),
            None => end_row(&u3, &beta, h8),
        };

        let col_idx = &layout.blocks[match col {
            Block::First => 0,
            Block::Second => 1,
            Block::Third => 2,
            Block::Last => 3,
        }];
        for k in 0..n {
            for (blk, rows) in [
                (&u1[k], &layout.blocks[0]),
                (&u2[k], &layout.blocks[1]),
                (&u3[k], &layout.blocks[2]),
                (&u8[k], &layout.blocks[3]),
            ] {
                for (a, &r) in rows.iter().enumerate() {
                    for (b, &s) in col_idx.iter().enumerate() {
                        out[k][(r, s)] = blk[(a, b)];
                    }
                }
            }
        }
    }
    Ok(PropagatorTrajectory::new(*grid, out, method_tag(rule)))
}

/// Propagator of three mutually coupled spins-1/2 under a common drive.
pub fn solve_tripartite(
    spec: &SystemSpec,
    pulse: &dyn Pulse,
    grid: &TimeGrid,
    rule: QuadratureRule,
) -> Result<PropagatorTrajectory> {
    tripartite_on_grid(spec, pulse, grid, &SolveOptions::new(rule))
}
