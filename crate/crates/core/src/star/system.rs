//! Coupled Volterra systems marched column by column.
//!
//! Several unknown trajectories `X_a(t) = D_a δ(t) + x_a(t)` (each a
//! `rows_a × cols` matrix) are linked through terms acting on
//! `∫_0^t X_b`, on one-time-scaled integrals, or on ⋆-products with scalar
//! kernels. Each time step is a single dense solve for all unknowns at `t_i`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quadrature::{PrefixSums, QuadratureRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnknownId(usize);

/// How a source unknown `X_b` feeds a target unknown.
pub enum Coupling<'a> {
    /// `C ∫_0^{t} X_b`.
    Constant(DMatrix<Complex64>),
    /// `φ(t) C ∫_0^{t} X_b`, with `φ` sampled on the grid.
    LeftFactor {
        factor: Vec<Complex64>,
        matrix: DMatrix<Complex64>,
    },
    /// `C (s ⋆ X_b)(t, 0)` for a scalar kernel `s(i, k)`.
    Kernel {
        kernel: Box<dyn Fn(usize, usize) -> Complex64 + Sync + 'a>,
        matrix: DMatrix<Complex64>,
    },
}

struct Unknown {
    rows: usize,
    delta: DMatrix<Complex64>,
}

struct Term<'a> {
    target: usize,
    source: usize,
    coupling: Coupling<'a>,
}

pub struct ColumnSystem<'a> {
    grid: TimeGrid,
    rule: QuadratureRule,
    cols: usize,
    unknowns: Vec<Unknown>,
    terms: Vec<Term<'a>>,
}

/// Smooth samples and Dirac coefficients of every unknown.
pub struct ColumnSolution {
    grid: TimeGrid,
    rule: QuadratureRule,
    deltas: Vec<DMatrix<Complex64>>,
    samples: Vec<Vec<DMatrix<Complex64>>>,
}

impl<'a> ColumnSystem<'a> {
    pub fn new(grid: &TimeGrid, rule: QuadratureRule, cols: usize) -> Self {
        Self {
            grid: *grid,
            rule,
            cols,
            unknowns: Vec::new(),
            terms: Vec::new(),
        }
    }

    /// Register an unknown with `rows` rows and an optional Dirac coefficient.
    pub fn unknown(&mut self, rows: usize, delta: Option<DMatrix<Complex64>>) -> Result<UnknownId> {
        let delta = delta.unwrap_or_else(|| DMatrix::zeros(rows, self.cols));
        if delta.shape() != (rows, self.cols) {
            return Err(Error::DimensionMismatch {
                expected: rows * self.cols,
                found: delta.len(),
            });
        }
        self.unknowns.push(Unknown { rows, delta });
        Ok(UnknownId(self.unknowns.len() - 1))
    }

    pub fn couple(
        &mut self,
        target: UnknownId,
        source: UnknownId,
        coupling: Coupling<'a>,
    ) -> Result<()> {
        let (rt, rs) = (self.unknowns[target.0].rows, self.unknowns[source.0].rows);
        let m = match &coupling {
            Coupling::Constant(m) => m,
            Coupling::LeftFactor { factor, matrix } => {
                if factor.len() != self.grid.len() {
                    return Err(Error::DimensionMismatch {
                        expected: self.grid.len(),
                        found: factor.len(),
                    });
                }
                matrix
            }
            Coupling::Kernel { matrix, .. } => matrix,
        };
        if m.shape() != (rt, rs) {
            return Err(Error::DimensionMismatch {
                expected: rt * rs,
                found: m.nrows() * m.ncols(),
            });
        }
        self.terms.push(Term {
            target: target.0,
            source: source.0,
            coupling,
        });
        Ok(())
    }

    pub fn solve(self) -> Result<ColumnSolution> {
        let n = self.grid.len();
        let h = self.grid.dt();
        let cols = self.cols;
        let offsets: Vec<usize> = self
            .unknowns
            .iter()
            .scan(0, |acc, u| {
                let o = *acc;
                *acc += u.rows;
                Some(o)
            })
            .collect();
        let total: usize = self.unknowns.iter().map(|u| u.rows).sum();

        // one running prefix sum per scalar entry of every unknown (column-major)
        let mut prefix: Vec<Vec<PrefixSums<Complex64>>> = self
            .unknowns
            .iter()
            .map(|u| {
                (0..u.rows * cols)
                    .map(|_| PrefixSums::with_capacity(n))
                    .collect()
            })
            .collect();
        let mut samples: Vec<Vec<DMatrix<Complex64>>> = self
            .unknowns
            .iter()
            .map(|_| Vec::with_capacity(n))
            .collect();
        let mut w = Vec::with_capacity(n);

        for i in 0..n {
            for p in prefix.iter_mut().flatten() {
                p.push(Complex64::new(0.0, 0.0));
            }
            let last = if i == 0 {
                0.0
            } else {
                self.rule.last_weight(i) * h
            };
            if i > 0 {
                self.rule.weights_into(i, &mut w);
            }

            let mut system = DMatrix::<Complex64>::identity(total, total);
            let mut rhs = DMatrix::<Complex64>::zeros(total, cols);

            for term in &self.terms {
                let src = &self.unknowns[term.source];
                let (ot, os) = (offsets[term.target], offsets[term.source]);
                let rs = src.rows;
                // known part of the source quantity and the coefficient of x_b(t_i)
                let (known, diag, matrix) = match &term.coupling {
                    Coupling::Constant(m) => (
                        integral_known(&prefix[term.source], &src.delta, self.rule, h, i),
                        Complex64::new(last, 0.0),
                        m,
                    ),
                    Coupling::LeftFactor { factor, matrix } => {
                        let base =
                            integral_known(&prefix[term.source], &src.delta, self.rule, h, i);
                        (base * factor[i], factor[i] * last, matrix)
                    }
                    Coupling::Kernel { kernel, matrix } => {
                        let mut acc = src.delta.clone() * kernel(i, 0);
                        if i > 0 {
                            for (k, xk) in samples[term.source].iter().enumerate() {
                                let wk = w[k] * h;
                                if wk != 0.0 {
                                    let s = kernel(i, k) * wk;
                                    acc.zip_apply(xk, |a, x| *a += s * x);
                                }
                            }
                        }
                        (acc, kernel(i, i) * last, matrix)
                    }
                };
                let contrib = matrix * known;
                let mut block = rhs.view_mut((ot, 0), (matrix.nrows(), cols));
                block += contrib;
                if diag != Complex64::new(0.0, 0.0) {
                    let mut sys = system.view_mut((ot, os), (matrix.nrows(), rs));
                    sys -= matrix * diag;
                }
            }

            let lu = system.lu();
            let x = lu.solve(&rhs).ok_or(Error::Singular(i))?;
            if x.iter().any(|z| !z.is_finite()) {
                return Err(Error::NonFiniteSample { i, j: 0 });
            }
            for (a, u) in self.unknowns.iter().enumerate() {
                let block = x.view((offsets[a], 0), (u.rows, cols)).into_owned();
                for (p, v) in prefix[a].iter_mut().zip(block.iter()) {
                    p.set_last(*v);
                }
                samples[a].push(block);
            }
        }

        Ok(ColumnSolution {
            grid: self.grid,
            rule: self.rule,
            deltas: self.unknowns.into_iter().map(|u| u.delta).collect(),
            samples,
        })
    }
}

/// `D + ∫_0^{t_i} x` with the (not yet known) sample at `t_i` taken as zero.
fn integral_known(
    prefix: &[PrefixSums<Complex64>],
    delta: &DMatrix<Complex64>,
    rule: QuadratureRule,
    h: f64,
    i: usize,
) -> DMatrix<Complex64> {
    let mut out = delta.clone();
    if i > 0 {
        for (o, p) in out.iter_mut().zip(prefix) {
            *o += p.integral(rule, h, 0, i);
        }
    }
    out
}

impl ColumnSolution {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn delta(&self, id: UnknownId) -> &DMatrix<Complex64> {
        &self.deltas[id.0]
    }

    /// Smooth samples `x(t_i)`.
    pub fn samples(&self, id: UnknownId) -> &[DMatrix<Complex64>] {
        &self.samples[id.0]
    }

    /// `D + ∫_0^{t_k} x` at every node.
    pub fn integrated(&self, id: UnknownId) -> Vec<DMatrix<Complex64>> {
        let s = &self.samples[id.0];
        let d = &self.deltas[id.0];
        let h = self.grid.dt();
        let entries = d.len();
        let prefix: Vec<PrefixSums<Complex64>> = (0..entries)
            .map(|e| PrefixSums::from_samples(s.iter().map(|m| m[e])))
            .collect();
        (0..s.len())
            .map(|k| {
                let mut out = d.clone();
                for (o, p) in out.iter_mut().zip(&prefix) {
                    *o += p.integral(self.rule, h, 0, k);
                }
                out
            })
            .collect()
    }
}
