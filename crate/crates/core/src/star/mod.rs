//! Discretized Volterra ⋆-calculus on a uniform grid.
//!
//! A kernel `k(t', t)` is stored as a Dirac coefficient `c` (the multiple of
//! `1_⋆ = δ(t' − t)`) plus its smooth lower-triangular part
//! `F[i][j] = f(t_i, t_j)`, `i ≥ j`. The ⋆-product
//! `(f ⋆ g)(t', t) = ∫_t^{t'} f(t', τ) g(τ, t) dτ` becomes a weighted
//! triangular matrix product whose weights depend on the range `[t_j, t_i]`.

mod column;
mod entry;
mod system;

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use column::{integrate_column, resolvent_column, SquareSample};
pub use entry::KernelEntry;
pub use system::{ColumnSolution, ColumnSystem, Coupling, UnknownId};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quadrature::QuadratureRule;

/// Default relative tolerance for the a-posteriori resolvent residual check.
pub const DEFAULT_RESIDUAL_TOLERANCE: f64 = 1e-10;

/// A two-time kernel with entries of type `T` (scalars or square blocks).
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel<T> {
    grid: TimeGrid,
    delta: T,
    smooth: Vec<T>,
}

/// Scalar two-time kernel.
pub type StarKernel = Kernel<Complex64>;
/// Matrix-valued two-time kernel with `d × d` blocks.
pub type BlockStarKernel = Kernel<DMatrix<Complex64>>;

#[inline]
fn packed(i: usize, j: usize) -> usize {
    i * (i + 1) / 2 + j
}

impl<T: KernelEntry> Kernel<T> {
    /// Build from an index-level generator `f(i, j)`, `i ≥ j`.
    pub fn from_indexed(
        grid: &TimeGrid,
        delta: T,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Result<Self> {
        let n = grid.len();
        let mut smooth = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                if !v.is_finite() {
                    return Err(Error::NonFiniteSample { i, j });
                }
                if v.dim() != delta.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: delta.dim(),
                        found: v.dim(),
                    });
                }
                smooth.push(v);
            }
        }
        Ok(Self {
            grid: *grid,
            delta,
            smooth,
        })
    }

    /// Sample a two-time function at every node pair `(t_i, t_j)`, `i ≥ j`.
    pub fn from_function(grid: &TimeGrid, delta: T, f: impl Fn(f64, f64) -> T) -> Result<Self> {
        let g = *grid;
        Self::from_indexed(grid, delta, |i, j| f(g.time(i), g.time(j)))
    }

    pub fn zero(grid: &TimeGrid, dim: usize) -> Self {
        let n = grid.len();
        Self {
            grid: *grid,
            delta: T::zero(dim),
            smooth: vec![T::zero(dim); n * (n + 1) / 2],
        }
    }

    /// The ⋆-identity `1_⋆` (times the identity block).
    pub fn identity(grid: &TimeGrid, dim: usize) -> Self {
        let mut k = Self::zero(grid, dim);
        k.delta = T::identity(dim);
        k
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.delta.dim()
    }

    pub fn delta(&self) -> &T {
        &self.delta
    }

    /// Smooth part at `(i, j)`; `None` above the diagonal where it is zero.
    pub fn smooth(&self, i: usize, j: usize) -> Option<&T> {
        (i >= j).then(|| &self.smooth[packed(i, j)])
    }

    /// Smooth part at `(i, j)` including the structural zeros.
    pub fn value(&self, i: usize, j: usize) -> T {
        match self.smooth(i, j) {
            Some(v) => v.clone(),
            None => T::zero(self.dim()),
        }
    }

    pub fn with_delta(mut self, delta: T) -> Self {
        self.delta = delta;
        self
    }

    pub fn map(&self, f: impl Fn(&T) -> T) -> Self {
        Self {
            grid: self.grid,
            delta: f(&self.delta),
            smooth: self.smooth.iter().map(&f).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v.scale_c(c))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            grid: self.grid,
            delta: self.delta.add(&other.delta),
            smooth: self
                .smooth
                .iter()
                .zip(&other.smooth)
                .map(|(a, b)| a.add(b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Largest entry norm of the smooth part.
    pub fn smooth_max_norm(&self) -> f64 {
        self.smooth.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    /// ⋆-product `self ⋆ other` under `rule`.
    pub fn star(&self, other: &Self, rule: QuadratureRule) -> Result<Self> {
        self.check_compatible(other)?;
        let n = self.grid.len();
        let h = self.grid.dt();
        let d = self.dim();
        let mut w = Vec::with_capacity(n);
        let mut smooth = Vec::with_capacity(self.smooth.len());
        for i in 0..n {
            for j in 0..=i {
                let mut acc = self.delta.mul(&other.smooth[packed(i, j)]);
                acc.add_assign(&self.smooth[packed(i, j)].mul(&other.delta));
                if i > j {
                    rule.weights_into(i - j, &mut w);
                    let mut sum = T::zero(d);
                    for k in j..=i {
                        let wk = w[k - j] * h;
                        sum.add_assign(
                            &self.smooth[packed(i, k)]
                                .mul(&other.smooth[packed(k, j)])
                                .scale(wk),
                        );
                    }
                    acc.add_assign(&sum);
                }
                smooth.push(acc);
            }
        }
        Ok(Self {
            grid: self.grid,
            delta: self.delta.mul(&other.delta),
            smooth,
        })
    }

    /// ⋆-resolvent `(1_⋆ − self)^{⋆−1}` with the default residual tolerance.
    pub fn resolvent(&self, rule: QuadratureRule) -> Result<Self> {
        self.resolvent_with_tolerance(rule, DEFAULT_RESIDUAL_TOLERANCE)
    }

    /// ⋆-resolvent `(1_⋆ − f)^{⋆−1}`, where `f` is `self`.
    ///
    /// A Dirac part `c·1_⋆` in `f` is factored out first, so the result is
    /// `(1 − c)^{-1}·(1_⋆ − f_s (1 − c)^{-1})^{⋆−1}`. The smooth part `R` of
    /// the resolvent of a purely smooth kernel solves `R = f + f ⋆ R`, which
    /// is lower triangular in the time index and is solved column by column
    /// with forward substitution.
    pub fn resolvent_with_tolerance(&self, rule: QuadratureRule, tolerance: f64) -> Result<Self> {
        let d = self.dim();
        let one_minus_c = T::identity(d).add(&self.delta.scale(-1.0));
        let pre = one_minus_c.inverse().ok_or(Error::Singular(0))?;
        let f = Self {
            grid: self.grid,
            delta: T::zero(d),
            smooth: self.smooth.iter().map(|v| v.mul(&pre)).collect(),
        };
        let n = self.grid.len();
        let h = self.grid.dt();
        let diag_max = (0..n)
            .map(|i| f.smooth[packed(i, i)].norm())
            .fold(0.0, f64::max);
        if h * diag_max >= 1.0 {
            return Err(Error::IllConditioned(h * diag_max));
        }

        let mut r = vec![T::zero(d); f.smooth.len()];
        let mut w = Vec::with_capacity(n);
        for j in 0..n {
            r[packed(j, j)] = f.smooth[packed(j, j)].clone();
            for i in j + 1..n {
                rule.weights_into(i - j, &mut w);
                let mut acc = f.smooth[packed(i, j)].clone();
                for k in j..i {
                    acc.add_assign(
                        &f.smooth[packed(i, k)]
                            .mul(&r[packed(k, j)])
                            .scale(w[k - j] * h),
                    );
                }
                let last = w[i - j] * h;
                let lhs = T::identity(d).add(&f.smooth[packed(i, i)].scale(-last));
                let inv = lhs.inverse().ok_or(Error::Singular(i))?;
                r[packed(i, j)] = inv.mul(&acc);
            }
        }
        // undo the Dirac prefactor: resolvent = pre + R·pre
        let smooth: Vec<T> = r.iter().map(|v| v.mul(&pre)).collect();
        let out = Self {
            grid: self.grid,
            delta: pre.clone(),
            smooth,
        };

        let resid = self.resolvent_residual(&out, rule)?;
        if resid > tolerance {
            return Err(Error::ResidualTooLarge {
                residual: resid,
                tolerance,
            });
        }
        Ok(out)
    }

    /// Relative residual `‖(1_⋆ − self) ⋆ res − 1_⋆‖` on the smooth part.
    pub fn resolvent_residual(&self, res: &Self, rule: QuadratureRule) -> Result<f64> {
        let d = self.dim();
        let one_minus = Self::identity(&self.grid, d).sub(self)?;
        let prod = one_minus.star(res, rule)?;
        let mut worst = prod.delta.add(&T::identity(d).scale(-1.0)).norm();
        for v in &prod.smooth {
            worst = worst.max(v.norm());
        }
        let scale = self.smooth_max_norm().max(res.smooth_max_norm()).max(1.0);
        Ok(worst / scale)
    }

    /// `v(t_k) = c + ∫_{t_0}^{t_k} smooth(τ, t_0) dτ` for every node.
    pub fn integrate_left(&self, rule: QuadratureRule) -> Vec<T> {
        let col: Vec<T> = (0..self.grid.len())
            .map(|i| self.smooth[packed(i, 0)].clone())
            .collect();
        let h = self.grid.dt();
        let mut w = Vec::new();
        (0..col.len())
            .map(|k| {
                let mut acc = self.delta.clone();
                if k > 0 {
                    rule.weights_into(k, &mut w);
                    for (q, v) in col.iter().take(k + 1).enumerate() {
                        acc.add_assign(&v.scale(w[q] * h));
                    }
                }
                acc
            })
            .collect()
    }
}

impl StarKernel {
    /// Debug dump: one `i,j,re,im` line per stored entry of the smooth part.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# delta,{:e},{:e}", self.delta.re, self.delta.im);
        let _ = writeln!(s, "i,j,re,im");
        for i in 0..self.grid.len() {
            for j in 0..=i {
                let v = self.smooth[packed(i, j)];
                let _ = writeln!(s, "{i},{j},{:e},{:e}", v.re, v.im);
            }
        }
        s
    }
}

/// `1_⋆ + f(t', t)` style constructor for scalar kernels.
pub fn kernel_from_function(
    grid: &TimeGrid,
    f: impl Fn(f64, f64) -> Complex64,
    delta: Complex64,
) -> Result<StarKernel> {
    StarKernel::from_function(grid, delta, f)
}

pub fn star_product(a: &StarKernel, b: &StarKernel, rule: QuadratureRule) -> Result<StarKernel> {
    a.star(b, rule)
}

/// Resolvent `(1_⋆ − f)^{⋆−1}` of the kernel `f`.
pub fn star_resolvent(f: &StarKernel, rule: QuadratureRule) -> Result<StarKernel> {
    f.resolvent(rule)
}

pub fn block_star_product(
    a: &BlockStarKernel,
    b: &BlockStarKernel,
    rule: QuadratureRule,
) -> Result<BlockStarKernel> {
    a.star(b, rule)
}

pub fn block_star_resolvent(f: &BlockStarKernel, rule: QuadratureRule) -> Result<BlockStarKernel> {
    f.resolvent(rule)
}

/// Sum of ⋆-powers `Σ_{n=0}^{order} f^{⋆n}` (with `f^{⋆0} = 1_⋆`).
pub fn neumann_sum<T: KernelEntry>(
    f: &Kernel<T>,
    order: usize,
    rule: QuadratureRule,
) -> Result<Kernel<T>> {
    let d = f.dim();
    let mut total = Kernel::identity(f.grid(), d);
    let mut power = Kernel::identity(f.grid(), d);
    for _ in 0..order {
        power = f.star(&power, rule)?;
        total = total.add(&power)?;
    }
    Ok(total)
}
