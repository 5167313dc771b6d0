//! Column-0 evaluation of resolvents.
//!
//! Propagators only need `G(t, 0)`, and the Volterra structure means column 0
//! of `(1_⋆ − f)^{⋆−1}` can be marched forward on its own:
//! `R_i = (1 − w_ii h f_ii)^{-1} (f_i0 + Σ_{k<i} w_k h f_ik R_k)`.
//! Kernel samples are produced on demand, so memory stays O(N).

use std::ops::Mul;

use nalgebra::{Const, DimMin, SMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quadrature::{PrefixSums, QuadratureRule, Sample};

/// Square sample type usable as a resolvent entry.
pub trait SquareSample: Sample + Mul<Output = Self> {
    fn identity() -> Self;
    fn try_inv(self) -> Option<Self>;
    fn max_abs(&self) -> f64;
    fn all_finite(&self) -> bool;
}

impl SquareSample for Complex64 {
    fn identity() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn try_inv(self) -> Option<Self> {
        (self.norm_sqr() > 0.0).then(|| self.inv())
    }
    fn max_abs(&self) -> f64 {
        self.norm()
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl<const D: usize> SquareSample for SMatrix<Complex64, D, D>
where
    Const<D>: DimMin<Const<D>, Output = Const<D>>,
{
    fn identity() -> Self {
        SMatrix::identity()
    }
    fn try_inv(self) -> Option<Self> {
        self.try_inverse()
    }
    fn max_abs(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
    fn all_finite(&self) -> bool {
        self.iter().all(|z| z.is_finite())
    }
}

/// Smooth part of column 0 of `(1_⋆ − f)^{⋆−1}`, where `f` has no Dirac part.
///
/// `f(i, k)` must return `f(t_i, t_k)` for `i ≥ k`.
pub fn resolvent_column<T: SquareSample>(
    grid: &TimeGrid,
    rule: QuadratureRule,
    mut f: impl FnMut(usize, usize) -> T,
) -> Result<Vec<T>> {
    let n = grid.len();
    let h = grid.dt();
    let mut r: Vec<T> = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let fii = f(i, i);
        if !fii.all_finite() {
            return Err(Error::NonFiniteSample { i, j: i });
        }
        if h * fii.max_abs() >= 1.0 {
            return Err(Error::IllConditioned(h * fii.max_abs()));
        }
        if i == 0 {
            r.push(fii);
            continue;
        }
        rule.weights_into(i, &mut w);
        let mut acc = f(i, 0);
        for (k, rk) in r.iter().enumerate() {
            let wk = w[k] * h;
            if wk != 0.0 {
                acc += (f(i, k) * *rk).scale(wk);
            }
        }
        if !acc.all_finite() {
            return Err(Error::NonFiniteSample { i, j: 0 });
        }
        let lhs = T::identity() - fii.scale(w[i] * h);
        let inv = lhs.try_inv().ok_or(Error::Singular(i))?;
        r.push(inv * acc);
    }
    Ok(r)
}

/// `delta + ∫_{t_0}^{t_k} samples` at every node.
pub fn integrate_column<T: Sample>(
    delta: T,
    samples: &[T],
    rule: QuadratureRule,
    h: f64,
) -> Vec<T> {
    let prefix = PrefixSums::from_samples(samples.iter().copied());
    (0..samples.len())
        .map(|k| delta + prefix.integral(rule, h, 0, k))
        .collect()
}
