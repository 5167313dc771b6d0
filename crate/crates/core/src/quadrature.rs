//! Quadrature rules over index ranges of a uniform grid.
//!
//! Every ⋆-product and every left integration reduces to integrating samples
//! over a contiguous index range `[j, i]`. The weights depend on the range
//! length, so they are applied at evaluation time rather than stored.

use std::ops::{Add, AddAssign, Sub, SubAssign};

use nalgebra::{Const, SMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Quadrature used for every integral over the time grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    /// Plain Riemann sum including both endpoints of the range.
    Rectangular,
    Trapezoidal,
    /// Composite Simpson on even ranges; odd ranges average the two variants
    /// that close the first or the last subinterval with a three-node parabola.
    AveragedSimpson,
}

impl QuadratureRule {
    pub const ALL: [QuadratureRule; 3] = [
        QuadratureRule::Rectangular,
        QuadratureRule::Trapezoidal,
        QuadratureRule::AveragedSimpson,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            QuadratureRule::Rectangular => "rect",
            QuadratureRule::Trapezoidal => "trap",
            QuadratureRule::AveragedSimpson => "simpson",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "rect" | "rectangular" => Some(QuadratureRule::Rectangular),
            "trap" | "trapezoidal" => Some(QuadratureRule::Trapezoidal),
            "simpson" | "averaged_simpson" => Some(QuadratureRule::AveragedSimpson),
            _ => None,
        }
    }

    /// Weight, in units of the step, of node `k` of a range spanning `m`
    /// subintervals (nodes `0..=m`).
    pub fn weight(self, m: usize, k: usize) -> f64 {
        debug_assert!(k <= m);
        if m == 0 {
            return 0.0;
        }
        match self {
            QuadratureRule::Rectangular => 1.0,
            QuadratureRule::Trapezoidal => trap_weight(m, k),
            QuadratureRule::AveragedSimpson => {
                if m == 1 {
                    0.5
                } else if m.is_multiple_of(2) {
                    simpson_weight(m, k)
                } else {
                    // odd count: one end subinterval from the parabola through its
                    // three nearest nodes, Simpson on the rest; average both ends
                    let head = PARABOLA_END.get(k).copied().unwrap_or(0.0)
                        + if k >= 1 {
                            simpson_weight(m - 1, k - 1)
                        } else {
                            0.0
                        };
                    let tail = PARABOLA_END.get(m - k).copied().unwrap_or(0.0)
                        + if k < m { simpson_weight(m - 1, k) } else { 0.0 };
                    0.5 * (head + tail)
                }
            }
        }
    }

    /// All `m + 1` weights of a range, in units of the step.
    pub fn weights_into(self, m: usize, out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..=m).map(|k| self.weight(m, k)));
    }

    /// Weight of the last node of a range of `m` subintervals.
    #[inline]
    pub fn last_weight(self, m: usize) -> f64 {
        self.weight(m, m)
    }
}

/// `∫_0^1` of the parabola through nodes 0, 1, 2, in units of the step.
const PARABOLA_END: [f64; 3] = [5.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0];

fn trap_weight(m: usize, k: usize) -> f64 {
    if k == 0 || k == m {
        0.5
    } else {
        1.0
    }
}

fn simpson_weight(m: usize, k: usize) -> f64 {
    debug_assert!(m.is_multiple_of(2) && m >= 2);
    if k == 0 || k == m {
        1.0 / 3.0
    } else if k % 2 == 1 {
        4.0 / 3.0
    } else {
        2.0 / 3.0
    }
}

/// Values that can be integrated: closed under addition and real scaling.
pub trait Sample: Copy + Add<Output = Self> + Sub<Output = Self> + AddAssign + SubAssign {
    fn zero() -> Self;
    fn scale(self, s: f64) -> Self;
}

impl Sample for f64 {
    fn zero() -> Self {
        0.0
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl Sample for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        Complex64::new(self.re * s, self.im * s)
    }
}

impl<const R: usize, const C: usize> Sample for SMatrix<Complex64, R, C>
where
    Const<R>: nalgebra::DimName,
    Const<C>: nalgebra::DimName,
{
    fn zero() -> Self {
        SMatrix::zeros()
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        self.map(|z| z.scale(s))
    }
}

/// Running prefix sums of a sample sequence, split by index parity, giving
/// O(1) quadrature over any index range.
#[derive(Debug, Clone)]
pub struct PrefixSums<T> {
    values: Vec<T>,
    all: Vec<T>,
    even: Vec<T>,
    odd: Vec<T>,
}

impl<T: Sample> Default for PrefixSums<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Sample> PrefixSums<T> {
    pub fn new() -> Self {
        Self::with_capacity(0)
    }

    pub fn with_capacity(n: usize) -> Self {
        let mut s = Self {
            values: Vec::with_capacity(n),
            all: Vec::with_capacity(n + 1),
            even: Vec::with_capacity(n + 1),
            odd: Vec::with_capacity(n + 1),
        };
        s.all.push(T::zero());
        s.even.push(T::zero());
        s.odd.push(T::zero());
        s
    }

    pub fn from_samples<I: IntoIterator<Item = T>>(samples: I) -> Self {
        let mut s = Self::new();
        for y in samples {
            s.push(y);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, k: usize) -> T {
        self.values[k]
    }

    pub fn push(&mut self, y: T) {
        let k = self.values.len();
        self.values.push(y);
        let (mut e, mut o) = (*self.even.last().unwrap(), *self.odd.last().unwrap());
        if k.is_multiple_of(2) {
            e += y;
        } else {
            o += y;
        }
        let a = *self.all.last().unwrap() + y;
        self.all.push(a);
        self.even.push(e);
        self.odd.push(o);
    }

    pub fn pop(&mut self) -> Option<T> {
        let y = self.values.pop()?;
        self.all.pop();
        self.even.pop();
        self.odd.pop();
        Some(y)
    }

    /// Replace the most recently pushed sample.
    pub fn set_last(&mut self, y: T) {
        self.pop();
        self.push(y);
    }

    fn parity_sum(&self, parity: usize, lo: usize, hi: usize) -> T {
        if lo > hi {
            return T::zero();
        }
        let p = if parity == 0 { &self.even } else { &self.odd };
        p[hi + 1] - p[lo]
    }

    fn plain_sum(&self, lo: usize, hi: usize) -> T {
        self.all[hi + 1] - self.all[lo]
    }

    fn simpson(&self, a: usize, b: usize) -> T {
        debug_assert!((b - a).is_multiple_of(2) && b > a);
        let inner_odd = self.parity_sum((a + 1) % 2, a + 1, b - 1);
        let inner_even = self.parity_sum(a % 2, a + 1, b - 1);
        (self.values[a] + self.values[b] + inner_odd.scale(4.0) + inner_even.scale(2.0))
            .scale(1.0 / 3.0)
    }

    /// Subinterval `[a, b]` integrated with the parabola through `a`, `b`, `c`.
    fn parabola_end(&self, a: usize, b: usize, c: usize) -> T {
        let v = &self.values;
        v[a].scale(PARABOLA_END[0]) + v[b].scale(PARABOLA_END[1]) + v[c].scale(PARABOLA_END[2])
    }

    fn trapezoid(&self, a: usize, b: usize) -> T {
        let ends = (self.values[a] + self.values[b]).scale(0.5);
        if b > a + 1 {
            self.plain_sum(a + 1, b - 1) + ends
        } else {
            ends
        }
    }

    /// Integral over nodes `j..=i` with step `h`.
    pub fn integral(&self, rule: QuadratureRule, h: f64, j: usize, i: usize) -> T {
        debug_assert!(j <= i && i < self.values.len());
        let m = i - j;
        if m == 0 {
            return T::zero();
        }
        let unit = match rule {
            QuadratureRule::Rectangular => self.plain_sum(j, i),
            QuadratureRule::Trapezoidal => self.trapezoid(j, i),
            QuadratureRule::AveragedSimpson => {
                if m == 1 {
                    self.trapezoid(j, i)
                } else if m.is_multiple_of(2) {
                    self.simpson(j, i)
                } else {
                    let head = self.parabola_end(j, j + 1, j + 2) + self.simpson(j + 1, i);
                    let tail = self.simpson(j, i - 1) + self.parabola_end(i, i - 1, i - 2);
                    (head + tail).scale(0.5)
                }
            }
        };
        unit.scale(h)
    }
}

/// Cumulative integrals `∫_{t_0}^{t_k} y` for every node `k`.
pub fn cumulative<T: Sample>(samples: &[T], rule: QuadratureRule, h: f64) -> Vec<T> {
    let prefix = PrefixSums::from_samples(samples.iter().copied());
    (0..samples.len())
        .map(|k| prefix.integral(rule, h, 0, k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn direct(rule: QuadratureRule, y: &[f64], h: f64, j: usize, i: usize) -> f64 {
        (j..=i)
            .map(|k| rule.weight(i - j, k - j) * y[k])
            .sum::<f64>()
            * h
    }

    #[test]
    fn weights_integrate_constants_exactly() {
        for rule in [QuadratureRule::Trapezoidal, QuadratureRule::AveragedSimpson] {
            for m in 1..12 {
                let s: f64 = (0..=m).map(|k| rule.weight(m, k)).sum();
                assert!((s - m as f64).abs() < 1e-14, "{rule:?} m={m} sum={s}");
            }
        }
        assert_eq!(QuadratureRule::Rectangular.weight(3, 0), 1.0);
        assert_eq!(QuadratureRule::AveragedSimpson.weight(0, 0), 0.0);
    }

    #[test]
    fn simpson_exact_for_cubics_on_even_ranges() {
        let h = 0.1;
        let y: Vec<f64> = (0..9).map(|k| (k as f64 * h).powi(3)).collect();
        let p = PrefixSums::from_samples(y.iter().copied());
        let exact = (0.8f64.powi(4) - 0.0) / 4.0;
        assert!((p.integral(QuadratureRule::AveragedSimpson, h, 0, 8) - exact).abs() < 1e-14);
    }

    #[test]
    fn averaged_simpson_odd_ranges_are_fourth_order() {
        // odd range of 2k+1 subintervals over [0, 1]; error should shrink ~h^4
        let err = |m: usize| {
            let h = 1.0 / m as f64;
            let y: Vec<f64> = (0..=m).map(|k| (3.0 * k as f64 * h).exp()).collect();
            let p = PrefixSums::from_samples(y.iter().copied());
            (p.integral(QuadratureRule::AveragedSimpson, h, 0, m) - (3f64.exp() - 1.0) / 3.0).abs()
        };
        let slope = (err(21) / err(81)).ln() / (81f64 / 21.0).ln();
        assert!(slope > 3.8, "slope {slope}");
    }

    #[test]
    fn averaged_simpson_odd_ranges_integrate_quadratics() {
        let h = 0.1;
        let y: Vec<f64> = (0..=7)
            .map(|k| (k as f64 * h).powi(2) - 2.0 * k as f64 * h)
            .collect();
        let p = PrefixSums::from_samples(y.iter().copied());
        for (j, i) in [(0, 3), (1, 6), (2, 7), (0, 7)] {
            let (a, b) = (j as f64 * h, i as f64 * h);
            let exact = (b.powi(3) - a.powi(3)) / 3.0 - (b * b - a * a);
            assert!(
                (p.integral(QuadratureRule::AveragedSimpson, h, j, i) - exact).abs() < 1e-14,
                "[{j}, {i}]"
            );
        }
    }

    proptest! {
        #[test]
        fn prefix_matches_weights(
            y in proptest::collection::vec(-10.0f64..10.0, 2..40),
            a in 0usize..40, b in 0usize..40,
        ) {
            let n = y.len();
            let (j, i) = (a.min(b) % n, a.max(b) % n);
            let (j, i) = (j.min(i), j.max(i));
            let p = PrefixSums::from_samples(y.iter().copied());
            for rule in QuadratureRule::ALL {
                let fast = p.integral(rule, 0.3, j, i);
                let slow = direct(rule, &y, 0.3, j, i);
                prop_assert!((fast - slow).abs() < 1e-10 * (1.0 + slow.abs()));
            }
        }
    }
}
