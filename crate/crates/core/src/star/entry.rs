use nalgebra::DMatrix;
use num_complex::Complex64;

/// Entry type of a two-time kernel: a complex scalar or a square complex block.
pub trait KernelEntry: Clone + std::fmt::Debug + PartialEq {
    fn zero(dim: usize) -> Self;
    fn identity(dim: usize) -> Self;
    fn dim(&self) -> usize;
    fn add(&self, other: &Self) -> Self;
    fn add_assign(&mut self, other: &Self);
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, s: f64) -> Self;
    fn scale_c(&self, c: Complex64) -> Self;
    fn inverse(&self) -> Option<Self>;
    /// Max-abs entry norm.
    fn norm(&self) -> f64;
    fn is_finite(&self) -> bool;
}

impl KernelEntry for Complex64 {
    fn zero(_: usize) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn identity(_: usize) -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn dim(&self) -> usize {
        1
    }
    #[inline]
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    #[inline]
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    #[inline]
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    #[inline]
    fn scale(&self, s: f64) -> Self {
        self * s
    }
    fn scale_c(&self, c: Complex64) -> Self {
        self * c
    }
    fn inverse(&self) -> Option<Self> {
        (self.norm_sqr() > 0.0).then(|| self.inv())
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
    fn is_finite(&self) -> bool {
        Complex64::is_finite(*self)
    }
}

impl KernelEntry for DMatrix<Complex64> {
    fn zero(dim: usize) -> Self {
        DMatrix::zeros(dim, dim)
    }
    fn identity(dim: usize) -> Self {
        DMatrix::identity(dim, dim)
    }
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, s: f64) -> Self {
        self * Complex64::new(s, 0.0)
    }
    fn scale_c(&self, c: Complex64) -> Self {
        self * c
    }
    fn inverse(&self) -> Option<Self> {
        self.clone().try_inverse()
    }
    fn norm(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|z| z.is_finite())
    }
}
