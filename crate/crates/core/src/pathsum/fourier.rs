use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quadrature::{PrefixSums, QuadratureRule};
use crate::star::StarKernel;
use crate::waveforms::Pulse;

/// Table of `B_{t_i,t_j}(ω) = ∫_{t_j}^{t_i} e^{−iωτ} β(τ) dτ`, each entry O(1).
#[derive(Debug, Clone)]
pub struct FourierTable {
    grid: TimeGrid,
    rule: QuadratureRule,
    omega: f64,
    stride: usize,
    prefix: PrefixSums<Complex64>,
}

impl FourierTable {
    /// Build from drive samples `β(t_k)` on `grid`.
    pub fn from_samples(
        beta: &[Complex64],
        grid: &TimeGrid,
        rule: QuadratureRule,
        omega: f64,
    ) -> Self {
        let prefix = PrefixSums::from_samples(
            beta.iter()
                .enumerate()
                .map(|(k, b)| Complex64::new(0.0, -omega * grid.time(k)).exp() * b),
        );
        Self {
            grid: *grid,
            rule,
            omega,
            stride: 1,
            prefix,
        }
    }

    pub fn new(pulse: &dyn Pulse, grid: &TimeGrid, rule: QuadratureRule, omega: f64) -> Self {
        Self::from_samples(&pulse.sample(grid), grid, rule, omega)
    }

    /// Integrate on a grid `factor` times finer than `grid`; entries are still
    /// indexed by the nodes of `grid`.
    pub fn oversampled(
        pulse: &dyn Pulse,
        grid: &TimeGrid,
        rule: QuadratureRule,
        omega: f64,
        factor: usize,
    ) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidConfig(
                "oversampling factor must be >= 1".into(),
            ));
        }
        if factor == 1 {
            return Ok(Self::new(pulse, grid, rule, omega));
        }
        let fine = TimeGrid::new(grid.t_start(), grid.t_end(), (grid.len() - 1) * factor + 1)?;
        let mut t = Self::new(pulse, &fine, rule, omega);
        t.grid = *grid;
        t.stride = factor;
        Ok(t)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `B_{t_i, t_j}` for `i ≥ j`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let s = self.stride;
        self.prefix
            .integral(self.rule, self.grid.dt() / s as f64, j * s, i * s)
    }

    pub fn to_kernel(&self) -> StarKernel {
        StarKernel::from_indexed(&self.grid, Complex64::new(0.0, 0.0), |i, j| self.get(i, j))
            .expect("finite table")
    }
}

/// The table `B_{t',t}(ω)` materialized as a kernel.
pub fn fourier_kernel_b(
    pulse: &dyn Pulse,
    grid: &TimeGrid,
    omega: f64,
    rule: QuadratureRule,
) -> FourierTable {
    FourierTable::new(pulse, grid, rule, omega)
}

/// Evaluator for `b(t', t) = 2 Re(e^{−iΩt'} β(t') conj B_{t',t}(Ω))`,
/// which equals `∂_{t'} |B_{t',t}(Ω)|²`.
#[derive(Debug, Clone)]
pub struct BFunction {
    table: FourierTable,
    lead: Vec<Complex64>,
}

impl BFunction {
    pub fn new(beta: &[Complex64], grid: &TimeGrid, rule: QuadratureRule, omega: f64) -> Self {
        Self::with_table(FourierTable::from_samples(beta, grid, rule, omega), beta)
    }

    /// `beta` holds the drive on the table's (coarse) grid.
    pub fn with_table(table: FourierTable, beta: &[Complex64]) -> Self {
        let (grid, omega) = (*table.grid(), table.omega());
        let lead = beta
            .iter()
            .enumerate()
            .map(|(k, b)| Complex64::new(0.0, -omega * grid.time(k)).exp() * b)
            .collect();
        Self { table, lead }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        2.0 * (self.lead[i] * self.table.get(i, j).conj()).re
    }

    pub fn table(&self) -> &FourierTable {
        &self.table
    }
}

pub fn b_kernel(
    pulse: &dyn Pulse,
    grid: &TimeGrid,
    omega: f64,
    rule: QuadratureRule,
) -> StarKernel {
    let b = BFunction::new(&pulse.sample(grid), grid, rule, omega);
    StarKernel::from_indexed(grid, Complex64::new(0.0, 0.0), |i, j| {
        Complex64::new(b.get(i, j), 0.0)
    })
    .expect("finite kernel")
}
