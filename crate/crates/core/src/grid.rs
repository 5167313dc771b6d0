use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform discretization of `[t_start, t_end]` with `n_points` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    n_points: usize,
    dt: f64,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 nodes, got {n_points}"
            )));
        }
        if !t_start.is_finite() || !t_end.is_finite() || t_end <= t_start {
            return Err(Error::InvalidGrid(format!(
                "bad interval [{t_start}, {t_end}]"
            )));
        }
        let dt = (t_end - t_start) / (n_points - 1) as f64;
        Ok(Self {
            t_start,
            t_end,
            n_points,
            dt,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// Time of node `k`, computed directly rather than by accumulation.
    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        (k as f64).mul_add(self.dt, self.t_start)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.time(k)).collect()
    }

    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.n_points == other.n_points
            && self.t_start == other.t_start
            && self.t_end == other.t_end
    }
}
