use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::grid::TimeGrid;
use crate::linalg::unitarity_defect;
use crate::quadrature::QuadratureRule;

/// Provenance of a computed trajectory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub rule: Option<QuadratureRule>,
    pub n_points_per_interval: Option<usize>,
    pub n_intervals: Option<usize>,
    pub neumann_order: Option<usize>,
    pub system_hash: Option<String>,
    pub waveform_hash: Option<String>,
}

/// `U(t_k)` at every grid node.
#[derive(Debug, Clone)]
pub struct PropagatorTrajectory {
    pub grid: TimeGrid,
    pub matrices: Vec<DMatrix<Complex64>>,
    pub method_tag: String,
    pub meta: TrajectoryMeta,
}

impl PropagatorTrajectory {
    pub fn new(
        grid: TimeGrid,
        matrices: Vec<DMatrix<Complex64>>,
        method_tag: impl Into<String>,
    ) -> Self {
        debug_assert_eq!(grid.len(), matrices.len());
        Self {
            grid,
            matrices,
            method_tag: method_tag.into(),
            meta: TrajectoryMeta::default(),
        }
    }

    pub fn with_meta(mut self, meta: TrajectoryMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn last(&self) -> &DMatrix<Complex64> {
        self.matrices.last().expect("non-empty trajectory")
    }

    /// Time series of entry `(r, c)`.
    pub fn entry(&self, r: usize, c: usize) -> Vec<Complex64> {
        self.matrices.iter().map(|m| m[(r, c)]).collect()
    }

    /// Worst `‖U†U − I‖_F` over the grid.
    pub fn unitarity_drift(&self) -> f64 {
        self.matrices
            .iter()
            .map(unitarity_defect)
            .fold(0.0, f64::max)
    }

    /// Largest entrywise difference to another trajectory on the same grid.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.matrices
            .iter()
            .zip(&other.matrices)
            .map(|(a, b)| (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

/// Short stable digest of a serializable value.
pub fn hash_of<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).unwrap_or_default();
    let digest = Sha256::digest(&bytes);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}
