//! Hamiltonians of driven spin-½ systems in the rotating frame.
//!
//! Multi-spin states are ordered with spin 1 most significant and `α`
//! (spin up) before `β`: `|αα⟩, |αβ⟩, |βα⟩, |ββ⟩` and likewise for three
//! spins. Spin operators are `S = σ/2`, the drive is `β̄ S₊ + β S₋` per spin
//! and couplings are `2πJ S·S`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    MonoSu2,
    MonoSo3Cartesian,
    MonoSo3Shift,
    Bipartite,
    Tripartite,
}

impl SystemKind {
    pub fn dim(self) -> usize {
        match self {
            SystemKind::MonoSu2 => 2,
            SystemKind::MonoSo3Cartesian | SystemKind::MonoSo3Shift => 3,
            SystemKind::Bipartite => 4,
            SystemKind::Tripartite => 8,
        }
    }

    pub fn n_offsets(self) -> usize {
        match self {
            SystemKind::Bipartite => 2,
            SystemKind::Tripartite => 3,
            _ => 1,
        }
    }

    pub fn n_couplings(self) -> usize {
        match self {
            SystemKind::Bipartite => 1,
            SystemKind::Tripartite => 3,
            _ => 0,
        }
    }

    /// True for the kinds whose propagator is unitary in `SU(2^M)`.
    pub fn is_spinor(self) -> bool {
        !matches!(
            self,
            SystemKind::MonoSo3Cartesian | SystemKind::MonoSo3Shift
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::MonoSu2 => "mono_su2",
            SystemKind::MonoSo3Cartesian => "mono_so3_cartesian",
            SystemKind::MonoSo3Shift => "mono_so3_shift",
            SystemKind::Bipartite => "bipartite",
            SystemKind::Tripartite => "tripartite",
        }
    }
}

/// Offsets in rad/s; couplings in Hz (tripartite order `J₁₂, J₁₃, J₂₃`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub offsets_rad_s: Vec<f64>,
    #[serde(default)]
    pub couplings_hz: Vec<f64>,
}

impl SystemSpec {
    pub fn mono_su2(omega: f64) -> Self {
        Self {
            kind: SystemKind::MonoSu2,
            offsets_rad_s: vec![omega],
            couplings_hz: vec![],
        }
    }

    pub fn mono_so3_shift(omega: f64) -> Self {
        Self {
            kind: SystemKind::MonoSo3Shift,
            offsets_rad_s: vec![omega],
            couplings_hz: vec![],
        }
    }

    pub fn mono_so3_cartesian(omega: f64) -> Self {
        Self {
            kind: SystemKind::MonoSo3Cartesian,
            offsets_rad_s: vec![omega],
            couplings_hz: vec![],
        }
    }

    pub fn bipartite(omega1: f64, omega2: f64, j_hz: f64) -> Self {
        Self {
            kind: SystemKind::Bipartite,
            offsets_rad_s: vec![omega1, omega2],
            couplings_hz: vec![j_hz],
        }
    }

    pub fn tripartite(offsets: [f64; 3], couplings: [f64; 3]) -> Self {
        Self {
            kind: SystemKind::Tripartite,
            offsets_rad_s: offsets.to_vec(),
            couplings_hz: couplings.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.kind;
        if self.offsets_rad_s.len() != k.n_offsets() {
            return Err(Error::InvalidSystem(format!(
                "{} needs {} offsets, got {}",
                k.name(),
                k.n_offsets(),
                self.offsets_rad_s.len()
            )));
        }
        if self.couplings_hz.len() != k.n_couplings() {
            return Err(Error::InvalidSystem(format!(
                "{} needs {} couplings, got {}",
                k.name(),
                k.n_couplings(),
                self.couplings_hz.len()
            )));
        }
        if self
            .offsets_rad_s
            .iter()
            .chain(&self.couplings_hz)
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidSystem("non-finite offset or coupling".into()));
        }
        Ok(())
    }
}

/// Diagonal of a multi-spin Hamiltonian, possibly gauge shifted.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalEnergies {
    pub h: Vec<f64>,
    pub gauge_shift: f64,
}

/// `h_ii` for the bipartite (4) or tripartite (8) kinds, unshifted.
pub fn diagonal_energies(spec: &SystemSpec) -> Result<DiagonalEnergies> {
    spec.validate()?;
    let o = &spec.offsets_rad_s;
    let j = &spec.couplings_hz;
    let h = match spec.kind {
        SystemKind::Bipartite => {
            let (o1, o2, pj) = (o[0], o[1], PI * j[0]);
            vec![
                0.5 * (pj + o1 + o2),
                0.5 * (-pj + o1 - o2),
                0.5 * (-pj - o1 + o2),
                0.5 * (pj - o1 - o2),
            ]
        }
        SystemKind::Tripartite => {
            let (j12, j13, j23) = (PI * j[0], PI * j[1], PI * j[2]);
            (0..8)
                .map(|s| {
                    // bit set = spin down, spin 1 is the most significant bit
                    let m = |i: usize| if s & (4 >> i) == 0 { 1.0 } else { -1.0 };
                    0.5 * (o[0] * m(0) + o[1] * m(1) + o[2] * m(2))
                        + 0.5 * (j12 * m(0) * m(1) + j13 * m(0) * m(2) + j23 * m(1) * m(2))
                })
                .collect()
        }
        k => {
            return Err(Error::UnsupportedKind {
                solver: "diagonal_energies",
                kind: k.name().into(),
            })
        }
    };
    Ok(DiagonalEnergies {
        h,
        gauge_shift: 0.0,
    })
}

/// Primed bipartite energies `h' = h − πJ/2` and the shift `πJ/2`.
///
/// Propagators of the primed system pick up `e^{−i(πJ/2)t}` when mapped back.
pub fn gauge_shift_bipartite(spec: &SystemSpec) -> Result<(DiagonalEnergies, f64)> {
    if spec.kind != SystemKind::Bipartite {
        return Err(Error::UnsupportedKind {
            solver: "gauge_shift_bipartite",
            kind: spec.kind.name().into(),
        });
    }
    let shift = 0.5 * PI * spec.couplings_hz[0];
    let mut e = diagonal_energies(spec)?;
    for h in &mut e.h {
        *h -= shift;
    }
    e.gauge_shift = shift;
    Ok((e, shift))
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Hamiltonian for a given drive value `β`.
///
/// For [`SystemKind::MonoSo3Cartesian`] this is the real generator `A` of
/// `ġ = A g` rather than a Hermitian matrix; see [`generator_at`].
pub fn hamiltonian_at(spec: &SystemSpec, beta: Complex64) -> DMatrix<Complex64> {
    let bb = beta.conj();
    match spec.kind {
        SystemKind::MonoSu2 => {
            let w = spec.offsets_rad_s[0];
            DMatrix::from_row_slice(2, 2, &[c(w / 2.0), bb, beta, c(-w / 2.0)])
        }
        SystemKind::MonoSo3Shift => {
            let w = spec.offsets_rad_s[0];
            let s = SQRT_2;
            let z = c(0.0);
            DMatrix::from_row_slice(
                3,
                3,
                &[c(-w), beta * s, z, bb * s, z, -beta * s, z, -bb * s, c(w)],
            )
        }
        SystemKind::MonoSo3Cartesian => {
            let w = spec.offsets_rad_s[0];
            let (bx, by) = (beta.re, beta.im);
            let a = [
                0.0,
                -w,
                2.0 * by,
                w,
                0.0,
                -2.0 * bx,
                -2.0 * by,
                2.0 * bx,
                0.0,
            ];
            DMatrix::from_row_slice(3, 3, &a.map(c))
        }
        SystemKind::Bipartite => {
            let h = diagonal_energies(spec).expect("validated spec").h;
            let pj = c(PI * spec.couplings_hz[0]);
            let z = c(0.0);
            #[rustfmt::skip]
            let m = DMatrix::from_row_slice(4, 4, &[
                c(h[0]), bb, bb, z,
                beta, c(h[1]), pj, bb,
                beta, pj, c(h[2]), bb,
                z, beta, beta, c(h[3]),
            ]);
            m
        }
        SystemKind::Tripartite => {
            let h = diagonal_energies(spec).expect("validated spec").h;
            let j = &spec.couplings_hz;
            let (j12, j13, j23) = (c(PI * j[0]), c(PI * j[1]), c(PI * j[2]));
            let z = c(0.0);
            let (b, bb) = (beta, bb);
            #[rustfmt::skip]
            let m = DMatrix::from_row_slice(8, 8, &[
                c(h[0]), bb, bb, z, bb, z, z, z,
                b, c(h[1]), j23, bb, j13, bb, z, z,
                b, j23, c(h[2]), bb, j12, z, bb, z,
                z, b, b, c(h[3]), z, j12, j13, bb,
                b, j13, j12, z, c(h[4]), bb, bb, z,
                z, b, z, j12, b, c(h[5]), j23, bb,
                z, z, b, j13, b, j23, c(h[6]), bb,
                z, z, z, b, z, b, b, c(h[7]),
            ]);
            m
        }
    }
}

/// Generator `X` of `dU/dt = X U`: `−iH`, or `A` itself for the Cartesian kind.
pub fn generator_at(spec: &SystemSpec, beta: Complex64) -> DMatrix<Complex64> {
    let h = hamiltonian_at(spec, beta);
    match spec.kind {
        SystemKind::MonoSo3Cartesian => h,
        _ => h * Complex64::new(0.0, -1.0),
    }
}

/// Hermitian Hamiltonian `H` with `dU/dt = −iH U` for every kind
/// (`H = iA` for the Cartesian kind).
pub fn hermitian_at(spec: &SystemSpec, beta: Complex64) -> DMatrix<Complex64> {
    let h = hamiltonian_at(spec, beta);
    match spec.kind {
        SystemKind::MonoSo3Cartesian => h * Complex64::new(0.0, 1.0),
        _ => h,
    }
}

/// Change of basis from Cartesian components to the shift basis
/// `{L₊, √2 L_z, L₋}`.
pub fn so3_basis() -> Matrix3<Complex64> {
    let s = FRAC_1_SQRT_2;
    Matrix3::new(
        c(s),
        Complex64::new(0.0, s),
        c(0.0),
        c(0.0),
        c(0.0),
        c(1.0),
        c(s),
        Complex64::new(0.0, -s),
        c(0.0),
    )
}

/// `H^{SZ} = U H^C U†`.
pub fn basis_transform_so3(h_cartesian: &Matrix3<Complex64>) -> Matrix3<Complex64> {
    let u = so3_basis();
    u * h_cartesian * u.adjoint()
}

/// Block structure used by the multi-spin path-sums.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionLayout {
    /// Zero-based basis indices of each block, in block order.
    pub blocks: Vec<Vec<usize>>,
    /// Row connector `u = (1, …, 1)`.
    pub u: Vec<f64>,
    /// Mixing matrix between the two middle blocks (tripartite only).
    pub mixing: Option<DMatrix<f64>>,
    pub h_ii: DMatrix<f64>,
    pub h_iii: Option<DMatrix<f64>>,
    /// Energies of the two end vertices.
    pub h_first: f64,
    pub h_last: f64,
    pub gauge_shift: f64,
}

pub fn partition(spec: &SystemSpec) -> Result<PartitionLayout> {
    match spec.kind {
        SystemKind::Bipartite => {
            let (e, shift) = gauge_shift_bipartite(spec)?;
            let pj = PI * spec.couplings_hz[0];
            let h = &e.h;
            Ok(PartitionLayout {
                blocks: vec![vec![0], vec![1, 2], vec![3]],
                u: vec![1.0, 1.0],
                mixing: None,
                h_ii: DMatrix::from_row_slice(2, 2, &[h[1], pj, pj, h[2]]),
                h_iii: None,
                h_first: h[0],
                h_last: h[3],
                gauge_shift: shift,
            })
        }
        SystemKind::Tripartite => {
            let h = diagonal_energies(spec)?.h;
            let j = &spec.couplings_hz;
            let (j12, j13, j23) = (PI * j[0], PI * j[1], PI * j[2]);
            Ok(PartitionLayout {
                blocks: vec![vec![0], vec![1, 2, 4], vec![3, 5, 6], vec![7]],
                u: vec![1.0, 1.0, 1.0],
                mixing: Some(DMatrix::from_row_slice(
                    3,
                    3,
                    &[1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0],
                )),
                h_ii: DMatrix::from_row_slice(
                    3,
                    3,
                    &[h[1], j23, j13, j23, h[2], j12, j13, j12, h[4]],
                ),
                h_iii: Some(DMatrix::from_row_slice(
                    3,
                    3,
                    &[h[3], j12, j13, j12, h[5], j23, j13, j23, h[6]],
                )),
                h_first: h[0],
                h_last: h[7],
                gauge_shift: 0.0,
            })
        }
        k => Err(Error::UnsupportedKind {
            solver: "partition",
            kind: k.name().into(),
        }),
    }
}

impl PartitionLayout {
    /// Full (gauge-shifted, for bipartite) Hamiltonian rebuilt from the blocks.
    pub fn embed(&self, beta: Complex64) -> DMatrix<Complex64> {
        let dim: usize = self.blocks.iter().map(|b| b.len()).sum();
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        let nb = self.blocks.len();
        let (first, last) = (self.blocks[0][0], self.blocks[nb - 1][0]);
        m[(first, first)] = c(self.h_first);
        m[(last, last)] = c(self.h_last);
        let mids: Vec<(&Vec<usize>, &DMatrix<f64>)> = match &self.h_iii {
            Some(h3) => vec![(&self.blocks[1], &self.h_ii), (&self.blocks[2], h3)],
            None => vec![(&self.blocks[1], &self.h_ii)],
        };
        for (idx, h) in &mids {
            for (a, &r) in idx.iter().enumerate() {
                for (b, &s) in idx.iter().enumerate() {
                    m[(r, s)] = c(h[(a, b)]);
                }
            }
        }
        let bb = beta.conj();
        let first_mid = &self.blocks[1];
        let last_mid = &self.blocks[nb - 2];
        for (k, &r) in first_mid.iter().enumerate() {
            m[(first, r)] = bb * self.u[k];
            m[(r, first)] = beta * self.u[k];
        }
        for (k, &r) in last_mid.iter().enumerate() {
            m[(r, last)] = bb * self.u[k];
            m[(last, r)] = beta * self.u[k];
        }
        if let Some(mx) = &self.mixing {
            for (a, &r) in self.blocks[1].iter().enumerate() {
                for (b, &s) in self.blocks[2].iter().enumerate() {
                    m[(r, s)] = bb * mx[(a, b)];
                    m[(s, r)] = beta * mx[(b, a)];
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_su2_is_diagonal() {
        let h = hamiltonian_at(&SystemSpec::mono_su2(2.0 * PI), c(0.0));
        assert_eq!(
            h,
            DMatrix::from_row_slice(2, 2, &[c(PI), c(0.0), c(0.0), c(-PI)])
        );
    }

    #[test]
    fn bipartite_zero_pulse() {
        let h = hamiltonian_at(&SystemSpec::bipartite(0.0, 0.0, 1.0), c(0.0));
        let d = [PI / 2.0, -PI / 2.0, -PI / 2.0, PI / 2.0];
        for r in 0..4 {
            for s in 0..4 {
                let expect = if r == s {
                    d[r]
                } else if (r, s) == (1, 2) || (r, s) == (2, 1) {
                    PI
                } else {
                    0.0
                };
                assert!((h[(r, s)] - c(expect)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn gauge_shift_values() {
        let spec = SystemSpec::bipartite(2.0 * PI * 700.0, 2.0 * PI * 600.0, 150.0);
        let (e, shift) = gauge_shift_bipartite(&spec).unwrap();
        assert_eq!(shift, PI * 75.0);
        assert!((e.h[0] - PI * 1300.0).abs() < 1e-9);
        assert!((e.h[1] - (PI * 100.0 - PI * 150.0)).abs() < 1e-9);
        assert!(
            (e.h[0] + e.h[3]).abs() < 1e-9 && (e.h[1] - e.h[2] - 2.0 * PI * 100.0).abs() < 1e-9
        );
        assert!((e.h.iter().sum::<f64>() + 2.0 * PI * 150.0).abs() < 1e-9);
        let (e0, s0) = gauge_shift_bipartite(&SystemSpec::bipartite(1.0, 2.0, 0.0)).unwrap();
        assert_eq!(s0, 0.0);
        assert_eq!(
            e0.h,
            diagonal_energies(&SystemSpec::bipartite(1.0, 2.0, 0.0))
                .unwrap()
                .h
        );
        assert!(gauge_shift_bipartite(&SystemSpec::mono_su2(1.0)).is_err());
    }

    #[test]
    fn tripartite_energies_match_closed_forms() {
        let (o1, o2, o3) = (1.1, -0.7, 0.4);
        let (a, b, cc) = (3.0, 5.0, 7.0);
        let spec = SystemSpec::tripartite([o1, o2, o3], [a, b, cc]);
        let h = diagonal_energies(&spec).unwrap().h;
        let p = PI;
        let expect = [
            0.5 * (p * (a + b + cc) + o1 + o2 + o3),
            0.5 * (p * a - p * (b + cc) + o1 + o2 - o3),
            0.5 * (-p * (a - b + cc) + o1 - o2 + o3),
            0.5 * (-p * (a + b - cc) + o1 - o2 - o3),
            0.5 * (-p * (a + b - cc) - o1 + o2 + o3),
            0.5 * (-p * (a - b + cc) - o1 + o2 - o3),
            0.5 * (p * a - p * (b + cc) - o1 - o2 + o3),
            0.5 * (p * (a + b + cc) - o1 - o2 - o3),
        ];
        for (x, y) in h.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn cartesian_generator_maps_to_shift_basis() {
        let spec_c = SystemSpec::mono_so3_cartesian(1.3);
        let spec_s = SystemSpec::mono_so3_shift(1.3);
        for beta in [c(0.7), Complex64::new(0.7, -0.4)] {
            let a = hamiltonian_at(&spec_c, beta);
            let hc = Matrix3::from_fn(|r, s| a[(r, s)] * Complex64::new(0.0, 1.0));
            let hs = basis_transform_so3(&hc);
            let want = hamiltonian_at(&spec_s, beta);
            for r in 0..3 {
                for s in 0..3 {
                    assert!((hs[(r, s)] - want[(r, s)]).norm() < 1e-14);
                }
            }
            assert!(a.iter().all(|z| z.im == 0.0));
            assert_eq!(a.transpose(), -a.clone());
        }
        assert_eq!(basis_transform_so3(&Matrix3::zeros()), Matrix3::zeros());
        let u = so3_basis();
        assert!((u * u.adjoint() - Matrix3::identity()).norm() < 1e-15);
    }

    #[test]
    fn partitions_reassemble() {
        let beta = Complex64::new(0.3, -1.2);
        let spec = SystemSpec::bipartite(2.0, -1.0, 0.8);
        let lay = partition(&spec).unwrap();
        let shifted = hamiltonian_at(&spec, beta) - DMatrix::identity(4, 4) * c(lay.gauge_shift);
        assert!((lay.embed(beta) - shifted).norm() < 1e-14);
        assert_eq!(lay.h_ii[(0, 1)], PI * 0.8);

        let spec = SystemSpec::tripartite([2.0, -1.0, 0.5], [0.8, 1.7, -0.3]);
        let lay = partition(&spec).unwrap();
        assert_eq!(
            lay.mixing.as_ref().unwrap(),
            &DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0])
        );
        assert!((lay.embed(beta) - hamiltonian_at(&spec, beta)).norm() < 1e-14);
        assert!(partition(&SystemSpec::mono_su2(1.0)).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(SystemSpec {
            kind: SystemKind::Bipartite,
            offsets_rad_s: vec![1.0],
            couplings_hz: vec![1.0]
        }
        .validate()
        .is_err());
        assert!(SystemSpec::tripartite([1.0, f64::NAN, 0.0], [0.0; 3])
            .validate()
            .is_err());
        let js = r#"{"kind":"bipartite","offsets_rad_s":[4398.2,3769.9],"couplings_hz":[150]}"#;
        let s: SystemSpec = serde_json::from_str(js).unwrap();
        assert_eq!(s.kind, SystemKind::Bipartite);
    }
}
