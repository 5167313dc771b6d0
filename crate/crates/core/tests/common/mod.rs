#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use pathsum::spin::SystemSpec;
use pathsum::waveforms::{ChirpSpec, CompiledWaveform, WaveformSpec};
use pathsum::C64;

pub fn chirp(
    omega1: f64,
    delta_big_f_hz: f64,
    tau_p_s: f64,
    delta_t_s: f64,
    n: u32,
) -> WaveformSpec {
    WaveformSpec::Chirp(ChirpSpec {
        omega1_max: Some(omega1),
        q0: None,
        alpha: None,
        delta_big_f_hz,
        tau_p_s,
        phi0_rad: 0.0,
        delta_t_s,
        delta_f_hz: 0.0,
        n,
    })
}

/// Single spin, 1 ms chirp swept over 100 kHz.
pub fn table1_waveform() -> WaveformSpec {
    chirp(2.0 * PI * 8920.0, 1e5, 1e-3, 0.5e-3, 30)
}

pub fn table1_pulse() -> CompiledWaveform {
    table1_waveform().compile().unwrap()
}

pub const TABLE1_OMEGA: f64 = 2.0 * PI * 1000.0;
pub const TABLE1_T: f64 = 1e-3;

/// 10 ms chirp over 30 kHz used for the SO(3) overlap and Neumann runs.
pub fn fig1_pulse() -> CompiledWaveform {
    chirp(2.0 * PI * 1545.0, 3e4, 1e-2, 5e-3, 30)
        .compile()
        .unwrap()
}

pub const FIG1_OMEGA: f64 = 2.0 * PI * 7000.0;
pub const FIG1_T: f64 = 1e-2;

pub fn fig5_waveform() -> WaveformSpec {
    chirp(2.0 * PI * 6310.0, 5e4, 1e-3, 0.5e-3, 20)
}

pub fn fig5_pulse() -> CompiledWaveform {
    fig5_waveform().compile().unwrap()
}

pub fn fig5_system() -> SystemSpec {
    SystemSpec::bipartite(2.0 * PI * 700.0, 2.0 * PI * 600.0, 150.0)
}

pub fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spin operators `S_x, S_y, S_z` of spin `i` among `n` spins-½ (spin 0 most
/// significant, spin up first).
pub fn spin_ops(n: usize, i: usize) -> [DMatrix<C64>; 3] {
    let sx = DMatrix::from_row_slice(2, 2, &[c(0.0), c(0.5), c(0.5), c(0.0)]);
    let sy = DMatrix::from_row_slice(
        2,
        2,
        &[c(0.0), C64::new(0.0, -0.5), C64::new(0.0, 0.5), c(0.0)],
    );
    let sz = DMatrix::from_row_slice(2, 2, &[c(0.5), c(0.0), c(0.0), c(-0.5)]);
    [sx, sy, sz].map(|s| {
        (0..n).fold(DMatrix::identity(1, 1), |acc, k| {
            kron(
                &acc,
                &if k == i {
                    s.clone()
                } else {
                    DMatrix::identity(2, 2)
                },
            )
        })
    })
}

/// `Σ Ω_i S_z^i + Σ (β̄ S₊^i + β S₋^i) + Σ_{i<j} 2πJ_ij S^i·S^j` built from Kronecker products.
pub fn kronecker_hamiltonian(offsets: &[f64], couplings_hz: &[f64], beta: C64) -> DMatrix<C64> {
    let n = offsets.len();
    let d = 1 << n;
    let ops: Vec<[DMatrix<C64>; 3]> = (0..n).map(|i| spin_ops(n, i)).collect();
    let mut h = DMatrix::<C64>::zeros(d, d);
    let i = C64::new(0.0, 1.0);
    for (k, s) in ops.iter().enumerate() {
        let plus = &s[0] + &s[1] * i;
        let minus = &s[0] - &s[1] * i;
        h += &s[2] * c(offsets[k]) + plus * beta.conj() + minus * beta;
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect();
    for (p, &(a, b)) in pairs.iter().enumerate() {
        let dot = &ops[a][0] * &ops[b][0] + &ops[a][1] * &ops[b][1] + &ops[a][2] * &ops[b][2];
        h += dot * c(2.0 * PI * couplings_hz[p]);
    }
    h
}
