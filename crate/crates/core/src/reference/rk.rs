//! Dormand–Prince 5(4) with error-per-step control and 4th-order dense output.
//!
//! Butcher tableau and dense-output coefficients after Dormand & Prince
//! (1980) and Hairer, Nørsett & Wanner, *Solving ODEs I*, §II.5–6.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::spin::{generator_at, SystemSpec};
use crate::trajectory::PropagatorTrajectory;
use crate::waveforms::Pulse;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th minus 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RkConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the step; defaults to the whole interval.
    #[serde(default)]
    pub max_step: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_max_steps() -> usize {
    50_000_000
}

impl Default for RkConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-13,
            abs_tol: 1e-13,
            max_step: None,
            max_steps: default_max_steps(),
        }
    }
}

impl RkConfig {
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            rel_tol: tol,
            abs_tol: tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.rel_tol, self.abs_tol] {
            if !(v > 0.0 && v <= 1e-2) {
                return Err(Error::InvalidConfig(format!(
                    "RK tolerance {v} outside (0, 1e-2]"
                )));
            }
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "max_step must be positive, got {h}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RkStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

type M = DMatrix<Complex64>;

fn error_norm(err: &M, y0: &M, y1: &M, cfg: &RkConfig) -> f64 {
    let n = err.len() as f64;
    let s: f64 = err
        .iter()
        .zip(y0.iter().zip(y1.iter()))
        .map(|(e, (a, b))| {
            let sc = cfg.abs_tol + cfg.rel_tol * a.norm().max(b.norm());
            (e.norm() / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

fn axpy(y: &M, h: f64, terms: &[(f64, &M)]) -> M {
    let mut out = y.clone();
    for (c, k) in terms {
        if *c != 0.0 {
            out += *k * Complex64::new(h * c, 0.0);
        }
    }
    out
}

/// Integrate `y' = f(t, y)` from `times[0]` to the last entry of `times`,
/// returning the dense-output solution at every requested time.
pub fn dopri5(
    mut f: impl FnMut(f64, &M) -> M,
    y0: M,
    times: &[f64],
    cfg: &RkConfig,
) -> Result<(Vec<M>, RkStats)> {
    cfg.validate()?;
    let t0 = times[0];
    let t_end = *times.last().expect("at least one output time");
    let span = t_end - t0;
    let mut out = Vec::with_capacity(times.len());
    out.push(y0.clone());
    let mut stats = RkStats::default();
    if times.len() == 1 || span <= 0.0 {
        return Ok((out, stats));
    }
    let max_step = cfg.max_step.unwrap_or(span).min(span);
    let h_min = 1e-15 * span;

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    stats.evaluations += 1;
    let mut h = initial_step(&mut f, t, &y, &k1, cfg, max_step, &mut stats);
    let mut next_out = 1;
    let mut fac_max = 10.0;

    while next_out < times.len() {
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return Err(Error::InvalidConfig(format!(
                "RK step budget {} exhausted at t = {t:e}",
                cfg.max_steps
            )));
        }
        let last_step = t + h >= t_end;
        if last_step {
            h = t_end - t;
        }
        if h < h_min && !last_step {
            return Err(Error::StepUnderflow { t, h });
        }
        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y1 = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = f(t + h, &y1);
        stats.evaluations += 6;
        let err = axpy(
            &M::zeros(y.nrows(), y.ncols()),
            h,
            &[
                (E1, &k1),
                (E3, &k3),
                (E4, &k4),
                (E5, &k5),
                (E6, &k6),
                (E7, &k7),
            ],
        );
        let e = error_norm(&err, &y, &y1, cfg);
        if !e.is_finite() {
            return Err(Error::StepUnderflow { t, h });
        }

        if e <= 1.0 {
            stats.accepted += 1;
            let t1 = if last_step { t_end } else { t + h };
            // dense output on [t, t1]
            let ydiff = &y1 - &y;
            let bspl = &k1 * Complex64::new(h, 0.0) - &ydiff;
            let r4 = &ydiff - &k7 * Complex64::new(h, 0.0) - &bspl;
            let r5 = axpy(
                &M::zeros(y.nrows(), y.ncols()),
                h,
                &[
                    (D1, &k1),
                    (D3, &k3),
                    (D4, &k4),
                    (D5, &k5),
                    (D6, &k6),
                    (D7, &k7),
                ],
            );
            while next_out < times.len() && (times[next_out] <= t1 || last_step) {
                let s = ((times[next_out] - t) / h).clamp(0.0, 1.0);
                let s1 = 1.0 - s;
                let v = &y
                    + (&ydiff
                        + (&bspl + (&r4 + &r5 * Complex64::new(s1, 0.0)) * Complex64::new(s, 0.0))
                            * Complex64::new(s1, 0.0))
                        * Complex64::new(s, 0.0);
                out.push(if s == 1.0 { y1.clone() } else { v });
                next_out += 1;
            }
            t = t1;
            y = y1;
            k1 = k7;
            let fac = (0.9 * e.max(1e-10).powf(-0.2)).clamp(0.2, fac_max);
            h = (h * fac).min(max_step);
            fac_max = 10.0;
        } else {
            stats.rejected += 1;
            let fac = (0.9 * e.powf(-0.2)).clamp(0.2, 1.0);
            h *= fac;
            fac_max = 1.0;
            if h < h_min {
                return Err(Error::StepUnderflow { t, h });
            }
        }
    }
    Ok((out, stats))
}

fn initial_step(
    f: &mut impl FnMut(f64, &M) -> M,
    t: f64,
    y: &M,
    f0: &M,
    cfg: &RkConfig,
    max_step: f64,
    stats: &mut RkStats,
) -> f64 {
    let scale = |v: &M, y: &M| {
        let n = v.len() as f64;
        (v.iter()
            .zip(y.iter())
            .map(|(a, b)| (a.norm() / (cfg.abs_tol + cfg.rel_tol * b.norm())).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
    };
    let d0 = scale(y, y);
    let d1 = scale(f0, y);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(max_step);
    let y1 = y + f0 * Complex64::new(h0, 0.0);
    let f1 = f(t + h0, &y1);
    stats.evaluations += 1;
    let d2 = scale(&(&f1 - f0), y) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(max_step)
}

/// Solve `dY/dt = X(t) Y` from `initial` (a `d × d` propagator seed or a
/// `d × 1` state) and report `Y` on every grid node.
pub fn rk_solve(
    spec: &SystemSpec,
    pulse: &dyn Pulse,
    grid: &TimeGrid,
    cfg: &RkConfig,
    initial: &M,
) -> Result<Vec<M>> {
    spec.validate()?;
    if initial.nrows() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: initial.nrows(),
        });
    }
    let times: Vec<f64> = (0..grid.len()).map(|k| grid.time(k)).collect();
    let rhs = |t: f64, y: &M| generator_at(spec, pulse.beta(t)) * y;
    dopri5(rhs, initial.clone(), &times, cfg).map(|(v, _)| v)
}

/// Propagator-mode reference solution seeded with the identity.
pub fn rk_propagator(
    spec: &SystemSpec,
    pulse: &dyn Pulse,
    grid: &TimeGrid,
    cfg: &RkConfig,
) -> Result<PropagatorTrajectory> {
    let d = spec.dim();
    let mats = rk_solve(spec, pulse, grid, cfg, &M::identity(d, d))?;
    Ok(PropagatorTrajectory::new(*grid, mats, "rk45"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveforms::FnPulse;

    #[test]
    fn scalar_exponential_and_dense_output() {
        let lam = Complex64::new(-0.5, 3.0);
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.05).collect();
        let (ys, stats) = dopri5(
            |_, y| y * lam,
            M::identity(1, 1),
            &times,
            &RkConfig::with_tolerance(1e-12),
        )
        .unwrap();
        for (t, y) in times.iter().zip(&ys) {
            assert!((y[(0, 0)] - (lam * *t).exp()).norm() < 1e-10, "t={t}");
        }
        assert!(stats.accepted > 0);
    }

    #[test]
    fn time_dependent_scalar() {
        // y' = i cos(t) y  ⇒  y = exp(i sin t)
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let (ys, _) = dopri5(
            |t, y| y * Complex64::new(0.0, t.cos()),
            M::identity(1, 1),
            &times,
            &RkConfig::default(),
        )
        .unwrap();
        for (t, y) in times.iter().zip(&ys) {
            assert!((y[(0, 0)] - Complex64::new(0.0, t.sin()).exp()).norm() < 1e-11);
        }
    }

    #[test]
    fn diagonal_phases() {
        let spec = SystemSpec::mono_su2(2.0);
        let grid = TimeGrid::new(0.0, 3.0, 31).unwrap();
        let u = rk_propagator(
            &spec,
            &FnPulse(|_| Complex64::new(0.0, 0.0)),
            &grid,
            &RkConfig::default(),
        )
        .unwrap();
        for (k, m) in u.matrices.iter().enumerate() {
            let t = grid.time(k);
            assert!((m[(0, 0)] - Complex64::new(0.0, -t).exp()).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(RkConfig::with_tolerance(0.5).validate().is_err());
        assert!(RkConfig::with_tolerance(0.0).validate().is_err());
    }

    #[test]
    fn step_underflow_is_reported() {
        // finite-time blow-up y' = y² at t = 1
        let times = [0.0, 2.0];
        let r = dopri5(
            |_, y| y * y,
            M::identity(1, 1),
            &times,
            &RkConfig::with_tolerance(1e-10),
        );
        assert!(matches!(r, Err(Error::StepUnderflow { .. })), "{r:?}");
    }
}
