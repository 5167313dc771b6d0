//! Pulse envelopes `β(t) = ½ ω₁(t) e^{iφ(t)}`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Anything that yields a complex drive envelope in rad/s.
pub trait Pulse: Sync {
    fn beta(&self, t: f64) -> Complex64;

    fn sample(&self, grid: &TimeGrid) -> Vec<Complex64> {
        (0..grid.len()).map(|k| self.beta(grid.time(k))).collect()
    }
}

/// Wraps a closure as a [`Pulse`].
pub struct FnPulse<F>(pub F);

impl<F: Fn(f64) -> Complex64 + Sync> Pulse for FnPulse<F> {
    fn beta(&self, t: f64) -> Complex64 {
        (self.0)(t)
    }
}

/// Chirped super-Gaussian pulse.
///
/// The peak amplitude comes from the first of `omega1_max`, `q0`, `alpha`
/// that is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChirpSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega1_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(rename = "delta_F_hz")]
    pub delta_big_f_hz: f64,
    pub tau_p_s: f64,
    #[serde(default)]
    pub phi0_rad: f64,
    pub delta_t_s: f64,
    #[serde(default)]
    pub delta_f_hz: f64,
    pub n: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeMode {
    Explicit(f64),
    FromQ(f64),
    FromFlipAngle(f64),
}

impl ChirpSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidWaveform(m));
        if !(self.tau_p_s > 0.0 && self.tau_p_s.is_finite()) {
            return bad(format!("tau_p_s must be positive, got {}", self.tau_p_s));
        }
        if !(self.delta_big_f_hz > 0.0 && self.delta_big_f_hz.is_finite()) {
            return bad(format!(
                "delta_F_hz must be positive, got {}",
                self.delta_big_f_hz
            ));
        }
        if self.n < 2 || !self.n.is_multiple_of(2) {
            return bad(format!("n must be an even integer >= 2, got {}", self.n));
        }
        if ![self.phi0_rad, self.delta_t_s, self.delta_f_hz]
            .iter()
            .all(|v| v.is_finite())
        {
            return bad("non-finite phase or offset parameter".into());
        }
        match self.amplitude_mode()? {
            AmplitudeMode::Explicit(w) | AmplitudeMode::FromQ(w)
                if !(w >= 0.0 && w.is_finite()) =>
            {
                bad(format!(
                    "amplitude parameter must be finite and non-negative, got {w}"
                ))
            }
            AmplitudeMode::FromFlipAngle(a) => q_from_flip_angle(a).map(|_| ()),
            _ => Ok(()),
        }
    }

    pub fn amplitude_mode(&self) -> Result<AmplitudeMode> {
        match (self.omega1_max, self.q0, self.alpha) {
            (Some(w), _, _) => Ok(AmplitudeMode::Explicit(w)),
            (None, Some(q), _) => Ok(AmplitudeMode::FromQ(q)),
            (None, None, Some(a)) => Ok(AmplitudeMode::FromFlipAngle(a)),
            _ => Err(Error::InvalidWaveform(
                "one of omega1_max, q0, alpha is required".into(),
            )),
        }
    }

    /// Peak amplitude ω₁,max in rad/s.
    pub fn peak_amplitude(&self) -> Result<f64> {
        Ok(match self.amplitude_mode()? {
            AmplitudeMode::Explicit(w) => w,
            AmplitudeMode::FromQ(q) => omega1_max_from_q(self.delta_big_f_hz, self.tau_p_s, q),
            AmplitudeMode::FromFlipAngle(a) => {
                omega1_max_from_q(self.delta_big_f_hz, self.tau_p_s, q_from_flip_angle(a)?)
            }
        })
    }
}

/// Super-Gaussian profile `ω₁(t)`; `omega1_max` is the resolved peak.
pub fn chirp_amplitude(spec: &ChirpSpec, omega1_max: f64, t: f64) -> f64 {
    let x = (t - spec.delta_t_s) / spec.tau_p_s;
    let n = spec.n as i32;
    omega1_max * (-(2f64.powi(n + 2)) * x.powi(n)).exp()
}

pub fn chirp_phase(spec: &ChirpSpec, t: f64) -> f64 {
    let dt = t - spec.delta_t_s;
    spec.phi0_rad
        + PI * spec.delta_big_f_hz * dt * dt / spec.tau_p_s
        + 2.0 * PI * spec.delta_f_hz * dt
}

/// Instantaneous frequency `dφ/dt` in rad/s.
pub fn chirp_frequency(spec: &ChirpSpec, t: f64) -> f64 {
    2.0 * PI * (spec.delta_big_f_hz * (t - spec.delta_t_s) / spec.tau_p_s + spec.delta_f_hz)
}

pub fn omega1_max_from_q(delta_big_f_hz: f64, tau_p_s: f64, q0: f64) -> f64 {
    (2.0 * PI * delta_big_f_hz * q0 / tau_p_s).sqrt()
}

/// Adiabaticity factor for an effective flip angle `alpha` in `[0, π)`.
pub fn q_from_flip_angle(alpha: f64) -> Result<f64> {
    if !(0.0..PI).contains(&alpha) {
        return Err(Error::FlipAngleDomain(alpha));
    }
    Ok(2.0 / PI * (2.0 / (alpha.cos() + 1.0)).ln())
}

/// Sampled envelope with linear interpolation, zero outside the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tabulated {
    pub t_s: Vec<f64>,
    pub re_rad_s: Vec<f64>,
    pub im_rad_s: Vec<f64>,
}

impl Tabulated {
    pub fn validate(&self) -> Result<()> {
        let n = self.t_s.len();
        if n < 2 || self.re_rad_s.len() != n || self.im_rad_s.len() != n {
            return Err(Error::InvalidWaveform(
                "table needs >= 2 rows and equal column lengths".into(),
            ));
        }
        if self.t_s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidWaveform(
                "table times must be strictly increasing".into(),
            ));
        }
        if self
            .t_s
            .iter()
            .chain(&self.re_rad_s)
            .chain(&self.im_rad_s)
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidWaveform("non-finite table entry".into()));
        }
        Ok(())
    }

    /// Read a CSV with columns `t_s, re_rad_s, im_rad_s`.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            t_s: f64,
            re_rad_s: f64,
            im_rad_s: f64,
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut tab = Tabulated {
            t_s: Vec::new(),
            re_rad_s: Vec::new(),
            im_rad_s: Vec::new(),
        };
        for row in rdr.deserialize() {
            let r: Row = row?;
            tab.t_s.push(r.t_s);
            tab.re_rad_s.push(r.re_rad_s);
            tab.im_rad_s.push(r.im_rad_s);
        }
        tab.validate()?;
        Ok(tab)
    }

    fn eval(&self, t: f64) -> Complex64 {
        let ts = &self.t_s;
        if ts.is_empty() || t < ts[0] || t > ts[ts.len() - 1] {
            return Complex64::new(0.0, 0.0);
        }
        let k = ts.partition_point(|&x| x <= t).clamp(1, ts.len() - 1);
        let (t0, t1) = (ts[k - 1], ts[k]);
        let s = (t - t0) / (t1 - t0);
        let lerp = |v: &[f64]| v[k - 1] + s * (v[k] - v[k - 1]);
        Complex64::new(lerp(&self.re_rad_s), lerp(&self.im_rad_s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WaveformSpec {
    Chirp(ChirpSpec),
    Tabulated(Tabulated),
    Composite { parts: Vec<WaveformSpec> },
}

impl WaveformSpec {
    /// A pulse that is identically zero.
    pub fn zero() -> Self {
        WaveformSpec::Composite { parts: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WaveformSpec::Chirp(c) => c.validate(),
            WaveformSpec::Tabulated(t) => t.validate(),
            WaveformSpec::Composite { parts } => parts.iter().try_for_each(|p| p.validate()),
        }
    }

    /// Validate and cache the resolved peak amplitudes for fast evaluation.
    pub fn compile(&self) -> Result<CompiledWaveform> {
        self.validate()?;
        Ok(match self {
            WaveformSpec::Chirp(c) => CompiledWaveform::Chirp {
                spec: c.clone(),
                omega1_max: c.peak_amplitude()?,
            },
            WaveformSpec::Tabulated(t) => CompiledWaveform::Tabulated(t.clone()),
            WaveformSpec::Composite { parts } => CompiledWaveform::Composite(
                parts.iter().map(|p| p.compile()).collect::<Result<_>>()?,
            ),
        })
    }
}

/// A validated [`WaveformSpec`] with amplitudes resolved.
#[derive(Debug, Clone)]
pub enum CompiledWaveform {
    Chirp { spec: ChirpSpec, omega1_max: f64 },
    Tabulated(Tabulated),
    Composite(Vec<CompiledWaveform>),
}

impl Pulse for CompiledWaveform {
    fn beta(&self, t: f64) -> Complex64 {
        match self {
            CompiledWaveform::Chirp { spec, omega1_max } => Complex64::from_polar(
                0.5 * chirp_amplitude(spec, *omega1_max, t),
                chirp_phase(spec, t),
            ),
            CompiledWaveform::Tabulated(tab) => tab.eval(t),
            CompiledWaveform::Composite(parts) => parts.iter().map(|p| p.beta(t)).sum(),
        }
    }
}

/// `β(t)` for a spec; compiles on every call, so prefer [`WaveformSpec::compile`] in loops.
pub fn beta(spec: &WaveformSpec, t: f64) -> Result<Complex64> {
    Ok(spec.compile()?.beta(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> ChirpSpec {
        ChirpSpec {
            omega1_max: Some(2.0 * PI * 1545.0),
            q0: None,
            alpha: None,
            delta_big_f_hz: 30e3,
            tau_p_s: 10e-3,
            phi0_rad: 0.0,
            delta_t_s: 5e-3,
            delta_f_hz: 0.0,
            n: 30,
        }
    }

    #[test]
    fn amplitude_edges_drop_by_e4() {
        for n in [2, 20, 30] {
            let s = ChirpSpec { n, ..fig1() };
            let w = s.peak_amplitude().unwrap();
            assert_eq!(chirp_amplitude(&s, w, s.delta_t_s), w);
            for sign in [-1.0, 1.0] {
                let v = chirp_amplitude(&s, w, s.delta_t_s + sign * s.tau_p_s / 2.0);
                assert!((v / w - (-4f64).exp()).abs() < 1e-14);
            }
        }
        let s = fig1();
        let w = s.peak_amplitude().unwrap();
        // flat top inside |t − δ_t| < 0.4 τ_p, sharp fall beyond the ±τ_p/2 edges
        assert!(chirp_amplitude(&s, w, 0.001) / w > 0.99);
        assert!(chirp_amplitude(&s, w, 5e-3 + 0.6e-2) / w < 1e-3);
    }

    #[test]
    fn phase_and_frequency() {
        let s = ChirpSpec {
            delta_f_hz: 250.0,
            phi0_rad: 0.3,
            ..fig1()
        };
        assert_eq!(chirp_phase(&s, s.delta_t_s), 0.3);
        let h = 1e-7;
        let fd = (chirp_phase(&s, s.delta_t_s + h) - chirp_phase(&s, s.delta_t_s - h)) / (2.0 * h);
        assert!((fd - 2.0 * PI * 250.0).abs() < 1e-5);
        let fd = (chirp_phase(&s, 2e-3 + h) - chirp_phase(&s, 2e-3 - h)) / (2.0 * h);
        assert!((fd - chirp_frequency(&s, 2e-3)).abs() < 1e-4);
        // φ(10 ms) − φ₀ = π ΔF (5 ms)² / τ_p
        let f = fig1();
        let expect = PI * 3e4 * 25e-6 / 1e-2;
        assert!((chirp_phase(&f, 10e-3) - expect).abs() < 1e-12);
    }

    #[test]
    fn adiabaticity_relations() {
        let w = omega1_max_from_q(100e3, 1e-3, 5.0);
        assert!(
            (w / (2.0 * PI) - 8920.0).abs() / 8920.0 < 1e-3,
            "{}",
            w / (2.0 * PI)
        );
        let w = omega1_max_from_q(50e3, 1e-3, 5.0);
        assert!((w / (2.0 * PI) - 6310.0).abs() / 6310.0 < 1e-3);
        assert_eq!(omega1_max_from_q(50e3, 1e-3, 0.0), 0.0);
        assert_eq!(q_from_flip_angle(0.0).unwrap(), 0.0);
        assert!((q_from_flip_angle(PI / 2.0).unwrap() - 2.0 / PI * 2f64.ln()).abs() < 1e-15);
        assert!(q_from_flip_angle(PI - 1e-3).unwrap() > 5.0);
        assert!(matches!(
            q_from_flip_angle(PI),
            Err(Error::FlipAngleDomain(_))
        ));
    }

    #[test]
    fn amplitude_precedence() {
        let s = ChirpSpec {
            q0: Some(5.0),
            alpha: Some(1.0),
            ..fig1()
        };
        assert_eq!(
            s.amplitude_mode().unwrap(),
            AmplitudeMode::Explicit(2.0 * PI * 1545.0)
        );
        let s = ChirpSpec {
            omega1_max: None,
            ..s
        };
        assert_eq!(s.amplitude_mode().unwrap(), AmplitudeMode::FromQ(5.0));
        let s = ChirpSpec { q0: None, ..s };
        assert_eq!(
            s.amplitude_mode().unwrap(),
            AmplitudeMode::FromFlipAngle(1.0)
        );
        let s = ChirpSpec { alpha: None, ..s };
        assert!(s.validate().is_err());
    }

    #[test]
    fn odd_or_small_n_rejected() {
        assert!(ChirpSpec { n: 3, ..fig1() }.validate().is_err());
        assert!(ChirpSpec { n: 0, ..fig1() }.validate().is_err());
        assert!(ChirpSpec {
            tau_p_s: 0.0,
            ..fig1()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn beta_envelope_bound_and_center() {
        let spec = WaveformSpec::Chirp(fig1());
        let w = fig1().peak_amplitude().unwrap();
        let c = spec.compile().unwrap();
        let b0 = c.beta(5e-3);
        assert!((b0 - Complex64::new(w / 2.0, 0.0)).norm() < 1e-12);
        for k in 0..10_000 {
            let t = 10e-3 * k as f64 / 9999.0;
            assert!(2.0 * c.beta(t).norm() / w <= 1.0 + 1e-15);
        }
        assert_eq!(
            beta(&WaveformSpec::zero(), 1e-3).unwrap(),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn composite_is_linear() {
        let a = WaveformSpec::Chirp(fig1());
        let b = WaveformSpec::Chirp(ChirpSpec {
            delta_f_hz: 300.0,
            phi0_rad: 1.0,
            ..fig1()
        });
        let ab = WaveformSpec::Composite {
            parts: vec![a.clone(), b.clone()],
        };
        for t in [0.0, 2.5e-3, 5e-3, 7.1e-3] {
            let lhs = beta(&ab, t).unwrap();
            let rhs = beta(&a, t).unwrap() + beta(&b, t).unwrap();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn tabulated_interpolates_and_vanishes_outside() {
        let tab = Tabulated {
            t_s: vec![0.0, 1.0, 3.0],
            re_rad_s: vec![0.0, 2.0, 2.0],
            im_rad_s: vec![1.0, 1.0, -1.0],
        };
        let w = WaveformSpec::Tabulated(tab.clone()).compile().unwrap();
        assert_eq!(w.beta(0.5), Complex64::new(1.0, 1.0));
        assert_eq!(w.beta(2.0), Complex64::new(2.0, 0.0));
        assert_eq!(w.beta(3.0), Complex64::new(2.0, -1.0));
        assert_eq!(w.beta(-0.1), Complex64::new(0.0, 0.0));
        assert_eq!(w.beta(3.1), Complex64::new(0.0, 0.0));
        let bad = Tabulated {
            t_s: vec![0.0, 0.0],
            ..tab.clone()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn json_field_names() {
        let js = r#"{"type":"chirp","omega1_max":9704.6,"delta_F_hz":30000,"tau_p_s":0.01,
            "phi0_rad":0,"delta_t_s":0.005,"delta_f_hz":0,"n":30}"#;
        let w: WaveformSpec = serde_json::from_str(js).unwrap();
        assert!(matches!(w, WaveformSpec::Chirp(ChirpSpec { n: 30, .. })));
        let back = serde_json::to_string(&w).unwrap();
        assert!(back.contains("\"delta_F_hz\""));
    }
}
