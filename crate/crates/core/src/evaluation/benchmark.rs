use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    default_psi0, default_rho0, propagate_density, propagate_state, relative_error,
    DensityTrajectory,
};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::pathsum::{solve_on_grid, SolveOptions};
use crate::quadrature::QuadratureRule;
use crate::reference::{pcpa, pcpa_state, rk_propagator, rk_solve, RkConfig, Sampling};
use crate::spin::SystemSpec;
use crate::trajectory::PropagatorTrajectory;
use crate::waveforms::{CompiledWaveform, WaveformSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PsRectangular,
    PsTrapezoidal,
    PsSimpson,
    /// Left-endpoint sampling.
    Pcpa,
    PcpaMidpoint,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::PsRectangular => "PS Rectangular",
            Method::PsTrapezoidal => "PS Trapezoidal",
            Method::PsSimpson => "PS Simpson",
            Method::Pcpa => "PCPA",
            Method::PcpaMidpoint => "PCPA (midpoint)",
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Method::PsRectangular => "ps_rectangular",
            Method::PsTrapezoidal => "ps_trapezoidal",
            Method::PsSimpson => "ps_simpson",
            Method::Pcpa => "pcpa",
            Method::PcpaMidpoint => "pcpa_midpoint",
        }
    }

    fn rule(self) -> Option<QuadratureRule> {
        match self {
            Method::PsRectangular => Some(QuadratureRule::Rectangular),
            Method::PsTrapezoidal => Some(QuadratureRule::Trapezoidal),
            Method::PsSimpson => Some(QuadratureRule::AveragedSimpson),
            _ => None,
        }
    }

    fn sampling(self) -> Sampling {
        match self {
            Method::PcpaMidpoint => Sampling::Midpoint,
            _ => Sampling::LeftEndpoint,
        }
    }
}

/// What the error metric compares.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Observable {
    /// `Σ I_z` for spin-½ kinds, `ẑ` state for SO(3).
    #[default]
    Default,
    Density {
        re: Vec<Vec<f64>>,
        im: Vec<Vec<f64>>,
    },
    /// PS still solves the full propagator; PCPA and RK evolve only this state.
    State { re: Vec<f64>, im: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub system: SystemSpec,
    pub waveform: WaveformSpec,
    #[serde(default)]
    pub t_start_s: f64,
    pub t_end_s: f64,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub targets: Vec<f64>,
    #[serde(default = "default_n_min")]
    pub n_min: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Per-method caps on N (e.g. to bound PCPA runtime).
    #[serde(default)]
    pub n_cap: Vec<(Method, usize)>,
    #[serde(default)]
    pub n_values: Vec<usize>,
    #[serde(default)]
    pub observable: Observable,
    #[serde(default = "default_rk_tol")]
    pub rk_tolerance: f64,
    #[serde(default = "one")]
    pub fourier_oversampling: usize,
}

fn one() -> usize {
    1
}

fn default_n_min() -> usize {
    10
}

fn default_n_max() -> usize {
    1_000_000
}

fn default_rk_tol() -> f64 {
    1e-13
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.waveform.validate()?;
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("methods must not be empty".into()));
        }
        if self.n_min < 2 || self.n_max < self.n_min {
            return Err(Error::InvalidConfig(format!(
                "bad N bounds [{}, {}]",
                self.n_min, self.n_max
            )));
        }
        if let Some(t) = self.targets.iter().find(|t| !(**t > 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "target error must be positive, got {t}"
            )));
        }
        if self.fourier_oversampling < 1 {
            return Err(Error::InvalidConfig(
                "fourier_oversampling must be >= 1".into(),
            ));
        }
        TimeGrid::new(self.t_start_s, self.t_end_s, 2)?;
        RkConfig::with_tolerance(self.rk_tolerance).validate()
    }

    fn cap(&self, m: Method) -> usize {
        self.n_cap
            .iter()
            .find(|(k, _)| *k == m)
            .map_or(self.n_max, |(_, n)| (*n).min(self.n_max))
    }
}

/// A resolved [`Observable`]: the initial density matrix or state.
#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    Density(DMatrix<Complex64>),
    State(DVector<Complex64>),
}

impl Initial {
    pub fn resolve(spec: &SystemSpec, obs: &Observable) -> Result<Self> {
        let d = spec.dim();
        match obs {
            Observable::Default => {
                if spec.kind.is_spinor() {
                    default_rho0(spec).map(Initial::Density)
                } else {
                    default_psi0(spec).map(Initial::State)
                }
            }
            Observable::Density { re, im } => {
                if re.len() != d || im.len() != d || re.iter().chain(im).any(|r| r.len() != d) {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: re.len(),
                    });
                }
                Ok(Initial::Density(DMatrix::from_fn(d, d, |r, c| {
                    Complex64::new(re[r][c], im[r][c])
                })))
            }
            Observable::State { re, im } => {
                if re.len() != d || im.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: re.len(),
                    });
                }
                Ok(Initial::State(DVector::from_fn(d, |r, _| {
                    Complex64::new(re[r], im[r])
                })))
            }
        }
    }

    pub fn observe(&self, traj: &PropagatorTrajectory) -> Result<DensityTrajectory> {
        match self {
            Initial::Density(rho0) => propagate_density(traj, rho0),
            Initial::State(psi0) => propagate_state(traj, psi0),
        }
    }
}

struct Prepared {
    pulse: CompiledWaveform,
    init: Initial,
    rk: RkConfig,
}

fn prepare(s: &Scenario) -> Result<Prepared> {
    s.validate()?;
    Ok(Prepared {
        pulse: s.waveform.compile()?,
        init: Initial::resolve(&s.system, &s.observable)?,
        rk: RkConfig::with_tolerance(s.rk_tolerance),
    })
}

fn columns(grid: &TimeGrid, states: Vec<DMatrix<Complex64>>) -> DensityTrajectory {
    DensityTrajectory {
        grid: *grid,
        rho: states,
    }
}

/// Run `method` with `n` nodes; returns the observed trajectory and the solve time.
fn run_method(
    s: &Scenario,
    p: &Prepared,
    method: Method,
    n: usize,
) -> Result<(DensityTrajectory, f64)> {
    let grid = TimeGrid::new(s.t_start_s, s.t_end_s, n)?;
    let start = Instant::now();
    let out = match (method.rule(), &p.init) {
        (Some(rule), init) => {
            let opts = SolveOptions {
                fourier_oversampling: s.fourier_oversampling,
                ..SolveOptions::new(rule)
            };
            init.observe(&solve_on_grid(&s.system, &p.pulse, &grid, &opts)?)?
        }
        (None, Initial::State(psi0)) => {
            let states = pcpa_state(&s.system, &p.pulse, &grid, method.sampling(), psi0)?;
            columns(
                &grid,
                states
                    .into_iter()
                    .map(|v| DMatrix::from_column_slice(v.len(), 1, v.as_slice()))
                    .collect(),
            )
        }
        (None, init) => init.observe(&pcpa(&s.system, &p.pulse, &grid, method.sampling())?)?,
    };
    Ok((out, start.elapsed().as_secs_f64()))
}

fn reference(s: &Scenario, p: &Prepared, n: usize) -> Result<DensityTrajectory> {
    let grid = TimeGrid::new(s.t_start_s, s.t_end_s, n)?;
    match &p.init {
        Initial::State(psi0) => {
            let init = DMatrix::from_column_slice(psi0.len(), 1, psi0.as_slice());
            Ok(columns(
                &grid,
                rk_solve(&s.system, &p.pulse, &grid, &p.rk, &init)?,
            ))
        }
        init => init.observe(&rk_propagator(&s.system, &p.pulse, &grid, &p.rk)?),
    }
}

/// `ℰ_M` of `method` at `n` nodes against the RK reference on the same grid.
pub fn error_at(s: &Scenario, method: Method, n: usize) -> Result<f64> {
    let p = prepare(s)?;
    eval(s, &p, method, n)
}

fn eval(s: &Scenario, p: &Prepared, method: Method, n: usize) -> Result<f64> {
    let (m, _) = run_method(s, p, method, n)?;
    relative_error(&m, &reference(s, p, n)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub method_tag: String,
    pub target_error: f64,
    /// Minimal N found, or `None` when the target was not reached below the cap.
    pub n_points: Option<usize>,
    pub wall_time_s: Option<f64>,
    pub achieved_error: Option<f64>,
    /// Largest N tried when unreachable.
    pub n_tried: usize,
}

impl ErrorReport {
    pub fn reachable(&self) -> bool {
        self.n_points.is_some()
    }
}

/// Doubling from `n_min`, then bisection on the bracket.
fn search(s: &Scenario, p: &Prepared, method: Method, target: f64) -> Result<ErrorReport> {
    let cap = s.cap(method);
    let report = |n: Option<usize>, e: Option<f64>, t: Option<f64>, tried: usize| ErrorReport {
        method_tag: method.tag().into(),
        target_error: target,
        n_points: n,
        wall_time_s: t,
        achieved_error: e,
        n_tried: tried,
    };
    let mut lo = None;
    let mut n = s.n_min.min(cap);
    let (mut hi, mut hi_err) = loop {
        let e = eval(s, p, method, n)?;
        if e <= target {
            break (n, e);
        }
        if n >= cap {
            return Ok(report(None, Some(e), None, n));
        }
        lo = Some(n);
        n = (2 * n).min(cap);
    };
    if let Some(mut lo) = lo {
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            let e = eval(s, p, method, mid)?;
            if e <= target {
                hi = mid;
                hi_err = e;
            } else {
                lo = mid;
            }
        }
    }
    let secs = median_time(s, p, method, hi)?;
    Ok(report(Some(hi), Some(hi_err), Some(secs), hi))
}

/// One warm-up run, then the median of three timed runs.
fn median_time(s: &Scenario, p: &Prepared, method: Method, n: usize) -> Result<f64> {
    run_method(s, p, method, n)?;
    let mut t = [0.0; 3];
    for slot in &mut t {
        *slot = run_method(s, p, method, n)?.1;
    }
    t.sort_by(f64::total_cmp);
    Ok(t[1])
}

/// Minimal N per (method, target), rows in method-major order.
pub fn benchmark(s: &Scenario) -> Result<Vec<ErrorReport>> {
    let p = prepare(s)?;
    if s.targets.is_empty() {
        return Err(Error::InvalidConfig("targets must not be empty".into()));
    }
    let rows: Vec<(Method, f64)> = s
        .methods
        .iter()
        .flat_map(|&m| s.targets.iter().map(move |&t| (m, t)))
        .collect();
    rows.par_iter().map(|&(m, t)| search(s, &p, m, t)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub method_tag: String,
    pub n_points: usize,
    pub wall_time_s: f64,
    pub error: f64,
}

/// `ℰ_M` and solve time for every method at every `n_values` entry.
pub fn error_sweep(s: &Scenario) -> Result<Vec<SweepPoint>> {
    let p = prepare(s)?;
    if s.n_values.is_empty() {
        return Err(Error::InvalidConfig("n_values must not be empty".into()));
    }
    let rows: Vec<(Method, usize)> = s
        .methods
        .iter()
        .flat_map(|&m| s.n_values.iter().map(move |&n| (m, n)))
        .collect();
    rows.par_iter()
        .map(|&(m, n)| {
            let error = eval(s, &p, m, n)?;
            let wall_time_s = median_time(s, &p, m, n)?;
            Ok(SweepPoint {
                method_tag: m.tag().into(),
                n_points: n,
                wall_time_s,
                error,
            })
        })
        .collect()
}

fn label_of(tag: &str) -> &str {
    [
        Method::PsRectangular,
        Method::PsTrapezoidal,
        Method::PsSimpson,
        Method::Pcpa,
        Method::PcpaMidpoint,
    ]
    .into_iter()
    .find(|m| m.tag() == tag)
    .map_or(tag, |m| m.label())
}

pub fn reports_to_csv(reports: &[ErrorReport], w: impl std::io::Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "method",
        "target_error",
        "n_points",
        "achieved_error",
        "wall_time_s",
        "n_tried",
    ])?;
    for r in reports {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:e}"));
        out.write_record([
            r.method_tag.clone(),
            format!("{:e}", r.target_error),
            r.n_points.map_or("unreachable".into(), |n| n.to_string()),
            opt(r.achieved_error),
            opt(r.wall_time_s),
            r.n_tried.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Table with columns `Method M | ℰ_M | N | Time (s)`.
pub fn reports_to_markdown(reports: &[ErrorReport]) -> String {
    let mut s = String::from("| Method M | ℰ_M | N | Time (s) |\n|---|---|---|---|\n");
    for r in reports {
        let n = r
            .n_points
            .map_or(format!("> {} (unreachable)", r.n_tried), |n| n.to_string());
        let t = r.wall_time_s.map_or("-".into(), |t| format!("{t:.3}"));
        let _ = writeln!(
            s,
            "| {} | {:.0e} | {} | {} |",
            label_of(&r.method_tag),
            r.target_error,
            n,
            t
        );
    }
    s
}

/// Long-format CSV: `time_s,series,value` with one row per sweep point.
pub fn sweep_to_tidy_csv(points: &[SweepPoint], w: impl std::io::Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["time_s", "series", "value", "n_points"])?;
    for p in points {
        out.write_record([
            format!("{:e}", p.wall_time_s),
            p.method_tag.clone(),
            format!("{:e}", p.error),
            p.n_points.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
