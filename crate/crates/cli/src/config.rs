use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use pathsum::evaluation::{Observable, Scenario};
use pathsum::pathsum::SolveConfig;
use pathsum::reference::Sampling;
use pathsum::spin::{SystemKind, SystemSpec};
use pathsum::waveforms::WaveformSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMethod {
    #[default]
    Ps,
    Pcpa,
    Rk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Output {
    /// All entries of `U(t)`.
    Propagator { path: PathBuf },
    /// `ρ(t)`, or `ψ(t)` for SO(3) kinds.
    Density { path: PathBuf },
    /// Cartesian Bloch vector; shift-basis SO(3) only.
    Bloch { path: PathBuf },
    /// `ℰ_M` against the RK reference on the same grid.
    Error { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub waveform: WaveformSpec,
    #[serde(default)]
    pub t_start_s: f64,
    pub t_end_s: f64,
    pub solve: SolveConfig,
    #[serde(default)]
    pub method: RunMethod,
    #[serde(default)]
    pub pcpa_sampling: Sampling,
    #[serde(default = "default_rk_tol")]
    pub rk_tolerance: f64,
    #[serde(default)]
    pub initial: Observable,
    #[serde(default)]
    pub outputs: Vec<Output>,
}

fn default_rk_tol() -> f64 {
    1e-13
}

impl RunConfig {
    /// Checks that do not need a solve: schema-level values and method/kind compatibility.
    pub fn check(&self) -> anyhow::Result<()> {
        self.system.validate()?;
        self.waveform.validate()?;
        self.solve.validate()?;
        pathsum::TimeGrid::new(self.t_start_s, self.t_end_s, self.solve.total_points())?;
        if self.solve.neumann_order.is_some()
            && self.system.kind.is_spinor()
            && self.system.kind != SystemKind::MonoSu2
        {
            bail!("neumann_order applies to single-spin systems only");
        }
        if self.method != RunMethod::Ps
            && (self.solve.n_intervals != 1 || self.solve.neumann_order.is_some())
        {
            bail!("n_intervals and neumann_order apply to the path-sum method only");
        }
        for o in &self.outputs {
            if matches!(o, Output::Bloch { .. }) && self.system.kind != SystemKind::MonoSo3Shift {
                bail!("bloch output needs a mono_so3_shift system");
            }
        }
        pathsum::evaluation::Initial::resolve(&self.system, &self.initial)?;
        Ok(())
    }
}

/// Reads and parses a JSON file; errors name the offending field.
pub fn load<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        anyhow::anyhow!("{}: at `{field}`: {}", path.display(), e.into_inner())
    })
}

pub fn check_scenario(s: &Scenario) -> anyhow::Result<()> {
    s.validate()?;
    if s.targets.is_empty() && s.n_values.is_empty() {
        bail!("scenario needs targets or n_values");
    }
    pathsum::evaluation::Initial::resolve(&s.system, &s.observable)?;
    Ok(())
}
