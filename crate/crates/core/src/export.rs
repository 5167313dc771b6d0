//! CSV output with `#`-prefixed metadata lines.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! value read back parses to the same `f64`.

use std::io::Write;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::Result;
use crate::evaluation::DensityTrajectory;
use crate::grid::TimeGrid;
use crate::trajectory::PropagatorTrajectory;

/// Ordered `key: value` header lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    /// Only the crate version.
    pub fn versioned() -> Self {
        let mut m = Self::default();
        m.push("version", concat!("pathsum ", env!("CARGO_PKG_VERSION")));
        m
    }

    /// Version followed by the grid description.
    pub fn new(grid: &TimeGrid) -> Self {
        let mut m = Self::versioned();
        m.push(
            "grid",
            format!(
                "t_start={:e} t_end={:e} n_points={}",
                grid.t_start(),
                grid.t_end(),
                grid.len()
            ),
        );
        m
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.entries.push((key.into(), value.into()));
        self
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.push(key, value);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "# {k}: {}", v.replace('\n', " "))?;
        }
        Ok(())
    }

    /// The same lines as HTML comments, for Markdown files.
    pub fn write_markdown(&self, w: &mut impl Write) -> Result<()> {
        for (k, v) in &self.entries {
            writeln!(
                w,
                "<!-- {k}: {} -->",
                v.replace('\n', " ").replace("--", "- -")
            )?;
        }
        Ok(())
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Columns `node,t_s` followed by `name_re,name_im` per complex series.
pub fn write_complex_series(
    grid: &TimeGrid,
    names: &[String],
    series: &[Vec<Complex64>],
    meta: &Metadata,
    mut w: impl Write,
) -> Result<()> {
    meta.write_to(&mut w)?;
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["node".to_string(), "t_s".to_string()];
    for n in names {
        header.push(format!("{n}_re"));
        header.push(format!("{n}_im"));
    }
    out.write_record(&header)?;
    for k in 0..grid.len() {
        let mut row = vec![k.to_string(), num(grid.time(k))];
        for s in series {
            row.push(num(s[k].re));
            row.push(num(s[k].im));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Every matrix entry, row-major, as columns `u{r}{c}` (1-based).
pub fn write_propagator(traj: &PropagatorTrajectory, meta: &Metadata, w: impl Write) -> Result<()> {
    let d = traj.dim();
    let (names, series): (Vec<_>, Vec<_>) = (0..d * d)
        .map(|i| {
            (
                format!("u{}{}", i / d + 1, i % d + 1),
                traj.entry(i / d, i % d),
            )
        })
        .unzip();
    write_complex_series(&traj.grid, &names, &series, meta, w)
}

/// `ρ(t)` entries row-major as columns `rho{r}{c}`; state trajectories as `psi{r}`.
pub fn write_density(rho: &DensityTrajectory, meta: &Metadata, w: impl Write) -> Result<()> {
    let (rows, cols) = rho.rho[0].shape();
    let (names, series): (Vec<_>, Vec<_>) = (0..rows * cols)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            let name = if cols == 1 {
                format!("psi{}", r + 1)
            } else {
                format!("rho{}{}", r + 1, c + 1)
            };
            (name, rho.rho.iter().map(|m| m[(r, c)]).collect())
        })
        .unzip();
    write_complex_series(&rho.grid, &names, &series, meta, w)
}

/// Columns `node,t_s,gx,gy,gz`.
pub fn write_bloch(
    grid: &TimeGrid,
    g: &[Vector3<f64>],
    meta: &Metadata,
    mut w: impl Write,
) -> Result<()> {
    meta.write_to(&mut w)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["node", "t_s", "gx", "gy", "gz"])?;
    for (k, v) in g.iter().enumerate() {
        out.write_record([
            k.to_string(),
            num(grid.time(k)),
            num(v.x),
            num(v.y),
            num(v.z),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads back the numeric body of a file written here, skipping metadata lines.
pub fn read_table(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut rd = csv::Reader::from_reader(body.as_bytes());
    let header = rd.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        rows.push(rec.iter().map(|x| x.parse().unwrap_or(f64::NAN)).collect());
    }
    Ok((header, rows))
}
