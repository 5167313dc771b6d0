mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;
use pathsum::evaluation::{
    benchmark, bloch_trajectory, error_sweep, relative_error, reports_to_csv, reports_to_markdown,
    sweep_to_tidy_csv, Initial, Scenario,
};
use pathsum::export::{
    write_bloch, write_complex_series, write_density, write_propagator, Metadata,
};
use pathsum::pathsum::{neumann_u22, solve, BFunction, FourierTable, NeumannOrder};
use pathsum::reference::{pcpa, rk_propagator, RkConfig};
use pathsum::spin::SystemKind;
use pathsum::trajectory::{hash_of, PropagatorTrajectory};
use pathsum::waveforms::{AmplitudeMode, Pulse, WaveformSpec};
use pathsum::{QuadratureRule, TimeGrid, C64};

use config::{load, Output, RunConfig, RunMethod};

#[derive(Parser)]
#[command(
    name = "pathsum",
    version,
    about = "Path-sum propagators for driven spin-1/2 systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Overrides the quadrature rule of the config.
    #[arg(long, global = true, value_enum)]
    quadrature: Option<Rule>,

    /// Worker threads for benchmark fan-out.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Recorded in output metadata; the solvers themselves are deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, env = "PATHSUM_OUTPUT_DIR", default_value = ".")]
    output_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and write the requested outputs.
    Simulate { config: PathBuf },
    /// Minimal-N search or error sweep over a scenario.
    Benchmark { scenario: PathBuf },
    /// Truncated Neumann series of U22 for an SO(3) configuration.
    Neumann {
        config: PathBuf,
        /// Comma-separated truncation orders.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        orders: Vec<i64>,
    },
    /// Write the sampled Fourier kernel B and b on the lower triangle of the grid.
    KernelDump {
        config: PathBuf,
        /// Frequency of the table in rad/s; defaults to the first offset.
        #[arg(long)]
        omega: Option<f64>,
        /// Keep every stride-th node in both time arguments.
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Rect,
    Trap,
    Simpson,
}

impl From<Rule> for QuadratureRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::Rect => QuadratureRule::Rectangular,
            Rule::Trap => QuadratureRule::Trapezoidal,
            Rule::Simpson => QuadratureRule::AveragedSimpson,
        }
    }
}

/// Exit 2 for bad input, 3 for failures while solving.
enum Failure {
    Input(anyhow::Error),
    Solver(anyhow::Error),
}

trait Classify<T> {
    fn input(self) -> Result<T, Failure>;
    fn solver(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.into()))
    }
    fn solver(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Solver(e.into()))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .input()?;
    }
    std::fs::create_dir_all(&cli.output_dir)
        .with_context(|| format!("cannot create {}", cli.output_dir.display()))
        .input()?;
    match &cli.command {
        Command::Simulate { config } => simulate(cli, config),
        Command::Benchmark { scenario } => run_benchmark(cli, scenario),
        Command::Neumann { config, orders } => neumann(cli, config, orders),
        Command::KernelDump {
            config,
            omega,
            stride,
        } => kernel_dump(cli, config, *omega, *stride),
    }
}

fn load_run(cli: &Cli, path: &Path) -> Result<RunConfig, Failure> {
    let mut cfg: RunConfig = load(path).input()?;
    if let Some(r) = cli.quadrature {
        cfg.solve.rule = r.into();
    }
    cfg.check().input()?;
    Ok(cfg)
}

fn create(cli: &Cli, path: &Path) -> Result<BufWriter<File>, Failure> {
    let full = cli.output_dir.join(path);
    if let Some(dir) = full.parent() {
        std::fs::create_dir_all(dir).input()?;
    }
    File::create(&full)
        .with_context(|| format!("cannot write {}", full.display()))
        .input()
        .map(BufWriter::new)
}

/// How each chirp's peak amplitude was specified, and what it resolved to.
fn amplitudes(w: &WaveformSpec) -> String {
    match w {
        WaveformSpec::Chirp(c) => match (c.amplitude_mode(), c.peak_amplitude()) {
            (Ok(mode), Ok(peak)) => {
                let given = match mode {
                    AmplitudeMode::Explicit(_) => "omega1_max".to_string(),
                    AmplitudeMode::FromQ(q) => format!("q0={q:e}"),
                    AmplitudeMode::FromFlipAngle(a) => format!("alpha={a:e}"),
                };
                format!("{given} -> omega1_max={peak:e} rad/s")
            }
            _ => "invalid".into(),
        },
        WaveformSpec::Tabulated(_) => "tabulated".into(),
        WaveformSpec::Composite { parts } => {
            format!(
                "[{}]",
                parts.iter().map(amplitudes).collect::<Vec<_>>().join("; ")
            )
        }
    }
}

fn metadata(cli: &Cli, cfg: &RunConfig, grid: &TimeGrid, method: &str) -> Metadata {
    let mut m = Metadata::new(grid)
        .with("config_hash", hash_of(cfg))
        .with("method", method)
        .with("amplitude", amplitudes(&cfg.waveform));
    if let Some(s) = cli.seed {
        m.push("seed", s.to_string());
    }
    m
}

fn propagate(cfg: &RunConfig) -> pathsum::Result<PropagatorTrajectory> {
    let pulse = cfg.waveform.compile()?;
    let grid = TimeGrid::new(cfg.t_start_s, cfg.t_end_s, cfg.solve.total_points())?;
    match cfg.method {
        RunMethod::Ps => solve(&cfg.system, &pulse, &cfg.solve, cfg.t_start_s, cfg.t_end_s),
        RunMethod::Pcpa => pcpa(&cfg.system, &pulse, &grid, cfg.pcpa_sampling),
        RunMethod::Rk => rk_propagator(
            &cfg.system,
            &pulse,
            &grid,
            &RkConfig::with_tolerance(cfg.rk_tolerance),
        ),
    }
}

fn simulate(cli: &Cli, path: &Path) -> Result<(), Failure> {
    let cfg = load_run(cli, path)?;
    let start = Instant::now();
    let traj = propagate(&cfg).solver()?;
    let secs = start.elapsed().as_secs_f64();
    let meta = metadata(cli, &cfg, &traj.grid, &traj.method_tag);
    let init = Initial::resolve(&cfg.system, &cfg.initial).input()?;
    let mut error = None;
    for out in &cfg.outputs {
        match out {
            Output::Propagator { path } => {
                write_propagator(&traj, &meta, create(cli, path)?).solver()?
            }
            Output::Density { path } => {
                let rho = init.observe(&traj).solver()?;
                let meta = meta.clone().with("initial", describe(&init));
                write_density(&rho, &meta, create(cli, path)?).solver()?;
            }
            Output::Bloch { path } => {
                let g = bloch_trajectory(&traj, &Vector3::z()).solver()?;
                write_bloch(
                    &traj.grid,
                    &g,
                    &meta.clone().with("initial", "g0=(0,0,1)"),
                    create(cli, path)?,
                )
                .solver()?;
            }
            Output::Error { path } => {
                let e = error_vs_rk(&cfg, &traj, &init).solver()?;
                let mut w = create(cli, path)?;
                meta.clone()
                    .with("initial", describe(&init))
                    .write_to(&mut w)
                    .solver()?;
                writeln!(
                    w,
                    "method,n_points,relative_error\n{},{},{e:e}",
                    traj.method_tag,
                    traj.len()
                )
                .solver()?;
                error = Some(e);
            }
        }
    }
    let mut line = format!(
        "{} N={} drift={:.3e} time={secs:.3}s",
        traj.method_tag,
        traj.len(),
        traj.unitarity_drift()
    );
    if let Some(e) = error {
        line.push_str(&format!(" E_M={e:.3e}"));
    }
    println!("{line}");
    Ok(())
}

fn describe(init: &Initial) -> String {
    let fmt = |it: &mut dyn Iterator<Item = &C64>| {
        it.map(|z| format!("{}{:+}i", z.re, z.im))
            .collect::<Vec<_>>()
            .join(" ")
    };
    match init {
        Initial::Density(r) => format!("rho0 (column-major) {}", fmt(&mut r.iter())),
        Initial::State(p) => format!("psi0 {}", fmt(&mut p.iter())),
    }
}

fn error_vs_rk(
    cfg: &RunConfig,
    traj: &PropagatorTrajectory,
    init: &Initial,
) -> pathsum::Result<f64> {
    let pulse = cfg.waveform.compile()?;
    let rk = rk_propagator(
        &cfg.system,
        &pulse,
        &traj.grid,
        &RkConfig::with_tolerance(cfg.rk_tolerance),
    )?;
    relative_error(&init.observe(traj)?, &init.observe(&rk)?)
}

fn run_benchmark(cli: &Cli, path: &Path) -> Result<(), Failure> {
    let mut s: Scenario = load(path).input()?;
    if let Some(r) = cli.quadrature {
        // a global rule override restricts the path-sum rows to that rule
        use pathsum::evaluation::Method;
        let keep = match QuadratureRule::from(r) {
            QuadratureRule::Rectangular => Method::PsRectangular,
            QuadratureRule::Trapezoidal => Method::PsTrapezoidal,
            QuadratureRule::AveragedSimpson => Method::PsSimpson,
        };
        s.methods
            .retain(|m| m.tag().starts_with("pcpa") || *m == keep);
    }
    config::check_scenario(&s).input()?;
    let init = Initial::resolve(&s.system, &s.observable).input()?;
    let mut meta = Metadata::versioned()
        .with("config_hash", hash_of(&s))
        .with(
            "grid",
            format!(
                "t_start={:e} t_end={:e} n_min={} n_max={}",
                s.t_start_s, s.t_end_s, s.n_min, s.n_max
            ),
        )
        .with("initial", describe(&init))
        .with("amplitude", amplitudes(&s.waveform));
    if let Some(seed) = cli.seed {
        meta.push("seed", seed.to_string());
    }
    if !s.targets.is_empty() {
        let reports = benchmark(&s).solver()?;
        let mut w = create(cli, Path::new(&format!("{}.csv", s.name)))?;
        meta.write_to(&mut w).solver()?;
        reports_to_csv(&reports, w).solver()?;
        let md = reports_to_markdown(&reports);
        let mut w = create(cli, Path::new(&format!("{}.md", s.name)))?;
        meta.write_markdown(&mut w).solver()?;
        w.write_all(md.as_bytes()).solver()?;
        print!("{md}");
    }
    if !s.n_values.is_empty() {
        let points = error_sweep(&s).solver()?;
        let mut w = create(cli, Path::new(&format!("{}_sweep.csv", s.name)))?;
        meta.write_to(&mut w).solver()?;
        sweep_to_tidy_csv(&points, w).solver()?;
        for p in &points {
            println!(
                "{} N={} E_M={:.3e} time={:.4}s",
                p.method_tag, p.n_points, p.error, p.wall_time_s
            );
        }
    }
    Ok(())
}

fn neumann(cli: &Cli, path: &Path, orders: &[i64]) -> Result<(), Failure> {
    if let Some(m) = orders.iter().find(|&&m| m < 1) {
        return Err(Failure::Input(anyhow::anyhow!(
            "Neumann orders must be positive, got {m}"
        )));
    }
    let cfg = load_run(cli, path)?;
    if cfg.system.kind != SystemKind::MonoSo3Shift {
        return Err(Failure::Input(anyhow::anyhow!(
            "neumann needs a mono_so3_shift system"
        )));
    }
    if cfg.solve.n_intervals != 1 {
        return Err(Failure::Input(anyhow::anyhow!(
            "neumann runs on a single interval"
        )));
    }
    let pulse = cfg.waveform.compile().input()?;
    let grid = TimeGrid::new(cfg.t_start_s, cfg.t_end_s, cfg.solve.total_points()).input()?;
    let rule = cfg.solve.rule;
    let exact = rk_propagator(
        &cfg.system,
        &pulse,
        &grid,
        &RkConfig::with_tolerance(cfg.rk_tolerance),
    )
    .solver()?
    .entry(1, 1);
    let mut names = vec!["u22_exact".to_string()];
    let mut series = vec![exact.clone()];
    for &m in orders {
        names.push(format!("u22_m{m}"));
        series.push(
            neumann_u22(
                &cfg.system,
                &pulse,
                &grid,
                rule,
                NeumannOrder::Finite(m as usize),
            )
            .solver()?,
        );
    }
    let meta = metadata(
        cli,
        &cfg,
        &grid,
        &format!("neumann_{}", pathsum::pathsum::method_tag(rule)),
    );
    write_complex_series(
        &grid,
        &names,
        &series,
        &meta,
        create(cli, Path::new("neumann_u22.csv"))?,
    )
    .solver()?;
    println!("order,sup_error");
    for (name, s) in names.iter().zip(&series).skip(1) {
        let sup = s
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        println!("{},{sup:e}", name.trim_start_matches("u22_m"));
    }
    Ok(())
}

fn kernel_dump(cli: &Cli, path: &Path, omega: Option<f64>, stride: usize) -> Result<(), Failure> {
    if stride == 0 {
        return Err(Failure::Input(anyhow::anyhow!("stride must be positive")));
    }
    let cfg = load_run(cli, path)?;
    let pulse = cfg.waveform.compile().input()?;
    let grid = TimeGrid::new(cfg.t_start_s, cfg.t_end_s, cfg.solve.total_points()).input()?;
    let omega = omega.unwrap_or(cfg.system.offsets_rad_s[0]);
    let table = FourierTable::oversampled(
        &pulse,
        &grid,
        cfg.solve.rule,
        omega,
        cfg.solve.fourier_oversampling,
    )
    .solver()?;
    let beta: Vec<C64> = grid.times().iter().map(|&t| pulse.beta(t)).collect();
    let b = BFunction::with_table(table, &beta);
    let meta = metadata(cli, &cfg, &grid, "kernel_dump").with("omega_rad_s", format!("{omega:e}"));
    let mut w = create(cli, Path::new("kernel.csv"))?;
    meta.write_to(&mut w).solver()?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["i", "j", "t_i_s", "t_j_s", "B_re", "B_im", "b"])
        .solver()?;
    for i in (0..grid.len()).step_by(stride) {
        for j in (0..=i).step_by(stride) {
            let z = b.table().get(i, j);
            out.write_record([
                i.to_string(),
                j.to_string(),
                format!("{:e}", grid.time(i)),
                format!("{:e}", grid.time(j)),
                format!("{:e}", z.re),
                format!("{:e}", z.im),
                format!("{:e}", b.get(i, j)),
            ])
            .solver()?;
        }
    }
    out.flush().solver()?;
    println!("kernel_dump N={} omega={omega:e}", grid.len());
    Ok(())
}
