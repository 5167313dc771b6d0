use super::{solve_on_grid, SolveConfig};
use crate::error::Result;
use crate::grid::TimeGrid;
use crate::spin::SystemSpec;
use crate::trajectory::{hash_of, PropagatorTrajectory, TrajectoryMeta};
use crate::waveforms::Pulse;

/// Split `[t_start, t_end]` into `N_I` intervals of `N_p` nodes, solve each
/// from the identity and chain the results: `U(t) = U_loc(t; t_left) U(t_left)`.
///
/// Adjacent intervals share their boundary node, so the output has
/// `N_I (N_p − 1) + 1` nodes. With one interval this is the plain solver.
pub fn solve_hybrid(
    spec: &SystemSpec,
    pulse: &dyn Pulse,
    cfg: &SolveConfig,
    t_start: f64,
    t_end: f64,
) -> Result<PropagatorTrajectory> {
    cfg.validate()?;
    let np = cfg.n_points_per_interval;
    let ni = cfg.n_intervals;
    let meta = TrajectoryMeta {
        rule: Some(cfg.rule),
        n_points_per_interval: Some(np),
        n_intervals: Some(ni),
        neumann_order: cfg.neumann_order,
        system_hash: Some(hash_of(spec)),
        waveform_hash: None,
    };
    let opts = cfg.options();
    if ni == 1 {
        let grid = TimeGrid::new(t_start, t_end, np)?;
        return Ok(solve_on_grid(spec, pulse, &grid, &opts)?.with_meta(meta));
    }

    let global = TimeGrid::new(t_start, t_end, cfg.total_points())?;
    let mut matrices = Vec::with_capacity(global.len());
    let mut tag = String::new();
    for k in 0..ni {
        let a = global.time(k * (np - 1));
        let b = if k + 1 == ni {
            t_end
        } else {
            global.time((k + 1) * (np - 1))
        };
        let local = solve_on_grid(spec, pulse, &TimeGrid::new(a, b, np)?, &opts)?;
        let seed = matrices.last().cloned();
        let skip = usize::from(k > 0);
        for m in local.matrices.into_iter().skip(skip) {
            matrices.push(match &seed {
                Some(s) => m * s,
                None => m,
            });
        }
        tag = local.method_tag;
    }
    Ok(PropagatorTrajectory::new(global, matrices, format!("{tag}_hybrid")).with_meta(meta))
}
