//! Tables shared by the subcommands and the experiment runner.

use mtlab_core::stability::{
    compute_global_constants, discretization_allowance, global_bound, local_bound, nonlinear_estimate, PairSeries,
};
use mtlab_core::{Model, Traj};

use crate::error::CliResult;
use crate::format::{Cell, Csv};

pub const TRAJECTORY_HEADER: [&str; 4] = ["t", "total_mass", "v", "atoms_count"];
pub const STABILITY_HEADER: [&str; 7] =
    ["t", "rho_mt", "rho_flat", "bound_local", "bound_global", "margin", "violated"];

pub fn trajectory_csv(traj: &Traj) -> Csv {
    let mut csv = Csv::new(&TRAJECTORY_HEADER);
    for ((t, m), v) in traj.times.iter().zip(&traj.snapshots).zip(&traj.v_series) {
        csv.row(&[(*t).into(), m.total_variation().into(), (*v).into(), m.len().into()]);
    }
    csv
}

pub struct StabilityTable {
    pub csv: Csv,
    pub violations: usize,
    pub min_margin: f64,
}

/// Local, nonlinear and global checks for one pair, one row per time step. `margin` is
/// the smaller of the local and global slacks; `violated` flags any of the three checks.
pub fn stability_table(model: &Model, traj1: &Traj, traj2: &Traj) -> CliResult<StabilityTable> {
    let (a0, b0) = (&traj1.snapshots[0], &traj2.snapshots[0]);
    let k = compute_global_constants(model, a0, b0)?;
    let series = PairSeries::new(traj1, traj2, model.grid())?;
    let allowance = discretization_allowance(model, k.tv1 + k.tv2, series.dt);
    let local = local_bound(&series, &k, allowance);
    let nonlinear = nonlinear_estimate(&series, model, &a0.add(b0), &k, allowance)?;
    let global = global_bound(&series, &k, allowance);
    let rho0 = series.rho0();

    let mut csv = Csv::new(&STABILITY_HEADER);
    let mut violations = 0;
    let mut min_margin = f64::INFINITY;
    for (i, g) in global.rows.iter().enumerate() {
        let l = local.rows.get(i);
        let bound_local = l.and_then(|r| r.c1).map(|c| if rho0 == 0.0 { 0.0 } else { c * rho0 });
        let local_margin = match bound_local {
            Some(b) if !(b == 0.0 && g.rho_mt == 0.0) => b - g.rho_mt,
            _ => f64::INFINITY,
        };
        let margin = g.margin.min(local_margin);
        let violated = g.violated
            || l.is_some_and(|r| r.violated)
            || i.checked_sub(1).and_then(|j| nonlinear.rows.get(j)).is_some_and(|r| r.violated);
        violations += usize::from(violated);
        min_margin = min_margin.min(margin);
        csv.row(&[
            g.t.into(),
            g.rho_mt.into(),
            g.rho_flat.into(),
            Cell::from(bound_local),
            g.bound.into(),
            margin.into(),
            violated.into(),
        ]);
    }
    Ok(StabilityTable { csv, violations, min_margin })
}
