//! Subcommand bodies, free of argument parsing.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mtlab_core::closed_form::AnalyticSolution;
use mtlab_core::stability::compute_global_constants;
use mtlab_core::{mt_metric, simulate, simulate_with, Grid, Measure, Model, ModelFile, Settings, Traj};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::format::{Cell, Csv};
use crate::report::{stability_table, StabilityTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example {
    /// Frozen atom against a free one.
    FreeAtom,
    /// Constant outflow.
    ConstantOutflow,
    /// Speed switched by the mass at `x_N`.
    SpeedCoupled,
}

impl FromStr for Example {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "free-atom" => Ok(Example::FreeAtom),
            "constant-outflow" => Ok(Example::ConstantOutflow),
            "speed-coupled" => Ok(Example::SpeedCoupled),
            _ => Err(format!("unknown example `{s}` (expected free-atom, constant-outflow or speed-coupled)")),
        }
    }
}

impl Example {
    /// Grid, solution and horizon used for the table.
    fn setup(self) -> (Grid, AnalyticSolution<f64>, f64) {
        let grid = |p: &[f64]| Grid::new(p.to_vec()).expect("fixed grid");
        match self {
            Example::FreeAtom => (grid(&[0.0, 1.0, 2.0]), AnalyticSolution::FreeAtom { eps: 0.1 }, 0.5),
            Example::ConstantOutflow => {
                (grid(&[0.0, 1.0, 2.0]), AnalyticSolution::ConstantOutflow { eps: 0.2, c1: 1.0, m: 2000 }, 0.2)
            }
            Example::SpeedCoupled => {
                (grid(&[0.0, 1.0, 3.0]), AnalyticSolution::TwoAtomSpeedCoupled { eps: 0.05, g_low: 0.5, y: 1.5 }, 0.1)
            }
        }
    }
}

/// Rows `t, analytic_rho_mt, simulated_rho_mt, bound` on the simulation steps. The bound
/// is `C₁(t)ρ_MT(0)` where the local estimate applies, `e^{α⌈t/β⌉}ρ_MT(0)` elsewhere.
pub fn example_table(which: Example, dt: Option<f64>) -> CliResult<Csv> {
    let (grid, sol, horizon) = which.setup();
    let dt = dt.unwrap_or(horizon / 400.0);
    let model = sol.model(&grid)?;
    let (a0, b0) = sol.initial(&grid)?;
    let k = compute_global_constants(&model, &a0, &b0)?;
    let (ta, tb) = (simulate(&a0, &model, horizon, dt, 1)?, simulate(&b0, &model, horizon, dt, 1)?);
    let rho0 = mt_metric(&a0, &b0, &grid);
    let rows: Vec<[f64; 4]> = ta
        .times
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let (a, b) = sol.eval(t.min(horizon), &grid)?;
            let bound = k.c1(t).unwrap_or_else(|_| k.growth_factor(t)) * rho0;
            Ok([t, mt_metric(&a, &b, &grid), mt_metric(&ta.snapshots[i], &tb.snapshots[i], &grid), bound])
        })
        .collect::<CliResult<_>>()?;
    let mut csv = Csv::new(&["t", "analytic_rho_mt", "simulated_rho_mt", "bound"]);
    for r in rows {
        csv.row(&r.map(Cell::from));
    }
    Ok(csv)
}

fn settings_for(
    file: &ModelFile,
    dt: Option<f64>,
    horizon: Option<f64>,
    fallback: Option<(f64, f64)>,
) -> CliResult<Settings> {
    let mut s = match (&file.solver, fallback) {
        (Some(s), _) => s.clone(),
        (None, Some((dt, t))) => Settings::new(dt, t),
        (None, None) => {
            let (dt, t) = (dt.ok_or_else(|| missing("dt"))?, horizon.ok_or_else(|| missing("T"))?);
            Settings::new(dt, t)
        }
    };
    s.dt = dt.unwrap_or(s.dt);
    s.horizon = horizon.unwrap_or(s.horizon);
    if !(s.dt > 0.0) {
        return Err(CliError::config("solver.dt", format!("must be positive, got {}", s.dt)));
    }
    if !(s.horizon > 0.0) {
        return Err(CliError::config("solver.T", format!("must be positive, got {}", s.horizon)));
    }
    Ok(s)
}

fn missing(field: &str) -> CliError {
    CliError::config(format!("solver.{field}"), "not given in the model file or on the command line")
}

fn named<'a>(file: &'a ModelFile, name: &str) -> CliResult<&'a Measure> {
    file.initial.get(name).ok_or_else(|| CliError::config(format!("initial.{name}"), "no such measure"))
}

/// Runs the model file's measure (`name`, or the only one present).
pub fn simulate_model(file: &ModelFile, name: Option<&str>, dt: Option<f64>, horizon: Option<f64>) -> CliResult<Traj> {
    let model = file.model()?;
    let m0 = match name {
        Some(n) => named(file, n)?,
        None if file.initial.len() == 1 => file.initial.values().next().expect("one measure"),
        None if file.initial.is_empty() => return Err(CliError::config("initial", "the model file has no measures")),
        None => return Err(CliError::config("initial", "several measures present; choose one with --measure")),
    };
    Ok(simulate_with(m0, &model, &settings_for(file, dt, horizon, None)?)?)
}

/// Writes `{"t": .., "atoms": [[x, w], ..]}` for every `every`-th snapshot next to `out`.
pub fn write_snapshots(traj: &Traj, every: usize, out: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for k in (0..traj.len()).step_by(every.max(1)) {
        let path = sidecar(out, &format!("step{k}.json"));
        let value = json!({ "t": traj.times[k], "atoms": traj.snapshots[k] });
        fs::write(&path, value.to_string() + "\n").map_err(|e| CliError::io(&path, e))?;
        files.push(path);
    }
    Ok(files)
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}

/// A compared pair: two names from the model file or two inline atom lists.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PairSpec {
    Names([String; 2]),
    Inline { mu1: Measure, mu2: Measure },
}

/// Checks every pair, in order, and returns one table per pair. Without a solver block
/// the run uses `dt = T_int/500` up to `3·T_int`.
pub fn stability_pairs(
    file: &ModelFile,
    pairs: &[PairSpec],
    dt: Option<f64>,
    horizon: Option<f64>,
) -> CliResult<Vec<StabilityTable>> {
    let model = file.model()?;
    if model.has_growth() {
        return Err(CliError::config("p1", "the stability estimates cover p = 0 only"));
    }
    if pairs.is_empty() {
        return Err(CliError::config("pairs", "no pairs given"));
    }
    let measures: Vec<(Measure, Measure)> = pairs
        .iter()
        .map(|p| match p {
            PairSpec::Names([a, b]) => Ok((named(file, a)?.clone(), named(file, b)?.clone())),
            PairSpec::Inline { mu1, mu2 } => Ok((mu1.clone(), mu2.clone())),
        })
        .collect::<CliResult<_>>()?;
    let settings = settings_for(file, dt, horizon, Some(default_run(&model)))?;
    measures
        .par_iter()
        .map(|(a, b)| {
            let (ta, tb) = (simulate_with(a, &model, &settings)?, simulate_with(b, &model, &settings)?);
            stability_table(&model, &ta, &tb)
        })
        .collect()
}

fn default_run(model: &Model) -> (f64, f64) {
    let g = model.grid();
    let t_int = (g.last() - g.point(g.last_index() - 1)) / model.sup_g1();
    (t_int / 500.0, 3.0 * t_int)
}

/// `out` for a single table, `out` with `_k` before the extension otherwise.
pub fn indexed_path(out: &Path, k: usize, count: usize) -> PathBuf {
    if count == 1 {
        return out.to_path_buf();
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = out.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    out.with_file_name(format!("{stem}_{k}{ext}"))
}

/// The constants bundle for two measures of the model file (the first two by name when
/// none are given), with `C₁` sampled on `[0, T_max)`.
pub fn constants_json(file: &ModelFile, names: Option<(&str, &str)>) -> CliResult<Value> {
    let model = file.model()?;
    let (a, b) = match names {
        Some((a, b)) => (named(file, a)?, named(file, b)?),
        None => {
            let mut it = file.initial.values();
            match (it.next(), it.next()) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(CliError::config("initial", "need two measures (or --m1/--m2 names)")),
            }
        }
    };
    let k = compute_global_constants(&model, a, b)?;
    let samples: Vec<Value> = (0..10)
        .map(|i| {
            let t = k.t_max * i as f64 / 10.0;
            json!([t, k.c1(t).ok()])
        })
        .collect();
    let mut value = serde_json::to_value(&k).expect("constants serialize");
    let obj = value.as_object_mut().expect("struct serializes to an object");
    obj.insert("fixed_step".into(), json!(k.fixed_step()));
    obj.insert("c1".into(), Value::Array(samples));
    Ok(value)
}
