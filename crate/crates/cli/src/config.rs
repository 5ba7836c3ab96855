//! Experiment description and the pipeline it drives.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use mtlab_core::metrics::MetricKind;
use mtlab_core::{distance, simulate_with, Measure, Model, ModelFile, Settings, Traj};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::format::{Cell, Csv};
use crate::input::json_file;
use crate::report::{stability_table, trajectory_csv};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    Path(PathBuf),
    Inline(Box<ModelFile>),
}

/// Random partners for every named initial measure: positions moved by at most `shift`
/// (kept inside the grid), weights scaled by a factor within `1 ± weight`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSweep {
    pub count: usize,
    pub shift: f64,
    #[serde(default)]
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSource,
    /// Added to the measures of the model file; same names replace them.
    #[serde(default)]
    pub initial: BTreeMap<String, Measure>,
    #[serde(rename = "T", alias = "horizon")]
    pub horizon: f64,
    pub dt: f64,
    #[serde(default = "one")]
    pub quad_particles_per_step: usize,
    #[serde(default)]
    pub merge_tolerance: f64,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<MetricKind>,
    /// Pairs of measure names compared along the run.
    #[serde(default)]
    pub pairs: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbations: Option<PerturbationSweep>,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

fn default_metrics() -> Vec<MetricKind> {
    vec![MetricKind::Flat, MetricKind::MeasureTransmission]
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        json_file("config", path)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn model_file(&self, base: &Path) -> CliResult<ModelFile> {
        match &self.model {
            ModelSource::Inline(file) => Ok((**file).clone()),
            ModelSource::Path(p) => json_file("model", &base.join(p)),
        }
    }

    fn validate(&self, measures: &BTreeMap<String, Measure>) -> CliResult<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(CliError::config("T", format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CliError::config("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.quad_particles_per_step == 0 {
            return Err(CliError::config("quad_particles_per_step", "must be at least 1"));
        }
        for (i, pair) in self.pairs.iter().enumerate() {
            for (j, name) in pair.iter().enumerate() {
                if !measures.contains_key(name) {
                    return Err(CliError::config(format!("pairs[{i}][{j}]"), format!("unknown measure `{name}`")));
                }
            }
        }
        if let Some(p) = &self.perturbations {
            if !(p.shift >= 0.0 && (0.0..1.0).contains(&p.weight)) {
                return Err(CliError::config("perturbations", "need shift >= 0 and 0 <= weight < 1"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSummary {
    pub first: String,
    pub second: String,
    pub violations: usize,
    pub min_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub pairs: Vec<PairSummary>,
}

impl RunReport {
    pub fn violations(&self) -> usize {
        self.pairs.iter().map(|p| p.violations).sum()
    }
}

fn perturb(m: &Measure, model: &Model, sweep: &PerturbationSweep, rng: &mut ChaCha8Rng) -> CliResult<Measure> {
    let (lo, hi) = (model.grid().first(), model.grid().last());
    let atoms = m.atoms().iter().map(|&(x, w)| {
        let dx = if sweep.shift > 0.0 { rng.gen_range(-sweep.shift..=sweep.shift) } else { 0.0 };
        let k = if sweep.weight > 0.0 { rng.gen_range(1.0 - sweep.weight..=1.0 + sweep.weight) } else { 1.0 };
        ((x + dx).clamp(lo, hi), w * k)
    });
    Ok(Measure::new(atoms.collect::<Vec<_>>())?)
}

/// Simulates every measure, compares the requested pairs and writes
/// `trajectory_<name>.csv`, `metrics_<a>_<b>.csv`, `stability_<a>_<b>.csv` (for `p ≡ 0`)
/// and `summary.json` into `out_dir`. Paths in the config resolve against `base`.
pub fn run(config: &ExperimentConfig, base: &Path) -> CliResult<RunReport> {
    let file = config.model_file(base)?;
    let model = file.model()?;
    let mut measures = file.initial.clone();
    measures.extend(config.initial.clone());
    config.validate(&measures)?;

    let mut pairs = config.pairs.clone();
    if let Some(sweep) = &config.perturbations {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let names: Vec<String> = measures.keys().cloned().collect();
        for name in names {
            for k in 0..sweep.count {
                let partner = format!("{name}~{k}");
                let m = perturb(&measures[&name], &model, sweep, &mut rng)?;
                measures.insert(partner.clone(), m);
                pairs.push([name.clone(), partner]);
            }
        }
    }

    let settings = Settings {
        quad_particles_per_step: config.quad_particles_per_step,
        merge_tolerance: config.merge_tolerance,
        ..Settings::new(config.dt, config.horizon)
    };
    let names: Vec<&String> = measures.keys().collect();
    let trajectories: Vec<Traj> =
        names.par_iter().map(|n| simulate_with(&measures[*n], &model, &settings)).collect::<Result<_, _>>()?;
    let by_name: BTreeMap<&str, &Traj> = names.iter().map(|n| n.as_str()).zip(&trajectories).collect();

    let out = base.join(&config.out_dir);
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let mut files = Vec::new();
    let mut emit = |name: String, csv: &Csv| -> CliResult<()> {
        let path = out.join(name);
        csv.write(&path)?;
        files.push(path);
        Ok(())
    };
    for (name, traj) in &by_name {
        emit(format!("trajectory_{name}.csv"), &trajectory_csv(traj))?;
    }

    let stable = !model.has_growth();
    let tables: Vec<_> = pairs
        .par_iter()
        .map(|[a, b]| {
            let (ta, tb) = (by_name[a.as_str()], by_name[b.as_str()]);
            let metrics = metrics_csv(&config.metrics, &model, ta, tb);
            let stability = if stable { Some(stability_table(&model, ta, tb)?) } else { None };
            Ok((metrics, stability))
        })
        .collect::<CliResult<_>>()?;

    let mut summaries = Vec::new();
    for ([a, b], (metrics, stability)) in pairs.iter().zip(tables) {
        emit(format!("metrics_{a}_{b}.csv"), &metrics)?;
        let (violations, min_margin) = match stability {
            Some(s) => {
                emit(format!("stability_{a}_{b}.csv"), &s.csv)?;
                (s.violations, Some(s.min_margin).filter(|m| m.is_finite()))
            }
            None => (0, None),
        };
        summaries.push(PairSummary { first: a.clone(), second: b.clone(), violations, min_margin });
    }
    let summary_path = out.join("summary.json");
    let text = serde_json::to_string_pretty(&summaries).expect("summary serializes");
    fs::write(&summary_path, text + "\n").map_err(|e| CliError::io(&summary_path, e))?;
    files.push(summary_path);
    Ok(RunReport { files, pairs: summaries })
}

fn metrics_csv(kinds: &[MetricKind], model: &Model, a: &Traj, b: &Traj) -> Csv {
    let mut header = vec!["t"];
    header.extend(kinds.iter().map(|k| k.name()));
    let mut csv = Csv::new(&header);
    for ((t, ma), mb) in a.times.iter().zip(&a.snapshots).zip(&b.snapshots) {
        let mut row = vec![Cell::from(*t)];
        // Wasserstein is left empty where the masses differ
        row.extend(kinds.iter().map(|&k| Cell::from(distance(k, ma, mb, Some(model.grid())).ok())));
        csv.row(&row);
    }
    csv
}
