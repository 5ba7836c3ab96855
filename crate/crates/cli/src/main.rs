use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mtlab_cli::commands::{
    constants_json, example_table, indexed_path, simulate_model, stability_pairs, write_snapshots, Example, PairSpec,
};
use mtlab_cli::format::sig15;
use mtlab_cli::input::{json_arg, json_file};
use mtlab_cli::report::trajectory_csv;
use mtlab_cli::reproduce::{check_names, exit_code, render, reproduce_all, CoreMetrics};
use mtlab_cli::{resolve_workers, run, CliError, CliResult, ExperimentConfig, EXIT_CONFIG, EXIT_OK, EXIT_VIOLATION};
use mtlab_core::{distance, Grid, Measure, MetricKind, ModelFile};

#[derive(Parser)]
#[command(name = "mtlab", version, about = "Measure distances and transport simulations with transmission conditions")]
struct Cli {
    /// Worker threads (MTLAB_WORKERS takes precedence).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distance between two measures.
    Metric {
        #[arg(long)]
        kind: MetricKind,
        /// Breakpoints, needed for `mt`.
        #[arg(long)]
        grid: Option<String>,
        /// `[[x, w], ...]` inline or a file path.
        #[arg(long)]
        m1: String,
        #[arg(long)]
        m2: String,
    },
    /// Runs the particle solver and writes `t,total_mass,v,atoms_count`.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        /// Name of the initial measure when the model file holds several.
        #[arg(long)]
        measure: Option<String>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Also dump every k-th snapshot as JSON next to the CSV.
        #[arg(long)]
        snapshot_every: Option<usize>,
    },
    /// Analytic against simulated distance for one of the worked examples.
    Examples {
        /// free-atom, constant-outflow or speed-coupled
        #[arg(long)]
        which: Example,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Stability table for pairs of initial measures; exits 2 on a violated bound.
    Stability {
        #[arg(long)]
        model: PathBuf,
        /// `[["a", "b"], {"mu1": [...], "mu2": [...]}, ...]` inline or a file path.
        #[arg(long, conflicts_with_all = ["m1", "m2"])]
        pairs: Option<String>,
        /// Measure names from the model file.
        #[arg(long, requires = "m2")]
        m1: Option<String>,
        #[arg(long, requires = "m1")]
        m2: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Stability constants as JSON.
    Constants {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, requires = "m2")]
        m1: Option<String>,
        #[arg(long, requires = "m1")]
        m2: Option<String>,
    },
    /// Runs an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Every reference check, as a pass/fail table.
    ReproduceAll {
        #[arg(long)]
        list: bool,
        #[arg(long, default_value_t = 20_240_601)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    // clap exits 2 on usage errors; 2 is reserved for violated bounds
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK });
        }
    };
    let code = match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    };
    ExitCode::from(code)
}

fn execute(cli: Cli) -> CliResult<u8> {
    let workers = resolve_workers(cli.workers)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::config("--workers", e.to_string()))?;
    pool.install(|| dispatch(cli.command))
}

fn dispatch(command: Command) -> CliResult<u8> {
    match command {
        Command::Metric { kind, grid, m1, m2 } => {
            let grid: Option<Grid> = grid.map(|g| json_arg("--grid", &g)).transpose()?;
            let (a, b): (Measure, Measure) = (json_arg("--m1", &m1)?, json_arg("--m2", &m2)?);
            if kind == MetricKind::MeasureTransmission && grid.is_none() {
                return Err(CliError::config("--grid", "required for the mt metric"));
            }
            println!("{}", sig15(distance(kind, &a, &b, grid.as_ref())?));
            Ok(EXIT_OK)
        }
        Command::Simulate { model, measure, dt, horizon, out, snapshot_every } => {
            let file: ModelFile = json_file("--model", &model)?;
            let traj = simulate_model(&file, measure.as_deref(), dt, horizon)?;
            trajectory_csv(&traj).write(&out)?;
            if let Some(every) = snapshot_every {
                write_snapshots(&traj, every, &out)?;
            }
            Ok(EXIT_OK)
        }
        Command::Examples { which, out, dt } => {
            example_table(which, dt)?.write(&out)?;
            Ok(EXIT_OK)
        }
        Command::Stability { model, pairs, m1, m2, out, dt, horizon } => {
            let file: ModelFile = json_file("--model", &model)?;
            let pairs: Vec<PairSpec> = match (pairs, m1, m2) {
                (Some(p), _, _) => json_arg("--pairs", &p)?,
                (None, Some(a), Some(b)) => vec![PairSpec::Names([a, b])],
                _ => first_two(&file)?,
            };
            let tables = stability_pairs(&file, &pairs, dt, horizon)?;
            let mut violations = 0;
            for (k, t) in tables.iter().enumerate() {
                t.csv.write(&indexed_path(&out, k, tables.len()))?;
                violations += t.violations;
                println!("pair {k}: {} violations, min margin {}", t.violations, sig15(t.min_margin));
            }
            Ok(if violations == 0 { EXIT_OK } else { EXIT_VIOLATION })
        }
        Command::Constants { model, m1, m2 } => {
            let file: ModelFile = json_file("--model", &model)?;
            let names = m1.as_deref().zip(m2.as_deref());
            let value = constants_json(&file, names)?;
            println!("{}", serde_json::to_string_pretty(&value).expect("json value serializes"));
            Ok(EXIT_OK)
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let base = config.parent().unwrap_or(Path::new("."));
            let report = run(&cfg, base)?;
            for p in &report.pairs {
                println!("{} vs {}: {} violations", p.first, p.second, p.violations);
            }
            Ok(if report.violations() == 0 { EXIT_OK } else { EXIT_VIOLATION })
        }
        Command::ReproduceAll { list, seed } => {
            if list {
                for name in check_names() {
                    println!("{name}");
                }
                return Ok(EXIT_OK);
            }
            let results = reproduce_all(&CoreMetrics, seed);
            print!("{}", render(&results));
            Ok(exit_code(&results))
        }
    }
}

fn first_two(file: &ModelFile) -> CliResult<Vec<PairSpec>> {
    let names: Vec<&String> = file.initial.keys().take(2).collect();
    match names[..] {
        [a, b] => Ok(vec![PairSpec::Names([a.clone(), b.clone()])]),
        _ => Err(CliError::config("initial", "need two measures, or give --pairs or --m1/--m2")),
    }
}
