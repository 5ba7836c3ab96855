//! The `reproduce-all` check table.

use std::time::Instant;

use mtlab_core::closed_form::{eval_example_1_1, eval_example_4_5, eval_example_4_6, AnalyticSolution};
use mtlab_core::metrics::MetricKind;
use mtlab_core::stability::{
    check_appendix_inequalities, compute_global_constants, discretization_allowance, global_bound, PairSeries,
};
use mtlab_core::{
    flat_metric, metric_oracle, mt_metric, norm_distance, simulate, wasserstein1, Grid, Measure, Model, Table,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::format::sig15;

/// Distances used by the example checks; swapped out to test that a wrong metric is
/// caught.
pub trait MetricProvider: Sync {
    fn norm(&self, a: &Measure, b: &Measure) -> f64;
    fn flat(&self, a: &Measure, b: &Measure) -> f64;
    fn mt(&self, a: &Measure, b: &Measure, grid: &Grid) -> f64;
    fn w1(&self, a: &Measure, b: &Measure) -> Option<f64>;
}

pub struct CoreMetrics;

impl MetricProvider for CoreMetrics {
    fn norm(&self, a: &Measure, b: &Measure) -> f64 {
        norm_distance(a, b)
    }

    fn flat(&self, a: &Measure, b: &Measure) -> f64 {
        flat_metric(a, b)
    }

    fn mt(&self, a: &Measure, b: &Measure, grid: &Grid) -> f64 {
        mt_metric(a, b, grid)
    }

    fn w1(&self, a: &Measure, b: &Measure) -> Option<f64> {
        wasserstein1(a, b).ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

type CheckFn = fn(&dyn MetricProvider, u64) -> (bool, String);

pub const CHECKS: [(&str, CheckFn); 11] = [
    ("unit-atom-shifts", unit_atom_shifts),
    ("nearby-atoms", nearby_atoms),
    ("free-atom", free_atom),
    ("constant-outflow", constant_outflow),
    ("speed-coupled", speed_coupled),
    ("mass-conservation", mass_conservation),
    ("oracle-equivalence", oracle_equivalence),
    ("stability-sweep", stability_sweep),
    ("nonlinear-unit-speed", nonlinear_unit_speed),
    ("convergence-order", convergence_order),
    ("exponential-inequalities", exponential_inequalities),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.0).collect()
}

/// Runs every check in order; checks run concurrently on the current rayon pool.
pub fn reproduce_all(metrics: &dyn MetricProvider, seed: u64) -> Vec<CheckResult> {
    CHECKS.par_iter().map(|(name, f)| timed(name, *f, metrics, seed)).collect()
}

/// Runs the named checks only, in the given order.
pub fn reproduce_selected(names: &[&str], metrics: &dyn MetricProvider, seed: u64) -> Option<Vec<CheckResult>> {
    let picked: Vec<&(&'static str, CheckFn)> =
        names.iter().map(|n| CHECKS.iter().find(|c| c.0 == *n)).collect::<Option<_>>()?;
    Some(picked.par_iter().map(|(name, f)| timed(name, *f, metrics, seed)).collect())
}

fn timed(name: &'static str, f: CheckFn, metrics: &dyn MetricProvider, seed: u64) -> CheckResult {
    let start = Instant::now();
    let (pass, detail) = f(metrics, seed);
    CheckResult { name, pass, detail, seconds: start.elapsed().as_secs_f64() }
}

pub fn exit_code(results: &[CheckResult]) -> u8 {
    if results.iter().all(|r| r.pass) {
        crate::EXIT_OK
    } else {
        crate::EXIT_VIOLATION
    }
}

pub fn render(results: &[CheckResult]) -> String {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for r in results {
        let status = if r.pass { "PASS" } else { "FAIL" };
        out.push_str(&format!("{status}  {:width$}  {}\n", r.name, r.detail));
    }
    let passed = results.iter().filter(|r| r.pass).count();
    out.push_str(&format!("{passed}/{} checks passed\n", results.len()));
    out
}

fn d(x: f64) -> Measure {
    Measure::dirac(x)
}

fn grid(p: &[f64]) -> Grid {
    Grid::new(p.to_vec()).expect("fixed grid")
}

fn max_err(pairs: &[(f64, f64)]) -> f64 {
    pairs.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn unit_atom_shifts(m: &dyn MetricProvider, _: u64) -> (bool, String) {
    let g = grid(&[0.0, 1.0, 2.0]);
    let (r, l) = (d(1.25), d(0.75));
    let w = |a: &Measure, b: &Measure| m.w1(a, b).unwrap_or(f64::NAN);
    let err = max_err(&[
        (m.norm(&d(1.0), &r), 2.0),
        (m.norm(&d(1.0), &l), 2.0),
        (m.mt(&d(1.0), &r, &g), 2.0),
        (m.mt(&d(1.0), &l, &g), 0.25),
        (w(&d(1.0), &r), 0.25),
        (w(&d(1.0), &l), 0.25),
        (m.flat(&d(1.0), &r), 0.25),
        (m.flat(&d(1.0), &l), 0.25),
    ]);
    (err <= 1e-12, format!("max error {}", sig15(err)))
}

fn nearby_atoms(m: &dyn MetricProvider, _: u64) -> (bool, String) {
    let eps = 0.1;
    let (a, b) = (d(0.0), d(eps));
    let err = max_err(&[(m.norm(&a, &b), 2.0), (m.flat(&a, &b), eps), (m.w1(&a, &b).unwrap_or(f64::NAN), eps)]);
    (err <= 1e-12, format!("max error {}", sig15(err)))
}

fn free_atom(m: &dyn MetricProvider, _: u64) -> (bool, String) {
    let g = grid(&[0.0, 1.0, 2.0]);
    let eps = 0.1;
    let mut pairs = Vec::new();
    for k in 0..=5 {
        let t = 0.1 * k as f64;
        let Ok((a, b)) = eval_example_1_1(t, eps, &g) else { return (false, format!("t = {t} out of range")) };
        pairs.push((m.flat(&a, &b), t + eps));
    }
    let (a, b) = eval_example_1_1(0.0, eps, &g).expect("t = 0 in range");
    pairs.push((m.mt(&a, &b, &g), 2.0));
    let err = max_err(&pairs);
    (err <= 1e-12, format!("max error {}", sig15(err)))
}

fn constant_outflow(m: &dyn MetricProvider, _: u64) -> (bool, String) {
    let g = grid(&[0.0, 1.0, 2.0]);
    let (eps, c1) = (0.2, 1.0_f64);
    let exact = 2.0 * (1.0 - (-c1 * eps).exp());
    let Ok((a, b)) = eval_example_4_5(eps, eps, c1, 2000, &g) else { return (false, "out of range".into()) };
    let analytic = (m.mt(&a, &b, &g) - exact).abs() / exact;
    let sol = AnalyticSolution::ConstantOutflow { eps, c1, m: 2000 };
    let (Ok(model), Ok((a0, b0))) = (sol.model(&g), sol.initial(&g)) else { return (false, "setup failed".into()) };
    let dt = eps / 400.0;
    let (Ok(ta), Ok(tb)) = (simulate(&a0, &model, eps, dt, 1), simulate(&b0, &model, eps, dt, 1)) else {
        return (false, "simulation failed".into());
    };
    let simulated = (m.mt(ta.last(), tb.last(), &g) - exact).abs() / exact;
    (
        analytic <= 1e-3 && simulated <= 5e-2,
        format!("relative error analytic {}, simulated {}", sig15(analytic), sig15(simulated)),
    )
}

fn speed_coupled(m: &dyn MetricProvider, _: u64) -> (bool, String) {
    let g = grid(&[0.0, 1.0, 3.0]);
    let (eps, g_low, y) = (0.05, 0.5, 1.5);
    let t_bar = eps / g_low;
    let expected = 1.0 / g_low - 1.0;
    let (Ok((a0, b0)), Ok((a, b))) =
        (eval_example_4_6(0.0, eps, g_low, y, &g), eval_example_4_6(t_bar, eps, g_low, y, &g))
    else {
        return (false, "out of range".into());
    };
    let rho0 = m.mt(&a0, &b0, &g);
    let analytic = (m.mt(&a, &b, &g) / rho0 - expected).abs();
    let sol = AnalyticSolution::TwoAtomSpeedCoupled { eps, g_low, y };
    let Ok(model) = sol.model(&g) else { return (false, "setup failed".into()) };
    let dt = t_bar / 400.0;
    let (Ok(ta), Ok(tb)) = (simulate(&a0, &model, t_bar, dt, 1), simulate(&b0, &model, t_bar, dt, 1)) else {
        return (false, "simulation failed".into());
    };
    let simulated = (m.mt(ta.last(), tb.last(), &g) / rho0 - expected).abs() / expected;
    (
        analytic <= 1e-9 && simulated <= 5e-2,
        format!("ratio error analytic {}, simulated {}", sig15(analytic), sig15(simulated)),
    )
}

fn family(kind: usize, rng: &mut ChaCha8Rng) -> Model {
    let g1 = match kind {
        0 => Table::constant(1.0),
        1 => Table::from_pairs(&[(0.0, 1.0), (2.0, rng.gen_range(1.2..2.0))]).expect("increasing knots"),
        _ => Table::from_pairs(&[(0.0, rng.gen_range(1.2..2.0)), (2.0, 0.8)]).expect("increasing knots"),
    };
    let mut c: Vec<Table> = (0..3)
        .map(|_| match kind {
            2 => Table::from_pairs(&[(0.0, rng.gen_range(0.0..1.5)), (2.0, rng.gen_range(0.0..1.5))]).expect("knots"),
            _ => Table::constant(rng.gen_range(0.0..1.5)),
        })
        .collect();
    c.push(Table::constant(0.0));
    Model::new(grid(&[0.0, 1.0, 2.0, 3.0]), g1, Table::constant(0.0), vec![], c).expect("family satisfies assumptions")
}

fn perturbed_pair(rng: &mut ChaCha8Rng) -> (Measure, Measure) {
    let k = rng.gen_range(1..=4);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for _ in 0..k {
        let x: f64 = if rng.gen_bool(0.3) { rng.gen_range(0..3) as f64 } else { rng.gen_range(0.0..3.0) };
        let w: f64 = rng.gen_range(0.1..0.6);
        a.push((x, w));
        b.push(((x + rng.gen_range(-0.05..0.05)).clamp(0.0, 3.0), w * rng.gen_range(0.95..1.05)));
    }
    (Measure::new(a).expect("valid atoms"), Measure::new(b).expect("valid atoms"))
}

fn mass_conservation(_: &dyn MetricProvider, seed: u64) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jobs: Vec<(Model, Measure)> = (0..30).map(|i| (family(i % 3, &mut rng), perturbed_pair(&mut rng).0)).collect();
    let worst = jobs
        .par_iter()
        .map(|(model, m0)| {
            let tv = m0.total_variation();
            simulate(m0, model, 5.0, 0.01, 2)
                .map(|tr| tr.snapshots.iter().map(|m| (m.total_variation() - tv).abs()).fold(0.0, f64::max))
                .unwrap_or(f64::INFINITY)
        })
        .reduce(|| 0.0, f64::max);
    (worst <= 1e-9, format!("30 runs, max |TV(t) - TV(0)| = {}", sig15(worst)))
}

fn oracle_equivalence(m: &dyn MetricProvider, seed: u64) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let g = grid(&[0.0, 1.0, 2.0, 3.0]);
    let atom = |rng: &mut ChaCha8Rng| {
        let x = if rng.gen_bool(0.5) { rng.gen_range(-2..=14) as f64 * 0.25 } else { rng.gen_range(-0.5..3.5) };
        (x, rng.gen_range(0.0..2.0))
    };
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let k = rng.gen_range(1..=5);
        let split = rng.gen_range(0..=k);
        let a = Measure::new((0..split).map(|_| atom(&mut rng)).collect::<Vec<_>>()).expect("valid atoms");
        let b = Measure::new((split..k).map(|_| atom(&mut rng)).collect::<Vec<_>>()).expect("valid atoms");
        let flat = metric_oracle(MetricKind::Flat, &a, &b, None).unwrap_or(f64::NAN);
        let mt = metric_oracle(MetricKind::MeasureTransmission, &a, &b, Some(&g)).unwrap_or(f64::NAN);
        worst = worst.max((m.flat(&a, &b) - flat).abs()).max((m.mt(&a, &b, &g) - mt).abs());
    }
    (worst <= 1e-9, format!("200 pairs, max |fast - oracle| = {}", sig15(worst)))
}

struct SweepOutcome {
    global: usize,
    nonlinear: usize,
    pairs: usize,
    unit_pairs: usize,
}

fn sweep(seed: u64) -> SweepOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let jobs: Vec<(usize, Model, Measure, Measure)> = (0..60)
        .map(|i| {
            let f = i / 20;
            let model = family(f, &mut rng);
            let (a, b) = perturbed_pair(&mut rng);
            (f, model, a, b)
        })
        .collect();
    let counts: Vec<(usize, usize)> = jobs
        .par_iter()
        .map(|(f, model, a, b)| {
            let Ok(k) = compute_global_constants(model, a, b) else { return (1, 0) };
            let dt = k.t_int / 500.0;
            let (Ok(ta), Ok(tb)) = (simulate(a, model, 3.0 * k.t_int, dt, 1), simulate(b, model, 3.0 * k.t_int, dt, 1))
            else {
                return (1, 0);
            };
            let Ok(series) = PairSeries::new(&ta, &tb, model.grid()) else { return (1, 0) };
            let allowance = discretization_allowance(model, k.tv1 + k.tv2, dt);
            let global = global_bound(&series, &k, allowance).violations();
            let mut nonlinear = 0;
            if *f == 0 {
                let mut acc = 0.0;
                for i in 1..series.len() {
                    acc += (series.v1[i - 1] - series.v2[i - 1]).abs() * dt;
                    let t = series.times[i];
                    if t < k.t_max && acc > t.max(1.0) * series.rho0() + allowance + 1e-9 {
                        nonlinear += 1;
                    }
                }
            }
            (global, nonlinear)
        })
        .collect();
    SweepOutcome {
        global: counts.iter().map(|c| c.0).sum(),
        nonlinear: counts.iter().map(|c| c.1).sum(),
        pairs: jobs.len(),
        unit_pairs: jobs.iter().filter(|j| j.0 == 0).count(),
    }
}

fn stability_sweep(_: &dyn MetricProvider, seed: u64) -> (bool, String) {
    let s = sweep(seed);
    (s.global == 0, format!("{} pairs in 3 families, {} violations", s.pairs, s.global))
}

fn nonlinear_unit_speed(_: &dyn MetricProvider, seed: u64) -> (bool, String) {
    let s = sweep(seed.wrapping_add(100));
    (s.nonlinear == 0, format!("{} unit-speed pairs, {} violations", s.unit_pairs, s.nonlinear))
}

fn convergence_order(m: &dyn MetricProvider, _: u64) -> (bool, String) {
    let g = grid(&[0.0, 1.0, 2.0]);
    let eps = 0.2;
    let sol = AnalyticSolution::ConstantOutflow { eps, c1: 1.0, m: 65_536 };
    let (Ok(model), Ok((a0, _)), Ok((exact, _))) = (sol.model(&g), sol.initial(&g), sol.eval(eps, &g)) else {
        return (false, "setup failed".into());
    };
    let errs: Vec<f64> = [50.0, 100.0, 200.0, 400.0]
        .par_iter()
        .map(|div| simulate(&a0, &model, eps, eps / div, 1).map_or(f64::NAN, |tr| m.mt(tr.last(), &exact, &g)))
        .collect();
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    let pass = ratios.iter().all(|r| (1.5..=3.0).contains(r));
    (pass, format!("error ratios {}", ratios.iter().map(|r| sig15(*r)).collect::<Vec<_>>().join(", ")))
}

fn exponential_inequalities(_: &dyn MetricProvider, seed: u64) -> (bool, String) {
    let report = check_appendix_inequalities(1000, seed.wrapping_add(3));
    (
        report.violations() == 0,
        format!("{} inequalities x 1000 samples, {} violations", report.checks.len(), report.violations()),
    )
}
