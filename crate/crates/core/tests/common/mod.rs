#![allow(dead_code)]

use mtlab_core::{Grid, Measure, Model, Table};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn grid3() -> Grid {
    Grid::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap()
}

/// Atoms on a coarse lattice so coincidences with breakpoints and with each other happen.
pub fn atoms(max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((prop_oneof![(0i32..=12).prop_map(|k| k as f64 * 0.25), -0.5f64..3.5], 0.0f64..2.0), 0..=max)
}

pub fn measure(max: usize) -> impl Strategy<Value = Measure> {
    atoms(max).prop_map(|a| Measure::new(a).unwrap())
}

/// Measure with at most `max` atoms inside `[0, 3]`.
pub fn supported_measure(max: usize) -> impl Strategy<Value = Measure> {
    prop::collection::vec((prop_oneof![(0i32..=3).prop_map(|k| k as f64), 0.0f64..3.0], 0.05f64..1.0), 1..=max)
        .prop_map(|a| Measure::new(a).unwrap())
}

pub fn grid_strategy() -> impl Strategy<Value = Grid> {
    prop::collection::vec(0.2f64..1.5, 1..=4).prop_map(|gaps| {
        let mut x = vec![0.0];
        for g in gaps {
            x.push(x.last().unwrap() + g);
        }
        Grid::new(x).unwrap()
    })
}

/// Coefficient families of the stability sweep on the grid `{0, 1, 2, 3}`:
/// 0 unit speed with constant rates, 1 speed increasing in `v`, 2 speed decreasing in
/// `v` with `v`-dependent rates.
pub fn family(kind: usize, rng: &mut ChaCha8Rng) -> Model {
    let g1 = match kind {
        0 => Table::constant(1.0),
        1 => Table::from_pairs(&[(0.0, 1.0), (2.0, rng.gen_range(1.2..2.0))]).unwrap(),
        _ => Table::from_pairs(&[(0.0, rng.gen_range(1.2..2.0)), (2.0, 0.8)]).unwrap(),
    };
    let mut c: Vec<Table> = (0..3)
        .map(|_| match kind {
            2 => Table::from_pairs(&[(0.0, rng.gen_range(0.0..1.5)), (2.0, rng.gen_range(0.0..1.5))]).unwrap(),
            _ => Table::constant(rng.gen_range(0.0..1.5)),
        })
        .collect();
    c.push(Table::constant(0.0));
    Model::new(grid3(), g1, Table::constant(0.0), vec![], c).unwrap()
}

/// One to four atoms in `[0, 3]`, some on breakpoints, and a copy with positions moved
/// by at most 0.05 and weights scaled by at most 5%.
pub fn perturbed_pair(rng: &mut ChaCha8Rng) -> (Measure, Measure) {
    let k = rng.gen_range(1..=4);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for _ in 0..k {
        let x: f64 = if rng.gen_bool(0.3) { rng.gen_range(0..3) as f64 } else { rng.gen_range(0.0..3.0) };
        let w: f64 = rng.gen_range(0.1..0.6);
        a.push((x, w));
        b.push(((x + rng.gen_range(-0.05..0.05)).clamp(0.0, 3.0), w * rng.gen_range(0.95..1.05)));
    }
    (Measure::new(a).unwrap(), Measure::new(b).unwrap())
}

pub fn random_measure(rng: &mut ChaCha8Rng, max: usize) -> Measure {
    let k = rng.gen_range(1..=max);
    Measure::new((0..k).map(|_| {
        let x: f64 = if rng.gen_bool(0.3) { rng.gen_range(0..=3) as f64 } else { rng.gen_range(0.0..3.0) };
        (x, rng.gen_range(0.05..1.0))
    }))
    .unwrap()
}
