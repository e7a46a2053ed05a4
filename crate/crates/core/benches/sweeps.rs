use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::{DMatrix, DVector, RowDVector};
use std::hint::black_box;

use lurye_core::analysis::{search_multiplier, Channel, SearchForm, SearchObjective, SearchSpec, Table1Variant};
use lurye_core::exec::{map_indexed_with, ExecMode};
use lurye_core::lti::grid::FrequencyGrid;
use lurye_core::lti::{Domain, RationalTransferFunction, StateSpaceRealization};
use lurye_core::multipliers::{MultiplierClass, TapMultiplier};
use lurye_core::sim::{simulate_discrete_with, LuryeSystem, Nonlinearity, SignalSpec, SimOptions};

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn plant(g: f64) -> RationalTransferFunction {
    RationalTransferFunction::discrete(&[2.0, 0.92], &[1.0, -0.5, 0.0], g).unwrap()
}

fn frequency_sweep(c: &mut Criterion) {
    let g = plant(0.7);
    let m = TapMultiplier::new(Domain::Discrete, vec![(5.0, 0.16), (-10.0, 0.04)], MultiplierClass::Ozf).unwrap();
    let grid = FrequencyGrid::discrete_default(1 << 16);
    let pts = grid.points();
    let mut group = c.benchmark_group("frequency_sweep");
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| {
                let v = map_indexed_with(mode, pts.len(), |i| {
                    let w = pts[i];
                    (m.eval(w) * (g.eval(w).unwrap() + 1.0)).re
                });
                black_box(v.into_iter().fold(f64::INFINITY, f64::min))
            })
        });
    }
    group.finish();
}

fn coefficient_search(c: &mut Criterion) {
    let g = plant(0.7);
    let grid = FrequencyGrid::discrete_default(1024);
    let mut group = c.benchmark_group("coefficient_search");
    group.sample_size(10);
    for (name, mode) in MODES {
        let mut spec = SearchSpec::new(
            SearchForm::OneTapCausal { lag: 1.0 },
            SearchObjective::Bound { channel: Channel::r2_y2(), variant: Table1Variant::Printed },
            1.0,
        );
        spec.mode = mode;
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(search_multiplier(&g, &grid, &spec).unwrap().coefficients))
        });
    }
    group.finish();
}

fn initial_condition_sweep(c: &mut Criterion) {
    let g = 0.7;
    let plant = StateSpaceRealization::new(
        Domain::Discrete,
        DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 1.0, 0.0]),
        DVector::from_vec(vec![2.0 * g, 0.0]),
        RowDVector::from_vec(vec![1.0, 0.46]),
        0.0,
    )
    .unwrap();
    let base = LuryeSystem::new(
        plant,
        Nonlinearity::Deadzone { width: 0.2 },
        SignalSpec::Zero,
        SignalSpec::PeriodicTable { samples: vec![1.0, 0.6, -0.6, -1.0, 0.0], hold: 1.0 },
    );
    let opts = SimOptions { discard: 5000, ..SimOptions::default() };
    let mut group = c.benchmark_group("initial_condition_sweep");
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| {
                let tails = map_indexed_with(mode, 64, |i| {
                    let x0 = vec![(i % 8) as f64 - 3.5, (i / 8) as f64 - 3.5];
                    let sys = base.clone().with_x0(x0);
                    simulate_discrete_with(&sys, 5, &opts).unwrap().y2
                });
                black_box(tails)
            })
        });
    }
    group.finish();
}

criterion_group!(benches, frequency_sweep, coefficient_search, initial_condition_sweep);
criterion_main!(benches);
