mod common;

use std::f64::consts::LN_2;

use lurye_core::analysis::steady_state_map;
use lurye_core::lti::{Domain, RationalTransferFunction, StateSpaceRealization};
use lurye_core::sim::{
    bias_estimate, lyapunov_exponent, simulate_discrete, simulate_discrete_with, LuryeSystem, LyapunovOptions,
    Nonlinearity, SignalSpec, SimOptions,
};
use nalgebra::{DMatrix, DVector, RowDVector};
use proptest::prelude::*;

const CYCLE: [f64; 5] = [1.0, 0.6, -0.6, -1.0, 0.0];

fn realization(g: f64) -> StateSpaceRealization {
    StateSpaceRealization::new(
        Domain::Discrete,
        DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 1.0, 0.0]),
        DVector::from_vec(vec![2.0 * g, 0.0]),
        RowDVector::from_vec(vec![1.0, 0.46]),
        0.0,
    )
    .unwrap()
}

fn transfer(g: f64) -> RationalTransferFunction {
    RationalTransferFunction::discrete(&[2.0, 0.92], &[1.0, -0.5, 0.0], g).unwrap()
}

fn deadzone_loop(g: f64, r2: SignalSpec) -> LuryeSystem {
    LuryeSystem::new(realization(g), Nonlinearity::Deadzone { width: 0.2 }, SignalSpec::Zero, r2)
}

#[test]
fn realization_matches_transfer_function() {
    let ss = realization(0.7);
    let tf = transfer(0.7);
    for i in 0..200 {
        let w = i as f64 * 0.0157;
        assert!((ss.eval(w).unwrap() - tf.eval(w).unwrap()).norm() < 1e-12);
    }
}

#[test]
fn unforced_linear_part_contracts_at_half() {
    let sys = LuryeSystem::new(realization(0.7), Nonlinearity::zero(), SignalSpec::Zero, SignalSpec::Zero);
    let le = lyapunov_exponent(&sys, &LyapunovOptions { steps: 20_000, d0: 1e-8, discard: 100 }).unwrap();
    assert!((le + LN_2).abs() < 1e-6, "{le}");
}

#[test]
fn certified_loop_has_negative_exponent() {
    let sys = deadzone_loop(0.7, SignalSpec::PeriodicTable { samples: CYCLE.to_vec(), hold: 1.0 });
    let le = lyapunov_exponent(&sys, &LyapunovOptions { steps: 50_000, d0: 1e-8, discard: 1000 }).unwrap();
    assert!(le < -0.05, "{le}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn noise_runs_are_reproducible(seed in any::<u64>(), power in 0.01f64..2.0, g in 0.1f64..0.9) {
        let sys = deadzone_loop(g, SignalSpec::Noise { seed, power, hold: 1.0 });
        let a = simulate_discrete(&sys, 500).unwrap();
        let b = simulate_discrete(&sys, 500).unwrap();
        prop_assert_eq!(&a.y2, &b.y2);
        let other = deadzone_loop(g, SignalSpec::Noise { seed: seed ^ 1, power, hold: 1.0 });
        prop_assert_ne!(&a.u2, &simulate_discrete(&other, 500).unwrap().u2);
    }

    /// Shifting coordinates onto the periodic solution gives an unforced
    /// loop whose trajectories are the original ones minus that solution.
    #[test]
    fn deviation_loop_tracks_difference(x0 in prop::array::uniform2(-5.0f64..5.0), g in 0.2f64..0.8) {
        let table = SignalSpec::PeriodicTable { samples: CYCLE.to_vec(), hold: 1.0 };
        let sys = deadzone_loop(g, table);
        let settle = SimOptions { discard: 5000, state_every: Some(1), ..SimOptions::default() };
        let star = simulate_discrete_with(&sys, 200, &settle).unwrap();
        let xs = &star.states[0].1;
        let orig = simulate_discrete_with(&sys.clone().with_x0(x0.to_vec()), 200,
            &SimOptions { start_time: 5000.0, ..SimOptions::default() }).unwrap();
        let dev = LuryeSystem::new(
            realization(g),
            Nonlinearity::Deviation {
                base: Box::new(Nonlinearity::Deadzone { width: 0.2 }),
                reference: star.u2[..5].to_vec(),
            },
            SignalSpec::Zero,
            SignalSpec::Zero,
        )
        .with_x0(vec![x0[0] - xs[0], x0[1] - xs[1]]);
        let d = simulate_discrete(&dev, 200).unwrap();
        for i in 0..200 {
            prop_assert!((d.y2[i] - (orig.y2[i] - star.y2[i])).abs() < 1e-9);
            prop_assert!((d.u2[i] - (orig.u2[i] - star.u2[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_input_settles_on_steady_state(g in 0.1f64..0.9, r in -3.0f64..3.0) {
        let sys = deadzone_loop(g, SignalSpec::Constant { value: r });
        let run = simulate_discrete_with(&sys, 2000, &SimOptions { discard: 3000, ..SimOptions::default() }).unwrap();
        let ss = steady_state_map(&transfer(g), &Nonlinearity::Deadzone { width: 0.2 }, r).unwrap();
        prop_assert!((bias_estimate(&run.y2) - ss.y2).abs() < 1e-6, "{} vs {}", bias_estimate(&run.y2), ss.y2);
        prop_assert!((bias_estimate(&run.u2) - ss.u2).abs() < 1e-6);
    }
}

#[test]
fn random_stable_plants_realize_correctly() {
    let mut r = common::rng(7);
    let mut checked = 0;
    while checked < 20 {
        let tf = common::delayed_discrete(&mut r, 4, 2);
        if tf.num().len() >= tf.den().len() {
            continue;
        }
        checked += 1;
        let ss = StateSpaceRealization::from_transfer_function(&tf).unwrap();
        let sys = LuryeSystem::new(
            ss,
            Nonlinearity::Saturation { limit: 1.0 },
            SignalSpec::Step { value: 1.0, at: 0.0 },
            SignalSpec::Zero,
        );
        let run = simulate_discrete(&sys, 300).unwrap();
        assert!(run.y2.iter().all(|v| v.abs() <= 1.0));
    }
}
