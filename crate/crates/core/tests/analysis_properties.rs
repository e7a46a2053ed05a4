mod common;

use std::f64::consts::PI;

use lurye_core::analysis::lp::{LinearProgram, LpOutcome};
use lurye_core::analysis::{
    all_period_limit_test, gain_bound_with, lp_phase_objective, phase_gap_test, quadratic_coefficients,
    rational_phase_limit_test, search_multiplier, suitability_margin, BoundOptions, Channel, LpOptions, SearchForm,
    SearchObjective, SearchSpec, Table1Variant,
};
use lurye_core::lti::grid::FrequencyGrid;
use lurye_core::lti::{Domain, FrequencyResponse, RationalTransferFunction};
use lurye_core::multipliers::{Multiplier, MultiplierClass, TapMultiplier};
use lurye_core::Error;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn slope(i: u8) -> f64 {
    [1.0, 2.0, f64::INFINITY][i as usize % 3]
}

/// `c + H` with `c` well above the peak of `|H|`, so `Re > 0` everywhere.
fn positive_real(seed: u64, domain: Domain) -> RationalTransferFunction {
    let mut r = common::rng(seed);
    let h = common::stable_tf(&mut r, domain, 4);
    let grid = FrequencyGrid::default_for(domain, Some(if domain == Domain::Discrete { 2048 } else { 100 }));
    let peak = grid.points().iter().map(|&w| h.eval(w).unwrap().norm()).fold(0.0, f64::max);
    h.plus_constant(1.5 * peak + 0.1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadratic_root_residual(seed in any::<u64>(), c in 0.0f64..0.9, lag in 1i64..3, ki in 0u8..3) {
        let mut r = common::rng(seed);
        let g = common::stable_tf(&mut r, Domain::Discrete, 3).with_gain(r.random_range(0.05..0.5));
        let m: Multiplier = TapMultiplier::discrete_tap(lag, c, MultiplierClass::Ozf).unwrap().into();
        let k = slope(ki);
        let grid = FrequencyGrid::discrete_default(1024);
        prop_assume!(suitability_margin(&m, &g, k, &grid).unwrap().suitable);
        for ch in Channel::ALL.into_iter().filter(|c| c.is_quadratic()) {
            for variant in [Table1Variant::Printed, Table1Variant::Eq21] {
                let rep = gain_bound_with(&m, &g, k, ch, &grid, BoundOptions { variant, refine: true }).unwrap();
                let w = rep.argmax_frequency;
                let (a, b, cc) = quadratic_coefficients(ch, variant, m.response(w).unwrap(), g.eval(w).unwrap(),
                    if k.is_infinite() { 0.0 } else { 1.0 / k });
                let h = rep.sup;
                prop_assert!((a * h * h - b * h - cc).abs() <= 1e-9 * (a * h * h).max(1.0), "{ch}");
                prop_assert!(rep.bound >= 0.0);
            }
        }
    }

    #[test]
    fn enlarging_the_grid_never_lowers_a_sup(seed in any::<u64>(), n in 50usize..900) {
        let g = positive_real(seed, Domain::Discrete);
        let m = Multiplier::identity(Domain::Discrete);
        let a = FrequencyGrid::discrete_default(1000);
        let b = a.merged(&FrequencyGrid::uniform(0.0, PI, n).unwrap());
        let opts = BoundOptions { variant: Table1Variant::Printed, refine: false };
        for ch in Channel::ALL {
            let ra = gain_bound_with(&m, &g, 1.0, ch, &a, opts).unwrap();
            let rb = gain_bound_with(&m, &g, 1.0, ch, &b, opts).unwrap();
            prop_assert!(rb.bound >= ra.bound - 1e-12, "{ch}: {} < {}", rb.bound, ra.bound);
        }
    }

    #[test]
    fn identity_multiplier_r2y2_is_inverse_real_part(seed in any::<u64>()) {
        let g = positive_real(seed, Domain::Discrete);
        let grid = FrequencyGrid::discrete_default(2048);
        let opts = BoundOptions { variant: Table1Variant::Printed, refine: false };
        let rep = gain_bound_with(&Multiplier::identity(Domain::Discrete), &g, f64::INFINITY,
            Channel::r2_y2(), &grid, opts).unwrap();
        let min_re = grid.points().iter().map(|&w| g.eval(w).unwrap().re).fold(f64::INFINITY, f64::min);
        prop_assert!((rep.bound - 1.0 / min_re).abs() <= 1e-12 * rep.bound);
    }

    #[test]
    fn positive_real_plants_pass_every_phase_test(seed in any::<u64>(), d in any::<bool>(), period in 0.5f64..8.0) {
        let domain = if d { Domain::Discrete } else { Domain::Continuous };
        let g = positive_real(seed, domain);
        let grid = FrequencyGrid::default_for(domain, Some(if d { 2048 } else { 100 }));
        prop_assume!(all_period_limit_test(&g, f64::INFINITY, &grid).unwrap().holds);
        let period = if d { period.ceil() + 1.0 } else { period };
        prop_assert!(phase_gap_test(&g, f64::INFINITY, period, &grid, &[1, 2, 3]).unwrap().is_none());
        prop_assert!(rational_phase_limit_test(&g, f64::INFINITY, period, 10, 10).unwrap().is_empty());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// A phase witness at period N rules out every lattice multiplier of
    /// period N, so the lattice search must come back empty.
    #[test]
    fn phase_witness_means_lattice_search_fails(seed in any::<u64>(), n in 2u64..6) {
        let mut r = common::rng(seed);
        let g = common::delayed_discrete(&mut r, 3, 3);
        let grid = FrequencyGrid::discrete_default(1024);
        let period = n as f64;
        let rational = rational_phase_limit_test(&g, 1.0, period, 2 * n, 6).unwrap();
        let gap = phase_gap_test(&g, 1.0, period, &grid, &[1]).unwrap();
        prop_assume!(!rational.is_empty() || gap.is_some());
        let mut spec = SearchSpec::new(
            SearchForm::AltshullerLattice { period, multiples: vec![1, -1] },
            SearchObjective::Margin,
            1.0,
        );
        spec.step = 0.05;
        match search_multiplier(&g, &grid, &spec) {
            Err(Error::NoFeasibleMultiplier) => {}
            other => prop_assert!(false, "search found {other:?}"),
        }
    }

    /// With two subharmonics, the exclusion LP has a single weight and
    /// reduces to a phase limit of 3 pi / 4 at the quarter frequency.
    #[test]
    fn two_point_lp_matches_quarter_frequency_phase(seed in any::<u64>(), p in 0u8..2, n in 0u64..3, period in 0.5f64..4.0) {
        prop_assume!(p == 0 || n >= 1);
        let mut r = common::rng(seed);
        let g = common::stable_tf(&mut r, Domain::Continuous, 4).with_gain(r.random_range(1.0..30.0));
        let sol = lp_phase_objective(&g, 1.0, period, 2, &[p], &[n], &LpOptions::default()).unwrap();
        let ratio = n as f64 + if p == 0 { 0.25 } else { -0.25 };
        let w = ratio * 2.0 * PI / period;
        prop_assert!((sol.frequencies[0] - w).abs() < 1e-12 * (1.0 + w));
        let phase = (g.eval(w).unwrap() + 1.0).arg().abs();
        prop_assume!((phase - 0.75 * PI).abs() > 1e-6);
        prop_assert_eq!(sol.feasible, phase > 0.75 * PI, "phase {}", phase);
    }

    #[test]
    fn simplex_matches_vertex_enumeration(seed in any::<u64>(), beta in 3usize..5, period in 0.5f64..4.0) {
        let mut r = common::rng(seed);
        let g = common::stable_tf(&mut r, Domain::Continuous, 4).with_gain(r.random_range(1.0..50.0));
        let p: Vec<u8> = (1..beta).map(|_| r.random_range(0..2)).collect();
        let n: Vec<u64> = p.iter().map(|&p| r.random_range(p as u64..3)).collect();
        let lags: Vec<i64> = (-8..=8).filter(|&l| l != 0).collect();
        let opts = LpOptions { lags: lags.clone(), ..LpOptions::default() };
        let sol = lp_phase_objective(&g, 1.0, period, beta, &p, &n, &opts).unwrap();

        let rows: Vec<Vec<f64>> = lags.iter().map(|&l| {
            sol.frequencies.iter().map(|&w| {
                let gw = g.eval(w).unwrap() + 1.0;
                (gw * (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -w * l as f64 * period))).re
            }).collect()
        }).collect();
        let oracle = vertex_min_max(&rows);
        let scale = rows.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
        prop_assert!((sol.objective - oracle).abs() <= 1e-9 * scale, "{} vs {}", sol.objective, oracle);
    }

    #[test]
    fn simplex_on_random_bounded_programs(seed in any::<u64>(), nv in 2usize..4, nr in 2usize..6) {
        let mut r = common::rng(seed);
        let a_ub: Vec<Vec<f64>> = (0..nr).map(|_| (0..nv).map(|_| r.random_range(0.1..2.0)).collect()).collect();
        let b_ub: Vec<f64> = (0..nr).map(|_| r.random_range(0.5..3.0)).collect();
        let c: Vec<f64> = (0..nv).map(|_| -r.random_range(0.1..2.0)).collect();
        let lp = LinearProgram { c: c.clone(), a_ub: a_ub.clone(), b_ub: b_ub.clone(), ..Default::default() };
        let LpOutcome::Optimal { objective, x } = lp.solve().unwrap() else {
            return Err(TestCaseError::fail("bounded feasible program"));
        };
        for (row, b) in a_ub.iter().zip(&b_ub) {
            prop_assert!(row.iter().zip(&x).map(|(a, x)| a * x).sum::<f64>() <= b + 1e-9);
        }
        // Every vertex of {x >= 0, A x <= b} is no better.
        let mut cons: Vec<(Vec<f64>, f64)> = a_ub.iter().cloned().zip(b_ub.iter().copied()).collect();
        for j in 0..nv {
            let mut e = vec![0.0; nv];
            e[j] = -1.0;
            cons.push((e, 0.0));
        }
        let mut best = f64::INFINITY;
        for subset in combinations(cons.len(), nv) {
            let a = nalgebra::DMatrix::from_fn(nv, nv, |i, j| cons[subset[i]].0[j]);
            let b = nalgebra::DVector::from_fn(nv, |i, _| cons[subset[i]].1);
            let Some(v) = a.lu().solve(&b) else { continue };
            if cons.iter().all(|(row, rb)| row.iter().zip(v.iter()).map(|(a, x)| a * x).sum::<f64>() <= rb + 1e-9) {
                best = best.min(c.iter().zip(v.iter()).map(|(c, x)| c * x).sum());
            }
        }
        prop_assert!((objective - best).abs() < 1e-9, "{objective} vs {best}");
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// `min over the simplex of max_l rows[l] . lambda` by enumerating the
/// vertices of `{(lambda, t): rows lambda <= t, lambda >= 0, sum lambda = 1}`.
fn vertex_min_max(rows: &[Vec<f64>]) -> f64 {
    let m = rows[0].len();
    // Constraints as (coefficients over [lambda, t], rhs), all of the form <=.
    let mut cons: Vec<(Vec<f64>, f64)> = rows
        .iter()
        .map(|r| {
            let mut c = r.clone();
            c.push(-1.0);
            (c, 0.0)
        })
        .collect();
    for j in 0..m {
        let mut c = vec![0.0; m + 1];
        c[j] = -1.0;
        cons.push((c, 0.0));
    }
    let mut best = f64::INFINITY;
    for subset in combinations(cons.len(), m) {
        let mut a = nalgebra::DMatrix::zeros(m + 1, m + 1);
        let mut b = nalgebra::DVector::zeros(m + 1);
        for (i, &s) in subset.iter().enumerate() {
            for j in 0..=m {
                a[(i, j)] = cons[s].0[j];
            }
            b[i] = cons[s].1;
        }
        for j in 0..m {
            a[(m, j)] = 1.0;
        }
        b[m] = 1.0;
        let Some(v) = a.lu().solve(&b) else { continue };
        let ok = cons.iter().all(|(c, rhs)| c.iter().zip(v.iter()).map(|(a, x)| a * x).sum::<f64>() <= rhs + 1e-9);
        if ok {
            best = best.min(v[m]);
        }
    }
    best
}
