#![allow(dead_code)]

use std::f64::consts::PI;

use lurye_core::lti::{poly, Domain, RationalTransferFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Monic denominator with `deg` random stable roots.
pub fn stable_den(rng: &mut ChaCha8Rng, domain: Domain, deg: usize) -> Vec<f64> {
    let mut den = vec![1.0];
    let mut d = 0;
    while d < deg {
        let factor = if deg - d >= 2 && rng.random_bool(0.5) {
            d += 2;
            match domain {
                Domain::Continuous => {
                    let re: f64 = rng.random_range(0.05..3.0);
                    let im: f64 = rng.random_range(0.2..4.0);
                    vec![1.0, 2.0 * re, re * re + im * im]
                }
                Domain::Discrete => {
                    let rho: f64 = rng.random_range(0.05..0.9);
                    let th: f64 = rng.random_range(0.1..PI - 0.1);
                    vec![1.0, -2.0 * rho * th.cos(), rho * rho]
                }
            }
        } else {
            d += 1;
            match domain {
                Domain::Continuous => vec![1.0, rng.random_range(0.1..4.0)],
                Domain::Discrete => vec![1.0, -rng.random_range(-0.9..0.9)],
            }
        };
        den = poly::mul(&den, &factor);
    }
    den
}

/// Random stable, proper transfer function of degree `1..=max_deg`.
pub fn stable_tf(rng: &mut ChaCha8Rng, domain: Domain, max_deg: usize) -> RationalTransferFunction {
    let deg = rng.random_range(1..=max_deg);
    let den = stable_den(rng, domain, deg);
    let nd = rng.random_range(0..=deg);
    let mut num: Vec<f64> = (0..=nd).map(|_| rng.random_range(-2.0..2.0)).collect();
    if num[0].abs() < 0.1 {
        num[0] = 1.0;
    }
    RationalTransferFunction::new(domain, num, den, 1.0).unwrap()
}

/// Discrete plant with an extra pure delay of up to `max_delay` samples.
pub fn delayed_discrete(rng: &mut ChaCha8Rng, max_deg: usize, max_delay: usize) -> RationalTransferFunction {
    let g = stable_tf(rng, Domain::Discrete, max_deg);
    let d = rng.random_range(0..=max_delay);
    let mut shift = vec![1.0];
    shift.extend(std::iter::repeat_n(0.0, d));
    let gain = rng.random_range(0.2..3.0);
    RationalTransferFunction::new(Domain::Discrete, g.num().to_vec(), poly::mul(g.den(), &shift), gain).unwrap()
}
