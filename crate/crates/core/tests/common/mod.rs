//! Seeded random draws shared by the integration suites.
#![allow(dead_code)]

use cohmeter::{DensityMatrix2, PulseEnvelope, PulsePair, PureSuperposition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::f64::consts::{FRAC_PI_2, PI};

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Random pulse pair with moderate amplitudes, arbitrary phases and a
/// detuning within the generalized-Rabi regime the suites probe.
pub fn random_pulses(rng: &mut impl Rng) -> PulsePair {
    loop {
        let a1: f64 = rng.random_range(0.0..2.5);
        let a2: f64 = rng.random_range(0.0..2.5);
        if a1.hypot(a2) < 0.3 {
            continue;
        }
        return PulsePair::new(
            a1,
            a2,
            rng.random_range(-PI..PI),
            rng.random_range(-PI..PI),
            rng.random_range(-2.0..2.0),
            PulseEnvelope::default(),
        )
        .unwrap();
    }
}

/// Random pure superposition over the full parameter ranges.
pub fn random_pure(rng: &mut impl Rng) -> PureSuperposition {
    PureSuperposition::new(rng.random_range(0.0..FRAC_PI_2), rng.random_range(-PI..PI)).unwrap()
}

/// Random pure superposition kept away from the degeneracy floors, where
/// the relative phase stays well conditioned.
pub fn random_pure_interior(rng: &mut impl Rng) -> PureSuperposition {
    PureSuperposition::new(
        rng.random_range(0.05..FRAC_PI_2 - 0.05),
        rng.random_range(-PI..PI),
    )
    .unwrap()
}

/// Random mixed state `r_inc I + (1 - 2 r_inc) |chi><chi|` with `r_inc`
/// in the given range and `chi` away from the degeneracy floors.
pub fn random_mixed(rng: &mut impl Rng, r_inc_min: f64, r_inc_max: f64) -> DensityMatrix2 {
    let chi = random_pure_interior(rng);
    DensityMatrix2::mixture(rng.random_range(r_inc_min..r_inc_max), &chi)
}
