//! Seeded randomness with a bit-exact reproducibility contract.
//!
//! - Generator: ChaCha8 (`rand_chacha` 0.9), seeded through
//!   `SeedableRng::seed_from_u64`, which expands the `u64` with PCG32 as
//!   documented by `rand_core`. ChaCha output is platform-independent.
//! - Sub-seeds: [`derive_seed`] mixes a base seed with a stream index using
//!   the SplitMix64 finalizer, so every grid point and every count gets an
//!   independent, order-free stream.
//! - Poisson variates: [`sample_poisson`] uses sequential-search inversion
//!   for means below [`POISSON_INVERSION_MAX_MEAN`] and Hörmann's PTRS
//!   transformed rejection above it. Both consume uniforms only through
//!   [`uniform01`], which maps the top 53 bits of a `u64` to `[0, 1)`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Identifier written into run metadata.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha 0.9, seed_from_u64) / splitmix64 sub-seeds";

/// Means below this use inversion; at or above, PTRS.
pub const POISSON_INVERSION_MAX_MEAN: f64 = 10.0;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `splitmix64(base ⊕ splitmix64(index))`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}

/// Uniform in `[0, 1)` from the top 53 bits of one `u64`.
pub fn uniform01(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `ln k!`: exact table for small `k`, Stirling series beyond.
fn ln_factorial(k: u64) -> f64 {
    const TABLE: [f64; 10] = [
        0.0,
        0.0,
        std::f64::consts::LN_2,
        1.791_759_469_228_055,
        3.178_053_830_347_945_6,
        4.787_491_742_782_046,
        6.579_251_212_010_101,
        8.525_161_361_065_415,
        10.604_602_902_745_25,
        12.801_827_480_081_469,
    ];
    if (k as usize) < TABLE.len() {
        return TABLE[k as usize];
    }
    let x = (k + 1) as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// Poisson variate with mean `mean` (non-negative, finite).
pub fn sample_poisson(mean: f64, rng: &mut impl RngCore) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    if mean < POISSON_INVERSION_MAX_MEAN {
        poisson_inversion(mean, rng)
    } else {
        poisson_ptrs(mean, rng)
    }
}

fn poisson_inversion(mean: f64, rng: &mut impl RngCore) -> u64 {
    let u = uniform01(rng);
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    // The tail cap only matters if u lands within round-off of 1.
    while u >= cdf && k < 1000 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k
}

/// W. Hörmann, "The transformed rejection method for generating Poisson
/// random variables", Insurance: Mathematics and Economics 12 (1993).
fn poisson_ptrs(mean: f64, rng: &mut impl RngCore) -> u64 {
    let smu = mean.sqrt();
    let b = 0.931 + 2.53 * smu;
    let a = -0.059 + 0.024_83 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    let ln_mean = mean.ln();
    loop {
        let u = uniform01(rng) - 0.5;
        let v = uniform01(rng);
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = (v * inv_alpha / (a / (us * us) + b)).ln();
        let rhs = -mean + k * ln_mean - ln_factorial(k as u64);
        if lhs <= rhs {
            return k as u64;
        }
    }
}
