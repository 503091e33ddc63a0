//! Deterministic random draws of generic parameters.
//!
//! Every sample gets its own ChaCha20 stream: the key comes from the run seed mixed
//! with the check label, the stream number is the sample index. Results therefore do
//! not depend on which other checks run or in what order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::specfun::C;
use crate::weights::Weight;

pub type SampleRng = ChaCha20Rng;

/// Draws larger than this in magnitude count as non-generic.
pub const ENTRY_CAP: f64 = 1e3;

/// Redraws allowed per sample before a check gives up.
pub const MAX_ATTEMPTS: usize = 50;

fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn sample_rng(seed: u64, label: &str, index: u64) -> SampleRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ fnv1a(label));
    rng.set_stream(index);
    rng
}

pub fn uniform(rng: &mut SampleRng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

/// Uniform in the box [re.0, re.1) × [im.0, im.1).
pub fn complex_box(rng: &mut SampleRng, re: (f64, f64), im: (f64, f64)) -> C {
    C::new(uniform(rng, re.0, re.1), uniform(rng, im.0, im.1))
}

/// Modulus uniform in [r_min, r_max), argument uniform in (−arg_max, arg_max).
pub fn complex_annulus(rng: &mut SampleRng, r_min: f64, r_max: f64, arg_max: f64) -> C {
    C::from_polar(uniform(rng, r_min, r_max), uniform(rng, -arg_max, arg_max))
}

/// λ with real parts in (−1, 1) and imaginary parts in (−0.2, 0.2).
pub fn generic_weight(rng: &mut SampleRng, n: usize) -> Weight {
    Weight((0..=n).map(|_| complex_box(rng, (-1.0, 1.0), (-0.2, 0.2))).collect())
}

/// Spectral parameter u with Re u ∈ (−0.3, 0.3), Im u ∈ (−0.05, 0.05).
pub fn spectral_u(rng: &mut SampleRng) -> C {
    complex_box(rng, (-0.3, 0.3), (-0.05, 0.05))
}

pub fn index(rng: &mut SampleRng, n: usize) -> usize {
    rng.gen_range(0..=n)
}

/// A pair m < l in 0..=n.
pub fn ordered_pair(rng: &mut SampleRng, n: usize) -> (usize, usize) {
    let m = rng.gen_range(0..n);
    let l = rng.gen_range(m + 1..=n);
    (m, l)
}

/// Errors that mean "this draw sits too close to a singularity", not "the identity fails".
pub fn is_rejectable(e: &Error) -> bool {
    matches!(
        e,
        Error::PoleHit { .. } | Error::ChainBlocked(_) | Error::NonGeneric(_) | Error::IllConditioned(_)
    )
}

/// NonGeneric unless |x| ≤ [`ENTRY_CAP`].
pub fn cap(x: f64, what: &str) -> Result<()> {
    if x.is_finite() && x <= ENTRY_CAP {
        Ok(())
    } else {
        Err(Error::NonGeneric(format!("{what} has magnitude {x:e}")))
    }
}
