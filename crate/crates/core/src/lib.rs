//! Localization of hidden clock-leakage emitters with a switched-antenna array.
//!
//! The crate is organized as a pipeline:
//!
//! - [`emamodel`] synthesizes square-wave emanations, multipath channels over a
//!   uniform linear array, interferers, and cross-antenna correlated noise.
//! - [`capture`] simulates the two-port switched acquisition and reads/writes
//!   raw IQ recordings.
//! - [`chanest`] recovers relative channels (standard, time-offset and
//!   inverse-offset estimators), detects the clock period and interference,
//!   and measures emanation SNR.
//! - [`aoasolve`] turns relative channels into angle-of-arrival estimates with a
//!   constrained sparse solver, a group-sparse joint solver, and MUSIC/SpotFi
//!   style baselines.
//! - [`localize`] triangulates 2D positions from per-vantage bearings.
//! - [`scenario`] and [`pipeline`] wire everything into scenario runs and
//!   parameter sweeps with CSV reports.

pub mod aoasolve;
pub mod capture;
pub mod chanest;
pub mod emamodel;
mod error;
pub mod localize;
pub mod pipeline;
pub mod scenario;
pub mod suite;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Mixes a base seed with a list of tags into an independent 64-bit seed.
///
/// Used wherever one logical seed has to fan out into per-vantage,
/// per-segment or per-sweep-point streams.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(base ^ 0x5EED_0F_E4A4_A710);
    for &tag in tags {
        state = splitmix64(state ^ splitmix64(tag.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    state
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
