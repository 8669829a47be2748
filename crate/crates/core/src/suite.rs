//! Standard synthetic benchmark suite.
//!
//! A case is a random multipath channel on the default array (9 elements,
//! d/λ ≈ 0.1876) observed with complex Gaussian noise at a given SNR. The
//! dominant path has unit gain; up to two weaker paths have gains of
//! magnitude 0.3 to 0.7 with uniform phase. Angles lie within ±60° and are at
//! least 15° apart.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::chanest::RelativeChannel;
use crate::emamodel::{true_relative_channel, ArrayGeometry, Path, PathSet};
use crate::scenario::SPEED_OF_LIGHT;
use crate::{derive_seed, Result};

/// Default array: 62.5 mm spacing at 900 MHz.
pub fn default_d_over_lambda() -> f64 {
    0.0625 * 900e6 / SPEED_OF_LIGHT
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub n_elements: usize,
    pub d_over_lambda: f64,
    /// Per-element signal-to-noise ratio; `f64::INFINITY` for noiseless.
    pub snr_db: f64,
    pub max_paths: usize,
    pub max_angle_deg: f64,
    pub min_separation_deg: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            n_elements: 9,
            d_over_lambda: default_d_over_lambda(),
            snr_db: 10.0,
            max_paths: 3,
            max_angle_deg: 60.0,
            min_separation_deg: 15.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteCase {
    pub seed: u64,
    pub paths: PathSet,
    pub truth: RelativeChannel,
    /// `truth` plus noise on the switched elements.
    pub observed: RelativeChannel,
}

impl SuiteCase {
    /// Local AoA of the unit-gain path.
    pub fn direct_aoa(&self) -> f64 {
        self.paths.paths()[0].aoa_rad
    }
}

fn rng_for(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &[tag]))
}

fn geometry(cfg: &SuiteConfig) -> Result<ArrayGeometry> {
    ArrayGeometry::new(cfg.n_elements - 1, cfg.d_over_lambda, 1.0)
}

fn weak_gain(rng: &mut impl Rng) -> Complex64 {
    Complex64::from_polar(rng.random_range(0.3..=0.7), rng.random_range(-PI..PI))
}

/// Adds circular Gaussian noise to elements `1..`, scaled to `snr_db` below
/// the mean element power.
pub fn add_noise(h: &RelativeChannel, snr_db: f64, rng: &mut impl Rng) -> RelativeChannel {
    let mut out = h.clone();
    if snr_db.is_infinite() && snr_db > 0.0 {
        return out;
    }
    let p = h.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / h.len() as f64;
    let sigma = (p / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
    for v in out.values.iter_mut().skip(1) {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *v += Complex64::new(re, im) * sigma;
    }
    out
}

/// Random path set: `m` paths with the constraints of the suite.
pub fn random_paths(cfg: &SuiteConfig, m: usize, rng: &mut impl Rng) -> Result<PathSet> {
    let limit = cfg.max_angle_deg;
    let mut angles: Vec<f64> = Vec::with_capacity(m);
    while angles.len() < m {
        let a = rng.random_range(-limit..=limit);
        if angles.iter().all(|b| (a - b).abs() >= cfg.min_separation_deg) {
            angles.push(a);
        }
    }
    let paths = angles
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let g = if k == 0 { Complex64::new(1.0, 0.0) } else { weak_gain(rng) };
            Path::new(a.to_radians(), g)
        })
        .collect();
    PathSet::new(paths)
}

fn case_from(cfg: &SuiteConfig, seed: u64, paths: PathSet, rng: &mut impl Rng) -> Result<SuiteCase> {
    let truth = true_relative_channel(&geometry(cfg)?, &paths)?;
    let observed = add_noise(&truth, cfg.snr_db, rng);
    Ok(SuiteCase {
        seed,
        paths,
        truth,
        observed,
    })
}

/// One case per seed with `1..=max_paths` paths drawn uniformly.
pub fn standard_suite(cfg: &SuiteConfig, seeds: impl IntoIterator<Item = u64>) -> Result<Vec<SuiteCase>> {
    seeds
        .into_iter()
        .map(|seed| {
            let mut rng = rng_for(seed, 0);
            let m = rng.random_range(1..=cfg.max_paths);
            let paths = random_paths(cfg, m, &mut rng)?;
            case_from(cfg, seed, paths, &mut rng)
        })
        .collect()
}

/// Two paths `separation_deg` apart: the direct path within ±40° and a
/// reflection of gain 0.5 to 0.7 on a random side.
pub fn two_path_case(cfg: &SuiteConfig, separation_deg: f64, seed: u64) -> Result<SuiteCase> {
    let mut rng = rng_for(seed, 1);
    let a = rng.random_range(-40.0..=40.0);
    let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let b = a + side * separation_deg;
    let b = if b.abs() > cfg.max_angle_deg { a - side * separation_deg } else { b };
    let g = Complex64::from_polar(rng.random_range(0.5..=0.7), rng.random_range(-PI..PI));
    let paths = PathSet::new(vec![
        Path::new(f64::to_radians(a), Complex64::new(1.0, 0.0)),
        Path::new(f64::to_radians(b), g),
    ])?;
    case_from(cfg, seed, paths, &mut rng)
}

/// `l` independent noisy observations of one channel.
pub fn repeated_observations(case: &SuiteCase, snr_db: f64, l: usize) -> Vec<RelativeChannel> {
    let mut rng = rng_for(case.seed, 2);
    (0..l).map(|_| add_noise(&case.truth, snr_db, &mut rng)).collect()
}

/// `l` noisy observations sharing the path angles, with the phase of every
/// non-dominant path redrawn per observation (frequency or time diversity).
pub fn diverse_observations(cfg: &SuiteConfig, case: &SuiteCase, l: usize) -> Result<Vec<RelativeChannel>> {
    let mut rng = rng_for(case.seed, 3);
    let geom = geometry(cfg)?;
    (0..l)
        .map(|_| {
            let paths = case
                .paths
                .paths()
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let g = if k == 0 { p.gain } else { Complex64::from_polar(p.gain.norm(), rng.random_range(-PI..PI)) };
                    Path::new(p.aoa_rad, g)
                })
                .collect();
            let truth = true_relative_channel(&geom, &PathSet::new(paths)?)?;
            Ok(add_noise(&truth, cfg.snr_db, &mut rng))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn default_spacing_matches_array() {
        assert!((default_d_over_lambda() - 0.18763).abs() < 1e-5);
    }

    #[test]
    fn noiseless_case_equals_truth() {
        let cfg = SuiteConfig {
            snr_db: f64::INFINITY,
            ..SuiteConfig::default()
        };
        let c = &standard_suite(&cfg, [5]).unwrap()[0];
        assert_eq!(c.truth, c.observed);
    }

    #[test]
    fn noise_power_matches_snr() {
        let cfg = SuiteConfig::default();
        let h = RelativeChannel::from_values(vec![Complex64::new(1.0, 0.0); 9], crate::chanest::ChannelKind::Truth);
        let mut rng = rng_for(9, 0);
        let mut acc = 0.0;
        let trials = 4000;
        for _ in 0..trials {
            let n = add_noise(&h, cfg.snr_db, &mut rng);
            acc += n.values[1..].iter().map(|v| (v - 1.0).norm_sqr()).sum::<f64>() / 8.0;
        }
        let measured = acc / trials as f64;
        assert!((measured / 0.1 - 1.0).abs() < 0.05, "{measured}");
    }

    #[test]
    fn two_path_case_has_requested_separation() {
        let cfg = SuiteConfig::default();
        for seed in 0..50 {
            let c = two_path_case(&cfg, 20.0, seed).unwrap();
            let p = c.paths.paths();
            assert!(((p[0].aoa_rad - p[1].aoa_rad).abs().to_degrees() - 20.0).abs() < 1e-9);
            assert!(p[1].aoa_rad.abs().to_degrees() <= 60.0);
        }
    }

    #[test]
    fn diverse_observations_keep_angles_and_vary_phase() {
        let cfg = SuiteConfig {
            snr_db: f64::INFINITY,
            ..SuiteConfig::default()
        };
        let single = &standard_suite(&cfg, (0..50).filter(|&s| {
            let mut r = rng_for(s, 0);
            r.random_range(1..=cfg.max_paths) == 1
        }))
        .unwrap()[0];
        for h in diverse_observations(&cfg, single, 3).unwrap() {
            assert!(h.values.iter().zip(&single.truth.values).all(|(a, b)| (a - b).norm() < 1e-12));
        }
        let pair = two_path_case(&cfg, 30.0, 4).unwrap();
        let obs = diverse_observations(&cfg, &pair, 3).unwrap();
        assert!((obs[0].values[3] - obs[1].values[3]).norm() > 1e-6);
    }

    proptest! {
        #[test]
        fn suite_respects_constraints(seed in any::<u64>()) {
            let cfg = SuiteConfig::default();
            let c = &standard_suite(&cfg, [seed]).unwrap()[0];
            let p = c.paths.paths();
            prop_assert!((1..=3).contains(&p.len()));
            prop_assert_eq!(p[0].gain, Complex64::new(1.0, 0.0));
            for (i, a) in p.iter().enumerate() {
                prop_assert!(a.aoa_rad.abs().to_degrees() <= 60.0 + 1e-9);
                if i > 0 {
                    prop_assert!((0.3 - 1e-12..=0.7 + 1e-12).contains(&a.gain.norm()));
                }
                for b in &p[..i] {
                    prop_assert!((a.aoa_rad - b.aoa_rad).abs().to_degrees() >= 15.0 - 1e-9);
                }
            }
        }
    }
}
