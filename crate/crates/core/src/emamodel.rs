//! Baseband emanation, array and noise models.
//!
//! Emanations are real on/off pulse trains at baseband. Channels follow the
//! narrowband multipath relative-channel model over a uniform linear array
//! whose element 0 is the reference antenna. Noise is circular complex white
//! Gaussian with a common component shared by every stream.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::chanest::{ChannelKind, RelativeChannel};
use crate::localize::Point2;
use crate::{Error, Result};

/// Duty cycles at or above `1 - DUTY_EPS` are treated as a constant carrier.
const DUTY_EPS: f64 = 1e-9;
/// Keeps samples that fall on an exact period boundary (up to rounding of
/// `1/f`) inside the new period.
const PHASE_GUARD: f64 = 1e-9;

/// Slow on/off gate modelling bursty device activity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivityGate {
    pub period_s: f64,
    /// Fraction of each gate period during which the emitter is active.
    pub on_fraction: f64,
}

/// Square-wave clock leakage of a single device.
#[derive(Debug, Clone, PartialEq)]
pub struct EmanationSource {
    pub clock_period_s: f64,
    pub duty_cycle: f64,
    pub amplitude: f64,
    pub position_m: Point2,
    /// `None` means always active.
    pub gate: Option<ActivityGate>,
}

impl EmanationSource {
    pub fn new(clock_hz: f64, duty_cycle: f64, amplitude: f64, position_m: Point2) -> Result<Self> {
        let src = Self {
            clock_period_s: 1.0 / clock_hz,
            duty_cycle,
            amplitude,
            position_m,
            gate: None,
        };
        src.validate()?;
        Ok(src)
    }

    pub fn with_gate(mut self, gate: ActivityGate) -> Self {
        self.gate = Some(gate);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.clock_period_s.is_finite() && self.clock_period_s > 0.0) {
            return Err(Error::invalid("clock_period_s", "must be finite and positive"));
        }
        if !(self.duty_cycle > 0.0 && self.duty_cycle <= 1.0) {
            return Err(Error::invalid("duty_cycle", "must lie in (0, 1]"));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::invalid("amplitude", "must be finite and non-negative"));
        }
        if let Some(g) = self.gate {
            if !(g.period_s > 0.0 && g.on_fraction > 0.0 && g.on_fraction <= 1.0) {
                return Err(Error::invalid("gate", "period must be positive, on fraction in (0, 1]"));
            }
        }
        Ok(())
    }

    /// Clock frequency in Hz.
    pub fn clock_hz(&self) -> f64 {
        1.0 / self.clock_period_s
    }

    /// Mean power `amplitude^2 * duty` of the ungated waveform.
    pub fn power(&self) -> f64 {
        self.amplitude * self.amplitude * self.duty_cycle.min(1.0)
    }

    fn sample(&self, t: u64, fs: f64, samples_per_period: f64, phase0: f64) -> f64 {
        if let Some(g) = self.gate {
            let gate_phase = (t as f64 / (g.period_s * fs) + PHASE_GUARD).rem_euclid(1.0);
            if gate_phase >= g.on_fraction {
                return 0.0;
            }
        }
        if self.duty_cycle >= 1.0 - DUTY_EPS {
            return self.amplitude;
        }
        let phase = (t as f64 / samples_per_period + phase0 + PHASE_GUARD).rem_euclid(1.0);
        if phase < self.duty_cycle {
            self.amplitude
        } else {
            0.0
        }
    }
}

/// Synthesizes `n` samples of the emanation starting at sample 0.
///
/// `phase0` is the initial position inside the clock period, as a fraction of
/// the period.
pub fn synthesize_emanation(src: &EmanationSource, fs: f64, n: usize, phase0: f64) -> Result<Vec<Complex64>> {
    synthesize_emanation_at(src, fs, 0, n, phase0)
}

/// Like [`synthesize_emanation`] but starting at absolute sample `start`.
pub fn synthesize_emanation_at(
    src: &EmanationSource,
    fs: f64,
    start: u64,
    n: usize,
    phase0: f64,
) -> Result<Vec<Complex64>> {
    src.validate()?;
    let samples_per_period = fs * src.clock_period_s;
    if !(samples_per_period >= 2.0) {
        return Err(Error::UnderSampled { samples_per_period });
    }
    if n == 0 {
        return Err(Error::invalid("n", "sample count must be at least 1"));
    }
    Ok((0..n as u64)
        .map(|k| Complex64::new(src.sample(start + k, fs, samples_per_period, phase0), 0.0))
        .collect())
}

/// Interfering emitter: a square wave at its own clock, rotated by a baseband
/// frequency offset, with its own per-antenna channel.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceSource {
    pub source: EmanationSource,
    /// Offset of the interferer's harmonic from the tuned frequency.
    pub freq_offset_hz: f64,
    /// Channel per element; index 0 is the reference antenna.
    pub alpha: Vec<Complex64>,
}

impl InterferenceSource {
    /// Interferer arriving from a single direction at the given vantage.
    pub fn from_direction(
        source: EmanationSource,
        geom: &ArrayGeometry,
        aoa_rad: f64,
        freq_offset_hz: f64,
    ) -> Result<Self> {
        let paths = PathSet::new(vec![Path::new(aoa_rad, Complex64::new(1.0, 0.0))])?;
        let alpha = true_relative_channel(geom, &paths)?.values;
        Ok(Self {
            source,
            freq_offset_hz,
            alpha,
        })
    }

    pub fn synthesize_at(&self, fs: f64, start: u64, n: usize) -> Result<Vec<Complex64>> {
        let mut d = synthesize_emanation_at(&self.source, fs, start, n, 0.0)?;
        if self.freq_offset_hz != 0.0 {
            for (k, x) in d.iter_mut().enumerate() {
                let cycles = (self.freq_offset_hz * (start + k as u64) as f64 / fs).fract();
                *x *= Complex64::from_polar(1.0, 2.0 * PI * cycles);
            }
        }
        Ok(d)
    }
}

/// Uniform linear array: reference antenna at element 0 followed by
/// `n_switched` switched elements spaced `spacing_m` apart.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub n_switched: usize,
    pub spacing_m: f64,
    pub carrier_wavelength_m: f64,
    pub vantage_position_m: Point2,
    /// Global direction of the array broadside.
    pub vantage_heading_rad: f64,
}

impl ArrayGeometry {
    pub fn new(n_switched: usize, spacing_m: f64, carrier_wavelength_m: f64) -> Result<Self> {
        let g = Self {
            n_switched,
            spacing_m,
            carrier_wavelength_m,
            vantage_position_m: Point2::new(0.0, 0.0),
            vantage_heading_rad: 0.0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn at_vantage(mut self, position: Point2, heading_rad: f64) -> Self {
        self.vantage_position_m = position;
        self.vantage_heading_rad = heading_rad;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_switched < 2 {
            return Err(Error::invalid("n_switched", "need at least 2 switched elements"));
        }
        if !(self.spacing_m > 0.0 && self.spacing_m.is_finite()) {
            return Err(Error::invalid("spacing_m", "must be positive"));
        }
        if !(self.carrier_wavelength_m > 0.0 && self.carrier_wavelength_m.is_finite()) {
            return Err(Error::invalid("carrier_wavelength_m", "must be positive"));
        }
        Ok(())
    }

    /// Element count including the reference antenna.
    pub fn n_elements(&self) -> usize {
        self.n_switched + 1
    }

    /// Normalized spacing d/λ.
    pub fn d_over_lambda(&self) -> f64 {
        self.spacing_m / self.carrier_wavelength_m
    }

    /// True when d/λ ≥ 1/2 and the array aliases spatially.
    pub fn aliasing_warning(&self) -> bool {
        self.d_over_lambda() >= 0.5
    }

    /// Angle of `target` relative to broadside, wrapped to (-π, π].
    pub fn local_aoa_to(&self, target: Point2) -> f64 {
        let dx = target.x - self.vantage_position_m.x;
        let dy = target.y - self.vantage_position_m.y;
        wrap_angle(dy.atan2(dx) - self.vantage_heading_rad)
    }

    /// Global bearing of a local AoA.
    pub fn global_bearing(&self, local_aoa_rad: f64) -> f64 {
        wrap_angle(self.vantage_heading_rad + local_aoa_rad)
    }
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub aoa_rad: f64,
    pub gain: Complex64,
}

impl Path {
    pub fn new(aoa_rad: f64, gain: Complex64) -> Self {
        Self { aoa_rad, gain }
    }
}

/// Propagation paths seen by one vantage.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    paths: Vec<Path>,
}

impl PathSet {
    pub fn new(paths: Vec<Path>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::invalid("paths", "need at least one path"));
        }
        for p in &paths {
            if !(p.aoa_rad.abs() < FRAC_PI_2) {
                return Err(Error::invalid("aoa_rad", format!("|{}| must be below π/2", p.aoa_rad)));
            }
            if !(p.gain.re.is_finite() && p.gain.im.is_finite()) {
                return Err(Error::invalid("gain", "must be finite"));
            }
        }
        Ok(Self { paths })
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn gain_sum(&self) -> Complex64 {
        self.paths.iter().map(|p| p.gain).sum()
    }

    /// Path with the largest |gain|; earlier paths win ties.
    pub fn dominant(&self) -> &Path {
        let mut best = &self.paths[0];
        for p in &self.paths[1..] {
            if p.gain.norm() > best.gain.norm() {
                best = p;
            }
        }
        best
    }
}

/// Per-element phase `exp(-j 2π i sin(θ) d/λ)`.
///
/// # Panics
///
/// Panics if `i` exceeds the number of switched elements.
pub fn steering_phase(geom: &ArrayGeometry, aoa_rad: f64, i: usize) -> Complex64 {
    assert!(i <= geom.n_switched, "element index {i} out of range");
    steering_phase_dl(geom.d_over_lambda(), aoa_rad, i)
}

pub(crate) fn steering_phase_dl(d_over_lambda: f64, aoa_rad: f64, i: usize) -> Complex64 {
    // Reduce the phase in cycles so large indices keep full precision.
    let cycles = (i as f64 * aoa_rad.sin() * d_over_lambda).fract();
    Complex64::from_polar(1.0, -2.0 * PI * cycles)
}

/// Relative channel `h_i = Σ w_k φ_k^i / Σ w_k` for every element.
pub fn true_relative_channel(geom: &ArrayGeometry, paths: &PathSet) -> Result<RelativeChannel> {
    geom.validate()?;
    let sum = paths.gain_sum();
    let scale = paths.paths.iter().map(|p| p.gain.norm()).fold(0.0, f64::max);
    if sum.norm() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::SingularChannel);
    }
    let mut values = Vec::with_capacity(geom.n_elements());
    values.push(Complex64::new(1.0, 0.0));
    for i in 1..geom.n_elements() {
        let num: Complex64 = paths
            .paths
            .iter()
            .map(|p| p.gain * steering_phase(geom, p.aoa_rad, i))
            .sum();
        values.push(num / sum);
    }
    Ok(RelativeChannel {
        values,
        kind: ChannelKind::Truth,
        tau_samples: 0,
        carrier_wavelength_m: Some(geom.carrier_wavelength_m),
        n_packets_averaged: 0,
    })
}

/// Common-plus-private white noise shared across capture streams.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub noise_power: f64,
    /// Lag-0 correlation coefficient between any two streams.
    pub cross_corr_rho: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(noise_power: f64, cross_corr_rho: f64, seed: u64) -> Result<Self> {
        let m = Self {
            noise_power,
            cross_corr_rho,
            seed,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_power >= 0.0 && self.noise_power.is_finite()) {
            return Err(Error::invalid("noise_power", "must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&self.cross_corr_rho) {
            return Err(Error::invalid("cross_corr_rho", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Generates `n_streams` noise streams of `n_samples` each.
///
/// Stream `i` is `√ρ·common + √(1-ρ)·private_i`, so every stream has power
/// `noise_power` and any two streams correlate at lag 0 with coefficient ρ
/// while staying white in time.
pub fn generate_correlated_noise(model: &NoiseModel, n_streams: usize, n_samples: usize) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let sigma = (model.noise_power / 2.0).sqrt();
    let draw = |rng: &mut ChaCha8Rng| -> Complex64 {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * sigma, im * sigma)
    };
    let rho = model.cross_corr_rho;
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    let common: Vec<Complex64> = (0..n_samples).map(|_| draw(&mut rng)).collect();
    (0..n_streams)
        .map(|_| {
            common
                .iter()
                .map(|&c| if b == 0.0 { c } else { c * a + draw(&mut rng) * b })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn geom(dl: f64) -> ArrayGeometry {
        ArrayGeometry::new(8, dl, 1.0).unwrap()
    }

    #[test]
    fn square_wave_halves() {
        let src = EmanationSource::new(1.0 / 64.0, 0.5, 1.0, Point2::new(0.0, 0.0)).unwrap();
        let s = synthesize_emanation(&src, 1.0, 128, 0.0).unwrap();
        for (t, x) in s.iter().enumerate() {
            let expect = if t % 64 < 32 { 1.0 } else { 0.0 };
            assert_eq!(x.re, expect, "sample {t}");
            assert_eq!(x.im, 0.0);
        }
    }

    #[test]
    fn near_unit_duty_is_constant() {
        let src = EmanationSource::new(1.0 / 64.0, 1.0 - 1e-12, 2.0, Point2::default()).unwrap();
        let s = synthesize_emanation(&src, 1.0, 200, 0.3).unwrap();
        assert!(s.iter().all(|x| x.re == 2.0));
    }

    #[test]
    fn undersampled_period_rejected() {
        let src = EmanationSource::new(1000.0, 0.5, 1.0, Point2::default()).unwrap();
        let err = synthesize_emanation(&src, 1500.0, 10, 0.0).unwrap_err();
        assert!(matches!(err, Error::UnderSampled { .. }));
    }

    #[test]
    fn autocorrelation_at_one_period_matches_lag_zero() {
        // Brute force over ten periods of a 64-sample, 50% duty unit wave.
        let src = EmanationSource::new(1.0 / 64.0, 0.5, 1.0, Point2::default()).unwrap();
        let n = 640;
        let s: Vec<f64> = synthesize_emanation(&src, 1.0, n + 64, 0.0)
            .unwrap()
            .iter()
            .map(|x| x.re)
            .collect();
        let r = |lag: usize| (0..n).map(|t| s[t + lag] * s[t]).sum::<f64>() / n as f64;
        assert!((r(0) - 0.5).abs() < 1e-15);
        assert!((r(64) - r(0)).abs() < 1e-15);
        // Mean-removed form.
        let mean = s[..n].iter().sum::<f64>() / n as f64;
        let rc = |lag: usize| (0..n).map(|t| (s[t + lag] - mean) * (s[t] - mean)).sum::<f64>() / n as f64;
        assert!((rc(64) - rc(0)).abs() < 1e-15);
        assert!((rc(0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn gated_source_is_silent_when_off() {
        let src = EmanationSource::new(1.0 / 8.0, 0.5, 1.0, Point2::default())
            .unwrap()
            .with_gate(ActivityGate {
                period_s: 100.0,
                on_fraction: 0.5,
            });
        let s = synthesize_emanation(&src, 1.0, 100, 0.0).unwrap();
        assert!(s[..50].iter().any(|x| x.re > 0.0));
        assert!(s[50..].iter().all(|x| x.re == 0.0));
    }

    #[test]
    fn steering_examples() {
        let g = geom(0.1);
        assert_eq!(steering_phase(&g, 0.0, 5), c(1.0, 0.0));
        assert_eq!(steering_phase(&g, 0.7, 0), c(1.0, 0.0));
        let p = steering_phase(&g, 30f64.to_radians(), 1);
        assert!((p - c(0.95106, -0.30902)).norm() < 1e-5);
        assert!((p.arg() + 0.1 * PI).abs() < 1e-12);
    }

    #[test]
    fn relative_channel_examples() {
        let g = geom(0.1);
        let single = PathSet::new(vec![Path::new(0.4, c(0.3, -2.0))]).unwrap();
        let h = true_relative_channel(&g, &single).unwrap();
        assert_eq!(h.values[0], c(1.0, 0.0));
        assert!(h.values.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));

        let two = PathSet::new(vec![
            Path::new(0.0, c(1.0, 0.0)),
            Path::new(30f64.to_radians(), c(0.5, 0.0)),
        ])
        .unwrap();
        let h = true_relative_channel(&g, &two).unwrap();
        assert!((h.values[1] - c(0.98369, -0.10300)).norm() < 1e-5);

        let singular = PathSet::new(vec![Path::new(0.0, c(1.0, 0.0)), Path::new(0.2, c(-1.0, 0.0))]).unwrap();
        assert!(matches!(true_relative_channel(&g, &singular), Err(Error::SingularChannel)));
    }

    #[test]
    fn pathset_rejects_endfire() {
        assert!(PathSet::new(vec![Path::new(FRAC_PI_2, c(1.0, 0.0))]).is_err());
        assert!(PathSet::new(vec![]).is_err());
    }

    #[test]
    fn aliasing_flag() {
        assert!(!geom(0.25).aliasing_warning());
        assert!(geom(0.5).aliasing_warning());
    }

    #[test]
    fn local_aoa_and_bearing() {
        let g = geom(0.1).at_vantage(Point2::new(1.0, 1.0), 90f64.to_radians());
        let a = g.local_aoa_to(Point2::new(0.0, 2.0));
        assert!((a - 45f64.to_radians()).abs() < 1e-12);
        assert!((g.global_bearing(a) - 135f64.to_radians()).abs() < 1e-12);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
    }

    fn norm_xcorr(a: &[Complex64], b: &[Complex64], lag: usize) -> Complex64 {
        let n = a.len() - lag;
        let num: Complex64 = (0..n).map(|t| a[t + lag] * b[t].conj()).sum();
        let pa: f64 = a.iter().map(|x| x.norm_sqr()).sum::<f64>();
        let pb: f64 = b.iter().map(|x| x.norm_sqr()).sum::<f64>();
        num / (pa * pb).sqrt()
    }

    #[test]
    fn independent_noise_is_uncorrelated() {
        let m = NoiseModel::new(1.0, 0.0, 7).unwrap();
        let s = generate_correlated_noise(&m, 2, 100_000);
        assert!(norm_xcorr(&s[0], &s[1], 0).norm() < 0.05);
    }

    #[test]
    fn fully_common_noise_is_identical() {
        let m = NoiseModel::new(2.0, 1.0, 3).unwrap();
        let s = generate_correlated_noise(&m, 3, 1000);
        assert_eq!(s[0], s[1]);
        assert_eq!(s[1], s[2]);
    }

    #[test]
    fn correlated_noise_statistics() {
        let m = NoiseModel::new(1.0, 0.8, 11).unwrap();
        let s = generate_correlated_noise(&m, 2, 100_000);
        let r0 = norm_xcorr(&s[0], &s[1], 0);
        assert!((0.75..=0.85).contains(&r0.re), "lag-0 {r0}");
        let r1 = norm_xcorr(&s[0], &s[1], 1);
        assert!(r1.norm() < 0.05, "lag-1 {r1}");
        let power = s[0].iter().map(|x| x.norm_sqr()).sum::<f64>() / 100_000.0;
        assert!((power - 1.0).abs() < 0.02);
        // White in time.
        let bound = 5.0 / (100_000f64).sqrt();
        for lag in 1..5 {
            assert!(norm_xcorr(&s[0], &s[0], lag).norm() < bound);
        }
    }

    #[test]
    fn noise_is_seed_deterministic() {
        let m = NoiseModel::new(1.0, 0.5, 42).unwrap();
        assert_eq!(generate_correlated_noise(&m, 2, 64), generate_correlated_noise(&m, 2, 64));
        let other = NoiseModel { seed: 43, ..m.clone() };
        assert_ne!(generate_correlated_noise(&m, 2, 64), generate_correlated_noise(&other, 2, 64));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn steering_has_unit_modulus(dl in 0.01f64..0.49, aoa in -1.5f64..1.5, i in 0usize..=8) {
                let g = geom(dl);
                prop_assert!((steering_phase(&g, aoa, i).norm() - 1.0).abs() < 1e-15);
            }

            #[test]
            fn relative_channel_is_scale_invariant(
                a1 in -1.4f64..1.4, a2 in -1.4f64..1.4,
                g1 in 0.2f64..2.0, g2 in 0.0f64..0.9, ph in 0.0f64..6.28,
                sr in -3.0f64..3.0, si in 0.1f64..3.0,
            ) {
                let g = geom(0.2);
                let paths = PathSet::new(vec![
                    Path::new(a1, Complex64::new(g1, 0.0)),
                    Path::new(a2, Complex64::from_polar(g2 * g1, ph)),
                ]).unwrap();
                let scale = Complex64::new(sr, si);
                let scaled = PathSet::new(paths.paths().iter().map(|p| Path::new(p.aoa_rad, p.gain * scale)).collect()).unwrap();
                let h1 = true_relative_channel(&g, &paths).unwrap();
                let h2 = true_relative_channel(&g, &scaled).unwrap();
                for (x, y) in h1.values.iter().zip(&h2.values) {
                    prop_assert!((x - y).norm() < 1e-9 * (1.0 + x.norm()));
                }
            }

            #[test]
            fn emanation_autocorrelation_is_periodic(period in 8usize..64, duty in 0.1f64..0.85, k in 1usize..4) {
                let src = EmanationSource::new(1.0 / period as f64, duty, 1.0, Point2::default()).unwrap();
                let n = period * 16;
                let s: Vec<f64> = synthesize_emanation(&src, 1.0, n, 0.0).unwrap().iter().map(|x| x.re).collect();
                let mean = s.iter().sum::<f64>() / n as f64;
                let r = |lag: usize| (0..n - lag).map(|t| (s[t + lag] - mean) * (s[t] - mean)).sum::<f64>() / (n - lag) as f64;
                prop_assert!(r(k * period) / r(0) > 0.99);
            }
        }
    }
}
