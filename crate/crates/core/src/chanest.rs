//! Relative-channel estimation from switched captures.
//!
//! Three correlation estimators share one shape, a ratio of lagged
//! cross-correlation to lagged reference autocorrelation:
//!
//! - standard: lag 0, biased toward the noise correlation at low SNR;
//! - offset: `E[r_i(t) r_ref*(t-τ)] / E[r_ref(t) r_ref*(t-τ)]`;
//! - inverse: `E[r_i(t-τ) r_ref*(t)] / E[r_ref(t-τ) r_ref*(t)]`.
//!
//! With τ a multiple of the clock period the signal terms keep their lag-0
//! value while white noise decorrelates. Offset and inverse agree unless an
//! interferer with a different lag structure is present.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::capture::{Packet, Segment};
use crate::{Error, Result};

/// How a [`RelativeChannel`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    /// Computed from the propagation model.
    Truth,
    Standard,
    Offset,
    Inverse,
}

impl ChannelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelKind::Truth => "truth",
            ChannelKind::Standard => "standard",
            ChannelKind::Offset => "offset",
            ChannelKind::Inverse => "inverse",
        }
    }
}

/// Correlation value at one lag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagCorrelation {
    pub lag_samples: i64,
    pub value: Complex64,
}

/// Per-element channel relative to the reference antenna (element 0).
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeChannel {
    pub values: Vec<Complex64>,
    pub kind: ChannelKind,
    pub tau_samples: usize,
    pub carrier_wavelength_m: Option<f64>,
    pub n_packets_averaged: usize,
}

impl RelativeChannel {
    /// Wraps raw values; element 0 is forced to exactly 1.
    pub fn from_values(mut values: Vec<Complex64>, kind: ChannelKind) -> Self {
        if let Some(v0) = values.first_mut() {
            *v0 = Complex64::new(1.0, 0.0);
        }
        Self {
            values,
            kind,
            tau_samples: 0,
            carrier_wavelength_m: None,
            n_packets_averaged: 1,
        }
    }

    pub fn with_wavelength(mut self, wavelength_m: f64) -> Self {
        self.carrier_wavelength_m = Some(wavelength_m);
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Element-wise relative error against another channel.
    pub fn relative_error(&self, other: &RelativeChannel) -> f64 {
        let diff: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        diff / other.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Detected clock period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockEstimate {
    pub period_samples: f64,
    /// Autocorrelation peak over the median of the other searched lags, in dB.
    pub confidence_db: f64,
    /// Peak of the mean-removed autocorrelation normalized by its lag-0 value.
    pub normalized_peak: f64,
}

impl ClockEstimate {
    pub fn frequency_hz(&self, fs: f64) -> f64 {
        fs / self.period_samples
    }

    /// Integer lag closest to `multiple` clock periods.
    pub fn lag_for(&self, multiple: usize) -> usize {
        (self.period_samples * multiple as f64).round() as usize
    }
}

/// Tuning for the offset and inverse estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetOptions {
    /// The denominator must exceed `floor_z · P_ref / √n` to count as signal,
    /// where `P_ref` is the mean reference power and `n` the overlap length.
    pub floor_z: f64,
}

impl Default for OffsetOptions {
    fn default() -> Self {
        Self { floor_z: 3.0 }
    }
}

fn segments_sorted<'a>(pkt: &'a Packet<'a>) -> Result<Vec<&'a Segment<'a>>> {
    let n = pkt.n_antennas();
    if n == 0 {
        return Err(Error::Empty("packet has no segments"));
    }
    (1..=n)
        .map(|a| {
            pkt.segment(a)
                .ok_or_else(|| Error::Mismatch(format!("packet {} lacks antenna {a}", pkt.sweep_index)))
        })
        .collect()
}

/// Lag-0 estimator `mean(r_i r_ref*) / mean(|r_ref|²)`.
pub fn estimate_standard(pkt: &Packet<'_>) -> Result<RelativeChannel> {
    let segs = segments_sorted(pkt)?;
    let mut values = vec![Complex64::new(1.0, 0.0)];
    for seg in segs {
        if seg.switched.is_empty() {
            return Err(Error::Empty("antenna segment"));
        }
        let num: Complex64 = seg.switched.iter().zip(seg.reference).map(|(a, b)| a * b.conj()).sum();
        let den: f64 = seg.reference.iter().map(|b| b.norm_sqr()).sum();
        if den <= 0.0 {
            return Err(Error::ZeroReferencePower);
        }
        values.push(num / den);
    }
    Ok(RelativeChannel::from_values(values, ChannelKind::Standard))
}

pub fn estimate_offset(pkt: &Packet<'_>, tau_samples: usize) -> Result<RelativeChannel> {
    estimate_lagged(pkt, tau_samples, ChannelKind::Offset, OffsetOptions::default())
}

pub fn estimate_inverse(pkt: &Packet<'_>, tau_samples: usize) -> Result<RelativeChannel> {
    estimate_lagged(pkt, tau_samples, ChannelKind::Inverse, OffsetOptions::default())
}

/// Offset or inverse estimate with explicit options.
pub fn estimate_lagged(
    pkt: &Packet<'_>,
    tau: usize,
    kind: ChannelKind,
    opts: OffsetOptions,
) -> Result<RelativeChannel> {
    if tau == 0 {
        return Err(Error::invalid("tau_samples", "must be at least 1"));
    }
    let segs = segments_sorted(pkt)?;
    let mut values = vec![Complex64::new(1.0, 0.0)];
    for seg in segs {
        let len = seg.switched.len();
        if len <= tau {
            return Err(Error::invalid(
                "tau_samples",
                format!("{tau} is not below the usable dwell length {len}"),
            ));
        }
        let (sw, rf) = (seg.switched, seg.reference);
        let n = len - tau;
        let (num, den) = match kind {
            ChannelKind::Offset => (
                (tau..len).map(|t| sw[t] * rf[t - tau].conj()).sum::<Complex64>(),
                (tau..len).map(|t| rf[t] * rf[t - tau].conj()).sum::<Complex64>(),
            ),
            ChannelKind::Inverse => (
                (tau..len).map(|t| sw[t - tau] * rf[t].conj()).sum::<Complex64>(),
                (tau..len).map(|t| rf[t - tau] * rf[t].conj()).sum::<Complex64>(),
            ),
            other => return Err(Error::invalid("kind", format!("{} is not a lagged estimator", other.as_str()))),
        };
        let p_ref = rf.iter().map(|x| x.norm_sqr()).sum::<f64>() / len as f64;
        let mean_den = den / n as f64;
        let floor = (opts.floor_z * p_ref / (n as f64).sqrt()).max(f64::MIN_POSITIVE);
        if !(mean_den.norm() > floor) {
            return Err(Error::DegenerateOffset {
                tau,
                magnitude: mean_den.norm(),
                floor,
            });
        }
        values.push(num / den);
    }
    let mut h = RelativeChannel::from_values(values, kind);
    h.tau_samples = tau;
    Ok(h)
}

/// Outcome of comparing offset and inverse estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceCheck {
    /// `‖h_off − h_inv‖ / ‖h_off‖`.
    pub score: f64,
    pub interfered: bool,
}

pub fn detect_interference(
    h_off: &RelativeChannel,
    h_inv: &RelativeChannel,
    threshold: f64,
) -> Result<InterferenceCheck> {
    if h_off.len() != h_inv.len() {
        return Err(Error::MixedProvenance(format!("lengths {} and {}", h_off.len(), h_inv.len())));
    }
    if h_off.tau_samples != h_inv.tau_samples {
        return Err(Error::MixedProvenance(format!(
            "tau {} and {}",
            h_off.tau_samples, h_inv.tau_samples
        )));
    }
    if h_off.n_packets_averaged != h_inv.n_packets_averaged {
        return Err(Error::MixedProvenance(format!(
            "{} and {} packets averaged",
            h_off.n_packets_averaged, h_inv.n_packets_averaged
        )));
    }
    let diff: f64 = h_off
        .values
        .iter()
        .zip(&h_inv.values)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let score = diff / h_off.norm();
    Ok(InterferenceCheck {
        score,
        interfered: score > threshold,
    })
}

/// Element-wise mean of channels sharing kind, τ and wavelength.
pub fn average_channels(channels: &[RelativeChannel]) -> Result<RelativeChannel> {
    let first = channels.first().ok_or(Error::Empty("no channels to average"))?;
    for h in &channels[1..] {
        if h.kind != first.kind || h.tau_samples != first.tau_samples || h.carrier_wavelength_m != first.carrier_wavelength_m
        {
            return Err(Error::MixedProvenance(format!(
                "cannot average {}/τ={} with {}/τ={}",
                first.kind.as_str(),
                first.tau_samples,
                h.kind.as_str(),
                h.tau_samples
            )));
        }
        if h.len() != first.len() {
            return Err(Error::MixedProvenance(format!("lengths {} and {}", first.len(), h.len())));
        }
    }
    let k = channels.len() as f64;
    let mut values = vec![Complex64::new(0.0, 0.0); first.len()];
    for h in channels {
        for (acc, v) in values.iter_mut().zip(&h.values) {
            *acc += v;
        }
    }
    for v in &mut values {
        *v /= k;
    }
    Ok(RelativeChannel {
        values,
        kind: first.kind,
        tau_samples: first.tau_samples,
        carrier_wavelength_m: first.carrier_wavelength_m,
        n_packets_averaged: channels.iter().map(|h| h.n_packets_averaged).sum(),
    })
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Forward DFT `X[k] = Σ x[n] e^{-j2πnk/N}` (unnormalized).
pub(crate) fn fft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    plan(buf.len(), false).process(&mut buf);
    buf
}

/// Inverse DFT `x[n] = Σ X[k] e^{+j2πnk/N}` (unnormalized).
pub(crate) fn ifft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    plan(buf.len(), true).process(&mut buf);
    buf
}

/// Cross-correlation `c(ℓ) = mean_t x(t) y*(t−ℓ)` over the overlap, for
/// lags `start..start + count`.
pub fn cross_correlation(x: &[Complex64], y: &[Complex64], start: usize, count: usize) -> Vec<Complex64> {
    let n = x.len().min(y.len());
    let end = (start + count).min(n);
    if start >= end {
        return Vec::new();
    }
    let m = (n + end).next_power_of_two();
    let mut xb = vec![Complex64::new(0.0, 0.0); m];
    let mut yb = vec![Complex64::new(0.0, 0.0); m];
    xb[..n].copy_from_slice(&x[..n]);
    yb[..n].copy_from_slice(&y[..n]);
    let xf = fft(&xb);
    let yf = fft(&yb);
    let prod: Vec<Complex64> = xf.iter().zip(&yf).map(|(a, b)| a * b.conj()).collect();
    let c = ifft(&prod);
    (start..end).map(|l| c[l] / (m as f64 * (n - l) as f64)).collect()
}

/// Autocorrelation values at non-negative lags, with Hermitian negative lags
/// implied.
pub fn autocorrelation(x: &[Complex64], max_lag: usize) -> Vec<LagCorrelation> {
    cross_correlation(x, x, 0, max_lag + 1)
        .into_iter()
        .enumerate()
        .map(|(l, value)| LagCorrelation {
            lag_samples: l as i64,
            value,
        })
        .collect()
}

/// Finds the clock period as the strongest mean-removed autocorrelation peak
/// in `[min_period, max_period]` samples.
///
/// Only local maxima past the first zero crossing of the autocorrelation
/// qualify. Among peaks within 10% of the strongest, the
/// shortest lag wins so multiples of the period are not reported. The period
/// is then refined by maximizing the summed autocorrelation over its first
/// multiples (up to 16) within a quarter of the input. A peak whose normalized height does
/// not exceed `6/√n` (six standard deviations of a white-noise
/// autocorrelation) yields [`Error::NoClock`].
pub fn detect_clock(iq: &[Complex64], min_period: usize, max_period: usize) -> Result<ClockEstimate> {
    let n = iq.len();
    if min_period < 2 || min_period > max_period {
        return Err(Error::invalid("period range", format!("[{min_period}, {max_period}]")));
    }
    if max_period > n / 4 {
        return Err(Error::invalid(
            "max_period",
            format!("{max_period} exceeds a quarter of the {n} available samples"),
        ));
    }
    let mean = iq.iter().sum::<Complex64>() / n as f64;
    let centered: Vec<Complex64> = iq.iter().map(|x| x - mean).collect();

    // Biased normalization keeps later multiples of the period slightly lower.
    let m = (2 * n).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    buf[..n].copy_from_slice(&centered);
    let spec = fft(&buf);
    let power: Vec<Complex64> = spec.iter().map(|v| Complex64::new(v.norm_sqr(), 0.0)).collect();
    let r = ifft(&power);
    let r0 = r[0].re;
    let floor = 6.0 / (n as f64).sqrt();
    if !(r0 > 0.0) {
        return Err(Error::NoClock { peak: 0.0, floor });
    }
    // Signed: half-period lags of a square wave are strongly negative.
    let top = (n / 4).max(max_period + 1);
    let mag: Vec<f64> = r[..=top].iter().map(|v| v.re / r0).collect();

    // The lag-0 lobe can ripple above the true peak when a non-periodic
    // component is present; candidates start past its first zero crossing.
    let lo = (1..=max_period).find(|&j| mag[j] <= 0.0).unwrap_or(1).max(min_period);
    let peaks: Vec<usize> = (lo..=max_period)
        .filter(|&k| mag[k] > mag[k - 1] && mag[k] >= mag[k + 1])
        .collect();
    let best = peaks.iter().map(|&k| mag[k]).fold(0.0, f64::max);
    if !(best > floor) {
        return Err(Error::NoClock { peak: best, floor });
    }
    let first = *peaks
        .iter()
        .find(|&&k| mag[k] >= 0.9 * best)
        .expect("best peak is among the candidates");
    // Noise splits a broad lobe into several local maxima; take its apex.
    let k = argmax(&mag, (first - first / 4).max(lo), (first + first / 4).min(max_period));
    let b = mag[k];
    let coarse = k as f64 + apex_shift(&mag, k);

    // Summing the first q multiples averages out noise that flattens a
    // single apex, and each multiple pins the period q times more finely.
    let half = (first / 4).max(1) as f64;
    let q = ((top - 1) as f64 / (coarse + half)).floor().min(MAX_MULTIPLE) as usize;
    let period = if q >= 2 {
        let comb = |p: f64| (1..=q).map(|m| interp(&mag, p * m as f64)).sum::<f64>();
        let search = |center: f64, radius: f64, step: f64| -> f64 {
            let n = (radius / step).ceil() as i64;
            (-n..=n)
                .map(|j| center + j as f64 * step)
                .filter(|&p| p >= lo as f64)
                .fold((center, f64::NEG_INFINITY), |best, p| {
                    let v = comb(p);
                    if v > best.1 {
                        (p, v)
                    } else {
                        best
                    }
                })
                .0
        };
        let rough = search(coarse, half, 0.25);
        search(rough, 0.5, 1.0 / 64.0)
    } else {
        coarse
    };

    let mut others: Vec<f64> = (min_period..=max_period).filter(|&j| j != k).map(|j| mag[j].abs()).collect();
    let median = median(&mut others).max(b * 1e-15);
    Ok(ClockEstimate {
        period_samples: period,
        confidence_db: 20.0 * (b / median).log10(),
        normalized_peak: b,
    })
}

/// Highest multiple of the coarse period used for refinement.
const MAX_MULTIPLE: f64 = 16.0;

/// Linear interpolation of `v` at fractional index `x`.
fn interp(v: &[f64], x: f64) -> f64 {
    let i = x.floor() as usize;
    let f = x - i as f64;
    v[i] * (1.0 - f) + v[(i + 1).min(v.len() - 1)] * f
}

fn argmax(v: &[f64], lo: usize, hi: usize) -> usize {
    (lo..=hi).fold(lo, |best, j| if v[j] > v[best] { j } else { best })
}

/// Sub-sample apex offset of a triangular peak at `k` from its neighbours.
fn apex_shift(v: &[f64], k: usize) -> f64 {
    let (a, b, c) = (v[k - 1], v[k], v[k + 1]);
    let drop = b - a.min(c);
    if drop > 0.0 {
        (0.5 * (c - a) / drop).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    }
}

/// Largest clock-harmonic spike of the magnitude spectrum over its median
/// floor, in dB.
///
/// Harmonics `1..=16` of the clock (within Nyquist) are searched, each over
/// the nearest bin and its two neighbours; the DC bin is excluded from both
/// the peak search and the floor.
pub fn spike_snr(iq: &[Complex64], clock: &ClockEstimate) -> f64 {
    let n = iq.len();
    if n < 4 || !(clock.period_samples >= 2.0) {
        return f64::NAN;
    }
    let mag: Vec<f64> = fft(iq).iter().map(|v| v.norm()).collect();
    let fund = n as f64 / clock.period_samples;
    let mut peak = 0.0f64;
    for h in 1..=16usize {
        let center = (fund * h as f64).round() as i64;
        if center as f64 > n as f64 / 2.0 {
            break;
        }
        for bin in center - 1..=center + 1 {
            let idx = bin.rem_euclid(n as i64) as usize;
            if idx != 0 {
                peak = peak.max(mag[idx]);
            }
        }
    }
    let mut rest: Vec<f64> = mag[1..].to_vec();
    let floor = median(&mut rest).max(peak * 1e-15).max(f64::MIN_POSITIVE);
    20.0 * (peak / floor).log10()
}

/// Lag profile `mean_t r_i(t) r_ref*(t−ℓ)` for `ℓ ∈ [tau, tau + n_lags)`,
/// averaged over packets, one profile per antenna.
///
/// Products of the two ports cancel the unknown carrier phase, so the
/// average across packets needs no alignment.
pub fn lag_profiles(packets: &[Packet<'_>], tau: usize, n_lags: usize) -> Result<Vec<Vec<Complex64>>> {
    let first = packets.first().ok_or(Error::Empty("no packets"))?;
    let n_ant = first.n_antennas();
    let mut acc = vec![vec![Complex64::new(0.0, 0.0); n_lags]; n_ant];
    for pkt in packets {
        for (a, seg) in segments_sorted(pkt)?.into_iter().enumerate() {
            if seg.switched.len() <= tau + n_lags {
                return Err(Error::invalid("n_lags", "lag window exceeds the usable dwell"));
            }
            let c = cross_correlation(seg.switched, seg.reference, tau, n_lags);
            for (x, v) in acc[a].iter_mut().zip(c) {
                *x += v;
            }
        }
    }
    let k = packets.len() as f64;
    for prof in &mut acc {
        for x in prof.iter_mut() {
            *x /= k;
        }
    }
    Ok(acc)
}

/// Emanation spike SNR of the lag profile starting at `tau`, averaged in dB
/// over antennas.
///
/// The window spans `n_periods` clock periods. With `tau = 0` it contains the
/// lag-0 spike of the correlated noise, which spreads flat across the
/// spectrum and raises the floor; with `tau` at a period multiple only the
/// residual decorrelated noise remains.
pub fn emanation_snr(packets: &[Packet<'_>], clock: &ClockEstimate, tau: usize, n_periods: usize) -> Result<f64> {
    let period = clock.lag_for(1).max(2);
    let n_lags = period * n_periods.max(1);
    let lag_clock = ClockEstimate {
        period_samples: period as f64,
        ..*clock
    };
    let profiles = lag_profiles(packets, tau, n_lags)?;
    let snrs: Vec<f64> = profiles.iter().map(|p| spike_snr(p, &lag_clock)).collect();
    Ok(snrs.iter().sum::<f64>() / snrs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::{packetize, simulate_capture, SwitchSchedule};
    use crate::emamodel::{
        true_relative_channel, ArrayGeometry, EmanationSource, InterferenceSource, NoiseModel, Path, PathSet,
    };
    use crate::localize::Point2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    struct Setup {
        src: EmanationSource,
        geom: ArrayGeometry,
        sched: SwitchSchedule,
    }

    fn setup(period: f64, amplitude: f64, dwell: usize) -> Setup {
        Setup {
            src: EmanationSource::new(1.0 / period, 0.5, amplitude, Point2::default()).unwrap(),
            geom: ArrayGeometry::new(8, 0.1, 1.0).unwrap(),
            sched: SwitchSchedule::sequential(8, dwell, 0).unwrap(),
        }
    }

    fn two_path() -> PathSet {
        PathSet::new(vec![
            Path::new(0.0, c(1.0, 0.0)),
            Path::new(30f64.to_radians(), c(0.5, 0.0)),
        ])
        .unwrap()
    }

    #[test]
    fn noiseless_estimators_recover_truth() {
        let s = setup(64.0, 1.0, 1024);
        let noise = NoiseModel::new(0.0, 0.0, 0).unwrap();
        let paths = two_path();
        let cap = simulate_capture(&s.src, &s.geom, &paths, &noise, &s.sched, 1.0, 1, &[]).unwrap();
        let pkts = packetize(&cap);
        let truth = true_relative_channel(&s.geom, &paths).unwrap();
        let std = estimate_standard(&pkts[0]).unwrap();
        let off = estimate_offset(&pkts[0], 64).unwrap();
        let inv = estimate_inverse(&pkts[0], 64).unwrap();
        assert!((std.values[1] - c(0.98369, -0.10300)).norm() < 1e-5);
        for h in [&std, &off, &inv] {
            assert!(h.relative_error(&truth) < 1e-12);
            assert_eq!(h.values[0], c(1.0, 0.0));
        }
        assert!(off.relative_error(&std) < 1e-12);
        assert_eq!(off.tau_samples, 64);
        let check = detect_interference(&off, &inv, 0.1).unwrap();
        assert!(check.score < 1e-12 && !check.interfered);
    }

    /// Mean of the first switched element's estimate over seeded two-element
    /// captures with h = 1, unit signal power and unit noise power.
    fn mean_estimate(tau: Option<usize>, seeds: std::ops::Range<u64>) -> Complex64 {
        let src = EmanationSource::new(1.0 / 64.0, 0.5, 2f64.sqrt(), Point2::default()).unwrap();
        let geom = ArrayGeometry::new(2, 0.1, 1.0).unwrap();
        let sched = SwitchSchedule::sequential(2, 100_000, 0).unwrap();
        let paths = PathSet::new(vec![Path::new(0.0, c(1.0, 0.0))]).unwrap();
        let n = seeds.end - seeds.start;
        let sum: Complex64 = seeds
            .map(|seed| {
                let noise = NoiseModel::new(1.0, 0.8, seed).unwrap();
                let cap = simulate_capture(&src, &geom, &paths, &noise, &sched, 1.0, 1, &[]).unwrap();
                let pkt = &packetize(&cap)[0];
                match tau {
                    None => estimate_standard(pkt).unwrap().values[1],
                    Some(t) => estimate_offset(pkt, t).unwrap().values[1],
                }
            })
            .sum();
        sum / n as f64
    }

    #[test]
    fn standard_bias_matches_noise_correlation() {
        // (h S(0) + ρσ²) / (S(0) + σ²) with S(0) = σ² = 1, ρ = 0.8.
        let m = mean_estimate(None, 0..8);
        assert!((m - c(0.9, 0.0)).norm() < 0.9 * 0.05, "{m}");
    }

    #[test]
    fn offset_suppresses_bias() {
        let std_bias = (mean_estimate(None, 0..8) - c(1.0, 0.0)).norm();
        for k in 1..=3 {
            let m = mean_estimate(Some(64 * k), 0..8);
            let bias = (m - c(1.0, 0.0)).norm();
            assert!(bias < 0.02, "k={k}: {m}");
            assert!(bias < 0.2 * std_bias, "k={k}: {bias} vs {std_bias}");
        }
    }

    #[test]
    fn broadside_standard_is_unity() {
        let s = setup(64.0, 1.0, 256);
        let noise = NoiseModel::new(0.0, 0.0, 0).unwrap();
        let paths = PathSet::new(vec![Path::new(0.0, c(2.0, 1.0))]).unwrap();
        let cap = simulate_capture(&s.src, &s.geom, &paths, &noise, &s.sched, 1.0, 1, &[]).unwrap();
        let h = estimate_standard(&packetize(&cap)[0]).unwrap();
        assert!(h.values.iter().all(|v| (v - c(1.0, 0.0)).norm() < 1e-9));
    }

    #[test]
    fn silent_reference_errors() {
        let s = setup(64.0, 0.0, 256);
        let noise = NoiseModel::new(0.0, 0.0, 0).unwrap();
        let cap = simulate_capture(&s.src, &s.geom, &two_path(), &noise, &s.sched, 1.0, 1, &[]).unwrap();
        let pkts = packetize(&cap);
        assert!(matches!(estimate_standard(&pkts[0]), Err(Error::ZeroReferencePower)));
        assert!(matches!(estimate_offset(&pkts[0], 64), Err(Error::DegenerateOffset { .. })));
    }

    #[test]
    fn half_period_offset_is_degenerate_in_noise() {
        let s = setup(64.0, 2f64.sqrt(), 100_000);
        let sched = SwitchSchedule::sequential(2, 100_000, 0).unwrap();
        let geom = ArrayGeometry::new(2, 0.1, 1.0).unwrap();
        let paths = PathSet::new(vec![Path::new(0.0, c(1.0, 0.0))]).unwrap();
        let mut flagged = 0;
        for seed in 0..10 {
            let noise = NoiseModel::new(1.0, 0.8, seed).unwrap();
            let cap = simulate_capture(&s.src, &geom, &paths, &noise, &sched, 1.0, 1, &[]).unwrap();
            if matches!(estimate_offset(&packetize(&cap)[0], 32), Err(Error::DegenerateOffset { .. })) {
                flagged += 1;
            }
        }
        assert!(flagged >= 9, "{flagged}/10");
    }

    #[test]
    fn half_period_raw_autocorrelation_vanishes() {
        // Brute-force check of the lag structure behind the degenerate case.
        let src = EmanationSource::new(1.0 / 64.0, 0.5, 1.0, Point2::default()).unwrap();
        let x = crate::emamodel::synthesize_emanation(&src, 1.0, 6400, 0.0).unwrap();
        let r = |lag: usize| (lag..x.len()).map(|t| (x[t] * x[t - lag].conj()).re).sum::<f64>();
        assert_eq!(r(32), 0.0);
        let mean = 0.5;
        let rc = |lag: usize| (lag..x.len()).map(|t| (x[t].re - mean) * (x[t - lag].re - mean)).sum::<f64>();
        assert!(rc(32) < 0.0);
    }

    #[test]
    fn tau_must_fit_dwell() {
        let s = setup(8.0, 1.0, 32);
        let noise = NoiseModel::new(0.0, 0.0, 0).unwrap();
        let cap = simulate_capture(&s.src, &s.geom, &two_path(), &noise, &s.sched, 1.0, 1, &[]).unwrap();
        let pkts = packetize(&cap);
        assert!(estimate_offset(&pkts[0], 32).is_err());
        assert!(estimate_offset(&pkts[0], 0).is_err());
    }

    fn noisy_packets_score(seed: u64, with_interferer: bool) -> f64 {
        let s = setup(64.0, 2f64.sqrt(), 8192);
        let paths = PathSet::new(vec![Path::new(0.3, c(1.0, 0.0))]).unwrap();
        let noise = NoiseModel::new(1.0, 0.8, seed).unwrap();
        let itf = if with_interferer {
            let src = EmanationSource::new(1.0 / 83.0, 0.5, 2f64.sqrt(), Point2::default()).unwrap();
            vec![InterferenceSource::from_direction(src, &s.geom, -0.6, 0.0041).unwrap()]
        } else {
            vec![]
        };
        let cap = simulate_capture(&s.src, &s.geom, &paths, &noise, &s.sched, 1.0, 1, &itf).unwrap();
        let pkts = packetize(&cap);
        let off = estimate_offset(&pkts[0], 64).unwrap();
        let inv = estimate_inverse(&pkts[0], 64).unwrap();
        detect_interference(&off, &inv, 0.1).unwrap().score
    }

    #[test]
    fn inverse_agrees_without_interference() {
        let ok = (0..40).filter(|&s| noisy_packets_score(s, false) < 0.1).count();
        assert!(ok >= 38, "{ok}/40");
    }

    #[test]
    fn inverse_deviates_with_interference() {
        let hit = (0..40).filter(|&s| noisy_packets_score(100 + s, true) > 0.1).count();
        assert!(hit >= 38, "{hit}/40");
    }

    #[test]
    fn interference_score_arithmetic() {
        let mut off = RelativeChannel::from_values(vec![c(1.0, 0.0); 9], ChannelKind::Offset);
        off.tau_samples = 5;
        let mut inv = off.clone();
        inv.kind = ChannelKind::Inverse;
        let same = detect_interference(&off, &inv, 0.1).unwrap();
        assert_eq!(same.score, 0.0);
        assert!(!same.interfered);
        inv.values[3] = c(1.2, 0.0);
        let check = detect_interference(&off, &inv, 0.1).unwrap();
        assert!((check.score - 0.2 / 3.0).abs() < 1e-12);
        assert!(!check.interfered);
        inv.tau_samples = 6;
        assert!(matches!(detect_interference(&off, &inv, 0.1), Err(Error::MixedProvenance(_))));
    }

    #[test]
    fn averaging_identity_and_errors() {
        let h = RelativeChannel::from_values(vec![c(1.0, 0.0), c(0.3, -0.2), c(-0.5, 0.1)], ChannelKind::Offset);
        let avg = average_channels(&vec![h.clone(); 7]).unwrap();
        assert!(avg.relative_error(&h) < 1e-15);
        assert_eq!(avg.n_packets_averaged, 7);
        assert!(matches!(average_channels(&[]), Err(Error::Empty(_))));
        let other = RelativeChannel::from_values(h.values.clone(), ChannelKind::Standard);
        assert!(average_channels(&[h, other]).is_err());
    }

    #[test]
    fn averaging_shrinks_deviation() {
        let s = setup(64.0, 2f64.sqrt(), 1024);
        let paths = PathSet::new(vec![Path::new(0.3, c(1.0, 0.0))]).unwrap();
        let truth = true_relative_channel(&s.geom, &paths).unwrap();
        let noise = NoiseModel::new(1.0, 0.8, 77).unwrap();
        let cap = simulate_capture(&s.src, &s.geom, &paths, &noise, &s.sched, 1.0, 1000, &[]).unwrap();
        let ests: Vec<RelativeChannel> = packetize(&cap).iter().map(|p| estimate_offset(p, 64).unwrap()).collect();
        let dev = |group: &[RelativeChannel]| average_channels(group).unwrap().values[4] - truth.values[4];
        let std_of = |k: usize| {
            let devs: Vec<Complex64> = ests.chunks(k).map(dev).collect();
            (devs.iter().map(|d| d.norm_sqr()).sum::<f64>() / devs.len() as f64).sqrt()
        };
        let ratio = std_of(1) / std_of(100);
        assert!((10.0 / 1.3..=10.0 * 1.3).contains(&ratio), "ratio {ratio}");
    }

    fn square(period: f64, amplitude: f64, n: usize) -> Vec<Complex64> {
        let src = EmanationSource::new(1.0 / period, 0.5, amplitude, Point2::default()).unwrap();
        crate::emamodel::synthesize_emanation(&src, 1.0, n, 0.0).unwrap()
    }

    #[test]
    fn clock_of_pure_square_wave() {
        let x = square(64.0, 1.0, 8192);
        let clk = detect_clock(&x, 10, 1000).unwrap();
        assert!((clk.period_samples - 64.0).abs() <= 0.5, "{clk:?}");
        let scaled: Vec<Complex64> = x.iter().map(|v| v * 37.5).collect();
        assert_eq!(detect_clock(&scaled, 10, 1000).unwrap().period_samples, clk.period_samples);
    }

    #[test]
    fn clock_of_3khz_at_default_rate() {
        let fs = 3.072e6;
        let src = EmanationSource::new(3000.0, 0.5, 1.0, Point2::default()).unwrap();
        let x = crate::emamodel::synthesize_emanation(&src, fs, 1 << 15, 0.0).unwrap();
        let clk = detect_clock(&x, 300, 4000).unwrap();
        assert!((clk.frequency_hz(fs) - 3000.0).abs() <= 1.5);
    }

    #[test]
    fn clock_absent_in_noise() {
        let m = NoiseModel::new(1.0, 0.0, 5).unwrap();
        let x = &crate::emamodel::generate_correlated_noise(&m, 1, 1 << 15)[0];
        assert!(matches!(detect_clock(x, 10, 4000), Err(Error::NoClock { .. })));
    }

    #[test]
    fn autocorrelation_is_hermitian() {
        let m = NoiseModel::new(1.0, 0.0, 8).unwrap();
        let x = &crate::emamodel::generate_correlated_noise(&m, 1, 512)[0];
        let pos = autocorrelation(x, 5);
        // Negative lags by direct summation.
        for r in &pos[1..] {
            let l = r.lag_samples as usize;
            let neg: Complex64 = (0..x.len() - l).map(|t| x[t] * x[t + l].conj()).sum::<Complex64>() / (x.len() - l) as f64;
            assert!((neg - r.value.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn cross_correlation_matches_direct_sum() {
        let m = NoiseModel::new(1.0, 0.5, 12).unwrap();
        let s = crate::emamodel::generate_correlated_noise(&m, 2, 300);
        let fast = cross_correlation(&s[0], &s[1], 3, 20);
        for (i, v) in fast.iter().enumerate() {
            let l = 3 + i;
            let direct: Complex64 = (l..300).map(|t| s[0][t] * s[1][t - l].conj()).sum::<Complex64>() / (300 - l) as f64;
            assert!((v - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn spike_snr_behaviour() {
        let clk = ClockEstimate {
            period_samples: 64.0,
            confidence_db: 0.0,
            normalized_peak: 1.0,
        };
        let x = square(64.0, 1.0, 8192);
        assert!(spike_snr(&x, &clk) > 40.0);

        let mut noise_only = Vec::new();
        let mut deltas = Vec::new();
        for seed in 0..20 {
            let m = NoiseModel::new(1.0, 0.0, seed).unwrap();
            let w = &crate::emamodel::generate_correlated_noise(&m, 1, 8192)[0];
            noise_only.push(spike_snr(w, &clk));
            let a: Vec<Complex64> = square(64.0, 0.1, 8192).iter().zip(w).map(|(s, n)| s + n).collect();
            let b: Vec<Complex64> = square(64.0, 0.2, 8192).iter().zip(w).map(|(s, n)| s + n).collect();
            deltas.push(spike_snr(&b, &clk) - spike_snr(&a, &clk));
        }
        let mean_noise = noise_only.iter().sum::<f64>() / 20.0;
        assert!(mean_noise.abs() < 8.0, "noise-only {mean_noise}");
        let mean_delta = deltas.iter().sum::<f64>() / 20.0;
        assert!((mean_delta - 6.0).abs() < 1.0, "delta {mean_delta}");
    }
}
