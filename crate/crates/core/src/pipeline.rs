//! End-to-end scenario runs, parameter sweeps and CSV reports.
//!
//! Per vantage and carrier: simulate a capture segment, packetize, detect the
//! clock, estimate offset and inverse channels per packet, average, check for
//! interference (retrying on fresh segments), measure SNR, then solve for AoA.
//! Bearings from all vantages are triangulated.
//!
//! Every random draw is seeded by [`derive_seed`] from the run seed and the
//! `(vantage, carrier, attempt)` indices, so a run is a pure function of the
//! scenario and its seed.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path as FsPath;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::aoasolve::{
    build_window_matrix, build_window_matrix_scaled, extract_angles, ifft_peak_aoa, ifft_profile, music_aoa,
    solve_joint, solve_sparse, spotfi_aoa, AoAEstimate, Measurement, MeasurementTag, Method, ScanGrid,
    SolverOptions, WindowMatrix,
};
use crate::capture::{packetize, simulate, CaptureConfig, IQCapture, Packet, SwitchSchedule};
use crate::chanest::{
    average_channels, detect_clock, detect_interference, emanation_snr, estimate_lagged, estimate_standard,
    ChannelKind, ClockEstimate, OffsetOptions, RelativeChannel,
};
use crate::emamodel::{wrap_angle, ArrayGeometry, EmanationSource, InterferenceSource, NoiseModel, Path, PathSet};
use crate::localize::{triangulate, Bearing, LocalizationResult, Point2};
use crate::scenario::{EstimatorSpec, Scenario, SolverSpec, SourceSpec};
use crate::{derive_seed, Error, Result};

/// Clock detection looks at no more than this many reference samples.
const CLOCK_WINDOW: usize = 1 << 18;

/// Estimated channels of one capture.
#[derive(Debug, Clone)]
pub struct ChannelOutcome {
    pub clock: ClockEstimate,
    pub tau_samples: usize,
    /// Offset estimate, or the standard one when `tau_samples == 0`.
    pub channel: RelativeChannel,
    /// Per-group averages for time-diversity joint solving.
    pub groups: Vec<RelativeChannel>,
    /// `None` for the lag-0 estimator, which has no inverse counterpart.
    pub interference_score: Option<f64>,
    pub interfered: bool,
    pub snr_db: f64,
    /// Packets skipped because their offset denominator was degenerate.
    pub packets_skipped: usize,
}

/// AoA solution with solver diagnostics.
#[derive(Debug, Clone)]
pub struct AoAOutcome {
    pub estimate: AoAEstimate,
    pub solver_iters: usize,
    pub converged: bool,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct VantageReport {
    pub index: usize,
    pub position_m: Point2,
    pub heading_rad: f64,
    pub true_aoa_rad: f64,
    pub aoa: AoAOutcome,
    /// Strongest estimated path versus the direct path, in degrees.
    pub aoa_error_deg: f64,
    pub clock_hz: f64,
    pub tau_samples: usize,
    pub snr_db: f64,
    /// Worst score over carriers for the accepted segments.
    pub interference_score: Option<f64>,
    /// Capture segments used per carrier, including interfered ones.
    pub attempts: usize,
    pub packets_skipped: usize,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub seed: u64,
    pub truth_m: Point2,
    pub vantages: Vec<VantageReport>,
    /// `None` with fewer than two vantages.
    pub localization: Option<LocalizationResult>,
    pub loc_error_m: f64,
}

impl Report {
    pub fn converged(&self) -> bool {
        self.vantages.iter().all(|v| v.aoa.converged)
    }

    /// 0 on success, 5 when any solver stopped before converging.
    pub fn exit_code(&self) -> i32 {
        if self.converged() {
            0
        } else {
            5
        }
    }

    pub fn mean_aoa_error_deg(&self) -> f64 {
        mean(self.vantages.iter().map(|v| v.aoa_error_deg))
    }

    pub fn mean_snr_db(&self) -> f64 {
        mean(self.vantages.iter().map(|v| v.snr_db))
    }

    pub fn total_iters(&self) -> usize {
        self.vantages.iter().map(|v| v.aoa.solver_iters).sum()
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn path_gain(spec: &SourceSpec, from: Point2, ple: f64) -> f64 {
    let r = spec.position.distance(from);
    spec.amplitude * r.powf(-0.5 * ple)
}

fn emanation(spec: &SourceSpec, amplitude: f64) -> Result<EmanationSource> {
    let mut src = EmanationSource::new(spec.clock_hz, spec.duty, amplitude, spec.position)?;
    src.gate = spec.gate;
    Ok(src)
}

/// Array geometry of vantage `v` at carrier `carrier`.
pub fn vantage_geometry(s: &Scenario, v: usize, carrier: usize) -> Result<ArrayGeometry> {
    let vs = s
        .vantages
        .get(v)
        .ok_or_else(|| Error::invalid("vantage", format!("index {v} out of range")))?;
    let lambda = *s
        .array
        .wavelengths()
        .get(carrier)
        .ok_or_else(|| Error::invalid("carrier", format!("index {carrier} out of range")))?;
    Ok(ArrayGeometry::new(s.array.n_switched, s.array.spacing_m, lambda)?.at_vantage(vs.position, vs.heading_rad))
}

/// Direct path plus the vantage's reflections, in local angles.
pub fn vantage_paths(s: &Scenario, v: usize) -> Result<PathSet> {
    let geom = vantage_geometry(s, v, 0)?;
    let mut paths = vec![Path::new(geom.local_aoa_to(s.source.position), Complex64::new(1.0, 0.0))];
    paths.extend(s.vantages[v].multipath.iter().map(|&(aoa, g)| Path::new(aoa, g)));
    PathSet::new(paths)
}

/// Simulates capture segment `attempt` of vantage `v` at carrier `carrier`.
///
/// Segments follow each other in time, so retries see a continuation of the
/// same waveforms with fresh noise.
pub fn simulate_vantage(s: &Scenario, v: usize, carrier: usize, seed: u64, attempt: usize) -> Result<IQCapture> {
    let geom = vantage_geometry(s, v, carrier)?;
    let paths = vantage_paths(s, v)?;
    let ple = s.noise.path_loss_exponent;
    let src = emanation(&s.source, path_gain(&s.source, geom.vantage_position_m, ple))?;
    let interferers = s
        .interferers
        .iter()
        .map(|itf| {
            let amp = path_gain(&itf.source, geom.vantage_position_m, ple);
            let aoa = geom.local_aoa_to(itf.source.position);
            InterferenceSource::from_direction(emanation(&itf.source, amp)?, &geom, aoa, itf.freq_offset_hz)
        })
        .collect::<Result<Vec<_>>>()?;
    let noise_seed = derive_seed(seed, &[v as u64, carrier as u64, attempt as u64]);
    let noise = NoiseModel::new(s.noise.noise_power, s.noise.rho, noise_seed)?;
    let schedule = SwitchSchedule::sequential(s.array.n_switched, s.array.dwell_samples, s.array.guard_samples)?;
    let n_sweeps = s.estimator.packets;
    simulate(&CaptureConfig {
        source: &src,
        geometry: &geom,
        paths: &paths,
        noise: &noise,
        schedule: &schedule,
        fs: s.array.fs_hz,
        n_sweeps,
        interferers: &interferers,
        start_sample: (attempt * n_sweeps * schedule.sweep_len()) as u64,
    })
}

fn estimate_packet(pkt: &Packet<'_>, tau: usize, kind: ChannelKind, z: f64) -> Result<RelativeChannel> {
    match kind {
        ChannelKind::Standard => estimate_standard(pkt),
        _ => estimate_lagged(pkt, tau, kind, OffsetOptions { floor_z: z }),
    }
}

/// Clock detection, channel estimation, interference check and SNR for one
/// capture.
///
/// `groups` splits the packets into that many contiguous groups whose
/// averages are reported separately.
pub fn estimate_capture(cap: &IQCapture, est: &EstimatorSpec, wavelength_m: f64, groups: usize) -> Result<ChannelOutcome> {
    let fs = cap.fs;
    let window = &cap.ref_stream[..cap.ref_stream.len().min(CLOCK_WINDOW)];
    let min_p = ((fs / est.clock_max_hz).floor() as usize).max(2);
    let max_p = ((fs / est.clock_min_hz).ceil() as usize).min(window.len() / 4);
    let clock = detect_clock(window, min_p, max_p).map_err(|e| e.at("clock detection"))?;
    let tau = clock.lag_for(est.tau_periods);
    let packets = packetize(cap);
    if packets.is_empty() {
        return Err(Error::Empty("capture holds no complete sweep").at("packetize"));
    }

    let kind = if tau == 0 { ChannelKind::Standard } else { ChannelKind::Offset };
    let mut per_packet: Vec<(usize, RelativeChannel, Option<RelativeChannel>)> = Vec::new();
    let mut skipped = 0;
    let mut last_err = None;
    for (p, pkt) in packets.iter().enumerate() {
        let off = estimate_packet(pkt, tau, kind, est.floor_z);
        let inv = if tau > 0 {
            estimate_packet(pkt, tau, ChannelKind::Inverse, est.floor_z).map(Some)
        } else {
            Ok(None)
        };
        match (off, inv) {
            (Ok(h), Ok(g)) => per_packet.push((p, h.with_wavelength(wavelength_m), g.map(|g| g.with_wavelength(wavelength_m)))),
            (Err(e @ Error::DegenerateOffset { .. }), _) | (_, Err(e @ Error::DegenerateOffset { .. })) => {
                log::debug!("packet {p} skipped: {e}");
                skipped += 1;
                last_err = Some(e);
            }
            (Err(e), _) | (_, Err(e)) => return Err(e.at("channel estimation")),
        }
    }
    if per_packet.is_empty() {
        return Err(last_err.unwrap_or(Error::Empty("no packets")).at("channel estimation"));
    }

    let offs: Vec<RelativeChannel> = per_packet.iter().map(|(_, h, _)| h.clone()).collect();
    let channel = average_channels(&offs).map_err(|e| e.at("averaging"))?;
    let (score, interfered) = if tau > 0 {
        let invs: Vec<RelativeChannel> = per_packet.iter().filter_map(|(_, _, g)| g.clone()).collect();
        let inv = average_channels(&invs).map_err(|e| e.at("averaging"))?;
        let check = detect_interference(&channel, &inv, est.interference_threshold).map_err(|e| e.at("interference check"))?;
        (Some(check.score), check.interfered)
    } else {
        (None, false)
    };

    let n_packets = packets.len();
    let groups = groups.clamp(1, n_packets);
    let mut group_channels = Vec::with_capacity(groups);
    for g in 0..groups {
        let lo = g * n_packets / groups;
        let hi = (g + 1) * n_packets / groups;
        let members: Vec<RelativeChannel> = per_packet
            .iter()
            .filter(|(p, _, _)| (lo..hi).contains(p))
            .map(|(_, h, _)| h.clone())
            .collect();
        if members.is_empty() {
            return Err(Error::Empty("time group with no usable packet").at("averaging"));
        }
        group_channels.push(average_channels(&members).map_err(|e| e.at("averaging"))?);
    }

    let snr_db = if interfered { f64::NAN } else { snr_for(&packets, &clock, tau, est.snr_periods)? };
    Ok(ChannelOutcome {
        clock,
        tau_samples: tau,
        channel,
        groups: group_channels,
        interference_score: score,
        interfered,
        snr_db,
        packets_skipped: skipped,
    })
}

/// Emanation SNR over at most `periods` clock periods, shortened to fit the
/// usable dwell; NaN when not even one period fits.
fn snr_for(packets: &[Packet<'_>], clock: &ClockEstimate, tau: usize, periods: usize) -> Result<f64> {
    let usable = packets[0].segments.iter().map(|s| s.switched.len()).min().unwrap_or(0);
    let period = clock.lag_for(1).max(2);
    let fit = usable.saturating_sub(tau + 1) / period;
    let periods = periods.max(1).min(fit);
    if periods == 0 {
        log::warn!("clock period {period} leaves no room for an SNR window");
        return Ok(f64::NAN);
    }
    emanation_snr(packets, clock, tau, periods).map_err(|e| e.at("snr"))
}

/// Window matrices shared across vantages of one run, keyed by wavelength
/// ratio bits.
#[derive(Default)]
struct WindowCache {
    by_scale: HashMap<u64, WindowMatrix>,
}

impl WindowCache {
    fn get(&mut self, n: usize, d: usize, scale: f64) -> Result<&WindowMatrix> {
        use std::collections::hash_map::Entry;
        match self.by_scale.entry(scale.to_bits()) {
            Entry::Occupied(e) => Ok(e.into_mut()),
            Entry::Vacant(e) => {
                let w = if scale == 1.0 {
                    build_window_matrix(n, d)?
                } else {
                    build_window_matrix_scaled(n, d, scale)?
                };
                Ok(e.insert(w))
            }
        }
    }
}

fn solver_options(s: &SolverSpec) -> SolverOptions {
    SolverOptions {
        max_iters: s.max_iters,
        tol: s.tol,
        data_fit: s.data_fit,
        ..SolverOptions::default()
    }
}

/// AoA from one or more channels of the same array.
///
/// `channels[0]` fixes the reference wavelength. Only the joint method uses
/// more than one channel; the others solve `channels[0]` alone.
pub fn estimate_aoa(channels: &[RelativeChannel], spacing_m: f64, solver: &SolverSpec) -> Result<AoAOutcome> {
    estimate_aoa_cached(channels, spacing_m, solver, &mut WindowCache::default())
}

fn wavelength_of(h: &RelativeChannel) -> Result<f64> {
    h.carrier_wavelength_m
        .ok_or_else(|| Error::invalid("carrier_wavelength_m", "channel carries no wavelength"))
}

fn estimate_aoa_cached(
    channels: &[RelativeChannel],
    spacing_m: f64,
    solver: &SolverSpec,
    cache: &mut WindowCache,
) -> Result<AoAOutcome> {
    let first = channels.first().ok_or(Error::Empty("no channels"))?;
    let lambda0 = wavelength_of(first)?;
    let dl = spacing_m / lambda0;
    let n = first.len();
    let d = solver.grid;
    let opts = solver_options(solver);
    let done = |estimate| AoAOutcome {
        estimate,
        solver_iters: 0,
        converged: true,
        residual: f64::NAN,
    };
    match solver.method {
        Method::Sparse => {
            let p = ifft_profile(first, d)?;
            let w = cache.get(n, d, 1.0)?;
            let prof = solve_sparse(&p, w, solver.beta, dl, &opts)?;
            Ok(AoAOutcome {
                estimate: extract_angles(&prof, solver.rel_threshold)?,
                solver_iters: prof.solver_iters,
                converged: prof.converged,
                residual: prof.residual,
            })
        }
        Method::Joint => {
            let mut profiles = Vec::with_capacity(channels.len());
            let mut scales = Vec::with_capacity(channels.len());
            for h in channels {
                let lambda = wavelength_of(h)?;
                if h.len() != n {
                    return Err(Error::MixedProvenance(format!("lengths {n} and {}", h.len())));
                }
                profiles.push(ifft_profile(h, d)?);
                scales.push(lambda0 / lambda);
            }
            for &sc in &scales {
                cache.get(n, d, sc)?;
            }
            let measurements: Vec<Measurement<'_>> = channels
                .iter()
                .zip(&profiles)
                .zip(&scales)
                .enumerate()
                .map(|(l, ((h, p), &sc))| Measurement {
                    profile: p,
                    window: &cache.by_scale[&sc.to_bits()],
                    d_over_lambda: dl * sc,
                    tag: if sc == 1.0 {
                        MeasurementTag::Time(l)
                    } else {
                        MeasurementTag::Frequency {
                            wavelength_m: h.carrier_wavelength_m.unwrap_or(lambda0),
                        }
                    },
                })
                .collect();
            // √L keeps lambda_g = 1 as sparse as L independent solves on identical data.
            let weight = solver.lambda_g * solver.beta * (measurements.len() as f64).sqrt();
            let prof = solve_joint(&measurements, weight, &opts)?;
            Ok(AoAOutcome {
                estimate: extract_angles(&prof, solver.rel_threshold)?,
                solver_iters: prof.solver_iters,
                converged: prof.converged,
                residual: prof.residual,
            })
        }
        Method::Music => Ok(done(music_aoa(first, dl, solver.n_sources, &ScanGrid::default())?)),
        Method::Spotfi => Ok(done(spotfi_aoa(first, dl, solver.subarray_len, solver.n_sources, &ScanGrid::default())?)),
        Method::Ifft => Ok(done(ifft_peak_aoa(first, dl, d, solver.rel_threshold)?)),
    }
}

fn run_vantage(s: &Scenario, v: usize, seed: u64, cache: &mut WindowCache) -> Result<VantageReport> {
    let vs = &s.vantages[v];
    let lambdas = s.array.wavelengths();
    let groups = if s.solver.method == Method::Joint { s.solver.joint_groups } else { 1 };
    let mut outcomes = Vec::with_capacity(lambdas.len());
    let mut attempts = 0;
    for (c, &lambda) in lambdas.iter().enumerate() {
        let budget = s.estimator.retry_budget + 1;
        let mut accepted = None;
        let mut worst = 0.0f64;
        for attempt in 0..budget {
            let cap = simulate_vantage(s, v, c, seed, attempt).map_err(|e| e.at("capture"))?;
            let out = estimate_capture(&cap, &s.estimator, lambda, groups)?;
            attempts = attempts.max(attempt + 1);
            if out.interfered {
                let score = out.interference_score.unwrap_or(f64::NAN);
                log::info!("vantage {v} carrier {c} segment {attempt}: interference score {score:.4}, retrying");
                worst = worst.max(score);
                continue;
            }
            accepted = Some(out);
            break;
        }
        match accepted {
            Some(out) => outcomes.push(out),
            None => {
                return Err(Error::InterferenceUnresolved {
                    vantage: v,
                    attempts: budget,
                    score: worst,
                })
            }
        }
    }

    let channels: Vec<RelativeChannel> = if s.solver.method == Method::Joint {
        outcomes.iter().flat_map(|o| o.groups.iter().cloned()).collect()
    } else {
        vec![outcomes[0].channel.clone()]
    };
    let aoa = estimate_aoa_cached(&channels, s.array.spacing_m, &s.solver, cache).map_err(|e| e.at("aoa"))?;
    let true_aoa = vantage_paths(s, v)?.paths()[0].aoa_rad;
    let (est, _) = aoa.estimate.dominant().ok_or(Error::NoPathFound)?;
    let first = &outcomes[0];
    Ok(VantageReport {
        index: v,
        position_m: vs.position,
        heading_rad: vs.heading_rad,
        true_aoa_rad: true_aoa,
        aoa_error_deg: wrap_angle(est - true_aoa).abs().to_degrees(),
        aoa,
        clock_hz: first.clock.frequency_hz(s.array.fs_hz),
        tau_samples: first.tau_samples,
        snr_db: first.snr_db,
        interference_score: outcomes
            .iter()
            .filter_map(|o| o.interference_score)
            .reduce(f64::max),
        attempts,
        packets_skipped: outcomes.iter().map(|o| o.packets_skipped).sum(),
    })
}

/// Runs every vantage of `s` under `seed` and triangulates the bearings.
pub fn run_scenario(s: &Scenario, seed: u64) -> Result<Report> {
    s.validate()?;
    let mut cache = WindowCache::default();
    let vantages = (0..s.vantages.len())
        .map(|v| run_vantage(s, v, seed, &mut cache))
        .collect::<Result<Vec<_>>>()?;
    let truth = s.source.position;
    let (localization, loc_error_m) = if vantages.len() >= 2 {
        let bearings: Vec<Bearing> = vantages
            .iter()
            .map(|r| {
                let (aoa, w) = r.aoa.estimate.dominant().expect("estimates are nonempty");
                Bearing::new(r.position_m, wrap_angle(r.heading_rad + aoa)).with_confidence(w.norm())
            })
            .collect();
        let loc = triangulate(&bearings).map_err(|e| e.at("triangulation"))?;
        (Some(loc), loc.position_m.distance(truth))
    } else {
        (None, f64::NAN)
    };
    Ok(Report {
        seed,
        truth_m: truth,
        vantages,
        localization,
        loc_error_m,
    })
}

/// Runs all seeds of the scenario in order.
pub fn run_all(s: &Scenario) -> Result<Vec<Report>> {
    s.run.seeds.iter().map(|&seed| run_scenario(s, seed)).collect()
}

pub const AOA_HEADER: &str = "seed,vantage,x_m,y_m,heading_deg,true_aoa_deg,est_aoa_deg,aoa_error_deg,n_paths,\
weight_re,weight_im,snr_db,clock_hz,tau_samples,interference_score,attempts,packets_skipped,solver_iters,converged,residual";
pub const PATHS_HEADER: &str = "seed,vantage,rank,aoa_deg,weight_re,weight_im";
pub const LOCALIZATION_HEADER: &str =
    "seed,est_x_m,est_y_m,true_x_m,true_y_m,loc_error_m,residual_m,condition,n_bearings";

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NaN".to_string(), |v| v.to_string())
}

/// Per-vantage rows.
pub fn aoa_csv(reports: &[Report]) -> String {
    let mut out = format!("{AOA_HEADER}\n");
    for r in reports {
        for v in &r.vantages {
            let (est, w) = v.aoa.estimate.dominant().unwrap_or((f64::NAN, Complex64::new(f64::NAN, f64::NAN)));
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.seed,
                v.index,
                v.position_m.x,
                v.position_m.y,
                v.heading_rad.to_degrees(),
                v.true_aoa_rad.to_degrees(),
                est.to_degrees(),
                v.aoa_error_deg,
                v.aoa.estimate.len(),
                w.re,
                w.im,
                v.snr_db,
                v.clock_hz,
                v.tau_samples,
                opt(v.interference_score),
                v.attempts,
                v.packets_skipped,
                v.aoa.solver_iters,
                v.aoa.converged,
                v.aoa.residual,
            );
        }
    }
    out
}

/// Every estimated path, strongest first.
pub fn paths_csv(reports: &[Report]) -> String {
    let mut out = format!("{PATHS_HEADER}\n");
    for r in reports {
        for v in &r.vantages {
            let e = &v.aoa.estimate;
            for (k, (a, w)) in e.angles_rad.iter().zip(&e.weights).enumerate() {
                let _ = writeln!(out, "{},{},{},{},{},{}", r.seed, v.index, k, a.to_degrees(), w.re, w.im);
            }
        }
    }
    out
}

pub fn localization_csv(reports: &[Report]) -> String {
    let mut out = format!("{LOCALIZATION_HEADER}\n");
    for r in reports {
        let (x, y, res, cond, n) = match r.localization {
            Some(l) => (l.position_m.x, l.position_m.y, l.residual_m, l.condition, l.n_bearings),
            None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN, r.vantages.len()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.seed, x, y, r.truth_m.x, r.truth_m.y, r.loc_error_m, res, cond, n
        );
    }
    out
}

/// Writes `aoa.csv`, `paths.csv` and `localization.csv` into `dir`.
pub fn write_reports(reports: &[Report], dir: impl AsRef<FsPath>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("aoa.csv"), aoa_csv(reports))?;
    std::fs::write(dir.join("paths.csv"), paths_csv(reports))?;
    std::fs::write(dir.join("localization.csv"), localization_csv(reports))?;
    Ok(())
}

/// Channel as `element,re,im` rows preceded by `# key = value` provenance.
pub fn channel_csv(h: &RelativeChannel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# kind = {}", h.kind.as_str());
    let _ = writeln!(out, "# tau_samples = {}", h.tau_samples);
    let _ = writeln!(out, "# n_packets = {}", h.n_packets_averaged);
    if let Some(l) = h.carrier_wavelength_m {
        let _ = writeln!(out, "# wavelength_m = {l}");
    }
    out.push_str("element,re,im\n");
    for (i, v) in h.values.iter().enumerate() {
        let _ = writeln!(out, "{i},{},{}", v.re, v.im);
    }
    out
}

pub fn parse_channel_csv(text: &str) -> Result<RelativeChannel> {
    let bad = |m: String| Error::invalid("channel csv", m);
    let mut values = Vec::new();
    let mut kind = ChannelKind::Offset;
    let mut tau = 0;
    let mut n_packets = 1;
    let mut wavelength = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("element") {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if let Some((k, v)) = meta.split_once('=') {
                let v = v.trim();
                match k.trim() {
                    "kind" => {
                        kind = match v {
                            "truth" => ChannelKind::Truth,
                            "standard" => ChannelKind::Standard,
                            "offset" => ChannelKind::Offset,
                            "inverse" => ChannelKind::Inverse,
                            other => return Err(bad(format!("unknown kind `{other}`"))),
                        }
                    }
                    "tau_samples" => tau = v.parse().map_err(|_| bad(format!("tau_samples `{v}`")))?,
                    "n_packets" => n_packets = v.parse().map_err(|_| bad(format!("n_packets `{v}`")))?,
                    "wavelength_m" => wavelength = Some(v.parse().map_err(|_| bad(format!("wavelength_m `{v}`")))?),
                    _ => {}
                }
            }
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(bad(format!("line {}: expected element,re,im", i + 1)));
        }
        let idx: usize = f[0].parse().map_err(|_| bad(format!("line {}: element index", i + 1)))?;
        if idx != values.len() {
            return Err(bad(format!("line {}: element {idx} out of order", i + 1)));
        }
        let re: f64 = f[1].parse().map_err(|_| bad(format!("line {}: re", i + 1)))?;
        let im: f64 = f[2].parse().map_err(|_| bad(format!("line {}: im", i + 1)))?;
        values.push(Complex64::new(re, im));
    }
    if values.len() < 3 {
        return Err(bad(format!("need at least 3 elements, found {}", values.len())));
    }
    let mut h = RelativeChannel::from_values(values, kind);
    h.tau_samples = tau;
    h.n_packets_averaged = n_packets;
    h.carrier_wavelength_m = wavelength;
    Ok(h)
}

/// Scenario parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Sparsity weight β.
    Beta,
    /// Source distance from vantage 0 along the original bearing, meters.
    Range,
    /// Packets averaged per estimate.
    Packets,
    /// Estimator lag in clock periods.
    Tau,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Beta => "beta",
            SweepAxis::Range => "range",
            SweepAxis::Packets => "packets",
            SweepAxis::Tau => "tau",
        }
    }

    /// Copy of `s` with this axis set to `value`.
    pub fn apply(self, s: &Scenario, value: f64) -> Result<Scenario> {
        let mut out = s.clone();
        let whole = |key: &str| -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 && value.is_finite() {
                Ok(value as usize)
            } else {
                Err(Error::scenario(key, format!("sweep value {value} is not a non-negative integer")))
            }
        };
        match self {
            SweepAxis::Beta => out.solver.beta = value,
            SweepAxis::Packets => {
                out.estimator.packets = whole("estimator.packets")?;
                out.solver.joint_groups = out.solver.joint_groups.min(out.estimator.packets.max(1));
            }
            SweepAxis::Tau => out.estimator.tau_periods = whole("estimator.tau_periods")?,
            SweepAxis::Range => {
                if !(value > 0.0) {
                    return Err(Error::scenario("source.x_m", format!("range {value} must be positive")));
                }
                let origin = s.vantages.first().ok_or_else(|| Error::scenario("vantage.0", "missing"))?.position;
                let p = s.source.position;
                let r = p.distance(origin);
                let k = value / r;
                out.source.position = Point2::new(origin.x + k * (p.x - origin.x), origin.y + k * (p.y - origin.y));
            }
        }
        out.validate()?;
        Ok(out)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "beta" => Ok(SweepAxis::Beta),
            "range" => Ok(SweepAxis::Range),
            "packets" => Ok(SweepAxis::Packets),
            "tau" => Ok(SweepAxis::Tau),
            other => Err(Error::scenario("axis", format!("`{other}` is not beta|range|packets|tau"))),
        }
    }
}

/// One sweep point under one seed. Failed runs carry NaN metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub seed: u64,
    pub aoa_error_deg: f64,
    pub loc_error_m: f64,
    pub snr_db: f64,
    pub iters: usize,
    /// Exit code of the run: 0, or the code of its error.
    pub status: i32,
}

/// Runs the scenario at every `value × seed` in parallel; rows come back in
/// `(value, seed)` order.
///
/// Every point reuses the scenario seeds, so differences between values are
/// not masked by different noise draws.
pub fn run_sweep(s: &Scenario, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::scenario("values", "sweep needs at least one value"));
    }
    let scenarios = values
        .iter()
        .map(|&v| axis.apply(s, v))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(usize, u64)> = (0..values.len())
        .flat_map(|i| s.run.seeds.iter().map(move |&seed| (i, seed)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(i, seed)| match run_scenario(&scenarios[i], seed) {
            Ok(r) => SweepRow {
                axis_value: values[i],
                seed,
                aoa_error_deg: r.mean_aoa_error_deg(),
                loc_error_m: r.loc_error_m,
                snr_db: r.mean_snr_db(),
                iters: r.total_iters(),
                status: r.exit_code(),
            },
            Err(e) => {
                log::warn!("{} = {} seed {seed}: {e}", axis.as_str(), values[i]);
                SweepRow {
                    axis_value: values[i],
                    seed,
                    aoa_error_deg: f64::NAN,
                    loc_error_m: f64::NAN,
                    snr_db: f64::NAN,
                    iters: 0,
                    status: e.exit_code(),
                }
            }
        })
        .collect();
    Ok(rows)
}

pub const SWEEP_HEADER: &str = "axis_value,seed,aoa_error_deg,loc_error_m,snr_db,iters,status";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.axis_value, r.seed, r.aoa_error_deg, r.loc_error_m, r.snr_db, r.iters, r.status
        );
    }
    out
}
