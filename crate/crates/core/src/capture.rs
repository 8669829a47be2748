//! Switched-antenna acquisition: simulation, packet framing and raw IQ files.
//!
//! A capture holds two sample-aligned streams. The reference port sees the
//! reference antenna continuously; the switched port cycles through the
//! switched elements, dwelling `dwell_samples` on each in `order`.
//!
//! On disk a capture is three files sharing a prefix: `<prefix>.ref.iq` and
//! `<prefix>.sw.iq` hold interleaved little-endian I/Q pairs (32-bit floats by
//! default), and `<prefix>.meta` is a flat `key = value` text file.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};

use num_complex::Complex64;

use crate::emamodel::{
    generate_correlated_noise, synthesize_emanation_at, true_relative_channel, ArrayGeometry, EmanationSource,
    InterferenceSource, NoiseModel, PathSet,
};
use crate::{Error, Result};

/// Antenna switching pattern of one sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchSchedule {
    pub n_antennas: usize,
    pub dwell_samples: usize,
    /// Samples discarded after every switch event.
    pub guard_samples: usize,
    /// Switched-element indices (1-based; 0 is the reference) in visiting order.
    pub order: Vec<usize>,
}

impl SwitchSchedule {
    /// Sequential order `1..=n_antennas`.
    pub fn sequential(n_antennas: usize, dwell_samples: usize, guard_samples: usize) -> Result<Self> {
        let s = Self {
            n_antennas,
            dwell_samples,
            guard_samples,
            order: (1..=n_antennas).collect(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_antennas == 0 {
            return Err(Error::invalid("n_antennas", "must be at least 1"));
        }
        if self.dwell_samples == 0 {
            return Err(Error::invalid("dwell_samples", "must be positive"));
        }
        if self.guard_samples >= self.dwell_samples {
            return Err(Error::invalid("guard_samples", "must be smaller than dwell_samples"));
        }
        let mut seen = vec![false; self.n_antennas + 1];
        if self.order.len() != self.n_antennas {
            return Err(Error::invalid("order", format!("expected {} entries", self.n_antennas)));
        }
        for &a in &self.order {
            if a == 0 || a > self.n_antennas || seen[a] {
                return Err(Error::invalid("order", "must be a permutation of 1..=n_antennas"));
            }
            seen[a] = true;
        }
        Ok(())
    }

    /// Samples in one full sweep.
    pub fn sweep_len(&self) -> usize {
        self.n_antennas * self.dwell_samples
    }

    /// Usable samples per antenna per sweep.
    pub fn usable_per_dwell(&self) -> usize {
        self.dwell_samples - self.guard_samples
    }

    /// Switched element selected at absolute sample `t`.
    pub fn antenna_at(&self, t: u64) -> usize {
        let slot = (t / self.dwell_samples as u64) % self.n_antennas as u64;
        self.order[slot as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IQCapture {
    pub fs: f64,
    pub ref_stream: Vec<Complex64>,
    pub switched_stream: Vec<Complex64>,
    pub schedule: SwitchSchedule,
    pub packet_len_samples: usize,
}

impl IQCapture {
    pub fn new(
        fs: f64,
        ref_stream: Vec<Complex64>,
        switched_stream: Vec<Complex64>,
        schedule: SwitchSchedule,
    ) -> Result<Self> {
        let packet_len_samples = schedule.sweep_len();
        let cap = Self {
            fs,
            ref_stream,
            switched_stream,
            schedule,
            packet_len_samples,
        };
        cap.validate()?;
        Ok(cap)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(Error::invalid("fs", "must be positive"));
        }
        if self.packet_len_samples != self.schedule.sweep_len() {
            return Err(Error::Mismatch(format!(
                "packet_len {} differs from sweep length {}",
                self.packet_len_samples,
                self.schedule.sweep_len()
            )));
        }
        let sweep = self.schedule.sweep_len();
        if self.ref_stream.len() != self.switched_stream.len() {
            return Err(Error::LengthMismatch {
                stream: "switched",
                expected: self.ref_stream.len(),
                found: self.switched_stream.len(),
            });
        }
        if self.ref_stream.is_empty() || self.ref_stream.len() % sweep != 0 {
            return Err(Error::Mismatch(format!(
                "stream length {} is not a positive multiple of the sweep length {sweep}",
                self.ref_stream.len()
            )));
        }
        Ok(())
    }

    pub fn n_sweeps(&self) -> usize {
        self.ref_stream.len() / self.schedule.sweep_len()
    }

    /// Copy with every sample rounded to `f32` precision, which is what the
    /// default on-disk format can hold exactly.
    pub fn quantized_f32(&self) -> Self {
        let q = |v: &[Complex64]| {
            v.iter()
                .map(|x| Complex64::new(x.re as f32 as f64, x.im as f32 as f64))
                .collect()
        };
        Self {
            ref_stream: q(&self.ref_stream),
            switched_stream: q(&self.switched_stream),
            ..self.clone()
        }
    }
}

/// Everything needed to simulate a capture segment.
#[derive(Debug, Clone, Copy)]
pub struct CaptureConfig<'a> {
    pub source: &'a EmanationSource,
    pub geometry: &'a ArrayGeometry,
    pub paths: &'a PathSet,
    pub noise: &'a NoiseModel,
    pub schedule: &'a SwitchSchedule,
    pub fs: f64,
    pub n_sweeps: usize,
    pub interferers: &'a [InterferenceSource],
    /// Absolute sample index of the first sample; keeps waveforms continuous
    /// across consecutively simulated segments.
    pub start_sample: u64,
}

/// Simulates `n_sweeps` full sweeps starting at sample 0.
#[allow(clippy::too_many_arguments)]
pub fn simulate_capture(
    src: &EmanationSource,
    geom: &ArrayGeometry,
    paths: &PathSet,
    noise: &NoiseModel,
    schedule: &SwitchSchedule,
    fs: f64,
    n_sweeps: usize,
    interferers: &[InterferenceSource],
) -> Result<IQCapture> {
    simulate(&CaptureConfig {
        source: src,
        geometry: geom,
        paths,
        noise,
        schedule,
        fs,
        n_sweeps,
        interferers,
        start_sample: 0,
    })
}

pub fn simulate(cfg: &CaptureConfig<'_>) -> Result<IQCapture> {
    let schedule = cfg.schedule;
    schedule.validate()?;
    cfg.noise.validate()?;
    if schedule.n_antennas != cfg.geometry.n_switched {
        return Err(Error::Mismatch(format!(
            "schedule has {} antennas, geometry has {} switched elements",
            schedule.n_antennas, cfg.geometry.n_switched
        )));
    }
    if cfg.n_sweeps == 0 {
        return Err(Error::invalid("n_sweeps", "must be at least 1"));
    }
    let n_elem = cfg.geometry.n_elements();
    for (k, itf) in cfg.interferers.iter().enumerate() {
        if itf.alpha.len() != n_elem {
            return Err(Error::Mismatch(format!(
                "interferer {k} has {} channel entries, array has {n_elem} elements",
                itf.alpha.len()
            )));
        }
    }

    let h = true_relative_channel(cfg.geometry, cfg.paths)?.values;
    let n = schedule.sweep_len() * cfg.n_sweeps;
    let s = synthesize_emanation_at(cfg.source, cfg.fs, cfg.start_sample, n, 0.0)?;
    let mut ref_stream = s.clone();
    let mut switched: Vec<Complex64> = s
        .iter()
        .enumerate()
        .map(|(k, &x)| h[schedule.antenna_at(cfg.start_sample + k as u64)] * x)
        .collect();

    for itf in cfg.interferers {
        let d = itf.synthesize_at(cfg.fs, cfg.start_sample, n)?;
        for (k, &x) in d.iter().enumerate() {
            ref_stream[k] += itf.alpha[0] * x;
            switched[k] += itf.alpha[schedule.antenna_at(cfg.start_sample + k as u64)] * x;
        }
    }

    if cfg.noise.noise_power > 0.0 {
        let noise = generate_correlated_noise(cfg.noise, 2, n);
        for (x, w) in ref_stream.iter_mut().zip(&noise[0]) {
            *x += w;
        }
        for (x, w) in switched.iter_mut().zip(&noise[1]) {
            *x += w;
        }
    }

    IQCapture::new(cfg.fs, ref_stream, switched, schedule.clone())
}

/// Usable samples of one antenna dwell, with the co-timed reference samples.
#[derive(Debug, Clone, Copy)]
pub struct Segment<'a> {
    pub antenna: usize,
    pub switched: &'a [Complex64],
    pub reference: &'a [Complex64],
}

/// One full sweep over all switched antennas.
#[derive(Debug, Clone)]
pub struct Packet<'a> {
    pub sweep_index: usize,
    /// Segments in switching order.
    pub segments: Vec<Segment<'a>>,
}

impl<'a> Packet<'a> {
    pub fn segment(&self, antenna: usize) -> Option<&Segment<'a>> {
        self.segments.iter().find(|s| s.antenna == antenna)
    }

    /// Highest antenna index present.
    pub fn n_antennas(&self) -> usize {
        self.segments.iter().map(|s| s.antenna).max().unwrap_or(0)
    }
}

/// Splits a capture into one packet per sweep, dropping guard samples.
pub fn packetize(cap: &IQCapture) -> Vec<Packet<'_>> {
    let sched = &cap.schedule;
    let sweep = sched.sweep_len();
    (0..cap.n_sweeps())
        .map(|p| {
            let segments = sched
                .order
                .iter()
                .enumerate()
                .map(|(slot, &antenna)| {
                    let start = p * sweep + slot * sched.dwell_samples + sched.guard_samples;
                    let end = p * sweep + (slot + 1) * sched.dwell_samples;
                    Segment {
                        antenna,
                        switched: &cap.switched_stream[start..end],
                        reference: &cap.ref_stream[start..end],
                    }
                })
                .collect();
            Packet {
                sweep_index: p,
                segments,
            }
        })
        .collect()
}

/// Sample encoding of the stream files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleFormat {
    /// Interleaved little-endian `f32` I/Q.
    #[default]
    Cf32,
    /// Interleaved little-endian `f64` I/Q, lossless for simulated data.
    Cf64,
}

impl SampleFormat {
    fn bytes_per_sample(self) -> usize {
        match self {
            SampleFormat::Cf32 => 8,
            SampleFormat::Cf64 => 16,
        }
    }

    fn name(self) -> &'static str {
        match self {
            SampleFormat::Cf32 => "cf32",
            SampleFormat::Cf64 => "cf64",
        }
    }
}

fn with_suffix(prefix: &FsPath, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn capture_paths(prefix: &FsPath) -> (PathBuf, PathBuf, PathBuf) {
    (
        with_suffix(prefix, ".ref.iq"),
        with_suffix(prefix, ".sw.iq"),
        with_suffix(prefix, ".meta"),
    )
}

pub fn write_capture(cap: &IQCapture, prefix: impl AsRef<FsPath>) -> Result<()> {
    write_capture_as(cap, prefix, SampleFormat::Cf32)
}

pub fn write_capture_as(cap: &IQCapture, prefix: impl AsRef<FsPath>, format: SampleFormat) -> Result<()> {
    cap.validate()?;
    let (ref_path, sw_path, meta_path) = capture_paths(prefix.as_ref());
    write_stream(&ref_path, &cap.ref_stream, format)?;
    write_stream(&sw_path, &cap.switched_stream, format)?;

    let s = &cap.schedule;
    let order: Vec<String> = s.order.iter().map(|a| a.to_string()).collect();
    let mut meta = String::new();
    let _ = writeln!(meta, "format = {}", format.name());
    let _ = writeln!(meta, "fs = {}", cap.fs);
    let _ = writeln!(meta, "n_antennas = {}", s.n_antennas);
    let _ = writeln!(meta, "dwell_samples = {}", s.dwell_samples);
    let _ = writeln!(meta, "guard_samples = {}", s.guard_samples);
    let _ = writeln!(meta, "order = {}", order.join(","));
    let _ = writeln!(meta, "packet_len = {}", cap.packet_len_samples);
    let _ = writeln!(meta, "n_sweeps = {}", cap.n_sweeps());
    fs::write(meta_path, meta)?;
    Ok(())
}

fn write_stream(path: &FsPath, samples: &[Complex64], format: SampleFormat) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for x in samples {
        match format {
            SampleFormat::Cf32 => {
                w.write_all(&(x.re as f32).to_le_bytes())?;
                w.write_all(&(x.im as f32).to_le_bytes())?;
            }
            SampleFormat::Cf64 => {
                w.write_all(&x.re.to_le_bytes())?;
                w.write_all(&x.im.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn read_stream(path: &FsPath, format: SampleFormat, stream: &'static str, expected: usize) -> Result<Vec<Complex64>> {
    let bytes = fs::read(path)?;
    let bps = format.bytes_per_sample();
    if bytes.len() % bps != 0 || bytes.len() / bps != expected {
        return Err(Error::LengthMismatch {
            stream,
            expected,
            found: bytes.len() / bps,
        });
    }
    Ok(bytes
        .chunks_exact(bps)
        .map(|c| match format {
            SampleFormat::Cf32 => Complex64::new(
                f32::from_le_bytes(c[0..4].try_into().unwrap()) as f64,
                f32::from_le_bytes(c[4..8].try_into().unwrap()) as f64,
            ),
            SampleFormat::Cf64 => Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            ),
        })
        .collect())
}

/// Parses flat `key = value` text; `#` starts a comment.
pub(crate) fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Metadata(format!("line {}: expected `key = value`", lineno + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_capture(prefix: impl AsRef<FsPath>) -> Result<IQCapture> {
    let (ref_path, sw_path, meta_path) = capture_paths(prefix.as_ref());
    let text = fs::read_to_string(meta_path)?;
    let kv = parse_key_values(&text)?;
    let get = |key: &str| -> Result<&str> {
        kv.iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Metadata(format!("missing key `{key}`")))
    };
    let num = |key: &str| -> Result<usize> {
        get(key)?
            .parse()
            .map_err(|_| Error::Metadata(format!("`{key}` is not a non-negative integer")))
    };

    let format = match kv.iter().find(|(k, _)| k == "format").map(|(_, v)| v.as_str()) {
        None | Some("cf32") => SampleFormat::Cf32,
        Some("cf64") => SampleFormat::Cf64,
        Some(other) => return Err(Error::Metadata(format!("unknown format `{other}`"))),
    };
    let fs_hz: f64 = get("fs")?
        .parse()
        .map_err(|_| Error::Metadata("`fs` is not a number".into()))?;
    let n_antennas = num("n_antennas")?;
    let dwell_samples = num("dwell_samples")?;
    let guard_samples = num("guard_samples")?;
    let packet_len = num("packet_len")?;
    let n_sweeps = num("n_sweeps")?;
    let order = get("order")?
        .split(',')
        .map(|a| a.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::Metadata("`order` must be a comma-separated list of integers".into()))?;

    let schedule = SwitchSchedule {
        n_antennas,
        dwell_samples,
        guard_samples,
        order,
    };
    schedule
        .validate()
        .map_err(|e| Error::Metadata(format!("invalid schedule: {e}")))?;
    if packet_len != schedule.sweep_len() {
        return Err(Error::Metadata(format!(
            "packet_len {packet_len} differs from n_antennas * dwell_samples = {}",
            schedule.sweep_len()
        )));
    }
    if n_sweeps == 0 {
        return Err(Error::Metadata("n_sweeps must be at least 1".into()));
    }
    let expected = n_sweeps * schedule.sweep_len();
    let ref_stream = read_stream(&ref_path, format, "reference", expected)?;
    let switched_stream = read_stream(&sw_path, format, "switched", expected)?;
    IQCapture::new(fs_hz, ref_stream, switched_stream, schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emamodel::Path;
    use crate::localize::Point2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    struct Fixture {
        src: EmanationSource,
        geom: ArrayGeometry,
        sched: SwitchSchedule,
    }

    fn fixture(dwell: usize, guard: usize) -> Fixture {
        Fixture {
            src: EmanationSource::new(1.0 / 64.0, 0.5, 1.0, Point2::default()).unwrap(),
            geom: ArrayGeometry::new(8, 0.1, 1.0).unwrap(),
            sched: SwitchSchedule::sequential(8, dwell, guard).unwrap(),
        }
    }

    fn broadside() -> PathSet {
        PathSet::new(vec![Path::new(0.0, c(1.0, 0.0))]).unwrap()
    }

    #[test]
    fn schedule_validation() {
        assert!(SwitchSchedule::sequential(0, 10, 0).is_err());
        assert!(SwitchSchedule::sequential(4, 10, 10).is_err());
        let bad = SwitchSchedule {
            n_antennas: 3,
            dwell_samples: 4,
            guard_samples: 0,
            order: vec![1, 1, 2],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn noiseless_broadside_streams_are_equal() {
        let f = fixture(128, 4);
        let noise = NoiseModel::new(0.0, 0.8, 1).unwrap();
        let cap = simulate_capture(&f.src, &f.geom, &broadside(), &noise, &f.sched, 1.0, 2, &[]).unwrap();
        assert_eq!(cap.ref_stream, cap.switched_stream);
        assert_eq!(cap.n_sweeps(), 2);
    }

    #[test]
    fn noiseless_two_path_segment_scales_reference() {
        let f = fixture(128, 0);
        let paths = PathSet::new(vec![
            Path::new(0.0, c(1.0, 0.0)),
            Path::new(30f64.to_radians(), c(0.5, 0.0)),
        ])
        .unwrap();
        let noise = NoiseModel::new(0.0, 0.0, 1).unwrap();
        let cap = simulate_capture(&f.src, &f.geom, &paths, &noise, &f.sched, 1.0, 1, &[]).unwrap();
        let packets = packetize(&cap);
        let seg = packets[0].segment(1).unwrap();
        for (sw, r) in seg.switched.iter().zip(seg.reference) {
            assert!((sw - r * c(0.98369, -0.10300)).norm() < 1e-5);
        }
    }

    #[test]
    fn mismatched_schedule_rejected() {
        let f = fixture(64, 0);
        let sched = SwitchSchedule::sequential(4, 64, 0).unwrap();
        let noise = NoiseModel::new(0.0, 0.0, 1).unwrap();
        let err = simulate_capture(&f.src, &f.geom, &broadside(), &noise, &sched, 1.0, 1, &[]).unwrap_err();
        assert!(matches!(err, Error::Mismatch(_)));
    }

    #[test]
    fn noise_only_ref_switched_correlation() {
        let f = fixture(12_500, 0);
        let silent = EmanationSource {
            amplitude: 0.0,
            ..f.src.clone()
        };
        let noise = NoiseModel::new(1.0, 0.8, 5).unwrap();
        let cap = simulate_capture(&silent, &f.geom, &broadside(), &noise, &f.sched, 1.0, 1, &[]).unwrap();
        let num: Complex64 = cap
            .switched_stream
            .iter()
            .zip(&cap.ref_stream)
            .map(|(a, b)| a * b.conj())
            .sum();
        let pa: f64 = cap.switched_stream.iter().map(|x| x.norm_sqr()).sum();
        let pb: f64 = cap.ref_stream.iter().map(|x| x.norm_sqr()).sum();
        let rho = num / (pa * pb).sqrt();
        assert!((rho.re - 0.8).abs() < 0.02, "{rho}");
    }

    #[test]
    fn packet_counts() {
        let f = fixture(100, 5);
        let noise = NoiseModel::new(0.1, 0.5, 2).unwrap();
        let cap = simulate_capture(&f.src, &f.geom, &broadside(), &noise, &f.sched, 1.0, 1, &[]).unwrap();
        let p = packetize(&cap);
        assert_eq!(p.len(), 1);
        assert!(p[0].segments.iter().all(|s| s.switched.len() == 95));

        let cap3 = simulate_capture(&f.src, &f.geom, &broadside(), &noise, &f.sched, 1.0, 3, &[]).unwrap();
        let total: usize = packetize(&cap3)
            .iter()
            .flat_map(|p| p.segments.iter().map(|s| s.switched.len()))
            .sum();
        assert_eq!(total, 3 * 8 * 95);
    }

    #[test]
    fn zero_guard_packets_tile_the_stream() {
        let f = fixture(50, 0);
        let noise = NoiseModel::new(1.0, 0.3, 9).unwrap();
        let cap = simulate_capture(&f.src, &f.geom, &broadside(), &noise, &f.sched, 1.0, 2, &[]).unwrap();
        let joined: Vec<Complex64> = packetize(&cap)
            .iter()
            .flat_map(|p| p.segments.iter().flat_map(|s| s.switched.iter().copied()))
            .collect();
        assert_eq!(joined, cap.switched_stream);
    }

    #[test]
    fn default_usable_sample_arithmetic() {
        let sched = SwitchSchedule::sequential(8, 96_000, 960).unwrap();
        assert_eq!(8 * 10 * sched.usable_per_dwell(), 7_603_200);
    }

    #[test]
    fn energy_is_additive() {
        let f = fixture(12_500, 0);
        let geom = f.geom.clone();
        let paths = PathSet::new(vec![
            Path::new(0.2, c(1.0, 0.0)),
            Path::new(-0.5, c(0.3, 0.4)),
        ])
        .unwrap();
        let itf_src = EmanationSource::new(1.0 / 91.0, 0.5, 0.8, Point2::default()).unwrap();
        let itf = InterferenceSource::from_direction(itf_src.clone(), &geom, 0.7, 0.013).unwrap();
        let noise = NoiseModel::new(0.5, 0.8, 21).unwrap();
        let cap = simulate_capture(&f.src, &geom, &paths, &noise, &f.sched, 1.0, 1, &[itf.clone()]).unwrap();
        let h = true_relative_channel(&geom, &paths).unwrap().values;
        let mean_h2 = h[1..].iter().map(|x| x.norm_sqr()).sum::<f64>() / 8.0;
        let mean_a2 = itf.alpha[1..].iter().map(|x| x.norm_sqr()).sum::<f64>() / 8.0;
        let expected = f.src.power() * mean_h2 + itf_src.power() * mean_a2 + 0.5;
        let measured = cap.switched_stream.iter().map(|x| x.norm_sqr()).sum::<f64>() / cap.switched_stream.len() as f64;
        assert!((measured / expected - 1.0).abs() < 0.05, "{measured} vs {expected}");
    }

    #[test]
    fn file_round_trip_is_bit_exact() {
        let f = fixture(64, 2);
        let noise = NoiseModel::new(1.0, 0.8, 4).unwrap();
        let cap = simulate_capture(&f.src, &f.geom, &broadside(), &noise, &f.sched, 3.072e6, 1, &[]).unwrap();
        let dir = tempfile::tempdir().unwrap();

        let q = cap.quantized_f32();
        let prefix = dir.path().join("cap32");
        write_capture(&q, &prefix).unwrap();
        assert_eq!(read_capture(&prefix).unwrap(), q);

        let prefix = dir.path().join("cap64");
        write_capture_as(&cap, &prefix, SampleFormat::Cf64).unwrap();
        assert_eq!(read_capture(&prefix).unwrap(), cap);
    }

    #[test]
    fn truncated_stream_names_counts() {
        let f = fixture(64, 0);
        let noise = NoiseModel::new(1.0, 0.8, 4).unwrap();
        let cap = simulate_capture(&f.src, &f.geom, &broadside(), &noise, &f.sched, 1.0, 1, &[]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("cap");
        write_capture(&cap, &prefix).unwrap();
        let (_, sw, _) = capture_paths(&prefix);
        let bytes = fs::read(&sw).unwrap();
        fs::write(&sw, &bytes[..bytes.len() - 80]).unwrap();
        match read_capture(&prefix) {
            Err(Error::LengthMismatch { expected, found, .. }) => {
                assert_eq!(expected, 512);
                assert_eq!(found, 502);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_antenna_metadata_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("bad");
        let (r, s, m) = capture_paths(&prefix);
        fs::write(&r, []).unwrap();
        fs::write(&s, []).unwrap();
        fs::write(
            &m,
            "fs = 1000\nn_antennas = 0\ndwell_samples = 10\nguard_samples = 0\norder = \npacket_len = 0\nn_sweeps = 1\n",
        )
        .unwrap();
        assert!(matches!(read_capture(&prefix), Err(Error::Metadata(_))));
    }
}
