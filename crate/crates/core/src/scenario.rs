//! Scenario files: sectioned `key = value` text describing one experiment.
//!
//! ```text
//! # comment
//! [source]
//! clock_hz = 3000
//! x_m = 2.5
//! y_m = 2.5
//!
//! [vantage.0]
//! x_m = 0
//! y_m = 0
//! heading_deg = 45
//! multipath = 30:0.4:0.1; -20:0.2:0
//! ```
//!
//! Sections: `[source]`, `[interferer.N]`, `[array]`, `[vantage.N]`,
//! `[noise]`, `[estimator]`, `[solver]`, `[run]`. Omitted keys take the
//! defaults of [`Scenario::default`]; unknown sections or keys are errors.
//! Every validation error names the offending `section.key`.

use std::collections::BTreeMap;
use std::path::{Path as FsPath, PathBuf};

use num_complex::Complex64;

use crate::aoasolve::{DataFit, Method};
use crate::emamodel::ActivityGate;
use crate::localize::Point2;
use crate::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    pub clock_hz: f64,
    pub duty: f64,
    /// Amplitude at 1 m.
    pub amplitude: f64,
    pub position: Point2,
    pub gate: Option<ActivityGate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfererSpec {
    pub source: SourceSpec,
    pub freq_offset_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArraySpec {
    pub n_switched: usize,
    pub spacing_m: f64,
    /// One capture per carrier; more than one enables frequency diversity.
    pub carrier_hz: Vec<f64>,
    pub fs_hz: f64,
    pub dwell_samples: usize,
    pub guard_samples: usize,
}

impl ArraySpec {
    pub fn wavelengths(&self) -> Vec<f64> {
        self.carrier_hz.iter().map(|f| SPEED_OF_LIGHT / f).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VantageSpec {
    pub position: Point2,
    /// Global direction of the array broadside.
    pub heading_rad: f64,
    /// Reflections as `(local AoA, gain relative to the direct path)`.
    pub multipath: Vec<(f64, Complex64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub noise_power: f64,
    pub rho: f64,
    /// Received amplitude is `amplitude / r^(ple/2)`.
    pub path_loss_exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorSpec {
    /// Lag in clock periods; 0 selects the standard estimator.
    pub tau_periods: usize,
    pub packets: usize,
    pub interference_threshold: f64,
    /// Extra capture segments tried after an interfered one.
    pub retry_budget: usize,
    pub clock_min_hz: f64,
    pub clock_max_hz: f64,
    /// Lag-profile length used for the SNR metric, in clock periods; capped
    /// to what fits in the dwell.
    pub snr_periods: usize,
    /// Threshold factor for rejecting degenerate offset denominators.
    pub floor_z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSpec {
    pub method: Method,
    pub beta: f64,
    pub grid: usize,
    pub lambda_g: f64,
    /// Time groups for joint solving of a single carrier.
    pub joint_groups: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub rel_threshold: f64,
    pub data_fit: DataFit,
    pub subarray_len: usize,
    /// Fixed source count for the subspace baselines.
    pub n_sources: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub source: SourceSpec,
    pub interferers: Vec<InterfererSpec>,
    pub array: ArraySpec,
    pub vantages: Vec<VantageSpec>,
    pub noise: NoiseSpec,
    pub estimator: EstimatorSpec,
    pub solver: SolverSpec,
    pub run: RunSpec,
}

impl Default for Scenario {
    /// 8 switched elements plus reference at 62.5 mm, 3.072 MS/s, 31.25 ms
    /// dwell with a 1% guard, 900 MHz carrier, β = 1 on a 256-bin grid.
    fn default() -> Self {
        Self {
            source: SourceSpec {
                clock_hz: 3000.0,
                duty: 0.5,
                amplitude: 1.0,
                position: Point2::new(2.5, 2.5),
                gate: None,
            },
            interferers: Vec::new(),
            array: ArraySpec {
                n_switched: 8,
                spacing_m: 0.0625,
                carrier_hz: vec![900e6],
                fs_hz: 3.072e6,
                dwell_samples: 96_000,
                guard_samples: 960,
            },
            vantages: Vec::new(),
            noise: NoiseSpec {
                noise_power: 0.0,
                rho: 0.0,
                path_loss_exponent: 0.0,
            },
            estimator: EstimatorSpec {
                tau_periods: 1,
                packets: 10,
                interference_threshold: 0.1,
                retry_budget: 3,
                clock_min_hz: 500.0,
                clock_max_hz: 100_000.0,
                snr_periods: 4,
                floor_z: 3.0,
            },
            solver: SolverSpec {
                method: Method::Sparse,
                beta: 1.0,
                grid: 256,
                lambda_g: 1.0,
                joint_groups: 1,
                max_iters: 20_000,
                tol: 1e-8,
                rel_threshold: 0.05,
                data_fit: DataFit::Squared,
                subarray_len: 5,
                n_sources: None,
            },
            run: RunSpec {
                seeds: vec![1],
                out: None,
            },
        }
    }
}

type Section = BTreeMap<String, (usize, String)>;

/// Values of one section, consumed key by key so leftovers can be reported.
struct Reader {
    name: String,
    entries: Section,
}

impl Reader {
    fn key(&self, k: &str) -> String {
        format!("{}.{k}", self.name)
    }

    fn take(&mut self, k: &str) -> Option<String> {
        self.entries.remove(k).map(|(_, v)| v)
    }

    fn f64(&mut self, k: &str, default: f64) -> Result<f64> {
        match self.take(k) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::scenario(self.key(k), format!("`{v}` is not a finite number"))),
        }
    }

    fn usize(&mut self, k: &str, default: usize) -> Result<usize> {
        match self.take(k) {
            None => Ok(default),
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| Error::scenario(self.key(k), format!("`{v}` is not a non-negative integer"))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((k, (line, _))) => Err(Error::scenario(
                format!("{}.{k}", self.name),
                format!("unknown key (line {line})"),
            )),
        }
    }
}

fn parse_sections(text: &str) -> Result<BTreeMap<String, Section>> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::scenario(format!("line {line_no}"), "unterminated section header"))?
                .trim()
                .to_string();
            if sections.contains_key(&name) {
                return Err(Error::scenario(name, format!("duplicate section (line {line_no})")));
            }
            sections.insert(name.clone(), Section::new());
            current = Some(name);
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::scenario(format!("line {line_no}"), "expected `key = value`"))?;
        let section = current
            .as_ref()
            .ok_or_else(|| Error::scenario(k.trim(), format!("key outside any section (line {line_no})")))?;
        let entries = sections.get_mut(section).expect("section was inserted");
        let key = k.trim().to_string();
        if entries.insert(key.clone(), (line_no, v.trim().to_string())).is_some() {
            return Err(Error::scenario(format!("{section}.{key}"), format!("duplicate key (line {line_no})")));
        }
    }
    Ok(sections)
}

fn parse_gate(r: &mut Reader) -> Result<Option<ActivityGate>> {
    let period = r.f64("gate_period_s", 0.0)?;
    let on = r.f64("gate_on_fraction", 1.0)?;
    if period == 0.0 {
        return Ok(None);
    }
    if !(period > 0.0) {
        return Err(Error::scenario(r.key("gate_period_s"), "must be positive"));
    }
    if !(on > 0.0 && on <= 1.0) {
        return Err(Error::scenario(r.key("gate_on_fraction"), "must be in (0, 1]"));
    }
    Ok(Some(ActivityGate {
        period_s: period,
        on_fraction: on,
    }))
}

fn parse_source(r: &mut Reader, d: &SourceSpec) -> Result<SourceSpec> {
    let s = SourceSpec {
        clock_hz: r.f64("clock_hz", d.clock_hz)?,
        duty: r.f64("duty", d.duty)?,
        amplitude: r.f64("amplitude", d.amplitude)?,
        position: Point2::new(r.f64("x_m", d.position.x)?, r.f64("y_m", d.position.y)?),
        gate: parse_gate(r)?,
    };
    if !(s.clock_hz > 0.0) {
        return Err(Error::scenario(r.key("clock_hz"), "must be positive"));
    }
    if !(s.duty > 0.0 && s.duty <= 1.0) {
        return Err(Error::scenario(r.key("duty"), "must be in (0, 1]"));
    }
    if !(s.amplitude >= 0.0) {
        return Err(Error::scenario(r.key("amplitude"), "must be non-negative"));
    }
    Ok(s)
}

fn parse_multipath(r: &mut Reader) -> Result<Vec<(f64, Complex64)>> {
    let Some(text) = r.take("multipath") else {
        return Ok(Vec::new());
    };
    let key = r.key("multipath");
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let parts: Vec<&str> = item.split(':').map(str::trim).collect();
            let nums: Option<Vec<f64>> = parts.iter().map(|p| p.parse::<f64>().ok().filter(|x| x.is_finite())).collect();
            match nums.as_deref() {
                Some(&[aoa, re, im]) if aoa.abs() < 90.0 => Ok((aoa.to_radians(), Complex64::new(re, im))),
                Some(&[aoa, re]) if aoa.abs() < 90.0 => Ok((aoa.to_radians(), Complex64::new(re, 0.0))),
                _ => Err(Error::scenario(
                    key.clone(),
                    format!("`{item}` is not `aoa_deg:re[:im]` with |aoa| < 90"),
                )),
            }
        })
        .collect()
}

fn parse_seeds(r: &mut Reader, d: &RunSpec) -> Result<Vec<u64>> {
    let base = match r.take("seed") {
        None => None,
        Some(v) => Some(
            v.parse::<u64>()
                .map_err(|_| Error::scenario(r.key("seed"), format!("`{v}` is not an unsigned integer")))?,
        ),
    };
    let list = r.take("seeds");
    let count = r.usize("seed_count", 0)?;
    if let Some(list) = list {
        if base.is_some() || count > 0 {
            return Err(Error::scenario(r.key("seeds"), "cannot be combined with seed or seed_count"));
        }
        let seeds: std::result::Result<Vec<u64>, _> = list.split(',').map(|s| s.trim().parse::<u64>()).collect();
        let seeds = seeds.map_err(|_| Error::scenario(r.key("seeds"), format!("`{list}` is not a list of integers")))?;
        if seeds.is_empty() {
            return Err(Error::scenario(r.key("seeds"), "must not be empty"));
        }
        return Ok(seeds);
    }
    let first = base.unwrap_or(d.seeds[0]);
    Ok((0..count.max(1) as u64).map(|k| first + k).collect())
}

impl Scenario {
    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let d = Scenario::default();
        let mut sections = parse_sections(text)?;
        let mut reader = |name: &str| Reader {
            name: name.to_string(),
            entries: sections.remove(name).unwrap_or_default(),
        };

        let mut r = reader("source");
        let source = parse_source(&mut r, &d.source)?;
        r.finish()?;

        let mut r = reader("array");
        let carriers = match r.take("carrier_hz") {
            None => d.array.carrier_hz.clone(),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>().ok().filter(|x| *x > 0.0 && x.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .filter(|c| !c.is_empty())
                .ok_or_else(|| Error::scenario(r.key("carrier_hz"), format!("`{v}` is not a list of positive numbers")))?,
        };
        let array = ArraySpec {
            n_switched: r.usize("n_switched", d.array.n_switched)?,
            spacing_m: r.f64("spacing_m", d.array.spacing_m)?,
            carrier_hz: carriers,
            fs_hz: r.f64("fs_hz", d.array.fs_hz)?,
            dwell_samples: r.usize("dwell_samples", d.array.dwell_samples)?,
            guard_samples: r.usize("guard_samples", d.array.guard_samples)?,
        };
        r.finish()?;

        let mut r = reader("noise");
        let noise = NoiseSpec {
            noise_power: r.f64("noise_power", d.noise.noise_power)?,
            rho: r.f64("rho", d.noise.rho)?,
            path_loss_exponent: r.f64("path_loss_exponent", d.noise.path_loss_exponent)?,
        };
        r.finish()?;

        let mut r = reader("estimator");
        let estimator = EstimatorSpec {
            tau_periods: r.usize("tau_periods", d.estimator.tau_periods)?,
            packets: r.usize("packets", d.estimator.packets)?,
            interference_threshold: r.f64("interference_threshold", d.estimator.interference_threshold)?,
            retry_budget: r.usize("retry_budget", d.estimator.retry_budget)?,
            clock_min_hz: r.f64("clock_min_hz", d.estimator.clock_min_hz)?,
            clock_max_hz: r.f64("clock_max_hz", d.estimator.clock_max_hz)?,
            snr_periods: r.usize("snr_periods", d.estimator.snr_periods)?,
            floor_z: r.f64("floor_z", d.estimator.floor_z)?,
        };
        r.finish()?;

        let mut r = reader("solver");
        let method = match r.take("method") {
            None => d.solver.method,
            Some(v) => v
                .parse::<Method>()
                .map_err(|_| Error::scenario(r.key("method"), format!("`{v}` is not sparse|joint|music|spotfi|ifft")))?,
        };
        let data_fit = match r.take("data_fit").as_deref() {
            None | Some("squared") => DataFit::Squared,
            Some("norm") => DataFit::Norm,
            Some(v) => return Err(Error::scenario(r.key("data_fit"), format!("`{v}` is not squared|norm"))),
        };
        let n_sources = match r.usize("n_sources", 0)? {
            0 => None,
            k => Some(k),
        };
        let solver = SolverSpec {
            method,
            beta: r.f64("beta", d.solver.beta)?,
            grid: r.usize("grid", d.solver.grid)?,
            lambda_g: r.f64("lambda_g", d.solver.lambda_g)?,
            joint_groups: r.usize("joint_groups", d.solver.joint_groups)?,
            max_iters: r.usize("max_iters", d.solver.max_iters)?,
            tol: r.f64("tol", d.solver.tol)?,
            rel_threshold: r.f64("rel_threshold", d.solver.rel_threshold)?,
            data_fit,
            subarray_len: r.usize("subarray_len", d.solver.subarray_len)?,
            n_sources,
        };
        r.finish()?;

        let mut r = reader("run");
        let run = RunSpec {
            seeds: parse_seeds(&mut r, &d.run)?,
            out: r.take("out").map(PathBuf::from),
        };
        r.finish()?;

        let mut interferers = Vec::new();
        let mut vantages = Vec::new();
        let indexed = |prefix: &str, sections: &BTreeMap<String, Section>| -> Result<Vec<String>> {
            let mut names: Vec<(usize, String)> = Vec::new();
            for name in sections.keys() {
                if let Some(idx) = name.strip_prefix(prefix) {
                    let n = idx
                        .parse::<usize>()
                        .map_err(|_| Error::scenario(name.clone(), "section index must be an integer"))?;
                    names.push((n, name.clone()));
                }
            }
            names.sort();
            for (expect, (n, name)) in names.iter().enumerate() {
                if *n != expect {
                    return Err(Error::scenario(name.clone(), format!("indices must be contiguous from 0, expected {expect}")));
                }
            }
            Ok(names.into_iter().map(|(_, n)| n).collect())
        };
        for name in indexed("interferer.", &sections)? {
            let mut r = Reader {
                entries: sections.remove(&name).unwrap_or_default(),
                name,
            };
            let freq_offset_hz = r.f64("freq_offset_hz", 0.0)?;
            let source = parse_source(&mut r, &d.source)?;
            r.finish()?;
            interferers.push(InterfererSpec { source, freq_offset_hz });
        }
        for name in indexed("vantage.", &sections)? {
            let mut r = Reader {
                entries: sections.remove(&name).unwrap_or_default(),
                name,
            };
            if !r.entries.contains_key("heading_deg") {
                return Err(Error::scenario(r.key("heading_deg"), "every vantage needs an explicit heading"));
            }
            let v = VantageSpec {
                position: Point2::new(r.f64("x_m", 0.0)?, r.f64("y_m", 0.0)?),
                heading_rad: r.f64("heading_deg", 0.0)?.to_radians(),
                multipath: parse_multipath(&mut r)?,
            };
            r.finish()?;
            vantages.push(v);
        }
        if let Some(name) = sections.keys().next() {
            return Err(Error::scenario(name.clone(), "unknown section"));
        }

        let s = Scenario {
            source,
            interferers,
            array,
            vantages,
            noise,
            estimator,
            solver,
            run,
        };
        s.validate()?;
        Ok(s)
    }

    /// Checks cross-field constraints; every error names its key.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: String| Err(Error::scenario(key, reason));
        let a = &self.array;
        if a.n_switched < 2 {
            return bad("array.n_switched", "need at least 2 switched elements".into());
        }
        if !(a.spacing_m > 0.0) {
            return bad("array.spacing_m", "must be positive".into());
        }
        if !(a.fs_hz > 0.0) {
            return bad("array.fs_hz", "must be positive".into());
        }
        if a.dwell_samples == 0 {
            return bad("array.dwell_samples", "must be positive".into());
        }
        if a.guard_samples >= a.dwell_samples {
            return bad("array.guard_samples", "must be smaller than dwell_samples".into());
        }
        for lambda in a.wavelengths() {
            let dl = a.spacing_m / lambda;
            if dl >= 0.5 {
                return bad("array.spacing_m", format!("d/λ = {dl:.3} aliases; must stay below 1/2"));
            }
        }
        let e = &self.estimator;
        let spp = a.fs_hz / self.source.clock_hz;
        if spp < 2.0 {
            return bad("source.clock_hz", format!("only {spp:.2} samples per period at fs"));
        }
        if !(e.clock_min_hz > 0.0 && e.clock_min_hz < e.clock_max_hz) {
            return bad("estimator.clock_min_hz", "must be positive and below clock_max_hz".into());
        }
        if a.fs_hz / e.clock_max_hz < 2.0 {
            return bad("estimator.clock_max_hz", "exceeds fs/2".into());
        }
        if self.source.clock_hz < e.clock_min_hz || self.source.clock_hz > e.clock_max_hz {
            log::warn!("source clock lies outside the clock search range");
        }
        let usable = a.dwell_samples - a.guard_samples;
        let max_period = (a.fs_hz / e.clock_min_hz).ceil() as usize;
        if 4 * max_period > a.n_switched * a.dwell_samples {
            return bad("estimator.clock_min_hz", "longest searched period exceeds a quarter of a sweep".into());
        }
        if e.tau_periods > 0 && (e.tau_periods as f64) * spp >= usable as f64 {
            return bad("estimator.tau_periods", format!("lag exceeds the {usable} usable samples per dwell"));
        }
        if e.tau_periods as f64 * spp + spp.round() >= usable as f64 {
            return bad("estimator.tau_periods", "no clock period fits after the lag".into());
        }
        if e.packets == 0 {
            return bad("estimator.packets", "must be at least 1".into());
        }
        if !(e.interference_threshold > 0.0) {
            return bad("estimator.interference_threshold", "must be positive".into());
        }
        if !(e.floor_z >= 0.0) {
            return bad("estimator.floor_z", "must be non-negative".into());
        }
        let n = self.noise;
        if !(n.noise_power >= 0.0) {
            return bad("noise.noise_power", "must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&n.rho) {
            return bad("noise.rho", "must be in [0, 1]".into());
        }
        if !(n.path_loss_exponent >= 0.0) {
            return bad("noise.path_loss_exponent", "must be non-negative".into());
        }
        let s = &self.solver;
        let n_elem = a.n_switched + 1;
        if s.grid < 4 * n_elem {
            return bad("solver.grid", format!("must be at least {}", 4 * n_elem));
        }
        if !(s.beta >= 0.0) {
            return bad("solver.beta", "must be non-negative".into());
        }
        if !(s.lambda_g >= 0.0) {
            return bad("solver.lambda_g", "must be non-negative".into());
        }
        if s.max_iters == 0 || !(s.tol > 0.0) {
            return bad("solver.max_iters", "max_iters and tol must be positive".into());
        }
        if !(s.rel_threshold > 0.0 && s.rel_threshold < 1.0) {
            return bad("solver.rel_threshold", "must be in (0, 1)".into());
        }
        if s.subarray_len < 2 || s.subarray_len > n_elem {
            return bad("solver.subarray_len", format!("must be in 2..={n_elem}"));
        }
        if s.joint_groups == 0 || s.joint_groups > e.packets {
            return bad("solver.joint_groups", "must be in 1..=packets".into());
        }
        if let Some(k) = s.n_sources {
            let limit = if s.method == Method::Spotfi { s.subarray_len } else { n_elem };
            if k >= limit {
                return bad("solver.n_sources", format!("must be below {limit}"));
            }
        }
        if self.vantages.is_empty() {
            return bad("vantage.0", "at least one vantage is required".into());
        }
        for (i, v) in self.vantages.iter().enumerate() {
            let dx = self.source.position.x - v.position.x;
            let dy = self.source.position.y - v.position.y;
            if dx.hypot(dy) < 1e-9 {
                return bad(&format!("vantage.{i}.x_m"), "coincides with the source".into());
            }
            let local = crate::emamodel::wrap_angle(dy.atan2(dx) - v.heading_rad);
            if local.abs() >= std::f64::consts::FRAC_PI_2 {
                return bad(
                    &format!("vantage.{i}.heading_deg"),
                    format!("source lies behind the array ({:.1}° off broadside)", local.to_degrees()),
                );
            }
        }
        for (i, itf) in self.interferers.iter().enumerate() {
            if a.fs_hz / itf.source.clock_hz < 2.0 {
                return bad(&format!("interferer.{i}.clock_hz"), "under-sampled at fs".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
        [vantage.0]
        x_m = 0
        y_m = 0
        heading_deg = 45
    ";

    #[test]
    fn defaults_fill_omitted_keys() {
        let s = Scenario::parse(MINIMAL).unwrap();
        assert_eq!(s.array.n_switched, 8);
        assert_eq!(s.array.dwell_samples, 96_000);
        assert_eq!(s.solver.beta, 1.0);
        assert_eq!(s.vantages.len(), 1);
        assert!((s.vantages[0].heading_rad - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn full_file_round_trips_values() {
        let text = "
            [source]
            clock_hz = 4000   # comment
            x_m = 1
            y_m = 3
            gate_period_s = 0.01
            gate_on_fraction = 0.5
            [interferer.0]
            clock_hz = 3700
            x_m = -1
            y_m = 4
            freq_offset_hz = 1200
            [array]
            carrier_hz = 900e6, 1800e6
            dwell_samples = 4096
            guard_samples = 16
            [vantage.0]
            heading_deg = 90
            multipath = 30:0.4:0.1; -20:0.2
            [vantage.1]
            x_m = 3
            heading_deg = 120
            [solver]
            method = joint
            data_fit = norm
            [run]
            seeds = 4, 9
            out = results
        ";
        let s = Scenario::parse(text).unwrap();
        assert_eq!(s.source.clock_hz, 4000.0);
        assert!(s.source.gate.is_some());
        assert_eq!(s.interferers[0].freq_offset_hz, 1200.0);
        assert_eq!(s.array.carrier_hz, vec![900e6, 1800e6]);
        assert_eq!(s.vantages[0].multipath.len(), 2);
        assert_eq!(s.vantages[0].multipath[1].1, Complex64::new(0.2, 0.0));
        assert_eq!(s.solver.method, Method::Joint);
        assert_eq!(s.solver.data_fit, DataFit::Norm);
        assert_eq!(s.run.seeds, vec![4, 9]);
        assert_eq!(s.run.out, Some(PathBuf::from("results")));
    }

    fn key_of(text: &str) -> String {
        match Scenario::parse(text) {
            Err(Error::Scenario { key, .. }) => key,
            other => panic!("expected a scenario error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(key_of(&format!("{MINIMAL}\n[array]\ndwell_samples = abc")), "array.dwell_samples");
        assert_eq!(key_of(&format!("{MINIMAL}\n[array]\nbogus = 1")), "array.bogus");
        assert_eq!(key_of(&format!("{MINIMAL}\n[noise]\nrho = 1.5")), "noise.rho");
        assert_eq!(key_of(&format!("{MINIMAL}\n[solver]\nmethod = lasso")), "solver.method");
        assert_eq!(key_of(&format!("{MINIMAL}\n[array]\nspacing_m = 0.2")), "array.spacing_m");
        assert_eq!(key_of("[vantage.0]\nx_m = 1"), "vantage.0.heading_deg");
        assert_eq!(key_of(&format!("{MINIMAL}\n[vantage.2]\nheading_deg = 0")), "vantage.2");
        assert_eq!(key_of(&format!("{MINIMAL}\n[weather]\nrain = 1")), "weather");
        assert_eq!(key_of("[source]\nx_m = -5\n[vantage.0]\nheading_deg = 0"), "vantage.0.heading_deg");
    }

    #[test]
    fn seed_count_expands() {
        let s = Scenario::parse(&format!("{MINIMAL}\n[run]\nseed = 10\nseed_count = 3")).unwrap();
        assert_eq!(s.run.seeds, vec![10, 11, 12]);
    }
}
