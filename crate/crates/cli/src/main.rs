use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use emloc::aoasolve::Method;
use emloc::capture::{read_capture, write_capture_as, SampleFormat};
use emloc::localize::{triangulate, Bearing, Point2};
use emloc::pipeline::{
    aoa_csv, channel_csv, estimate_aoa, estimate_capture, localization_csv, parse_channel_csv, run_scenario,
    run_sweep, simulate_vantage, sweep_csv, write_reports, SweepAxis,
};
use emloc::scenario::{Scenario, SPEED_OF_LIGHT};

/// Localize clock-leakage emitters from switched-antenna captures.
///
/// Exit status: 0 success, 2 invalid input, 3 no clock found, 4 interference
/// unresolved, 5 solver did not converge.
#[derive(Parser, Debug)]
#[command(name = "emloc", version)]
struct Cli {
    /// Override the scenario seeds with this single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (or file for single-table commands).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Log more; repeat for debug output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate captures for every vantage of a scenario.
    Simulate {
        scenario: PathBuf,
        /// Carrier index for multi-carrier scenarios.
        #[arg(long, default_value_t = 0)]
        carrier: usize,
        #[arg(long, value_enum, default_value_t = Format::Cf32)]
        format: Format,
    },
    /// Estimate the relative channel of a recorded capture.
    Estimate {
        /// Capture prefix: reads `<prefix>.ref.iq`, `<prefix>.sw.iq`, `<prefix>.meta`.
        capture: PathBuf,
        /// Lag in clock periods; 0 uses the lag-0 estimator.
        #[arg(long, default_value_t = 1)]
        tau_periods: usize,
        #[arg(long, default_value_t = 900e6)]
        carrier_hz: f64,
        #[arg(long, default_value_t = 0.1)]
        interference_threshold: f64,
        #[arg(long, default_value_t = 500.0)]
        clock_min_hz: f64,
        #[arg(long, default_value_t = 100_000.0)]
        clock_max_hz: f64,
    },
    /// Estimate angles of arrival from a channel CSV.
    Aoa {
        channel: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Overrides the wavelength recorded in the channel file.
        #[arg(long)]
        carrier_hz: Option<f64>,
    },
    /// Triangulate a position from a bearings CSV (`x_m,y_m,angle_deg[,confidence]`).
    Localize { bearings: PathBuf },
    /// Run a scenario end to end and write report CSVs.
    Run { scenario: PathBuf },
    /// Repeat a scenario over values of one parameter.
    Sweep {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long, default_value = "sparse")]
    method: String,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 256)]
    grid: usize,
    #[arg(long, default_value_t = 0.0625)]
    spacing_m: f64,
    #[arg(long, default_value_t = 0.05)]
    rel_threshold: f64,
    #[arg(long)]
    n_sources: Option<usize>,
    #[arg(long, default_value_t = 5)]
    subarray_len: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Cf32,
    Cf64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Axis {
    Beta,
    Range,
    Packets,
    Tau,
}

fn load(path: &Path, seed: Option<u64>) -> anyhow::Result<Scenario> {
    let mut s = Scenario::load(path).with_context(|| format!("scenario {}", path.display()))?;
    if let Some(seed) = seed {
        s.run.seeds = vec![seed];
    }
    Ok(s)
}

fn emit(out: Option<&Path>, name: &str, text: &str) -> anyhow::Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(name);
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            log::info!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_bearings(text: &str) -> anyhow::Result<Vec<Bearing>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("x_m") {
            continue;
        }
        let f: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("bearings line {}", i + 1))?;
        let b = match f.as_slice() {
            [x, y, a] => Bearing::new(Point2::new(*x, *y), a.to_radians()),
            [x, y, a, w] => Bearing::new(Point2::new(*x, *y), a.to_radians()).with_confidence(*w),
            _ => bail!("bearings line {}: expected x_m,y_m,angle_deg[,confidence]", i + 1),
        };
        out.push(b);
    }
    Ok(out)
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Simulate {
            scenario,
            carrier,
            format,
        } => {
            let s = load(&scenario, cli.seed)?;
            let seed = s.run.seeds[0];
            let dir = out.map(Path::to_path_buf).or_else(|| s.run.out.clone()).unwrap_or_else(|| ".".into());
            fs::create_dir_all(&dir)?;
            let format = match format {
                Format::Cf32 => SampleFormat::Cf32,
                Format::Cf64 => SampleFormat::Cf64,
            };
            for v in 0..s.vantages.len() {
                let cap = simulate_vantage(&s, v, carrier, seed, 0)?;
                let prefix = dir.join(format!("vantage{v}"));
                write_capture_as(&cap, &prefix, format)?;
                println!("{}", prefix.display());
            }
            Ok(0)
        }
        Command::Estimate {
            capture,
            tau_periods,
            carrier_hz,
            interference_threshold,
            clock_min_hz,
            clock_max_hz,
        } => {
            let cap = read_capture(&capture).with_context(|| format!("capture {}", capture.display()))?;
            let mut est = Scenario::default().estimator;
            est.tau_periods = tau_periods;
            est.interference_threshold = interference_threshold;
            est.clock_min_hz = clock_min_hz;
            est.clock_max_hz = clock_max_hz;
            let o = estimate_capture(&cap, &est, SPEED_OF_LIGHT / carrier_hz, 1)?;
            eprintln!(
                "clock {:.3} Hz ({:.1} dB), tau {} samples, snr {:.2} dB, interference score {}",
                o.clock.frequency_hz(cap.fs),
                o.clock.confidence_db,
                o.tau_samples,
                o.snr_db,
                o.interference_score.map_or("n/a".to_string(), |s| format!("{s:.4}")),
            );
            emit(out, "channel.csv", &channel_csv(&o.channel))?;
            Ok(if o.interfered { 4 } else { 0 })
        }
        Command::Aoa {
            channel,
            solver,
            carrier_hz,
        } => {
            let text = fs::read_to_string(&channel).with_context(|| format!("channel {}", channel.display()))?;
            let mut h = parse_channel_csv(&text)?;
            if let Some(f) = carrier_hz {
                h.carrier_wavelength_m = Some(SPEED_OF_LIGHT / f);
            }
            if h.carrier_wavelength_m.is_none() {
                h.carrier_wavelength_m = Some(SPEED_OF_LIGHT / 900e6);
            }
            let mut spec = Scenario::default().solver;
            spec.method = solver.method.parse::<Method>()?;
            spec.beta = solver.beta;
            spec.grid = solver.grid;
            spec.rel_threshold = solver.rel_threshold;
            spec.n_sources = solver.n_sources;
            spec.subarray_len = solver.subarray_len;
            let o = estimate_aoa(std::slice::from_ref(&h), solver.spacing_m, &spec)?;
            let mut csv = String::from("rank,aoa_deg,weight_re,weight_im\n");
            for (k, (a, w)) in o.estimate.angles_rad.iter().zip(&o.estimate.weights).enumerate() {
                csv.push_str(&format!("{k},{},{},{}\n", a.to_degrees(), w.re, w.im));
            }
            emit(out, "aoa.csv", &csv)?;
            Ok(if o.converged { 0 } else { 5 })
        }
        Command::Localize { bearings } => {
            let text = fs::read_to_string(&bearings).with_context(|| format!("bearings {}", bearings.display()))?;
            let r = triangulate(&parse_bearings(&text)?)?;
            let csv = format!(
                "x_m,y_m,residual_m,condition,n_bearings\n{},{},{},{},{}\n",
                r.position_m.x, r.position_m.y, r.residual_m, r.condition, r.n_bearings
            );
            emit(out, "position.csv", &csv)?;
            Ok(0)
        }
        Command::Run { scenario } => {
            let s = load(&scenario, cli.seed)?;
            let dir = out.map(Path::to_path_buf).or_else(|| s.run.out.clone());
            let mut reports = Vec::with_capacity(s.run.seeds.len());
            for &seed in &s.run.seeds {
                reports.push(run_scenario(&s, seed)?);
            }
            match dir {
                Some(d) => write_reports(&reports, &d)?,
                None => {
                    print!("{}", aoa_csv(&reports));
                    print!("{}", localization_csv(&reports));
                }
            }
            for r in &reports {
                eprintln!("seed {}: localization error {:.4} m", r.seed, r.loc_error_m);
            }
            Ok(reports.iter().map(|r| r.exit_code()).max().unwrap_or(0))
        }
        Command::Sweep { scenario, axis, values } => {
            let s = load(&scenario, cli.seed)?;
            let axis = match axis {
                Axis::Beta => SweepAxis::Beta,
                Axis::Range => SweepAxis::Range,
                Axis::Packets => SweepAxis::Packets,
                Axis::Tau => SweepAxis::Tau,
            };
            let rows = run_sweep(&s, axis, &values)?;
            emit(out, &format!("sweep_{}.csv", axis.as_str()), &sweep_csv(&rows))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = match e.downcast_ref::<emloc::Error>() {
                Some(err) => err.exit_code(),
                None if e.downcast_ref::<std::io::Error>().is_some() => 1,
                None => 2,
            };
            ExitCode::from(code as u8)
        }
    }
}
