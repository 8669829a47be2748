//! Angle-of-arrival estimation from relative channels.
//!
//! The channel of an `N`-element array sampled on the normalized spatial
//! frequency `Ψ = (d/λ)·sinθ` is a sum of steering vectors. Its zero-padded
//! inverse transform ([`ifft_profile`]) is a superposition of shifted
//! Dirichlet kernels, the columns of a [`WindowMatrix`]. The sparse solvers
//! invert that blur under `Σa = 1` and the physical support `|Ψ| ≤ d/λ`.
//! MUSIC and spatially smoothed MUSIC are provided as baselines.

mod baseline;
mod peaks;
mod sparse;
mod window;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

pub use baseline::{music_aoa, smoothed_covariance, spotfi_aoa, ScanGrid};
pub use peaks::{extract_angles, ifft_peak_aoa, ProfileRef};
pub use sparse::{solve_joint, solve_sparse, DataFit, Measurement, SolverOptions};
pub use window::{build_window_matrix, build_window_matrix_scaled, grid_point, ifft_profile, WindowMatrix};

use crate::Error;

/// AoA estimation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Sparse,
    Joint,
    Music,
    Spotfi,
    Ifft,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sparse => "sparse",
            Method::Joint => "joint",
            Method::Music => "music",
            Method::Spotfi => "spotfi",
            Method::Ifft => "ifft",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sparse" => Ok(Method::Sparse),
            "joint" => Ok(Method::Joint),
            "music" => Ok(Method::Music),
            "spotfi" => Ok(Method::Spotfi),
            "ifft" => Ok(Method::Ifft),
            other => Err(Error::invalid("method", format!("unknown method `{other}`"))),
        }
    }
}

/// Solution of the single-measurement sparse problem.
#[derive(Debug, Clone, PartialEq)]
pub struct AoAProfile {
    /// Ψ value of each coefficient bin.
    pub grid: Vec<f64>,
    pub coeffs: Vec<Complex64>,
    pub d_over_lambda: f64,
    /// `‖P − W a‖₂` at the solution.
    pub residual: f64,
    pub solver_iters: usize,
    pub converged: bool,
    /// Objective value after every iteration.
    pub objective_log: Vec<f64>,
}

impl AoAProfile {
    /// Bins whose magnitude exceeds `rel · max|a|`.
    pub fn active_bins(&self, rel: f64) -> usize {
        let max = self.coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max);
        self.coeffs.iter().filter(|a| a.norm() > rel * max).count()
    }

    pub fn coeff_sum(&self) -> Complex64 {
        self.coeffs.iter().sum()
    }

    /// Largest coefficient magnitude outside `|Ψ| ≤ d/λ`.
    pub fn out_of_support_mass(&self) -> f64 {
        self.grid
            .iter()
            .zip(&self.coeffs)
            .filter(|(psi, _)| psi.abs() > self.d_over_lambda + 1e-12)
            .map(|(_, a)| a.norm())
            .fold(0.0, f64::max)
    }
}

/// What distinguishes one joint measurement from another.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasurementTag {
    /// Time segment index.
    Time(usize),
    /// Carrier or harmonic wavelength.
    Frequency { wavelength_m: f64 },
    /// Estimator lag.
    Offset { tau_samples: usize },
}

/// Solution of the group-sparse problem: one coefficient column per
/// measurement over a shared set of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct JointProfile {
    /// Ψ of each row in the first measurement's coordinates.
    pub grid: Vec<f64>,
    /// `columns[l][j]` is row `j` of measurement `l`.
    pub columns: Vec<Vec<Complex64>>,
    pub tags: Vec<MeasurementTag>,
    pub d_over_lambda: Vec<f64>,
    pub group_weight: f64,
    pub residual: f64,
    pub solver_iters: usize,
    pub converged: bool,
    pub objective_log: Vec<f64>,
}

impl JointProfile {
    pub fn n_measurements(&self) -> usize {
        self.columns.len()
    }

    /// L2 norm of each row across measurements.
    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|j| self.columns.iter().map(|c| c[j].norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }

    /// Single-measurement view of column `l`.
    pub fn column_profile(&self, l: usize) -> AoAProfile {
        AoAProfile {
            grid: self.grid.clone(),
            coeffs: self.columns[l].clone(),
            d_over_lambda: self.d_over_lambda[0],
            residual: f64::NAN,
            solver_iters: self.solver_iters,
            converged: self.converged,
            objective_log: Vec::new(),
        }
    }
}

/// Paths found by an estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct AoAEstimate {
    /// Sorted by `|weight|`, strongest first.
    pub angles_rad: Vec<f64>,
    /// Relative path gains normalized to sum 1.
    pub weights: Vec<Complex64>,
    pub method: Method,
}

impl AoAEstimate {
    pub fn dominant(&self) -> Option<(f64, Complex64)> {
        Some((*self.angles_rad.first()?, *self.weights.first()?))
    }

    pub fn len(&self) -> usize {
        self.angles_rad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles_rad.is_empty()
    }
}

/// Orders paths by weight magnitude, ties toward smaller `|angle|`.
pub(crate) fn sort_paths(angles: &mut Vec<f64>, weights: &mut Vec<Complex64>) {
    let mut idx: Vec<usize> = (0..angles.len()).collect();
    idx.sort_by(|&a, &b| {
        weights[b]
            .norm()
            .total_cmp(&weights[a].norm())
            .then(angles[a].abs().total_cmp(&angles[b].abs()))
    });
    *angles = idx.iter().map(|&i| angles[i]).collect();
    *weights = idx.iter().map(|&i| weights[i]).collect();
}

/// `θ = asin(Ψ / (d/λ))`, kept strictly inside ±π/2.
pub(crate) fn psi_to_angle(psi: f64, d_over_lambda: f64) -> f64 {
    let limit = std::f64::consts::FRAC_PI_2 - 1e-9;
    (psi / d_over_lambda).clamp(-1.0, 1.0).asin().clamp(-limit, limit)
}

#[cfg(test)]
pub(crate) mod oracle;
