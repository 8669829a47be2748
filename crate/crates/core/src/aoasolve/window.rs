//! Window matrix and IFFT spatial profile.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::chanest::{ifft, RelativeChannel};
use crate::{Error, Result};

/// Ψ of bin `i` on a `d`-point grid spanning `[-1/2, 1/2)`.
pub fn grid_point(i: usize, d: usize) -> f64 {
    (i as f64 - (d / 2) as f64) / d as f64
}

/// Dirichlet dictionary: column `j` is the response of a unit path at
/// `centers[j]`, sampled at the grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowMatrix {
    pub d: usize,
    pub n_elements: usize,
    pub grid: Vec<f64>,
    pub centers: Vec<f64>,
    /// Column-major, `d × d`.
    data: Vec<Complex64>,
}

/// `(1/N) Σ_{n<N} e^{+j2πnx}`.
fn dirichlet(n_elements: usize, x: f64) -> Complex64 {
    let s: Complex64 = (0..n_elements).map(|n| Complex64::from_polar(1.0, 2.0 * PI * n as f64 * x)).sum();
    s / n_elements as f64
}

impl WindowMatrix {
    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.d..(j + 1) * self.d]
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[j * self.d + i]
    }

    /// `W a`.
    pub fn apply(&self, a: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.d];
        for (j, &aj) in a.iter().enumerate() {
            if aj != Complex64::new(0.0, 0.0) {
                for (o, w) in out.iter_mut().zip(self.column(j)) {
                    *o += w * aj;
                }
            }
        }
        out
    }

    /// Response of a unit path at arbitrary `psi` on this grid.
    pub fn response(&self, psi: f64) -> Vec<Complex64> {
        self.grid.iter().map(|&g| dirichlet(self.n_elements, g - psi)).collect()
    }
}

/// Dictionary whose column centers coincide with the grid.
pub fn build_window_matrix(n_elements: usize, d: usize) -> Result<WindowMatrix> {
    build_window_matrix_scaled(n_elements, d, 1.0)
}

/// Dictionary with column centers `Ψ_j · scale`.
///
/// A measurement at wavelength `λ_l` sees a path at reference spatial
/// frequency `Ψ` at `Ψ·λ_0/λ_l`; passing that ratio keeps row `j` tied to
/// the same physical angle across measurements.
pub fn build_window_matrix_scaled(n_elements: usize, d: usize, scale: f64) -> Result<WindowMatrix> {
    if n_elements < 2 {
        return Err(Error::invalid("n_elements", "need at least 2 elements"));
    }
    if d < 4 * n_elements {
        return Err(Error::GridTooSmall {
            grid: d,
            n_elements,
            min: 4 * n_elements,
        });
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid("scale", "must be positive"));
    }
    let grid: Vec<f64> = (0..d).map(|i| grid_point(i, d)).collect();
    let centers: Vec<f64> = grid.iter().map(|g| g * scale).collect();
    let mut data = Vec::with_capacity(d * d);
    for &c in &centers {
        data.extend(grid.iter().map(|&g| dirichlet(n_elements, g - c)));
    }
    Ok(WindowMatrix {
        d,
        n_elements,
        grid,
        centers,
        data,
    })
}

/// Zero-padded `d`-point inverse transform of the channel, fftshifted onto
/// the window grid and scaled by `1/N`.
pub fn ifft_profile(h: &RelativeChannel, d: usize) -> Result<Vec<Complex64>> {
    let n = h.len();
    if n == 0 {
        return Err(Error::Empty("channel"));
    }
    if d < n {
        return Err(Error::GridTooSmall {
            grid: d,
            n_elements: n,
            min: n,
        });
    }
    if !h.is_finite() {
        return Err(Error::invalid("channel", "contains non-finite values"));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); d];
    buf[..n].copy_from_slice(&h.values);
    let x = ifft(&buf);
    let half = d / 2;
    Ok((0..d).map(|i| x[(i + d - half) % d] / n as f64).collect())
}
