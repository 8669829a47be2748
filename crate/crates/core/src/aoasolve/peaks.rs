//! Turning coefficient profiles into path angles.

use num_complex::Complex64;

use super::window::{grid_point, ifft_profile};
use super::{psi_to_angle, sort_paths, AoAEstimate, AoAProfile, JointProfile, Method};
use crate::chanest::RelativeChannel;
use crate::{Error, Result};

/// Either kind of solved profile.
#[derive(Debug, Clone, Copy)]
pub enum ProfileRef<'a> {
    Single(&'a AoAProfile),
    Joint(&'a JointProfile),
}

impl<'a> From<&'a AoAProfile> for ProfileRef<'a> {
    fn from(p: &'a AoAProfile) -> Self {
        ProfileRef::Single(p)
    }
}

impl<'a> From<&'a JointProfile> for ProfileRef<'a> {
    fn from(p: &'a JointProfile) -> Self {
        ProfileRef::Joint(p)
    }
}

/// Paths from bins above `rel_threshold · max`.
///
/// Selection uses `|a_j|`, or the row norm for joint profiles. Runs of
/// adjacent selected bins merge into one path at their magnitude-weighted
/// Ψ centroid whose weight is the summed coefficient. Joint weights are the
/// mean over measurements.
pub fn extract_angles<'a>(profile: impl Into<ProfileRef<'a>>, rel_threshold: f64) -> Result<AoAEstimate> {
    let (grid, mags, weights, dl, method) = match profile.into() {
        ProfileRef::Single(p) => (
            &p.grid,
            p.coeffs.iter().map(|a| a.norm()).collect::<Vec<_>>(),
            p.coeffs.clone(),
            p.d_over_lambda,
            Method::Sparse,
        ),
        ProfileRef::Joint(p) => {
            let l = p.n_measurements() as f64;
            let mean = (0..p.grid.len())
                .map(|j| p.columns.iter().map(|c| c[j]).sum::<Complex64>() / l)
                .collect();
            (&p.grid, p.row_norms(), mean, p.d_over_lambda[0], Method::Joint)
        }
    };
    let mut est = cluster(grid, &mags, &weights, dl, rel_threshold)?;
    est.method = method;
    Ok(est)
}

fn cluster(grid: &[f64], mags: &[f64], weights: &[Complex64], dl: f64, rel: f64) -> Result<AoAEstimate> {
    let max = mags.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::NoPathFound);
    }
    let cut = rel * max;
    let mut angles = Vec::new();
    let mut ws = Vec::new();
    let mut j = 0;
    while j < mags.len() {
        if mags[j] <= cut {
            j += 1;
            continue;
        }
        let start = j;
        while j < mags.len() && mags[j] > cut {
            j += 1;
        }
        let total: f64 = mags[start..j].iter().sum();
        let psi: f64 = (start..j).map(|i| mags[i] * grid[i]).sum::<f64>() / total;
        angles.push(psi_to_angle(psi, dl));
        ws.push(weights[start..j].iter().sum());
    }
    sort_paths(&mut angles, &mut ws);
    Ok(AoAEstimate {
        angles_rad: angles,
        weights: ws,
        method: Method::Sparse,
    })
}

/// Local maxima of the raw IFFT profile inside `|Ψ| ≤ d/λ`.
pub fn ifft_peak_aoa(h: &RelativeChannel, d_over_lambda: f64, d: usize, rel_threshold: f64) -> Result<AoAEstimate> {
    let p = ifft_profile(h, d)?;
    let mags: Vec<f64> = p.iter().map(|v| v.norm()).collect();
    let inside = |i: usize| grid_point(i, d).abs() <= d_over_lambda + 1e-12;
    let max = (0..d).filter(|&i| inside(i)).map(|i| mags[i]).fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::NoPathFound);
    }
    let mut angles = Vec::new();
    let mut ws = Vec::new();
    for i in 1..d - 1 {
        if inside(i) && mags[i] > rel_threshold * max && mags[i] >= mags[i - 1] && mags[i] > mags[i + 1] {
            angles.push(psi_to_angle(grid_point(i, d), d_over_lambda));
            ws.push(p[i]);
        }
    }
    if angles.is_empty() {
        return Err(Error::NoPathFound);
    }
    let sum: Complex64 = ws.iter().sum();
    if sum.norm() > 1e-12 {
        ws.iter_mut().for_each(|w| *w /= sum);
    }
    sort_paths(&mut angles, &mut ws);
    Ok(AoAEstimate {
        angles_rad: angles,
        weights: ws,
        method: Method::Ifft,
    })
}
