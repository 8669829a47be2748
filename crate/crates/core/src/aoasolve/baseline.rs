//! Subspace baselines: MUSIC on the single-snapshot covariance and MUSIC
//! after forward spatial smoothing.
//!
//! A single relative channel yields the rank-1 covariance `h hᴴ`, so plain
//! MUSIC sees one signal dimension no matter how many paths are present.
//! Smoothing over subarrays trades aperture for rank.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{sort_paths, AoAEstimate, Method};
use crate::chanest::RelativeChannel;
use crate::emamodel::steering_phase_dl;
use crate::{Error, Result};

/// Angles scanned by the pseudospectrum search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGrid {
    pub step_deg: f64,
    /// Scan covers `(-limit, limit)`.
    pub limit_deg: f64,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self {
            step_deg: 0.25,
            limit_deg: 90.0,
        }
    }
}

impl ScanGrid {
    fn angles(&self) -> Vec<f64> {
        let n = ((self.limit_deg / self.step_deg).ceil() as i64 - 1).max(0);
        (-n..=n).map(|k| (k as f64 * self.step_deg).to_radians()).collect()
    }
}

fn steering(dl: f64, theta: f64, m: usize) -> DVector<Complex64> {
    DVector::from_iterator(m, (0..m).map(|i| steering_phase_dl(dl, theta, i)))
}

/// Average of `x xᴴ` over every length-`m` window of the channel.
pub fn smoothed_covariance(h: &RelativeChannel, m: usize) -> Result<DMatrix<Complex64>> {
    let n = h.len();
    if m == 0 || m > n {
        return Err(Error::SubarrayTooLong { len: m, n_elements: n });
    }
    let k = n - m + 1;
    let mut r = DMatrix::<Complex64>::zeros(m, m);
    for s in 0..k {
        let x = DVector::from_column_slice(&h.values[s..s + m]);
        r += &x * x.adjoint();
    }
    Ok(r / Complex64::new(k as f64, 0.0))
}

/// Index of the largest ratio between consecutive descending eigenvalues.
fn eigen_gap(eigs: &[f64]) -> usize {
    let top = eigs[0].max(f64::MIN_POSITIVE);
    let floor = top * 1e-13;
    (1..eigs.len())
        .max_by(|&a, &b| {
            let ra = eigs[a - 1].max(floor) / eigs[a].max(floor);
            let rb = eigs[b - 1].max(floor) / eigs[b].max(floor);
            ra.total_cmp(&rb).then(b.cmp(&a))
        })
        .unwrap_or(1)
}

fn music(
    cov: DMatrix<Complex64>,
    h: &RelativeChannel,
    d_over_lambda: f64,
    n_sources: Option<usize>,
    scan: &ScanGrid,
    method: Method,
) -> Result<AoAEstimate> {
    let m = cov.nrows();
    if !h.is_finite() {
        return Err(Error::invalid("channel", "contains non-finite values"));
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let sorted: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let k = match n_sources {
        Some(k) if k == 0 || k >= m => {
            return Err(Error::invalid("n_sources", format!("{k} must be in 1..{m}")));
        }
        Some(k) => k,
        None => eigen_gap(&sorted),
    };
    let noise: Vec<DVector<Complex64>> = order[k..].iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();

    let angles = scan.angles();
    let spectrum: Vec<f64> = angles
        .iter()
        .map(|&t| {
            let a = steering(d_over_lambda, t, m);
            let proj: f64 = noise.iter().map(|e| e.dotc(&a).norm_sqr()).sum();
            1.0 / proj.max(1e-300)
        })
        .collect();
    let mut peaks: Vec<usize> = (1..angles.len().saturating_sub(1))
        .filter(|&i| spectrum[i] > spectrum[i - 1] && spectrum[i] >= spectrum[i + 1])
        .collect();
    peaks.sort_by(|&a, &b| spectrum[b].total_cmp(&spectrum[a]));
    peaks.truncate(k);
    if peaks.is_empty() {
        return Err(Error::NoPathFound);
    }
    let mut found: Vec<f64> = peaks.iter().map(|&i| angles[i]).collect();
    let mut weights = path_weights(h, d_over_lambda, &found);
    sort_paths(&mut found, &mut weights);
    Ok(AoAEstimate {
        angles_rad: found,
        weights,
        method,
    })
}

/// Least-squares path gains on the full array, normalized to sum 1.
fn path_weights(h: &RelativeChannel, dl: f64, angles: &[f64]) -> Vec<Complex64> {
    let n = h.len();
    let a = DMatrix::from_fn(n, angles.len(), |i, k| steering_phase_dl(dl, angles[k], i));
    let rhs = DVector::from_column_slice(&h.values);
    let normal = a.adjoint() * &a;
    let proj = a.adjoint() * rhs;
    let equal = vec![Complex64::new(1.0 / angles.len() as f64, 0.0); angles.len()];
    let Some(w) = normal.lu().solve(&proj) else {
        return equal;
    };
    let sum: Complex64 = w.iter().sum();
    if sum.norm() < 1e-12 || w.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return equal;
    }
    w.iter().map(|v| v / sum).collect()
}

/// MUSIC on `h hᴴ`; `n_sources` defaults to the eigenvalue-gap estimate.
pub fn music_aoa(h: &RelativeChannel, d_over_lambda: f64, n_sources: Option<usize>, scan: &ScanGrid) -> Result<AoAEstimate> {
    if h.len() < 2 {
        return Err(Error::invalid("channel", "need at least 2 elements"));
    }
    let x = DVector::from_column_slice(&h.values);
    music(&x * x.adjoint(), h, d_over_lambda, n_sources, scan, Method::Music)
}

/// MUSIC on the forward-smoothed covariance of length-`subarray_len` windows.
pub fn spotfi_aoa(
    h: &RelativeChannel,
    d_over_lambda: f64,
    subarray_len: usize,
    n_sources: Option<usize>,
    scan: &ScanGrid,
) -> Result<AoAEstimate> {
    let cov = smoothed_covariance(h, subarray_len)?;
    music(cov, h, d_over_lambda, n_sources, scan, Method::Spotfi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chanest::ChannelKind;
    use crate::emamodel::{true_relative_channel, ArrayGeometry, Path, PathSet};

    const DL: f64 = 0.1876;

    fn channel(paths: &[(f64, f64)]) -> RelativeChannel {
        let geom = ArrayGeometry::new(8, DL, 1.0).unwrap();
        let ps = PathSet::new(
            paths
                .iter()
                .map(|&(deg, g)| Path::new(deg.to_radians(), Complex64::new(g, 0.0)))
                .collect(),
        )
        .unwrap();
        true_relative_channel(&geom, &ps).unwrap()
    }

    #[test]
    fn music_single_path_is_exact() {
        let h = channel(&[(17.0, 1.0)]);
        let est = music_aoa(&h, DL, None, &ScanGrid::default()).unwrap();
        assert_eq!(est.len(), 1);
        assert!((est.angles_rad[0].to_degrees() - 17.0).abs() < 1e-9);
        assert!((est.weights[0] - Complex64::new(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn music_cannot_resolve_rank_one_pair() {
        let h = channel(&[(0.0, 1.0), (20.0, 0.6)]);
        let est = music_aoa(&h, DL, None, &ScanGrid::default()).unwrap();
        let resolved = est.len() >= 2
            && est.angles_rad.iter().any(|a| a.to_degrees().abs() < 10.0)
            && est.angles_rad.iter().any(|a| (a.to_degrees() - 20.0).abs() < 10.0);
        assert!(!resolved, "{:?}", est.angles_rad);
    }

    #[test]
    fn music_is_phase_invariant() {
        let h = channel(&[(-12.0, 1.0), (30.0, 0.5)]);
        let rot = Complex64::from_polar(1.0, 1.1);
        let mut h2 = h.clone();
        h2.values.iter_mut().for_each(|v| *v *= rot);
        let a = music_aoa(&h, DL, Some(1), &ScanGrid::default()).unwrap();
        let b = music_aoa(&h2, DL, Some(1), &ScanGrid::default()).unwrap();
        assert_eq!(a.angles_rad, b.angles_rad);
    }

    #[test]
    fn smoothing_shape_and_rank() {
        let h = channel(&[(-20.0, 1.0), (15.0, 0.7)]);
        let r = smoothed_covariance(&h, 5).unwrap();
        assert_eq!(r.shape(), (5, 5));
        // Brute-force average of the 5 windows.
        let mut direct = DMatrix::<Complex64>::zeros(5, 5);
        for s in 0..5 {
            for i in 0..5 {
                for j in 0..5 {
                    direct[(i, j)] += h.values[s + i] * h.values[s + j].conj() / 5.0;
                }
            }
        }
        assert!((&r - &direct).norm() < 1e-12);
        let mut eigs: Vec<f64> = SymmetricEigen::new(r).eigenvalues.iter().cloned().collect();
        eigs.sort_by(|a, b| b.total_cmp(a));
        assert!(eigs[1] > 1e-6 * eigs[0]);
        assert!(matches!(smoothed_covariance(&h, 10), Err(Error::SubarrayTooLong { .. })));
    }

    #[test]
    fn spotfi_single_and_two_paths() {
        let h = channel(&[(25.0, 1.0)]);
        let est = spotfi_aoa(&h, DL, 5, None, &ScanGrid::default()).unwrap();
        assert!((est.angles_rad[0].to_degrees() - 25.0).abs() < 1e-9);

        let h = channel(&[(-20.0, 1.0), (15.0, 0.7)]);
        let est = spotfi_aoa(&h, DL, 5, None, &ScanGrid::default()).unwrap();
        assert_eq!(est.len(), 2);
        let mut got: Vec<f64> = est.angles_rad.iter().map(|a| a.to_degrees()).collect();
        got.sort_by(f64::total_cmp);
        assert!((got[0] + 20.0).abs() < 3.0 && (got[1] - 15.0).abs() < 3.0, "{got:?}");
    }

    #[test]
    fn source_count_must_fit() {
        let h = RelativeChannel::from_values(vec![Complex64::new(1.0, 0.0); 9], ChannelKind::Truth);
        assert!(music_aoa(&h, DL, Some(9), &ScanGrid::default()).is_err());
    }
}
