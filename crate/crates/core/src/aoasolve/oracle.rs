//! Exhaustive small-support reference solver for tests.

use num_complex::Complex64;

use super::window::WindowMatrix;

pub(crate) struct OracleSolution {
    pub support: Vec<usize>,
    pub coeffs: Vec<Complex64>,
    pub objective: f64,
}

/// `Σ w_k · W[:, k]` for on-grid paths.
pub(crate) fn two_path_profile(w: &WindowMatrix, paths: &[(usize, f64)]) -> Vec<Complex64> {
    let mut p = vec![Complex64::new(0.0, 0.0); w.d];
    for &(k, g) in paths {
        for (x, c) in p.iter_mut().zip(w.column(k)) {
            *x += c * g;
        }
    }
    p
}

/// Searches every support of one or two in-range bins. Each candidate is
/// the constrained least-squares fit `a = (t, 1 − t)`, scored by
/// `‖P − W a‖² + β‖a‖₁`.
pub(crate) fn best_support(p: &[Complex64], w: &WindowMatrix, beta: f64, d_over_lambda: f64) -> OracleSolution {
    let bins: Vec<usize> = (0..w.d).filter(|&j| w.centers[j].abs() <= d_over_lambda + 1e-12).collect();
    let residual = |a: &[(usize, Complex64)]| -> f64 {
        (0..w.d)
            .map(|i| {
                let fit: Complex64 = a.iter().map(|&(j, v)| w.get(i, j) * v).sum();
                (p[i] - fit).norm_sqr()
            })
            .sum()
    };
    let one = Complex64::new(1.0, 0.0);
    let mut best = OracleSolution {
        support: Vec::new(),
        coeffs: Vec::new(),
        objective: f64::INFINITY,
    };
    for &j in &bins {
        let obj = residual(&[(j, one)]) + beta;
        if obj < best.objective {
            best = OracleSolution {
                support: vec![j],
                coeffs: vec![one],
                objective: obj,
            };
        }
    }
    for (x, &j1) in bins.iter().enumerate() {
        for &j2 in &bins[x + 1..] {
            let diff: Vec<Complex64> = (0..w.d).map(|i| w.get(i, j1) - w.get(i, j2)).collect();
            let target: Vec<Complex64> = (0..w.d).map(|i| p[i] - w.get(i, j2)).collect();
            let num: Complex64 = diff.iter().zip(&target).map(|(a, b)| a.conj() * b).sum();
            let den: f64 = diff.iter().map(|a| a.norm_sqr()).sum();
            let t = num / den;
            let obj = residual(&[(j1, t), (j2, one - t)]) + beta * (t.norm() + (one - t).norm());
            if obj < best.objective {
                best = OracleSolution {
                    support: vec![j1, j2],
                    coeffs: vec![t, one - t],
                    objective: obj,
                };
            }
        }
    }
    best
}
