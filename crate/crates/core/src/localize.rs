//! Bearing-only triangulation and evaluation metrics.

use crate::aoasolve::AoAEstimate;
use crate::emamodel::{wrap_angle, PathSet};
use crate::{Error, Result};

/// Point in the 2D plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// A line of sight from a vantage point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bearing {
    pub origin_m: Point2,
    /// Global angle, counter-clockwise from +x.
    pub global_angle_rad: f64,
    pub confidence: f64,
}

impl Bearing {
    pub fn new(origin_m: Point2, global_angle_rad: f64) -> Self {
        Self {
            origin_m,
            global_angle_rad,
            confidence: 1.0,
        }
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }

    /// Signed perpendicular distance from `p` to the bearing line.
    pub fn offset_of(&self, p: Point2) -> f64 {
        let (s, c) = self.global_angle_rad.sin_cos();
        -s * (p.x - self.origin_m.x) + c * (p.y - self.origin_m.y)
    }

    /// True when `p` lies ahead of the origin along the bearing.
    pub fn is_ahead(&self, p: Point2) -> bool {
        let (s, c) = self.global_angle_rad.sin_cos();
        c * (p.x - self.origin_m.x) + s * (p.y - self.origin_m.y) > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationResult {
    pub position_m: Point2,
    /// Weighted RMS perpendicular distance to the bearing lines.
    pub residual_m: f64,
    pub n_bearings: usize,
    /// Smallest singular value of the weight-normalized line system.
    pub condition: f64,
}

const CONDITION_FLOOR: f64 = 1e-6;

/// Weighted least-squares intersection of bearing lines.
///
/// Each bearing contributes `w·(n·(p − o))²` with `n` the line normal; the
/// 2×2 normal equations are solved in closed form. Weights are normalized to
/// sum 1 so `condition` is independent of their scale.
pub fn triangulate(bearings: &[Bearing]) -> Result<LocalizationResult> {
    if bearings.len() < 2 {
        return Err(Error::invalid("bearings", format!("need at least 2, got {}", bearings.len())));
    }
    for b in bearings {
        if !b.origin_m.is_finite() || !b.global_angle_rad.is_finite() {
            return Err(Error::invalid("bearings", "non-finite origin or angle"));
        }
        if !(b.confidence >= 0.0 && b.confidence.is_finite()) {
            return Err(Error::invalid("confidence", format!("{} is not a finite weight ≥ 0", b.confidence)));
        }
    }
    let total: f64 = bearings.iter().map(|b| b.confidence).sum();
    if !(total > 0.0) {
        return Err(Error::invalid("confidence", "all weights are zero"));
    }

    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for b in bearings {
        let w = b.confidence / total;
        let (s, c) = b.global_angle_rad.sin_cos();
        let (nx, ny) = (-s, c);
        let d = nx * b.origin_m.x + ny * b.origin_m.y;
        a11 += w * nx * nx;
        a12 += w * nx * ny;
        a22 += w * ny * ny;
        b1 += w * nx * d;
        b2 += w * ny * d;
    }
    let tr = a11 + a22;
    let det = a11 * a22 - a12 * a12;
    let disc = (0.25 * (a11 - a22).powi(2) + a12 * a12).sqrt();
    let lambda_min = (0.5 * tr - disc).max(0.0);
    let condition = lambda_min.sqrt();
    if condition < CONDITION_FLOOR {
        return Err(Error::IllConditioned { condition });
    }
    let p = Point2::new((a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det);
    let residual = bearings
        .iter()
        .map(|b| b.confidence / total * b.offset_of(p).powi(2))
        .sum::<f64>()
        .sqrt();
    for (i, b) in bearings.iter().enumerate() {
        if !b.is_ahead(p) {
            log::warn!("triangulated point lies behind bearing {i}");
        }
    }
    Ok(LocalizationResult {
        position_m: p,
        residual_m: residual,
        n_bearings: bearings.len(),
        condition,
    })
}

/// Absolute angle between the strongest estimated path and the strongest
/// true path, in degrees.
pub fn aoa_error(est: &AoAEstimate, truth: &PathSet) -> Result<f64> {
    let top = *est.angles_rad.first().ok_or(Error::Empty("AoA estimate"))?;
    Ok(wrap_angle(top - truth.dominant().aoa_rad).abs().to_degrees())
}

pub fn localization_error(result: &LocalizationResult, truth: Point2) -> f64 {
    result.position_m.distance(truth)
}
