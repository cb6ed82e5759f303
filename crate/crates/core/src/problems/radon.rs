//! Parallel-beam Radon transform discretizations.
//!
//! The image occupies `height × width` square pixels of side `pixel_spacing`
//! centered at the origin, rows running top to bottom. Angle `θ_k = kπ/n_angles`
//! projects the point `(x, y)` onto the detector coordinate
//! `s = x cos θ + y sin θ`; detector bin `b` is centered at
//! `(b − (n_bins − 1)/2)·detector_spacing`. Sinogram entries are stored
//! angle-major: index `k·n_bins + b`.
//!
//! Both projectors approximate the line integral of the image along the ray
//! through the bin center, and both are stored as sparse matrices so that
//! each is exactly adjoint to itself. They are not adjoint to each other.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operators::CsrMap;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinogramGeometry {
    pub n_angles: usize,
    pub n_bins: usize,
    pub detector_spacing: f64,
    pub pixel_spacing: f64,
}

impl SinogramGeometry {
    /// Unit pixels with the detector exactly covering the image diagonal.
    pub fn covering(n_angles: usize, n_bins: usize, height: usize, width: usize) -> Self {
        let diag = ((height * height + width * width) as f64).sqrt();
        Self {
            n_angles,
            n_bins,
            detector_spacing: diag / n_bins as f64,
            pixel_spacing: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.n_angles == 0 || self.n_bins == 0 {
            return Err(GeometryError::Degenerate(
                "need at least one angle and one bin".into(),
            ));
        }
        for (name, v) in [
            ("detector_spacing", self.detector_spacing),
            ("pixel_spacing", self.pixel_spacing),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(GeometryError::Degenerate(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.n_angles)
            .map(|k| k as f64 * std::f64::consts::PI / self.n_angles as f64)
            .collect()
    }

    pub fn sinogram_len(&self) -> usize {
        self.n_angles * self.n_bins
    }

    fn bin_center(&self, b: usize) -> f64 {
        (b as f64 - (self.n_bins as f64 - 1.0) / 2.0) * self.detector_spacing
    }
}

fn check_image(height: usize, width: usize) -> Result<(), GeometryError> {
    if height == 0 || width == 0 {
        return Err(GeometryError::Degenerate("empty image".into()));
    }
    Ok(())
}

/// Line-driven projector with Joseph interpolation: the ray is sampled once
/// per pixel column (or row, whichever the ray crosses more steeply) and the
/// image is interpolated linearly between the two nearest pixel centers.
pub fn radon_line(
    geom: &SinogramGeometry,
    height: usize,
    width: usize,
) -> Result<CsrMap, GeometryError> {
    geom.validate()?;
    check_image(height, width)?;
    let h = geom.pixel_spacing;
    let (mc, nc) = ((height as f64 - 1.0) / 2.0, (width as f64 - 1.0) / 2.0);
    let mut rows = Vec::with_capacity(geom.sinogram_len());
    for theta in geom.angles() {
        let (s, c) = theta.sin_cos();
        for b in 0..geom.n_bins {
            let t = geom.bin_center(b);
            let mut row = Vec::new();
            if s.abs() >= c.abs() {
                let w = h / s.abs();
                for j in 0..width {
                    let x = (j as f64 - nc) * h;
                    let r = mc - (t - x * c) / s / h;
                    push_interp(&mut row, r, height, |i| i * width + j, w);
                }
            } else {
                let w = h / c.abs();
                for i in 0..height {
                    let y = (mc - i as f64) * h;
                    let q = (t - y * s) / c / h + nc;
                    push_interp(&mut row, q, width, |j| i * width + j, w);
                }
            }
            rows.push(row);
        }
    }
    Ok(CsrMap::from_rows(height * width, rows))
}

/// Adds the linear-interpolation weights at fractional index `pos` along an
/// axis of length `len`.
fn push_interp(
    row: &mut Vec<(usize, f64)>,
    pos: f64,
    len: usize,
    index: impl Fn(usize) -> usize,
    w: f64,
) {
    let lo = pos.floor();
    let f = pos - lo;
    let lo = lo as i64;
    for (k, weight) in [(lo, 1.0 - f), (lo + 1, f)] {
        if k >= 0 && (k as usize) < len && weight > 0.0 {
            row.push((index(k as usize), w * weight));
        }
    }
}

/// Strip-driven projector: entry `(ray, pixel)` is the area of the pixel
/// inside the detector strip of the ray's bin, divided by the strip width.
pub fn radon_strip(
    geom: &SinogramGeometry,
    height: usize,
    width: usize,
) -> Result<CsrMap, GeometryError> {
    geom.validate()?;
    check_image(height, width)?;
    let h = geom.pixel_spacing;
    let d = geom.detector_spacing;
    let (mc, nc) = ((height as f64 - 1.0) / 2.0, (width as f64 - 1.0) / 2.0);
    let first = geom.bin_center(0) - d / 2.0;
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); geom.sinogram_len()];
    for (k, theta) in geom.angles().into_iter().enumerate() {
        let (s, c) = theta.sin_cos();
        let profile = SquareProfile::new(c.abs(), s.abs());
        let half = profile.half_support() * h;
        for i in 0..height {
            let y = (mc - i as f64) * h;
            for j in 0..width {
                let x = (j as f64 - nc) * h;
                let t = x * c + y * s;
                let b_lo = (((t - half - first) / d).floor().max(0.0)) as usize;
                let b_hi = (((t + half - first) / d).floor()) as i64;
                if b_hi < 0 {
                    continue;
                }
                let b_hi = (b_hi as usize).min(geom.n_bins - 1);
                for b in b_lo..=b_hi {
                    let lo = first + b as f64 * d;
                    let frac = profile.cdf((lo + d - t) / h) - profile.cdf((lo - t) / h);
                    if frac > 0.0 {
                        rows[k * geom.n_bins + b].push((i * width + j, frac * h * h / d));
                    }
                }
            }
        }
    }
    Ok(CsrMap::from_rows(height * width, rows))
}

/// Distribution of `u = x·p + y·q` for `(x, y)` uniform on the unit square
/// centered at the origin: a trapezoid with plateau half-width `(a − b)/2`
/// and support half-width `(a + b)/2`, `a = max(p, q)`, `b = min(p, q)`.
#[derive(Clone, Copy, Debug)]
struct SquareProfile {
    a: f64,
    b: f64,
}

impl SquareProfile {
    fn new(p: f64, q: f64) -> Self {
        Self {
            a: p.max(q),
            b: p.min(q),
        }
    }

    fn half_support(&self) -> f64 {
        (self.a + self.b) / 2.0
    }

    /// Fraction of the square with projection `≤ u`.
    fn cdf(&self, u: f64) -> f64 {
        if u > 0.0 {
            return 1.0 - self.cdf(-u);
        }
        let (a, b) = (self.a, self.b);
        if b < 1e-12 {
            return ((u + a / 2.0) / a).clamp(0.0, 1.0);
        }
        let outer = (a + b) / 2.0;
        let inner = (a - b) / 2.0;
        if u <= -outer {
            0.0
        } else if u <= -inner {
            (u + outer).powi(2) / (2.0 * a * b)
        } else {
            b / (2.0 * a) + (u + inner) / a
        }
    }
}
