//! Proximal operators `prox_{t f}(x) = argmin_y f(y) + ‖y − x‖²/(2t)`.
//!
//! Each entry also reports the strong-convexity modulus of its function,
//! which the stepsize planners consume.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProxError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: expected {expected} entries, got {found}")]
    Shape { expected: usize, found: usize },
}

/// A function with an analytic proximal operator.
pub trait Prox: Send + Sync {
    fn dim(&self) -> usize;

    /// Modulus `γ ≥ 0` such that `f − (γ/2)‖·‖²` is convex.
    fn strong_convexity(&self) -> f64;

    /// `out = prox_{step·f}(point)`.
    fn prox_into(&self, point: &[f64], step: f64, out: &mut [f64]);

    fn prox(&self, point: &[f64], step: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.prox_into(point, step, &mut out);
        out
    }

    /// Function value, for monitoring. `+∞` outside the domain of indicators.
    fn value(&self, _point: &[f64]) -> Option<f64> {
        None
    }
}

fn check_len(point: &[f64], out: &[f64], dim: usize) {
    assert_eq!(point.len(), dim, "prox input has wrong dimension");
    assert_eq!(out.len(), dim, "prox output has wrong dimension");
}

fn positive(name: &str, v: f64) -> Result<f64, ProxError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ProxError::InvalidParameter(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

/// `f(x) = (α/2)‖x‖²`.
#[derive(Clone, Debug)]
pub struct ScaledSqNorm {
    alpha: f64,
    dim: usize,
}

pub fn prox_scaled_sqnorm(alpha: f64, dim: usize) -> Result<ScaledSqNorm, ProxError> {
    Ok(ScaledSqNorm {
        alpha: positive("alpha", alpha)?,
        dim,
    })
}

impl ScaledSqNorm {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Prox for ScaledSqNorm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn strong_convexity(&self) -> f64 {
        self.alpha
    }
    fn prox_into(&self, point: &[f64], step: f64, out: &mut [f64]) {
        check_len(point, out, self.dim);
        let d = 1.0 + step * self.alpha;
        out.iter_mut().zip(point).for_each(|(o, x)| *o = x / d);
    }
    fn value(&self, point: &[f64]) -> Option<f64> {
        Some(0.5 * self.alpha * point.iter().map(|v| v * v).sum::<f64>())
    }
}

/// `f*(y) = (β/2)‖y‖² + ⟨y, z⟩`, the conjugate of `‖· − z‖²/(2β)`.
#[derive(Clone, Debug)]
pub struct QuadraticDual {
    beta: f64,
    z: Vec<f64>,
}

pub fn prox_quadratic_dual(beta: f64, z: Vec<f64>) -> Result<QuadraticDual, ProxError> {
    Ok(QuadraticDual {
        beta: positive("beta", beta)?,
        z,
    })
}

impl QuadraticDual {
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn data(&self) -> &[f64] {
        &self.z
    }
}

impl Prox for QuadraticDual {
    fn dim(&self) -> usize {
        self.z.len()
    }
    fn strong_convexity(&self) -> f64 {
        self.beta
    }
    fn prox_into(&self, point: &[f64], step: f64, out: &mut [f64]) {
        check_len(point, out, self.z.len());
        let d = 1.0 + step * self.beta;
        for ((o, y), z) in out.iter_mut().zip(point).zip(&self.z) {
            *o = (y - step * z) / d;
        }
    }
    fn value(&self, point: &[f64]) -> Option<f64> {
        let sq: f64 = point.iter().map(|v| v * v).sum();
        let lin: f64 = point.iter().zip(&self.z).map(|(a, b)| a * b).sum();
        Some(0.5 * self.beta * sq + lin)
    }
}

/// `f ≡ 0`.
#[derive(Clone, Copy, Debug)]
pub struct ZeroFn {
    dim: usize,
}

pub fn prox_zero(dim: usize) -> ZeroFn {
    ZeroFn { dim }
}

impl Prox for ZeroFn {
    fn dim(&self) -> usize {
        self.dim
    }
    fn strong_convexity(&self) -> f64 {
        0.0
    }
    fn prox_into(&self, point: &[f64], _step: f64, out: &mut [f64]) {
        check_len(point, out, self.dim);
        out.copy_from_slice(point);
    }
    fn value(&self, _point: &[f64]) -> Option<f64> {
        Some(0.0)
    }
}

/// Indicator of the box `[−r, r]^dim`.
#[derive(Clone, Copy, Debug)]
pub struct BoxIndicator {
    radius: f64,
    dim: usize,
}

pub fn prox_box_indicator(radius: f64, dim: usize) -> Result<BoxIndicator, ProxError> {
    Ok(BoxIndicator {
        radius: positive("radius", radius)?,
        dim,
    })
}

impl Prox for BoxIndicator {
    fn dim(&self) -> usize {
        self.dim
    }
    fn strong_convexity(&self) -> f64 {
        0.0
    }
    fn prox_into(&self, point: &[f64], _step: f64, out: &mut [f64]) {
        check_len(point, out, self.dim);
        let r = self.radius;
        out.iter_mut()
            .zip(point)
            .for_each(|(o, y)| *o = y.clamp(-r, r));
    }
    fn value(&self, point: &[f64]) -> Option<f64> {
        let inside = point.iter().all(|v| v.abs() <= self.radius);
        Some(if inside { 0.0 } else { f64::INFINITY })
    }
}

/// `f*(p) = I_{|p|_∞ ≤ λ₁}(p) + (ε/2)‖p‖²` on a gradient field of an
/// `height × width` image.
///
/// Layout: the first `height·width` entries hold the vertical component of
/// every pixel (row-major), the next `height·width` the horizontal one. The
/// constraint is isotropic: each pixel's 2-vector has Euclidean norm ≤ λ₁.
#[derive(Clone, Debug)]
pub struct HuberTvDual {
    lambda1: f64,
    eps: f64,
    height: usize,
    width: usize,
}

pub fn prox_huber_tv_dual(
    lambda1: f64,
    eps: f64,
    height: usize,
    width: usize,
) -> Result<HuberTvDual, ProxError> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(ProxError::InvalidParameter(format!(
            "eps must be nonnegative, got {eps}"
        )));
    }
    Ok(HuberTvDual {
        lambda1: positive("lambda1", lambda1)?,
        eps,
        height,
        width,
    })
}

impl HuberTvDual {
    pub fn radius(&self) -> f64 {
        self.lambda1
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    fn pixels(&self) -> usize {
        self.height * self.width
    }
}

impl Prox for HuberTvDual {
    fn dim(&self) -> usize {
        2 * self.pixels()
    }
    fn strong_convexity(&self) -> f64 {
        self.eps
    }
    fn prox_into(&self, point: &[f64], step: f64, out: &mut [f64]) {
        check_len(point, out, self.dim());
        let np = self.pixels();
        let shrink = 1.0 / (1.0 + step * self.eps);
        let (p1, p2) = point.split_at(np);
        let (o1, o2) = out.split_at_mut(np);
        for k in 0..np {
            let a = p1[k] * shrink;
            let b = p2[k] * shrink;
            let mag = (a * a + b * b).sqrt();
            let scale = if mag > self.lambda1 {
                self.lambda1 / mag
            } else {
                1.0
            };
            o1[k] = a * scale;
            o2[k] = b * scale;
        }
    }
    fn value(&self, point: &[f64]) -> Option<f64> {
        let np = self.pixels();
        let (p1, p2) = point.split_at(np);
        let mut sq = 0.0;
        for k in 0..np {
            let m2 = p1[k] * p1[k] + p2[k] * p2[k];
            if m2.sqrt() > self.lambda1 * (1.0 + 1e-12) {
                return Some(f64::INFINITY);
            }
            sq += m2;
        }
        Some(0.5 * self.eps * sq)
    }
}

/// Dual block of the TV-regularized CT problem:
/// `F*(q, p) = ‖q‖²/(2λ₀) + ⟨q, z⟩ + I_{|p|_∞ ≤ λ₁}(p) + (ε/2)‖p‖²`.
///
/// The input vector is `(q, p)` with `q` sinogram-shaped first.
#[derive(Clone, Debug)]
pub struct CtDualBlock {
    data: QuadraticDual,
    tv: HuberTvDual,
}

pub fn prox_ct_dual_block(
    lambda0: f64,
    sinogram: Vec<f64>,
    sinogram_len: usize,
    lambda1: f64,
    eps: f64,
    height: usize,
    width: usize,
) -> Result<CtDualBlock, ProxError> {
    if sinogram.len() != sinogram_len {
        return Err(ProxError::Shape {
            expected: sinogram_len,
            found: sinogram.len(),
        });
    }
    let lambda0 = positive("lambda0", lambda0)?;
    Ok(CtDualBlock {
        data: prox_quadratic_dual(1.0 / lambda0, sinogram)?,
        tv: prox_huber_tv_dual(lambda1, eps, height, width)?,
    })
}

impl CtDualBlock {
    pub fn data_block(&self) -> &QuadraticDual {
        &self.data
    }
    pub fn tv_block(&self) -> &HuberTvDual {
        &self.tv
    }
}

impl Prox for CtDualBlock {
    fn dim(&self) -> usize {
        self.data.dim() + self.tv.dim()
    }
    fn strong_convexity(&self) -> f64 {
        self.data.strong_convexity().min(self.tv.strong_convexity())
    }
    fn prox_into(&self, point: &[f64], step: f64, out: &mut [f64]) {
        check_len(point, out, self.dim());
        let nq = self.data.dim();
        let (q, p) = point.split_at(nq);
        let (oq, op) = out.split_at_mut(nq);
        self.data.prox_into(q, step, oq);
        self.tv.prox_into(p, step, op);
    }
    fn value(&self, point: &[f64]) -> Option<f64> {
        let nq = self.data.dim();
        Some(self.data.value(&point[..nq])? + self.tv.value(&point[nq..])?)
    }
}
