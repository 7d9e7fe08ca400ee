//! Green kernels of `-Δ + ε²Δ² + α` in one to three dimensions.
//!
//! For `ε > 0` and `4ε²α < 1` the Fourier symbol splits into partial
//! fractions
//!
//! ```text
//! 1 / (ε²p⁴ + p² + α) = c(ε) [ 1/(p² + α(ε)) - 1/(p² + β(ε)) ]
//! ```
//!
//! where `-α(ε)`, `-β(ε)` are the roots of `ε²x² + x + α`. The regularized
//! kernel is therefore a difference of two screened free kernels, and it is
//! finite on the diagonal even where the free kernel is not.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{bessel_k_scaled, BesselOrder};

/// Below this radius the d = 3 kernel uses its Taylor expansion.
const TAYLOR_RADIUS_3D: f64 = 1e-12;

/// Dimension, regularization and spectral shift of a kernel `g_{ε,α}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    dim: usize,
    epsilon: f64,
    alpha: f64,
}

impl KernelParams {
    pub fn new(dim: usize, epsilon: f64, alpha: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::Domain(format!("epsilon must be >= 0, got {epsilon}")));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Domain(format!("alpha must be > 0, got {alpha}")));
        }
        Ok(Self { dim, epsilon, alpha })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `4ε²α`; the decomposition needs this below one.
    pub fn discriminant_ratio(&self) -> f64 {
        4.0 * self.epsilon * self.epsilon * self.alpha
    }
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::Domain(format!("dimension must be 1, 2 or 3, got {dim}")))
    }
}

/// Largest admissible spectral shift `(1 - δ)/(4ε²)` for a given `ε`.
pub fn alpha_cap(epsilon: f64, delta: f64) -> f64 {
    (1.0 - delta) / (4.0 * epsilon * epsilon)
}

/// Partial-fraction coefficients `(c(ε), α(ε), β(ε))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub c_eps: f64,
    pub alpha_eps: f64,
    pub beta_eps: f64,
}

impl Decomposition {
    /// The decomposed symbol `c(ε)[1/(p²+α(ε)) - 1/(p²+β(ε))]`, combined over
    /// a common denominator so it stays accurate when `p² ≫ β(ε)`.
    pub fn symbol(&self, p: f64) -> f64 {
        let p2 = p * p;
        self.c_eps * (self.beta_eps - self.alpha_eps)
            / ((p2 + self.alpha_eps) * (p2 + self.beta_eps))
    }
}

/// Split the quartic symbol into two screened Laplacian symbols.
pub fn decompose(params: &KernelParams) -> Result<Decomposition> {
    let eps = params.epsilon;
    if eps == 0.0 {
        return Err(Error::Domain(
            "epsilon = 0 has no decomposition; use the free kernel".into(),
        ));
    }
    let ratio = params.discriminant_ratio();
    if ratio >= 1.0 {
        return Err(Error::DecompositionDomain { value: ratio });
    }
    let s = (1.0 - ratio).sqrt();
    Ok(Decomposition {
        c_eps: 1.0 / s,
        alpha_eps: 2.0 * params.alpha / (1.0 + s),
        beta_eps: (1.0 + s) / (2.0 * eps * eps),
    })
}

/// Fourier symbol `1/(ε²p⁴ + p² + α)`.
pub fn green_hat(params: &KernelParams, p: f64) -> f64 {
    let p2 = p * p;
    let e2 = params.epsilon * params.epsilon;
    1.0 / (e2 * p2 * p2 + p2 + params.alpha)
}

/// Free kernel `g_{0,α}(r)` of `-Δ + α`.
///
/// Singular on the diagonal for `dim` 2 and 3.
pub fn free_green(dim: usize, alpha: f64, r: f64) -> Result<f64> {
    check_dim(dim)?;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be > 0, got {alpha}")));
    }
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::Domain(format!("radius must be >= 0, got {r}")));
    }
    let k = alpha.sqrt();
    match dim {
        1 => Ok((-k * r).exp() / (2.0 * k)),
        2 if r == 0.0 => Err(Error::Singularity { dim, kind: "logarithmic" }),
        2 => Ok(k0(k * r) / (2.0 * PI)),
        _ if r == 0.0 => Err(Error::Singularity { dim, kind: "Coulomb" }),
        _ => Ok((-k * r).exp() / (4.0 * PI * r)),
    }
}

/// `K_0(x)` with graceful underflow to zero for large `x`.
fn k0(x: f64) -> f64 {
    let order = BesselOrder::new(0).expect("order 0 is always valid");
    bessel_k_scaled(order, x).expect("x > 0") * (-x).exp()
}

/// Regularized kernel with its decomposition cached, for repeated evaluation.
#[derive(Debug, Clone, Copy)]
pub struct GreenKernel {
    params: KernelParams,
    dec: Decomposition,
    sqrt_a: f64,
    sqrt_b: f64,
    diagonal: f64,
}

impl GreenKernel {
    pub fn new(params: KernelParams) -> Result<Self> {
        let dec = decompose(&params)?;
        let sqrt_a = dec.alpha_eps.sqrt();
        let sqrt_b = dec.beta_eps.sqrt();
        let c = dec.c_eps;
        let diagonal = match params.dim {
            1 => c * (1.0 / sqrt_a - 1.0 / sqrt_b) / 2.0,
            2 => c / (4.0 * PI) * (dec.beta_eps / dec.alpha_eps).ln(),
            _ => c * (sqrt_b - sqrt_a) / (4.0 * PI),
        };
        Ok(Self { params, dec, sqrt_a, sqrt_b, diagonal })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.dec
    }

    /// `g_{ε,α}(0)`, which is also the supremum norm of the kernel.
    pub fn diagonal(&self) -> f64 {
        self.diagonal
    }

    /// `g_{ε,α}(r)` for `r >= 0` (no argument check).
    pub fn eval_unchecked(&self, r: f64) -> f64 {
        if r == 0.0 {
            return self.diagonal;
        }
        let c = self.dec.c_eps;
        let (a, b) = (self.sqrt_a, self.sqrt_b);
        match self.params.dim {
            1 => 0.5 * c * ((-a * r).exp() / a - (-b * r).exp() / b),
            2 => c / (2.0 * PI) * (k0(a * r) - k0(b * r)),
            _ => {
                if r < TAYLOR_RADIUS_3D {
                    let (a2, b2) = (a * a, b * b);
                    let series = (b - a) - 0.5 * (b2 - a2) * r + (b2 * b - a2 * a) * r * r / 6.0;
                    c * series / (4.0 * PI)
                } else {
                    // e^{-ar} - e^{-br} = -e^{-ar} expm1(-(b-a) r), free of cancellation.
                    let diff = -(-a * r).exp() * (-(b - a) * r).exp_m1();
                    c * diff / (4.0 * PI * r)
                }
            }
        }
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::Domain(format!("radius must be >= 0, got {r}")));
        }
        Ok(self.eval_unchecked(r))
    }
}

/// `g_{ε,α}(r) = c(ε) [g_{0,α(ε)}(r) - g_{0,β(ε)}(r)]`, continuous at `r = 0`.
pub fn green_eval(params: &KernelParams, r: f64) -> Result<f64> {
    GreenKernel::new(*params)?.eval(r)
}
