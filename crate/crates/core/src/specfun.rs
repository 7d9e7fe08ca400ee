//! Modified Bessel functions `I_l` and `K_l` of integer order for real
//! positive arguments.
//!
//! `K_0`, `K_1` come from their logarithmic power series for `z <= 2` and
//! from Steed's continued fraction (CF2) above; higher orders follow from
//! upward recurrence, which is stable for `K`. `I_l` is summed from its
//! power series for `z <= 2`; above that it is recovered from the Wronskian
//! `I_l K_{l+1} + I_{l+1} K_l = 1/z` together with the continued fraction
//! for `I_{l+1}/I_l`. Every routine works on exponentially scaled values
//! internally, so the scaled variants never overflow for moderate orders.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the order accepted by [`BesselOrder::new`].
pub const MAX_ORDER: u32 = 64;

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Above this argument `I_l` is taken from the Wronskian instead of the series.
const SERIES_LIMIT: f64 = 2.0;

const CF_MAX_ITER: usize = 1_000_000;

/// Integer Bessel order `l`, bounded by a cap (default [`MAX_ORDER`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct BesselOrder(u32);

impl BesselOrder {
    pub fn new(l: u32) -> Result<Self> {
        Self::with_cap(l, MAX_ORDER)
    }

    pub fn with_cap(l: u32, cap: u32) -> Result<Self> {
        if l > cap {
            return Err(Error::Range(format!(
                "Bessel order {l} exceeds the cap {cap}"
            )));
        }
        Ok(Self(l))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for BesselOrder {
    type Error = Error;
    fn try_from(l: u32) -> Result<Self> {
        Self::new(l)
    }
}

impl From<BesselOrder> for u32 {
    fn from(l: BesselOrder) -> u32 {
        l.0
    }
}

fn check_positive(z: f64) -> Result<()> {
    if z.is_finite() && z > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("argument must be finite and > 0, got {z}")))
    }
}

fn check_nonnegative(z: f64) -> Result<()> {
    if z.is_finite() && z >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("argument must be finite and >= 0, got {z}")))
    }
}

/// `(e^z K_0(z), e^z K_1(z))` for `z > 0`.
fn k01_scaled(z: f64) -> (f64, f64) {
    if z <= SERIES_LIMIT {
        let (k0, k1) = k01_series(z);
        let s = z.exp();
        (k0 * s, k1 * s)
    } else {
        k01_steed(z)
    }
}

/// Logarithmic power series for `K_0`, `K_1` (unscaled), accurate for small `z`.
fn k01_series(z: f64) -> (f64, f64) {
    let y = 0.25 * z * z;
    let ln_half = (0.5 * z).ln();

    // I_0, I_1 and the digamma-weighted sums share the same term recursion.
    let mut i0 = 1.0;
    let mut i1 = 0.5 * z;
    // psi(k+1) for k = 0
    let mut psi_k1 = -EULER_GAMMA;
    // psi(k+2) for k = 0
    let mut psi_k2 = 1.0 - EULER_GAMMA;
    let mut s0 = psi_k1;
    let mut s1 = psi_k1 + psi_k2;

    let mut t0 = 1.0; // y^k / (k!)^2
    let mut t1 = 1.0; // y^k / (k! (k+1)!)
    for k in 1..200 {
        let kf = k as f64;
        t0 *= y / (kf * kf);
        t1 *= y / (kf * (kf + 1.0));
        psi_k1 += 1.0 / kf;
        psi_k2 += 1.0 / (kf + 1.0);
        i0 += t0;
        i1 += 0.5 * z * t1;
        let d0 = t0 * psi_k1;
        let d1 = t1 * (psi_k1 + psi_k2);
        s0 += d0;
        s1 += d1;
        if d0.abs() <= 1e-17 * s0.abs() && t0 <= 1e-17 * i0 && d1.abs() <= 1e-17 * s1.abs() {
            break;
        }
    }
    let k0 = -ln_half * i0 + s0;
    let k1 = 1.0 / z + ln_half * i1 - 0.25 * z * s1;
    (k0, k1)
}

/// Steed's continued fraction for `e^z K_0(z)` and `e^z K_1(z)`, `z > 2`.
fn k01_steed(z: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + z);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..CF_MAX_ITER {
        a -= 2.0 * (i - 1) as f64;
        c = -a * c / i as f64;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * z)).sqrt() / s;
    let k1 = k0 * (z + 0.5 - h) / z;
    (k0, k1)
}

/// `(e^z K_l(z), e^z K_{l+1}(z))` by upward recurrence.
fn k_pair_scaled(l: u32, z: f64) -> (f64, f64) {
    let (mut km, mut k) = k01_scaled(z);
    for j in 1..=l {
        let kp = km + (2.0 * j as f64 / z) * k;
        km = k;
        k = kp;
    }
    (km, k)
}

/// Ratio `K_{l+1}(z) / K_l(z)`; overflow-free for every order.
fn k_ratio(l: u32, z: f64) -> f64 {
    let (k0, k1) = k01_scaled(z);
    let mut rho = k1 / k0;
    for j in 1..=l {
        rho = 1.0 / rho + 2.0 * j as f64 / z;
    }
    rho
}

/// Ratio `I_{l+1}(z) / I_l(z)` from its continued fraction (modified Lentz).
fn i_ratio(l: u32, z: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut f = TINY;
    let mut c = f;
    let mut d = 0.0;
    for j in 1..CF_MAX_ITER {
        let b = 2.0 * (l as f64 + j as f64) / z;
        d = b + d;
        if d == 0.0 {
            d = TINY;
        }
        d = 1.0 / d;
        c = b + 1.0 / c;
        if c == 0.0 {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            return Ok(f);
        }
    }
    Err(Error::Numerical(format!(
        "continued fraction for I_{{{}}}/I_{{{l}}} did not converge at z = {z}",
        l + 1
    )))
}

/// Power series for `I_l(z)` (unscaled). All terms are positive.
fn i_series(l: u32, z: f64) -> f64 {
    let half = 0.5 * z;
    let mut t = 1.0;
    for j in 1..=l {
        t *= half / j as f64;
    }
    if t == 0.0 {
        return 0.0;
    }
    let y = half * half;
    let mut sum = t;
    let lf = l as f64;
    for k in 1..10_000 {
        let kf = k as f64;
        t *= y / (kf * (kf + lf));
        sum += t;
        if t <= 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Exponentially scaled `e^z K_l(z)`.
pub fn bessel_k_scaled(l: BesselOrder, z: f64) -> Result<f64> {
    check_positive(z)?;
    let (k, _) = k_pair_scaled(l.get(), z);
    if !k.is_finite() {
        return Err(Error::Range(format!(
            "K_{}({z}) overflows even in scaled form",
            l.get()
        )));
    }
    Ok(k)
}

/// Modified Bessel function of the second kind `K_l(z)`, `z > 0`.
///
/// Reports a range error where the unscaled value overflows (tiny `z`,
/// large `l`) or underflows (`z` beyond about 700); use
/// [`bessel_k_scaled`] there.
pub fn bessel_k(l: BesselOrder, z: f64) -> Result<f64> {
    let scaled = bessel_k_scaled(l, z)?;
    let k = scaled * (-z).exp();
    if k == 0.0 || !k.is_normal() {
        return Err(Error::Range(format!(
            "K_{}({z}) underflows; use the scaled variant",
            l.get()
        )));
    }
    Ok(k)
}

/// Exponentially scaled `e^{-z} I_l(z)`, `z >= 0`.
pub fn bessel_i_scaled(l: BesselOrder, z: f64) -> Result<f64> {
    check_nonnegative(z)?;
    let l = l.get();
    if z == 0.0 {
        return Ok(if l == 0 { 1.0 } else { 0.0 });
    }
    if z <= SERIES_LIMIT {
        return Ok(i_series(l, z) * (-z).exp());
    }
    let (kl, kl1) = k_pair_scaled(l, z);
    let r = i_ratio(l, z)?;
    Ok(1.0 / (z * (kl1 + r * kl)))
}

/// Modified Bessel function of the first kind `I_l(z)`, `z >= 0`.
///
/// Values below the smallest normal double (tiny `z`, large `l`) come back
/// as `0.0`. Overflow (around `z > 700`) is a range error; use
/// [`bessel_i_scaled`] there.
pub fn bessel_i(l: BesselOrder, z: f64) -> Result<f64> {
    check_nonnegative(z)?;
    if z <= SERIES_LIMIT {
        return Ok(i_series(l.get(), z));
    }
    let v = bessel_i_scaled(l, z)? * z.exp();
    if !v.is_finite() {
        return Err(Error::Range(format!(
            "I_{}({z}) overflows; use the scaled variant",
            l.get()
        )));
    }
    Ok(v)
}

/// `I_l(z) K_l(z)` evaluated from ratios only, so it neither overflows nor
/// underflows. Strictly decreasing in `z`; tends to `1/(2l)` as `z -> 0` for
/// `l >= 1` and diverges logarithmically for `l = 0`.
pub fn ik_product(l: BesselOrder, z: f64) -> Result<f64> {
    check_positive(z)?;
    let rho = k_ratio(l.get(), z);
    let r = i_ratio(l.get(), z)?;
    Ok(1.0 / (z * (rho + r)))
}
