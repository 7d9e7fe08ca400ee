//! Exact bound states of `-Δ - γ δ_{|x|=R}` in the plane.
//!
//! In angular-momentum sector `l` a bound state with energy `-κ²` is
//! `A I_l(κr)` inside the circle and `B K_l(κr)` outside. Continuity and the
//! derivative jump `u'(R⁺) - u'(R⁻) = -γ u(R)` together with the Wronskian
//! `I_l' K_l - I_l K_l' = 1/z` reduce to
//!
//! ```text
//! γ R I_l(κR) K_l(κR) = 1.
//! ```
//!
//! `I_l K_l` decreases strictly from `1/(2l)` (or `+∞` for `l = 0`), so
//! sector `l ≥ 1` binds iff `γR > 2l` and then has exactly one level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{ik_product, BesselOrder, MAX_ORDER};

/// `-γ ·` arclength on the circle of radius `radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleSpec {
    pub radius: f64,
    pub gamma: f64,
}

impl CircleSpec {
    pub fn new(radius: f64, gamma: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Domain(format!("circle radius must be > 0, got {radius}")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Domain(format!("gamma must be > 0, got {gamma}")));
        }
        Ok(Self { radius, gamma })
    }

    /// `γR`, the dimensionless coupling.
    pub fn strength(&self) -> f64 {
        self.gamma * self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleLevel {
    pub l: u32,
    pub kappa: f64,
    /// `-κ²`.
    pub energy: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleSpectrum {
    pub spec: CircleSpec,
    /// Sorted by energy, lowest (`l = 0`) first.
    pub levels: Vec<CircleLevel>,
}

impl CircleSpectrum {
    pub fn count_with_multiplicity(&self) -> usize {
        self.levels.iter().map(|l| l.multiplicity).sum()
    }

    /// Energies repeated according to multiplicity, lowest first.
    pub fn energies_with_multiplicity(&self) -> Vec<f64> {
        self.levels
            .iter()
            .flat_map(|l| std::iter::repeat_n(l.energy, l.multiplicity))
            .collect()
    }
}

/// `κ > 0` solving `γR I_l(κR) K_l(κR) = 1`, or `None` when sector `l`
/// has no bound state.
pub fn circle_eigenvalue(l: BesselOrder, spec: &CircleSpec) -> Result<Option<f64>> {
    let s = spec.strength();
    if l.get() >= 1 && s <= 2.0 * l.get() as f64 {
        return Ok(None);
    }
    let f = |z: f64| -> Result<f64> { Ok(s * ik_product(l, z)? - 1.0) };

    let mut lo = 1e-12;
    while f(lo)? <= 0.0 {
        // Only l = 0 with a very weak coupling gets here: κR ~ 2e^{-γ_E - 1/(γR)}.
        lo *= 1e-12;
        if lo < 1e-290 {
            return Err(Error::Range(format!(
                "l = 0 level for gamma*R = {s} lies below the representable range"
            )));
        }
    }
    let mut hi = 1.0;
    while f(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Numerical(format!("no sign change of the l = {} equation", l.get())));
        }
    }
    for _ in 0..200 {
        let mid = if hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi) / spec.radius))
}

/// All bound states, enumerating `l = 0, 1, …` until a sector fails to bind.
pub fn circle_spectrum(spec: &CircleSpec) -> Result<CircleSpectrum> {
    if spec.strength() / 2.0 > MAX_ORDER as f64 {
        return Err(Error::Range(format!(
            "gamma*R/2 = {} exceeds the Bessel order cap {MAX_ORDER}; raise MAX_ORDER",
            spec.strength() / 2.0
        )));
    }
    let mut levels = Vec::new();
    for l in 0..=MAX_ORDER {
        match circle_eigenvalue(BesselOrder::new(l)?, spec)? {
            Some(kappa) => levels.push(CircleLevel {
                l,
                kappa,
                energy: -kappa * kappa,
                multiplicity: if l == 0 { 1 } else { 2 },
            }),
            None => break,
        }
    }
    levels.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(CircleSpectrum { spec: *spec, levels })
}

/// Fixed RK4 step for `w' = l² + κ²e^{2t} - w²`, `w = r u'/u`, `t = ln r`.
fn riccati_rk4(l2: f64, k2: f64, t0: f64, t1: f64, w0: f64, max_step: f64) -> Result<f64> {
    let rhs = |t: f64, w: f64| l2 + k2 * (2.0 * t).exp() - w * w;
    let steps = ((t1 - t0).abs() / max_step).ceil().max(1.0) as usize;
    let h = (t1 - t0) / steps as f64;
    let mut w = w0;
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let k1 = rhs(t, w);
        let k2_ = rhs(t + 0.5 * h, w + 0.5 * h * k1);
        let k3 = rhs(t + 0.5 * h, w + 0.5 * h * k2_);
        let k4 = rhs(t + h, w + h * k3);
        w += h / 6.0 * (k1 + 2.0 * k2_ + 2.0 * k3 + k4);
        if !w.is_finite() {
            return Err(Error::Numerical(format!("radial integration blew up at r = {}", t.exp())));
        }
    }
    Ok(w)
}

/// Relative mismatch of the jump condition `u'(R⁺) - u'(R⁻) + γu(R) = 0`
/// for energy `-κ²`, with the regular solution integrated outward from
/// `r ≈ 0` and the decaying one inward from `r ≫ R`. Independent of the
/// Bessel routines; zero iff `κ` is an eigenvalue in sector `l`.
pub fn radial_defect(l: u32, spec: &CircleSpec, kappa: f64) -> Result<f64> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::Domain(format!("kappa must be > 0, got {kappa}")));
    }
    let (lf, r) = (l as f64, spec.radius);
    let (l2, k2) = (lf * lf, kappa * kappa);
    let t_r = r.ln();

    // Regular solution: u ~ r^l (1 + κ²r²/(4(l+1))), so w ≈ l + κ²r²/(2(l+1)).
    let r0 = 1e-4 * r.min(1.0 / kappa);
    let w0 = lf + k2 * r0 * r0 / (2.0 * (lf + 1.0));
    let w_inner = riccati_rk4(l2, k2, r0.ln(), t_r, w0, 1e-3)?;

    // Decaying solution: u ~ e^{-κr}/√r, w ≈ -κr - 1/2; start errors are
    // damped on the way in.
    let z_max = kappa * r + 40.0 + 2.0 * lf;
    let w_start = -z_max - 0.5;
    let step = 1e-3f64.min(0.25 / z_max);
    let w_outer = riccati_rk4(l2, k2, (z_max / kappa).ln(), t_r, w_start, step)?;

    Ok(((w_outer - w_inner) / r + spec.gamma) / spec.gamma)
}
