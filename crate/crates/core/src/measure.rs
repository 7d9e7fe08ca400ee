//! Finite signed point measures `μ = Σ c_j δ_{x_j}` and the discretizers
//! that produce them from curves, interval densities and random samples.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::green::check_dim;
use crate::quad;

/// A point in up to three dimensions; unused trailing coordinates are zero.
pub type Point = [f64; 3];

/// Minimum admissible distance between two sites.
pub const SEP_TOL: f64 = 1e-9;

/// Name of the random generator recorded in sampling metadata.
pub const RNG_NAME: &str = "ChaCha8Rng";

/// Panels used to tabulate the inverse CDF when sampling from a density.
const CDF_PANELS: usize = 4096;

/// Provenance attached to a measure and echoed into output files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<serde_json::Value>,
}

/// Weighted Dirac masses at pairwise distinct sites with nonzero couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureDoc", into = "MeasureDoc")]
pub struct PointMeasure {
    dim: usize,
    sites: Vec<Point>,
    couplings: Vec<f64>,
    metadata: MeasureMetadata,
}

/// On-disk JSON layout of a [`PointMeasure`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureDoc {
    dim: usize,
    sites: Vec<Vec<f64>>,
    couplings: Vec<f64>,
    #[serde(default)]
    metadata: MeasureMetadata,
}

impl TryFrom<MeasureDoc> for PointMeasure {
    type Error = Error;
    fn try_from(doc: MeasureDoc) -> Result<Self> {
        let sites = doc
            .sites
            .iter()
            .map(|s| point_from_slice(s, doc.dim))
            .collect::<Result<Vec<_>>>()?;
        Ok(PointMeasure::new(doc.dim, sites, doc.couplings)?.with_metadata(doc.metadata))
    }
}

impl From<PointMeasure> for MeasureDoc {
    fn from(m: PointMeasure) -> Self {
        MeasureDoc {
            dim: m.dim,
            sites: m.sites.iter().map(|s| s[..m.dim].to_vec()).collect(),
            couplings: m.couplings,
            metadata: m.metadata,
        }
    }
}

/// Pad a `dim`-vector to a [`Point`].
pub fn point_from_slice(coords: &[f64], dim: usize) -> Result<Point> {
    if coords.len() != dim {
        return Err(Error::Domain(format!(
            "expected a {dim}-vector, got {} coordinates",
            coords.len()
        )));
    }
    let mut p = [0.0; 3];
    p[..dim].copy_from_slice(coords);
    Ok(p)
}

pub fn distance(a: &Point, b: &Point) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

impl PointMeasure {
    pub fn new(dim: usize, sites: Vec<Point>, couplings: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if sites.is_empty() {
            return Err(Error::InvalidMeasure("a point measure needs at least one site".into()));
        }
        if sites.len() != couplings.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} sites but {} couplings",
                sites.len(),
                couplings.len()
            )));
        }
        for (j, s) in sites.iter().enumerate() {
            if s.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidMeasure(format!("site {j} is not finite")));
            }
            if s[dim..].iter().any(|&x| x != 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "site {j} has nonzero coordinates beyond dimension {dim}"
                )));
            }
        }
        for (j, &c) in couplings.iter().enumerate() {
            if !(c.is_finite() && c != 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "coupling {j} must be finite and nonzero, got {c}"
                )));
            }
        }
        if let Some((j, k, d)) = closest_pair_below(&sites, SEP_TOL) {
            return Err(Error::InvalidMeasure(format!(
                "sites {j} and {k} are {d:e} apart (minimum separation {SEP_TOL:e})"
            )));
        }
        Ok(Self { dim, sites, couplings, metadata: MeasureMetadata::default() })
    }

    pub fn with_metadata(mut self, metadata: MeasureMetadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Point] {
        &self.sites
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn metadata(&self) -> &MeasureMetadata {
        &self.metadata
    }

    /// `‖μ‖ = Σ |c_j|`.
    pub fn total_variation(&self) -> f64 {
        self.couplings.iter().map(|c| c.abs()).sum()
    }

    /// `μ(ℝ^d) = Σ c_j`.
    pub fn total_mass(&self) -> f64 {
        self.couplings.iter().sum()
    }

    /// `μ̂(p) = (2π)^{-d/2} Σ c_j e^{i p·x_j}` as `(re, im)`.
    pub fn fourier_transform(&self, p: &Point) -> (f64, f64) {
        let norm = (2.0 * PI).powf(-(self.dim as f64) / 2.0);
        let (mut re, mut im) = (0.0, 0.0);
        for (x, c) in self.sites.iter().zip(&self.couplings) {
            let phase = p[0] * x[0] + p[1] * x[1] + p[2] * x[2];
            re += c * phase.cos();
            im += c * phase.sin();
        }
        (norm * re, norm * im)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// First pair of sites closer than `tol`, found by a sweep over the first
/// coordinate.
fn closest_pair_below(sites: &[Point], tol: f64) -> Option<(usize, usize, f64)> {
    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.sort_by(|&a, &b| sites[a][0].total_cmp(&sites[b][0]));
    for (pos, &j) in order.iter().enumerate() {
        for &k in &order[pos + 1..] {
            if sites[k][0] - sites[j][0] > tol {
                break;
            }
            let d = distance(&sites[j], &sites[k]);
            if d <= tol {
                return Some((j.min(k), j.max(k), d));
            }
        }
    }
    None
}

/// Merge sites closer than `tol` by summing their couplings; drops sites
/// whose merged coupling vanishes.
fn merge_coincident(sites: Vec<Point>, couplings: Vec<f64>, tol: f64) -> (Vec<Point>, Vec<f64>) {
    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.sort_by(|&a, &b| {
        sites[a][0]
            .total_cmp(&sites[b][0])
            .then(sites[a][1].total_cmp(&sites[b][1]))
            .then(sites[a][2].total_cmp(&sites[b][2]))
    });
    let mut owner: Vec<Option<usize>> = vec![None; sites.len()];
    let mut out_sites = Vec::new();
    let mut out_c: Vec<f64> = Vec::new();
    for (pos, &j) in order.iter().enumerate() {
        if owner[j].is_some() {
            continue;
        }
        let slot = out_sites.len();
        owner[j] = Some(slot);
        out_sites.push(sites[j]);
        out_c.push(couplings[j]);
        for &k in &order[pos + 1..] {
            if sites[k][0] - sites[j][0] > tol {
                break;
            }
            if owner[k].is_none() && distance(&sites[j], &sites[k]) <= tol {
                owner[k] = Some(slot);
                out_c[slot] += couplings[k];
            }
        }
    }
    out_sites
        .into_iter()
        .zip(out_c)
        .filter(|(_, c)| *c != 0.0)
        .unzip()
}

/// Real density on a curve (in arclength) or an interval (in `x`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Density {
    Constant { value: f64 },
    /// `Σ_k coefficients[k] · t^k`.
    Polynomial { coefficients: Vec<f64> },
}

impl Density {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Density::Constant { value } => *value,
            Density::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, &c| acc * t + c)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Density::Constant { value } => value.is_finite(),
            Density::Polynomial { coefficients } => {
                !coefficients.is_empty() && coefficients.iter().all(|c| c.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("density has non-finite or missing coefficients: {self:?}")))
        }
    }
}

/// A rectifiable curve parametrized by arclength `s ∈ [0, length]`.
pub trait ArcLengthCurve {
    fn dim(&self) -> usize;
    fn length(&self) -> f64;
    fn point_at(&self, s: f64) -> Point;
}

/// Curves expressible in a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveShape {
    Segment { from: Vec<f64>, to: Vec<f64> },
    /// Circle in the plane, traversed counter-clockwise from angle 0.
    Circle {
        #[serde(default = "origin2")]
        center: Vec<f64>,
        radius: f64,
    },
    Polyline { points: Vec<Vec<f64>> },
}

fn origin2() -> Vec<f64> {
    vec![0.0, 0.0]
}

impl CurveShape {
    fn validate(&self) -> Result<()> {
        let coords_ok = |v: &[f64]| (1..=3).contains(&v.len()) && v.iter().all(|x| x.is_finite());
        match self {
            CurveShape::Segment { from, to } => {
                if !coords_ok(from) || from.len() != to.len() || !coords_ok(to) {
                    return Err(Error::Domain("segment endpoints must be finite d-vectors of equal length".into()));
                }
            }
            CurveShape::Circle { center, radius } => {
                if center.len() != 2 || !coords_ok(center) {
                    return Err(Error::Domain("circle center must be a finite 2-vector".into()));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::Domain(format!("circle radius must be > 0, got {radius}")));
                }
            }
            CurveShape::Polyline { points } => {
                if points.len() < 2 {
                    return Err(Error::Domain("polyline needs at least two points".into()));
                }
                let d = points[0].len();
                if points.iter().any(|p| p.len() != d || !coords_ok(p)) {
                    return Err(Error::Domain("polyline points must be finite d-vectors of equal length".into()));
                }
            }
        }
        if !(self.length() > 0.0 && self.length().is_finite()) {
            return Err(Error::Domain("curve has zero or non-finite length".into()));
        }
        Ok(())
    }
}

fn pad(v: &[f64]) -> Point {
    let mut p = [0.0; 3];
    p[..v.len()].copy_from_slice(v);
    p
}

impl ArcLengthCurve for CurveShape {
    fn dim(&self) -> usize {
        match self {
            CurveShape::Segment { from, .. } => from.len(),
            CurveShape::Circle { .. } => 2,
            CurveShape::Polyline { points } => points[0].len(),
        }
    }

    fn length(&self) -> f64 {
        match self {
            CurveShape::Segment { from, to } => distance(&pad(from), &pad(to)),
            CurveShape::Circle { radius, .. } => 2.0 * PI * radius,
            CurveShape::Polyline { points } => points
                .windows(2)
                .map(|w| distance(&pad(&w[0]), &pad(&w[1])))
                .sum(),
        }
    }

    fn point_at(&self, s: f64) -> Point {
        match self {
            CurveShape::Segment { from, to } => {
                let (a, b) = (pad(from), pad(to));
                let t = s / distance(&a, &b);
                [0, 1, 2].map(|i| a[i] + t * (b[i] - a[i]))
            }
            CurveShape::Circle { center, radius } => {
                let theta = s / radius;
                [center[0] + radius * theta.cos(), center[1] + radius * theta.sin(), 0.0]
            }
            CurveShape::Polyline { points } => {
                let mut rest = s;
                let last = points.len() - 2;
                for (k, w) in points.windows(2).enumerate() {
                    let (a, b) = (pad(&w[0]), pad(&w[1]));
                    let len = distance(&a, &b);
                    if rest <= len || k == last {
                        let t = if len > 0.0 { rest / len } else { 0.0 };
                        return [0, 1, 2].map(|i| a[i] + t * (b[i] - a[i]));
                    }
                    rest -= len;
                }
                pad(&points[last + 1])
            }
        }
    }
}

/// Description of a target measure to be discretized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// `-γ ·` arclength on the origin-centred circle of radius `radius`.
    Circle { radius: f64, gamma: f64 },
    /// `density(s) ds` on a curve.
    Curve { curve: CurveShape, density: Density },
    /// `density(x) dx` on `[a, b] ⊂ ℝ`.
    IntervalDensity { a: f64, b: f64, density: Density },
    Explicit { measure: PointMeasure },
}

impl MeasureSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            MeasureSpec::Circle { radius, gamma } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::Domain(format!("circle radius must be > 0, got {radius}")));
                }
                if !(gamma.is_finite() && *gamma > 0.0) {
                    return Err(Error::Domain(format!("gamma must be > 0, got {gamma}")));
                }
                Ok(())
            }
            MeasureSpec::Curve { curve, density } => {
                curve.validate()?;
                density.validate()
            }
            MeasureSpec::IntervalDensity { a, b, density } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::Domain(format!("interval needs a < b, got [{a}, {b}]")));
                }
                density.validate()
            }
            MeasureSpec::Explicit { .. } => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MeasureSpec::Circle { .. } => 2,
            MeasureSpec::Curve { curve, .. } => curve.dim(),
            MeasureSpec::IntervalDensity { .. } => 1,
            MeasureSpec::Explicit { measure } => measure.dim(),
        }
    }

    /// Signed total mass of the target measure.
    pub fn total_mass(&self) -> Result<f64> {
        match self {
            MeasureSpec::Circle { radius, gamma } => Ok(-2.0 * PI * radius * gamma),
            MeasureSpec::Curve { curve, density } => {
                Ok(quad::integrate(|s| density.eval(s), 0.0, curve.length(), 1e-14, 1e-12, 4096)?.value)
            }
            MeasureSpec::IntervalDensity { a, b, density } => {
                Ok(quad::integrate(|x| density.eval(x), *a, *b, 1e-14, 1e-12, 4096)?.value)
            }
            MeasureSpec::Explicit { measure } => Ok(measure.total_mass()),
        }
    }

    /// Deterministic `n`-point discretization (midpoint rule for curves and
    /// densities; `n` is ignored for explicit measures).
    pub fn discretize(&self, n: usize) -> Result<PointMeasure> {
        self.validate()?;
        let m = match self {
            MeasureSpec::Circle { radius, gamma } => discretize_circle(*radius, *gamma, n)?,
            MeasureSpec::Curve { curve, density } => discretize_curve(curve, |s| density.eval(s), n)?,
            MeasureSpec::IntervalDensity { a, b, density } => {
                discretize_interval(*a, *b, |x| density.eval(x), n)?
            }
            MeasureSpec::Explicit { measure } => return Ok(measure.clone()),
        };
        let metadata = MeasureMetadata {
            generator: Some("midpoint".into()),
            seed: None,
            spec: Some(serde_json::to_value(self)?),
        };
        Ok(m.with_metadata(metadata))
    }
}

/// `n` equidistant sites on the origin-centred circle of radius `radius`,
/// each with coupling `-γ 2πR / n`.
pub fn discretize_circle(radius: f64, gamma: f64, n: usize) -> Result<PointMeasure> {
    MeasureSpec::Circle { radius, gamma }.validate()?;
    if n == 0 {
        return Err(Error::Domain("need at least one site".into()));
    }
    let c = -gamma * 2.0 * PI * radius / n as f64;
    let sites = (0..n)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / n as f64;
            [radius * theta.cos(), radius * theta.sin(), 0.0]
        })
        .collect();
    PointMeasure::new(2, sites, vec![c; n])
}

/// Midpoint rule on `n` equal arclength panels: site at each panel midpoint,
/// coupling `density(midpoint) · panel_length`. Panels where the density
/// vanishes at the midpoint are dropped.
pub fn discretize_curve<C, F>(curve: &C, density: F, n: usize) -> Result<PointMeasure>
where
    C: ArcLengthCurve + ?Sized,
    F: Fn(f64) -> f64,
{
    if n == 0 {
        return Err(Error::Domain("need at least one panel".into()));
    }
    let length = curve.length();
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::Domain(format!("curve length must be finite and > 0, got {length}")));
    }
    let h = length / n as f64;
    let mut sites = Vec::with_capacity(n);
    let mut couplings = Vec::with_capacity(n);
    for k in 0..n {
        let s = (k as f64 + 0.5) * h;
        let c = density(s) * h;
        if !c.is_finite() {
            return Err(Error::Domain(format!("density is not finite at s = {s}")));
        }
        if c != 0.0 {
            sites.push(curve.point_at(s));
            couplings.push(c);
        }
    }
    if sites.is_empty() {
        return Err(Error::InvalidMeasure("density vanishes at every panel midpoint".into()));
    }
    PointMeasure::new(curve.dim(), sites, couplings)
}

/// Midpoint discretization of `density(x) dx` on `[a, b]` in one dimension.
pub fn discretize_interval<F: Fn(f64) -> f64>(a: f64, b: f64, density: F, n: usize) -> Result<PointMeasure> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::Domain(format!("interval needs a < b, got [{a}, {b}]")));
    }
    let segment = CurveShape::Segment { from: vec![a], to: vec![b] };
    discretize_curve(&segment, |s| density(a + s), n)
}

/// Inverse-CDF sampler for `|density|` on `[0, length]`, piecewise constant
/// on [`CDF_PANELS`] panels.
struct TabulatedSampler {
    h: f64,
    cdf: Vec<f64>,
}

impl TabulatedSampler {
    fn new<F: Fn(f64) -> f64>(density: F, length: f64) -> Result<Self> {
        let h = length / CDF_PANELS as f64;
        let mut cdf = Vec::with_capacity(CDF_PANELS + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for k in 0..CDF_PANELS {
            let w = density((k as f64 + 0.5) * h).abs() * h;
            if !w.is_finite() {
                return Err(Error::Domain("density is not finite".into()));
            }
            acc += w;
            cdf.push(acc);
        }
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(Error::Domain("density is not normalizable (zero total mass)".into()));
        }
        Ok(Self { h, cdf })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let total = *self.cdf.last().unwrap();
        let u = rng.random::<f64>() * total;
        let k = self.cdf.partition_point(|&c| c <= u).clamp(1, CDF_PANELS) - 1;
        let width = self.cdf[k + 1] - self.cdf[k];
        let frac = if width > 0.0 { (u - self.cdf[k]) / width } else { 0.5 };
        (k as f64 + frac.clamp(0.0, 1.0)) * self.h
    }
}

/// `n` i.i.d. sites drawn from the normalized `|spec|` distribution, each
/// carrying coupling `a / n`. Coincident draws are merged into a single site
/// with the summed coupling, so the coupling sum is always `a`.
pub fn sample_random(spec: &MeasureSpec, n: usize, a: f64, seed: u64) -> Result<PointMeasure> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    if !(a.is_finite() && a != 0.0) {
        return Err(Error::Domain(format!("total coupling must be finite and nonzero, got {a}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weight = a / n as f64;
    let sites: Vec<Point> = match spec {
        MeasureSpec::Circle { radius, .. } => (0..n)
            .map(|_| {
                let theta = 2.0 * PI * rng.random::<f64>();
                [radius * theta.cos(), radius * theta.sin(), 0.0]
            })
            .collect(),
        MeasureSpec::Curve { curve, density } => {
            let sampler = TabulatedSampler::new(|s| density.eval(s), curve.length())?;
            (0..n).map(|_| curve.point_at(sampler.sample(&mut rng))).collect()
        }
        MeasureSpec::IntervalDensity { a: lo, b: hi, density } => {
            let sampler = TabulatedSampler::new(|s| density.eval(lo + s), hi - lo)?;
            (0..n).map(|_| [lo + sampler.sample(&mut rng), 0.0, 0.0]).collect()
        }
        MeasureSpec::Explicit { measure } => {
            let mut cumulative = Vec::with_capacity(measure.len());
            let mut acc = 0.0;
            for c in measure.couplings() {
                acc += c.abs();
                cumulative.push(acc);
            }
            (0..n)
                .map(|_| {
                    let u = rng.random::<f64>() * acc;
                    let j = cumulative.partition_point(|&c| c <= u).min(measure.len() - 1);
                    measure.sites()[j]
                })
                .collect()
        }
    };
    let (sites, couplings) = merge_coincident(sites, vec![weight; n], SEP_TOL);
    let metadata = MeasureMetadata {
        generator: Some(RNG_NAME.into()),
        seed: Some(seed),
        spec: Some(serde_json::to_value(spec)?),
    };
    Ok(PointMeasure::new(spec.dim(), sites, couplings)?.with_metadata(metadata))
}

/// `max_p |μ̂₁(p) - μ̂₂(p)|` over a grid of frequencies.
pub fn weak_distance(mu1: &PointMeasure, mu2: &PointMeasure, p_grid: &[Point]) -> Result<f64> {
    if mu1.dim() != mu2.dim() {
        return Err(Error::Domain(format!(
            "dimension mismatch: {} vs {}",
            mu1.dim(),
            mu2.dim()
        )));
    }
    if p_grid.is_empty() {
        return Err(Error::Domain("frequency grid is empty".into()));
    }
    Ok(p_grid
        .iter()
        .map(|p| {
            let (r1, i1) = mu1.fourier_transform(p);
            let (r2, i2) = mu2.fourier_transform(p);
            (r1 - r2).hypot(i1 - i2)
        })
        .fold(0.0, f64::max))
}
