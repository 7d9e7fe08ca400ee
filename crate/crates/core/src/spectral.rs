//! Negative eigenvalues of `-Δ + ε²Δ² + μ` for a point measure
//! `μ = Σ c_j δ_{x_j}`.
//!
//! `-α` is an eigenvalue exactly when
//!
//! ```text
//! M(α)_jk = δ_jk / c_k + g_{ε,α}(x_j - x_k)
//! ```
//!
//! is singular, and the kernel vectors `h` of `M(α)` give the eigenfunctions
//! `Σ_k h_k g_{ε,α}(· - x_k)`.
//!
//! `G(α) = M(α) - diag(1/c)` is positive semidefinite and decreases (in the
//! Loewner order) as `α` grows, so each *sorted* eigenvalue `μ_i(α)` of
//! `M(α)` is strictly decreasing and crosses zero at most once. The solver
//! scans the sorted branches on a log grid, refines every sign change
//! independently and clusters coincident roots into degenerate eigenvalues.
//! Tracking branches rather than `det M(α)` keeps even-multiplicity roots,
//! where the determinant touches zero without changing sign, visible.
//!
//! As `α → ∞` the branches tend to the sorted values of `1/c_k`, so the
//! number of roots above a given `α` equals the number of negative couplings
//! minus the number of negative branches at `α`. The solver uses this count
//! to report roots it cannot reach because of the `4ε²α < 1` cap.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::green::{alpha_cap, GreenKernel, KernelParams};
use crate::measure::{distance, Point, PointMeasure};
use crate::quad;

/// Relative margin `δ` below the decomposition limit, `α_cap = (1-δ)/(4ε²)`.
pub const CAP_DELTA: f64 = 1e-6;

/// Relative tolerance used to recognise circulant geometry.
const CIRCULANT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
enum Structure {
    Dense,
    /// Distances `|x_0 - x_j|` of a circulant configuration with equal couplings.
    Circulant { offsets: Vec<f64> },
}

/// A point measure together with the regularization `ε > 0`.
#[derive(Debug, Clone)]
pub struct SchroedingerProblem {
    measure: PointMeasure,
    epsilon: f64,
    /// Upper triangle of the site distance matrix, row-major.
    distances: Vec<f64>,
    structure: Structure,
}

impl SchroedingerProblem {
    /// Build a problem; circulant configurations (equally spaced sites on a
    /// circle with equal couplings) are detected and use a fast path.
    pub fn new(measure: PointMeasure, epsilon: f64) -> Result<Self> {
        let mut p = Self::dense(measure, epsilon)?;
        if let Some(offsets) = p.detect_circulant() {
            p.structure = Structure::Circulant { offsets };
        }
        Ok(p)
    }

    /// Build a problem that always uses dense linear algebra.
    pub fn dense(measure: PointMeasure, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Domain(format!("epsilon must be > 0, got {epsilon}")));
        }
        let n = measure.len();
        let sites = measure.sites();
        let mut distances = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for j in 0..n {
            for k in j + 1..n {
                distances.push(distance(&sites[j], &sites[k]));
            }
        }
        Ok(Self { measure, epsilon, distances, structure: Structure::Dense })
    }

    fn detect_circulant(&self) -> Option<Vec<f64>> {
        let n = self.len();
        let c = self.measure.couplings();
        if n < 3 || c.iter().any(|&x| (x - c[0]).abs() > CIRCULANT_TOL * c[0].abs()) {
            return None;
        }
        let offsets: Vec<f64> = (0..n).map(|j| self.distance(0, j)).collect();
        let scale = offsets.iter().cloned().fold(0.0, f64::max);
        if (1..n).any(|k| (offsets[k] - offsets[n - k]).abs() > CIRCULANT_TOL * scale) {
            return None;
        }
        for j in 0..n {
            for k in j + 1..n {
                if (self.distance(j, k) - offsets[k - j]).abs() > CIRCULANT_TOL * scale {
                    return None;
                }
            }
        }
        Some(offsets)
    }

    pub fn measure(&self) -> &PointMeasure {
        &self.measure
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn dim(&self) -> usize {
        self.measure.dim()
    }

    pub fn len(&self) -> usize {
        self.measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measure.is_empty()
    }

    pub fn is_circulant(&self) -> bool {
        matches!(self.structure, Structure::Circulant { .. })
    }

    /// Largest `α` for which the kernel decomposition is evaluated.
    pub fn alpha_cap(&self) -> f64 {
        alpha_cap(self.epsilon, CAP_DELTA)
    }

    /// `|x_j - x_k|`.
    pub fn distance(&self, j: usize, k: usize) -> f64 {
        let (j, k) = if j < k { (j, k) } else { (k, j) };
        if j == k {
            return 0.0;
        }
        let n = self.len();
        // offset of row j in the packed upper triangle
        let row = j * n - j * (j + 1) / 2;
        self.distances[row + (k - j - 1)]
    }

    fn kernel(&self, alpha: f64) -> Result<GreenKernel> {
        if !(alpha > 0.0 && alpha <= self.alpha_cap()) {
            return Err(Error::Domain(format!(
                "alpha = {alpha} outside (0, {}] (the 4*epsilon^2*alpha < 1 regime)",
                self.alpha_cap()
            )));
        }
        GreenKernel::new(KernelParams::new(self.dim(), self.epsilon, alpha)?)
    }

    fn assemble(&self, alpha: f64, with_diagonal_couplings: bool) -> Result<DMatrix<f64>> {
        let g = self.kernel(alpha)?;
        let n = self.len();
        let c = self.measure.couplings();
        let mut m = DMatrix::zeros(n, n);
        let mut idx = 0;
        for j in 0..n {
            m[(j, j)] = g.diagonal() + if with_diagonal_couplings { 1.0 / c[j] } else { 0.0 };
            for k in j + 1..n {
                let v = g.eval_unchecked(self.distances[idx]);
                idx += 1;
                m[(j, k)] = v;
                m[(k, j)] = v;
            }
        }
        Ok(m)
    }
}

/// `M(α)_jk = δ_jk/c_k + g_{ε,α}(|x_j - x_k|)`, exactly symmetric.
pub fn bs_matrix(problem: &SchroedingerProblem, alpha: f64) -> Result<DMatrix<f64>> {
    problem.assemble(alpha, true)
}

/// `G(α)_jk = g_{ε,α}(|x_j - x_k|)`, the kernel part of [`bs_matrix`].
pub fn green_matrix(problem: &SchroedingerProblem, alpha: f64) -> Result<DMatrix<f64>> {
    problem.assemble(alpha, false)
}

/// Eigenvalues of a real symmetric circulant matrix from its first row,
/// `λ_m = Σ_j a_j cos(2π jm/N)`, in Fourier index order.
pub fn circulant_eigenvalues(first_row: &[f64]) -> Vec<f64> {
    let n = first_row.len();
    let cos_table: Vec<f64> = (0..n).map(|k| (2.0 * PI * k as f64 / n as f64).cos()).collect();
    (0..n)
        .map(|m| {
            first_row
                .iter()
                .enumerate()
                .map(|(j, a)| a * cos_table[(j * m) % n])
                .sum()
        })
        .collect()
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn dense_branches(problem: &SchroedingerProblem, alpha: f64) -> Result<Vec<f64>> {
    let m = bs_matrix(problem, alpha)?;
    Ok(sorted(m.symmetric_eigenvalues().iter().copied().collect()))
}

/// Sorted eigenvalues `μ_1(α) ≤ … ≤ μ_N(α)` of `M(α)`.
pub fn branch_eigenvalues(problem: &SchroedingerProblem, alpha: f64) -> Result<Vec<f64>> {
    match &problem.structure {
        Structure::Dense => dense_branches(problem, alpha),
        Structure::Circulant { offsets } => {
            let g = problem.kernel(alpha)?;
            let mut row: Vec<f64> = offsets.iter().map(|&r| g.eval_unchecked(r)).collect();
            row[0] += 1.0 / problem.measure.couplings()[0];
            Ok(sorted(circulant_eigenvalues(&row)))
        }
    }
}

/// `λ(α) = det(δ_jk + c_k g_{ε,α}(x_j - x_k))`.
pub fn det_lambda(problem: &SchroedingerProblem, alpha: f64) -> Result<f64> {
    let mut a = green_matrix(problem, alpha)?;
    let c = problem.measure.couplings();
    for k in 0..problem.len() {
        for j in 0..problem.len() {
            a[(j, k)] *= c[k];
        }
        a[(k, k)] += 1.0;
    }
    Ok(a.lu().determinant())
}

/// Radial form of `∫_{ℝ^d} (1+p²)² / (ε²p⁴+p²+α)² dp`.
pub fn norm_bound_integral(dim: usize, epsilon: f64, alpha: f64) -> Result<f64> {
    let e2 = epsilon * epsilon;
    let d = dim as f64;
    let sphere = match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    };
    let scale = 1.0f64
        .max(1.0 / epsilon)
        .max(alpha.sqrt())
        .max((alpha / e2).powf(0.25));
    let p_lo = 1e-8 * alpha.sqrt().min(1.0);
    let p_hi = 1e4 * scale;
    // p = e^u, dp = p du
    let integrand = |u: f64| {
        let p = u.exp();
        let p2 = p * p;
        let den = e2 * p2 * p2 + p2 + alpha;
        p.powf(d) * (1.0 + p2) * (1.0 + p2) / (den * den)
    };
    let body = quad::integrate(integrand, p_lo.ln(), p_hi.ln(), 0.0, 1e-10, 20_000)?.value;
    let head = p_lo.powf(d) / (d * alpha * alpha);
    let tail = p_hi.powf(d - 4.0) / ((4.0 - d) * e2 * e2);
    Ok(sphere * (head + body + tail))
}

/// `‖μ‖ (∫ (1+p²)²/(ε²p⁴+p²+α)² dp)^{1/2}`, an upper bound on the norm of
/// the Birman–Schwinger operator; when it is below one, `-α` is not an
/// eigenvalue.
pub fn norm_bound(problem: &SchroedingerProblem, alpha: f64) -> Result<f64> {
    let integral = norm_bound_integral(problem.dim(), problem.epsilon, alpha)?;
    Ok(problem.measure.total_variation() * integral.sqrt())
}

/// Upper end of the spectral search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchWindow {
    /// No eigenvalue lies below `-alpha0` (or `alpha0 = α_cap` when capped).
    pub alpha0: f64,
    /// The norm bound was still `≥ 1` at `α_cap`.
    pub capped: bool,
}

/// Smallest `α₀` (to relative `1e-6`, rounded up) with [`norm_bound`] `< 1`
/// on `[α₀, ∞)`, found by doubling/halving and bisection on the monotone
/// bound; capped at [`SchroedingerProblem::alpha_cap`].
pub fn search_window(problem: &SchroedingerProblem) -> Result<SearchWindow> {
    let cap = problem.alpha_cap();
    let below = |a: f64| -> Result<bool> { Ok(norm_bound(problem, a)? < 1.0) };
    if !below(cap)? {
        return Ok(SearchWindow { alpha0: cap, capped: true });
    }
    let mut hi = 1.0f64.min(cap);
    let mut lo;
    if below(hi)? {
        lo = hi / 2.0;
        while below(lo)? {
            hi = lo;
            lo /= 2.0;
            if lo < 1e-300 {
                return Err(Error::Numerical("norm bound stays below one as alpha -> 0".into()));
            }
        }
    } else {
        lo = hi;
        hi = (2.0 * lo).min(cap);
        while !below(hi)? {
            lo = hi;
            hi = (2.0 * hi).min(cap);
        }
    }
    while hi - lo > 1e-6 * hi {
        let mid = (lo * hi).sqrt();
        if below(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(SearchWindow { alpha0: hi, capped: false })
}

/// Options of [`find_spectrum`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub grid_per_decade: usize,
    /// Relative width to which each root is refined.
    pub tol_root: f64,
    /// Roots closer than this (relative) form one degenerate eigenvalue.
    pub tol_cluster: f64,
    /// Lower end of the `α` scan; roots below are reported as unresolved.
    pub alpha_min: f64,
    /// Residual `‖M(α*)h‖/‖h‖` above which a kernel vector is flagged.
    pub tol_residual: f64,
    /// Compute kernel basis vectors for every eigenvalue.
    pub kernel_basis: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid_per_decade: 64,
            tol_root: 1e-10,
            tol_cluster: 1e-6,
            alpha_min: 1e-8,
            tol_residual: 1e-8,
            kernel_basis: true,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Domain(format!("solver option {name} must be > 0, got {v}")))
            }
        };
        if self.grid_per_decade == 0 {
            return Err(Error::Domain("grid_per_decade must be >= 1".into()));
        }
        positive("tol_root", self.tol_root)?;
        positive("tol_cluster", self.tol_cluster)?;
        positive("alpha_min", self.alpha_min)?;
        positive("tol_residual", self.tol_residual)
    }
}

/// One eigenvalue `-alpha_star` of the operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub alpha_star: f64,
    /// `-alpha_star`.
    pub energy: f64,
    pub multiplicity: usize,
    /// Roots of the individual branches that were clustered into this level.
    pub branch_roots: Vec<f64>,
    /// Unit coefficient vectors `h` spanning `ker M(alpha_star)`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kernel_basis: Vec<Vec<f64>>,
    /// `‖M(alpha_star) h‖` for each kernel vector.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residuals: Vec<f64>,
}

/// Negative point spectrum found in the search window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Sorted by energy, lowest first.
    pub eigenvalues: Vec<Eigenvalue>,
    /// Some roots provably lie above `α_cap` and were not resolved.
    pub truncated: bool,
    /// Number of roots with `α* > α_cap` (eigenvalues below `-α_cap`).
    pub beyond_cap: usize,
    /// Number of roots with `α* < alpha_min` (near-threshold, unresolved).
    pub near_threshold: usize,
    /// `(alpha_min, alpha_max)` actually scanned.
    pub search_window: (f64, f64),
    /// The norm bound did not certify the window below `α_cap`.
    pub window_capped: bool,
    pub alpha_cap: f64,
    pub grid_points: usize,
    pub options: SolverOptions,
}

impl SpectrumResult {
    /// Total multiplicity of resolved eigenvalues.
    pub fn count(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.multiplicity).sum()
    }

    /// Resolved energies repeated according to multiplicity, lowest first.
    pub fn energies_with_multiplicity(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.energy, e.multiplicity))
            .collect()
    }
}

/// Sorted branch values of `M(α)` sampled on an increasing `α` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchCurve {
    pub alpha_grid: Vec<f64>,
    /// `branch_values[k][i]` is `μ_i(alpha_grid[k])`.
    pub branch_values: Vec<Vec<f64>>,
}

impl BranchCurve {
    /// Sample all branches on `alpha_grid` (evaluated in parallel).
    pub fn sample(problem: &SchroedingerProblem, alpha_grid: Vec<f64>) -> Result<Self> {
        if alpha_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("alpha grid must be strictly increasing".into()));
        }
        let branch_values = alpha_grid
            .par_iter()
            .map(|&a| branch_eigenvalues(problem, a))
            .collect::<Result<_>>()?;
        Ok(Self { alpha_grid, branch_values })
    }

    /// First place where a sorted branch increases by more than
    /// `slack · (1 + ‖M‖)`, with `‖M‖` the largest branch magnitude at the
    /// two samples (eigenvalues are only accurate relative to `‖M‖`):
    /// `(branch, grid index)`.
    pub fn monotonicity_violation(&self, slack: f64) -> Option<(usize, usize)> {
        let norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (k, pair) in self.branch_values.windows(2).enumerate() {
            let tol = slack * (1.0 + norm(&pair[0]).max(norm(&pair[1])));
            for (i, (&v0, &v1)) in pair[0].iter().zip(&pair[1]).enumerate() {
                if v1 > v0 + tol {
                    return Some((i, k));
                }
            }
        }
        None
    }

    /// Branch values that never decrease strictly between neighbouring samples.
    pub fn strictly_decreasing(&self) -> bool {
        self.branch_values
            .windows(2)
            .all(|p| p[0].iter().zip(&p[1]).all(|(a, b)| b < a))
    }
}

/// Log-spaced grid from `lo` to `hi` (both included) with at least
/// `per_decade` points per decade.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1) + 1;
    let ratio = (hi / lo).ln();
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo * (ratio * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Root of branch `index` inside `[lo, hi]` where it changes sign from
/// `f_lo > 0` to `f_hi ≤ 0`, by Brent's method (inverse quadratic
/// interpolation safeguarded by bisection) to relative width `tol`.
fn refine_branch(
    problem: &SchroedingerProblem,
    index: usize,
    (lo, hi): (f64, f64),
    (f_lo, f_hi): (f64, f64),
    tol: f64,
) -> Result<f64> {
    let f = |a: f64| -> Result<f64> { Ok(branch_eigenvalues(problem, a)?[index]) };
    let (mut a, mut b, mut fa, mut fb) = (lo, hi, f_lo, f_hi);
    if fb == 0.0 {
        return Ok(b);
    }
    let (mut c, mut fc) = (a, fa);
    let (mut d, mut e) = (b - a, b - a);
    for _ in 0..200 {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.25 * tol * lo;
        let m = 0.5 * (c - b);
        if m.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * m * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0)), (q - 1.0) * (r - 1.0) * (s - 1.0))
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * m * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::Numerical(format!("root refinement of branch {index} did not converge")))
}

/// Locate every `α* ∈ [alpha_min, min(α₀, α_cap)]` where `M(α*)` is singular.
pub fn find_spectrum(problem: &SchroedingerProblem, opts: &SolverOptions) -> Result<SpectrumResult> {
    opts.validate()?;
    let window = search_window(problem)?;
    let cap = problem.alpha_cap();
    let upper = window.alpha0.min(cap);
    if upper <= opts.alpha_min {
        return Err(Error::Domain(format!(
            "search window [{}, {upper}] is empty; epsilon = {} is too large",
            opts.alpha_min, problem.epsilon
        )));
    }
    let curve = BranchCurve::sample(problem, log_grid(opts.alpha_min, upper, opts.grid_per_decade))?;
    // Dense eigenvalues carry absolute errors of order N²·ε_mach·‖M‖.
    if let Some((i, k)) = curve.monotonicity_violation(1e-12 * problem.len() as f64) {
        let (grid, b) = (&curve.alpha_grid, &curve.branch_values);
        return Err(Error::Consistency(format!(
            "branch {i} increases from {} to {} between alpha = {} and {}; \
             the alpha grid is too coarse or the kernel lost accuracy",
            b[k][i],
            b[k + 1][i],
            grid[k],
            grid[k + 1]
        )));
    }
    let n = problem.len();
    let (grid, branches) = (&curve.alpha_grid, &curve.branch_values);
    let first = &branches[0];
    let last = branches.last().unwrap();
    let near_threshold = first.iter().filter(|&&v| v <= 0.0).count();
    let negative_couplings = problem.measure.couplings().iter().filter(|&&c| c < 0.0).count();
    let negative_at_upper = last.iter().filter(|&&v| v <= 0.0).count();
    let beyond = negative_couplings.saturating_sub(negative_at_upper);

    let brackets: Vec<(usize, usize)> = (0..n)
        .filter(|&i| first[i] > 0.0 && last[i] <= 0.0)
        .map(|i| (i, branches.iter().position(|b| b[i] <= 0.0).expect("sign change exists")))
        .collect();
    let mut roots: Vec<f64> = brackets
        .par_iter()
        .map(|&(i, k)| {
            let ends = (grid[k - 1], grid[k]);
            let values = (branches[k - 1][i], branches[k][i]);
            refine_branch(problem, i, ends, values, opts.tol_root)
        })
        .collect::<Result<_>>()?;
    roots.sort_by(f64::total_cmp);

    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for r in roots {
        match clusters.last_mut() {
            Some(cl) if r - cl.last().unwrap() <= opts.tol_cluster * r => cl.push(r),
            _ => clusters.push(vec![r]),
        }
    }

    let mut eigenvalues: Vec<Eigenvalue> = clusters
        .into_par_iter()
        .map(|cl| {
            let alpha_star = cl.iter().sum::<f64>() / cl.len() as f64;
            let mut ev = Eigenvalue {
                alpha_star,
                energy: -alpha_star,
                multiplicity: cl.len(),
                branch_roots: cl,
                kernel_basis: Vec::new(),
                residuals: Vec::new(),
            };
            if opts.kernel_basis {
                let (basis, residuals) = kernel_basis(problem, alpha_star, ev.multiplicity)?;
                ev.kernel_basis = basis;
                ev.residuals = residuals;
            }
            Ok(ev)
        })
        .collect::<Result<_>>()?;
    eigenvalues.sort_by(|a, b| a.energy.total_cmp(&b.energy));

    Ok(SpectrumResult {
        eigenvalues,
        truncated: beyond > 0,
        beyond_cap: beyond,
        near_threshold,
        search_window: (opts.alpha_min, upper),
        window_capped: window.capped,
        alpha_cap: cap,
        grid_points: grid.len(),
        options: opts.clone(),
    })
}

/// The `count` eigenvectors of `M(alpha)` whose eigenvalues are closest to
/// zero, with sign fixed so the largest component is positive.
fn kernel_basis(
    problem: &SchroedingerProblem,
    alpha: f64,
    count: usize,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let m = bs_matrix(problem, alpha)?;
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].abs().total_cmp(&eig.eigenvalues[b].abs()));
    let mut basis = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    for &i in order.iter().take(count) {
        let mut h: DVector<f64> = eig.eigenvectors.column(i).into_owned();
        let pivot = h.iter().cloned().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if pivot < 0.0 {
            h.neg_mut();
        }
        residuals.push((&m * &h).norm() / h.norm());
        basis.push(h.iter().copied().collect());
    }
    Ok((basis, residuals))
}

/// Quadrature rule used to normalize eigenfunctions in `L²`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadratureGrid {
    /// Midpoint rule on the cube `[center - half_width, center + half_width]^dim`
    /// with `n` cells per axis.
    pub fn tensor(dim: usize, center: Point, half_width: f64, n: usize) -> Self {
        let h = 2.0 * half_width / n as f64;
        let axis: Vec<f64> = (0..n).map(|i| -half_width + (i as f64 + 0.5) * h).collect();
        let mut points = Vec::new();
        let ny = if dim >= 2 { n } else { 1 };
        let nz = if dim >= 3 { n } else { 1 };
        for ix in 0..n {
            for iy in 0..ny {
                for iz in 0..nz {
                    let mut p = center;
                    p[0] += axis[ix];
                    if dim >= 2 {
                        p[1] += axis[iy];
                    }
                    if dim >= 3 {
                        p[2] += axis[iz];
                    }
                    points.push(p);
                }
            }
        }
        let weights = vec![h.powi(dim as i32); points.len()];
        Self { points, weights }
    }
}

/// Eigenfunction values for one eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenfunctions {
    /// `values[b][i]` is basis function `b` at evaluation point `i`.
    pub values: Vec<Vec<f64>>,
    /// `L²` norm of each unnormalized function on the quadrature grid, if one
    /// was supplied; `values` are then divided by it.
    pub norms: Option<Vec<f64>>,
}

fn check_point_dim(p: &Point, dim: usize) -> Result<()> {
    if p[dim..].iter().any(|&x| x != 0.0) {
        return Err(Error::Domain(format!(
            "point {p:?} has coordinates beyond dimension {dim}"
        )));
    }
    Ok(())
}

/// Evaluate `f(x) = Σ_k h_k g_{ε,α*}(|x - x_k|)` for each kernel vector `h`
/// of `entry`, optionally normalized in `L²` on `norm_grid`.
pub fn eigenfunction(
    problem: &SchroedingerProblem,
    entry: &Eigenvalue,
    eval_points: &[Point],
    norm_grid: Option<&QuadratureGrid>,
) -> Result<Eigenfunctions> {
    if entry.kernel_basis.len() != entry.multiplicity {
        return Err(Error::Domain(
            "eigenvalue carries no kernel basis; solve with kernel_basis enabled".into(),
        ));
    }
    let dim = problem.dim();
    for p in eval_points {
        check_point_dim(p, dim)?;
    }
    let g = problem.kernel(entry.alpha_star)?;
    let sites = problem.measure.sites();
    let eval = |h: &[f64], x: &Point| -> f64 {
        h.iter()
            .zip(sites)
            .map(|(hk, xk)| hk * g.eval_unchecked(distance(x, xk)))
            .sum()
    };
    let mut values: Vec<Vec<f64>> = entry
        .kernel_basis
        .iter()
        .map(|h| eval_points.iter().map(|x| eval(h, x)).collect())
        .collect();
    let norms = match norm_grid {
        None => None,
        Some(grid) => {
            if grid.points.len() != grid.weights.len() || grid.points.is_empty() {
                return Err(Error::Domain("quadrature grid needs matching nonempty points and weights".into()));
            }
            for p in &grid.points {
                check_point_dim(p, dim)?;
            }
            let norms: Vec<f64> = entry
                .kernel_basis
                .iter()
                .map(|h| {
                    grid.points
                        .iter()
                        .zip(&grid.weights)
                        .map(|(x, w)| w * eval(h, x).powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            for (v, nrm) in values.iter_mut().zip(&norms) {
                if *nrm > 0.0 {
                    v.iter_mut().for_each(|x| *x /= nrm);
                }
            }
            Some(norms)
        }
    };
    Ok(Eigenfunctions { values, norms })
}
