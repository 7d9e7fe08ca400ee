//! Reference values computed by routes that share no code with the library:
//! integral representations, power series and Fourier inversion.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

pub struct Rule {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl Rule {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        Self { x, w }
    }

    pub fn panel<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        self.x.iter().zip(&self.w).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
    }
}

/// Neumaier-compensated sum.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in it {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

/// `K_l(x) = ∫_0^∞ e^{-x cosh t} cosh(l t) dt` by the trapezoid rule, which
/// converges geometrically for this analytic, doubly exponentially decaying
/// integrand.
pub fn bessel_k_integral(l: u32, x: f64) -> f64 {
    let h = 0.01;
    let lf = l as f64;
    let f = |t: f64| (-x * t.cosh() + lf * t).exp() * 0.5 * (1.0 + (-2.0 * lf * t).exp());
    let mut terms = vec![0.5 * f(0.0)];
    let mut k = 1;
    loop {
        let v = f(k as f64 * h);
        terms.push(v);
        if k as f64 * h > 1.0 && v < 1e-18 * terms[0].max(terms.iter().cloned().fold(0.0, f64::max)) {
            break;
        }
        k += 1;
    }
    h * kahan_sum(terms)
}

/// `I_l(x) = Σ_k (x/2)^{2k+l} / (k! (k+l)!)`, all terms positive.
pub fn bessel_i_series(l: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut t = 1.0;
    for j in 1..=l {
        t *= half / j as f64;
    }
    let mut terms = vec![t];
    for k in 1..2000 {
        t *= half * half / (k as f64 * (k + l) as f64);
        terms.push(t);
        if t < 1e-20 * terms.iter().sum::<f64>() {
            break;
        }
    }
    kahan_sum(terms)
}

/// Kernel symbol `1 / (ε²p⁴ + p² + α)`.
fn symbol(eps: f64, alpha: f64, p: f64) -> f64 {
    1.0 / (eps * eps * p.powi(4) + p * p + alpha)
}

/// `∫_0^∞ f(p) w(pr) dp` for `w = cos` or `sin`: direct panels up to a
/// zero of `w` beyond `p0`, then half-period pieces summed with repeated
/// averaging of the partial sums.
fn oscillatory_integral<F: Fn(f64) -> f64>(f: F, r: f64, sine: bool, p_scale: f64) -> f64 {
    let rule = Rule::new(20);
    let half_period = PI / r;
    let shift = if sine { 0.0 } else { 0.5 * half_period };
    let p0 = (40.0 * half_period).max(20.0 * p_scale);
    let start = shift + (((p0 - shift) / half_period).ceil()) * half_period;
    let g = |p: f64| f(p) * if sine { (p * r).sin() } else { (p * r).cos() };

    let mut pieces = Vec::new();
    let (mut a, min_width) = (0.0, 0.02 * p_scale.min(1.0));
    while a < start {
        let width = (0.05 * a).max(min_width).min(0.25 * half_period);
        let b = (a + width).min(start);
        pieces.push(rule.panel(&g, a, b));
        a = b;
    }
    let head = kahan_sum(pieces);

    let count = 48;
    let mut partial = Vec::with_capacity(count);
    let mut acc = 0.0;
    for k in 0..count {
        let lo = start + k as f64 * half_period;
        let mid = lo + 0.5 * half_period;
        acc += rule.panel(&g, lo, mid) + rule.panel(&g, mid, lo + half_period);
        partial.push(acc);
    }
    while partial.len() > 1 {
        partial = partial.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    head + partial[0]
}

/// `g_{ε,α}(r)` in `d = 1` by Fourier inversion, `(1/π) ∫ cos(pr) ĝ dp`.
pub fn green_fourier_1d(eps: f64, alpha: f64, r: f64) -> f64 {
    let scale = alpha.sqrt();
    if r == 0.0 {
        return green_diag_1d(eps, alpha);
    }
    oscillatory_integral(|p| symbol(eps, alpha, p), r, false, scale) / PI
}

/// `g_{ε,α}(r)` in `d = 3`, `(1/(2π² r)) ∫ p sin(pr) ĝ dp`.
pub fn green_fourier_3d(eps: f64, alpha: f64, r: f64) -> f64 {
    let scale = alpha.sqrt();
    oscillatory_integral(|p| p * symbol(eps, alpha, p), r, true, scale) / (2.0 * PI * PI * r)
}

/// `g_{ε,α}(0)` in `d = 1` in closed form: `(1/π) ∫_0^∞ ĝ dp` with the
/// quartic factored as `ε²(p² + a)(p² + b)`, giving
/// `1 / (2 √α √(1 + 2ε√α))`. Valid for every `ε ≥ 0`.
pub fn green_diag_1d(eps: f64, alpha: f64) -> f64 {
    let s = alpha.sqrt();
    1.0 / (2.0 * s * (1.0 + 2.0 * eps * s).sqrt())
}

/// Root `α*` of `1/c + g_{ε,α}(0) = 0` for a single site on the line:
/// with `s = √α` this is the cubic `2ε s³ + s² - c²/4 = 0`.
pub fn single_delta_alpha(c: f64, eps: f64) -> f64 {
    assert!(c < 0.0);
    let target = 0.25 * c * c;
    let h = |s: f64| 2.0 * eps * s * s * s + s * s - target;
    let (mut lo, mut hi) = (0.0, (-c) / 2.0);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    s * s
}

/// Ground state of `-u'' - depth·1_{|x|<L} u`: the even solution of
/// `k tan(kL) = κ` with `k² = depth - κ²`, bisected in `κ`.
pub fn square_well_ground(depth: f64, half_width: f64) -> f64 {
    let h = |kappa: f64| {
        let k = (depth - kappa * kappa).sqrt();
        k * (k * half_width).tan() - kappa
    };
    // the ground state has kL < π/2
    let kappa_lo = (depth - (0.5 * PI / half_width).powi(2)).max(0.0).sqrt();
    let (mut lo, mut hi) = (kappa_lo + 1e-15, depth.sqrt());
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let kappa = 0.5 * (lo + hi);
    -kappa * kappa
}

/// Eigenvalues of the real symmetric circulant matrix with first row `a`
/// via an explicit complex DFT, `λ_m = Σ_j a_j e^{-2πijm/N}` (real part).
pub fn circulant_dft(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out: Vec<f64> = (0..n)
        .map(|m| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, &x) in a.iter().enumerate() {
                let phase = -2.0 * PI * (j * m) as f64 / n as f64;
                re += x * phase.cos();
                im += x * phase.sin();
            }
            assert!(im.abs() < 1e-8 * (1.0 + re.abs()));
            re
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// A randomized point configuration: `(dim, epsilon, sites, couplings)`.
pub type RandomProblem = (usize, f64, Vec<[f64; 3]>, Vec<f64>);

/// `count` reproducible problems with `N ≤ 20`, `d ∈ {1,2,3}` and
/// mixed-sign couplings; sites are kept at least `0.05` apart.
pub fn random_problems(count: usize, seed: u64) -> Vec<RandomProblem> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let dim = 1 + i % 3;
            let n = rng.random_range(1..=20usize);
            let eps = 10f64.powf(rng.random_range(-2.0..-0.7));
            let mut sites: Vec<[f64; 3]> = Vec::new();
            while sites.len() < n {
                let mut p = [0.0; 3];
                for x in p.iter_mut().take(dim) {
                    *x = rng.random_range(-2.0..2.0);
                }
                let far = sites.iter().all(|q| {
                    q.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() > 0.05f64.powi(2)
                });
                if far {
                    sites.push(p);
                }
            }
            let couplings = (0..n)
                .map(|_| {
                    let mag = rng.random_range(0.2..3.0);
                    if rng.random_bool(0.6) { -mag } else { mag }
                })
                .collect();
            (dim, eps, sites, couplings)
        })
        .collect()
}
