//! Convergence experiments: discretize a target measure for a range of
//! `(ε, N)`, solve each cell and compare against reference spectra.

use std::cmp::Ordering;
use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{sample_random, Density, MeasureSpec, PointMeasure};
use crate::oracle::{circle_spectrum, CircleSpec};
use crate::spectral::{find_spectrum, SchroedingerProblem, SolverOptions, SpectrumResult};

/// Exact CSV header of convergence tables.
pub const CSV_HEADER: [&str; 8] =
    ["epsilon", "N", "level", "energy", "multiplicity", "oracle_energy", "abs_error", "flags"];

/// Row quality flags.
pub mod flags {
    /// Approximate and reference state counts differ.
    pub const COUNT_MISMATCH: &str = "count_mismatch";
    /// No reference state left to match this level against.
    pub const UNMATCHED: &str = "unmatched";
    /// The solver proved roots beyond `α_cap` exist.
    pub const TRUNCATED: &str = "truncated";
    /// Placeholder for states below `-α_cap`; energy is the cap and the
    /// error a lower bound.
    pub const BEYOND_CAP: &str = "beyond_cap";
    /// Placeholder for states in `(-alpha_min, 0)`; energy is `-alpha_min`.
    pub const NEAR_THRESHOLD: &str = "near_threshold";
}

/// How a target measure becomes a point measure with `N` sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Discretizer {
    /// Deterministic midpoint rule.
    #[default]
    Midpoint,
    /// `N` i.i.d. samples of `|spec|` with coupling `amplitude / N` each;
    /// `amplitude` defaults to the signed total mass of the spec.
    Random {
        #[serde(default)]
        amplitude: Option<f64>,
    },
}

/// A grid of `(ε, N)` cells over one target measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub spec: MeasureSpec,
    pub epsilon_list: Vec<f64>,
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default = "default_true")]
    pub oracle: bool,
    #[serde(default)]
    pub discretizer: Discretizer,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_true() -> bool {
    true
}

impl ExperimentPlan {
    /// Plan with default solver options, midpoint discretization and the
    /// oracle enabled.
    pub fn new(spec: MeasureSpec, epsilon_list: Vec<f64>, n_list: Vec<usize>) -> Self {
        Self {
            spec,
            epsilon_list,
            n_list,
            solver: SolverOptions::default(),
            oracle: true,
            discretizer: Discretizer::Midpoint,
            seed: 0,
            output: None,
        }
    }

    /// Attractive circle `R = 10, γ = 1` at `ε ∈ {0.1, 0.01}` and
    /// `N = 8, 16, …, 256`.
    pub fn default_circle() -> Self {
        Self::new(
            MeasureSpec::Circle { radius: 10.0, gamma: 1.0 },
            vec![0.1, 0.01],
            vec![8, 16, 32, 64, 128, 256],
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.solver.validate()?;
        if self.epsilon_list.is_empty() || self.n_list.is_empty() {
            return Err(Error::Domain("epsilon_list and n_list must be nonempty".into()));
        }
        if let Some(e) = self.epsilon_list.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::Domain(format!("epsilon must be > 0, got {e}")));
        }
        if self.n_list.contains(&0) {
            return Err(Error::Domain("N must be >= 1".into()));
        }
        if !strictly_monotone(&self.epsilon_list) {
            return Err(Error::Domain("epsilon_list must be sorted without repeats".into()));
        }
        if !self.n_list.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Domain("n_list must be strictly increasing".into()));
        }
        if let Discretizer::Random { amplitude: Some(a) } = self.discretizer {
            if !(a.is_finite() && a != 0.0) {
                return Err(Error::Domain(format!("random amplitude must be nonzero, got {a}")));
            }
        }
        if self.oracle {
            if let Some(reference) = reference_energies(&self.spec)? {
                if let Some(&deepest) = reference.first() {
                    for &eps in &self.epsilon_list {
                        let cap = crate::green::alpha_cap(eps, crate::spectral::CAP_DELTA);
                        if -deepest >= cap {
                            return Err(Error::Domain(format!(
                                "epsilon = {eps} caps alpha at {cap}, below the reference \
                                 ground state {deepest}; 4*epsilon^2*alpha < 1 cannot reach it"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn discretize(&self, n: usize) -> Result<PointMeasure> {
        self.discretizer.discretize(&self.spec, n, self.seed)
    }
}

impl Discretizer {
    /// `n`-site measure for `spec`; random samples use a per-`n` seed
    /// derived from `seed`.
    pub fn discretize(&self, spec: &MeasureSpec, n: usize, seed: u64) -> Result<PointMeasure> {
        match *self {
            Discretizer::Midpoint => spec.discretize(n),
            Discretizer::Random { amplitude } => {
                let a = match amplitude {
                    Some(a) => a,
                    None => spec.total_mass()?,
                };
                sample_random(spec, n, a, cell_seed(seed, n))
            }
        }
    }
}

fn strictly_monotone(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1]) || v.windows(2).all(|w| w[0] > w[1])
}

/// Per-`N` seed; independent of `ε` so every `ε` sees the same sample.
pub fn cell_seed(seed: u64, n: usize) -> u64 {
    seed.wrapping_add((n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Energies (with multiplicity, lowest first) of the `ε = 0`, `N → ∞`
/// operator when known in closed form: the attractive circle, a constant
/// negative density on an interval (square well) and a single `δ` on the
/// line.
pub fn reference_energies(spec: &MeasureSpec) -> Result<Option<Vec<f64>>> {
    match spec {
        MeasureSpec::Circle { radius, gamma } => {
            let sp = circle_spectrum(&CircleSpec::new(*radius, *gamma)?)?;
            Ok(Some(sp.energies_with_multiplicity()))
        }
        MeasureSpec::IntervalDensity { a, b, density: Density::Constant { value } } => {
            if *value >= 0.0 {
                return Ok(Some(Vec::new()));
            }
            Ok(Some(square_well_energies(-value, 0.5 * (b - a))?))
        }
        MeasureSpec::Explicit { measure } if measure.dim() == 1 && measure.len() == 1 => {
            let c = measure.couplings()[0];
            Ok(Some(if c < 0.0 { vec![-c * c / 4.0] } else { Vec::new() }))
        }
        _ => Ok(None),
    }
}

/// Bound states of `-u'' - depth·1_{|x|<half_width} u`, lowest first.
pub fn square_well_energies(depth: f64, half_width: f64) -> Result<Vec<f64>> {
    if !(depth > 0.0 && half_width > 0.0 && depth.is_finite() && half_width.is_finite()) {
        return Err(Error::Domain("square well needs positive depth and width".into()));
    }
    use std::f64::consts::FRAC_PI_2;
    // z = kL with k² = depth - κ²; state n has z ∈ (nπ/2, (n+1)π/2).
    let z0 = half_width * depth.sqrt();
    let mut out = Vec::new();
    let mut n = 0usize;
    while (n as f64) * FRAC_PI_2 < z0 {
        let outside = move |z: f64| (z0 * z0 - z * z).max(0.0).sqrt();
        let f = |z: f64| {
            if n % 2 == 0 {
                z * z.tan() - outside(z)
            } else {
                -z / z.tan() - outside(z)
            }
        };
        let mut lo = n as f64 * FRAC_PI_2;
        let mut hi = ((n + 1) as f64 * FRAC_PI_2).min(z0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let kappa = outside(0.5 * (lo + hi)) / half_width;
        out.push(-kappa * kappa);
        n += 1;
    }
    Ok(out)
}

/// One approximate level of one `(ε, N)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Index of the level's first state in the energy-sorted list of all
    /// states of the cell (with multiplicity).
    pub level: usize,
    pub energy: f64,
    pub multiplicity: usize,
    pub oracle_energy: Option<f64>,
    pub abs_error: Option<f64>,
    pub flags: Vec<String>,
    /// Seconds spent on the cell; informational, not written to CSV.
    #[serde(skip)]
    pub wall_time: f64,
}

/// States of a solved cell, lowest first, as `(energy, multiplicity, flag)`.
fn cell_levels(res: &SpectrumResult) -> Vec<(f64, usize, Option<&'static str>)> {
    let mut levels = Vec::new();
    if res.beyond_cap > 0 {
        levels.push((-res.alpha_cap, res.beyond_cap, Some(flags::BEYOND_CAP)));
    }
    levels.extend(res.eigenvalues.iter().map(|e| (e.energy, e.multiplicity, None)));
    if res.near_threshold > 0 {
        levels.push((-res.search_window.0, res.near_threshold, Some(flags::NEAR_THRESHOLD)));
    }
    levels
}

/// Turn a solved cell into rows, matching states to `reference` by sorted
/// order.
pub fn rows_for_cell(
    epsilon: f64,
    n: usize,
    res: &SpectrumResult,
    reference: Option<&[f64]>,
    wall_time: f64,
) -> Vec<ConvergenceRow> {
    let levels = cell_levels(res);
    let total: usize = levels.iter().map(|l| l.1).sum();
    let mut rows = Vec::with_capacity(levels.len());
    let mut pos = 0;
    for (energy, multiplicity, flag) in levels {
        let mut fl: Vec<String> = Vec::new();
        if let Some(f) = flag {
            fl.push(f.into());
        }
        if res.truncated {
            fl.push(flags::TRUNCATED.into());
        }
        let (mut oracle_energy, mut abs_error) = (None, None);
        if let Some(r) = reference {
            if total != r.len() {
                fl.push(flags::COUNT_MISMATCH.into());
            }
            match r.get(pos) {
                Some(&o) => {
                    oracle_energy = Some(o);
                    abs_error = Some(if flag == Some(flags::BEYOND_CAP) {
                        (o - energy).max(0.0)
                    } else {
                        (energy - o).abs()
                    });
                }
                None => fl.push(flags::UNMATCHED.into()),
            }
        }
        rows.push(ConvergenceRow {
            epsilon,
            n,
            level: pos,
            energy,
            multiplicity,
            oracle_energy,
            abs_error,
            flags: fl,
            wall_time,
        });
        pos += multiplicity;
    }
    rows
}

/// Sort rows by `(epsilon, N, level)`.
pub fn canonical_sort(rows: &mut [ConvergenceRow]) {
    rows.sort_by(|a, b| {
        a.epsilon
            .total_cmp(&b.epsilon)
            .then(a.n.cmp(&b.n))
            .then(a.level.cmp(&b.level))
    });
}

fn run_cells(plan: &ExperimentPlan) -> Result<Vec<ConvergenceRow>> {
    plan.validate()?;
    let reference = if plan.oracle { reference_energies(&plan.spec)? } else { None };
    let cells: Vec<(f64, usize)> = plan
        .epsilon_list
        .iter()
        .flat_map(|&e| plan.n_list.iter().map(move |&n| (e, n)))
        .collect();
    let per_cell: Vec<Vec<ConvergenceRow>> = cells
        .par_iter()
        .map(|&(eps, n)| {
            let start = Instant::now();
            let mu = plan.discretize(n)?;
            let problem = SchroedingerProblem::new(mu, eps)?;
            let res = find_spectrum(&problem, &plan.solver)?;
            let t = start.elapsed().as_secs_f64();
            Ok(rows_for_cell(eps, n, &res, reference.as_deref(), t))
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<ConvergenceRow> = per_cell.into_iter().flatten().collect();
    canonical_sort(&mut rows);
    Ok(rows)
}

/// Solve every `(ε, N)` cell of `plan`; rows are canonically sorted.
pub fn run_convergence(plan: &ExperimentPlan) -> Result<Vec<ConvergenceRow>> {
    run_cells(plan)
}

/// Fixed measure, decreasing `ε`. Reference comparison is only meaningful
/// on the line, so the oracle must be off for `d > 1`.
pub fn run_epsilon_sweep(plan: &ExperimentPlan) -> Result<Vec<ConvergenceRow>> {
    if plan.oracle && plan.spec.dim() != 1 {
        return Err(Error::Domain(
            "epsilon sweeps compare against references only in d = 1; disable the oracle".into(),
        ));
    }
    run_cells(plan)
}

/// Write rows as CSV with the fixed header; absent values are empty and
/// flags are joined with `;`.
pub fn write_csv<W: Write>(rows: &[ConvergenceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.epsilon.to_string(),
            r.n.to_string(),
            r.level.to_string(),
            r.energy.to_string(),
            r.multiplicity.to_string(),
            opt(r.oracle_energy),
            opt(r.abs_error),
            r.flags.join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read a table written by [`write_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<Vec<ConvergenceRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != CSV_HEADER {
        return Err(Error::Domain(format!("unexpected CSV header {header:?}")));
    }
    let num = |s: &str, what: &str| -> Result<f64> {
        s.parse().map_err(|_| Error::Domain(format!("bad {what} value {s:?}")))
    };
    let int = |s: &str, what: &str| -> Result<usize> {
        s.parse().map_err(|_| Error::Domain(format!("bad {what} value {s:?}")))
    };
    let opt = |s: &str, what: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            num(s, what).map(Some)
        }
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(ConvergenceRow {
            epsilon: num(&rec[0], "epsilon")?,
            n: int(&rec[1], "N")?,
            level: int(&rec[2], "level")?,
            energy: num(&rec[3], "energy")?,
            multiplicity: int(&rec[4], "multiplicity")?,
            oracle_energy: opt(&rec[5], "oracle_energy")?,
            abs_error: opt(&rec[6], "abs_error")?,
            flags: rec[7].split(';').filter(|s| !s.is_empty()).map(String::from).collect(),
            wall_time: 0.0,
        });
    }
    Ok(rows)
}

/// Differences for one level index across two runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDelta {
    pub level: usize,
    pub cells: usize,
    /// `max |energy_b - energy_a|`.
    pub max_energy_delta: f64,
    /// Median of `energy_b - energy_a`.
    pub median_energy_delta: f64,
    /// `max |abs_error_b - abs_error_a|` over cells where both runs carry
    /// errors; `None` when no cell does.
    pub max_error_delta: Option<f64>,
    /// Median of `abs_error_b - abs_error_a`.
    pub median_error_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub rows: usize,
    pub levels: Vec<LevelDelta>,
    pub max_energy_delta: f64,
    pub max_error_delta: Option<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Per-level deltas `b - a` between two runs of the same plan shape.
pub fn compare_tables(a: &[ConvergenceRow], b: &[ConvergenceRow]) -> Result<ComparisonSummary> {
    if a.len() != b.len() {
        return Err(Error::Domain(format!("row counts differ: {} vs {}", a.len(), b.len())));
    }
    let key = |r: &ConvergenceRow| (r.epsilon, r.n, r.level);
    let mut by_level: Vec<(usize, Vec<f64>, Vec<f64>)> = Vec::new();
    for (ra, rb) in a.iter().zip(b) {
        let (ka, kb) = (key(ra), key(rb));
        if ka.0.total_cmp(&kb.0) != Ordering::Equal || ka.1 != kb.1 || ka.2 != kb.2 {
            return Err(Error::Domain(format!(
                "row shapes differ: (epsilon, N, level) {ka:?} vs {kb:?}"
            )));
        }
        let slot = match by_level.iter().position(|s| s.0 == ra.level) {
            Some(i) => i,
            None => {
                by_level.push((ra.level, Vec::new(), Vec::new()));
                by_level.len() - 1
            }
        };
        by_level[slot].1.push(rb.energy - ra.energy);
        if let (Some(ea), Some(eb)) = (ra.abs_error, rb.abs_error) {
            by_level[slot].2.push(eb - ea);
        }
    }
    by_level.sort_by_key(|s| s.0);
    let levels: Vec<LevelDelta> = by_level
        .into_iter()
        .map(|(level, de, derr)| {
            let with_errors = !derr.is_empty();
            LevelDelta {
                level,
                cells: de.len(),
                max_energy_delta: max_abs(&de),
                median_energy_delta: median(de),
                max_error_delta: with_errors.then(|| max_abs(&derr)),
                median_error_delta: with_errors.then(|| median(derr)),
            }
        })
        .collect();
    let max_energy_delta = levels.iter().fold(0.0f64, |m, l| m.max(l.max_energy_delta));
    let max_error_delta = levels
        .iter()
        .filter_map(|l| l.max_error_delta)
        .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))));
    Ok(ComparisonSummary { rows: a.len(), levels, max_energy_delta, max_error_delta })
}
