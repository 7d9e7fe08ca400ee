//! Negative point spectrum of `-Δ + ε²Δ² + μ` for finite point measures
//! `μ = Σ c_j δ_{x_j}` in one to three dimensions.
//!
//! For `ε > 0` the Green kernel of `-Δ + ε²Δ² + α` is continuous, so a
//! point measure acts as a rank-`N` perturbation and `-α` is an eigenvalue
//! exactly when the `N × N` matrix `δ_jk/c_k + g_{ε,α}(x_j - x_k)` is
//! singular. This crate evaluates that kernel ([`green`]), builds point
//! measures from curves, densities and random samples ([`measure`]), locates
//! the singular values of `α` with multiplicities and eigenvectors
//! ([`spectral`]), provides an exact reference spectrum for an attractive
//! circle in the plane ([`oracle`]) and drives convergence studies
//! ([`harness`]).
//!
//! ```
//! use point_spectra::measure::PointMeasure;
//! use point_spectra::spectral::{find_spectrum, SchroedingerProblem, SolverOptions};
//!
//! // A single attractive site on the line.
//! let mu = PointMeasure::new(1, vec![[0.0, 0.0, 0.0]], vec![-2.0]).unwrap();
//! let problem = SchroedingerProblem::new(mu, 1e-3).unwrap();
//! let spectrum = find_spectrum(&problem, &SolverOptions::default()).unwrap();
//! assert_eq!(spectrum.eigenvalues.len(), 1);
//! let energy = -spectrum.eigenvalues[0].alpha_star;
//! assert!((energy + 1.0).abs() < 1e-2);
//! ```

pub mod error;
pub mod green;
pub mod harness;
pub mod measure;
pub mod oracle;
pub mod quad;
pub mod spectral;
pub mod specfun;

pub use error::{Error, Result};

/// Version string embedded in every output document.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/special-functions.md")]
    mod special_functions {}
    #[doc = include_str!("../../../book/src/green-kernel.md")]
    mod green_kernel {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/spectrum.md")]
    mod spectrum {}
    #[doc = include_str!("../../../book/src/circle-oracle.md")]
    mod circle_oracle {}
    #[doc = include_str!("../../../book/src/convergence.md")]
    mod convergence {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
