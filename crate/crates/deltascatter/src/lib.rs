//! Scattering of a scalar wave by finite collections of delta-function point
//! defects and parallel delta-function line defects in two dimensions.
//!
//! Units follow the convention `hbar = 2m = 1`, so the stationary equation is
//! `[∇² + k² − Σ z̃ₙ δ(x−aₙ) − Σ 𝔤ⱼ δ(x−bⱼ)] ψ = 0` and the energy is `k²`.
//! Point-defect couplings are the renormalized constants `z̃ₙ`; the bare
//! couplings and their running in the defect size are not modeled.
//!
//! The point-defect-only problem is solved exactly (`pointscatter`). The
//! mixed point + line problem is solved in the large-`kℓ` approximation
//! (`linescatter`), with a correction hierarchy in powers of `1/kℓ`
//! (`seriescorr`), the full out-going Green's function (`fullgreens`),
//! first-Born perturbations (`perturbation`), and brute-force ground truth
//! (`oracle`).

pub mod config;
pub mod error;
pub mod fullgreens;
pub mod linescatter;
pub mod model;
pub mod oracle;
pub mod perturbation;
pub mod pointscatter;
pub mod quadrature;
pub mod seriescorr;
pub mod specfun;

pub use error::ScatterError;
pub use model::{Configuration, LineDefect, PointDefect, Tolerances, WaveParams};

/// `√i = e^{iπ/4}` with the principal branch, used in every far-field
/// amplitude prefactor.
pub fn sqrt_i() -> num_complex::Complex64 {
    num_complex::Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)
}
