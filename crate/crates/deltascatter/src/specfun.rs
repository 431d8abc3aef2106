//! Branch-resolved special functions: the zero-order Hankel function of the
//! first kind, the longitudinal wavenumber `√(k² − K²)`, and the half-space
//! kernel `E(x, K)`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Result, ScatterError};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Crossover between the power series and the Hankel asymptotic expansion.
/// Below 14 the series loses at most ~4 digits to cancellation; above 14 the
/// asymptotic tail bottoms out near 1e-12.
const SERIES_LIMIT: f64 = 14.0;

/// `J₀(x)` by its power series (valid for small and moderate `x`).
fn j0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..200 {
        term *= -q / ((m * m) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

/// `Y₀(x)` by its power series.
fn y0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut sum = 0.0;
    for m in 1..200 {
        term *= -q / ((m * m) as f64);
        harmonic += 1.0 / m as f64;
        // (-1)^{m+1} H_m q^m / (m!)^2 = -term * H_m
        let contrib = -term * harmonic;
        sum += contrib;
        if contrib.abs() < 1e-17 {
            break;
        }
    }
    (2.0 / PI) * (((0.5 * x).ln() + EULER_GAMMA) * j0_series(x) + sum)
}

/// `H₀⁽¹⁾(x)` by the Hankel asymptotic expansion, truncated at the smallest
/// term.
fn hankel0_asymptotic(x: f64) -> Complex64 {
    // H0^(1)(x) ~ sqrt(2/(pi x)) e^{i(x - pi/4)} sum_k i^k a_k / x^k,
    // a_k = (-1)^k [(2k-1)!!]^2 / (k! 8^k).
    let mut a = 1.0f64;
    let mut sum = Complex64::new(1.0, 0.0);
    let mut prev = f64::INFINITY;
    let i_over_x = Complex64::new(0.0, 1.0 / x);
    let mut pow = Complex64::new(1.0, 0.0);
    for k in 0u32..30 {
        a *= -((2 * k + 1) as f64).powi(2) / (8.0 * (k + 1) as f64);
        pow *= i_over_x;
        let term = pow * a;
        if term.norm() > prev {
            break;
        }
        prev = term.norm();
        sum += term;
        if prev < 1e-17 {
            break;
        }
    }
    let amp = (2.0 / (PI * x)).sqrt();
    amp * Complex64::from_polar(1.0, x - PI / 4.0) * sum
}

/// `J₀(x)` for `x > 0` (the regular part of `H₀⁽¹⁾`).
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(ScatterError::NonPositiveArgument(x));
    }
    if x <= SERIES_LIMIT {
        Ok(j0_series(x))
    } else {
        Ok(hankel0_asymptotic(x).re)
    }
}

/// `H₀⁽¹⁾(x) = J₀(x) + iY₀(x)` for `x > 0`, relative error below 1e-10.
pub fn hankel0_first(x: f64) -> Result<Complex64> {
    if !(x > 0.0) {
        return Err(ScatterError::NonPositiveArgument(x));
    }
    if x <= SERIES_LIMIT {
        Ok(Complex64::new(j0_series(x), y0_series(x)))
    } else {
        Ok(hankel0_asymptotic(x))
    }
}

/// Longitudinal wavenumber `√(k² − K²)` on the branch with `Im ≥ 0`,
/// positive real for `|K| < k` (propagating), positive imaginary for
/// `|K| > k` (evanescent).
pub fn kx_of(big_k: f64, k: f64) -> Complex64 {
    let d = k * k - big_k * big_k;
    if d >= 0.0 {
        Complex64::new(d.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-d).sqrt())
    }
}

/// Half-space kernel `E(x, K) = -i e^{i√(k²-K²)|x|} / (2√(k²-K²))`.
///
/// For `|K| > k` this decays like `e^{-|x|√(K²-k²)}`. The branch point
/// `|K| = k` is an error; quadrature callers remove it by substitution.
pub fn e_kernel(x: f64, big_k: f64, k: f64) -> Result<Complex64> {
    let kx = kx_of(big_k, k);
    if kx.norm() == 0.0 {
        return Err(ScatterError::BranchPoint(big_k));
    }
    let i = Complex64::i();
    Ok(-i * (i * kx * x.abs()).exp() / (2.0 * kx))
}
