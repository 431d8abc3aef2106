//! Mixed point + line solver in the large-`kℓ` approximation: the spectral
//! matrix `B(K)`, the Fourier data `ψ̃₁`, the line amplitudes `Y`, the wave
//! `ψ₂`, the coupling coefficients `C_jm`, and the amplitude `f₂`.
//!
//! Line defects scatter the incident delta-supported Fourier component into
//! specular directions; spectral functions therefore carry an explicit
//! delta-part coefficient next to their smooth part, and the angular
//! amplitude reports specular delta components separately from its regular
//! part.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Result, ScatterError};
use crate::model::{Configuration, WaveParams};
use crate::pointscatter::{greens0, AMatrix};
use crate::quadrature::{integrate_spectral, SpectralIntegrand};
use crate::specfun::e_kernel;
use crate::sqrt_i;

fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `B_ij(K) = δ_ij − 𝔤_j E(b_i − b_j, K)`.
pub fn build_b(config: &Configuration, k: f64, big_k: f64) -> Result<DMatrix<Complex64>> {
    let lines = config.lines();
    let j = lines.len();
    let mut b = DMatrix::from_element(j, j, Complex64::default());
    for row in 0..j {
        for col in 0..j {
            let e = e_kernel(lines[row].x_position - lines[col].x_position, big_k, k)?;
            b[(row, col)] = -lines[col].coupling * e;
            if row == col {
                b[(row, col)] += Complex64::new(1.0, 0.0);
            }
        }
    }
    Ok(b)
}

/// Inverse of `B(K)`; `SingularB` below the determinant threshold.
pub fn b_inverse(config: &Configuration, k: f64, big_k: f64) -> Result<DMatrix<Complex64>> {
    let b = build_b(config, k, big_k)?;
    let j = b.nrows();
    if j == 0 {
        return Ok(b);
    }
    let scale = (0..j)
        .map(|r| (0..j).map(|c| b[(r, c)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1.0);
    let lu = b.lu();
    let det = lu.determinant();
    if det.norm() < 1e-8 * scale.powi(j as i32) {
        return Err(ScatterError::SingularB(big_k));
    }
    lu.try_inverse().ok_or(ScatterError::SingularB(big_k))
}

/// Raw `det B(K)` plus threshold, for the singularity scanner.
pub fn det_b(config: &Configuration, k: f64, big_k: f64) -> Result<(Complex64, f64)> {
    let b = build_b(config, k, big_k)?;
    let j = b.nrows();
    if j == 0 {
        return Ok((Complex64::new(1.0, 0.0), 0.0));
    }
    let scale = (0..j)
        .map(|r| (0..j).map(|c| b[(r, c)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1.0);
    Ok((b.lu().determinant(), 1e-8 * scale.powi(j as i32)))
}

/// A spectral singularity of the line system: `det B(𝔎)` vanishing within
/// threshold at `big_k ∈ (−k, k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BSingularityHit {
    pub big_k: f64,
    pub residual: f64,
}

/// Scan `|det B(𝔎)|` on `grid` interior points of `(−k, k)` (the branch
/// points `±k` are excluded) and refine local minima below the singularity
/// threshold.
pub fn scan_singularities_b(
    config: &Configuration,
    k: f64,
    grid: usize,
) -> Result<Vec<BSingularityHit>> {
    assert!(grid >= 2 && k > 0.0);
    let step = 2.0 * k / (grid + 1) as f64;
    let kks: Vec<f64> = (1..=grid).map(|i| -k + step * i as f64).collect();
    let mut dets = Vec::with_capacity(grid);
    let mut thresholds = Vec::with_capacity(grid);
    for &kk in &kks {
        let (d, thr) = det_b(config, k, kk)?;
        dets.push(d.norm());
        thresholds.push(thr);
    }
    // refine every local minimum: a sharp zero of det B can sit far below
    // the sampled values, so the threshold is applied at the refined point
    let mut hits = Vec::new();
    for i in 0..grid {
        let left_ok = i == 0 || dets[i] <= dets[i - 1];
        let right_ok = i == grid - 1 || dets[i] <= dets[i + 1];
        if left_ok && right_ok {
            let lo = if i == 0 { kks[0] } else { kks[i - 1] };
            let hi = if i == grid - 1 { kks[grid - 1] } else { kks[i + 1] };
            let f = |kk: f64| det_b(config, k, kk).map(|(d, _)| d.norm());
            let (kk_min, residual) = crate::pointscatter::golden_min(&f, lo, hi)?;
            let (_, threshold) = det_b(config, k, kk_min)?;
            if residual < threshold {
                hits.push(BSingularityHit { big_k: kk_min, residual });
            }
        }
    }
    Ok(hits)
}

pub type SmoothFn = Arc<dyn Fn(f64) -> Result<Vec<Complex64>> + Send + Sync>;

/// A `J`-vector function of the spectral variable `K`, split into a part
/// supported on `δ(K − delta_at)` and a smooth remainder.
#[derive(Clone)]
pub struct SpectralFunction {
    pub delta_coeff: Vec<Complex64>,
    /// location of the delta support (the incident `k_y`)
    pub delta_at: f64,
    smooth: SmoothFn,
    /// smallest kernel separation in the smooth part (evanescent decay hint)
    pub decay: Option<f64>,
}

impl SpectralFunction {
    pub fn new(delta_coeff: Vec<Complex64>, delta_at: f64, smooth: SmoothFn, decay: Option<f64>) -> Self {
        Self { delta_coeff, delta_at, smooth, decay }
    }

    pub fn smooth_at(&self, big_k: f64) -> Result<Vec<Complex64>> {
        (self.smooth)(big_k)
    }

    pub fn dim(&self) -> usize {
        self.delta_coeff.len()
    }

    /// Inverse Fourier transform evaluated at `y` for component `i`:
    /// `(1/2π)[e^{i delta_at y} delta_coeff_i + ∫ dK e^{iKy} smooth_i(K)]`.
    pub fn inverse_fourier_at(&self, i: usize, y: f64, k: f64, tol: f64) -> Result<Complex64> {
        let delta_part = cis(self.delta_at * y) * self.delta_coeff[i];
        let smooth = &self.smooth;
        let eval = move |big_k: f64| -> Result<Vec<Complex64>> {
            Ok(vec![cis(big_k * y) * smooth(big_k)?[i]])
        };
        let spec = SpectralIntegrand { dim: 1, eval: &eval, decay: self.decay };
        let integral = integrate_spectral(&spec, k, tol)?[0];
        Ok((delta_part + integral) / (2.0 * PI))
    }
}

/// A delta-supported specular component of the angular amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecularComponent {
    pub theta: f64,
    pub weight: Complex64,
}

/// Angular scattering amplitude: a regular function of the outgoing angle
/// plus finitely many specular delta components.
#[derive(Debug, Clone)]
pub struct AngularAmplitude {
    pub regular: Vec<(f64, Complex64)>,
    pub specular: Vec<SpecularComponent>,
}

/// Solver state for a fixed configuration and incident wave: the point
/// matrix `A`, the line amplitudes `Y` and the coefficients `C_jm`.
pub struct LineSolver {
    config: Configuration,
    wave: WaveParams,
    a: Arc<AMatrix>,
    y: SpectralFunction,
    /// `C[(j, m)]`, `J x N_active`
    c: DMatrix<Complex64>,
}

impl LineSolver {
    pub fn new(config: &Configuration, wave: &WaveParams) -> Result<Self> {
        let a = Arc::new(AMatrix::build(config, wave.k)?);
        let y = y_split(config, wave, &a)?;
        let c = c_coeffs(config, wave, &a, &y)?;
        Ok(Self { config: config.clone(), wave: *wave, a, y, c })
    }

    pub fn a_matrix(&self) -> &AMatrix {
        &self.a
    }

    pub fn y(&self) -> &SpectralFunction {
        &self.y
    }

    /// `C_jm` coupling coefficients (empty when `N = 0` or `J = 0`).
    pub fn c_matrix(&self) -> &DMatrix<Complex64> {
        &self.c
    }

    /// `kℓ` below this is outside the approximation's comfort zone.
    pub fn kl_warning(&self) -> Option<f64> {
        let kl = self.config.kl_parameter(&self.wave);
        (kl < 10.0).then_some(kl)
    }

    /// `G̃1(x; b_i, K)`, the partial Fourier transform of `G1` in the line
    /// coordinate.
    pub fn greens1_tilde(&self, x: [f64; 2], i: usize, big_k: f64) -> Result<Complex64> {
        greens1_tilde(&self.config, &self.a, x, i, big_k, self.wave.k)
    }

    /// Scattering state of the mixed problem at `x`.
    pub fn psi2(&self, x: [f64; 2]) -> Result<Complex64> {
        psi2_from_y(&self.config, &self.wave, &self.a, &self.y, x)
    }

    /// Regular (non-specular) part of the line contribution `f₂`.
    pub fn f2_regular(&self, theta_out: f64) -> Result<Complex64> {
        f2_regular_from_y(&self.config, &self.wave, &self.a, &self.y, &self.c, theta_out)
    }

    /// Specular delta components at `θ_in` (transmission side) and
    /// `π − θ_in` (reflection side), with the angle-conversion Jacobian
    /// `1/(k|cos θ_s|)` applied.
    pub fn specular(&self) -> Result<Vec<SpecularComponent>> {
        specular_from_y(&self.config, &self.wave, &self.y)
    }

    /// Regular part of the total amplitude `f = f₁ + f₂`.
    pub fn f_total_regular(&self, theta_out: f64) -> Result<Complex64> {
        Ok(self.a.f1(theta_out, &self.wave) + self.f2_regular(theta_out)?)
    }

    /// Full angular amplitude on a grid of outgoing angles.
    pub fn f_total(&self, thetas: &[f64]) -> Result<AngularAmplitude> {
        let regular = thetas
            .iter()
            .map(|&th| self.f_total_regular(th).map(|f| (th, f)))
            .collect::<Result<Vec<_>>>()?;
        Ok(AngularAmplitude { regular, specular: self.specular()? })
    }
}

/// Scattering state built from an arbitrary line amplitude `Y` (used both
/// by [`LineSolver`] and by the correction hierarchy).
pub fn psi2_from_y(
    config: &Configuration,
    wave: &WaveParams,
    a: &AMatrix,
    y: &SpectralFunction,
    x: [f64; 2],
) -> Result<Complex64> {
    let k = wave.k;
    let jn = config.num_lines();
    let mut psi = a.psi1(x, wave)?;
    if jn == 0 {
        return Ok(psi);
    }
    let lines = config.lines();
    // delta-supported part of Y, integrated analytically
    for j in 0..jn {
        psi += lines[j].coupling / (2.0 * PI)
            * greens1_tilde(config, a, x, j, -y.delta_at, k)?
            * y.delta_coeff[j];
    }
    // smooth part by spectral quadrature
    if a.n_active() > 0 {
        let tol = config.tolerances.quad_tol;
        let eval = |big_k: f64| -> Result<Vec<Complex64>> {
            let ys = y.smooth_at(big_k)?;
            let mut s = Complex64::default();
            for j in 0..jn {
                s += lines[j].coupling * greens1_tilde(config, a, x, j, -big_k, k)? * ys[j];
            }
            Ok(vec![s])
        };
        let spec = SpectralIntegrand { dim: 1, eval: &eval, decay: y.decay };
        psi += integrate_spectral(&spec, k, tol)?[0] / (2.0 * PI);
    }
    Ok(psi)
}

/// Regular part of `f₂` built from an arbitrary line amplitude `Y` and its
/// coupling coefficients `C`.
pub fn f2_regular_from_y(
    config: &Configuration,
    wave: &WaveParams,
    a: &AMatrix,
    y: &SpectralFunction,
    c: &DMatrix<Complex64>,
    theta_out: f64,
) -> Result<Complex64> {
    let k = wave.k;
    let kout = wave.kvec_out(theta_out);
    let lines = config.lines();
    let jn = lines.len();
    if jn == 0 {
        return Ok(Complex64::default());
    }
    let prefactor = -sqrt_i() * (PI / (2.0 * k)).sqrt();
    let n = a.n_active();
    let y_smooth =
        if n > 0 { y.smooth_at(kout[1])? } else { vec![Complex64::default(); jn] };
    let mut sum = Complex64::default();
    for j in 0..jn {
        let mut bracket = cis(-kout[0] * lines[j].x_position) * y_smooth[j];
        for a_idx in 0..n {
            let phase = cis(-dot(kout, a.position(a_idx)));
            for m in 0..n {
                bracket += phase * a.inv_entry(a_idx, m) * c[(j, m)];
            }
        }
        sum += lines[j].coupling * bracket;
    }
    Ok(prefactor * sum)
}

/// Specular delta components built from an arbitrary line amplitude `Y`.
pub fn specular_from_y(
    config: &Configuration,
    wave: &WaveParams,
    y: &SpectralFunction,
) -> Result<Vec<SpecularComponent>> {
    let lines = config.lines();
    if lines.is_empty() {
        return Ok(vec![]);
    }
    let k = wave.k;
    let cos_in = wave.theta_in.cos();
    if cos_in.abs() < 1e-6 {
        return Err(ScatterError::GrazingIncidence(cos_in.abs()));
    }
    let prefactor = -sqrt_i() * (PI / (2.0 * k)).sqrt();
    let mut out = Vec::with_capacity(2);
    for theta_s in [wave.theta_in, PI - wave.theta_in] {
        let kx_out = k * theta_s.cos();
        let jacobian = 1.0 / (k * theta_s.cos().abs());
        let mut w = Complex64::default();
        for (j, line) in lines.iter().enumerate() {
            w += line.coupling * cis(-kx_out * line.x_position) * y.delta_coeff[j];
        }
        out.push(SpecularComponent { theta: theta_s, weight: prefactor * jacobian * w });
    }
    Ok(out)
}

/// `ψ̃₁(b_i, K)`: plane-wave delta part `e^{i b_i k_x} δ(K − k_y)` plus the
/// point-defect smooth part.
pub fn psi1_tilde(config: &Configuration, wave: &WaveParams, a: &Arc<AMatrix>) -> SpectralFunction {
    let kvec = wave.kvec();
    let lines = config.lines();
    let delta_coeff: Vec<Complex64> =
        lines.iter().map(|l| cis(l.x_position * kvec[0])).collect();
    let k = wave.k;
    let b_positions: Vec<f64> = lines.iter().map(|l| l.x_position).collect();
    let a2 = Arc::clone(a);
    let smooth: SmoothFn = Arc::new(move |big_k: f64| -> Result<Vec<Complex64>> {
        let n = a2.n_active();
        let mut out = vec![Complex64::default(); b_positions.len()];
        if n == 0 {
            return Ok(out);
        }
        for (i, &b) in b_positions.iter().enumerate() {
            let mut s = Complex64::default();
            for na in 0..n {
                let phase = cis(dot(kvec, a2.position(na)));
                for m in 0..n {
                    let am = a2.position(m);
                    s += phase
                        * a2.inv_entry(na, m)
                        * cis(-am[1] * big_k)
                        * e_kernel(am[0] - b, big_k, k)?;
                }
            }
            out[i] = s / (2.0 * PI);
        }
        Ok(out)
    });
    SpectralFunction::new(delta_coeff, kvec[1], smooth, config.ell())
}

/// `Y = B⁻¹ ψ̃₁`, applied separately to the delta and smooth parts.
///
/// Grazing incidence is rejected: the delta coefficient lives at `K = k_y`,
/// which sits on the spectral branch point when `|cos θ_in| → 0`.
pub fn y_split(config: &Configuration, wave: &WaveParams, a: &Arc<AMatrix>) -> Result<SpectralFunction> {
    if config.num_lines() > 0 && wave.theta_in.cos().abs() < 1e-6 {
        return Err(ScatterError::GrazingIncidence(wave.theta_in.cos().abs()));
    }
    let psi1t = psi1_tilde(config, wave, a);
    apply_b_inverse(config, wave.k, &psi1t)
}

/// Pointwise `B⁻¹(K)` applied to a spectral function (the operator `K̂` of
/// the correction hierarchy, diagonal in the `K` representation).
pub fn apply_b_inverse(config: &Configuration, k: f64, f: &SpectralFunction) -> Result<SpectralFunction> {
    let jn = config.num_lines();
    if jn == 0 {
        return Ok(f.clone());
    }
    let binv_delta = b_inverse(config, k, f.delta_at)?;
    let mut delta_coeff = vec![Complex64::default(); jn];
    for i in 0..jn {
        for j in 0..jn {
            delta_coeff[i] += binv_delta[(i, j)] * f.delta_coeff[j];
        }
    }
    let cfg = config.clone();
    let inner = f.clone();
    let smooth: SmoothFn = Arc::new(move |big_k: f64| -> Result<Vec<Complex64>> {
        let fs = inner.smooth_at(big_k)?;
        if fs.iter().all(|z| z.norm() == 0.0) {
            return Ok(fs);
        }
        let binv = b_inverse(&cfg, k, big_k)?;
        let mut out = vec![Complex64::default(); fs.len()];
        for i in 0..fs.len() {
            for j in 0..fs.len() {
                out[i] += binv[(i, j)] * fs[j];
            }
        }
        Ok(out)
    });
    Ok(SpectralFunction::new(delta_coeff, f.delta_at, smooth, f.decay))
}

/// `G̃1(x; b_i, K)`, Eq.-level: free half-space kernel plus the point-defect
/// correction.
pub fn greens1_tilde(
    config: &Configuration,
    a: &AMatrix,
    x: [f64; 2],
    i: usize,
    big_k: f64,
    k: f64,
) -> Result<Complex64> {
    let b_i = config.lines()[i].x_position;
    let mut g = cis(-big_k * x[1]) * e_kernel(b_i - x[0], big_k, k)?;
    let n = a.n_active();
    for na in 0..n {
        let g0 = greens0(x, a.position(na), k)?;
        for m in 0..n {
            let am = a.position(m);
            g += g0 * a.inv_entry(na, m) * cis(-am[1] * big_k) * e_kernel(b_i - am[0], big_k, k)?;
        }
    }
    Ok(g)
}

/// `C_jm`: inverse Fourier transform of `E(a_mx − b_j, K) Y_j(K)` at
/// `y = a_my`, delta part analytic and smooth part by quadrature.
pub fn c_coeffs(
    config: &Configuration,
    wave: &WaveParams,
    a: &AMatrix,
    y: &SpectralFunction,
) -> Result<DMatrix<Complex64>> {
    let jn = config.num_lines();
    let n = a.n_active();
    let mut c = DMatrix::from_element(jn, n, Complex64::default());
    if jn == 0 || n == 0 {
        return Ok(c);
    }
    let k = wave.k;
    let tol = config.tolerances.quad_tol;
    let lines = config.lines();
    for j in 0..jn {
        // a transparent line contributes nothing (C_jm always enters
        // multiplied by 𝔤_j) and its integrand is not separately integrable
        if lines[j].coupling.norm() == 0.0 {
            continue;
        }
        let b_j = lines[j].x_position;
        for m in 0..n {
            let am = a.position(m);
            let sep = (am[0] - b_j).abs();
            let delta_part = cis(y.delta_at * am[1])
                * e_kernel(am[0] - b_j, y.delta_at, k)?
                * y.delta_coeff[j];
            let eval = |big_k: f64| -> Result<Vec<Complex64>> {
                Ok(vec![
                    cis(big_k * am[1]) * e_kernel(am[0] - b_j, big_k, k)? * y.smooth_at(big_k)?[j],
                ])
            };
            let spec = SpectralIntegrand { dim: 1, eval: &eval, decay: Some(sep) };
            let smooth_part = integrate_spectral(&spec, k, tol)?[0];
            c[(j, m)] = (delta_part + smooth_part) / (2.0 * PI);
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LineDefect, PointDefect};

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mixed_config(ell: f64, z: Complex64, g: Complex64) -> Configuration {
        Configuration::new(
            vec![PointDefect::new(-ell, 0.0, z)],
            vec![LineDefect::new(0.0, g)],
        )
        .unwrap()
    }

    #[test]
    fn b_single_line_entry() {
        let cfg = Configuration::new(vec![], vec![LineDefect::new(0.0, c64(1.5, 0.0))]).unwrap();
        let k = 1.0;
        let big_k = 0.5;
        let b = build_b(&cfg, k, big_k).unwrap();
        let kx = (k * k - big_k * big_k).sqrt();
        let expect = Complex64::new(1.0, 0.0) + Complex64::i() * 1.5 / (2.0 * kx);
        assert!((b[(0, 0)] - expect).norm() < 1e-14);
    }

    #[test]
    fn b_zero_coupling_is_identity() {
        let cfg = Configuration::new(
            vec![],
            vec![LineDefect::new(0.0, c64(0.0, 0.0)), LineDefect::new(2.0, c64(0.0, 0.0))],
        )
        .unwrap();
        let b = build_b(&cfg, 1.0, 0.3).unwrap();
        assert!((b - DMatrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn b_singular_at_gain_locus() {
        // det B = 0 iff g = 2i kx
        let k = 1.0f64;
        let big_k = 0.6f64;
        let kx = (k * k - big_k * big_k).sqrt();
        let cfg =
            Configuration::new(vec![], vec![LineDefect::new(0.0, c64(0.0, 2.0 * kx))]).unwrap();
        assert!(matches!(b_inverse(&cfg, k, big_k), Err(ScatterError::SingularB(_))));
    }

    #[test]
    fn b_even_in_big_k() {
        let cfg = Configuration::new(
            vec![],
            vec![LineDefect::new(0.0, c64(1.0, 0.2)), LineDefect::new(3.0, c64(-0.5, 0.0))],
        )
        .unwrap();
        for &kk in &[0.2, 0.9, 1.7, 4.0] {
            let bp = build_b(&cfg, 1.0, kk).unwrap();
            let bm = build_b(&cfg, 1.0, -kk).unwrap();
            assert!((bp - bm).norm() < 1e-14);
        }
    }

    #[test]
    fn b_scan_finds_gain_locus_and_ignores_real_couplings() {
        let k = 1.0f64;
        let k0 = 0.6f64;
        let kx = (k * k - k0 * k0).sqrt();
        let gain =
            Configuration::new(vec![], vec![LineDefect::new(0.0, c64(0.0, 2.0 * kx))]).unwrap();
        let grid = 201;
        let step = 2.0 * k / (grid + 1) as f64;
        let hits = scan_singularities_b(&gain, k, grid).unwrap();
        assert_eq!(hits.len(), 2, "{hits:?}");
        assert!((hits[0].big_k + k0).abs() < step, "{hits:?}");
        assert!((hits[1].big_k - k0).abs() < step, "{hits:?}");

        let passive =
            Configuration::new(vec![], vec![LineDefect::new(0.0, c64(1.3, 0.0))]).unwrap();
        assert!(scan_singularities_b(&passive, k, grid).unwrap().is_empty());
    }

    #[test]
    fn psi1_tilde_no_points() {
        let cfg = Configuration::new(vec![], vec![LineDefect::new(2.0, c64(1.0, 0.0))]).unwrap();
        let wave = WaveParams::new(1.0, 0.5).unwrap();
        let a = Arc::new(AMatrix::build(&cfg, wave.k).unwrap());
        let p = psi1_tilde(&cfg, &wave, &a);
        assert!((p.delta_coeff[0] - cis(2.0 * wave.kx())).norm() < 1e-15);
        assert_eq!(p.delta_at, wave.ky());
        assert!(p.smooth_at(0.3).unwrap()[0].norm() == 0.0);
    }

    #[test]
    fn psi1_tilde_smooth_decays_evanescently() {
        let ell = 5.0;
        let cfg = mixed_config(ell, c64(4.0, 0.0), c64(1.0, 0.0));
        let wave = WaveParams::new(1.0, 0.0).unwrap();
        let a = Arc::new(AMatrix::build(&cfg, wave.k).unwrap());
        let p = psi1_tilde(&cfg, &wave, &a);
        let v1 = p.smooth_at(2.0).unwrap()[0].norm();
        let v2 = p.smooth_at(3.0).unwrap()[0].norm();
        let bound1 = (-(ell) * (4.0f64 - 1.0).sqrt()).exp();
        assert!(v1 < bound1, "{v1} vs bound {bound1}");
        assert!(v2 < v1);
    }

    #[test]
    fn y_equals_psi1_tilde_for_transparent_lines() {
        let cfg = Configuration::new(
            vec![PointDefect::new(-5.0, 0.0, c64(4.0, 0.0))],
            vec![LineDefect::new(0.0, c64(0.0, 0.0))],
        )
        .unwrap();
        let wave = WaveParams::new(1.0, 0.2).unwrap();
        let a = Arc::new(AMatrix::build(&cfg, wave.k).unwrap());
        let p = psi1_tilde(&cfg, &wave, &a);
        let y = y_split(&cfg, &wave, &a).unwrap();
        assert!((y.delta_coeff[0] - p.delta_coeff[0]).norm() < 1e-14);
        for &kk in &[0.0, 0.5, 1.5] {
            assert!((y.smooth_at(kk).unwrap()[0] - p.smooth_at(kk).unwrap()[0]).norm() < 1e-14);
        }
    }

    #[test]
    fn y_delta_single_line_closed_form() {
        let g = c64(0.7, 0.1);
        let b = 1.3;
        let cfg = Configuration::new(vec![], vec![LineDefect::new(b, g)]).unwrap();
        let wave = WaveParams::new(1.0, 0.4).unwrap();
        let a = Arc::new(AMatrix::build(&cfg, wave.k).unwrap());
        let y = y_split(&cfg, &wave, &a).unwrap();
        let kx = wave.kx();
        let expect = cis(b * kx) / (Complex64::new(1.0, 0.0) + Complex64::i() * g / (2.0 * kx));
        assert!((y.delta_coeff[0] - expect).norm() < 1e-13);
    }

    #[test]
    fn y_smooth_matches_direct_substitution() {
        // J=1, N=1: Y_smooth(K) = psi1_tilde_smooth(K) / (1 + i g /(2 kx))
        let g = c64(0.9, 0.0);
        let cfg = mixed_config(6.0, c64(4.0, 0.0), g);
        let wave = WaveParams::new(1.0, 0.0).unwrap();
        let a = Arc::new(AMatrix::build(&cfg, wave.k).unwrap());
        let p = psi1_tilde(&cfg, &wave, &a);
        let y = y_split(&cfg, &wave, &a).unwrap();
        let big_k = 0.0;
        let kx = 1.0;
        let denom = Complex64::new(1.0, 0.0) + Complex64::i() * g / (2.0 * kx);
        let expect = p.smooth_at(big_k).unwrap()[0] / denom;
        assert!((y.smooth_at(big_k).unwrap()[0] - expect).norm() < 1e-13);
    }

    #[test]
    fn greens1_tilde_free_case_is_half_space_kernel() {
        let cfg = Configuration::new(vec![], vec![LineDefect::new(1.0, c64(0.5, 0.0))]).unwrap();
        let a = AMatrix::build(&cfg, 1.0).unwrap();
        let x = [3.0, -0.7];
        let big_k = 0.4;
        let g = greens1_tilde(&cfg, &a, x, 0, big_k, 1.0).unwrap();
        let expect = cis(-big_k * x[1]) * e_kernel(1.0 - x[0], big_k, 1.0).unwrap();
        assert!((g - expect).norm() < 1e-14);
    }

    #[test]
    fn greens1_tilde_matches_fourier_quadrature() {
        // F_{y',K} { G1(x, y; b_i, y') } by direct y' quadrature
        let cfg = mixed_config(4.0, c64(4.0, 0.0), c64(1.0, 0.0));
        let wave = WaveParams::new(1.0, 0.0).unwrap();
        let a = AMatrix::build(&cfg, wave.k).unwrap();
        let x = [2.5, 0.8];
        let big_k = 1.6; // evanescent: quadrature over y' converges fast
        let direct = greens1_tilde(&cfg, &a, x, 0, big_k, wave.k).unwrap();

        // windowed Fourier quadrature with a smooth cosine taper; for
        // |K| > k the phase k r(y') - K y' has no stationary point, so the
        // tapered tails contribute nothing
        let (flat, edge) = (400.0f64, 800.0f64);
        let taper = |yp: f64| -> f64 {
            let t = yp.abs();
            if t <= flat {
                1.0
            } else if t >= edge {
                0.0
            } else {
                (0.5 * PI * (t - flat) / (edge - flat)).cos().powi(2)
            }
        };
        let mut evals = 0usize;
        let f = |yp: f64| -> Result<Vec<Complex64>> {
            Ok(vec![taper(yp) * cis(-big_k * yp) * a.greens1(x, [0.0, yp]).unwrap()])
        };
        let quad = crate::quadrature::adaptive_gk(&f, 1, -edge, edge, 1e-8, &mut evals, 40_000_000)
            .unwrap()[0];
        assert!((direct - quad).norm() < 1e-5, "direct {direct} quad {quad}");
    }

    #[test]
    fn psi2_reduces_to_psi1_for_transparent_lines() {
        let cfg = Configuration::new(
            vec![PointDefect::new(-8.0, 0.0, c64(4.0, 0.0))],
            vec![LineDefect::new(0.0, c64(0.0, 0.0))],
        )
        .unwrap();
        let wave = WaveParams::new(1.2, 0.1).unwrap();
        let solver = LineSolver::new(&cfg, &wave).unwrap();
        let a = AMatrix::build(&cfg, wave.k).unwrap();
        for &x in &[[1.0, 2.0], [-3.0, 0.5], [4.0, -4.0]] {
            let p2 = solver.psi2(x).unwrap();
            let p1 = a.psi1(x, &wave).unwrap();
            assert!((p2 - p1).norm() < 1e-10);
        }
    }

    #[test]
    fn psi2_transmission_matches_transfer_matrix_formula() {
        // N=0, J=1: on the far side psi2 = t e^{ik·x}/2pi
        let g = c64(0.8, 0.0);
        let cfg = Configuration::new(vec![], vec![LineDefect::new(0.0, g)]).unwrap();
        let wave = WaveParams::new(1.0, 0.3).unwrap();
        let solver = LineSolver::new(&cfg, &wave).unwrap();
        let kx = wave.kx();
        let t = Complex64::new(0.0, 2.0 * kx) / (Complex64::new(0.0, 2.0 * kx) - g);
        for &x in &[[2.0, 1.0], [5.0, -3.0]] {
            let p2 = solver.psi2(x).unwrap();
            let expect = t * cis(dot(wave.kvec(), x)) / (2.0 * PI);
            assert!((p2 - expect).norm() < 1e-10, "at {x:?}: {p2} vs {expect}");
        }
        // near side: incident + reflected
        let r = g / (Complex64::new(0.0, 2.0 * kx) - g);
        for &x in &[[-2.0, 1.0], [-4.0, 0.0]] {
            let p2 = solver.psi2(x).unwrap();
            let krefl = [-wave.kx(), wave.ky()];
            let expect = (cis(dot(wave.kvec(), x)) + r * cis(dot(krefl, x))) / (2.0 * PI);
            assert!((p2 - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn c_coeffs_transparent_point_limit() {
        // z -> 0: only the delta part of Y survives in C_11
        let g = c64(0.5, 0.0);
        let eps = 1e-9;
        let cfg = mixed_config(5.0, c64(eps, 0.0), g);
        let wave = WaveParams::new(1.0, 0.25).unwrap();
        let solver = LineSolver::new(&cfg, &wave).unwrap();
        let a_y = 0.0;
        let a_x = -5.0;
        let kx = wave.kx();
        let y_delta = cis(0.0 * kx) / (Complex64::new(1.0, 0.0) + Complex64::i() * g / (2.0 * kx));
        let expect =
            cis(wave.ky() * a_y) * e_kernel(a_x - 0.0, wave.ky(), wave.k).unwrap() * y_delta
                / (2.0 * PI);
        let c = solver.c_matrix();
        assert!((c[(0, 0)] - expect).norm() < 1e-6, "{} vs {}", c[(0, 0)], expect);
    }

    #[test]
    fn c_smooth_part_decays_with_separation() {
        // C is dominated by the O(1) delta part; the smooth remainder is a
        // stationary-phase integral that shrinks as the separation grows
        let wave = WaveParams::new(1.0, 0.0).unwrap();
        let g = c64(1.0, 0.0);
        let smooth_residual = |ell: f64| {
            let cfg = mixed_config(ell, c64(4.0, 0.0), g);
            let solver = LineSolver::new(&cfg, &wave).unwrap();
            let kx = wave.kx();
            let y_delta = Complex64::new(1.0, 0.0)
                / (Complex64::new(1.0, 0.0) + Complex64::i() * g / (2.0 * kx));
            let delta_part =
                e_kernel(-ell, wave.ky(), wave.k).unwrap() * y_delta / (2.0 * PI);
            (solver.c_matrix()[(0, 0)] - delta_part).norm()
        };
        let r10 = smooth_residual(10.0);
        let r40 = smooth_residual(40.0);
        assert!(r10 < 0.05, "r10 {r10}");
        assert!(r40 < r10, "r10 {r10} r40 {r40}");
    }

    #[test]
    fn f2_zero_for_transparent_lines() {
        let cfg = Configuration::new(
            vec![PointDefect::new(-5.0, 0.0, c64(4.0, 0.0))],
            vec![LineDefect::new(0.0, c64(0.0, 0.0))],
        )
        .unwrap();
        let wave = WaveParams::new(1.0, 0.2).unwrap();
        let solver = LineSolver::new(&cfg, &wave).unwrap();
        for &th in &[0.0, 0.7, 2.0, -1.3] {
            assert!(solver.f2_regular(th).unwrap().norm() < 1e-14);
        }
        for s in solver.specular().unwrap() {
            assert!(s.weight.norm() < 1e-14);
        }
    }

    #[test]
    fn grazing_incidence_rejected() {
        let cfg = Configuration::new(vec![], vec![LineDefect::new(0.0, c64(1.0, 0.0))]).unwrap();
        let wave = WaveParams::new(1.0, PI / 2.0).unwrap();
        // the incident delta component sits on the spectral branch point
        assert!(matches!(LineSolver::new(&cfg, &wave), Err(ScatterError::GrazingIncidence(_))));
    }

    #[test]
    fn psi2_on_line_consistent_with_y_inverse_fourier() {
        // psi2 restricted to a line equals the inverse Fourier transform of Y
        // up to the dropped point-line rescattering term: exactly for a
        // transparent point, to O(1/k ell) otherwise
        let wave = WaveParams::new(1.0, 0.0).unwrap();

        let cfg = mixed_config(12.0, c64(1e-9, 0.0), c64(1.0, 0.0));
        let solver = LineSolver::new(&cfg, &wave).unwrap();
        for &y in &[0.0, 1.5] {
            let via_psi2 = solver.psi2([0.0, y]).unwrap();
            let via_y = solver.y().inverse_fourier_at(0, y, wave.k, 1e-9).unwrap();
            assert!((via_psi2 - via_y).norm() < 1e-6, "y={y}: {via_psi2} vs {via_y}");
        }

        let ell = 12.0;
        let cfg = mixed_config(ell, c64(4.0, 0.0), c64(1.0, 0.0));
        let solver = LineSolver::new(&cfg, &wave).unwrap();
        for &y in &[0.0, 1.5, -4.0] {
            let via_psi2 = solver.psi2([0.0, y]).unwrap();
            let via_y = solver.y().inverse_fourier_at(0, y, wave.k, 1e-9).unwrap();
            let bound = 3.0 / (wave.k * ell) * via_psi2.norm().max(0.05);
            assert!((via_psi2 - via_y).norm() < bound, "y={y}: {via_psi2} vs {via_y}");
        }
    }
}
