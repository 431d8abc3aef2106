//! Full out-going Green's function of the mixed point + line problem in the
//! large-`kℓ` approximation: the spectral response `Z`, the coupling
//! coefficients `D`, the field `greens_full` and its far-field form.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::Result;
use crate::linescatter::{apply_b_inverse, b_inverse, greens1_tilde, SpectralFunction};
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

/// Green's-function solver for a fixed configuration and energy `k²`.
pub struct GreensSolver {
    config: Configuration,
    k: f64,
    a: Arc<AMatrix>,
}

/// `Z` and `D` for one source point, reusable across field points and
/// far-field angles.
pub struct GreensColumn<'s> {
    solver: &'s GreensSolver,
    xp: [f64; 2],
    z: SpectralFunction,
    /// `D[(j, m)]`, `J x N_active`
    d: DMatrix<Complex64>,
}

impl GreensSolver {
    pub fn new(config: &Configuration, k: f64) -> Result<Self> {
        let a = Arc::new(AMatrix::build(config, k)?);
        Ok(Self { config: config.clone(), k, a })
    }

    pub fn a_matrix(&self) -> &AMatrix {
        &self.a
    }

    /// Slowest evanescent decay rate of the source-side spectral vector.
    fn z_decay(&self, xp: [f64; 2]) -> Option<f64> {
        let point_min = (0..self.a.n_active())
            .map(|m| self.a.position(m)[0])
            .fold(f64::INFINITY, |acc, ax| {
                self.config
                    .lines()
                    .iter()
                    .map(move |l| (l.x_position - ax).abs())
                    .fold(acc, f64::min)
            });
        let d = self
            .config
            .lines()
            .iter()
            .map(|l| (l.x_position - xp[0]).abs().min(point_min))
            .fold(f64::INFINITY, f64::min);
        (d.is_finite() && d > 0.0).then_some(d)
    }

    /// `Z(K; x') = B⁻¹(K) [G̃1(x'; b_j, K)]_j`: the line response to a point
    /// source at `x'`. Purely smooth (no delta component).
    pub fn z_function(&self, xp: [f64; 2]) -> SpectralFunction {
        let jn = self.config.num_lines();
        let cfg = self.config.clone();
        let a = Arc::clone(&self.a);
        let k = self.k;
        let smooth = Arc::new(move |big_k: f64| -> Result<Vec<Complex64>> {
            let mut v = vec![Complex64::default(); jn];
            for j in 0..jn {
                v[j] = greens1_tilde(&cfg, &a, xp, j, big_k, k)?;
            }
            let binv = b_inverse(&cfg, k, big_k)?;
            let mut out = vec![Complex64::default(); jn];
            for i in 0..jn {
                for j in 0..jn {
                    out[i] += binv[(i, j)] * v[j];
                }
            }
            Ok(out)
        });
        SpectralFunction::new(vec![Complex64::default(); jn], 0.0, smooth, self.z_decay(xp))
    }

    /// `D_jm`: inverse Fourier transform of `E(a_mx - b_j, K) Z_j(K)` at
    /// `y = a_my`.
    pub fn d_coeffs(&self, z: &SpectralFunction) -> Result<DMatrix<Complex64>> {
        let jn = self.config.num_lines();
        let n = self.a.n_active();
        let mut d = DMatrix::from_element(jn, n, Complex64::default());
        if jn == 0 || n == 0 {
            return Ok(d);
        }
        let k = self.k;
        let tol = self.config.tolerances.quad_tol;
        let lines = self.config.lines();
        for j in 0..jn {
            if lines[j].coupling.norm() == 0.0 {
                continue;
            }
            let b_j = lines[j].x_position;
            for m in 0..n {
                let am = self.a.position(m);
                let sep = (am[0] - b_j).abs();
                let eval = |big_k: f64| -> Result<Vec<Complex64>> {
                    Ok(vec![
                        cis(big_k * am[1])
                            * e_kernel(am[0] - b_j, big_k, k)?
                            * z.smooth_at(big_k)?[j],
                    ])
                };
                let spec = SpectralIntegrand { dim: 1, eval: &eval, decay: Some(sep) };
                d[(j, m)] = integrate_spectral(&spec, k, tol)?[0] / (2.0 * PI);
            }
        }
        Ok(d)
    }

    /// Precompute the source column for repeated evaluation.
    pub fn column(&self, xp: [f64; 2]) -> Result<GreensColumn<'_>> {
        self.column_order_n(xp, 0)
    }

    /// Source column with `order` rounds of the point-line correction
    /// hierarchy applied to the line response `Z`; each round tightens the
    /// internal consistency of the column by another factor of the bounce
    /// loss between the lines and the point set.
    pub fn column_order_n(&self, xp: [f64; 2], order: usize) -> Result<GreensColumn<'_>> {
        let wave = WaveParams::new(self.k, 0.0)?;
        let mut term = self.z_function(xp);
        let mut z = term.clone();
        for _ in 0..order {
            let fed = crate::seriescorr::apply_delta_g(&self.config, &wave, &self.a, &term)?;
            term = apply_b_inverse(&self.config, self.k, &fed)?;
            z = crate::seriescorr::add_spectral(&z, &term);
        }
        let d = self.d_coeffs(&z)?;
        Ok(GreensColumn { solver: self, xp, z, d })
    }

    /// `G(x, x')` of the mixed problem.
    pub fn greens_full(&self, x: [f64; 2], xp: [f64; 2]) -> Result<Complex64> {
        self.column(xp)?.full(x)
    }

    /// Far-field coefficient `F(θ', x')`: `G(x, x') ≈ F e^{ikr}/√r` as
    /// `x = r (cos θ', sin θ') → ∞`.
    pub fn greens_farfield(&self, theta_out: f64, xp: [f64; 2]) -> Result<Complex64> {
        self.column(xp)?.farfield(theta_out)
    }
}

impl GreensColumn<'_> {
    pub fn z(&self) -> &SpectralFunction {
        &self.z
    }

    pub fn d_matrix(&self) -> &DMatrix<Complex64> {
        &self.d
    }

    pub fn full(&self, x: [f64; 2]) -> Result<Complex64> {
        let s = self.solver;
        let mut g = s.a.greens1(x, self.xp)?;
        let lines = s.config.lines();
        if lines.iter().all(|l| l.coupling.norm() == 0.0) {
            return Ok(g);
        }
        let tol = s.config.tolerances.quad_tol;
        let line_decay = lines
            .iter()
            .map(|l| (l.x_position - x[0]).abs())
            .fold(f64::INFINITY, f64::min);
        let decay = match self.z.decay {
            Some(dz) => Some(dz + line_decay.max(0.0)),
            None => (line_decay > 0.0).then_some(line_decay),
        };
        let eval = |big_k: f64| -> Result<Vec<Complex64>> {
            let zs = self.z.smooth_at(big_k)?;
            let mut sum = Complex64::default();
            for (j, line) in lines.iter().enumerate() {
                if line.coupling.norm() == 0.0 {
                    continue;
                }
                sum += line.coupling * greens1_tilde(&s.config, &s.a, x, j, -big_k, s.k)? * zs[j];
            }
            Ok(vec![sum])
        };
        let spec = SpectralIntegrand { dim: 1, eval: &eval, decay };
        g += integrate_spectral(&spec, s.k, tol)?[0] / (2.0 * PI);
        Ok(g)
    }

    pub fn farfield(&self, theta_out: f64) -> Result<Complex64> {
        let s = self.solver;
        let k = s.k;
        let kout = [k * theta_out.cos(), k * theta_out.sin()];
        let n = s.a.n_active();

        let mut bracket = cis(-dot(kout, self.xp));
        for na in 0..n {
            let phase = cis(-dot(kout, s.a.position(na)));
            for m in 0..n {
                bracket += phase * s.a.inv_entry(na, m) * greens0(s.a.position(m), self.xp, k)?;
            }
        }

        let lines = s.config.lines();
        if lines.iter().any(|l| l.coupling.norm() != 0.0) {
            let z_at = self.z.smooth_at(kout[1])?;
            for (j, line) in lines.iter().enumerate() {
                if line.coupling.norm() == 0.0 {
                    continue;
                }
                let mut inner = cis(-kout[0] * line.x_position) * z_at[j];
                for na in 0..n {
                    let phase = cis(-dot(kout, s.a.position(na)));
                    for m in 0..n {
                        inner += phase * s.a.inv_entry(na, m) * self.d[(j, m)];
                    }
                }
                // the 1/2π of the spectral representation is absorbed by the
                // plane-wave identity behind the stationary-phase step, so no
                // 2π appears here (unlike f₂, whose 2π comes from the 1/2π
                // plane-wave normalization of ψ)
                bracket += line.coupling * inner;
            }
        }
        Ok(-sqrt_i() / (8.0 * PI * k).sqrt() * bracket)
    }
}
