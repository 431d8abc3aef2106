//! First-Born response of the defect-dressed system to a weak localized
//! potential `δV`: the amplitude correction `delta_f`, the corrected field
//! `born_psi`, and the geometric potential induced by a gently curved
//! surface patch.

use num_complex::Complex64;
use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Result, ScatterError};
use crate::fullgreens::GreensSolver;
use crate::linescatter::LineSolver;
use crate::model::{Configuration, WaveParams};
use crate::quadrature::integrate_2d;

#[cfg(test)]
fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

pub type Sampler = Arc<dyn Fn([f64; 2]) -> Complex64 + Send + Sync>;

/// A localized perturbing potential with compact rectangular support.
#[derive(Clone)]
pub struct LocalPotential {
    sampler: Sampler,
    /// `[x0, x1, y0, y1]`; the sampler is treated as zero outside.
    pub support: [f64; 4],
}

impl LocalPotential {
    pub fn new(sampler: Sampler, support: [f64; 4]) -> Self {
        Self { sampler, support }
    }

    /// Gaussian bump `A exp(-|x - c|²/(2σ²))`, supported on `c ± 6σ`.
    pub fn gaussian_bump(center: [f64; 2], sigma: f64, amplitude: Complex64) -> Self {
        assert!(sigma > 0.0);
        let support = [
            center[0] - 6.0 * sigma,
            center[0] + 6.0 * sigma,
            center[1] - 6.0 * sigma,
            center[1] + 6.0 * sigma,
        ];
        let sampler: Sampler = Arc::new(move |x: [f64; 2]| {
            let dx = x[0] - center[0];
            let dy = x[1] - center[1];
            amplitude * (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
        });
        Self { sampler, support }
    }

    pub fn eval(&self, x: [f64; 2]) -> Complex64 {
        let [x0, x1, y0, y1] = self.support;
        if x[0] < x0 || x[0] > x1 || x[1] < y0 || x[1] > y1 {
            Complex64::default()
        } else {
            (self.sampler)(x)
        }
    }

    /// Scaled copy `α δV`.
    pub fn scaled(&self, alpha: Complex64) -> Self {
        let inner = self.sampler.clone();
        Self {
            sampler: Arc::new(move |x| alpha * inner(x)),
            support: self.support,
        }
    }
}

/// Run `g` through the 2D quadrature, converting any integrand error into a
/// quadrature failure.
fn integrate_2d_result<G>(g: G, rect: [f64; 4], tol: f64) -> Result<Complex64>
where
    G: Fn(f64, f64) -> Result<Complex64>,
{
    let failure: RefCell<Option<ScatterError>> = RefCell::new(None);
    let wrapped = |x: f64, y: f64| -> Complex64 {
        if failure.borrow().is_some() {
            return Complex64::default();
        }
        match g(x, y) {
            Ok(v) => v,
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                Complex64::default()
            }
        }
    };
    let value = integrate_2d(&wrapped, rect, tol)?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// First-Born correction to the regular scattering amplitude at `theta_out`:
/// `δf = -(1/2)√(2πi/k) ∫ B(θ', x') δV(x') ψ₂(x') d²x'`, where `B` is the
/// far-field bracket of the full Green's function.
pub fn delta_f(
    config: &Configuration,
    wave: &WaveParams,
    theta_out: f64,
    pot: &LocalPotential,
) -> Result<Complex64> {
    let gsolver = GreensSolver::new(config, wave.k)?;
    let lsolver = LineSolver::new(config, wave)?;
    let tol = config.tolerances.quad_tol;
    let integral = integrate_2d_result(
        |x, y| {
            let xp = [x, y];
            let v = pot.eval(xp);
            if v.norm() == 0.0 {
                return Ok(Complex64::default());
            }
            let far = gsolver.column(xp)?.farfield(theta_out)?;
            Ok(far * v * lsolver.psi2(xp)?)
        },
        pot.support,
        tol,
    )?;
    // 2π converts the Green's-function far field into the f convention
    // psi ~ (1/2π)(e^{ik·x} + f e^{ikr}/√r)
    Ok(2.0 * PI * integral)
}

/// Field corrected to first Born order:
/// `ψ(x) = ψ₂(x) + ∫ G(x, x') δV(x') ψ₂(x') d²x'`.
pub fn born_psi(
    config: &Configuration,
    wave: &WaveParams,
    x: [f64; 2],
    pot: &LocalPotential,
) -> Result<Complex64> {
    let gsolver = GreensSolver::new(config, wave.k)?;
    let lsolver = LineSolver::new(config, wave)?;
    let tol = config.tolerances.quad_tol;
    let correction = integrate_2d_result(
        |xs, ys| {
            let xp = [xs, ys];
            let v = pot.eval(xp);
            if v.norm() == 0.0 {
                return Ok(Complex64::default());
            }
            Ok(gsolver.greens_full(x, xp)? * v * lsolver.psi2(xp)?)
        },
        pot.support,
        tol,
    )?;
    Ok(lsolver.psi2(x)? + correction)
}

pub type HeightFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A gently curved surface patch `z = h(x, y)` inducing a geometric
/// potential `-2 (λ₁ K + λ₂ M²)` from its Gaussian (`K`) and mean (`M`)
/// curvature, with `M = +1/R` at the apex of a spherical bump.
#[derive(Clone)]
pub struct SurfacePatch {
    pub height: HeightFn,
    pub support: [f64; 4],
    pub lambda1: f64,
    pub lambda2: f64,
    /// central-difference step for the curvature derivatives
    pub fd_step: f64,
}

/// Curvatures `(K, M)` of the graph of `h` by central differences.
fn curvatures(h: &HeightFn, x: f64, y: f64, step: f64) -> (f64, f64) {
    let hx = (h(x + step, y) - h(x - step, y)) / (2.0 * step);
    let hy = (h(x, y + step) - h(x, y - step)) / (2.0 * step);
    let hxx = (h(x + step, y) - 2.0 * h(x, y) + h(x - step, y)) / (step * step);
    let hyy = (h(x, y + step) - 2.0 * h(x, y) + h(x, y - step)) / (step * step);
    let hxy = (h(x + step, y + step) - h(x + step, y - step) - h(x - step, y + step)
        + h(x - step, y - step))
        / (4.0 * step * step);
    let w = 1.0 + hx * hx + hy * hy;
    let gauss = (hxx * hyy - hxy * hxy) / (w * w);
    // sign such that a bump (h curving downward away from its apex) has
    // positive mean curvature
    let mean = -((1.0 + hx * hx) * hyy - 2.0 * hx * hy * hxy + (1.0 + hy * hy) * hxx)
        / (2.0 * w.powf(1.5));
    (gauss, mean)
}

/// Build the geometric potential of a surface patch.
///
/// Fails with `NonFlatBoundary` if `|∇h|` exceeds 0.01 anywhere on the
/// support boundary: the patch must merge smoothly into the flat plane.
pub fn geometric_potential(patch: &SurfacePatch) -> Result<LocalPotential> {
    let [x0, x1, y0, y1] = patch.support;
    assert!(x1 > x0 && y1 > y0 && patch.fd_step > 0.0);
    let step = patch.fd_step;
    let samples = 64;
    let mut worst = 0.0f64;
    for i in 0..=samples {
        let fx = x0 + (x1 - x0) * i as f64 / samples as f64;
        let fy = y0 + (y1 - y0) * i as f64 / samples as f64;
        for (px, py) in [(fx, y0), (fx, y1), (x0, fy), (x1, fy)] {
            let hx = ((patch.height)(px + step, py) - (patch.height)(px - step, py)) / (2.0 * step);
            let hy = ((patch.height)(px, py + step) - (patch.height)(px, py - step)) / (2.0 * step);
            worst = worst.max((hx * hx + hy * hy).sqrt());
        }
    }
    if worst > 0.01 {
        return Err(ScatterError::NonFlatBoundary(worst));
    }
    let h = patch.height.clone();
    let (l1, l2) = (patch.lambda1, patch.lambda2);
    let sampler: Sampler = Arc::new(move |x: [f64; 2]| {
        let (gauss, mean) = curvatures(&h, x[0], x[1], step);
        Complex64::new(-2.0 * (l1 * gauss + l2 * mean * mean), 0.0)
    });
    Ok(LocalPotential::new(sampler, patch.support))
}
