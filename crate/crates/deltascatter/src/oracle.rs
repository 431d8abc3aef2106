//! Independent brute-force checks: a 1D transfer-matrix solver for pure line
//! configurations and a dense real-space solver for the coupled
//! point-and-line integral equation on a truncated, tapered window.
//!
//! Both deliberately avoid the spectral machinery of the main solver so they
//! can serve as oracles for it.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Result, ScatterError};
use crate::model::{Configuration, WaveParams};
use crate::pointscatter::{greens0, AMatrix};
use crate::specfun::{bessel_j0, hankel0_first};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// Plane-wave reflection and transmission coefficients of a line stack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionTransmission {
    pub r: Complex64,
    pub t: Complex64,
}

/// Exact 1D solution for `J` parallel delta lines by transfer matrices in
/// the longitudinal coordinate. Point defects in `config` are ignored.
///
/// Conventions: incident `e^{i(k_x x + k_y y)}`, reflected `r e^{-ik_x x}`
/// on the left, transmitted `t e^{ik_x x}` on the right, with absolute
/// (unshifted) phases.
pub fn transfer_matrix(config: &Configuration, wave: &WaveParams) -> Result<ReflectionTransmission> {
    let cos_in = wave.theta_in.cos();
    if cos_in.abs() < 1e-6 {
        return Err(ScatterError::GrazingIncidence(cos_in.abs()));
    }
    let kx = wave.k * cos_in.abs();
    let mut lines: Vec<_> = config.lines().to_vec();
    lines.sort_by(|p, q| p.x_position.total_cmp(&q.x_position));

    let mut m = Matrix2::identity();
    let two_ikx = Complex64::new(0.0, 2.0 * kx);
    for line in &lines {
        // continuity of psi plus the derivative jump psi'(b+) - psi'(b-) = g psi(b)
        let c = line.coupling / two_ikx;
        let local = Matrix2::new(
            Complex64::new(1.0, 0.0) + c,
            c * cis(-2.0 * kx * line.x_position),
            -c * cis(2.0 * kx * line.x_position),
            Complex64::new(1.0, 0.0) - c,
        );
        m = local * m;
    }
    // (t, 0)^T = M (1, r)^T; each factor has unit determinant, so t = 1/M22
    if m[(1, 1)].norm() < 1e-14 {
        return Err(ScatterError::SingularSystem);
    }
    let r = -m[(1, 0)] / m[(1, 1)];
    let t = m[(0, 0)] + m[(0, 1)] * r;
    Ok(ReflectionTransmission { r, t })
}

/// Smooth part of the same-line kernel:
/// `S(Δ) = G0(Δ) - (1/2π) ln Δ · J0(kΔ)`, with `S(0) = -i/4 + (ln(k/2)+γ)/2π`.
fn kernel_smooth_part(delta: f64, k: f64) -> Result<Complex64> {
    if delta == 0.0 {
        return Ok(Complex64::new(0.0, -0.25)
            + Complex64::new(((0.5 * k).ln() + EULER_GAMMA) / (2.0 * PI), 0.0));
    }
    let g0 = Complex64::new(0.0, -0.25) * hankel0_first(k * delta)?;
    Ok(g0 - Complex64::new(delta.ln() * bessel_j0(k * delta)? / (2.0 * PI), 0.0))
}

/// `∫ ln|y - y_m| dy` over the cell of width `h` centered at offset `c`.
fn log_cell_integral(c: f64, h: f64) -> f64 {
    // antiderivative t (ln|t| - 1), odd, with value 0 at t = 0
    let f = |t: f64| if t == 0.0 { 0.0 } else { t * (t.abs().ln() - 1.0) };
    f(c + 0.5 * h) - f(c - 0.5 * h)
}

/// Discretization parameters for [`direct_solve`].
#[derive(Debug, Clone, Copy)]
pub struct DirectSolveParams {
    /// Half-width `Y` of the truncation window `[-Y, Y]` on every line.
    pub half_width: f64,
    /// Number of equal cells per line; nodes sit at cell centers.
    pub cells: usize,
}

/// Inhomogeneous term of the dense solve: a plane wave (scattering state) or
/// a point source at `x'` (Green's function column).
#[derive(Debug, Clone, Copy)]
pub enum Incident {
    Plane(WaveParams),
    Source([f64; 2]),
}

/// Dense solution of the line-restricted integral equation on a grid.
pub struct GridSolution {
    config: Configuration,
    incident: Incident,
    a: AMatrix,
    /// cell-center ordinates, shared by all lines
    pub y: Vec<f64>,
    pub h: f64,
    taper: Vec<f64>,
    /// `psi[j][m]`: the field on line `j` at `y[m]`
    pub psi: Vec<Vec<Complex64>>,
}

/// Solve `ψ = ψ₁ + Σ_j 𝔤_j ∫ G1(x; b_j, y') ψ(b_j, y') dy'` by collocation
/// on cell centers over a truncated window, with the line couplings faded to
/// zero by a cosine taper over the outer 10% of the window.
///
/// The logarithmic short-distance singularity of the same-line kernel is
/// integrated analytically cell by cell (product midpoint rule), so the
/// discretization error is `O(h²)` up to logarithmic factors.
pub fn direct_solve(
    config: &Configuration,
    wave: &WaveParams,
    params: &DirectSolveParams,
) -> Result<GridSolution> {
    direct_solve_incident(config, wave.k, Incident::Plane(*wave), params)
}

/// Dense solve of the Green's-function column with source at `xp`:
/// `G(x, x') = G1(x, x') + Σ_j 𝔤_j ∫ G1(x; b_j, y') G((b_j, y'), x') dy'`.
pub fn direct_solve_greens(
    config: &Configuration,
    k: f64,
    xp: [f64; 2],
    params: &DirectSolveParams,
) -> Result<GridSolution> {
    direct_solve_incident(config, k, Incident::Source(xp), params)
}

fn direct_solve_incident(
    config: &Configuration,
    k: f64,
    incident: Incident,
    params: &DirectSolveParams,
) -> Result<GridSolution> {
    let jn = config.num_lines();
    assert!(jn > 0, "direct_solve requires at least one line defect");
    let half_width = params.half_width;
    let cells = params.cells;
    assert!(half_width > 0.0 && cells >= 8);
    let h = 2.0 * half_width / cells as f64;
    if h * k > 0.2 {
        return Err(ScatterError::ResolutionTooCoarse(h * k));
    }

    let y: Vec<f64> = (0..cells).map(|m| -half_width + (m as f64 + 0.5) * h).collect();
    let ramp = 0.1 * half_width;
    let taper: Vec<f64> = y
        .iter()
        .map(|&ym| {
            let edge_dist = half_width - ym.abs();
            if edge_dist >= ramp {
                1.0
            } else {
                (0.5 * PI * edge_dist / ramp).sin().powi(2)
            }
        })
        .collect();

    let a = AMatrix::build(config, k)?;
    let n_act = a.n_active();
    let lines = config.lines();

    // G0(node, a_n) for every node, for the point-dressing of the kernel
    let mut point_prop = vec![vec![vec![Complex64::default(); n_act]; cells]; jn];
    for j in 0..jn {
        for m in 0..cells {
            for n in 0..n_act {
                point_prop[j][m][n] = greens0([lines[j].x_position, y[m]], a.position(n), k)?;
            }
        }
    }
    let dressed = |j: usize, m: usize, jp: usize, mp: usize| -> Complex64 {
        let mut s = Complex64::default();
        for n in 0..n_act {
            for nn in 0..n_act {
                s += point_prop[j][m][n] * a.inv_entry(n, nn) * point_prop[jp][mp][nn];
            }
        }
        s
    };

    let dim = jn * cells;
    let mut system = DMatrix::from_element(dim, dim, Complex64::default());
    let mut rhs = DVector::from_element(dim, Complex64::default());
    for j in 0..jn {
        for m in 0..cells {
            let row = j * cells + m;
            let node = [lines[j].x_position, y[m]];
            rhs[row] = match incident {
                Incident::Plane(w) => a.psi1(node, &w)?,
                Incident::Source(xp) => a.greens1(node, xp)?,
            };
            system[(row, row)] = Complex64::new(1.0, 0.0);
            for jp in 0..jn {
                let g = lines[jp].coupling;
                if g.norm() == 0.0 {
                    continue;
                }
                let dx = lines[j].x_position - lines[jp].x_position;
                for mp in 0..cells {
                    let col = jp * cells + mp;
                    let kernel = if jp == j {
                        let delta = (y[m] - y[mp]).abs();
                        h * kernel_smooth_part(delta, k)?
                            + bessel_j0_safe(k * delta)? / (2.0 * PI)
                                * log_cell_integral(y[mp] - y[m], h)
                    } else {
                        let dist = (dx * dx + (y[m] - y[mp]).powi(2)).sqrt();
                        h * Complex64::new(0.0, -0.25) * hankel0_first(k * dist)?
                    };
                    let kernel = kernel + h * dressed(j, m, jp, mp);
                    system[(row, col)] -= g * taper[mp] * kernel;
                }
            }
        }
    }

    let lu = system.lu();
    let sol = lu.solve(&rhs).ok_or(ScatterError::SingularSystem)?;
    let psi = (0..jn)
        .map(|j| (0..cells).map(|m| sol[j * cells + m]).collect())
        .collect();
    Ok(GridSolution { config: config.clone(), incident, a, y, h, taper, psi })
}

fn bessel_j0_safe(x: f64) -> Result<f64> {
    if x == 0.0 {
        Ok(1.0)
    } else {
        bessel_j0(x)
    }
}

impl GridSolution {
    /// Reconstruct the field anywhere off the lines from the line values.
    pub fn eval(&self, x: [f64; 2]) -> Result<Complex64> {
        let mut psi = match self.incident {
            Incident::Plane(w) => self.a.psi1(x, &w)?,
            Incident::Source(xp) => self.a.greens1(x, xp)?,
        };
        let lines = self.config.lines();
        for (j, line) in lines.iter().enumerate() {
            if line.coupling.norm() == 0.0 {
                continue;
            }
            for (m, &ym) in self.y.iter().enumerate() {
                let g1 = self.a.greens1(x, [line.x_position, ym])?;
                psi += line.coupling * self.taper[m] * self.h * g1 * self.psi[j][m];
            }
        }
        Ok(psi)
    }

    /// Coupling fade-out factor applied at each node (1 in the interior,
    /// cosine ramp to 0 over the outer 10% of the window).
    pub fn taper(&self) -> &[f64] {
        &self.taper
    }

    /// Index of the node nearest to `y`.
    pub fn nearest_node(&self, y: f64) -> usize {
        let mut best = 0;
        for (m, &ym) in self.y.iter().enumerate() {
            if (ym - y).abs() < (self.y[best] - y).abs() {
                best = m;
            }
        }
        best
    }
}
