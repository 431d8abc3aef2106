//! Defect configurations, wave parameters and validation.

use num_complex::Complex64;

use crate::error::{Result, ScatterError};

/// A zero-range defect at `position` with renormalized coupling `z̃`.
///
/// Zero coupling is allowed and means a transparent defect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointDefect {
    pub position: [f64; 2],
    pub coupling_renorm: Complex64,
}

impl PointDefect {
    pub fn new(x: f64, y: f64, coupling_renorm: Complex64) -> Self {
        Self { position: [x, y], coupling_renorm }
    }
}

/// A delta interaction supported on the vertical line `x = b` with coupling
/// `𝔤` (units 1/length).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineDefect {
    pub x_position: f64,
    pub coupling: Complex64,
}

impl LineDefect {
    pub fn new(b: f64, coupling: Complex64) -> Self {
        Self { x_position: b, coupling }
    }
}

/// Numerical tolerances, overridable per run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative threshold for linear-algebra singularity flags.
    pub rel_tol: f64,
    /// Target absolute error for spectral and 2D quadrature.
    pub quad_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rel_tol: 1e-10, quad_tol: 1e-8 }
    }
}

/// A validated collection of point and line defects.
///
/// Construct with [`Configuration::new`], which enforces pairwise-distinct
/// positions and the requirement that no point defect lies on a line defect.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    points: Vec<PointDefect>,
    lines: Vec<LineDefect>,
    /// Minimum over (n, j) of |a_nx - b_j|; `None` when either list is empty.
    ell: Option<f64>,
    pub tolerances: Tolerances,
}

impl Configuration {
    pub fn new(points: Vec<PointDefect>, lines: Vec<LineDefect>) -> Result<Self> {
        Self::with_tolerances(points, lines, Tolerances::default())
    }

    pub fn with_tolerances(
        points: Vec<PointDefect>,
        lines: Vec<LineDefect>,
        tolerances: Tolerances,
    ) -> Result<Self> {
        for (n, p) in points.iter().enumerate() {
            if !(p.position[0].is_finite() && p.position[1].is_finite()) {
                return Err(ScatterError::NonFinite(format!("point {n} position")));
            }
            if !(p.coupling_renorm.re.is_finite() && p.coupling_renorm.im.is_finite()) {
                return Err(ScatterError::NonFinite(format!("point {n} coupling")));
            }
        }
        for (j, l) in lines.iter().enumerate() {
            if !l.x_position.is_finite() {
                return Err(ScatterError::NonFinite(format!("line {j} position")));
            }
            if !(l.coupling.re.is_finite() && l.coupling.im.is_finite()) {
                return Err(ScatterError::NonFinite(format!("line {j} coupling")));
            }
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i].position == points[j].position {
                    return Err(ScatterError::DuplicatePoint(i, j));
                }
            }
        }
        for i in 0..lines.len() {
            for j in (i + 1)..lines.len() {
                if lines[i].x_position == lines[j].x_position {
                    return Err(ScatterError::DuplicateLine(i, j));
                }
            }
        }
        for (n, p) in points.iter().enumerate() {
            for (j, l) in lines.iter().enumerate() {
                if p.position[0] == l.x_position {
                    return Err(ScatterError::PointOnLine(n, j));
                }
            }
        }
        let ell = if points.is_empty() || lines.is_empty() {
            None
        } else {
            let mut m = f64::INFINITY;
            for p in &points {
                for l in &lines {
                    m = m.min((p.position[0] - l.x_position).abs());
                }
            }
            Some(m)
        };
        Ok(Self { points, lines, ell, tolerances })
    }

    pub fn points(&self) -> &[PointDefect] {
        &self.points
    }

    pub fn lines(&self) -> &[LineDefect] {
        &self.lines
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn num_lines(&self) -> usize {
        self.lines.len()
    }

    /// Minimum point-to-line horizontal separation; `None` if `N = 0` or `J = 0`.
    pub fn ell(&self) -> Option<f64> {
        self.ell
    }

    /// `k·ℓ`, the large parameter of the mixed approximation; `+∞` when the
    /// point and line subsystems do not couple.
    pub fn kl_parameter(&self, wave: &WaveParams) -> f64 {
        match self.ell {
            Some(ell) => wave.k * ell,
            None => f64::INFINITY,
        }
    }
}

/// Incident plane-wave parameters: wavenumber `k > 0` and direction
/// `theta_in` (radians, measured from the +x axis).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveParams {
    pub k: f64,
    pub theta_in: f64,
}

impl WaveParams {
    pub fn new(k: f64, theta_in: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() || !theta_in.is_finite() {
            return Err(ScatterError::NonFinite(format!("wave params k={k} theta={theta_in}")));
        }
        Ok(Self { k, theta_in })
    }

    /// Cartesian incident wave vector `(k cos θ, k sin θ)`.
    pub fn kvec(&self) -> [f64; 2] {
        [self.k * self.theta_in.cos(), self.k * self.theta_in.sin()]
    }

    pub fn kx(&self) -> f64 {
        self.k * self.theta_in.cos()
    }

    pub fn ky(&self) -> f64 {
        self.k * self.theta_in.sin()
    }

    /// Outgoing wave vector for scattering angle `theta_out`.
    pub fn kvec_out(&self, theta_out: f64) -> [f64; 2] {
        [self.k * theta_out.cos(), self.k * theta_out.sin()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn validates_and_computes_ell() {
        let cfg = Configuration::new(
            vec![PointDefect::new(0.0, 0.0, c(1.0, 0.0))],
            vec![LineDefect::new(5.0, c(1.0, 0.0))],
        )
        .unwrap();
        assert_eq!(cfg.ell(), Some(5.0));
    }

    #[test]
    fn rejects_point_on_line() {
        let err = Configuration::new(
            vec![PointDefect::new(5.0, 1.0, c(1.0, 0.0))],
            vec![LineDefect::new(5.0, c(1.0, 0.0))],
        )
        .unwrap_err();
        assert_eq!(err, ScatterError::PointOnLine(0, 0));
    }

    #[test]
    fn rejects_duplicate_lines() {
        let err = Configuration::new(
            vec![],
            vec![LineDefect::new(0.0, c(1.0, 0.0)), LineDefect::new(0.0, c(2.0, 0.0))],
        )
        .unwrap_err();
        assert_eq!(err, ScatterError::DuplicateLine(0, 1));
    }

    #[test]
    fn kl_parameter_cases() {
        let wave = WaveParams::new(1.0, 0.0).unwrap();
        let cfg = Configuration::new(
            vec![PointDefect::new(-20.0, 0.0, c(1.0, 0.0))],
            vec![LineDefect::new(0.0, c(1.0, 0.0))],
        )
        .unwrap();
        assert_eq!(cfg.kl_parameter(&wave), 20.0);

        let lines_only =
            Configuration::new(vec![], vec![LineDefect::new(0.0, c(1.0, 0.0))]).unwrap();
        assert_eq!(lines_only.kl_parameter(&wave), f64::INFINITY);

        let wave2 = WaveParams::new(2.0, 0.0).unwrap();
        let cfg2 = Configuration::new(
            vec![PointDefect::new(-3.0, 0.0, c(1.0, 0.0))],
            vec![LineDefect::new(1.0, c(1.0, 0.0)), LineDefect::new(10.0, c(1.0, 0.0))],
        )
        .unwrap();
        assert_eq!(cfg2.kl_parameter(&wave2), 8.0);
    }

    #[test]
    fn ell_invariant_under_y_translation_and_order() {
        let pts = vec![
            PointDefect::new(-3.0, 1.0, c(1.0, 0.0)),
            PointDefect::new(-7.0, -2.0, c(0.5, 0.0)),
        ];
        let lns = vec![LineDefect::new(1.0, c(1.0, 0.0)), LineDefect::new(4.0, c(2.0, 0.0))];
        let base = Configuration::new(pts.clone(), lns.clone()).unwrap();
        let shifted: Vec<_> = pts
            .iter()
            .map(|p| PointDefect::new(p.position[0], p.position[1] + 11.5, p.coupling_renorm))
            .collect();
        let cfg_shift = Configuration::new(shifted, lns.clone()).unwrap();
        assert_eq!(base.ell(), cfg_shift.ell());

        let mut rp = pts.clone();
        rp.reverse();
        let mut rl = lns.clone();
        rl.reverse();
        let cfg_rev = Configuration::new(rp, rl).unwrap();
        assert_eq!(base.ell(), cfg_rev.ell());
    }

    #[test]
    fn wave_kvec_norm() {
        let wave = WaveParams::new(2.5, 1.2).unwrap();
        let kv = wave.kvec();
        assert!(((kv[0].powi(2) + kv[1].powi(2)).sqrt() - 2.5).abs() < 1e-14);
    }
}
