//! Exact solution for point defects only: the renormalized coupling matrix
//! `A`, the Green's function `G1`, the scattering state `psi1`, the amplitude
//! `f1`, and spectral-singularity detection on the real `k` axis.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Result, ScatterError};
use crate::model::{Configuration, WaveParams};
use crate::specfun::hankel0_first;
use crate::sqrt_i;

/// Free out-going Green's function `G0(x, x') = -(i/4) H0^(1)(k |x - x'|)`.
pub fn greens0(x: [f64; 2], xp: [f64; 2], k: f64) -> Result<Complex64> {
    let r = ((x[0] - xp[0]).powi(2) + (x[1] - xp[1]).powi(2)).sqrt();
    if r == 0.0 {
        return Err(ScatterError::CoincidentPoints);
    }
    Ok(Complex64::new(0.0, -0.25) * hankel0_first(k * r)?)
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// The `N x N` point-defect matrix with `A_nn = 1/z̃_n + i/4` and
/// `A_mn = (i/4) H0^(1)(k |a_m - a_n|)` off the diagonal, together with its
/// cached inverse.
///
/// Defects with exactly zero coupling are transparent and are dropped from
/// the matrix instead of being inverted.
#[derive(Debug, Clone)]
pub struct AMatrix {
    pub k: f64,
    entries: DMatrix<Complex64>,
    inv: DMatrix<Complex64>,
    det: Complex64,
    /// Positions of the active (nonzero-coupling) defects.
    positions: Vec<[f64; 2]>,
    couplings: Vec<Complex64>,
}

/// Raw determinant of `A(k)` plus the singularity threshold, without
/// requiring invertibility. Used by the singularity scanner.
pub fn det_a(config: &Configuration, k: f64) -> Result<(Complex64, f64)> {
    let (entries, _, _) = assemble(config, k)?;
    let n = entries.nrows();
    if n == 0 {
        return Ok((Complex64::new(1.0, 0.0), 0.0));
    }
    let scale = matrix_norm(&entries).max(0.25);
    let det = entries.lu().determinant();
    Ok((det, 1e-8 * scale.powi(n as i32)))
}

fn matrix_norm(m: &DMatrix<Complex64>) -> f64 {
    // max row sum
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn assemble(
    config: &Configuration,
    k: f64,
) -> Result<(DMatrix<Complex64>, Vec<[f64; 2]>, Vec<Complex64>)> {
    let active: Vec<_> = config
        .points()
        .iter()
        .filter(|p| p.coupling_renorm.norm() != 0.0)
        .collect();
    let n = active.len();
    let mut m = DMatrix::from_element(n, n, Complex64::default());
    let quarter_i = Complex64::new(0.0, 0.25);
    for a in 0..n {
        for b in 0..n {
            m[(a, b)] = if a == b {
                active[a].coupling_renorm.inv() + quarter_i
            } else {
                quarter_i
                    * hankel0_first(
                        k * ((active[a].position[0] - active[b].position[0]).powi(2)
                            + (active[a].position[1] - active[b].position[1]).powi(2))
                        .sqrt(),
                    )?
            };
        }
    }
    let positions = active.iter().map(|p| p.position).collect();
    let couplings = active.iter().map(|p| p.coupling_renorm).collect();
    Ok((m, positions, couplings))
}

impl AMatrix {
    pub fn build(config: &Configuration, k: f64) -> Result<Self> {
        let (entries, positions, couplings) = assemble(config, k)?;
        let n = entries.nrows();
        if n == 0 {
            return Ok(Self {
                k,
                entries: DMatrix::from_element(0, 0, Complex64::default()),
                inv: DMatrix::from_element(0, 0, Complex64::default()),
                det: Complex64::new(1.0, 0.0),
                positions,
                couplings,
            });
        }
        // floor at the i/4 regulator so an exactly-zero entry still trips
        // the singularity threshold
        let scale = matrix_norm(&entries).max(0.25);
        let lu = entries.clone().lu();
        let det = lu.determinant();
        if det.norm() < 1e-8 * scale.powi(n as i32) {
            return Err(ScatterError::SingularA(det.norm()));
        }
        let inv = lu.try_inverse().ok_or(ScatterError::SingularA(det.norm()))?;
        Ok(Self { k, entries, inv, det, positions, couplings })
    }

    pub fn n_active(&self) -> usize {
        self.positions.len()
    }

    pub fn det(&self) -> Complex64 {
        self.det
    }

    pub fn entry(&self, m: usize, n: usize) -> Complex64 {
        self.entries[(m, n)]
    }

    pub fn inv_entry(&self, n: usize, m: usize) -> Complex64 {
        self.inv[(n, m)]
    }

    pub fn position(&self, n: usize) -> [f64; 2] {
        self.positions[n]
    }

    pub fn coupling(&self, n: usize) -> Complex64 {
        self.couplings[n]
    }

    /// `G1(x, x') = G0(x, x') + Σ_{nm} G0(x, a_n) A^{-1}_{nm} G0(x', a_m)`.
    pub fn greens1(&self, x: [f64; 2], xp: [f64; 2]) -> Result<Complex64> {
        let mut g = greens0(x, xp, self.k)?;
        let n = self.n_active();
        if n == 0 {
            return Ok(g);
        }
        let gx: Vec<Complex64> =
            self.positions.iter().map(|&a| greens0(x, a, self.k)).collect::<Result<_>>()?;
        let gxp: Vec<Complex64> =
            self.positions.iter().map(|&a| greens0(xp, a, self.k)).collect::<Result<_>>()?;
        for a in 0..n {
            for b in 0..n {
                g += gx[a] * self.inv[(a, b)] * gxp[b];
            }
        }
        Ok(g)
    }

    /// Scattering state for incident plane wave `e^{ik·x}/2π`:
    /// `psi1(x) = (1/2π)[e^{ik·x} + Σ e^{i a_n·k} A^{-1}_{nm} G0(x, a_m)]`.
    pub fn psi1(&self, x: [f64; 2], wave: &WaveParams) -> Result<Complex64> {
        let kvec = wave.kvec();
        let mut sum = cis(dot(kvec, x));
        let n = self.n_active();
        if n > 0 {
            let gx: Vec<Complex64> =
                self.positions.iter().map(|&a| greens0(x, a, self.k)).collect::<Result<_>>()?;
            for a in 0..n {
                let phase = cis(dot(kvec, self.positions[a]));
                for b in 0..n {
                    sum += phase * self.inv[(a, b)] * gx[b];
                }
            }
        }
        Ok(sum / (2.0 * PI))
    }

    /// Point-defect scattering amplitude
    /// `f1 = -√(i/8πk) Σ A^{-1}_{nm} e^{i(k·a_n - k'·a_m)}`.
    pub fn f1(&self, theta_out: f64, wave: &WaveParams) -> Complex64 {
        let kvec = wave.kvec();
        let kout = wave.kvec_out(theta_out);
        let mut sum = Complex64::default();
        for a in 0..self.n_active() {
            for b in 0..self.n_active() {
                sum += self.inv[(a, b)]
                    * cis(dot(kvec, self.positions[a]) - dot(kout, self.positions[b]));
            }
        }
        -sqrt_i() / (8.0 * PI * self.k).sqrt() * sum
    }
}

/// A refined spectral-singularity candidate: `|det A(k)|` has a local
/// minimum below threshold at `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularityHit {
    pub k: f64,
    pub residual: f64,
}

/// Scan `|det A(k)|` on `grid` points over `k_range` and refine local minima
/// below the singularity threshold.
pub fn scan_singularities_a(
    config: &Configuration,
    k_range: (f64, f64),
    grid: usize,
) -> Result<Vec<SingularityHit>> {
    assert!(grid >= 2 && k_range.0 > 0.0 && k_range.1 > k_range.0);
    let ks: Vec<f64> = (0..grid)
        .map(|i| k_range.0 + (k_range.1 - k_range.0) * i as f64 / (grid - 1) as f64)
        .collect();
    let mut dets = Vec::with_capacity(grid);
    let mut thresholds = Vec::with_capacity(grid);
    for &k in &ks {
        let (d, thr) = det_a(config, k)?;
        dets.push(d.norm());
        thresholds.push(thr);
    }
    let mut hits = Vec::new();
    if dets.iter().zip(&thresholds).all(|(d, t)| d < t) {
        // k-independent singularity (e.g. a single defect with 1/z + i/4 = 0)
        for (i, &k) in ks.iter().enumerate() {
            hits.push(SingularityHit { k, residual: dets[i] });
        }
        return Ok(hits);
    }
    for i in 1..grid - 1 {
        if dets[i] <= dets[i - 1] && dets[i] <= dets[i + 1] && dets[i] < thresholds[i] {
            let f = |k: f64| det_a(config, k).map(|(d, _)| d.norm());
            let (k_min, residual) = golden_min(&f, ks[i - 1], ks[i + 1])?;
            hits.push(SingularityHit { k: k_min, residual });
        }
    }
    Ok(hits)
}

/// Golden-section minimization of a positive function on `[a, b]`.
pub(crate) fn golden_min<F>(f: &F, mut a: f64, mut b: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d)?;
        }
    }
    let mid = 0.5 * (a + b);
    Ok((mid, f(mid)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PointDefect;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cfg_points(pts: &[([f64; 2], Complex64)]) -> Configuration {
        Configuration::new(
            pts.iter().map(|&(p, z)| PointDefect::new(p[0], p[1], z)).collect(),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn single_defect_entries() {
        let cfg = cfg_points(&[([0.0, 0.0], c(4.0, 0.0))]);
        let a = AMatrix::build(&cfg, 1.0).unwrap();
        assert!((a.entry(0, 0) - c(0.25, 0.25)).norm() < 1e-15);
    }

    #[test]
    fn singular_coupling_flags() {
        let cfg = cfg_points(&[([0.0, 0.0], c(0.0, 4.0))]);
        // 1/(4i) + i/4 = 0
        assert!(matches!(AMatrix::build(&cfg, 1.0), Err(ScatterError::SingularA(_))));
    }

    #[test]
    fn two_defect_off_diagonal_is_hankel() {
        let cfg = cfg_points(&[([0.0, 0.0], c(4.0, 0.0)), ([1.0, 0.0], c(2.0, 0.0))]);
        let a = AMatrix::build(&cfg, 1.0).unwrap();
        let expect = Complex64::new(0.0, 0.25) * hankel0_first(1.0).unwrap();
        assert!((a.entry(0, 1) - expect).norm() < 1e-12);
        assert_eq!(a.entry(0, 1), a.entry(1, 0));
    }

    #[test]
    fn a_inverse_symmetric() {
        let cfg = cfg_points(&[
            ([0.0, 0.0], c(4.0, 0.5)),
            ([1.3, -0.4], c(2.0, 0.0)),
            ([-0.7, 2.1], c(-1.5, 0.2)),
        ]);
        let a = AMatrix::build(&cfg, 1.7).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((a.inv_entry(i, j) - a.inv_entry(j, i)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_coupling_defects_dropped() {
        let cfg = cfg_points(&[([0.0, 0.0], c(0.0, 0.0)), ([2.0, 0.0], c(3.0, 0.0))]);
        let a = AMatrix::build(&cfg, 1.0).unwrap();
        assert_eq!(a.n_active(), 1);
        // greens1 and psi1 see only the active defect
        let cfg_ref = cfg_points(&[([2.0, 0.0], c(3.0, 0.0))]);
        let a_ref = AMatrix::build(&cfg_ref, 1.0).unwrap();
        let x = [0.5, 1.5];
        let xp = [-1.0, 0.3];
        assert!((a.greens1(x, xp).unwrap() - a_ref.greens1(x, xp).unwrap()).norm() < 1e-14);
    }

    #[test]
    fn greens1_free_limit_and_symmetry() {
        let cfg = cfg_points(&[]);
        let a = AMatrix::build(&cfg, 1.0).unwrap();
        let x = [0.3, 0.8];
        let xp = [-1.2, 0.1];
        assert_eq!(a.greens1(x, xp).unwrap(), greens0(x, xp, 1.0).unwrap());

        let cfg = cfg_points(&[([0.0, 0.0], c(4.0, 1.0)), ([1.0, 1.0], c(-2.0, 0.0))]);
        let a = AMatrix::build(&cfg, 1.3).unwrap();
        let pairs = [([0.4, -0.9], [2.0, 0.7]), ([-1.5, 0.2], [0.6, 1.9]), ([3.0, 3.0], [-2.0, 1.0])];
        for (x, xp) in pairs {
            let g = a.greens1(x, xp).unwrap();
            let gs = a.greens1(xp, x).unwrap();
            assert!((g - gs).norm() < 1e-12, "reciprocity at {x:?} {xp:?}");
        }
    }

    #[test]
    fn greens1_vanishing_coupling_tends_to_greens0() {
        let x = [0.4, -0.9];
        let xp = [2.0, 0.7];
        let g0 = greens0(x, xp, 1.0).unwrap();
        for &eps in &[1e-3, 1e-6] {
            let cfg = cfg_points(&[([0.0, 0.0], c(eps, 0.0))]);
            let a = AMatrix::build(&cfg, 1.0).unwrap();
            let g = a.greens1(x, xp).unwrap();
            assert!((g - g0).norm() < 5.0 * eps);
        }
    }

    #[test]
    fn resolvent_identity_e4() {
        // G1(x,x') = G0(x,x') + sum_n G0(x,a_n) X_n(x'), where the
        // renormalized boundary values X_n solve A X = [G0(a_m, x')].
        // X is obtained by an LU solve, independent of the cached inverse.
        let cfg = cfg_points(&[([0.0, 0.0], c(4.0, 0.0)), ([2.0, 1.0], c(-1.0, 0.5))]);
        let k = 1.1;
        let a = AMatrix::build(&cfg, k).unwrap();
        let n_act = a.n_active();
        let mut mat = DMatrix::from_element(n_act, n_act, Complex64::default());
        for i in 0..n_act {
            for j in 0..n_act {
                mat[(i, j)] = a.entry(i, j);
            }
        }
        let lu = mat.lu();
        let triples = [([0.7, -0.3], [3.0, 2.0]), ([-1.0, 1.0], [1.0, -2.0]), ([0.1, 4.0], [-3.0, 0.2])];
        for (x, xp) in triples {
            let rhs_vec = nalgebra::DVector::from_iterator(
                n_act,
                (0..n_act).map(|m| greens0(a.position(m), xp, k).unwrap()),
            );
            let x_sol = lu.solve(&rhs_vec).unwrap();
            let lhs = a.greens1(x, xp).unwrap();
            let mut rhs = greens0(x, xp, k).unwrap();
            for n in 0..n_act {
                rhs += greens0(x, a.position(n), k).unwrap() * x_sol[n];
            }
            assert!((lhs - rhs).norm() < 1e-8, "residual {}", (lhs - rhs).norm());
        }
    }

    #[test]
    fn psi1_free_is_plane_wave() {
        let cfg = cfg_points(&[]);
        let wave = WaveParams::new(1.0, 0.3).unwrap();
        let a = AMatrix::build(&cfg, wave.k).unwrap();
        let x = [1.0, -2.0];
        let kvec = wave.kvec();
        let expect = cis(dot(kvec, x)) / (2.0 * PI);
        assert!((a.psi1(x, &wave).unwrap() - expect).norm() < 1e-15);
    }

    #[test]
    fn f1_single_defect_isotropic_and_explicit() {
        let z = c(4.0, 0.0);
        let cfg = cfg_points(&[([0.0, 0.0], z)]);
        let wave = WaveParams::new(1.0, 0.0).unwrap();
        let a = AMatrix::build(&cfg, wave.k).unwrap();
        let f0 = a.f1(0.0, &wave);
        for i in 1..16 {
            let th = i as f64 * 0.4;
            assert!((a.f1(th, &wave).norm() - f0.norm()).abs() < 1e-14);
        }
        let expect = -sqrt_i() / (8.0 * PI).sqrt() * (z.inv() + c(0.0, 0.25)).inv();
        assert!((f0 - expect).norm() < 1e-14);
    }

    #[test]
    fn f1_rotation_invariance() {
        let rot = 0.7f64;
        let (s, co) = rot.sin_cos();
        let pts = [([1.0, 0.5], c(4.0, 0.0)), ([-0.5, 2.0], c(2.0, -0.3))];
        let rotated: Vec<_> = pts
            .iter()
            .map(|&(p, z)| ([co * p[0] - s * p[1], s * p[0] + co * p[1]], z))
            .collect();
        let wave = WaveParams::new(1.2, 0.4).unwrap();
        let wave_rot = WaveParams::new(1.2, 0.4 + rot).unwrap();
        let a = AMatrix::build(&cfg_points(&pts), wave.k).unwrap();
        let b = AMatrix::build(&cfg_points(&rotated), wave.k).unwrap();
        for i in 0..8 {
            let th = i as f64 * 0.75;
            let fa = a.f1(th, &wave);
            let fb = b.f1(th + rot, &wave_rot);
            assert!((fa - fb).norm() < 1e-12);
        }
    }

    #[test]
    fn psi1_far_field_matches_f1() {
        let cfg = cfg_points(&[([0.0, 0.0], c(4.0, 0.0)), ([1.5, -0.7], c(-2.0, 0.0))]);
        let wave = WaveParams::new(1.0, 0.2).unwrap();
        let a = AMatrix::build(&cfg, wave.k).unwrap();
        let theta = 1.1f64;
        let f1 = a.f1(theta, &wave);
        let mut resid = Vec::new();
        for &r in &[50.0, 100.0, 200.0] {
            let x = [r * theta.cos(), r * theta.sin()];
            let psi = a.psi1(x, &wave).unwrap();
            let kvec = wave.kvec();
            let asym = (cis(dot(kvec, x)) + f1 * cis(wave.k * r) / r.sqrt()) / (2.0 * PI);
            resid.push((psi - asym).norm());
        }
        // residual should fall off like r^{-3/2}
        let ratio = resid[2] / resid[0];
        assert!(ratio < 0.35, "residuals {resid:?}");
    }

    #[test]
    fn scan_finds_no_singularity_for_real_couplings() {
        let cfg = cfg_points(&[([0.0, 0.0], c(4.0, 0.0))]);
        let hits = scan_singularities_a(&cfg, (0.5, 3.0), 40).unwrap();
        assert!(hits.is_empty());
    }

    #[test]
    fn scan_flags_k_independent_singularity() {
        let cfg = cfg_points(&[([0.0, 0.0], c(0.0, 4.0))]);
        let hits = scan_singularities_a(&cfg, (0.5, 3.0), 25).unwrap();
        assert_eq!(hits.len(), 25);
    }

    #[test]
    fn scan_refines_gain_singularity_against_dense_grid() {
        // two defects with gain; locate a det-A zero by scan and check it
        // against a much denser grid minimum
        let cfg = cfg_points(&[([0.0, 0.0], c(0.1, 3.9)), ([1.0, 0.0], c(0.1, 3.9))]);
        let range = (0.2, 4.0);
        let hits = scan_singularities_a(&cfg, range, 200).unwrap();
        if hits.is_empty() {
            // configuration may genuinely lack a real-k zero; fall back to
            // asserting the dense scan agrees
            let mut min_v = f64::INFINITY;
            for i in 0..4000 {
                let k = range.0 + (range.1 - range.0) * i as f64 / 3999.0;
                let (d, thr) = det_a(&cfg, k).unwrap();
                if d.norm() < thr {
                    min_v = min_v.min(d.norm());
                }
            }
            assert!(min_v.is_infinite(), "dense scan found a zero the scan missed");
        } else {
            for hit in &hits {
                let mut best = (0.0, f64::INFINITY);
                for i in 0..40000 {
                    let k = range.0 + (range.1 - range.0) * i as f64 / 39999.0;
                    let (d, _) = det_a(&cfg, k).unwrap();
                    if d.norm() < best.1 {
                        best = (k, d.norm());
                    }
                }
                assert!((hit.k - best.0).abs() < 2.0 * (range.1 - range.0) / 200.0);
            }
        }
    }
}
