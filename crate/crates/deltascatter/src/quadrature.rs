//! Adaptive integration for the spectral `K`-line integrals (integrable
//! `1/√` branch points at `±k`, exponentially decaying evanescent tails) and
//! for 2D perturbation integrals.
//!
//! The branch points are never evaluated: on `[-k, k]` the substitution
//! `K = k sin u` absorbs the `1/√` singularity, and on the tails
//! `K = ±k cosh v` does the same while turning the evanescent decay into a
//! sharp exponential cutoff in `v`.

use num_complex::Complex64;

use crate::error::{Result, ScatterError};

/// Default evaluation budget for a single spectral integral.
pub const DEFAULT_MAX_EVALS: usize = 4_000_000;

/// A vector-valued spectral integrand `K -> C^dim`.
///
/// `decay` is the smallest kernel separation `d` appearing in the call: every
/// component is bounded by a multiple of `e^{-d sqrt(K^2-k^2)}` on the
/// evanescent region, which fixes the tail truncation point.
pub struct SpectralIntegrand<'a> {
    pub dim: usize,
    pub eval: &'a (dyn Fn(f64) -> Result<Vec<Complex64>> + Sync),
    pub decay: Option<f64>,
}

// Gauss 7 / Kronrod 15 nodes and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn vec_add(acc: &mut [Complex64], v: &[Complex64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

fn vec_scale(v: &mut [Complex64], s: f64) {
    for z in v.iter_mut() {
        *z *= s;
    }
}

/// One G7/K15 panel for a vector integrand. Returns (kronrod value, error
/// estimate) and charges 15 evaluations to `evals`.
fn gk15_panel<F>(f: &F, dim: usize, a: f64, b: f64, evals: &mut usize) -> Result<(Vec<Complex64>, f64)>
where
    F: Fn(f64) -> Result<Vec<Complex64>> + ?Sized,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = vec![Complex64::default(); dim];
    let mut gauss = vec![Complex64::default(); dim];

    let fc = f(center)?;
    debug_assert_eq!(fc.len(), dim);
    for d in 0..dim {
        kronrod[d] = WGK[7] * fc[d];
        gauss[d] = WG[3] * fc[d];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        for d in 0..dim {
            let s = f1[d] + f2[d];
            kronrod[d] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[d] += WG[j / 2] * s;
            }
        }
    }
    *evals += 15;
    vec_scale(&mut kronrod, half);
    vec_scale(&mut gauss, half);
    let mut err = 0.0f64;
    for d in 0..dim {
        err = err.max((kronrod[d] - gauss[d]).norm());
    }
    // QUADPACK-style sharpening of the raw |K - G| estimate.
    let resk = vec_norm(&kronrod).max(1e-300);
    let scaled = (200.0 * err / resk).powf(1.5);
    let err = if scaled < 1.0 { err * scaled.max(1e-6) } else { err };
    Ok((kronrod, err))
}

struct Panel {
    a: f64,
    b: f64,
    val: Vec<Complex64>,
    err: f64,
}

/// Globally adaptive GK15 over `[a, b]` with absolute tolerance `tol`.
///
/// Panels are summed left-to-right so results are deterministic for a fixed
/// tolerance.
pub fn adaptive_gk<F>(
    f: &F,
    dim: usize,
    a: f64,
    b: f64,
    tol: f64,
    evals: &mut usize,
    budget: usize,
) -> Result<Vec<Complex64>>
where
    F: Fn(f64) -> Result<Vec<Complex64>> + ?Sized,
{
    let (val, err) = gk15_panel(f, dim, a, b, evals)?;
    let mut panels = vec![Panel { a, b, val, err }];
    loop {
        let total_err: f64 = panels.iter().map(|p| p.err).sum();
        if total_err <= tol {
            break;
        }
        if *evals > budget {
            return Err(ScatterError::NoConvergence(*evals, total_err));
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .unwrap();
        let Panel { a, b, .. } = panels[worst];
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // interval exhausted at machine precision; accept what we have
            break;
        }
        let left = {
            let (val, err) = gk15_panel(f, dim, a, mid, evals)?;
            Panel { a, b: mid, val, err }
        };
        let right = {
            let (val, err) = gk15_panel(f, dim, mid, b, evals)?;
            Panel { a: mid, b, val, err }
        };
        panels[worst] = left;
        panels.push(right);
    }
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut out = vec![Complex64::default(); dim];
    for p in &panels {
        vec_add(&mut out, &p.val);
    }
    Ok(out)
}

/// `∫_{-∞}^{∞} f(K) dK` for a spectral integrand with integrable `1/√`
/// branch points at `±k` and exponentially decaying tails.
pub fn integrate_spectral(f: &SpectralIntegrand<'_>, k: f64, tol: f64) -> Result<Vec<Complex64>> {
    integrate_spectral_budget(f, k, tol, DEFAULT_MAX_EVALS)
}

pub fn integrate_spectral_budget(
    f: &SpectralIntegrand<'_>,
    k: f64,
    tol: f64,
    budget: usize,
) -> Result<Vec<Complex64>> {
    assert!(k > 0.0 && tol > 0.0);
    let dim = f.dim;
    let mut evals = 0usize;

    // Propagating window: K = k sin u removes the endpoint 1/sqrt singularity.
    let central = |u: f64| -> Result<Vec<Complex64>> {
        let mut v = (f.eval)(k * u.sin())?;
        vec_scale(&mut v, k * u.cos());
        Ok(v)
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut total = adaptive_gk(&central, dim, -half_pi, half_pi, 0.5 * tol, &mut evals, budget)?;

    // Evanescent tails: K = s k cosh v. Truncate where the decay bound
    // e^{-d sqrt(K^2 - k^2)} = e^{-d k sinh v} falls below tol/100.
    let v_max = match f.decay {
        Some(d) if d > 0.0 => {
            let target = (100.0 / tol).ln().max(1.0) / (d * k);
            target.asinh() + 0.5
        }
        _ => 40.0,
    }
    .min(40.0);
    for sign in [1.0f64, -1.0] {
        let tail = |v: f64| -> Result<Vec<Complex64>> {
            let mut out = (f.eval)(sign * k * v.cosh())?;
            vec_scale(&mut out, k * v.sinh());
            Ok(out)
        };
        // fixed blocks in v; stop early once a block contributes nothing
        let mut v0 = 0.0f64;
        while v0 < v_max {
            let v1 = (v0 + 1.0).min(v_max);
            let block = adaptive_gk(&tail, dim, v0, v1, 0.125 * tol, &mut evals, budget)?;
            let significant = vec_norm(&block) > 0.01 * tol;
            vec_add(&mut total, &block);
            if !significant && v0 > 0.0 {
                break;
            }
            v0 = v1;
        }
    }
    Ok(total)
}

/// Tensor-product adaptive integral of `g` over `[x0,x1] x [y0,y1]`.
pub fn integrate_2d<G>(g: &G, rect: [f64; 4], tol: f64) -> Result<Complex64>
where
    G: Fn(f64, f64) -> Complex64 + ?Sized,
{
    let [x0, x1, y0, y1] = rect;
    assert!(x1 > x0 && y1 > y0 && tol > 0.0);
    let inner_tol = 0.5 * tol / (x1 - x0);
    let mut evals = 0usize;
    let outer = |x: f64| -> Result<Vec<Complex64>> {
        let mut inner_evals = 0usize;
        let inner = |y: f64| -> Result<Vec<Complex64>> { Ok(vec![g(x, y)]) };
        adaptive_gk(&inner, 1, y0, y1, inner_tol, &mut inner_evals, DEFAULT_MAX_EVALS)
    };
    let out = adaptive_gk(&outer, 1, x0, x1, 0.5 * tol, &mut evals, DEFAULT_MAX_EVALS)?;
    Ok(out[0])
}
