//! Run configuration: TOML ingestion for defect layouts, wave parameters,
//! tolerances, and an optional perturbing potential, plus the small grammars
//! used by the command-line sweeps (`START:STOP:COUNT` ranges and
//! `X0:X1:Y0:Y1:NX:NY` field grids).
//!
//! Parsing is pure (no file access); the surface-height grid referenced by a
//! `surface` perturbation is loaded separately through
//! [`PerturbationSpec::build`].

use num_complex::Complex64;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{Result, ScatterError};
use crate::model::{Configuration, LineDefect, PointDefect, Tolerances, WaveParams};
use crate::perturbation::{geometric_potential, HeightFn, LocalPotential, SurfacePatch};

fn config_err(msg: impl Into<String>) -> ScatterError {
    ScatterError::Config(msg.into())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoint {
    x: f64,
    y: f64,
    re_z: f64,
    im_z: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLine {
    b: f64,
    re_g: f64,
    im_g: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    rel_tol: Option<f64>,
    quad_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawPerturbation {
    Gaussian {
        center: [f64; 2],
        width: f64,
        amplitude_re: f64,
        amplitude_im: f64,
    },
    Surface {
        height_grid: String,
        lambda1: f64,
        lambda2: f64,
        fd_step: Option<f64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    k: f64,
    theta_in_deg: f64,
    #[serde(default)]
    points: Vec<RawPoint>,
    #[serde(default)]
    lines: Vec<RawLine>,
    tolerances: Option<RawTolerances>,
    perturbation: Option<RawPerturbation>,
}

/// Perturbing-potential description as written in the config file; building
/// the [`LocalPotential`] is deferred so parsing stays free of file access.
#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationSpec {
    Gaussian {
        center: [f64; 2],
        width: f64,
        amplitude: Complex64,
    },
    Surface {
        height_grid: PathBuf,
        lambda1: f64,
        lambda2: f64,
        fd_step: f64,
    },
}

impl PerturbationSpec {
    /// Materialize the potential, resolving the height-grid path (if any)
    /// relative to `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<LocalPotential> {
        match self {
            Self::Gaussian { center, width, amplitude } => {
                Ok(LocalPotential::gaussian_bump(*center, *width, *amplitude))
            }
            Self::Surface { height_grid, lambda1, lambda2, fd_step } => {
                let path = if height_grid.is_absolute() {
                    height_grid.clone()
                } else {
                    base_dir.join(height_grid)
                };
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    config_err(format!("cannot read height grid {}: {e}", path.display()))
                })?;
                let grid = parse_height_grid(&text)?;
                let patch = SurfacePatch {
                    support: grid.rect,
                    height: grid.height_fn(),
                    lambda1: *lambda1,
                    lambda2: *lambda2,
                    fd_step: *fd_step,
                };
                geometric_potential(&patch)
            }
        }
    }
}

/// A parsed and validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub configuration: Configuration,
    pub wave: WaveParams,
    pub perturbation: Option<PerturbationSpec>,
}

/// Parse a TOML run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
    let points = raw
        .points
        .iter()
        .map(|p| PointDefect::new(p.x, p.y, Complex64::new(p.re_z, p.im_z)))
        .collect();
    let lines = raw
        .lines
        .iter()
        .map(|l| LineDefect::new(l.b, Complex64::new(l.re_g, l.im_g)))
        .collect();
    let mut tolerances = Tolerances::default();
    if let Some(t) = &raw.tolerances {
        if let Some(r) = t.rel_tol {
            if !(r > 0.0 && r.is_finite()) {
                return Err(config_err(format!("rel_tol must be positive and finite, got {r}")));
            }
            tolerances.rel_tol = r;
        }
        if let Some(q) = t.quad_tol {
            if !(q > 0.0 && q.is_finite()) {
                return Err(config_err(format!("quad_tol must be positive and finite, got {q}")));
            }
            tolerances.quad_tol = q;
        }
    }
    let configuration = Configuration::with_tolerances(points, lines, tolerances)?;
    let wave = WaveParams::new(raw.k, raw.theta_in_deg.to_radians())?;
    let perturbation = match raw.perturbation {
        None => None,
        Some(RawPerturbation::Gaussian { center, width, amplitude_re, amplitude_im }) => {
            if !(width > 0.0 && width.is_finite()) {
                return Err(config_err(format!("gaussian width must be positive, got {width}")));
            }
            if !(center[0].is_finite()
                && center[1].is_finite()
                && amplitude_re.is_finite()
                && amplitude_im.is_finite())
            {
                return Err(config_err("gaussian perturbation has non-finite fields"));
            }
            Some(PerturbationSpec::Gaussian {
                center,
                width,
                amplitude: Complex64::new(amplitude_re, amplitude_im),
            })
        }
        Some(RawPerturbation::Surface { height_grid, lambda1, lambda2, fd_step }) => {
            let fd_step = fd_step.unwrap_or(1e-3);
            if !(fd_step > 0.0 && fd_step.is_finite()) {
                return Err(config_err(format!("fd_step must be positive, got {fd_step}")));
            }
            if !(lambda1.is_finite() && lambda2.is_finite()) {
                return Err(config_err("surface perturbation has non-finite couplings"));
            }
            Some(PerturbationSpec::Surface {
                height_grid: PathBuf::from(height_grid),
                lambda1,
                lambda2,
                fd_step,
            })
        }
    };
    Ok(RunConfig { configuration, wave, perturbation })
}

/// Parse a config file from disk.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// A tabulated surface height `z = h(x, y)` on a uniform rectangular grid.
///
/// File format: one header line `x0 x1 y0 y1 nx ny`, then `ny` lines of `nx`
/// whitespace-separated heights (rows sweep `y` from `y0` to `y1`, columns
/// sweep `x` from `x0` to `x1`).
#[derive(Debug, Clone)]
pub struct HeightGrid {
    pub rect: [f64; 4],
    pub nx: usize,
    pub ny: usize,
    data: Arc<Vec<f64>>,
}

/// Parse a height-grid file.
pub fn parse_height_grid(text: &str) -> Result<HeightGrid> {
    let mut rows = text.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let header = rows.next().ok_or_else(|| config_err("height grid file is empty"))?;
    let head: Vec<f64> = header
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| config_err(format!("bad header token {t:?}: {e}"))))
        .collect::<Result<_>>()?;
    if head.len() != 6 {
        return Err(config_err(format!(
            "height grid header needs 6 entries (x0 x1 y0 y1 nx ny), got {}",
            head.len()
        )));
    }
    let rect = [head[0], head[1], head[2], head[3]];
    if !rect.iter().all(|v| v.is_finite()) || rect[1] <= rect[0] || rect[3] <= rect[2] {
        return Err(config_err(format!("degenerate height grid rectangle {rect:?}")));
    }
    let (nx, ny) = (head[4], head[5]);
    if nx.fract() != 0.0 || ny.fract() != 0.0 || !(2.0..=1e6).contains(&nx) || !(2.0..=1e6).contains(&ny)
    {
        return Err(config_err(format!("grid sizes must be integers in [2, 1e6], got {nx} x {ny}")));
    }
    let (nx, ny) = (nx as usize, ny as usize);
    let mut data = Vec::with_capacity(nx * ny);
    for (r, line) in rows.enumerate() {
        if r >= ny {
            return Err(config_err(format!("height grid has more than {ny} rows")));
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|e| config_err(format!("bad height value {tok:?} in row {r}: {e}")))?;
            if !v.is_finite() {
                return Err(config_err(format!("non-finite height in row {r}")));
            }
            data.push(v);
        }
        if data.len() - before != nx {
            return Err(config_err(format!(
                "row {r} has {} values, expected {nx}",
                data.len() - before
            )));
        }
    }
    if data.len() != nx * ny {
        return Err(config_err(format!(
            "height grid has {} rows, expected {ny}",
            data.len() / nx
        )));
    }
    Ok(HeightGrid { rect, nx, ny, data: Arc::new(data) })
}

/// Catmull-Rom weights for the four samples around fractional position `t`.
fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

impl HeightGrid {
    fn sample(&self, ix: isize, iy: isize) -> f64 {
        let ix = ix.clamp(0, self.nx as isize - 1) as usize;
        let iy = iy.clamp(0, self.ny as isize - 1) as usize;
        self.data[iy * self.nx + ix]
    }

    /// Bicubic (Catmull-Rom) interpolated height; clamped to the boundary
    /// value outside the rectangle.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let [x0, x1, y0, y1] = self.rect;
        let fx = ((x - x0) / (x1 - x0) * (self.nx - 1) as f64).clamp(0.0, (self.nx - 1) as f64);
        let fy = ((y - y0) / (y1 - y0) * (self.ny - 1) as f64).clamp(0.0, (self.ny - 1) as f64);
        let (ix, iy) = (fx.floor() as isize, fy.floor() as isize);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let (wx, wy) = (catmull_rom(tx), catmull_rom(ty));
        let mut acc = 0.0;
        for (dy, wyv) in wy.iter().enumerate() {
            let mut row = 0.0;
            for (dx, wxv) in wx.iter().enumerate() {
                row += wxv * self.sample(ix + dx as isize - 1, iy + dy as isize - 1);
            }
            acc += wyv * row;
        }
        acc
    }

    pub fn height_fn(&self) -> HeightFn {
        let grid = self.clone();
        Arc::new(move |x, y| grid.eval(x, y))
    }
}

/// Parse `START:STOP:COUNT` into an inclusive linearly spaced grid.
pub fn parse_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(config_err(format!("range must be START:STOP:COUNT, got {text:?}")));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|e| config_err(format!("bad range start {:?}: {e}", parts[0])))?;
    let stop: f64 = parts[1]
        .parse()
        .map_err(|e| config_err(format!("bad range stop {:?}: {e}", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|e| config_err(format!("bad range count {:?}: {e}", parts[2])))?;
    if !start.is_finite() || !stop.is_finite() {
        return Err(config_err(format!("non-finite range bounds in {text:?}")));
    }
    if count == 0 || count > 10_000_000 {
        return Err(config_err(format!("range count must be in [1, 1e7], got {count}")));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let h = (stop - start) / (count - 1) as f64;
    Ok((0..count).map(|i| start + h * i as f64).collect())
}

/// A rectangular evaluation grid parsed from `X0:X1:Y0:Y1:NX:NY`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

/// Parse `X0:X1:Y0:Y1:NX:NY`.
pub fn parse_grid(text: &str) -> Result<GridSpec> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 6 {
        return Err(config_err(format!("grid must be X0:X1:Y0:Y1:NX:NY, got {text:?}")));
    }
    let xs = parse_range(&format!("{}:{}:{}", parts[0], parts[1], parts[4]))?;
    let ys = parse_range(&format!("{}:{}:{}", parts[2], parts[3], parts[5]))?;
    Ok(GridSpec { xs, ys })
}
