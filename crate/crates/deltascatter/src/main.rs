//! Command-line front end: amplitude/field/Green's-function sweeps,
//! singularity scans, perturbation runs, and oracle comparisons, emitted as
//! CSV with a `#`-prefixed metadata header.
//!
//! Exit codes: 0 ok, 2 config error, 3 singularity encountered,
//! 4 quadrature failure.

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::path::PathBuf;
use std::process::ExitCode;

use deltascatter::config::{parse_grid, parse_range, RunConfig};
use deltascatter::fullgreens::GreensSolver;
use deltascatter::linescatter::scan_singularities_b;
use deltascatter::oracle::{direct_solve, DirectSolveParams};
use deltascatter::perturbation::delta_f;
use deltascatter::pointscatter::scan_singularities_a;
use deltascatter::seriescorr::solve_order_n;
use deltascatter::{Configuration, ScatterError, WaveParams};

#[derive(Parser)]
#[command(
    name = "deltascatter",
    about = "2D scattering by delta-function point and parallel line defects",
    long_about = "Solves scattering of a plane wave by finite collections of \
delta-function point defects and parallel delta-function line defects in two \
dimensions.\n\nAmplitude convention: psi ~ (1/2pi)(e^{ik.x} + f(theta') \
e^{ikr}/sqrt(r)); line defects additionally produce specular delta components, \
reported separately.\n\nAll CSV output starts with a '#'-prefixed metadata \
header (config hash, conventions, tolerances, order) and uses fixed %.12e \
float formatting, so identical inputs produce byte-identical files.\n\nSet \
DELTASCATTER_THREADS to cap the worker count."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output path (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Approximation order N of the mixed point+line solution
    #[arg(long, default_value_t = 0)]
    order: usize,
    /// Override the quadrature tolerance from the config file
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scattering amplitude f(theta') on an angle grid.
    ///
    /// Columns: theta_out_deg, Re f, Im f, |f|^2. Specular delta components
    /// (angle and complex weight) are listed in the metadata header.
    Amplitude {
        #[command(flatten)]
        common: Common,
        /// Outgoing angles in degrees, START:STOP:COUNT
        #[arg(long, allow_hyphen_values = true)]
        angles: String,
    },
    /// Scattering state psi on a rectangular grid.
    ///
    /// Columns: x, y, Re psi, Im psi.
    Field {
        #[command(flatten)]
        common: Common,
        /// Evaluation grid X0:X1:Y0:Y1:NX:NY
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
    },
    /// Full out-going Green's function G(x, x') for a fixed source x'.
    ///
    /// Columns: x, y, Re G, Im G.
    Greens {
        #[command(flatten)]
        common: Common,
        /// Evaluation grid X0:X1:Y0:Y1:NX:NY
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        /// Source point X:Y
        #[arg(long, allow_hyphen_values = true)]
        source: String,
    },
    /// Scan for spectral singularities: zeros of det A(k) over a k-range and,
    /// for line defects, zeros of det B(K) for K in (-k, k) at each scanned k.
    ///
    /// Report rows: "A,k,residual" and "B,k,K,residual".
    Singularities {
        #[command(flatten)]
        common: Common,
        /// Wavenumber scan KMIN:KMAX:COUNT
        #[arg(long)]
        krange: String,
        /// Grid resolution of each det B(K) scan
        #[arg(long, default_value_t = 400)]
        bgrid: usize,
    },
    /// First-Born amplitude correction delta-f of the configured perturbation.
    ///
    /// Columns: theta_out_deg, Re delta-f, Im delta-f.
    Perturb {
        #[command(flatten)]
        common: Common,
        /// Outgoing angles in degrees, START:STOP:COUNT
        #[arg(long, allow_hyphen_values = true)]
        angles: String,
    },
    /// Compare the order-N field on a line defect against the dense
    /// integral-equation oracle.
    ///
    /// Columns: y, Re psi (order N), Im psi (order N), Re psi (oracle),
    /// Im psi (oracle), abs error. A max-error summary line ends the file.
    OracleCompare {
        #[command(flatten)]
        common: Common,
        /// Sample heights on the line, START:STOP:COUNT
        #[arg(long, default_value = "-10:10:81", allow_hyphen_values = true)]
        yrange: String,
        /// Line index to compare on
        #[arg(long, default_value_t = 0)]
        line: usize,
        /// Oracle window half-width
        #[arg(long, default_value_t = 60.0)]
        half_width: f64,
        /// Oracle cell count
        #[arg(long, default_value_t = 1200)]
        cells: usize,
    },
}

fn exit_code_for(err: &ScatterError) -> u8 {
    match err {
        ScatterError::SingularA(_)
        | ScatterError::SingularB(_)
        | ScatterError::SingularSystem
        | ScatterError::BranchPoint(_)
        | ScatterError::CoincidentPoints => 3,
        ScatterError::NoConvergence(..) => 4,
        _ => 2,
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

struct Loaded {
    run: RunConfig,
    config_dir: PathBuf,
    header: String,
}

fn load(common: &Common, subcommand: &str) -> Result<Loaded, ScatterError> {
    let text = std::fs::read_to_string(&common.config).map_err(|e| {
        ScatterError::Config(format!("cannot read {}: {e}", common.config.display()))
    })?;
    let mut run = deltascatter::config::parse_config(&text)?;
    if let Some(tol) = common.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(ScatterError::Config(format!("--tol must be positive, got {tol}")));
        }
        run.configuration.tolerances.quad_tol = tol;
    }
    let sha = hex::encode(Sha256::digest(text.as_bytes()));
    let t = run.configuration.tolerances;
    let header = format!(
        "# deltascatter {subcommand}\n\
         # config sha256: {sha}\n\
         # convention: psi ~ (1/2pi)(e^{{ik.x}} + f(theta') e^{{ikr}}/sqrt(r)); units hbar = 2m = 1\n\
         # k = {}, theta_in_deg = {}\n\
         # points = {}, lines = {}\n\
         # order = {}\n\
         # tolerances: rel_tol = {:e}, quad_tol = {:e}\n",
        fmt(run.wave.k),
        fmt(run.wave.theta_in.to_degrees()),
        run.configuration.num_points(),
        run.configuration.num_lines(),
        common.order,
        t.rel_tol,
        t.quad_tol,
    );
    let config_dir = common
        .config
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(Loaded { run, config_dir, header })
}

fn warn_kl(config: &Configuration, wave: &WaveParams) {
    let kl = config.kl_parameter(wave);
    if kl < 10.0 {
        eprintln!(
            "warning: k*ell = {kl:.3} < 10; the large-separation approximation \
             may be inaccurate (consider a higher --order)"
        );
    }
}

fn parse_point(text: &str) -> Result<[f64; 2], ScatterError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 {
        return Err(ScatterError::Config(format!("point must be X:Y, got {text:?}")));
    }
    let x: f64 = parts[0]
        .parse()
        .map_err(|e| ScatterError::Config(format!("bad coordinate {:?}: {e}", parts[0])))?;
    let y: f64 = parts[1]
        .parse()
        .map_err(|e| ScatterError::Config(format!("bad coordinate {:?}: {e}", parts[1])))?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(ScatterError::Config(format!("non-finite point {text:?}")));
    }
    Ok([x, y])
}

fn run_amplitude(common: &Common, angles: &str) -> Result<String, ScatterError> {
    let loaded = load(common, "amplitude")?;
    let (config, wave) = (&loaded.run.configuration, &loaded.run.wave);
    warn_kl(config, wave);
    let thetas_deg = parse_range(angles)?;
    let sol = solve_order_n(config, wave, common.order)?;
    let mut out = loaded.header;
    for s in sol.specular()? {
        out.push_str(&format!(
            "# specular: theta_deg = {}, weight = {} {}\n",
            fmt(s.theta.to_degrees()),
            fmt(s.weight.re),
            fmt(s.weight.im),
        ));
    }
    out.push_str("# columns: theta_out_deg, re_f, im_f, abs2_f\n");
    let rows: Vec<String> = thetas_deg
        .par_iter()
        .map(|&deg| {
            let f = sol.f_total_regular(deg.to_radians())?;
            Ok(format!("{},{},{},{}\n", fmt(deg), fmt(f.re), fmt(f.im), fmt(f.norm_sqr())))
        })
        .collect::<Result<_, ScatterError>>()?;
    out.extend(rows);
    Ok(out)
}

fn run_field(common: &Common, grid: &str) -> Result<String, ScatterError> {
    let loaded = load(common, "field")?;
    let (config, wave) = (&loaded.run.configuration, &loaded.run.wave);
    warn_kl(config, wave);
    let spec = parse_grid(grid)?;
    let sol = solve_order_n(config, wave, common.order)?;
    let points: Vec<[f64; 2]> = spec
        .ys
        .iter()
        .flat_map(|&y| spec.xs.iter().map(move |&x| [x, y]))
        .collect();
    let mut out = loaded.header;
    out.push_str("# columns: x, y, re_psi, im_psi\n");
    let rows: Vec<String> = points
        .par_iter()
        .map(|&p| {
            let v = sol.psi2(p)?;
            Ok(format!("{},{},{},{}\n", fmt(p[0]), fmt(p[1]), fmt(v.re), fmt(v.im)))
        })
        .collect::<Result<_, ScatterError>>()?;
    out.extend(rows);
    Ok(out)
}

fn run_greens(common: &Common, grid: &str, source: &str) -> Result<String, ScatterError> {
    let loaded = load(common, "greens")?;
    let config = &loaded.run.configuration;
    let spec = parse_grid(grid)?;
    let src = parse_point(source)?;
    let solver = GreensSolver::new(config, loaded.run.wave.k)?;
    let column = solver.column(src)?;
    let points: Vec<[f64; 2]> = spec
        .ys
        .iter()
        .flat_map(|&y| spec.xs.iter().map(move |&x| [x, y]))
        .collect();
    let mut out = loaded.header;
    out.push_str(&format!("# source: x = {}, y = {}\n", fmt(src[0]), fmt(src[1])));
    out.push_str("# columns: x, y, re_g, im_g\n");
    let rows: Vec<String> = points
        .par_iter()
        .map(|&p| {
            let v = column.full(p)?;
            Ok(format!("{},{},{},{}\n", fmt(p[0]), fmt(p[1]), fmt(v.re), fmt(v.im)))
        })
        .collect::<Result<_, ScatterError>>()?;
    out.extend(rows);
    Ok(out)
}

fn run_singularities(common: &Common, krange: &str, bgrid: usize) -> Result<String, ScatterError> {
    let loaded = load(common, "singularities")?;
    let config = &loaded.run.configuration;
    let ks = parse_range(krange)?;
    if ks.iter().any(|&k| k <= 0.0) {
        return Err(ScatterError::Config(format!("krange must be positive, got {krange:?}")));
    }
    if bgrid < 2 {
        return Err(ScatterError::Config(format!("bgrid must be at least 2, got {bgrid}")));
    }
    let mut out = loaded.header;
    out.push_str("# rows: A,k,residual | B,k,K,residual\n");
    if config.num_lines() == 1 {
        let g = config.lines()[0].coupling;
        out.push_str(&format!(
            "# J=1 analytic locus: det B(K) = 0 iff g = 2i sqrt(k^2 - K^2); g = {} {}\n",
            fmt(g.re),
            fmt(g.im),
        ));
        if g.re == 0.0 && g.im > 0.0 {
            for &k in &ks {
                if g.im < 2.0 * k {
                    let k0 = (k * k - 0.25 * g.im * g.im).sqrt();
                    out.push_str(&format!(
                        "# analytic zero at k = {}: K = +/-{}\n",
                        fmt(k),
                        fmt(k0)
                    ));
                }
            }
        }
    }
    if config.num_points() > 0 && ks.len() >= 2 {
        let hits = scan_singularities_a(config, (ks[0], *ks.last().unwrap()), ks.len())?;
        for h in hits {
            out.push_str(&format!("A,{},{}\n", fmt(h.k), fmt(h.residual)));
        }
    }
    if config.num_lines() > 0 {
        for &k in &ks {
            for h in scan_singularities_b(config, k, bgrid)? {
                out.push_str(&format!("B,{},{},{}\n", fmt(k), fmt(h.big_k), fmt(h.residual)));
            }
        }
    }
    Ok(out)
}

fn run_perturb(common: &Common, angles: &str) -> Result<String, ScatterError> {
    let loaded = load(common, "perturb")?;
    let (config, wave) = (&loaded.run.configuration, &loaded.run.wave);
    warn_kl(config, wave);
    let spec = loaded
        .run
        .perturbation
        .as_ref()
        .ok_or_else(|| ScatterError::Config("config has no [perturbation] section".into()))?;
    let pot = spec.build(&loaded.config_dir)?;
    let thetas_deg = parse_range(angles)?;
    let mut out = loaded.header;
    out.push_str(&format!(
        "# perturbation support: [{}, {}] x [{}, {}]\n",
        fmt(pot.support[0]),
        fmt(pot.support[1]),
        fmt(pot.support[2]),
        fmt(pot.support[3]),
    ));
    out.push_str("# columns: theta_out_deg, re_delta_f, im_delta_f\n");
    let rows: Vec<String> = thetas_deg
        .par_iter()
        .map(|&deg| {
            let df = delta_f(config, wave, deg.to_radians(), &pot)?;
            Ok(format!("{},{},{}\n", fmt(deg), fmt(df.re), fmt(df.im)))
        })
        .collect::<Result<_, ScatterError>>()?;
    out.extend(rows);
    Ok(out)
}

fn run_oracle_compare(
    common: &Common,
    yrange: &str,
    line: usize,
    half_width: f64,
    cells: usize,
) -> Result<String, ScatterError> {
    let loaded = load(common, "oracle-compare")?;
    let (config, wave) = (&loaded.run.configuration, &loaded.run.wave);
    if line >= config.num_lines() {
        return Err(ScatterError::Config(format!(
            "line index {line} out of range ({} lines)",
            config.num_lines()
        )));
    }
    warn_kl(config, wave);
    let ys = parse_range(yrange)?;
    let sol = solve_order_n(config, wave, common.order)?;
    let dense = direct_solve(config, wave, &DirectSolveParams { half_width, cells })?;
    let mut out = loaded.header;
    out.push_str(&format!(
        "# oracle: half_width = {}, cells = {}, line = {line}\n",
        fmt(half_width),
        cells
    ));
    out.push_str("# columns: y, re_psi_approx, im_psi_approx, re_psi_oracle, im_psi_oracle, abs_error\n");
    let rows: Vec<(f64, String)> = ys
        .par_iter()
        .map(|&y| {
            // snap to the oracle's nearest node so both sides are evaluated
            // at exactly the same height
            let m = dense.nearest_node(y);
            let yy = dense.y[m];
            let reference = dense.psi[line][m];
            let approx = sol.eval_on_line(line, yy)?;
            let err = (approx - reference).norm();
            Ok((
                err,
                format!(
                    "{},{},{},{},{},{}\n",
                    fmt(yy),
                    fmt(approx.re),
                    fmt(approx.im),
                    fmt(reference.re),
                    fmt(reference.im),
                    fmt(err)
                ),
            ))
        })
        .collect::<Result<_, ScatterError>>()?;
    let max_err = rows.iter().map(|(e, _)| *e).fold(0.0f64, f64::max);
    for (_, row) in &rows {
        out.push_str(row);
    }
    out.push_str(&format!("# max_abs_error = {}\n", fmt(max_err)));
    Ok(out)
}

fn emit(out: Option<&PathBuf>, content: &str) -> Result<(), ScatterError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| ScatterError::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("DELTASCATTER_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        } else {
            eprintln!("warning: ignoring non-numeric DELTASCATTER_THREADS={threads}");
        }
    }
    let cli = Cli::parse();
    let (common, result) = match &cli.cmd {
        Cmd::Amplitude { common, angles } => (common, run_amplitude(common, angles)),
        Cmd::Field { common, grid } => (common, run_field(common, grid)),
        Cmd::Greens { common, grid, source } => (common, run_greens(common, grid, source)),
        Cmd::Singularities { common, krange, bgrid } => {
            (common, run_singularities(common, krange, *bgrid))
        }
        Cmd::Perturb { common, angles } => (common, run_perturb(common, angles)),
        Cmd::OracleCompare { common, yrange, line, half_width, cells } => {
            (common, run_oracle_compare(common, yrange, *line, *half_width, *cells))
        }
    };
    match result {
        Ok(content) => match emit(common.out.as_ref(), &content) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Err(e) => {
            eprintln!("error: {e} (code {})", exit_code_for(&e));
            ExitCode::from(exit_code_for(&e))
        }
    }
}
