//! Command-line front end.
//!
//! Every subcommand writes its CSV (and where useful an SVG) into `--out-dir`.
//! Exit codes: 0 success, 1 usage, domain or configuration error, 2 numeric
//! failure or I/O error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::moving_planes::{self, ReflectionSpec};
use crate::operator_quad::{QuadOperator, QuadratureParams};
use crate::operator_spectral::SpectralPlan;
use crate::output::{emit_csv, emit_svg, format_number, Plot, Series, Table};
use crate::solver::{self, EquationParams, SolveConfig};
use crate::special_fn::{bessel_k_eval, bessel_k_prime, FractionalSpec, KernelSpec};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "LOGSCHROD_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "logschrod",
    version,
    about = "Logarithmic and relativistic Schrödinger operators on grids"
)]
pub struct Cli {
    /// Directory for CSV and SVG artifacts
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Seed for randomized suites
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Spectral,
    Quad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OperatorKind {
    Log,
    S,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate K_ν(r) and K_ν'(r)
    Bessel {
        #[arg(long, allow_negative_numbers = true)]
        nu: f64,
        #[arg(long, allow_negative_numbers = true)]
        r: f64,
    },
    /// Apply (I-Δ)^log or (I-Δ)^s at points
    Apply {
        #[arg(long, value_enum, default_value_t = Method::Quad)]
        method: Method,
        #[arg(long, value_enum, default_value_t = OperatorKind::Log)]
        op: OperatorKind,
        /// Order for --op s
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        /// LSGF1 input; a Gaussian e^{-|x|²/2} on a periodic grid when absent
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Evaluation points: coordinates separated by ',', points by ';'
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        x: String,
        #[arg(long = "N", value_name = "N", default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[arg(long = "L", value_name = "L", default_value_t = 12.0)]
        half_width: f64,
        /// Excluded half-width around x (default 2h)
        #[arg(long)]
        eps: Option<f64>,
        /// Far-field radius (default from the kernel decay)
        #[arg(long = "R")]
        r_max: Option<f64>,
    },
    /// Taylor remainder of (I-Δ)^s in s for a Gaussian bump
    Taylor {
        #[arg(long = "N", value_name = "N", default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[arg(long = "L", value_name = "L", default_value_t = 12.0)]
        half_width: f64,
        #[arg(long, default_value = "0.1,0.05,0.025,0.0125")]
        s_ladder: String,
        #[arg(long, value_enum, default_value_t = Method::Spectral)]
        method: Method,
    },
    /// Ground state of (I-Δ)^log u + m u = u^p
    Solve {
        #[arg(long = "N", value_name = "N", default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[arg(long = "L", value_name = "L", default_value_t = 12.0)]
        half_width: f64,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value_t = 3.0)]
        p: f64,
        #[arg(long, default_value = "1e-6")]
        tol: f64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        /// Stabilising exponent (default p/(p-1))
        #[arg(long)]
        gamma: Option<f64>,
        /// Solution file (default <out-dir>/solution.lsgf)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Critical planes, centre and radial profile of a grid function
    Symmetry {
        #[arg(long = "in")]
        input: PathBuf,
        /// Number of directions
        #[arg(long, default_value_t = 4)]
        dirs: usize,
        /// Tolerance for ω ≥ 0 (default 1e-8·max|u|)
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Sign of (I-Δ)^log at negative minima of random antisymmetric functions
    ProbeMaxprin {
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Dimension; alternates between 1 and 2 when absent
        #[arg(long = "N", value_name = "N")]
        dim: Option<usize>,
        #[arg(long = "L", value_name = "L", default_value_t = 8.0)]
        half_width: f64,
    },
    /// Half-space kernel mass against the explicit decay bound
    ProbeDecay {
        #[arg(long = "N", value_name = "N", default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        lambda: f64,
        /// |x0| values: a list "4,5,6" or "a:b:count"
        #[arg(long, default_value = "4,5,6,8,10")]
        x0_range: String,
    },
    /// Quadrature against spectral evaluation over a ladder of grids
    Convergence {
        #[arg(long = "N", value_name = "N", default_value_t = 1)]
        dim: usize,
        #[arg(long = "L", value_name = "L", default_value_t = 12.0)]
        half_width: f64,
        #[arg(long, default_value = "128,256,512,1024")]
        n_list: String,
        #[arg(long, value_enum, default_value_t = OperatorKind::Log)]
        op: OperatorKind,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
    },
}

/// Parses `argv` (program name first), runs, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() {
    if let Some(k) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        if k > 0 {
            // a second call in the same process keeps the first pool
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global();
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    fs::create_dir_all(&cli.out_dir)?;
    let out = cli.out_dir.as_path();
    match &cli.command {
        Command::Bessel { nu, r } => bessel(out, *nu, *r),
        Command::Apply {
            method,
            op,
            s,
            input,
            x,
            dim,
            n,
            half_width,
            eps,
            r_max,
        } => apply(
            out,
            *method,
            *op,
            *s,
            input.as_deref(),
            x,
            (*dim, *n, *half_width),
            *eps,
            *r_max,
        ),
        Command::Taylor {
            dim,
            n,
            half_width,
            s_ladder,
            method,
        } => taylor(out, *dim, *n, *half_width, s_ladder, *method),
        Command::Solve {
            dim,
            n,
            half_width,
            m,
            p,
            tol,
            max_iter,
            gamma,
            out: file,
        } => {
            let mut cfg = SolveConfig::new(*dim, *n, *half_width);
            cfg.tol = *tol;
            cfg.max_iter = *max_iter;
            cfg.gamma = *gamma;
            let file = file.clone().unwrap_or_else(|| out.join("solution.lsgf"));
            solve(out, *m, *p, &cfg, &file)
        }
        Command::Symmetry { input, dirs, tol } => symmetry(out, input, *dirs, *tol),
        Command::ProbeMaxprin {
            count,
            dim,
            half_width,
        } => probe_maxprin(out, cli.seed, *count, *dim, *half_width),
        Command::ProbeDecay {
            dim,
            lambda,
            x0_range,
        } => probe_decay(out, *dim, *lambda, x0_range),
        Command::Convergence {
            dim,
            half_width,
            n_list,
            op,
            s,
        } => convergence(out, *dim, *half_width, n_list, *op, *s),
    }
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let a: f64 = parse_number(parts[0])?;
        let b: f64 = parse_number(parts[1])?;
        let k: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| Error::Domain(format!("bad count in range {text:?}")))?;
        if k < 2 {
            return Err(Error::Domain("a range needs at least two points".into()));
        }
        return Ok((0..k)
            .map(|i| a + (b - a) * i as f64 / (k - 1) as f64)
            .collect());
    }
    let values: Vec<f64> = text.split(',').map(parse_number).collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(Error::Domain("empty list".into()));
    }
    Ok(values)
}

fn parse_number(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Domain(format!("not a number: {s:?}")))
}

fn parse_points(text: &str, dim: usize) -> Result<Vec<Vec<f64>>> {
    text.split(';')
        .map(|p| {
            let coords: Vec<f64> = p.split(',').map(parse_number).collect::<Result<_>>()?;
            match coords.len() {
                1 if dim > 1 => {
                    let mut x = vec![0.0; dim];
                    x[0] = coords[0];
                    Ok(x)
                }
                k if k == dim => Ok(coords),
                k => Err(Error::Domain(format!(
                    "point has {k} coordinates, grid is {dim}-dimensional"
                ))),
            }
        })
        .collect()
}

fn gaussian(
    dim: usize,
    n: usize,
    half_width: f64,
    periodic: bool,
    width2: f64,
) -> Result<GridFunction> {
    GridFunction::from_fn(dim, n, half_width, periodic, |x| {
        (-x.iter().map(|v| v * v).sum::<f64>() / width2).exp()
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let k = logs.len() as f64;
    if k < 2.0 {
        return f64::NAN;
    }
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn bessel(out: &Path, nu: f64, r: f64) -> Result<()> {
    let value = bessel_k_eval(nu, r)?;
    let derivative = bessel_k_prime(nu, r)?;
    println!("{}", format_number(value.value));
    let mut table = Table::new(&["nu", "r", "k", "k_prime", "underflow"]);
    table.push_numbers(&[
        nu,
        r,
        value.value,
        derivative,
        if value.underflow { 1.0 } else { 0.0 },
    ])?;
    emit_csv(&table, &out.join("bessel.csv"))
}

fn quad_operator(
    kind: OperatorKind,
    s: f64,
    dim: usize,
    h: f64,
    qp: QuadratureParams,
) -> Result<QuadOperator> {
    match kind {
        OperatorKind::Log => QuadOperator::log(KernelSpec::new(dim)?, h, qp),
        OperatorKind::S => QuadOperator::fractional(FractionalSpec::new(dim, s)?, h, qp),
    }
}

#[allow(clippy::too_many_arguments)]
fn apply(
    out: &Path,
    method: Method,
    kind: OperatorKind,
    s: f64,
    input: Option<&Path>,
    x: &str,
    grid: (usize, usize, f64),
    eps: Option<f64>,
    r_max: Option<f64>,
) -> Result<()> {
    let u = match input {
        Some(path) => GridFunction::load(path)?,
        None => gaussian(grid.0, grid.1, grid.2, true, 2.0)?,
    };
    let points = parse_points(x, u.dim())?;
    let values = match method {
        Method::Spectral => {
            let plan = SpectralPlan::for_grid(&u);
            let image = match kind {
                OperatorKind::Log => plan.apply_log(&u)?,
                OperatorKind::S => plan.apply_s(&u, s)?,
            };
            points.iter().map(|p| image.sample(p)).collect()
        }
        Method::Quad => {
            let mut qp = QuadratureParams::for_grid(u.dim(), u.spacing())?;
            if let Some(e) = eps {
                qp.eps = e;
            }
            if let Some(r) = r_max {
                qp.r_max = r;
            }
            quad_operator(kind, s, u.dim(), u.spacing(), qp)?.apply_at_points(&u, &points)?
        }
    };
    let mut header: Vec<String> = (0..u.dim()).map(|i| format!("x{i}")).collect();
    header.push("value".into());
    let mut table = Table::new(&header);
    for (p, v) in points.iter().zip(&values) {
        println!("{}", format_number(*v));
        let mut row = p.clone();
        row.push(*v);
        table.push_numbers(&row)?;
    }
    emit_csv(&table, &out.join("apply.csv"))
}

fn taylor(
    out: &Path,
    dim: usize,
    n: usize,
    half_width: f64,
    ladder: &str,
    method: Method,
) -> Result<()> {
    let svals = parse_list(ladder)?;
    let u = gaussian(dim, n, half_width, true, 1.0)?;
    let points: Vec<Vec<f64>> = (0..9)
        .map(|i| {
            let mut p = vec![0.0; dim];
            p[0] = -2.0 + 0.5 * i as f64;
            p
        })
        .collect();
    let mut residuals = Vec::with_capacity(svals.len());
    for &s in &svals {
        let e = match method {
            Method::Spectral => crate::operator_spectral::taylor_residual(&u, s)?,
            Method::Quad => {
                let qp = QuadratureParams::for_grid(dim, u.spacing())?;
                let frac = quad_operator(OperatorKind::S, s, dim, u.spacing(), qp)?
                    .apply_at_points(&u, &points)?;
                let lg = QuadOperator::log(KernelSpec::new(dim)?, u.spacing(), qp)?
                    .apply_at_points(&u, &points)?;
                points
                    .iter()
                    .zip(frac.iter().zip(&lg))
                    .map(|(p, (f, l))| (f - u.sample(p) - s * l).abs())
                    .fold(0.0, f64::max)
            }
        };
        residuals.push((s, e));
    }
    let slope = loglog_slope(&residuals);
    println!("slope {}", format_number(slope));
    let mut table = Table::new(&["s", "residual", "fitted_slope"]);
    for &(s, e) in &residuals {
        table.push_numbers(&[s, e, slope])?;
    }
    emit_csv(&table, &out.join("taylor.csv"))?;
    let mut plot = Plot::new("Taylor remainder in s", "s", "max residual");
    plot.log_x = true;
    plot.log_y = true;
    plot.series.push(Series {
        label: format!("slope {slope:.3}"),
        points: residuals,
    });
    emit_svg(&plot, &out.join("taylor.svg"))
}

fn solve(out: &Path, m: f64, p: f64, cfg: &SolveConfig, file: &Path) -> Result<()> {
    let params = EquationParams::new(m, p)?;
    cfg.validate()?;
    let mut history = Vec::new();
    let result = solver::solve_logged(&params, cfg, cfg.initial_guess()?, &mut history);
    let mut table = Table::new(&["iter", "residual", "max_u", "quotient"]);
    for r in &history {
        table.push_numbers(&[r.iter as f64, r.residual, r.max_u, r.quotient])?;
    }
    if !table.is_empty() {
        emit_csv(&table, &out.join("solve_history.csv"))?;
        let mut plot = Plot::new("Petviashvili iteration", "iteration", "residual");
        plot.log_y = true;
        plot.series.push(Series {
            label: "residual".into(),
            points: history
                .iter()
                .map(|r| (r.iter as f64, r.residual))
                .collect(),
        });
        emit_svg(&plot, &out.join("solve_history.svg"))?;
    }
    let u = result?;
    u.save(file)?;
    let c2 = solver::check_c2(&u, &params);
    let last = history.last().copied();
    println!(
        "converged iterations={} residual={} max_u={} a={} threshold={} c2={}",
        history.len(),
        last.map_or(f64::NAN, |r| r.residual),
        u.max(),
        c2.a,
        c2.threshold,
        c2.holds
    );
    Ok(())
}

fn symmetry(out: &Path, input: &Path, dirs: usize, tol: Option<f64>) -> Result<()> {
    let u = GridFunction::load(input)?;
    let directions = moving_planes::standard_directions(u.dim(), dirs);
    let tol = tol.unwrap_or(1e-8 * u.max_abs());
    let report = moving_planes::symmetry_report_with(&u, &directions, tol)?;
    let mut table = Table::new(&["direction", "lambda0", "min_omega", "asymmetry"]);
    let r2 = moving_planes::trusted_radius(&u).powi(2);
    for (e, l0) in &report.lambda0_per_direction {
        let spec = ReflectionSpec::new(e, *l0)?;
        let w = moving_planes::omega(&u, &spec)?;
        let mut min_w = f64::INFINITY;
        let mut max_abs: f64 = 0.0;
        for i in 0..w.len() {
            let x = w.point(i);
            let inside = |y: &[f64]| y.iter().map(|v| v * v).sum::<f64>() < r2;
            if inside(&x) && inside(&spec.reflect(&x)) {
                max_abs = max_abs.max(w.values()[i].abs());
                if spec.in_sigma(&x) {
                    min_w = min_w.min(w.values()[i]);
                }
            }
        }
        let label: Vec<String> = e.iter().map(|v| format_number(*v)).collect();
        table.push(vec![
            label.join(";"),
            format_number(*l0),
            format_number(min_w),
            format_number(max_abs),
        ])?;
    }
    emit_csv(&table, &out.join("symmetry.csv"))?;
    let mut profile = Table::new(&["r", "mean"]);
    for &(r, v) in &report.radial_profile {
        profile.push_numbers(&[r, v])?;
    }
    emit_csv(&profile, &out.join("symmetry_profile.csv"))?;
    println!(
        "center={:?} max_asymmetry={} radial_monotone={} monotonicity_violation={}",
        report.center, report.max_asymmetry, report.radial_monotone, report.monotonicity_violation
    );
    Ok(())
}

fn probe_maxprin(
    out: &Path,
    seed: u64,
    count: usize,
    dim: Option<usize>,
    half_width: f64,
) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = Table::new(&["index", "dim", "lambda", "min_omega", "value"]);
    let mut negative = 0;
    for index in 0..count {
        let d = dim.unwrap_or(1 + index % 2);
        let n = if d == 1 { 256 } else { 64 };
        let sample = moving_planes::random_antisymmetric(&mut rng, d, n, half_width)?;
        let qp = QuadratureParams::for_grid(d, sample.omega.spacing())?;
        let value = moving_planes::antisym_min_probe(&sample.omega, &sample.spec, &qp)?;
        if value < 0.0 {
            negative += 1;
        }
        table.push_numbers(&[
            index as f64,
            d as f64,
            sample.spec.lambda(),
            sample.omega.min(),
            value,
        ])?;
    }
    emit_csv(&table, &out.join("probe_maxprin.csv"))?;
    println!("negative {negative}/{count}");
    Ok(())
}

fn probe_decay(out: &Path, dim: usize, lambda: f64, range: &str) -> Result<()> {
    let spec = KernelSpec::new(dim)?;
    let mut table = Table::new(&["x0_norm", "lhs", "rhs", "ratio", "holds"]);
    for r in parse_list(range)? {
        let mut x0 = vec![0.0; dim];
        x0[0] = -r;
        let probe = moving_planes::decay_bound_check(&x0, lambda, &spec)?;
        let holds = probe.lhs_integral >= probe.rhs_bound;
        println!(
            "|x0|={r} lhs={} rhs={} holds={holds}",
            probe.lhs_integral, probe.rhs_bound
        );
        table.push_numbers(&[
            r,
            probe.lhs_integral,
            probe.rhs_bound,
            probe.lhs_integral / probe.rhs_bound,
            if holds { 1.0 } else { 0.0 },
        ])?;
    }
    emit_csv(&table, &out.join("probe_decay.csv"))
}

fn convergence(
    out: &Path,
    dim: usize,
    half_width: f64,
    list: &str,
    kind: OperatorKind,
    s: f64,
) -> Result<()> {
    let sizes: Vec<usize> = parse_list(list)?
        .into_iter()
        .map(|v| {
            if v >= 4.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Domain(format!(
                    "grid size must be an integer ≥ 4, got {v}"
                )))
            }
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["n", "h", "max_rel_diff"]);
    let mut series = Vec::new();
    for n in sizes {
        let u = gaussian(dim, n, half_width, true, 2.0)?;
        let plan = SpectralPlan::for_grid(&u);
        let spectral = match kind {
            OperatorKind::Log => plan.apply_log(&u)?,
            OperatorKind::S => plan.apply_s(&u, s)?,
        };
        let qp = QuadratureParams::for_grid(dim, u.spacing())?;
        let op = quad_operator(kind, s, dim, u.spacing(), qp)?;
        let points: Vec<Vec<f64>> = (0..9)
            .map(|i| {
                let mut p = vec![0.0; dim];
                p[0] = -2.0 + 0.5 * i as f64;
                p
            })
            .collect();
        let quad = op.apply_at_points(&u, &points)?;
        let scale = spectral.max_abs();
        let diff = points
            .iter()
            .zip(&quad)
            .map(|(p, q)| (q - spectral.sample(p)).abs() / scale)
            .fold(0.0, f64::max);
        println!("n={n} h={} max_rel_diff={diff}", u.spacing());
        table.push_numbers(&[n as f64, u.spacing(), diff])?;
        series.push((u.spacing(), diff));
    }
    emit_csv(&table, &out.join("convergence.csv"))?;
    let mut plot = Plot::new("quadrature vs spectral", "h", "max relative difference");
    plot.log_x = true;
    plot.log_y = true;
    plot.series.push(Series {
        label: "9 points".into(),
        points: series,
    });
    emit_svg(&plot, &out.join("convergence.svg"))
}
