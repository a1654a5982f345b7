//! Reflections across hyperplanes `T_λ = {x·e = λ}` and the moving-plane
//! diagnostics built on them.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, MAX_DIM};
use crate::operator_quad::{ball_volume, QuadOperator, QuadratureParams};
use crate::operator_spectral::SpectralPlan;
use crate::quadrature::{self, Tolerance};
use crate::special_fn::KernelSpec;

/// Unit direction `e` and offset `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionSpec {
    direction: Vec<f64>,
    lambda: f64,
}

impl ReflectionSpec {
    /// Normalises `direction`; it must be nonzero and finite.
    pub fn new(direction: &[f64], lambda: f64) -> Result<Self> {
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if direction.is_empty() || direction.len() > MAX_DIM || !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Domain(
                "reflection direction must be a nonzero vector".into(),
            ));
        }
        if !lambda.is_finite() {
            return Err(Error::Domain("plane offset must be finite".into()));
        }
        Ok(ReflectionSpec {
            direction: direction.iter().map(|v| v / norm).collect(),
            lambda,
        })
    }

    /// Plane `x_axis = λ`.
    pub fn axis(dim: usize, axis: usize, lambda: f64) -> Result<Self> {
        let mut e = vec![0.0; dim];
        e[axis] = 1.0;
        ReflectionSpec::new(&e, lambda)
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        ReflectionSpec {
            direction: self.direction.clone(),
            lambda,
        }
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    pub fn project(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.direction).map(|(a, b)| a * b).sum()
    }

    /// `x^λ = x - 2 (x·e - λ) e`.
    pub fn reflect(&self, x: &[f64]) -> Vec<f64> {
        let t = 2.0 * (self.project(x) - self.lambda);
        x.iter()
            .zip(&self.direction)
            .map(|(a, b)| a - t * b)
            .collect()
    }

    /// Membership in `Σ_λ = {x·e < λ}`.
    pub fn in_sigma(&self, x: &[f64]) -> bool {
        self.project(x) < self.lambda
    }

    // Spacing of the planes for which the reflection maps the grid onto itself,
    // if the reflection matrix is integral.
    fn lattice_step(&self, h: f64) -> Option<f64> {
        let g = self
            .direction
            .iter()
            .map(|v| v.abs())
            .filter(|&v| v > 1e-12)
            .fold(f64::INFINITY, f64::min);
        for (i, &ei) in self.direction.iter().enumerate() {
            for (j, &ej) in self.direction.iter().enumerate() {
                let entry = if i == j { 1.0 } else { 0.0 } - 2.0 * ei * ej;
                if (entry - entry.round()).abs() > 1e-12 {
                    return None;
                }
            }
            let ratio = ei.abs() / g;
            if ei.abs() > 1e-12 && (ratio - ratio.round()).abs() > 1e-12 {
                return None;
            }
        }
        Some(h / (2.0 * g))
    }
}

fn same_dim(u: &GridFunction, spec: &ReflectionSpec) -> Result<()> {
    if u.dim() != spec.dim() {
        return Err(Error::Geometry(format!(
            "reflection is {}-dimensional, grid is {}-dimensional",
            spec.dim(),
            u.dim()
        )));
    }
    Ok(())
}

// Exact sample permutation for planes that map grid points to grid points.
fn reflect_on_lattice(u: &GridFunction, spec: &ReflectionSpec) -> Result<GridFunction> {
    let dim = u.dim();
    let values: Vec<f64> = (0..u.len())
        .into_par_iter()
        .map(|i| {
            let x = u.point(i);
            let y = spec.reflect(&x);
            let mut idx = [0i64; MAX_DIM];
            for axis in 0..dim {
                idx[axis] = u.grid_position(y[axis]).round() as i64;
            }
            u.at_index(&idx[..dim])
        })
        .collect();
    u.with_values(values)
}

/// `u_λ(x) = u(x^λ)`.
///
/// Planes through grid points or cell midpoints of an axis or diagonal
/// direction permute samples exactly. On periodic grids other offsets are
/// handled by a spectral translation followed by the nearest exact
/// reflection; otherwise samples are interpolated multilinearly with zero
/// extension outside the box.
pub fn reflect_grid(u: &GridFunction, spec: &ReflectionSpec) -> Result<GridFunction> {
    same_dim(u, spec)?;
    let h = u.spacing();
    if let Some(step) = spec.lattice_step(h) {
        let k = (spec.lambda / step).round();
        let aligned = k * step;
        if (spec.lambda - aligned).abs() <= 1e-9 * h {
            return reflect_on_lattice(u, &spec.with_lambda(aligned));
        }
        if u.periodic() {
            // x^λ = x^{λa} + δ e, so u_λ is the λa-reflection of u(· + δ e)
            let delta = 2.0 * (spec.lambda - aligned);
            let shift: Vec<f64> = spec.direction.iter().map(|e| -delta * e).collect();
            let moved = SpectralPlan::for_grid(u).translate(u, &shift)?;
            return reflect_on_lattice(&moved, &spec.with_lambda(aligned));
        }
    }
    let values: Vec<f64> = (0..u.len())
        .into_par_iter()
        .map(|i| u.sample(&spec.reflect(&u.point(i))))
        .collect();
    u.with_values(values)
}

/// As [`reflect_grid`], but fails when a point of `Σ_λ` reflects outside the
/// sampled box of a non-periodic grid.
pub fn reflect_grid_within(u: &GridFunction, spec: &ReflectionSpec) -> Result<GridFunction> {
    same_dim(u, spec)?;
    if !u.periodic() {
        let lo = -u.half_width();
        let hi = u.half_width() - u.spacing();
        let slack = 1e-9 * u.spacing();
        for i in 0..u.len() {
            let x = u.point(i);
            if spec.in_sigma(&x) {
                let y = spec.reflect(&x);
                if y.iter().any(|&v| v < lo - slack || v > hi + slack) {
                    return Err(Error::Geometry(format!(
                        "reflection of {x:?} leaves the box without extension"
                    )));
                }
            }
        }
    }
    reflect_grid(u, spec)
}

/// `ω_λ = u_λ - u`.
pub fn omega(u: &GridFunction, spec: &ReflectionSpec) -> Result<GridFunction> {
    let reflected = reflect_grid(u, spec)?;
    reflected.lin_comb(1.0, u, -1.0)
}

/// Minimum of `w` over the grid points of `Σ_λ`.
pub fn min_on_sigma(w: &GridFunction, spec: &ReflectionSpec) -> f64 {
    (0..w.len())
        .into_par_iter()
        .filter_map(|i| {
            let x = w.point(i);
            spec.in_sigma(&x).then(|| w.values()[i])
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// Largest `|u|` on the boundary shell of a periodic grid, zero otherwise.
///
/// Inside the trusted ball the periodic images of decaying data contribute at
/// most this much, so `ω_λ` cannot be resolved below it.
pub fn periodic_image_level(u: &GridFunction) -> f64 {
    if !u.periodic() {
        return 0.0;
    }
    let mut multi = vec![0; u.dim()];
    let mut level: f64 = 0.0;
    for i in 0..u.len() {
        u.unravel(i, &mut multi);
        if multi.iter().any(|&j| j == 0 || j == u.n() - 1) {
            level = level.max(u.values()[i].abs());
        }
    }
    level
}

/// Radius of the ball on which grid data stands in for data on `R^N`.
pub fn trusted_radius(u: &GridFunction) -> f64 {
    u.half_width() - u.spacing()
}

/// Minimum of `ω` over `x ∈ Σ_λ` with `x` and `x^λ` in the trusted ball.
pub fn min_on_trusted_sigma(w: &GridFunction, spec: &ReflectionSpec) -> f64 {
    let r2 = trusted_radius(w).powi(2);
    let inside = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>() < r2;
    (0..w.len())
        .into_par_iter()
        .filter_map(|i| {
            let x = w.point(i);
            (spec.in_sigma(&x) && inside(&x) && inside(&spec.reflect(&x))).then(|| w.values()[i])
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// Critical plane `λ₀ = sup{λ : ω_μ ≥ -tol on Σ_μ for all μ ≤ λ}`.
///
/// `λ` climbs a ladder of exact planes from the edge of the trusted ball
/// `|x| < L - h`, and the first failing rung is bisected down to `h/16`.
/// Only points with `x` and `x^λ` in that ball enter the comparison, which
/// keeps box corners out of it. The effective tolerance is at least
/// `1e-8 · max|u|` and, on periodic grids, the [`periodic_image_level`].
pub fn lambda0(u: &GridFunction, e: &[f64], tol: f64) -> Result<f64> {
    let base = ReflectionSpec::new(e, 0.0)?;
    same_dim(u, &base)?;
    let scale = u.max_abs();
    if u.max() - u.min() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Degenerate(
            "constant data has no critical plane".into(),
        ));
    }
    let floor = tol.max(1e-8 * scale).max(periodic_image_level(u));
    let h = u.spacing();
    let step = base.lattice_step(h).unwrap_or(h).max(h / 2.0);
    let (lo, hi) = (-trusted_radius(u), trusted_radius(u));
    let passes = |lambda: f64| -> Result<bool> {
        let spec = base.with_lambda(lambda);
        let w = omega(u, &spec)?;
        Ok(min_on_trusted_sigma(&w, &spec) >= -floor)
    };
    let mut k = (lo / step).floor() + 1.0;
    let mut good = None;
    while k * step <= hi {
        let lambda = k * step;
        if passes(lambda)? {
            good = Some(lambda);
            k += 1.0;
            continue;
        }
        let mut a = match good {
            Some(g) => g,
            None => return Err(Error::Degenerate("ω_λ is negative for every plane".into())),
        };
        let mut b = lambda;
        while b - a > h / 16.0 {
            let mid = 0.5 * (a + b);
            if passes(mid)? {
                a = mid;
            } else {
                b = mid;
            }
        }
        return Ok(a);
    }
    Err(Error::Degenerate(
        "ω_λ stays nonnegative across the whole box".into(),
    ))
}

/// Argmax refined by a per-axis parabola through the neighbouring samples.
pub fn refined_argmax(u: &GridFunction) -> Vec<f64> {
    let dim = u.dim();
    let mut multi = vec![0; dim];
    u.unravel(u.argmax(), &mut multi);
    let centre = u.values()[u.argmax()];
    let h = u.spacing();
    let mut idx = [0i64; MAX_DIM];
    (0..dim)
        .map(|axis| {
            for a in 0..dim {
                idx[a] = multi[a] as i64;
            }
            idx[axis] += 1;
            let plus = u.at_index(&idx[..dim]);
            idx[axis] -= 2;
            let minus = u.at_index(&idx[..dim]);
            let curvature = minus - 2.0 * centre + plus;
            let shift = if curvature < 0.0 {
                (0.5 * (minus - plus) / curvature).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            u.coord(multi[axis]) + shift * h
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport {
    pub center: Vec<f64>,
    pub lambda0_per_direction: Vec<(Vec<f64>, f64)>,
    /// Largest deviation of the recentred data from its mean over a sphere
    /// `|k|² = const`.
    pub max_asymmetry: f64,
    pub radial_monotone: bool,
    /// Largest increase of the angular-mean profile with radius.
    pub monotonicity_violation: f64,
    /// `(r, angular mean)` pairs in increasing `r`.
    pub radial_profile: Vec<(f64, f64)>,
    /// Largest `|c·e - λ₀(e)|` over the tested directions.
    pub plane_spread: f64,
}

/// Locates the centre from the critical planes, recentres, and compares the
/// data with its angular mean.
pub fn symmetry_report(u: &GridFunction, directions: &[Vec<f64>]) -> Result<SymmetryReport> {
    symmetry_report_with(u, directions, 1e-8 * u.max_abs())
}

/// As [`symmetry_report`], with an explicit tolerance for `λ₀` and monotonicity.
pub fn symmetry_report_with(
    u: &GridFunction,
    directions: &[Vec<f64>],
    tol: f64,
) -> Result<SymmetryReport> {
    let dim = u.dim();
    let h = u.spacing();
    let planes: Vec<(Vec<f64>, f64)> = directions
        .par_iter()
        .map(|e| {
            let spec = ReflectionSpec::new(e, 0.0)?;
            let l0 = lambda0(u, e, tol)?;
            Ok((spec.direction().to_vec(), l0))
        })
        .collect::<Result<_>>()?;
    let center = least_squares_center(dim, &planes)?;
    let plane_spread = planes
        .iter()
        .map(|(e, l)| (e.iter().zip(&center).map(|(a, b)| a * b).sum::<f64>() - l).abs())
        .fold(0.0, f64::max);
    let limit = 4.0 * h;
    if plane_spread > limit {
        return Err(Error::Asymmetry {
            spread: plane_spread,
            limit,
        });
    }
    let centred = if center.iter().all(|&c| c == 0.0) {
        u.clone()
    } else if u.periodic() {
        let shift: Vec<f64> = center.iter().map(|c| -c).collect();
        SpectralPlan::for_grid(u).translate(u, &shift)?
    } else {
        let values: Vec<f64> = (0..u.len())
            .into_par_iter()
            .map(|i| {
                let x: Vec<f64> = u.point(i).iter().zip(&center).map(|(a, b)| a + b).collect();
                u.sample(&x)
            })
            .collect();
        u.with_values(values)?
    };
    // group by exact |k|², k the index offset from the origin sample
    let half = (u.n() / 2) as i64;
    let limit_sq = ((u.half_width() - h) / h).powi(2);
    let mut groups: std::collections::BTreeMap<i64, (f64, f64, f64, usize)> = Default::default();
    let mut multi = vec![0; dim];
    for i in 0..u.len() {
        u.unravel(i, &mut multi);
        let k2: i64 = multi.iter().map(|&j| (j as i64 - half).pow(2)).sum();
        if (k2 as f64) >= limit_sq {
            continue;
        }
        let v = centred.values()[i];
        let entry = groups
            .entry(k2)
            .or_insert((f64::INFINITY, f64::NEG_INFINITY, 0.0, 0));
        entry.0 = entry.0.min(v);
        entry.1 = entry.1.max(v);
        entry.2 += v;
        entry.3 += 1;
    }
    let max_asymmetry = groups
        .values()
        .map(|g| {
            let mean = g.2 / g.3 as f64;
            (g.1 - mean).max(mean - g.0)
        })
        .fold(0.0, f64::max);
    let radial_profile: Vec<(f64, f64)> = groups
        .iter()
        .map(|(&k2, g)| (h * (k2 as f64).sqrt(), g.2 / g.3 as f64))
        .collect();
    let monotonicity_violation = radial_profile
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .fold(0.0, f64::max);
    Ok(SymmetryReport {
        center,
        lambda0_per_direction: planes,
        max_asymmetry,
        radial_monotone: monotonicity_violation
            <= tol.max(1e-12 * u.max_abs()).max(periodic_image_level(u)),
        monotonicity_violation,
        radial_profile,
        plane_spread,
    })
}

// Solves (Σ e eᵀ) c = Σ λ e.
fn least_squares_center(dim: usize, planes: &[(Vec<f64>, f64)]) -> Result<Vec<f64>> {
    let mut a = vec![vec![0.0; dim]; dim];
    let mut b = vec![0.0; dim];
    for (e, l) in planes {
        for i in 0..dim {
            b[i] += l * e[i];
            for j in 0..dim {
                a[i][j] += e[i] * e[j];
            }
        }
    }
    // Gaussian elimination with partial pivoting
    for col in 0..dim {
        let pivot = (col..dim)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap_or(col);
        if a[pivot][col].abs() < 1e-12 {
            return Err(Error::Degenerate("directions do not span the space".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..dim {
            let f = a[row][col] / a[col][col];
            for k in col..dim {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut c = vec![0.0; dim];
    for row in (0..dim).rev() {
        let tail: f64 = (row + 1..dim).map(|k| a[row][k] * c[k]).sum();
        c[row] = (b[row] - tail) / a[row][row];
    }
    Ok(c)
}

/// Default direction sets: the axes in 1-D, axes and diagonals in 2-D and 3-D.
pub fn standard_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let pool: Vec<Vec<f64>> = match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![s, s],
            vec![s, -s],
            vec![-1.0, 0.0],
            vec![0.0, -1.0],
            vec![-s, -s],
            vec![-s, s],
        ],
        _ => vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![s, s, 0.0],
            vec![s, 0.0, s],
            vec![0.0, s, s],
            vec![-1.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![0.0, 0.0, -1.0],
        ],
    };
    pool.into_iter().cycle().take(count.max(1)).collect()
}

/// `[(I-Δ)^log ω](x°)` at the negative minimum `x°` of an antisymmetric `ω` in `Σ_λ`.
pub fn antisym_min_probe(
    omega: &GridFunction,
    spec: &ReflectionSpec,
    qp: &QuadratureParams,
) -> Result<f64> {
    let op = QuadOperator::log(KernelSpec::new(omega.dim())?, omega.spacing(), *qp)?;
    antisym_min_probe_with(omega, spec, &op)
}

/// As [`antisym_min_probe`] with a prebuilt operator.
pub fn antisym_min_probe_with(
    omega: &GridFunction,
    spec: &ReflectionSpec,
    op: &QuadOperator,
) -> Result<f64> {
    let reflected = reflect_grid(omega, spec)?;
    let scale = omega.max_abs().max(1.0);
    let defect = reflected
        .values()
        .iter()
        .zip(omega.values())
        .map(|(a, b)| (a + b).abs())
        .fold(0.0, f64::max);
    if defect > 1e-10 * scale {
        return Err(Error::Precondition(format!(
            "ω is not antisymmetric (defect {defect:e})"
        )));
    }
    let mut best: Option<(usize, f64)> = None;
    for i in 0..omega.len() {
        let v = omega.values()[i];
        if spec.in_sigma(&omega.point(i)) && best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    match best {
        Some((i, v)) if v < 0.0 => op.apply_at(omega, &omega.point(i)),
        _ => Err(Error::Precondition(
            "ω has no negative minimum in Σ_λ".into(),
        )),
    }
}

/// A random antisymmetric test function and its plane.
#[derive(Debug, Clone)]
pub struct AntisymmetricSample {
    pub omega: GridFunction,
    pub spec: ReflectionSpec,
}

fn bump(t2: f64) -> f64 {
    if t2 < 1.0 {
        (-1.0 / (1.0 - t2)).exp()
    } else {
        0.0
    }
}

/// `ω = φ - φ∘(x ↦ x^λ)` with `φ` a sum of one to three smooth compact bumps
/// inside `Σ_λ`, the first one negative.
///
/// The plane is an exact lattice plane (axis or diagonal direction) so the
/// antisymmetry holds sample by sample. The grid is zero-extended.
pub fn random_antisymmetric<R: Rng>(
    rng: &mut R,
    dim: usize,
    n: usize,
    half_width: f64,
) -> Result<AntisymmetricSample> {
    let h = 2.0 * half_width / n as f64;
    let directions = standard_directions(dim, if dim == 1 { 2 } else { 4 });
    let e = directions[rng.gen_range(0..directions.len())].clone();
    let probe = ReflectionSpec::new(&e, 0.0)?;
    let step = probe.lattice_step(h).unwrap_or(h);
    let reach = 0.25 * half_width;
    let lambda = (rng.gen_range(-reach..reach) / step).round() * step;
    let spec = probe.with_lambda(lambda);
    let margin = 3.0 * h;
    let count = rng.gen_range(1..=3);
    let mut bumps = Vec::with_capacity(count);
    let mut attempts = 0;
    while bumps.len() < count {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::Numeric("could not place bumps inside Σ_λ".into()));
        }
        let radius = rng.gen_range(0.6..1.8);
        let centre: Vec<f64> = (0..dim)
            .map(|_| rng.gen_range(-half_width..half_width))
            .collect();
        let depth = spec.lambda() - spec.project(&centre);
        let image = spec.reflect(&centre);
        let fits = |p: &[f64]| {
            p.iter()
                .all(|&v| v - radius > -half_width + margin && v + radius < half_width - h - margin)
        };
        if depth > radius + h && fits(&centre) && fits(&image) {
            let amplitude = rng.gen_range(0.5..1.5)
                * if bumps.is_empty() || rng.gen_bool(0.5) {
                    -1.0
                } else {
                    1.0
                };
            bumps.push((centre, radius, amplitude));
        }
    }
    let phi = |x: &[f64]| -> f64 {
        bumps
            .iter()
            .map(|(c, r, a)| {
                let t2: f64 = x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (r * r);
                a * bump(t2)
            })
            .sum()
    };
    let omega = GridFunction::from_fn(dim, n, half_width, false, |x| {
        phi(x) - phi(&spec.reflect(x))
    })?;
    // round the reflected half to the exact negatives of the lattice images
    let mirrored = reflect_on_lattice(&omega, &spec)?;
    let values: Vec<f64> = (0..omega.len())
        .map(|i| {
            if spec.in_sigma(&omega.point(i)) {
                omega.values()[i]
            } else {
                -mirrored.values()[i]
            }
        })
        .collect();
    Ok(AntisymmetricSample {
        omega: omega.with_values(values)?,
        spec,
    })
}

/// Kernel mass on the reflected half-space against the explicit lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayProbe {
    pub lambda: f64,
    pub lhs_integral: f64,
    pub rhs_bound: f64,
    pub constant_c: f64,
}

/// Lower constant for `κ(r) e^r r^{-(N-1)/2}` at large `r`.
pub const ASYMPTOTIC_SLACK: f64 = 0.05;

/// `∫_{Σ_λ} κ(|x0 - y^λ|) / |x0 - y^λ|^N dy` for the plane `x₁ = λ`,
/// against `C |x0|^{-(1+N)/2} e^{-4|x0|}` with `C = c_∞ ω_N 2^{-3N/2}` and
/// `c_∞ = √(π/2)(1 - 0.05)`.
pub fn decay_bound_check(x0: &[f64], lambda: f64, spec: &KernelSpec) -> Result<DecayProbe> {
    let dim = spec.dim();
    if x0.len() != dim {
        return Err(Error::Geometry("x0 has the wrong dimension".into()));
    }
    let d = lambda - x0[0];
    let norm = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(d > 0.0) {
        return Err(Error::Geometry(format!(
            "x0 must lie in Σ_λ (x0₁ < λ = {lambda})"
        )));
    }
    if norm < lambda {
        return Err(Error::Geometry("need |x0| ≥ λ".into()));
    }
    // reflected half-space is {z₁ > λ}; integrate over spheres about x0 at distance ≥ d
    let shell = |r: f64| -> f64 {
        let k = spec.kappa(r).unwrap_or(0.0);
        match dim {
            1 => k / r,
            2 => 2.0 * k * (d / r).min(1.0).acos() / r,
            _ => 2.0 * std::f64::consts::PI * k * (1.0 - d / r) / r,
        }
    };
    let tol = Tolerance {
        abs: 1e-300,
        rel: 1e-10,
        max_evals: 1 << 16,
    };
    let lhs = quadrature::adaptive(shell, d, d + 1.0, tol)?
        + quadrature::adaptive_to_infinity(shell, d + 1.0, tol)?;
    let c_inf = (std::f64::consts::PI / 2.0).sqrt() * (1.0 - ASYMPTOTIC_SLACK);
    let constant_c = c_inf * ball_volume(dim) * 2f64.powf(-1.5 * dim as f64);
    let rhs = constant_c * norm.powf(-(1.0 + dim as f64) / 2.0) * (-4.0 * norm).exp();
    Ok(DecayProbe {
        lambda,
        lhs_integral: lhs,
        rhs_bound: rhs,
        constant_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gaussian(dim: usize, n: usize, l: f64, periodic: bool, c: &[f64]) -> GridFunction {
        let c = c.to_vec();
        GridFunction::from_fn(dim, n, l, periodic, move |x| {
            (-x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).exp()
        })
        .unwrap()
    }

    fn max_diff(a: &GridFunction, b: &GridFunction) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn reflection_spec_basics() {
        let spec = ReflectionSpec::new(&[3.0, 4.0], 0.7).unwrap();
        let norm: f64 = spec.direction().iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        let x = [0.3, -1.1];
        let back = spec.reflect(&spec.reflect(&x));
        assert!((back[0] - x[0]).abs() < 1e-15 && (back[1] - x[1]).abs() < 1e-15);
        assert!(ReflectionSpec::new(&[0.0, 0.0], 0.0).is_err());
        let e1 = ReflectionSpec::axis(2, 0, 1.0).unwrap();
        assert_eq!(e1.reflect(&[0.25, 2.0]), vec![1.75, 2.0]);
    }

    #[test]
    fn even_function_is_fixed() {
        let u = gaussian(2, 32, 4.0, true, &[0.0, 0.5]);
        let r = reflect_grid(&u, &ReflectionSpec::axis(2, 0, 0.0).unwrap()).unwrap();
        assert_eq!(max_diff(&u, &r), 0.0);
    }

    #[test]
    fn lattice_planes_are_exact_permutations() {
        let u = GridFunction::from_fn(2, 32, 4.0, true, |x| {
            (x[0] * 1.3).sin() + x[1] * x[1] * 0.1 + x[0] * x[1]
        })
        .unwrap();
        let h = u.spacing();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for spec in [
            ReflectionSpec::axis(2, 0, 3.0 * h).unwrap(),
            ReflectionSpec::axis(2, 1, -2.5 * h).unwrap(),
            ReflectionSpec::new(&[s, s], 2.0 * h * s).unwrap(),
        ] {
            let r = reflect_grid(&u, &spec).unwrap();
            let mut sorted_a = u.values().to_vec();
            let mut sorted_b = r.values().to_vec();
            sorted_a.sort_by(f64::total_cmp);
            sorted_b.sort_by(f64::total_cmp);
            assert_eq!(sorted_a, sorted_b);
            let twice = reflect_grid(&r, &spec).unwrap();
            assert!(max_diff(&twice, &u) <= 1e-12);
            let w = omega(&u, &spec).unwrap();
            let wr = reflect_grid(&w, &spec).unwrap();
            assert!(w
                .values()
                .iter()
                .zip(wr.values())
                .all(|(a, b)| (a + b).abs() <= 1e-12));
        }
    }

    #[test]
    fn spectral_reflection_off_lattice() {
        // band-limited periodic data reflects exactly across any axis plane
        let l = std::f64::consts::PI;
        let u = GridFunction::from_fn(1, 64, l, true, |x| (x[0]).sin() + 0.5 * (3.0 * x[0]).cos())
            .unwrap();
        let spec = ReflectionSpec::axis(1, 0, 0.123).unwrap();
        let r = reflect_grid(&u, &spec).unwrap();
        let want = GridFunction::from_fn(1, 64, l, true, |x| {
            let y = 2.0 * 0.123 - x[0];
            y.sin() + 0.5 * (3.0 * y).cos()
        })
        .unwrap();
        assert!(max_diff(&r, &want) < 1e-12);
    }

    #[test]
    fn omega_examples() {
        let u = gaussian(2, 64, 6.0, false, &[0.0, 0.0]);
        let spec = ReflectionSpec::axis(2, 0, -1.0).unwrap();
        let w = omega(&u, &spec).unwrap();
        assert!(min_on_sigma(&w, &spec) >= 0.0);
        let h = u.spacing();
        let shifted = gaussian(2, 64, 6.0, false, &[6.0 * h, 0.0]);
        let spec = ReflectionSpec::axis(2, 0, 6.0 * h).unwrap();
        let w = omega(&shifted, &spec).unwrap();
        for i in 0..w.len() {
            let x = w.point(i);
            if spec.in_sigma(&x) && spec.reflect(&x)[0] < 6.0 - h {
                assert!(w.values()[i].abs() < 1e-15);
            }
        }
    }

    #[test]
    fn reflection_leaving_box_is_rejected_when_strict() {
        let u = gaussian(1, 32, 4.0, false, &[0.0]);
        let spec = ReflectionSpec::axis(1, 0, 2.0).unwrap();
        assert!(matches!(
            reflect_grid_within(&u, &spec),
            Err(Error::Geometry(_))
        ));
        let spec = ReflectionSpec::axis(1, 0, -2.0).unwrap();
        assert!(reflect_grid_within(&u, &spec).is_ok());
    }

    #[test]
    fn lambda0_examples() {
        let u = gaussian(2, 64, 6.0, false, &[0.0, 0.0]);
        let h = u.spacing();
        assert!(lambda0(&u, &[1.0, 0.0], 0.0).unwrap().abs() <= h);
        let shifted = gaussian(2, 64, 6.0, false, &[0.7, 0.0]);
        assert!((lambda0(&shifted, &[1.0, 0.0], 0.0).unwrap() - 0.7).abs() <= h);
        let flat = GridFunction::constant(2, 16, 3.0, false, 2.0).unwrap();
        assert!(matches!(
            lambda0(&flat, &[1.0, 0.0], 0.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn opposite_directions_agree() {
        let u = gaussian(2, 64, 6.0, true, &[0.37, -0.2]);
        let h = u.spacing();
        let a = lambda0(&u, &[1.0, 0.0], 0.0).unwrap();
        let b = lambda0(&u, &[-1.0, 0.0], 0.0).unwrap();
        assert!((a + b).abs() <= 2.0 * h, "{a} {b}");
    }

    #[test]
    fn symmetry_of_radial_data() {
        let u = gaussian(2, 64, 6.0, false, &[0.0, 0.0]);
        let dirs = standard_directions(2, 4);
        let report = symmetry_report(&u, &dirs).unwrap();
        assert!(report.max_asymmetry <= 1e-12, "{}", report.max_asymmetry);
        assert!(report.radial_monotone);
        assert!(report.center.iter().all(|c| c.abs() <= u.spacing()));
        let skew = GridFunction::from_fn(2, 64, 6.0, false, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            (-r2).exp() * (1.0 + 0.2 * x[0] / (1.0 + r2))
        })
        .unwrap();
        match symmetry_report(&skew, &dirs) {
            Err(Error::Asymmetry { .. }) => {}
            Ok(r) => assert!(r.max_asymmetry > 1e-3, "{}", r.max_asymmetry),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn refined_argmax_finds_offgrid_peak() {
        let u = gaussian(2, 64, 6.0, false, &[0.31, -0.12]);
        let c = refined_argmax(&u);
        assert!((c[0] - 0.31).abs() < 0.25 * u.spacing());
        assert!((c[1] + 0.12).abs() < 0.25 * u.spacing());
    }

    #[test]
    fn probe_on_sine_and_zero() {
        let l = 8.0;
        let u = GridFunction::from_fn(1, 256, l, false, |x| {
            -(std::f64::consts::PI * x[0] / l).sin() * (-x[0] * x[0] / 4.0).exp()
        })
        .unwrap();
        let spec = ReflectionSpec::axis(1, 0, 0.0).unwrap();
        let qp = QuadratureParams::for_grid(1, u.spacing()).unwrap();
        // -sin is positive on x<0, so flip to get a negative minimum in Σ_0
        let w = u.map(|v| -v).unwrap();
        assert!(antisym_min_probe(&w, &spec, &qp).unwrap() < 0.0);
        let zero = GridFunction::constant(1, 256, l, false, 0.0).unwrap();
        assert!(matches!(
            antisym_min_probe(&zero, &spec, &qp),
            Err(Error::Precondition(_))
        ));
        let not_anti = GridFunction::from_fn(1, 256, l, false, |x| (-x[0] * x[0]).exp()).unwrap();
        assert!(matches!(
            antisym_min_probe(&not_anti, &spec, &qp),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn random_samples_are_antisymmetric_with_negative_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [1, 2] {
            for _ in 0..5 {
                let s = random_antisymmetric(&mut rng, dim, 64, 8.0).unwrap();
                let r = reflect_grid(&s.omega, &s.spec).unwrap();
                assert!(r
                    .values()
                    .iter()
                    .zip(s.omega.values())
                    .all(|(a, b)| (a + b).abs() <= 1e-12));
                assert!(min_on_sigma(&s.omega, &s.spec) < 0.0);
            }
        }
    }

    #[test]
    fn decay_probe_examples() {
        let k1 = KernelSpec::new(1).unwrap();
        let p = decay_bound_check(&[-5.0], 0.0, &k1).unwrap();
        assert!(p.lhs_integral > 10.0 * p.rhs_bound);
        // oracle: direct half-line integral ∫_5^∞ κ(r)/r dr with κ = √π e^{-r}
        let oracle = quadrature::adaptive_to_infinity(
            |r| std::f64::consts::PI.sqrt() * (-r).exp() / r,
            5.0,
            Tolerance::default(),
        )
        .unwrap();
        assert!((p.lhs_integral - oracle).abs() < 1e-9 * oracle);
        let k2 = KernelSpec::new(2).unwrap();
        let p6 = decay_bound_check(&[-6.0, 0.0], 0.0, &k2).unwrap();
        assert!(p6.lhs_integral >= p6.rhs_bound);
        let p5 = decay_bound_check(&[-5.0, 0.0], 0.0, &k2).unwrap();
        let p8 = decay_bound_check(&[-8.0, 0.0], 0.0, &k2).unwrap();
        assert!(p5.lhs_integral > p8.lhs_integral);
        assert!(decay_bound_check(&[1.0], 0.0, &k1).is_err());
    }

    #[test]
    fn decay_probe_matches_planar_quadrature_in_2d() {
        // ∫_{z₁>0} κ(|x0-z|)/|x0-z|² dz on a polar-free tensor grid, x0 = (-4, 0)
        let k2 = KernelSpec::new(2).unwrap();
        let p = decay_bound_check(&[-4.0, 0.0], 0.0, &k2).unwrap();
        let oracle = quadrature::adaptive_to_infinity(
            |z1| {
                2.0 * quadrature::adaptive_to_infinity(
                    |z2| {
                        let r = ((z1 + 4.0).powi(2) + z2 * z2).sqrt();
                        k2.kappa(r).unwrap() / (r * r)
                    },
                    0.0,
                    Tolerance::default(),
                )
                .unwrap()
            },
            0.0,
            Tolerance::default(),
        )
        .unwrap();
        assert!(
            (p.lhs_integral - oracle).abs() < 1e-8 * oracle,
            "{} {oracle}",
            p.lhs_integral
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn antisymmetry_identity_holds(seed in 0u64..1000, k in -6i64..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<f64> = (0..24 * 24).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
            let u = GridFunction::new(2, 24, 3.0, false, values).unwrap();
            let spec = ReflectionSpec::axis(2, (seed % 2) as usize, k as f64 * u.spacing() / 2.0).unwrap();
            let w = omega(&u, &spec).unwrap();
            // ω(x^λ) = -ω(x) wherever both x and x^λ lie in the box
            for i in 0..u.len() {
                let x = u.point(i);
                let y = spec.reflect(&x);
                if y.iter().all(|&v| v >= -3.0 && v <= 3.0 - u.spacing()) {
                    prop_assert!((w.sample(&y) + w.values()[i]).abs() <= 1e-12);
                }
            }
        }
    }
}
