//! Ground states of `(I-Δ)^log u + m u = u^p` on the periodic box.
//!
//! The iteration is Petviashvili's normalised fixed point
//!
//! ```text
//! u ← M^γ ((I-Δ)^log + m)^{-1} P[u^p],   M = ⟨(L+m)u, u⟩ / ⟨P[u^p], u⟩
//! ```
//!
//! with `P` the two-thirds dealiasing filter and `γ = p/(p-1)` by default.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::operator_quad::QuadOperator;
use crate::operator_spectral::{wavenumber, SpectralPlan};

/// `m > 0`, `p > 1` and the far-field threshold `(m/p)^{1/(p-1)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquationParams {
    m: f64,
    p: f64,
    threshold: f64,
}

impl EquationParams {
    pub fn new(m: f64, p: f64) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::Domain(format!("m must be positive, got {m}")));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Domain(format!("p must exceed 1, got {p}")));
        }
        Ok(EquationParams {
            m,
            p,
            threshold: (m / p).powf(1.0 / (p - 1.0)),
        })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// The positive constant solution `m^{1/(p-1)}`.
    pub fn constant_solution(&self) -> f64 {
        self.m.powf(1.0 / (self.p - 1.0))
    }

    /// `u^p` extended oddly to negative `u`.
    pub fn power(&self, u: f64) -> f64 {
        u.signum() * u.abs().powf(self.p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub dim: usize,
    pub n: usize,
    pub half_width: f64,
    /// Initial Gaussian `amplitude · exp(-|x - x_c|² / width²)`.
    pub amplitude: f64,
    pub width: f64,
    /// Offset of `x_c` along `e₁`, in grid cells.
    pub offset_cells: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Stabilising exponent; `None` means `p/(p-1)`.
    pub gamma: Option<f64>,
    pub dealias: bool,
}

impl SolveConfig {
    pub fn new(dim: usize, n: usize, half_width: f64) -> Self {
        SolveConfig {
            dim,
            n,
            half_width,
            amplitude: 1.0,
            width: 1.0,
            offset_cells: 0.5,
            max_iter: 500,
            tol: 1e-6,
            gamma: None,
            dealias: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Domain("tolerance must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Domain("max_iter must be at least 1".into()));
        }
        if !(self.width > 0.0) {
            return Err(Error::Domain("initial width must be positive".into()));
        }
        Ok(())
    }

    pub fn initial_guess(&self) -> Result<GridFunction> {
        let h = 2.0 * self.half_width / self.n as f64;
        let shift = self.offset_cells * h;
        let (a, w2) = (self.amplitude, self.width * self.width);
        GridFunction::from_fn(self.dim, self.n, self.half_width, true, |x| {
            let r2: f64 = x
                .iter()
                .enumerate()
                .map(|(i, &v)| if i == 0 { (v - shift).powi(2) } else { v * v })
                .sum();
            a * (-r2 / w2).exp()
        })
    }
}

/// One line of the iteration log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub residual: f64,
    pub max_u: f64,
    pub quotient: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub u: GridFunction,
    pub history: Vec<IterationRecord>,
}

/// Solves from the configured Gaussian initial guess.
pub fn solve(params: &EquationParams, cfg: &SolveConfig) -> Result<SolveOutcome> {
    cfg.validate()?;
    let init = cfg.initial_guess()?;
    solve_from(params, cfg, init)
}

/// Solves from `init`, which must be periodic and match the configured grid.
pub fn solve_from(
    params: &EquationParams,
    cfg: &SolveConfig,
    init: GridFunction,
) -> Result<SolveOutcome> {
    let mut history = Vec::new();
    let u = solve_logged(params, cfg, init, &mut history)?;
    Ok(SolveOutcome { u, history })
}

/// As [`solve_from`], but the log survives a failed run.
pub fn solve_logged(
    params: &EquationParams,
    cfg: &SolveConfig,
    init: GridFunction,
    history: &mut Vec<IterationRecord>,
) -> Result<GridFunction> {
    cfg.validate()?;
    if !init.periodic()
        || init.dim() != cfg.dim
        || init.n() != cfg.n
        || init.half_width() != cfg.half_width
    {
        return Err(Error::Contract(
            "initial guess does not match the solver grid".into(),
        ));
    }
    if init.max_abs() == 0.0 {
        return Err(Error::TrivialSolution { max_u: 0.0 });
    }
    let plan = SpectralPlan::for_grid(&init);
    let gamma = cfg.gamma.unwrap_or(params.p / (params.p - 1.0));
    let mut u = init;
    for iter in 1..=cfg.max_iter {
        let power = u.map(|v| params.power(v))?;
        let nonlinear = if cfg.dealias {
            dealias(&plan, &power)?
        } else {
            power
        };
        let lu = plan.apply_log(&u)?;
        let numerator: f64 = dot(&lu, &u) + params.m * dot(&u, &u);
        let denominator = dot(&nonlinear, &u);
        if !(denominator > 0.0) {
            return Err(Error::TrivialSolution { max_u: u.max() });
        }
        let quotient = numerator / denominator;
        let update = plan.inverse_shifted(&nonlinear, params.m)?;
        let scale = quotient.powf(gamma);
        let next = update.map(|v| scale * v)?;
        let max_u = next.max();
        if !(max_u >= cfg.tol) {
            return Err(Error::TrivialSolution { max_u });
        }
        let floor = -cfg.tol * max_u;
        let min_u = next.min();
        if min_u < floor {
            return Err(Error::NegativeUndershoot {
                iteration: iter,
                min_u,
                threshold: floor,
            });
        }
        u = next.map(|v| v.max(0.0))?;
        let res = residual_with(&plan, &u, params)?;
        history.push(IterationRecord {
            iter,
            residual: res,
            max_u,
            quotient,
        });
        if res <= cfg.tol * max_u {
            return Ok(u);
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        last_residual: history.last().map_or(f64::NAN, |r| r.residual),
        history: history.iter().map(|r| r.residual).collect(),
    })
}

// Fixed chunking keeps the summation order, and so the result, run-independent.
fn dot(a: &GridFunction, b: &GridFunction) -> f64 {
    let partial: Vec<f64> = a
        .values()
        .par_chunks(4096)
        .zip(b.values().par_chunks(4096))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partial.iter().sum()
}

/// Two-thirds rule: zero every mode with `|k_i| > n/3` on some axis.
pub fn dealias(plan: &SpectralPlan, u: &GridFunction) -> Result<GridFunction> {
    let mut spectrum = plan.forward(u)?;
    let n = u.n();
    let cutoff = n as i64 / 3;
    let dim = u.dim();
    spectrum
        .coeffs
        .par_iter_mut()
        .enumerate()
        .for_each(|(idx, c)| {
            let mut rem = idx;
            for _ in 0..dim {
                if wavenumber(rem % n, n).abs() > cutoff {
                    *c = Default::default();
                    return;
                }
                rem /= n;
            }
        });
    plan.inverse(&spectrum, u)
}

fn residual_with(plan: &SpectralPlan, u: &GridFunction, params: &EquationParams) -> Result<f64> {
    let lu = plan.apply_log(u)?;
    Ok(lu
        .values()
        .par_iter()
        .zip(u.values().par_iter())
        .map(|(&l, &v)| (l + params.m * v - params.power(v)).abs())
        .reduce(|| 0.0, f64::max))
}

/// `max |(I-Δ)^log u + m u - u^p|` with the spectral operator.
pub fn residual(u: &GridFunction, params: &EquationParams) -> Result<f64> {
    residual_with(&SpectralPlan::for_grid(u), u, params)
}

/// The same residual evaluated pointwise with the quadrature operator.
pub fn quadrature_residual(
    u: &GridFunction,
    params: &EquationParams,
    op: &QuadOperator,
    points: &[Vec<f64>],
) -> Result<f64> {
    let values = op.apply_at_points(u, points)?;
    Ok(values
        .iter()
        .zip(points)
        .map(|(&l, x)| {
            let v = u.sample(x);
            (l + params.m * v - params.power(v)).abs()
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C2Report {
    /// Far-field value, estimated as the largest value on the boundary shell.
    pub a: f64,
    pub threshold: f64,
    pub holds: bool,
    /// Smallest `c(x) = m - p u^{p-1}` on the boundary shell.
    pub min_boundary_coefficient: f64,
}

/// Checks `lim u = a < (m/p)^{1/(p-1)}` with `a` read off the boundary shell.
pub fn check_c2(u: &GridFunction, params: &EquationParams) -> C2Report {
    let mut multi = vec![0; u.dim()];
    let mut a = f64::NEG_INFINITY;
    let mut min_c = f64::INFINITY;
    for i in 0..u.len() {
        u.unravel(i, &mut multi);
        if multi.iter().any(|&j| j == 0 || j == u.n() - 1) {
            let v = u.values()[i];
            a = a.max(v);
            min_c = min_c.min(params.m - params.p * v.max(0.0).powf(params.p - 1.0));
        }
    }
    C2Report {
        a,
        threshold: params.threshold,
        holds: a < params.threshold,
        min_boundary_coefficient: min_c,
    }
}

/// True when every axis line through the argmax rises to it and falls after it.
pub fn axis_unimodal(u: &GridFunction, tol: f64) -> bool {
    let dim = u.dim();
    let mut peak = vec![0; dim];
    u.unravel(u.argmax(), &mut peak);
    let mut multi = peak.clone();
    for axis in 0..dim {
        multi.copy_from_slice(&peak);
        let line: Vec<f64> = (0..u.n())
            .map(|j| {
                multi[axis] = j;
                u.values()[u.ravel(&multi)]
            })
            .collect();
        let top = peak[axis];
        let rising = line[..=top].windows(2).all(|w| w[1] >= w[0] - tol);
        let falling = line[top..].windows(2).all(|w| w[1] <= w[0] + tol);
        if !(rising && falling) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_and_threshold() {
        let p = EquationParams::new(1.0, 3.0).unwrap();
        assert!((p.threshold() - 0.577_350_269_189_625_8).abs() < 1e-15);
        assert_eq!(p.constant_solution(), 1.0);
        assert!(EquationParams::new(0.0, 3.0).is_err());
        assert!(EquationParams::new(1.0, 1.0).is_err());
    }

    #[test]
    fn residual_examples() {
        let params = EquationParams::new(1.0, 3.0).unwrap();
        let zero = GridFunction::constant(1, 64, 12.0, true, 0.0).unwrap();
        assert_eq!(residual(&zero, &params).unwrap(), 0.0);
        let c = 0.7;
        let flat = GridFunction::constant(1, 64, 12.0, true, c).unwrap();
        let want = (params.m() * c - c.powi(3)).abs();
        assert!((residual(&flat, &params).unwrap() - want).abs() < 1e-12);
        let root = GridFunction::constant(2, 16, 12.0, true, params.constant_solution()).unwrap();
        assert!(residual(&root, &params).unwrap() < 1e-12);
    }

    #[test]
    fn zero_initial_guess_is_trivial() {
        let params = EquationParams::new(1.0, 3.0).unwrap();
        let cfg = SolveConfig::new(1, 64, 12.0);
        let zero = GridFunction::constant(1, 64, 12.0, true, 0.0).unwrap();
        assert!(matches!(
            solve_from(&params, &cfg, zero),
            Err(Error::TrivialSolution { .. })
        ));
    }

    #[test]
    fn c2_on_constants_and_decay() {
        let params = EquationParams::new(1.0, 3.0).unwrap();
        let root = GridFunction::constant(1, 32, 12.0, true, params.constant_solution()).unwrap();
        let report = check_c2(&root, &params);
        assert!(!report.holds);
        assert_eq!(report.a, 1.0);
        let bump = GridFunction::from_fn(1, 128, 12.0, true, |x| (-x[0] * x[0]).exp()).unwrap();
        let report = check_c2(&bump, &params);
        assert!(report.holds && report.a < 1e-20);
        assert!(report.min_boundary_coefficient >= 0.0);
    }

    #[test]
    fn dealias_drops_high_modes_only() {
        let n = 48;
        let l = std::f64::consts::PI;
        let plan = SpectralPlan::new(1, n, l);
        let low = GridFunction::from_fn(1, n, l, true, |x| (3.0 * x[0]).cos()).unwrap();
        let high = GridFunction::from_fn(1, n, l, true, |x| (20.0 * x[0]).sin()).unwrap();
        let mix = low.lin_comb(1.0, &high, 1.0).unwrap();
        let out = dealias(&plan, &mix).unwrap();
        let err = out
            .values()
            .iter()
            .zip(low.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-13);
    }

    #[test]
    fn solver_converges_below_the_fold() {
        // m = 0.3 admits a resolved smooth ground state in one dimension
        let params = EquationParams::new(0.3, 3.0).unwrap();
        let cfg = SolveConfig::new(1, 512, 12.0);
        let out = solve(&params, &cfg).unwrap();
        let u = &out.u;
        assert!(residual(u, &params).unwrap() <= cfg.tol * u.max());
        assert!(u.min() >= 0.0);
        assert!(axis_unimodal(u, 1e-12));
        assert!(check_c2(u, &params).holds);
        assert!(out.history.len() <= cfg.max_iter);
    }

    #[test]
    fn unimodality_detects_two_bumps() {
        let two = GridFunction::from_fn(1, 128, 8.0, true, |x| {
            (-(x[0] - 2.0).powi(2)).exp() + 0.8 * (-(x[0] + 2.0).powi(2)).exp()
        })
        .unwrap();
        assert!(!axis_unimodal(&two, 1e-12));
    }
}
