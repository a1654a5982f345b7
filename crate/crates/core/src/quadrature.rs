//! Gauss–Legendre rules and an adaptive bisection integrator built on them.

use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on the three-term Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Applies the rule to `f` on `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared 15-point rule used by the adaptive integrator.
pub fn gl15() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(15))
}

/// Shared 32-point rule for fixed-order tensor quadrature.
pub fn gl32() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(32))
}

/// Stopping rule for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    /// Upper bound on integrand evaluations.
    pub max_evals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-12,
            rel: 1e-13,
            max_evals: 1 << 14,
        }
    }
}

/// Globally adaptive bisection with a 15-point Gauss–Legendre rule.
///
/// The panel with the largest error estimate (difference between the
/// whole-panel rule and the sum over its halves) is split until the summed
/// estimate falls below the tolerance.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let rule = gl15();
    let per_panel = rule.nodes.len();
    let mut evals = 0;
    let mut heap = BinaryHeap::new();
    let split = |lo: f64, hi: f64, f: &mut F, evals: &mut usize| {
        let mid = 0.5 * (lo + hi);
        let coarse = rule.integrate(&mut *f, lo, hi);
        let fine = rule.integrate(&mut *f, lo, mid) + rule.integrate(&mut *f, mid, hi);
        *evals += 3 * per_panel;
        let err = if mid <= lo.min(hi) || mid >= lo.max(hi) {
            0.0
        } else {
            (fine - coarse).abs()
        };
        Panel {
            err,
            lo,
            hi,
            value: fine,
        }
    };
    let first = split(a, b, &mut f, &mut evals);
    let mut total = first.value;
    let mut total_err = first.err;
    heap.push(first);
    loop {
        let target = tol.abs.max(tol.rel * total.abs());
        if total_err <= target {
            break;
        }
        if evals + 6 * per_panel > tol.max_evals {
            return Err(Error::Numeric(format!(
                "adaptive quadrature on [{a}, {b}] exceeded {} evaluations",
                tol.max_evals
            )));
        }
        let worst = match heap.pop() {
            Some(p) if p.err > 0.0 => p,
            Some(p) => {
                heap.push(p);
                break;
            }
            None => break,
        };
        let mid = 0.5 * (worst.lo + worst.hi);
        let left = split(worst.lo, mid, &mut f, &mut evals);
        let right = split(mid, worst.hi, &mut f, &mut evals);
        total += left.value + right.value - worst.value;
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
    }
    // resum to shed the drift of the running update
    Ok(heap.iter().map(|p| p.value).sum())
}

struct Panel {
    err: f64,
    lo: f64,
    hi: f64,
    value: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Integral over `[a, ∞)` by the map `x = a + t / (1 - t)`.
pub fn adaptive_to_infinity<F: FnMut(f64) -> f64>(mut f: F, a: f64, tol: Tolerance) -> Result<f64> {
    adaptive(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let one_minus = 1.0 - t;
            let x = a + t / one_minus;
            let v = f(x) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}
