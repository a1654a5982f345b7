//! Modified Bessel function of the second kind and the two radial kernels.
//!
//! `K_ν` is evaluated from the integral
//!
//! ```text
//! K_ν(r) = sqrt(π/2) r^ν e^{-r} / Γ(ν + 1/2) · ∫_0^∞ (1 + t/2)^{ν-1/2} e^{-rt} t^{ν-1/2} dt
//! ```
//!
//! rescaled by `τ = r t` so that `r^ν K_ν(r)` stays finite as `r → 0`, and then
//! mapped onto `[0, 1)` by `τ = w²`, `w = v / (1 - v)`. Beyond `r = 25` the
//! large-argument asymptotic series takes over.
//!
//! The logarithmic kernel is `κ(r) = 2^{1-N/2} r^{N/2} K_{N/2}(r)` with
//! normalisation `c_N = π^{-N/2}`; the relativistic kernel is
//! `ϖ_s(r) = 2^{1-ν} r^ν K_ν(r)`, `ν = N/2 + s`, with `c_{N,s} = π^{-N/2} 4^s / Γ(-s)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};

/// Arguments above this use the asymptotic expansion.
pub const ASYMPTOTIC_THRESHOLD: f64 = 25.0;

/// Gamma function on the reals (poles at non-positive integers give ±∞).
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Value of `K_ν(r)` together with the underflow flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselK {
    pub value: f64,
    /// Set when `e^{-r}` underflows and the value was flushed to zero.
    pub underflow: bool,
}

fn check_args(nu: f64, r: f64) -> Result<()> {
    if !nu.is_finite() {
        return Err(Error::Domain(format!(
            "Bessel order must be finite, got {nu}"
        )));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!(
            "Bessel argument must be positive and finite, got {r}"
        )));
    }
    Ok(())
}

/// `K_ν(r)` with the underflow flag. Negative orders map to `|ν|`.
pub fn bessel_k_eval(nu: f64, r: f64) -> Result<BesselK> {
    check_args(nu, r)?;
    let nu = nu.abs();
    let log_envelope = 0.5 * (PI / (2.0 * r)).ln() - r;
    if log_envelope < f64::MIN_POSITIVE.ln() {
        return Ok(BesselK {
            value: 0.0,
            underflow: true,
        });
    }
    let value = if r > ASYMPTOTIC_THRESHOLD {
        (PI / (2.0 * r)).sqrt() * (-r).exp() * asymptotic_series(nu, r)
    } else {
        scaled_by_integral(nu, r)? / r.powf(nu)
    };
    Ok(BesselK {
        value,
        underflow: false,
    })
}

/// `K_ν(r)` for `r > 0`; underflowed values are returned as `0.0`.
pub fn bessel_k(nu: f64, r: f64) -> Result<f64> {
    bessel_k_eval(nu, r).map(|k| k.value)
}

/// Derivative from the recurrence `K'_ν(r) = -(ν/r) K_ν(r) - K_{ν-1}(r)`.
pub fn bessel_k_prime(nu: f64, r: f64) -> Result<f64> {
    check_args(nu, r)?;
    let nu = nu.abs();
    Ok(-(nu / r) * bessel_k(nu, r)? - bessel_k(nu - 1.0, r)?)
}

/// `r^ν K_ν(r)` for `r ≥ 0`, continuous at the origin with limit `2^{ν-1} Γ(ν)`.
///
/// Only orders `ν > 0` have a finite limit at `r = 0`.
pub fn scaled_bessel_k(nu: f64, r: f64) -> Result<f64> {
    let nu = nu.abs();
    if r == 0.0 {
        if nu == 0.0 {
            return Err(Error::Domain("r^0 K_0(r) diverges at r = 0".into()));
        }
        return Ok(2f64.powf(nu - 1.0) * gamma(nu));
    }
    check_args(nu, r)?;
    if r > ASYMPTOTIC_THRESHOLD {
        let log_envelope = 0.5 * (PI / (2.0 * r)).ln() - r + nu * r.ln();
        if log_envelope < f64::MIN_POSITIVE.ln() {
            return Ok(0.0);
        }
        return Ok(log_envelope.exp() * asymptotic_series(nu, r));
    }
    scaled_by_integral(nu, r)
}

// r^ν K_ν(r) = sqrt(π/2) 2^{1/2-ν} e^{-r} / Γ(ν+1/2) · ∫_0^∞ e^{-τ} τ^{ν-1/2} (2r + τ)^{ν-1/2} dτ
fn scaled_by_integral(nu: f64, r: f64) -> Result<f64> {
    let two_r = 2.0 * r;
    let expo = nu - 0.5;
    let integrand = |v: f64| {
        let one_minus = 1.0 - v;
        if one_minus <= 0.0 {
            return 0.0;
        }
        let w = v / one_minus;
        let w2 = w * w;
        let log_f = -w2 + 2.0 * nu * w.ln() + expo * (two_r + w2).ln();
        2.0 * log_f.exp() / (one_minus * one_minus)
    };
    let integral = quadrature::adaptive(integrand, 0.0, 1.0, Tolerance::default())?;
    Ok((PI / 2.0).sqrt() * 2f64.powf(0.5 - nu) * (-r).exp() * integral / gamma(nu + 0.5))
}

// Σ_k a_k(ν) / r^k with a_k = Π_{j≤k} (4ν² - (2j-1)²) / (k! 8^k)
fn asymptotic_series(nu: f64, r: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = term * (mu - odd * odd) / (kf * 8.0 * r);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Dimension and normalisation of the logarithmic operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    dim: usize,
    c_n: f64,
}

impl KernelSpec {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        Ok(KernelSpec {
            dim,
            c_n: PI.powf(-(dim as f64) / 2.0),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `c_N = π^{-N/2}`.
    pub fn c_n(&self) -> f64 {
        self.c_n
    }

    /// `κ(r) = 2^{1-N/2} r^{N/2} K_{N/2}(r)`.
    pub fn kappa(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("kappa needs r > 0, got {r}")));
        }
        self.profile(r)
    }

    /// `κ(r)` extended continuously to `r = 0` (limit `Γ(N/2)`).
    pub(crate) fn profile(&self, r: f64) -> Result<f64> {
        let nu = self.dim as f64 / 2.0;
        Ok(2f64.powf(1.0 - nu) * scaled_bessel_k(nu, r)?)
    }

    /// `κ'(r)` assembled from [`bessel_k_prime`].
    pub fn kappa_prime(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("kappa needs r > 0, got {r}")));
        }
        let nu = self.dim as f64 / 2.0;
        let k = bessel_k(nu, r)?;
        let dk = bessel_k_prime(nu, r)?;
        Ok(2f64.powf(1.0 - nu) * r.powf(nu) * (nu * k / r + dk))
    }
}

/// Order and normalisation of the relativistic operator `(I - Δ)^s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalSpec {
    dim: usize,
    s: f64,
    c_ns: f64,
}

impl FractionalSpec {
    pub fn new(dim: usize, s: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!(
                "order s must lie in (0, 1), got {s}"
            )));
        }
        // Γ(-s) = Γ(1 - s) / (-s) keeps the argument of Γ in (0, 1)
        let gamma_neg_s = gamma(1.0 - s) / (-s);
        let c_ns = PI.powf(-(dim as f64) / 2.0) * 4f64.powf(s) / gamma_neg_s;
        Ok(FractionalSpec { dim, s, c_ns })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `c_{N,s} = π^{-N/2} 4^s / Γ(-s)`, negative on `(0, 1)`.
    pub fn c_ns(&self) -> f64 {
        self.c_ns
    }

    fn order(&self) -> f64 {
        self.dim as f64 / 2.0 + self.s
    }

    /// `ϖ_s(r) = 2^{1-ν} r^ν K_ν(r)` with `ν = (N + 2s)/2`.
    pub fn varpi(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("varpi needs r > 0, got {r}")));
        }
        self.profile(r)
    }

    pub(crate) fn profile(&self, r: f64) -> Result<f64> {
        let nu = self.order();
        Ok(2f64.powf(1.0 - nu) * scaled_bessel_k(nu, r)?)
    }

    /// `ϖ_s(r)` from its heat-kernel form `∫_0^∞ t^{ν-1} e^{-t - r²/(4t)} dt`.
    ///
    /// Independent of the Bessel evaluation path; integrated in `y = ln t`.
    pub fn varpi_integral_form(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("varpi needs r > 0, got {r}")));
        }
        varpi_heat_integral(self.order(), r)
    }
}

pub(crate) fn varpi_heat_integral(nu: f64, r: f64) -> Result<f64> {
    let q = r * r / 4.0;
    // the integrand peaks near t* = (ν-1 + sqrt((ν-1)² + r²)) / 2
    let peak = 0.5 * ((nu - 1.0) + ((nu - 1.0).powi(2) + r * r).sqrt());
    let centre = peak.max(1e-300).ln();
    let f = |y: f64| {
        let t = y.exp();
        (nu * y - t - q / t).exp()
    };
    let tol = Tolerance {
        abs: 0.0,
        rel: 1e-13,
        max_evals: 1 << 16,
    };
    let lo = quadrature::adaptive(f, centre - 60.0, centre, tol)?;
    let hi = quadrature::adaptive(f, centre, centre + 8.0 + centre.abs(), tol)?;
    Ok(lo + hi)
}

/// `κ(r)` for the given dimension.
pub fn kappa(spec: &KernelSpec, r: f64) -> Result<f64> {
    spec.kappa(r)
}

/// `ϖ_s(r)` for the given order.
pub fn varpi_s(spec: &FractionalSpec, r: f64) -> Result<f64> {
    spec.varpi(r)
}

/// `c_{N,s}`.
pub fn c_norm(spec: &FractionalSpec) -> f64 {
    spec.c_ns()
}
