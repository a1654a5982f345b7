//! Fourier-multiplier evaluation on the periodic box.
//!
//! The discrete frequencies are `ξ = π k / L` with `k ∈ [-n/2, n/2)^N`, and the
//! symbols `log(1 + |ξ|²)` and `(1 + |ξ|²)^s` are applied exactly at them.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Imaginary residue tolerated when returning to real samples, relative to the
/// largest real magnitude.
const IMAG_RESIDUE: f64 = 1e-12;

/// Forward/inverse transforms for one grid geometry.
///
/// Plans are immutable and shareable across threads.
#[derive(Clone)]
pub struct SpectralPlan {
    dim: usize,
    n: usize,
    half_width: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    xi2: Arc<Vec<f64>>,
}

impl std::fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPlan")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("half_width", &self.half_width)
            .finish()
    }
}

/// Integer frequency of FFT bin `i` on an `n`-point axis, in `[-n/2, n/2)`.
pub fn wavenumber(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl SpectralPlan {
    pub fn new(dim: usize, n: usize, half_width: f64) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let total = n.pow(dim as u32);
        let scale = std::f64::consts::PI / half_width;
        let xi2 = (0..total)
            .map(|mut idx| {
                let mut acc = 0.0;
                for _ in 0..dim {
                    let xi = scale * wavenumber(idx % n, n) as f64;
                    acc += xi * xi;
                    idx /= n;
                }
                acc
            })
            .collect();
        SpectralPlan {
            dim,
            n,
            half_width,
            forward,
            inverse,
            xi2: Arc::new(xi2),
        }
    }

    pub fn for_grid(u: &GridFunction) -> Self {
        SpectralPlan::new(u.dim(), u.n(), u.half_width())
    }

    fn check(&self, u: &GridFunction) -> Result<()> {
        if !u.periodic() {
            return Err(Error::Contract(
                "spectral operators need a periodic grid function".into(),
            ));
        }
        if u.dim() != self.dim || u.n() != self.n || u.half_width() != self.half_width {
            return Err(Error::Contract(
                "grid does not match the spectral plan".into(),
            ));
        }
        Ok(())
    }

    /// `|ξ|²` for every coefficient, in storage order.
    pub fn xi_squared(&self) -> &[f64] {
        &self.xi2
    }

    pub fn forward(&self, u: &GridFunction) -> Result<Spectrum> {
        self.check(u)?;
        let mut coeffs: Vec<Complex64> =
            u.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut coeffs, &self.forward);
        Ok(Spectrum {
            dim: self.dim,
            n: self.n,
            half_width: self.half_width,
            coeffs,
        })
    }

    /// Inverse transform; fails if the result is not real to within the residue tolerance.
    pub fn inverse(&self, spectrum: &Spectrum, template: &GridFunction) -> Result<GridFunction> {
        let mut data = spectrum.coeffs.clone();
        self.transform(&mut data, &self.inverse);
        let norm = 1.0 / data.len() as f64;
        let mut max_re: f64 = 0.0;
        let mut max_im: f64 = 0.0;
        let values: Vec<f64> = data
            .iter()
            .map(|c| {
                max_re = max_re.max((c.re * norm).abs());
                max_im = max_im.max((c.im * norm).abs());
                c.re * norm
            })
            .collect();
        if max_im > IMAG_RESIDUE * max_re.max(f64::MIN_POSITIVE) && max_im > 1e-300 {
            return Err(Error::Numeric(format!(
                "inverse transform left imaginary residue {max_im:e} (max real {max_re:e})"
            )));
        }
        template.with_values(values)
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                data.par_chunks_mut(n).for_each(|line| {
                    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
                    fft.process_with_scratch(line, &mut scratch);
                });
            } else {
                data.par_chunks_mut(n * stride).for_each(|block| {
                    let mut line = vec![Complex64::default(); n];
                    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
                    for inner in 0..stride {
                        for (k, slot) in line.iter_mut().enumerate() {
                            *slot = block[inner + k * stride];
                        }
                        fft.process_with_scratch(&mut line, &mut scratch);
                        for (k, value) in line.iter().enumerate() {
                            block[inner + k * stride] = *value;
                        }
                    }
                });
            }
        }
    }

    /// Multiplies the spectrum of `u` by `symbol(|ξ|²)` and transforms back.
    pub fn apply_multiplier<F>(&self, u: &GridFunction, symbol: F) -> Result<GridFunction>
    where
        F: Fn(f64) -> f64 + Sync,
    {
        let mut spectrum = self.forward(u)?;
        spectrum
            .coeffs
            .par_iter_mut()
            .zip(self.xi2.par_iter())
            .for_each(|(c, &x2)| *c *= symbol(x2));
        self.inverse(&spectrum, u)
    }

    pub fn apply_log(&self, u: &GridFunction) -> Result<GridFunction> {
        self.apply_multiplier(u, |x2| x2.ln_1p())
    }

    pub fn apply_s(&self, u: &GridFunction, s: f64) -> Result<GridFunction> {
        if !(0.0..1.0).contains(&s) {
            return Err(Error::Domain(format!(
                "order s must lie in [0, 1), got {s}"
            )));
        }
        self.check(u)?;
        if s == 0.0 {
            return Ok(u.clone());
        }
        self.apply_multiplier(u, |x2| (s * x2.ln_1p()).exp())
    }

    pub fn inverse_shifted(&self, rhs: &GridFunction, m: f64) -> Result<GridFunction> {
        if !(m > 0.0) {
            return Err(Error::Domain(format!("shift m must be positive, got {m}")));
        }
        self.apply_multiplier(rhs, |x2| 1.0 / (x2.ln_1p() + m))
    }

    /// Translates `u` by `d` (`v(x) = u(x - d)`), exact for band-limited data.
    ///
    /// The Nyquist bin gets the real factor `cos(ξ d)` so the output stays real.
    pub fn translate(&self, u: &GridFunction, d: &[f64]) -> Result<GridFunction> {
        let mut spectrum = self.forward(u)?;
        let n = self.n;
        let scale = std::f64::consts::PI / self.half_width;
        let dim = self.dim;
        spectrum
            .coeffs
            .par_iter_mut()
            .enumerate()
            .for_each(|(idx, c)| {
                let mut rem = idx;
                let mut factor = Complex64::new(1.0, 0.0);
                for axis in (0..dim).rev() {
                    let i = rem % n;
                    rem /= n;
                    let k = wavenumber(i, n);
                    let phase = -scale * k as f64 * d[axis];
                    factor *= if 2 * i == n {
                        Complex64::new(phase.cos(), 0.0)
                    } else {
                        Complex64::from_polar(1.0, phase)
                    };
                }
                *c *= factor;
            });
        self.inverse(&spectrum, u)
    }
}

/// Fourier coefficients of a grid function.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub dim: usize,
    pub n: usize,
    pub half_width: f64,
    pub coeffs: Vec<Complex64>,
}

impl Spectrum {
    /// Integer frequency vector of coefficient `idx`.
    pub fn frequency(&self, idx: usize) -> Vec<i64> {
        let mut k = vec![0; self.dim];
        let mut rem = idx;
        for axis in (0..self.dim).rev() {
            k[axis] = wavenumber(rem % self.n, self.n);
            rem /= self.n;
        }
        k
    }

    /// Storage index of the integer frequency `k` (taken modulo `n`).
    pub fn index_of(&self, k: &[i64]) -> usize {
        let n = self.n as i64;
        k.iter()
            .fold(0, |acc, &ki| acc * self.n + ki.rem_euclid(n) as usize)
    }
}

/// `log(1 + |ξ|²) û`, transformed back.
pub fn apply_symbol_log(u: &GridFunction) -> Result<GridFunction> {
    SpectralPlan::for_grid(u).apply_log(u)
}

/// `(1 + |ξ|²)^s û`, transformed back; `s = 0` is the identity.
pub fn apply_symbol_s(u: &GridFunction, s: f64) -> Result<GridFunction> {
    SpectralPlan::for_grid(u).apply_s(u, s)
}

/// `max |(I-Δ)^s u - u - s (I-Δ)^log u|`.
pub fn taylor_residual(u: &GridFunction, s: f64) -> Result<f64> {
    let plan = SpectralPlan::for_grid(u);
    let fractional = plan.apply_s(u, s)?;
    let log = plan.apply_log(u)?;
    Ok(fractional
        .values()
        .iter()
        .zip(u.values())
        .zip(log.values())
        .map(|((&a, &b), &c)| (a - b - s * c).abs())
        .fold(0.0, f64::max))
}

/// Solves `((I-Δ)^log + m) v = rhs`.
pub fn inverse_shifted_symbol(rhs: &GridFunction, m: f64) -> Result<GridFunction> {
    SpectralPlan::for_grid(rhs).inverse_shifted(rhs, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_diff(a: &GridFunction, b: &GridFunction) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    // cos(π k x / L) with |ξ| = 1 needs L = k π
    fn unit_mode(dim: usize, n: usize) -> GridFunction {
        let l = 4.0 * std::f64::consts::PI;
        GridFunction::from_fn(dim, n, l, true, |x| (x[0]).cos()).unwrap()
    }

    #[test]
    fn constants_are_annihilated_or_preserved() {
        let c = GridFunction::constant(2, 16, 3.0, true, 2.5).unwrap();
        assert!(apply_symbol_log(&c).unwrap().max_abs() < 1e-12);
        assert!(max_diff(&apply_symbol_s(&c, 0.3).unwrap(), &c) < 1e-12);
        let inv = inverse_shifted_symbol(&c, 2.0).unwrap();
        assert!(inv.values().iter().all(|v| (v - 1.25).abs() < 1e-12));
        assert!(taylor_residual(&c, 0.2).unwrap() < 1e-12);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn single_mode_multipliers() {
        let u = unit_mode(1, 64);
        let log2 = std::f64::consts::LN_2;
        let got = apply_symbol_log(&u).unwrap();
        let want = u.map(|v| log2 * v).unwrap();
        assert!(max_diff(&got, &want) < 1e-14);
        let half = apply_symbol_s(&u, 0.5).unwrap();
        assert!(max_diff(&half, &u.map(|v| 2f64.sqrt() * v).unwrap()) < 1e-14);
        let inv = inverse_shifted_symbol(&u, 1.0).unwrap();
        assert!(max_diff(&inv, &u.map(|v| v / (log2 + 1.0)).unwrap()) < 1e-14);
        for &s in &[0.5, 0.1, 0.01] {
            let exact = (2f64.powf(s) - 1.0 - s * log2).abs();
            assert!((taylor_residual(&u, s).unwrap() - exact).abs() < 1e-14);
        }
        assert!((0.693_147_2 - log2).abs() < 1e-7);
    }

    #[test]
    fn zero_order_is_identity_and_limit_is_monotone() {
        let u = GridFunction::from_fn(1, 128, 8.0, true, |x| (-x[0] * x[0]).exp() * (1.0 + x[0]))
            .unwrap();
        assert_eq!(apply_symbol_s(&u, 0.0).unwrap(), u);
        let mut last = f64::INFINITY;
        for &s in &[0.4, 0.2, 0.1, 0.05, 0.025] {
            let d = max_diff(&apply_symbol_s(&u, s).unwrap(), &u);
            assert!(d < last);
            last = d;
        }
        assert!(apply_symbol_s(&u, 1.0).is_err());
        assert!(apply_symbol_s(&u, -0.1).is_err());
    }

    #[test]
    fn smooth_bump_taylor_remainder_is_second_order() {
        let u = GridFunction::from_fn(1, 256, 12.0, true, |x| (-x[0] * x[0] / 2.0).exp()).unwrap();
        let r1 = taylor_residual(&u, 0.02).unwrap();
        let r2 = taylor_residual(&u, 0.01).unwrap();
        let ratio = r1 / r2;
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn contract_and_domain_errors() {
        let u = GridFunction::constant(1, 8, 1.0, false, 1.0).unwrap();
        assert!(matches!(apply_symbol_log(&u), Err(Error::Contract(_))));
        let p = u.with_periodic(true);
        assert!(matches!(
            inverse_shifted_symbol(&p, 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn hermitian_symmetry_for_real_input() {
        let u = GridFunction::from_fn(2, 16, 2.0, true, |x| (x[0] - 0.3 * x[1]).sin() + x[1].cos())
            .unwrap();
        let plan = SpectralPlan::for_grid(&u);
        let spec = plan.forward(&u).unwrap();
        for idx in 0..spec.coeffs.len() {
            let k = spec.frequency(idx);
            let neg: Vec<i64> = k.iter().map(|v| -v).collect();
            let j = spec.index_of(&neg);
            assert!((spec.coeffs[idx] - spec.coeffs[j].conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn translation_by_whole_cells_is_a_roll() {
        let u = GridFunction::from_fn(1, 32, 4.0, true, |x| (-(x[0] - 0.4).powi(2)).exp()).unwrap();
        let plan = SpectralPlan::for_grid(&u);
        let h = u.spacing();
        let v = plan.translate(&u, &[3.0 * h]).unwrap();
        for j in 0..32 {
            assert!((v.values()[(j + 3) % 32] - u.values()[j]).abs() < 1e-13);
        }
    }

    #[test]
    fn multiplier_bounded_below_on_high_modes() {
        let l = std::f64::consts::PI;
        let u = GridFunction::from_fn(2, 32, l, true, |x| {
            (x[0]).cos() + 0.5 * (3.0 * x[1]).sin() + 0.2 * (2.0 * x[0] + 5.0 * x[1]).cos()
        })
        .unwrap();
        let lu = apply_symbol_log(&u).unwrap();
        let norm = |g: &GridFunction| g.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm(&lu) >= std::f64::consts::LN_2 * norm(&u) - 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn transform_round_trip_preserves_samples(
            seed in any::<u64>(),
            dim in 1usize..=2,
        ) {
            let a = (seed % 1000) as f64 / 100.0;
            let u = GridFunction::from_fn(dim, 16, 3.0, true, |x| {
                x.iter().enumerate().map(|(i, v)| ((i as f64 + 1.0) * a * v).sin() + a * v.cos()).sum()
            }).unwrap();
            let plan = SpectralPlan::for_grid(&u);
            let back = plan.inverse(&plan.forward(&u).unwrap(), &u).unwrap();
            let scale = u.max_abs().max(1.0);
            prop_assert!(max_diff(&back, &u) <= 1e-12 * scale);
            let l2 = |g: &GridFunction| g.values().iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((l2(&back) - l2(&u)).abs() <= 1e-12 * l2(&u).max(1.0));
        }

        #[test]
        fn shifted_inverse_round_trip(seed in any::<u64>(), m in 0.05f64..5.0) {
            let a = 0.5 + (seed % 100) as f64 / 50.0;
            let u = GridFunction::from_fn(1, 64, 6.0, true, |x| (-(x[0] / a).powi(2)).exp() * (a * x[0]).cos()).unwrap();
            let plan = SpectralPlan::for_grid(&u);
            let lu = plan.apply_log(&u).unwrap();
            let rhs = lu.lin_comb(1.0, &u, m).unwrap();
            let back = plan.inverse_shifted(&rhs, m).unwrap();
            prop_assert!(max_diff(&back, &u) <= 1e-12 * u.max_abs().max(1.0));
        }
    }
}
