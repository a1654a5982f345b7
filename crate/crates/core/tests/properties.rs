use logschrod::operator_spectral::{apply_symbol_log, apply_symbol_s, inverse_shifted_symbol};
use logschrod::solver::EquationParams;
use logschrod::special_fn::{bessel_k, bessel_k_prime, KernelSpec};
use logschrod::{GridFunction, QuadOperator, QuadratureParams};
use proptest::prelude::*;

fn trig(n: usize, l: f64, coeffs: &[(f64, u32)]) -> GridFunction {
    let k0 = std::f64::consts::PI / l;
    GridFunction::from_fn(1, n, l, true, |x| {
        coeffs
            .iter()
            .map(|&(a, k)| a * (k as f64 * k0 * x[0]).cos())
            .sum()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bessel_recurrence(nu in 0.0f64..4.0, r in 0.05f64..40.0) {
        // K_{ν+1} - K_{ν-1} = (2ν/r) K_ν and K_ν' = -(K_{ν-1} + K_{ν+1})/2
        let (km, k, kp) = (bessel_k(nu - 1.0, r).unwrap(), bessel_k(nu, r).unwrap(), bessel_k(nu + 1.0, r).unwrap());
        prop_assert!(((kp - km) - 2.0 * nu / r * k).abs() <= 1e-9 * kp);
        let d = bessel_k_prime(nu, r).unwrap();
        prop_assert!((d + 0.5 * (km + kp)).abs() <= 1e-9 * kp);
    }

    #[test]
    fn kernel_is_positive_and_decreasing(dim in 1usize..4, r in 1e-3f64..30.0) {
        let spec = KernelSpec::new(dim).unwrap();
        prop_assert!(spec.kappa(r).unwrap() > 0.0);
        prop_assert!(spec.kappa(r * 1.01).unwrap() < spec.kappa(r).unwrap());
    }

    #[test]
    fn log_symbol_acts_diagonally(a in -2.0f64..2.0, b in -2.0f64..2.0, k in 1u32..20) {
        let l = 10.0;
        let u = trig(128, l, &[(a, 0), (b, k)]);
        let xi = k as f64 * std::f64::consts::PI / l;
        let want = trig(128, l, &[(b * (1.0 + xi * xi).ln(), k)]);
        let got = apply_symbol_log(&u).unwrap();
        let err = got.values().iter().zip(want.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-11);
    }

    #[test]
    fn s_symbol_semigroup(s in 0.05f64..0.45, t in 0.05f64..0.45, k in 1u32..12) {
        let u = trig(64, 6.0, &[(1.0, 0), (0.5, k), (-0.25, k + 3)]);
        let two = apply_symbol_s(&apply_symbol_s(&u, s).unwrap(), t).unwrap();
        let one = apply_symbol_s(&u, s + t).unwrap();
        let err = two.values().iter().zip(one.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-11);
    }

    #[test]
    fn inverse_shifted_inverts(m in 0.1f64..3.0, k in 0u32..10) {
        let u = trig(64, 8.0, &[(0.3, k), (1.0, k + 1)]);
        let lu = apply_symbol_log(&u).unwrap();
        let rhs = lu.lin_comb(1.0, &u, m).unwrap();
        let back = inverse_shifted_symbol(&rhs, m).unwrap();
        let err = back.values().iter().zip(u.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn quadrature_is_linear(a in -3.0f64..3.0, shift in -1.0f64..1.0) {
        let f = GridFunction::from_fn(1, 256, 8.0, true, |x| (-(x[0] - shift).powi(2)).exp()).unwrap();
        let g = GridFunction::from_fn(1, 256, 8.0, true, |x| (-(x[0] * x[0]) / 3.0).exp() * x[0].cos()).unwrap();
        let qp = QuadratureParams::for_grid(1, f.spacing()).unwrap();
        let op = QuadOperator::log(KernelSpec::new(1).unwrap(), f.spacing(), qp).unwrap();
        let pts = vec![vec![0.0], vec![0.7], vec![-1.3]];
        let lf = op.apply_at_points(&f, &pts).unwrap();
        let lg = op.apply_at_points(&g, &pts).unwrap();
        let lc = op.apply_at_points(&f.lin_comb(a, &g, 1.0).unwrap(), &pts).unwrap();
        for i in 0..3 {
            prop_assert!((lc[i] - (a * lf[i] + lg[i])).abs() < 1e-11 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn threshold_is_below_the_constant_root(m in 0.05f64..5.0, p in 1.2f64..6.0) {
        let params = EquationParams::new(m, p).unwrap();
        prop_assert!(params.threshold() < params.constant_solution());
        let c = params.constant_solution();
        prop_assert!((m * c - params.power(c)).abs() < 1e-10 * c.max(1.0).powf(p));
    }
}
