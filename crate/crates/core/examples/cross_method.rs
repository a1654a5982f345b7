//! The quadrature operator against the Fourier multiplier on a Gaussian.
use logschrod::special_fn::{FractionalSpec, KernelSpec};
use logschrod::{GridFunction, QuadOperator, QuadratureParams, SpectralPlan};

fn main() -> logschrod::Result<()> {
    for (dim, n, l) in [(1, 1024, 12.0), (2, 256, 10.0)] {
        let u = GridFunction::from_fn(dim, n, l, true, |x| {
            (-x.iter().map(|v| v * v).sum::<f64>() / 2.0).exp()
        })?;
        let plan = SpectralPlan::for_grid(&u);
        let qp = QuadratureParams::for_grid(dim, u.spacing())?;
        let points: Vec<Vec<f64>> = (0..9)
            .map(|i| {
                let mut p = vec![0.0; dim];
                p[0] = -2.0 + 0.5 * i as f64;
                p
            })
            .collect();

        let log = plan.apply_log(&u)?;
        let quad = QuadOperator::log(KernelSpec::new(dim)?, u.spacing(), qp)?
            .apply_at_points(&u, &points)?;
        report("log", &points, &quad, &log);

        let half = plan.apply_s(&u, 0.5)?;
        let quad = QuadOperator::fractional(FractionalSpec::new(dim, 0.5)?, u.spacing(), qp)?
            .apply_at_points(&u, &points)?;
        report("s=0.5", &points, &quad, &half);
    }
    Ok(())
}

fn report(name: &str, points: &[Vec<f64>], quad: &[f64], spectral: &GridFunction) {
    let scale = spectral.max_abs();
    let worst = points
        .iter()
        .zip(quad)
        .map(|(p, q)| (q - spectral.sample(p)).abs() / scale)
        .fold(0.0, f64::max);
    println!(
        "N={} {name:<6} max |quad - spectral| / max|spectral| = {worst:.3e}",
        spectral.dim()
    );
}
