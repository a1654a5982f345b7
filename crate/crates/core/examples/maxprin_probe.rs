use logschrod::moving_planes::{antisym_min_probe, random_antisymmetric};
use logschrod::QuadratureParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> logschrod::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (mut negative, mut worst) = (0, f64::NEG_INFINITY);
    let count = 40;
    for i in 0..count {
        let dim = 1 + i % 2;
        let n = if dim == 1 { 256 } else { 64 };
        let sample = random_antisymmetric(&mut rng, dim, n, 8.0)?;
        let qp = QuadratureParams::for_grid(dim, sample.omega.spacing())?;
        let value = antisym_min_probe(&sample.omega, &sample.spec, &qp)?;
        if value < 0.0 {
            negative += 1;
        }
        worst = worst.max(value);
    }
    println!("(I-Δ)^log ω < 0 at the negative minimum in {negative}/{count} samples; largest value {worst:.4}");
    Ok(())
}
