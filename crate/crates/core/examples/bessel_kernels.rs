//! K_ν against closed forms, and the two kernels on a few radii.
use logschrod::special_fn::{bessel_k, bessel_k_prime, kappa, varpi_s, FractionalSpec, KernelSpec};

fn main() -> logschrod::Result<()> {
    println!("{:>6} {:>22} {:>22}", "r", "K_1/2(r)", "sqrt(pi/2r) e^-r");
    for r in [0.1, 1.0, 2.0, 10.0] {
        let closed = (std::f64::consts::PI / (2.0 * r)).sqrt() * (-r).exp();
        println!("{r:>6} {:>22.15e} {:>22.15e}", bessel_k(0.5, r)?, closed);
    }
    println!(
        "K_0'(1) = {:.12} (= -K_1(1) = {:.12})",
        bessel_k_prime(0.0, 1.0)?,
        -bessel_k(1.0, 1.0)?
    );

    for dim in 1..=3 {
        let spec = KernelSpec::new(dim)?;
        let frac = FractionalSpec::new(dim, 0.5)?;
        print!("N={dim} kappa:");
        for r in [0.01, 0.5, 1.0, 4.0] {
            print!(" {:.6e}", kappa(&spec, r)?);
        }
        print!("   varpi_1/2:");
        for r in [0.01, 0.5, 1.0, 4.0] {
            print!(" {:.6e}", varpi_s(&frac, r)?);
        }
        println!();
    }
    Ok(())
}
