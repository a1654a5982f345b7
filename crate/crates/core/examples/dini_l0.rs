//! Admissibility checks: the weighted L0 norm and Dini continuity.
use logschrod::{dini_check, l0_norm, GridFunction};

fn main() -> logschrod::Result<()> {
    let ones = GridFunction::constant(1, 1 << 14, 40.0, false, 1.0)?;
    println!("||1||_L0 on [-40, 40) = {:.7}", l0_norm(&ones)?);

    let gauss =
        GridFunction::from_fn(2, 128, 8.0, false, |x| (-(x[0] * x[0] + x[1] * x[1])).exp())?;
    println!("||gaussian||_L0 (N=2) = {:.7}", l0_norm(&gauss)?);

    let smooth = GridFunction::from_fn(1, 1 << 12, 2.0, false, |x| x[0].sin())?;
    let cusp = GridFunction::from_fn(1, 1 << 12, 2.0, false, |x| x[0].abs().sqrt())?;
    for (name, u) in [("sin x", &smooth), ("|x|^1/2", &cusp)] {
        let r = dini_check(u, &[0.0])?;
        println!(
            "{name:<8} dini integral ≈ {:.4e}, tail ratio {:.3}, Dini {}",
            r.dini_integral_estimate, r.tail_ratio, r.is_dini
        );
    }
    Ok(())
}
