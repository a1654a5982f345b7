//! (I-Δ)^s u = u + s (I-Δ)^log u + O(s²).
use logschrod::{taylor_residual, GridFunction};

fn main() -> logschrod::Result<()> {
    let u = GridFunction::from_fn(1, 1024, 12.0, true, |x| (-x[0] * x[0]).exp())?;
    let mut prev: Option<f64> = None;
    for s in [0.1, 0.05, 0.025, 0.0125] {
        let e = taylor_residual(&u, s)?;
        match prev {
            Some(p) => println!(
                "s={s:<7} residual={e:.4e} local slope={:.3}",
                (p / e).log2()
            ),
            None => println!("s={s:<7} residual={e:.4e}"),
        }
        prev = Some(e);
    }
    Ok(())
}
