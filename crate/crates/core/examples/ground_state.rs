//! Petviashvili iteration for (I-Δ)^log u + m u = u^p.
//!
//! m = 0.3 converges to a smooth bump; m = 1 collapses into a spike and
//! stops with a negative undershoot.
use logschrod::solver::{axis_unimodal, check_c2, solve, EquationParams, SolveConfig};

fn main() -> logschrod::Result<()> {
    for (m, p, dim, n) in [(0.3, 3.0, 1, 1024), (0.3, 2.0, 2, 128), (1.0, 3.0, 1, 1024)] {
        let params = EquationParams::new(m, p)?;
        let cfg = SolveConfig::new(dim, n, 12.0);
        match solve(&params, &cfg) {
            Ok(out) => {
                let u = &out.u;
                let c2 = check_c2(u, &params);
                let last = out.history.last().unwrap();
                println!(
                    "N={dim} m={m} p={p}: {} iterations, residual {:.2e}, max u {:.6}, far value {:.2e} < {:.4} is {}, unimodal {}",
                    out.history.len(),
                    last.residual,
                    u.max(),
                    c2.a,
                    c2.threshold,
                    c2.holds,
                    axis_unimodal(u, 1e-12)
                );
            }
            Err(e) => println!("N={dim} m={m} p={p}: {e}"),
        }
    }
    Ok(())
}
