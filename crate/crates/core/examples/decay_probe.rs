use logschrod::moving_planes::decay_bound_check;
use logschrod::special_fn::KernelSpec;

fn main() -> logschrod::Result<()> {
    for dim in [1, 2, 3] {
        let spec = KernelSpec::new(dim)?;
        for r in [4.0, 5.0, 6.0, 8.0, 10.0] {
            let mut x0 = vec![0.0; dim];
            x0[0] = -r;
            let probe = decay_bound_check(&x0, 0.0, &spec)?;
            println!(
                "N={dim} |x0|={r:<4} lhs={:.4e} rhs={:.4e} ratio={:.3e}",
                probe.lhs_integral,
                probe.rhs_bound,
                probe.lhs_integral / probe.rhs_bound
            );
        }
    }
    Ok(())
}
