//! Critical planes and radial symmetry of a computed ground state.
use logschrod::moving_planes::{refined_argmax, standard_directions, symmetry_report};
use logschrod::solver::{solve, EquationParams, SolveConfig};

fn main() -> logschrod::Result<()> {
    let params = EquationParams::new(0.3, 2.0)?;
    let cfg = SolveConfig::new(2, 128, 12.0);
    let u = solve(&params, &cfg)?.u;
    let report = symmetry_report(&u, &standard_directions(2, 4))?;
    for (e, l0) in &report.lambda0_per_direction {
        println!("e = ({:+.4}, {:+.4})  lambda0 = {l0:+.6}", e[0], e[1]);
    }
    println!("center          {:?}", report.center);
    println!("refined argmax  {:?}", refined_argmax(&u));
    println!(
        "plane spread    {:.3e} (h = {})",
        report.plane_spread,
        u.spacing()
    );
    println!("asymmetry/max   {:.3e}", report.max_asymmetry / u.max());
    println!("radial monotone {}", report.radial_monotone);
    for (r, v) in report.radial_profile.iter().step_by(40).take(6) {
        println!("  u({r:.3}) = {v:.6}");
    }
    Ok(())
}
