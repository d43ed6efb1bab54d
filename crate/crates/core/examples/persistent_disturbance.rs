//! Double integrator pushed by the worst constant disturbance, adaptive vs
//! fixed terminal sets.

use vhmpc::matrix::vector;
use vhmpc::{make_double_integrator, simulate, DisturbanceSource, Mode, SimOptions};

fn main() -> vhmpc::Result<()> {
    let scenario = make_double_integrator();
    let x0 = vector(&[20.0, 0.0]);
    let w = DisturbanceSource::Persistent(vec![0.1, 0.4]);
    for mode in [Mode::Atcs, Mode::Ftcs] {
        let t = simulate(&scenario, mode, &x0, &w, SimOptions::default())?;
        let (c1, c2, _) = t.branch_counts();
        println!(
            "{mode}: completion step {}, N-bar {:?}, J0 {:.3}, final 1-norm {:.3} (C1 {c1}, C2 {c2})",
            t.completion_step, t.n_bar, t.j0, t.final_one_norm
        );
        println!("  horizons {:?}", t.horizons());
    }
    Ok(())
}
