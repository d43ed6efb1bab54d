//! Zero cost weights turn the controller into a minimum-time one: the
//! optimal horizon shrinks by at least one every step.

use vhmpc::matrix::vector;
use vhmpc::{make_double_integrator, simulate, DisturbanceSource, Mode, SimOptions};

fn main() -> vhmpc::Result<()> {
    let scenario = make_double_integrator();
    for (i, x0) in [vector(&[15.0, -1.0]), vector(&[-22.0, 0.5]), vector(&[5.0, 1.8])].iter().enumerate() {
        let t = simulate(
            &scenario,
            Mode::Mintime,
            x0,
            &DisturbanceSource::Uniform { seed: 5, stream: i as u64 },
            SimOptions::default(),
        )?;
        println!(
            "x0 {:?}: first horizon {}, completion step {}, horizons {:?}",
            x0.as_slice(),
            t.n0,
            t.completion_step,
            t.horizons()
        );
    }
    Ok(())
}
