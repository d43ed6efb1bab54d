//! Chaser approaching the capture point of a spinning target inside the
//! docking-port visibility cone.

use vhmpc::{make_default_rendezvous, simulate, DisturbanceSource, Mode, SimOptions};

fn main() -> vhmpc::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let scenario = make_default_rendezvous();
    let x0 = scenario.x0.clone().expect("scenario ships an initial state");
    let w = DisturbanceSource::uniform(seed);
    for mode in [Mode::Atcs, Mode::Ftcs] {
        let start = std::time::Instant::now();
        let t = simulate(&scenario, mode, &x0, &w, SimOptions::default())?;
        let (c1, c2, _) = t.branch_counts();
        println!(
            "{mode}: lambda-bar {:.4}, completion step {}, N-bar {:?}, J0 {:.3}, final distance {:.3} {} (C1 {c1}, C2 {c2}) in {:.1?}",
            t.lambda_bar,
            t.completion_step,
            t.n_bar,
            t.j0,
            t.final_distance,
            t.distance_unit,
            start.elapsed()
        );
        println!("  horizons {:?}", t.horizons());
    }
    Ok(())
}
