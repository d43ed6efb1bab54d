//! One adaptive run under random disturbances, printing the per-step
//! horizon, cost and which problem produced the input.

use vhmpc::matrix::vector;
use vhmpc::{make_double_integrator, simulate, DisturbanceSource, Mode, SimOptions};

fn main() -> vhmpc::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let scenario = make_double_integrator();
    let x0 = vector(&[-18.0, 1.5]);
    let t = simulate(&scenario, Mode::Atcs, &x0, &DisturbanceSource::uniform(seed), SimOptions::default())?;
    println!("lambda-bar {:.4}, completion bound {:?}", t.lambda_bar, t.completion_bound);
    println!("{:>3} {:>9} {:>9} {:>4} {:>10} {:>6}", "k", "position", "velocity", "N", "cost", "branch");
    for r in &t.records {
        println!(
            "{:>3} {:>9.4} {:>9.4} {:>4} {:>10.4} {:>6}",
            r.k,
            r.x[0],
            r.x[1],
            r.horizon,
            r.cost,
            r.branch.as_str()
        );
    }
    println!(
        "completed at step {} with N-bar {:?}, final 1-norm {:.4}",
        t.completion_step, t.n_bar, t.final_one_norm
    );
    Ok(())
}
