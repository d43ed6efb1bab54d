//! Paired Monte Carlo comparison of adaptive and fixed terminal sets on the
//! double integrator. Run count and seed come from the command line.

use vhmpc::sim::{run_campaign, CampaignOptions};
use vhmpc::{make_double_integrator, Mode};

fn main() -> vhmpc::Result<()> {
    let mut args = std::env::args().skip(1);
    let count: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(30);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2024);
    let scenario = make_double_integrator();
    let out = run_campaign(&scenario, &CampaignOptions::new(count, seed, vec![Mode::Atcs, Mode::Ftcs]))?;
    let report = &out.report;
    if let Some(s) = &report.sampling {
        println!("sampled {} initial states from {} proposals", s.accepted, s.proposals);
    }
    for a in &report.aggregates {
        println!(
            "{}: mean {:.4}, median {:.4}, range [{:.4}, {:.4}], mean N_ct {:.2}, N-bar histogram {:?}",
            a.mode,
            a.mean_final_distance,
            a.median_final_distance,
            a.min_final_distance,
            a.max_final_distance,
            a.mean_completion_step,
            a.n_bar_histogram
        );
    }
    if let Some(d) = report.paired_dominance {
        println!("adaptive no worse than fixed in {:.1}% of runs", 100.0 * d);
    }
    println!("violations: {}", report.violation_count);
    Ok(())
}
