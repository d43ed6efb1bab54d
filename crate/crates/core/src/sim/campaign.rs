use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::{Controller, Mode, TerminalSpec};
use crate::error::{Error, Result};
use crate::matrix::Vector;
use crate::scenario::Scenario;
use crate::sets::Zonotope;

use super::{keyed_seed, simulate_with, DisturbanceSource, SimOptions, SimTrace};

/// Proposal budget of the initial-state sampler.
pub const MAX_PROPOSALS: usize = 1_000_000;
/// Below this acceptance rate the sampler reports a mis-specified scenario.
pub const MIN_ACCEPTANCE_RATE: f64 = 1e-3;
const SAMPLING_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingStats {
    pub proposals: usize,
    pub accepted: usize,
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone)]
pub struct SampledStates {
    pub states: Vec<Vector>,
    pub stats: SamplingStats,
}

/// Rejection sampling over the scenario's sampling box: keep states inside
/// `X(0)`, outside `exclusion`, with a feasible exact-terminal initial problem.
pub fn sample_feasible_initial_states(
    scenario: &Scenario,
    count: usize,
    seed: u64,
    exclusion: &Zonotope,
) -> Result<SampledStates> {
    sample_with_budget(scenario, count, seed, exclusion, MAX_PROPOSALS)
}

pub(crate) fn sample_with_budget(
    scenario: &Scenario,
    count: usize,
    seed: u64,
    exclusion: &Zonotope,
    max_proposals: usize,
) -> Result<SampledStates> {
    let Some(bounds) = scenario.sampling.clone() else {
        return Err(Error::Scenario(format!("scenario '{}' has no sampling box", scenario.name)));
    };
    let mut feasibility = Controller::new(scenario, Mode::Mintime)?;
    let cap = scenario.config.horizon_cap;
    let state_set = scenario.state_set(0);
    let mut rng = ChaCha8Rng::seed_from_u64(keyed_seed(seed, SAMPLING_STREAM, 0));
    let radii = exclusion.axis_radii();
    let mut states = Vec::with_capacity(count);
    let mut proposals = 0usize;
    while states.len() < count && proposals < max_proposals {
        proposals += 1;
        let x = Vector::from_fn(bounds.dim(), |i, _| {
            let (lo, hi) = (bounds.lower[i], bounds.upper[i]);
            if hi > lo {
                rng.gen_range(lo..=hi)
            } else {
                lo
            }
        });
        if !state_set.contains(&x, 0.0) {
            continue;
        }
        let offset = &x - &exclusion.center;
        let maybe_inside = offset.iter().zip(&radii).all(|(d, r)| d.abs() <= *r);
        if maybe_inside && exclusion.contains(&x, 0.0)? {
            continue;
        }
        if feasibility.solve_pk(&x, 0, &TerminalSpec::Exact, 1, cap)?.is_none() {
            continue;
        }
        states.push(x);
    }
    let accepted = states.len();
    let rate = if proposals > 0 { accepted as f64 / proposals as f64 } else { 0.0 };
    if accepted < count {
        return Err(Error::SamplingFailed { accepted, proposed: proposals });
    }
    Ok(SampledStates {
        states,
        stats: SamplingStats {
            proposals,
            accepted,
            acceptance_rate: rate,
        },
    })
}

#[derive(Debug, Clone)]
pub struct CampaignOptions {
    pub count: usize,
    pub seed: u64,
    pub modes: Vec<Mode>,
    /// Worker threads; `None` reads `VHMPC_THREADS` and otherwise uses rayon's default.
    pub threads: Option<usize>,
    pub strict: bool,
}

impl CampaignOptions {
    pub fn new(count: usize, seed: u64, modes: Vec<Mode>) -> Self {
        CampaignOptions {
            count,
            seed,
            modes,
            threads: None,
            strict: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: Mode,
    pub completion_step: Option<usize>,
    pub n_bar: Option<usize>,
    pub n0: Option<usize>,
    pub j0: Option<f64>,
    pub completion_bound: Option<usize>,
    pub final_distance: Option<f64>,
    pub final_one_norm: Option<f64>,
    pub violations: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub x0: Vec<f64>,
    pub modes: Vec<ModeSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeAggregate {
    pub mode: Mode,
    pub completed_runs: usize,
    pub failed_runs: usize,
    pub mean_final_distance: f64,
    pub median_final_distance: f64,
    pub min_final_distance: f64,
    pub max_final_distance: f64,
    pub mean_completion_step: f64,
    pub mean_completion_bound: Option<f64>,
    /// Count of runs per N-bar value.
    pub n_bar_histogram: BTreeMap<usize, usize>,
    pub violations: usize,
    pub lambda_bar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub scenario: String,
    pub seed: u64,
    pub count: usize,
    pub modes: Vec<Mode>,
    pub distance_unit: String,
    pub sampling: Option<SamplingStats>,
    pub runs: Vec<RunSummary>,
    pub aggregates: Vec<ModeAggregate>,
    /// Fraction of runs where the adaptive controller ended no farther from
    /// the reference than the baseline (present when both ran).
    pub paired_dominance: Option<f64>,
    pub violation_count: usize,
    pub caveats: Vec<String>,
}

impl CampaignReport {
    pub fn aggregate(&self, mode: Mode) -> Option<&ModeAggregate> {
        self.aggregates.iter().find(|a| a.mode == mode)
    }

    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub report: CampaignReport,
    /// `traces[run][mode]`, `None` where the run failed.
    pub traces: Vec<Vec<Option<SimTrace>>>,
}

fn thread_count(opts: &CampaignOptions) -> Option<usize> {
    opts.threads.or_else(|| {
        std::env::var("VHMPC_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|n| *n > 0)
    })
}

/// Paired Monte Carlo campaign: every mode sees the same initial state and
/// the same disturbance stream in each run.
pub fn run_campaign(scenario: &Scenario, opts: &CampaignOptions) -> Result<CampaignOutcome> {
    let mut modes = opts.modes.clone();
    modes.dedup();
    if modes.is_empty() {
        return Err(Error::InvalidInput("campaign needs at least one mode".into()));
    }
    let controllers: Vec<Controller> = modes
        .iter()
        .map(|m| Controller::new(scenario, *m))
        .collect::<Result<_>>()?;

    let (states, sampling) = if opts.count == 0 {
        (Vec::new(), None)
    } else {
        let mut probe = controllers[0].clone();
        let exclusion = probe
            .tubes()
            .sinf()
            .set
            .translated(&scenario.reference_at(0));
        let s = sample_feasible_initial_states(scenario, opts.count, opts.seed, &exclusion)?;
        (s.states, Some(s.stats))
    };

    let strict = opts.strict;
    let seed = opts.seed;
    let run_one = |(run, x0): (usize, &Vector)| -> Vec<std::result::Result<SimTrace, String>> {
        let disturbance = DisturbanceSource::Uniform {
            seed,
            stream: run as u64,
        };
        controllers
            .iter()
            .map(|c| {
                let mut c = c.clone();
                simulate_with(&mut c, x0, &disturbance, SimOptions { strict }).map_err(|e| e.to_string())
            })
            .collect()
    };

    let results: Vec<Vec<std::result::Result<SimTrace, String>>> = match thread_count(opts) {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
            pool.install(|| states.par_iter().enumerate().map(run_one).collect())
        }
        None => states.par_iter().enumerate().map(run_one).collect(),
    };

    let mut runs = Vec::with_capacity(results.len());
    let mut traces = Vec::with_capacity(results.len());
    let mut violation_count = 0usize;
    for (run, (x0, per_mode)) in states.iter().zip(results).enumerate() {
        let mut summaries = Vec::with_capacity(modes.len());
        let mut run_traces = Vec::with_capacity(modes.len());
        for (mode, result) in modes.iter().zip(per_mode) {
            match result {
                Ok(t) => {
                    violation_count += t.violations.len();
                    summaries.push(ModeSummary {
                        mode: *mode,
                        completion_step: Some(t.completion_step),
                        n_bar: t.n_bar,
                        n0: Some(t.n0),
                        j0: Some(t.j0),
                        completion_bound: t.completion_bound,
                        final_distance: Some(t.final_distance),
                        final_one_norm: Some(t.final_one_norm),
                        violations: t.violations.clone(),
                        error: None,
                    });
                    run_traces.push(Some(t));
                }
                Err(e) => {
                    violation_count += 1;
                    summaries.push(ModeSummary {
                        mode: *mode,
                        completion_step: None,
                        n_bar: None,
                        n0: None,
                        j0: None,
                        completion_bound: None,
                        final_distance: None,
                        final_one_norm: None,
                        violations: Vec::new(),
                        error: Some(e),
                    });
                    run_traces.push(None);
                }
            }
        }
        runs.push(RunSummary {
            run,
            x0: x0.iter().copied().collect(),
            modes: summaries,
        });
        traces.push(run_traces);
    }

    let aggregates = modes
        .iter()
        .enumerate()
        .map(|(i, mode)| aggregate(*mode, i, &runs, controllers[i].lambda_bar().value))
        .collect();

    let paired_dominance = match (
        modes.iter().position(|m| *m == Mode::Atcs),
        modes.iter().position(|m| *m == Mode::Ftcs),
    ) {
        (Some(a), Some(f)) if !runs.is_empty() => {
            let wins = runs
                .iter()
                .filter(|r| match (r.modes[a].final_distance, r.modes[f].final_distance) {
                    (Some(da), Some(df)) => da <= df,
                    _ => false,
                })
                .count();
            Some(wins as f64 / runs.len() as f64)
        }
        _ => None,
    };

    Ok(CampaignOutcome {
        report: CampaignReport {
            scenario: scenario.name.clone(),
            seed: opts.seed,
            count: opts.count,
            modes,
            distance_unit: scenario.distance.unit().to_string(),
            sampling,
            runs,
            aggregates,
            paired_dominance,
            violation_count,
            caveats: scenario.caveats.clone(),
        },
        traces,
    })
}

fn aggregate(mode: Mode, index: usize, runs: &[RunSummary], lambda_bar: f64) -> ModeAggregate {
    let done: Vec<&ModeSummary> = runs
        .iter()
        .map(|r| &r.modes[index])
        .filter(|s| s.error.is_none())
        .collect();
    let mut distances: Vec<f64> = done.iter().filter_map(|s| s.final_distance).collect();
    distances.sort_by(f64::total_cmp);
    let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    let median = if distances.is_empty() {
        f64::NAN
    } else if distances.len() % 2 == 1 {
        distances[distances.len() / 2]
    } else {
        0.5 * (distances[distances.len() / 2 - 1] + distances[distances.len() / 2])
    };
    let steps: Vec<f64> = done.iter().filter_map(|s| s.completion_step).map(|v| v as f64).collect();
    let bounds: Vec<f64> = done.iter().filter_map(|s| s.completion_bound).map(|v| v as f64).collect();
    let mut hist = BTreeMap::new();
    for nb in done.iter().filter_map(|s| s.n_bar) {
        *hist.entry(nb).or_insert(0) += 1;
    }
    ModeAggregate {
        mode,
        completed_runs: done.len(),
        failed_runs: runs.len() - done.len(),
        mean_final_distance: mean(&distances),
        median_final_distance: median,
        min_final_distance: distances.first().copied().unwrap_or(f64::NAN),
        max_final_distance: distances.last().copied().unwrap_or(f64::NAN),
        mean_completion_step: mean(&steps),
        mean_completion_bound: (!bounds.is_empty()).then(|| mean(&bounds)),
        n_bar_histogram: hist,
        violations: runs
            .iter()
            .map(|r| &r.modes[index])
            .map(|s| s.violations.len() + usize::from(s.error.is_some()))
            .sum(),
        lambda_bar,
    }
}
