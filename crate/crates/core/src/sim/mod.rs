//! Closed-loop simulation with inline invariant checks, disturbance models,
//! Monte Carlo campaigns and trace persistence.

mod campaign;
mod io;
mod verify;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controller::{Branch, Controller, ControllerState, Mode, TerminalSpec};
use crate::error::{Error, Result};
use crate::matrix::{vec_one_norm, Vector};
use crate::scenario::Scenario;
use crate::sets::BoxSet;

pub use campaign::{
    run_campaign, sample_feasible_initial_states, CampaignOptions, CampaignOutcome, CampaignReport, ModeAggregate,
    ModeSummary, RunSummary, SampledStates, SamplingStats, MAX_PROPOSALS, MIN_ACCEPTANCE_RATE,
};
pub use io::{
    read_disturbance_sequence, read_trace_json, write_polyline_csv, write_trace_csv, write_trace_json,
    trace_csv_string,
};
pub use verify::{check_trace, replay_trace, TraceCheck, CONSTRAINT_TOL, PROPAGATION_TOL, REPLAY_TOL};

/// Slack on the per-step cost decrease check.
pub const COST_DECREASE_TOL: f64 = 1e-6;
/// Slack on the zonotope coordinates when checking terminal containment.
pub const CONTAINMENT_TOL: f64 = 1e-6;
/// Largest accepted dynamics residual of a returned plan.
pub const DYNAMICS_RESIDUAL_TOL: f64 = 1e-7;
/// Slack when checking that emitted disturbances lie in `W`.
pub const DISTURBANCE_TOL: f64 = 1e-12;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the generator keyed by `(seed, run, step)`.
pub fn keyed_seed(seed: u64, run: u64, step: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ run) ^ step)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DisturbanceSource {
    Zero,
    /// I.i.d. uniform over `W`, keyed by `(seed, stream, step)`.
    Uniform { seed: u64, stream: u64 },
    /// The same vertex of `W` at every step.
    Persistent(Vec<f64>),
    Replay(Vec<Vec<f64>>),
}

impl DisturbanceSource {
    pub fn uniform(seed: u64) -> Self {
        DisturbanceSource::Uniform { seed, stream: 0 }
    }

    /// Rejects persistent values that are not vertices of `w` and replayed
    /// values outside it.
    pub fn validate(&self, w: &BoxSet) -> Result<()> {
        match self {
            DisturbanceSource::Persistent(v) => {
                if v.len() != w.dim() {
                    return Err(Error::dim("persistent disturbance", w.dim(), v.len()));
                }
                for (i, value) in v.iter().enumerate() {
                    let on_lower = (value - w.lower[i]).abs() <= DISTURBANCE_TOL;
                    let on_upper = (value - w.upper[i]).abs() <= DISTURBANCE_TOL;
                    if !on_lower && !on_upper {
                        return Err(Error::InvalidInput(format!(
                            "persistent disturbance {v:?} is not a vertex of W"
                        )));
                    }
                }
            }
            DisturbanceSource::Replay(seq) => {
                for (k, v) in seq.iter().enumerate() {
                    let v = Vector::from_column_slice(v);
                    if !w.contains(&v, DISTURBANCE_TOL) {
                        return Err(Error::InvalidInput(format!("replayed disturbance at step {k} lies outside W")));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn sample(&self, k: usize, w: &BoxSet) -> Result<Vector> {
        let n = w.dim();
        Ok(match self {
            DisturbanceSource::Zero => Vector::zeros(n),
            DisturbanceSource::Uniform { seed, stream } => {
                let mut rng = ChaCha8Rng::seed_from_u64(keyed_seed(*seed, *stream, k as u64));
                Vector::from_fn(n, |i, _| {
                    let (lo, hi) = (w.lower[i], w.upper[i]);
                    if hi > lo {
                        rng.gen_range(lo..=hi)
                    } else {
                        lo
                    }
                })
            }
            DisturbanceSource::Persistent(v) => Vector::from_column_slice(v),
            DisturbanceSource::Replay(seq) => {
                let v = seq.get(k).ok_or_else(|| {
                    Error::InvalidInput(format!("replay sequence has {} entries, step {k} requested", seq.len()))
                })?;
                Vector::from_column_slice(v)
            }
        })
    }
}

impl fmt::Display for DisturbanceSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DisturbanceSource::Zero => write!(f, "zero"),
            DisturbanceSource::Uniform { seed, stream: 0 } => write!(f, "uniform:{seed}"),
            DisturbanceSource::Uniform { seed, stream } => write!(f, "uniform:{seed}#{stream}"),
            DisturbanceSource::Persistent(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "persistent:{}", parts.join(","))
            }
            DisturbanceSource::Replay(seq) => write!(f, "replay({} steps)", seq.len()),
        }
    }
}

/// Parses `zero`, `uniform:<seed>` and `persistent:<v1,...>`. Replay needs a
/// file and goes through [`read_disturbance_sequence`].
impl FromStr for DisturbanceSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "zero" {
            return Ok(DisturbanceSource::Zero);
        }
        if let Some(seed) = s.strip_prefix("uniform:") {
            let seed = seed
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("invalid seed in '{s}'")))?;
            return Ok(DisturbanceSource::uniform(seed));
        }
        if let Some(values) = s.strip_prefix("persistent:") {
            return Ok(DisturbanceSource::Persistent(parse_vector(values)?));
        }
        if let Some(path) = s.strip_prefix("replay:") {
            return Ok(DisturbanceSource::Replay(read_disturbance_sequence(path.trim())?));
        }
        Err(Error::InvalidInput(format!(
            "unknown disturbance '{s}' (expected zero | uniform:<seed> | persistent:<v1,...> | replay:<path>)"
        )))
    }
}

/// Comma-separated floats.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidInput(format!("invalid number '{}' in '{text}'", p.trim())))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub reference: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub cost: f64,
    pub horizon: usize,
    pub branch: Branch,
    pub terminal_generators: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub scenario: String,
    pub mode: Mode,
    pub disturbance: String,
    pub x0: Vec<f64>,
    pub records: Vec<StepRecord>,
    /// Step index after the final propagation.
    pub completion_step: usize,
    /// Horizon of the last exact-terminal solve (adaptive and minimum-time modes).
    pub n_bar: Option<usize>,
    pub n0: usize,
    pub j0: f64,
    pub lambda: f64,
    pub lambda_bar: f64,
    /// `⌊J*_0 / λ⌋` for the adaptive mode, `N*_0` for minimum time.
    pub completion_bound: Option<usize>,
    pub final_state: Vec<f64>,
    pub final_reference: Vec<f64>,
    pub final_distance: f64,
    pub distance_unit: String,
    pub final_one_norm: f64,
    pub terminal_contained: bool,
    pub feasible_throughout: bool,
    pub violations: Vec<String>,
}

impl SimTrace {
    pub fn branch_counts(&self) -> (usize, usize, usize) {
        let count = |b: Branch| self.records.iter().filter(|r| r.branch == b).count();
        (count(Branch::C1), count(Branch::C2), count(Branch::Fixed))
    }

    pub fn costs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.cost).collect()
    }

    pub fn horizons(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.horizon).collect()
    }

    pub fn disturbances(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.w.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    /// Abort on the first invariant violation instead of collecting it.
    pub strict: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { strict: true }
    }
}

fn to_vec(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

/// Builds a controller for `mode` and runs it from `x0`.
pub fn simulate(
    scenario: &Scenario,
    mode: Mode,
    x0: &Vector,
    disturbance: &DisturbanceSource,
    opts: SimOptions,
) -> Result<SimTrace> {
    let mut controller = Controller::new(scenario, mode)?;
    simulate_with(&mut controller, x0, disturbance, opts)
}

/// Runs an existing controller until the optimal horizon reaches one and the
/// last input has been applied.
pub fn simulate_with(
    controller: &mut Controller,
    x0: &Vector,
    disturbance: &DisturbanceSource,
    opts: SimOptions,
) -> Result<SimTrace> {
    let scenario = controller.scenario().clone();
    let mode = controller.mode();
    let n = scenario.state_dim();
    if x0.len() != n {
        return Err(Error::dim("initial state", n, x0.len()));
    }
    disturbance.validate(&scenario.w)?;
    let lambda = controller.lambda();
    let lambda_bar = controller.lambda_bar().value;
    let max_steps = 10 * scenario.config.horizon_cap.max(1);

    let mut violations: Vec<String> = Vec::new();
    let mut flag = |step: usize, message: String, violations: &mut Vec<String>| -> Result<()> {
        if opts.strict {
            return Err(Error::InvariantBreach { step, message });
        }
        violations.push(format!("step {step}: {message}"));
        Ok(())
    };

    let (mut u, mut state) = controller.initial_step(x0)?;
    let mut x = x0.clone();
    let mut records = Vec::new();
    let mut k = 0usize;
    loop {
        check_plan(&scenario, &state, k, &mut violations, &mut flag)?;
        let w = disturbance.sample(k, &scenario.w)?;
        if !scenario.w.contains(&w, DISTURBANCE_TOL) {
            flag(k, format!("disturbance {:?} outside W", to_vec(&w)), &mut violations)?;
        }
        records.push(StepRecord {
            k,
            x: to_vec(&x),
            reference: to_vec(&scenario.reference_at(k)),
            u: to_vec(&u),
            w: to_vec(&w),
            cost: state.last.cost,
            horizon: state.last.horizon,
            branch: state.branch(),
            terminal_generators: state.terminal.num_generators(),
        });
        x = &scenario.a * &x + &scenario.b * &u + &w;
        let finished = state.last.horizon == 1;
        k += 1;
        if finished {
            break;
        }
        if k > max_steps {
            return Err(Error::InvariantBreach {
                step: k,
                message: format!("no completion within {max_steps} steps"),
            });
        }
        let (prev_j, prev_n) = (state.last.cost, state.last.horizon);
        let (next_u, next_state) = controller.step(state, &x, k)?;
        u = next_u;
        state = next_state;
        let (j, nk) = (state.last.cost, state.last.horizon);
        if mode != Mode::Ftcs && j > prev_j - lambda + COST_DECREASE_TOL {
            flag(
                k,
                format!("cost {j:.9} exceeds previous {prev_j:.9} minus margin {lambda:.6}"),
                &mut violations,
            )?;
        }
        let must_shorten = mode == Mode::Mintime || state.branch() == Branch::C2;
        if must_shorten && nk + 1 > prev_n {
            flag(k, format!("horizon {nk} not below previous {prev_n}"), &mut violations)?;
        }
    }
    let completion_step = k;

    let completion_bound = match mode {
        Mode::Atcs => Some((state.j0 / lambda + 1e-9).floor() as usize),
        Mode::Mintime => Some(state.n0),
        Mode::Ftcs => None,
    };
    if let Some(bound) = completion_bound {
        if completion_step > bound {
            flag(
                completion_step,
                format!("completion step {completion_step} exceeds bound {bound}"),
                &mut violations,
            )?;
        }
    }
    let n_bar = (mode != Mode::Ftcs).then_some(state.n_bar);
    if state.n_bar > state.n0 && mode != Mode::Ftcs {
        flag(
            completion_step,
            format!("N-bar {} exceeds initial horizon {}", state.n_bar, state.n0),
            &mut violations,
        )?;
    }

    let reference = scenario.reference_at(completion_step);
    let error = &x - &reference;
    let container = match mode {
        Mode::Ftcs => controller.ftcs_q().expect("baseline mode has Q"),
        _ => controller.tubes().tube_at(state.n_bar).clone(),
    };
    let terminal_contained = container.contains(&error, CONTAINMENT_TOL)?;
    if !terminal_contained {
        let which = if mode == Mode::Ftcs { "S(inf)" } else { "S(N-bar)" };
        flag(
            completion_step,
            format!("final error {:?} not contained in {which}", to_vec(&error)),
            &mut violations,
        )?;
    }

    Ok(SimTrace {
        scenario: scenario.name.clone(),
        mode,
        disturbance: disturbance.to_string(),
        x0: to_vec(x0),
        records,
        completion_step,
        n_bar,
        n0: state.n0,
        j0: state.j0,
        lambda,
        lambda_bar,
        completion_bound,
        final_distance: scenario.distance_to_reference(&x, completion_step),
        distance_unit: scenario.distance.unit().to_string(),
        final_one_norm: vec_one_norm(&error),
        final_state: to_vec(&x),
        final_reference: to_vec(&reference),
        terminal_contained,
        feasible_throughout: true,
        violations,
    })
}

fn check_plan(
    scenario: &Scenario,
    state: &ControllerState,
    k: usize,
    violations: &mut Vec<String>,
    flag: &mut impl FnMut(usize, String, &mut Vec<String>) -> Result<()>,
) -> Result<()> {
    let residual = state.last.dynamics_residual(scenario);
    if residual > DYNAMICS_RESIDUAL_TOL {
        flag(k, format!("plan dynamics residual {residual:e}"), violations)?;
    }
    if state.last.states.len() != state.last.horizon + 1 {
        flag(k, "plan length does not match horizon".into(), violations)?;
    }
    if matches!(state.terminal, TerminalSpec::Exact) && state.branch() == Branch::C2 {
        flag(k, "grown-terminal step recorded with exact terminal".into(), violations)?;
    }
    Ok(())
}
