//! Variable-horizon tube MPC: the adaptive terminal-set controller, the
//! fixed-sequence baseline and the minimum-time special case.

mod ftcs;
mod lambda;
mod problem;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Vector;
use crate::scenario::Scenario;
use crate::sets::{minkowski_sum, Zonotope};
use crate::tube::TubeCache;

pub use ftcs::FtcsTerminal;
pub use lambda::{compute_lambda_bar, LambdaBar, MAX_LAMBDA_COORDINATES};
pub use problem::{
    build_fixed_horizon_lp, deviation_scale, solve_fixed_horizon, sweep_horizons, FixedHorizonLp, StageSets,
    COST_TIE_TOL,
};

fn default_horizon_cap() -> usize {
    120
}
fn default_sinf_tolerance() -> f64 {
    0.05
}
fn default_c1_slack() -> usize {
    10
}
fn default_tail_tolerance() -> f64 {
    1e-9
}

/// Cost weights and search limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcConfig {
    pub gamma_z: f64,
    pub gamma_v: f64,
    /// Required cost decrease per step; defaults to the computed margin and
    /// may only be set below it.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Longest horizon ever considered.
    #[serde(default = "default_horizon_cap")]
    pub horizon_cap: usize,
    /// Contraction factor for the limit-tube approximation.
    #[serde(default = "default_sinf_tolerance")]
    pub sinf_tolerance: f64,
    /// How far past the previous optimal horizon the exact-terminal sweep may look.
    #[serde(default = "default_c1_slack")]
    pub c1_slack: usize,
    #[serde(default = "default_tail_tolerance")]
    pub lambda_tail_tolerance: f64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        MpcConfig {
            gamma_z: 0.0,
            gamma_v: 0.0,
            lambda: None,
            horizon_cap: default_horizon_cap(),
            sinf_tolerance: default_sinf_tolerance(),
            c1_slack: default_c1_slack(),
            lambda_tail_tolerance: default_tail_tolerance(),
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_z >= 0.0) || !(self.gamma_v >= 0.0) {
            return Err(Error::Scenario("cost weights must be non-negative".into()));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0) {
                return Err(Error::Scenario(format!("lambda must be positive, got {l}")));
            }
        }
        if self.horizon_cap == 0 {
            return Err(Error::Scenario("horizon cap must be at least 1".into()));
        }
        if !(self.sinf_tolerance > 0.0 && self.sinf_tolerance < 1.0) {
            return Err(Error::Scenario("sinf tolerance must lie in (0, 1)".into()));
        }
        if !(self.lambda_tail_tolerance > 0.0) {
            return Err(Error::Scenario("lambda tail tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Atcs,
    Ftcs,
    Mintime,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Atcs => "atcs",
            Mode::Ftcs => "ftcs",
            Mode::Mintime => "mintime",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "atcs" => Ok(Mode::Atcs),
            "ftcs" => Ok(Mode::Ftcs),
            "mintime" | "min-time" | "minimum-time" => Ok(Mode::Mintime),
            other => Err(Error::InvalidInput(format!(
                "unknown mode '{other}' (expected atcs, ftcs or mintime)"
            ))),
        }
    }
}

/// Which problem produced the applied input at a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Exact terminal constraint with the required cost decrease.
    C1,
    /// Grown terminal set, horizon strictly shorter than before.
    C2,
    /// Fixed terminal sequence of the baseline.
    Fixed,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::C1 => "C1",
            Branch::C2 => "C2",
            Branch::Fixed => "FIXED",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TerminalSpec {
    /// `z(N) = r(k+N)`.
    Exact,
    /// `z(N) ∈ {r(k+N)} ⊕ set`.
    Zonotope(Zonotope),
}

impl TerminalSpec {
    pub fn num_generators(&self) -> usize {
        match self {
            TerminalSpec::Exact => 0,
            TerminalSpec::Zonotope(z) => z.num_generators(),
        }
    }
}

/// Optimal solution of one variable-horizon problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub cost: f64,
    pub horizon: usize,
    pub inputs: Vec<Vector>,
    pub states: Vec<Vector>,
    pub feasible: bool,
}

impl SolveResult {
    /// Largest `‖z(j+1) − A z(j) − B v(j)‖∞` along the plan.
    pub fn dynamics_residual(&self, scenario: &Scenario) -> f64 {
        (0..self.horizon)
            .map(|j| {
                let pred = &scenario.a * &self.states[j] + &scenario.b * &self.inputs[j];
                (&self.states[j + 1] - pred).amax()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct ControllerState {
    pub terminal: TerminalSpec,
    pub last: SolveResult,
    /// Horizon of the most recent exact-terminal success.
    pub n_bar: usize,
    pub j0: f64,
    pub n0: usize,
    pub step: usize,
    pub branch_log: Vec<Branch>,
}

impl ControllerState {
    pub fn branch(&self) -> Branch {
        *self.branch_log.last().expect("initial step records a branch")
    }
}

/// Per-scenario controller with its tube cache and precomputed margins.
#[derive(Debug, Clone)]
pub struct Controller {
    scenario: Scenario,
    mode: Mode,
    gamma_z: f64,
    gamma_v: f64,
    lambda: f64,
    lambda_bar: LambdaBar,
    tubes: TubeCache,
    scale: Vec<f64>,
    ftcs: Option<FtcsTerminal>,
}

impl Controller {
    pub fn new(scenario: &Scenario, mode: Mode) -> Result<Self> {
        scenario.validate()?;
        let cfg = &scenario.config;
        let ak = scenario.closed_loop();
        let tubes = TubeCache::new(ak.clone(), scenario.w.clone(), cfg.sinf_tolerance)?;
        let (gamma_z, gamma_v) = match mode {
            Mode::Mintime => (0.0, 0.0),
            _ => (cfg.gamma_z, cfg.gamma_v),
        };
        let lambda_bar = compute_lambda_bar(
            gamma_z,
            gamma_v,
            &scenario.gain,
            &ak,
            &scenario.w,
            cfg.lambda_tail_tolerance,
        )?;
        let lambda = match (mode, cfg.lambda) {
            (Mode::Mintime, _) => 1.0,
            (_, Some(l)) => {
                if l > lambda_bar.value + 1e-12 {
                    return Err(Error::Scenario(format!(
                        "configured lambda {l} exceeds the guaranteed margin {:.6}",
                        lambda_bar.value
                    )));
                }
                l
            }
            (_, None) => lambda_bar.value,
        };
        if mode == Mode::Atcs && lambda <= 0.0 {
            return Err(Error::Scenario(format!(
                "cost decrease margin {:.6} is not positive; reduce the cost weights",
                lambda_bar.value
            )));
        }
        let ftcs = match mode {
            Mode::Ftcs => Some(FtcsTerminal::new(&ak, &scenario.w, tubes.sinf())?),
            _ => None,
        };
        let scale = deviation_scale(&tubes);
        Ok(Controller {
            scenario: scenario.clone(),
            mode,
            gamma_z,
            gamma_v,
            lambda,
            lambda_bar,
            tubes,
            scale,
            ftcs,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lambda_bar(&self) -> &LambdaBar {
        &self.lambda_bar
    }

    pub fn tubes(&mut self) -> &mut TubeCache {
        &mut self.tubes
    }

    pub fn ftcs_q(&self) -> Option<Zonotope> {
        self.ftcs.as_ref().map(|f| f.q_set())
    }

    fn horizon_cap(&self) -> usize {
        self.scenario.config.horizon_cap
    }

    /// Variable-horizon problem at step `k` with one terminal rule for every `N`.
    pub fn solve_pk(
        &mut self,
        x: &Vector,
        k: usize,
        terminal: &TerminalSpec,
        n_low: usize,
        n_high: usize,
    ) -> Result<Option<SolveResult>> {
        if n_low == 0 || n_low > n_high {
            return Ok(None);
        }
        let stages = StageSets::compute(&self.scenario, &mut self.tubes, k, n_high)?;
        sweep_horizons(
            &self.scenario,
            &stages,
            &self.scale,
            self.gamma_z,
            self.gamma_v,
            x,
            n_low,
            n_high,
            |_| Some(terminal.clone()),
        )
    }

    fn solve_ftcs(&mut self, x: &Vector, k: usize, n_high: usize) -> Result<Option<SolveResult>> {
        let stages = StageSets::compute(&self.scenario, &mut self.tubes, k, n_high)?;
        let ftcs = self.ftcs.as_mut().expect("baseline mode has terminal data");
        sweep_horizons(
            &self.scenario,
            &stages,
            &self.scale,
            self.gamma_z,
            self.gamma_v,
            x,
            1,
            n_high,
            |n| ftcs.terminal(n),
        )
    }

    /// Solves the initial problem over the full horizon range.
    pub fn initial_step(&mut self, x0: &Vector) -> Result<(Vector, ControllerState)> {
        let cap = self.horizon_cap();
        let (result, terminal, branch) = match self.mode {
            Mode::Ftcs => {
                let r = self.solve_ftcs(x0, 0, cap)?;
                let t = r.as_ref().map(|r| self.ftcs.as_mut().unwrap().terminal(r.horizon));
                (r, t.flatten().unwrap_or(TerminalSpec::Exact), Branch::Fixed)
            }
            _ => (self.solve_pk(x0, 0, &TerminalSpec::Exact, 1, cap)?, TerminalSpec::Exact, Branch::C1),
        };
        let Some(result) = result else {
            return Err(Error::InfeasibleStart(x0.iter().copied().collect(), cap));
        };
        let u = result.inputs[0].clone();
        let state = ControllerState {
            terminal,
            n_bar: result.horizon,
            j0: result.cost,
            n0: result.horizon,
            last: result,
            step: 0,
            branch_log: vec![branch],
        };
        Ok((u, state))
    }

    /// One step of the adaptive controller (also the minimum-time mode).
    pub fn atcs_step(&mut self, mut state: ControllerState, x: &Vector, k: usize) -> Result<(Vector, ControllerState)> {
        let prev_n = state.last.horizon;
        let prev_j = state.last.cost;
        let mut c1_high = self.horizon_cap().min(prev_n + self.scenario.config.c1_slack);
        let budget = (prev_j - self.lambda + 1e-9).floor();
        c1_high = c1_high.min(if budget >= 1.0 { budget as usize } else { 0 });
        if self.mode == Mode::Mintime {
            c1_high = c1_high.min(prev_n.saturating_sub(1));
        }
        let c1 = self.solve_pk(x, k, &TerminalSpec::Exact, 1, c1_high)?;
        let accepted = c1.filter(|r| r.cost <= prev_j - self.lambda + 1e-9);
        let (result, branch) = match accepted {
            Some(r) => {
                state.terminal = TerminalSpec::Exact;
                state.n_bar = r.horizon;
                (r, Branch::C1)
            }
            None => {
                let growth = self.tubes.image(prev_n - 1).clone();
                let grown = match &state.terminal {
                    TerminalSpec::Exact => growth,
                    TerminalSpec::Zonotope(z) => minkowski_sum(z, &growth)?,
                };
                let terminal = TerminalSpec::Zonotope(grown);
                let r = self.solve_pk(x, k, &terminal, 1, prev_n - 1)?;
                let Some(r) = r else {
                    return Err(Error::InvariantBreach {
                        step: k,
                        message: format!(
                            "grown-terminal problem infeasible with horizon bound {}",
                            prev_n - 1
                        ),
                    });
                };
                state.terminal = terminal;
                (r, Branch::C2)
            }
        };
        let u = result.inputs[0].clone();
        state.last = result;
        state.step = k;
        state.branch_log.push(branch);
        Ok((u, state))
    }

    /// One step of the fixed-sequence baseline.
    pub fn ftcs_step(&mut self, mut state: ControllerState, x: &Vector, k: usize) -> Result<(Vector, ControllerState)> {
        let high = self
            .horizon_cap()
            .min(state.last.horizon + self.scenario.config.c1_slack);
        let Some(result) = self.solve_ftcs(x, k, high)? else {
            return Err(Error::InvariantBreach {
                step: k,
                message: format!("fixed-terminal problem infeasible for every horizon up to {high}"),
            });
        };
        if let Some(t) = self.ftcs.as_mut().unwrap().terminal(result.horizon) {
            state.terminal = t;
        }
        let u = result.inputs[0].clone();
        state.last = result;
        state.step = k;
        state.branch_log.push(Branch::Fixed);
        Ok((u, state))
    }

    pub fn step(&mut self, state: ControllerState, x: &Vector, k: usize) -> Result<(Vector, ControllerState)> {
        match self.mode {
            Mode::Ftcs => self.ftcs_step(state, x, k),
            _ => self.atcs_step(state, x, k),
        }
    }
}
