//! Fixed-horizon linear programs and the sweep over horizon lengths.
//!
//! The LP is posed in deviations from the reference, `d(j) = z(j) − r(k+j)`,
//! split as `d = p − q` with `p, q ≥ 0` (and `v = v⁺ − v⁻`), so the 1-norm cost
//! is linear without separate epigraph rows. Axis-aligned constraints become
//! variable bounds; the remaining rows are the dynamics, non-axis state rows
//! and the terminal zonotope coordinates. Deviations are rescaled per
//! coordinate by the limit tube's extent so that tolerances are meaningful
//! for small normalized units.

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpOutcome};
use crate::matrix::{vec_one_norm, Vector};
use crate::scenario::Scenario;
use crate::sets::HPolytope;
use crate::tube::{tighten, TubeCache};

use super::{SolveResult, TerminalSpec};

/// Ties in total cost closer than this go to the shorter horizon.
pub const COST_TIE_TOL: f64 = 1e-7;

/// Tightened constraint sets `Z_k(j)`, `V_k(j)` for `j < len`.
#[derive(Debug, Clone)]
pub struct StageSets {
    pub k: usize,
    pub state: Vec<HPolytope>,
    pub input: Vec<HPolytope>,
    /// Largest horizon whose stage sets are all nonempty.
    pub max_horizon: usize,
}

impl StageSets {
    pub fn compute(scenario: &Scenario, tubes: &mut TubeCache, k: usize, len: usize) -> Result<Self> {
        let mut state = Vec::with_capacity(len);
        let mut input = Vec::with_capacity(len);
        let mut max_horizon = len;
        for j in 0..len {
            let t = tighten(
                |i| scenario.state_set(i),
                |i| scenario.input_set(i),
                &scenario.gain,
                tubes,
                k,
                j,
            )?;
            // Z_k(0) never enters the problem since z(0) is pinned to x.
            let state_empty = j > 0 && t.state.is_empty()?;
            let input_empty = t.input.is_empty()?;
            state.push(t.state);
            input.push(t.input);
            if state_empty || input_empty {
                max_horizon = j;
                break;
            }
        }
        Ok(StageSets {
            k,
            state,
            input,
            max_horizon,
        })
    }
}

/// Variable layout of one fixed-horizon program.
#[derive(Debug, Clone)]
pub struct FixedHorizonLp {
    pub lp: LinearProgram,
    pub horizon: usize,
    n: usize,
    m: usize,
    scale: Vec<f64>,
}

impl FixedHorizonLp {
    fn p(&self, j: usize, i: usize) -> usize {
        (j - 1) * 2 * self.n + i
    }
    fn q(&self, j: usize, i: usize) -> usize {
        (j - 1) * 2 * self.n + self.n + i
    }
    fn vp(&self, j: usize, i: usize) -> usize {
        2 * self.n * self.horizon + j * 2 * self.m + i
    }
    fn vm(&self, j: usize, i: usize) -> usize {
        2 * self.n * self.horizon + j * 2 * self.m + self.m + i
    }
    fn xi(&self, l: usize) -> usize {
        2 * (self.n + self.m) * self.horizon + l
    }

    pub fn num_vars(&self) -> usize {
        self.lp.num_vars()
    }
}

/// Per-coordinate scale of the deviation variables.
pub fn deviation_scale(tubes: &TubeCache) -> Vec<f64> {
    let radii = tubes.sinf().set.axis_radii();
    radii
        .iter()
        .map(|r| if *r > 0.0 && r.is_finite() { *r } else { 1.0 })
        .collect()
}

fn split_bounds(lo: f64, hi: f64) -> Option<((f64, f64), (f64, f64))> {
    if lo > hi {
        return None;
    }
    Some(if lo > 0.0 {
        ((lo, hi), (0.0, 0.0))
    } else if hi < 0.0 {
        ((0.0, 0.0), (-hi, -lo))
    } else {
        ((0.0, hi), (0.0, -lo))
    })
}

/// What constrains the last predicted state.
#[derive(Clone, Copy)]
enum EndConstraint<'a> {
    Terminal(&'a TerminalSpec),
    /// The ordinary stage set, as if the horizon continued.
    Stage,
}

/// Builds the program for horizon `horizon`, or `None` when the stage sets
/// make it infeasible by construction.
#[allow(clippy::too_many_arguments)]
pub fn build_fixed_horizon_lp(
    scenario: &Scenario,
    stages: &StageSets,
    scale: &[f64],
    gamma_z: f64,
    gamma_v: f64,
    x: &Vector,
    horizon: usize,
    terminal: &TerminalSpec,
) -> Result<Option<FixedHorizonLp>> {
    build_lp(scenario, stages, scale, gamma_z, gamma_v, x, horizon, EndConstraint::Terminal(terminal))
}

#[allow(clippy::too_many_arguments)]
fn build_lp(
    scenario: &Scenario,
    stages: &StageSets,
    scale: &[f64],
    gamma_z: f64,
    gamma_v: f64,
    x: &Vector,
    horizon: usize,
    end: EndConstraint<'_>,
) -> Result<Option<FixedHorizonLp>> {
    let n = scenario.state_dim();
    let m = scenario.input_dim();
    if x.len() != n {
        return Err(Error::dim("measured state", n, x.len()));
    }
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    if horizon > stages.max_horizon || horizon > stages.state.len() {
        return Ok(None);
    }
    let last_stage = match end {
        EndConstraint::Terminal(_) => horizon,
        EndConstraint::Stage => horizon + 1,
    };
    if last_stage > stages.state.len() {
        return Ok(None);
    }
    let k = stages.k;
    let n_xi = match end {
        EndConstraint::Stage | EndConstraint::Terminal(TerminalSpec::Exact) => 0,
        EndConstraint::Terminal(TerminalSpec::Zonotope(z)) => {
            if z.dim() != n {
                return Err(Error::dim("terminal set", n, z.dim()));
            }
            z.num_generators()
        }
    };
    let layout_vars = 2 * (n + m) * horizon + n_xi;
    let mut out = FixedHorizonLp {
        lp: LinearProgram::new(layout_vars),
        horizon,
        n,
        m,
        scale: scale.to_vec(),
    };
    let refs: Vec<Vector> = (0..=horizon).map(|j| scenario.reference_at(k + j)).collect();

    // Objective and default bounds.
    for j in 1..=horizon {
        for i in 0..n {
            let (p, q) = (out.p(j, i), out.q(j, i));
            out.lp.objective[p] = gamma_z * scale[i];
            out.lp.objective[q] = gamma_z * scale[i];
            out.lp.set_bounds(p, 0.0, f64::INFINITY);
            out.lp.set_bounds(q, 0.0, f64::INFINITY);
        }
    }
    for j in 0..horizon {
        for i in 0..m {
            let (vp, vm) = (out.vp(j, i), out.vm(j, i));
            out.lp.objective[vp] = gamma_v;
            out.lp.objective[vm] = gamma_v;
            out.lp.set_bounds(vp, 0.0, f64::INFINITY);
            out.lp.set_bounds(vm, 0.0, f64::INFINITY);
        }
    }

    // Dynamics: d(j+1) − A d(j) − B v(j) = A r(k+j) − r(k+j+1), with d(0) = x − r(k).
    let a = &scenario.a;
    let b = &scenario.b;
    for j in 0..horizon {
        let base = if j == 0 { a * x } else { a * &refs[j] };
        let rhs = base - &refs[j + 1];
        for i in 0..n {
            let mut row = Vec::with_capacity(2 * n + 2 * m + 2);
            row.push((out.p(j + 1, i), scale[i]));
            row.push((out.q(j + 1, i), -scale[i]));
            if j > 0 {
                for l in 0..n {
                    let c = a[(i, l)];
                    if c != 0.0 {
                        row.push((out.p(j, l), -c * scale[l]));
                        row.push((out.q(j, l), c * scale[l]));
                    }
                }
            }
            for l in 0..m {
                let c = b[(i, l)];
                if c != 0.0 {
                    row.push((out.vp(j, l), -c));
                    row.push((out.vm(j, l), c));
                }
            }
            out.lp.add_eq(row, rhs[i]);
        }
    }

    // Stage state constraints on d(j), j = 1..N−1.
    for j in 1..last_stage {
        let mut lo = vec![f64::NEG_INFINITY; n];
        let mut hi = vec![f64::INFINITY; n];
        let set = &stages.state[j];
        for (normal, offset) in set.normals.iter().zip(&set.offsets) {
            let rhs = offset - normal.dot(&refs[j]);
            let nz: Vec<usize> = (0..n).filter(|&i| normal[i] != 0.0).collect();
            if nz.len() == 1 {
                let i = nz[0];
                let bound = rhs / normal[i] / scale[i];
                if normal[i] > 0.0 {
                    hi[i] = hi[i].min(bound);
                } else {
                    lo[i] = lo[i].max(bound);
                }
            } else {
                let mut row = Vec::with_capacity(2 * nz.len());
                for &i in &nz {
                    row.push((out.p(j, i), normal[i] * scale[i]));
                    row.push((out.q(j, i), -normal[i] * scale[i]));
                }
                out.lp.add_le(row, rhs);
            }
        }
        for i in 0..n {
            let Some((pb, qb)) = split_bounds(lo[i], hi[i]) else {
                return Ok(None);
            };
            let (p, q) = (out.p(j, i), out.q(j, i));
            out.lp.set_bounds(p, pb.0, pb.1);
            out.lp.set_bounds(q, qb.0, qb.1);
        }
    }

    // Stage input constraints on v(j), j = 0..N−1.
    for j in 0..horizon {
        let mut lo = vec![f64::NEG_INFINITY; m];
        let mut hi = vec![f64::INFINITY; m];
        let set = &stages.input[j];
        for (normal, offset) in set.normals.iter().zip(&set.offsets) {
            let nz: Vec<usize> = (0..m).filter(|&i| normal[i] != 0.0).collect();
            if nz.len() == 1 {
                let i = nz[0];
                let bound = offset / normal[i];
                if normal[i] > 0.0 {
                    hi[i] = hi[i].min(bound);
                } else {
                    lo[i] = lo[i].max(bound);
                }
            } else {
                let mut row = Vec::with_capacity(2 * nz.len());
                for &i in &nz {
                    row.push((out.vp(j, i), normal[i]));
                    row.push((out.vm(j, i), -normal[i]));
                }
                out.lp.add_le(row, *offset);
            }
        }
        for i in 0..m {
            let Some((pb, qb)) = split_bounds(lo[i], hi[i]) else {
                return Ok(None);
            };
            let (vp, vm) = (out.vp(j, i), out.vm(j, i));
            out.lp.set_bounds(vp, pb.0, pb.1);
            out.lp.set_bounds(vm, qb.0, qb.1);
        }
    }

    // Terminal constraint on d(N).
    let terminal = match end {
        EndConstraint::Terminal(t) => t,
        EndConstraint::Stage => return Ok(Some(out)),
    };
    match terminal {
        TerminalSpec::Exact => {
            for i in 0..n {
                let (p, q) = (out.p(horizon, i), out.q(horizon, i));
                out.lp.set_bounds(p, 0.0, 0.0);
                out.lp.set_bounds(q, 0.0, 0.0);
            }
        }
        TerminalSpec::Zonotope(z) if z.num_generators() == 0 => {
            for i in 0..n {
                let c = z.center[i] / scale[i];
                let (p, q) = (out.p(horizon, i), out.q(horizon, i));
                out.lp.set_bounds(p, c.max(0.0), c.max(0.0));
                out.lp.set_bounds(q, (-c).max(0.0), (-c).max(0.0));
            }
        }
        TerminalSpec::Zonotope(z) => {
            for l in 0..n_xi {
                out.lp.set_bounds(out.xi(l), -1.0, 1.0);
            }
            for i in 0..n {
                let mut row = vec![
                    (out.p(horizon, i), scale[i]),
                    (out.q(horizon, i), -scale[i]),
                ];
                for (l, g) in z.generators.iter().enumerate() {
                    if g[i] != 0.0 {
                        row.push((out.xi(l), -g[i]));
                    }
                }
                out.lp.add_eq(row, z.center[i]);
            }
        }
    }
    Ok(Some(out))
}

/// Solves one fixed-horizon program; `Ok(None)` when infeasible.
#[allow(clippy::too_many_arguments)]
pub fn solve_fixed_horizon(
    scenario: &Scenario,
    stages: &StageSets,
    scale: &[f64],
    gamma_z: f64,
    gamma_v: f64,
    x: &Vector,
    horizon: usize,
    terminal: &TerminalSpec,
) -> Result<Option<SolveResult>> {
    let Some(prog) = build_fixed_horizon_lp(scenario, stages, scale, gamma_z, gamma_v, x, horizon, terminal)? else {
        return Ok(None);
    };
    let outcome = lp::solve(&prog.lp).map_err(|source| Error::SolverAtHorizon { horizon, source })?;
    let sol = match outcome {
        LpOutcome::Optimal(s) => s,
        LpOutcome::Infeasible => return Ok(None),
        LpOutcome::Unbounded => {
            return Err(Error::InvalidInput(format!(
                "fixed-horizon program unbounded at horizon {horizon}"
            )))
        }
    };
    Ok(Some(reconstruct(scenario, stages.k, &prog, &sol.point, x, gamma_z, gamma_v)))
}

/// Whether the first `horizon` steps alone, with `z(horizon)` held to its
/// stage set instead of a terminal set, are infeasible. Every longer horizon
/// contains these constraints, so infeasibility here rules all of them out.
fn prefix_infeasible(scenario: &Scenario, stages: &StageSets, scale: &[f64], x: &Vector, horizon: usize) -> Result<bool> {
    let Some(mut prog) = build_lp(scenario, stages, scale, 0.0, 0.0, x, horizon, EndConstraint::Stage)? else {
        return Ok(horizon < stages.state.len());
    };
    prog.lp.objective.iter_mut().for_each(|c| *c = 0.0);
    let outcome = lp::solve(&prog.lp).map_err(|source| Error::SolverAtHorizon { horizon, source })?;
    Ok(matches!(outcome, LpOutcome::Infeasible))
}

fn reconstruct(
    scenario: &Scenario,
    k: usize,
    prog: &FixedHorizonLp,
    point: &[f64],
    x: &Vector,
    gamma_z: f64,
    gamma_v: f64,
) -> SolveResult {
    let (n, m, horizon) = (prog.n, prog.m, prog.horizon);
    let mut states = Vec::with_capacity(horizon + 1);
    states.push(x.clone());
    for j in 1..=horizon {
        let r = scenario.reference_at(k + j);
        let d = Vector::from_fn(n, |i, _| (point[prog.p(j, i)] - point[prog.q(j, i)]) * prog.scale[i]);
        states.push(r + d);
    }
    let inputs: Vec<Vector> = (0..horizon)
        .map(|j| Vector::from_fn(m, |i, _| point[prog.vp(j, i)] - point[prog.vm(j, i)]))
        .collect();
    let mut cost = horizon as f64;
    for (j, z) in states.iter().enumerate() {
        cost += gamma_z * vec_one_norm(&(z - scenario.reference_at(k + j)));
    }
    for v in &inputs {
        cost += gamma_v * vec_one_norm(v);
    }
    SolveResult {
        cost,
        horizon,
        inputs,
        states,
        feasible: true,
    }
}

/// Sweeps `N` over `[n_low, n_high]` and keeps the cheapest total cost,
/// preferring shorter horizons on ties. Stops early once `N` alone exceeds
/// the best cost, since every stage term is non-negative, or once the first
/// `N` steps admit no feasible trajectory at all (checked when an infeasible
/// `N` is a power of two). `terminal_for` returns `None` for horizons whose
/// terminal set is empty.
#[allow(clippy::too_many_arguments)]
pub fn sweep_horizons(
    scenario: &Scenario,
    stages: &StageSets,
    scale: &[f64],
    gamma_z: f64,
    gamma_v: f64,
    x: &Vector,
    n_low: usize,
    n_high: usize,
    mut terminal_for: impl FnMut(usize) -> Option<TerminalSpec>,
) -> Result<Option<SolveResult>> {
    let mut best: Option<SolveResult> = None;
    for horizon in n_low.max(1)..=n_high {
        if horizon > stages.max_horizon {
            break;
        }
        if let Some(b) = &best {
            if horizon as f64 >= b.cost - COST_TIE_TOL {
                break;
            }
        }
        let Some(terminal) = terminal_for(horizon) else {
            continue;
        };
        match solve_fixed_horizon(scenario, stages, scale, gamma_z, gamma_v, x, horizon, &terminal)? {
            Some(result) => {
                let better = best.as_ref().is_none_or(|b| result.cost < b.cost - COST_TIE_TOL);
                if better {
                    best = Some(result);
                }
            }
            None => {
                if horizon < n_high
                    && horizon.is_power_of_two()
                    && prefix_infeasible(scenario, stages, scale, x, horizon)?
                {
                    break;
                }
            }
        }
    }
    Ok(best)
}
