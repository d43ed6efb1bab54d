use crate::controller::{Branch, Controller, Mode};
use crate::error::{Error, Result};
use crate::matrix::Vector;
use crate::scenario::Scenario;

use super::{DisturbanceSource, SimOptions, SimTrace, CONTAINMENT_TOL, COST_DECREASE_TOL, DISTURBANCE_TOL};

/// Tolerance on recorded state propagation, relative to the state magnitude.
pub const PROPAGATION_TOL: f64 = 1e-9;
/// Constraint slack allowed on recorded states and inputs.
pub const CONSTRAINT_TOL: f64 = 1e-7;
/// Relative agreement required between a trace and its replay.
pub const REPLAY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Default)]
pub struct TraceCheck {
    pub violations: Vec<String>,
}

impl TraceCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn vector(v: &[f64]) -> Vector {
    Vector::from_column_slice(v)
}

/// Re-checks every closed-loop guarantee against the recorded data alone:
/// propagation, constraint satisfaction, cost decrease, horizon shortening,
/// completion bound and terminal containment.
pub fn check_trace(scenario: &Scenario, trace: &SimTrace) -> Result<TraceCheck> {
    let mut out = Vec::new();
    let n = scenario.state_dim();
    let records = &trace.records;
    if records.is_empty() {
        out.push("trace has no records".to_string());
        return Ok(TraceCheck { violations: out });
    }
    if records.iter().any(|r| r.x.len() != n || r.w.len() != n) {
        return Err(Error::dim("trace state", n, records[0].x.len()));
    }
    if records.len() != trace.completion_step {
        out.push(format!(
            "{} records for completion step {}",
            records.len(),
            trace.completion_step
        ));
    }

    for (i, r) in records.iter().enumerate() {
        if r.k != i {
            out.push(format!("record {i} carries step index {}", r.k));
        }
        let x = vector(&r.x);
        let u = vector(&r.u);
        let w = vector(&r.w);
        if !scenario.w.contains(&w, DISTURBANCE_TOL) {
            out.push(format!("step {i}: disturbance outside W"));
        }
        let x_res = scenario.state_set(i).max_residual(&x);
        if x_res > CONSTRAINT_TOL {
            out.push(format!("step {i}: state constraint violated by {x_res:e}"));
        }
        let u_res = scenario.input_set(i).max_residual(&u);
        if u_res > CONSTRAINT_TOL {
            out.push(format!("step {i}: input constraint violated by {u_res:e}"));
        }
        let next = &scenario.a * &x + &scenario.b * &u + &w;
        let recorded = match records.get(i + 1) {
            Some(r) => vector(&r.x),
            None => vector(&trace.final_state),
        };
        let scale = 1.0 + next.amax();
        if (&next - &recorded).amax() > PROPAGATION_TOL * scale {
            out.push(format!("step {i}: recorded successor state does not follow the dynamics"));
        }
        let expected_branch = match (trace.mode, r.branch) {
            (Mode::Ftcs, Branch::Fixed) => true,
            (Mode::Ftcs, _) => false,
            (_, Branch::Fixed) => false,
            _ => true,
        };
        if !expected_branch {
            out.push(format!("step {i}: branch {} invalid for mode {}", r.branch.as_str(), trace.mode));
        }
    }

    for pair in records.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        if trace.mode != Mode::Ftcs && cur.cost > prev.cost - trace.lambda + COST_DECREASE_TOL {
            out.push(format!(
                "step {}: cost {:.9} exceeds {:.9} minus margin {:.6}",
                cur.k, cur.cost, prev.cost, trace.lambda
            ));
        }
        let must_shorten = trace.mode == Mode::Mintime || cur.branch == Branch::C2;
        if must_shorten && cur.horizon + 1 > prev.horizon {
            out.push(format!("step {}: horizon {} not below {}", cur.k, cur.horizon, prev.horizon));
        }
    }
    if records.last().map(|r| r.horizon) != Some(1) {
        out.push("last recorded horizon is not 1".into());
    }
    if let Some(bound) = trace.completion_bound {
        if trace.completion_step > bound {
            out.push(format!("completion step {} exceeds bound {bound}", trace.completion_step));
        }
    }
    if let Some(n_bar) = trace.n_bar {
        if n_bar > trace.n0 {
            out.push(format!("N-bar {n_bar} exceeds initial horizon {}", trace.n0));
        }
    }

    let reference = scenario.reference_at(trace.completion_step);
    let error = vector(&trace.final_state) - &reference;
    let mut controller = Controller::new(scenario, trace.mode)?;
    let container = match (trace.mode, trace.n_bar) {
        (Mode::Ftcs, _) => controller.ftcs_q().expect("baseline mode has Q"),
        (_, Some(n_bar)) => controller.tubes().tube_at(n_bar).clone(),
        (_, None) => {
            out.push("missing N-bar for an exact-terminal mode".into());
            return Ok(TraceCheck { violations: out });
        }
    };
    if !container.contains(&error, CONTAINMENT_TOL)? {
        out.push("final error outside the terminal tube".into());
    }
    let distance = scenario.distance_to_reference(&vector(&trace.final_state), trace.completion_step);
    if (distance - trace.final_distance).abs() > 1e-9 * (1.0 + distance) {
        out.push(format!("recorded final distance {} differs from {distance}", trace.final_distance));
    }
    out.extend(trace.violations.iter().map(|v| format!("recorded: {v}")));
    Ok(TraceCheck { violations: out })
}

/// Re-simulates `trace` from its initial state with its own disturbance
/// sequence and compares costs, horizons, inputs and branches.
pub fn replay_trace(scenario: &Scenario, trace: &SimTrace) -> Result<TraceCheck> {
    let x0 = vector(&trace.x0);
    let source = DisturbanceSource::Replay(trace.disturbances());
    let fresh = super::simulate(scenario, trace.mode, &x0, &source, SimOptions { strict: false })?;
    let mut out = Vec::new();
    if fresh.records.len() != trace.records.len() {
        out.push(format!(
            "replay took {} steps, trace has {}",
            fresh.records.len(),
            trace.records.len()
        ));
    }
    let close = |a: f64, b: f64| (a - b).abs() <= REPLAY_TOL * (1.0 + a.abs().max(b.abs()));
    for (a, b) in fresh.records.iter().zip(&trace.records) {
        if a.horizon != b.horizon || a.branch != b.branch {
            out.push(format!(
                "step {}: replay chose N={} {} vs recorded N={} {}",
                a.k,
                a.horizon,
                a.branch.as_str(),
                b.horizon,
                b.branch.as_str()
            ));
            break;
        }
        if !close(a.cost, b.cost) {
            out.push(format!("step {}: replay cost {} vs recorded {}", a.k, a.cost, b.cost));
        }
        let u_scale = 1.0 + b.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if a.u.iter().zip(&b.u).any(|(p, q)| (p - q).abs() > REPLAY_TOL * u_scale) {
            out.push(format!("step {}: replay input differs", a.k));
        }
    }
    Ok(TraceCheck { violations: out })
}
