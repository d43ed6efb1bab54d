//! Guaranteed per-step cost decrease of the adaptive controller.

use crate::error::{Error, Result};
use crate::matrix::{one_norm, Matrix, Vector};
use crate::sets::BoxSet;

/// Vertex enumeration limit on the disturbance box.
pub const MAX_LAMBDA_COORDINATES: usize = 20;
const MAX_TERMS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaBar {
    pub value: f64,
    /// Number of series terms summed explicitly before the tail bound applied.
    pub truncation: usize,
    /// Disturbance vertex attaining the supremum.
    pub worst_vertex: Vec<f64>,
}

/// `1 − sup_{w ∈ vert W} Σ_j (γ_z ‖A_K^j w‖₁ + γ_v ‖K A_K^j w‖₁)`.
///
/// The series is summed until a geometric tail bound falls below `tail_tol`;
/// the bound is added to each partial sum, so the result never overstates
/// the true margin.
pub fn compute_lambda_bar(
    gamma_z: f64,
    gamma_v: f64,
    gain: &Matrix,
    ak: &Matrix,
    w: &BoxSet,
    tail_tol: f64,
) -> Result<LambdaBar> {
    if gamma_z < 0.0 || gamma_v < 0.0 {
        return Err(Error::InvalidInput("cost weights must be non-negative".into()));
    }
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidInput("tail tolerance must be positive".into()));
    }
    if !ak.is_square() || ak.nrows() != w.dim() || gain.ncols() != w.dim() {
        return Err(Error::dim("lambda computation", w.dim(), ak.nrows()));
    }
    if gamma_z + gamma_v == 0.0 {
        return Ok(LambdaBar {
            value: 1.0,
            truncation: 0,
            worst_vertex: w.center().iter().copied().collect(),
        });
    }
    let active = w.active_coordinates().len();
    if active > MAX_LAMBDA_COORDINATES {
        return Err(Error::InvalidInput(format!(
            "disturbance box has {active} nonzero-width coordinates; at most {MAX_LAMBDA_COORDINATES} supported"
        )));
    }

    // Window p with ‖A_K^p‖₁ < 1 gives ‖A_K^{i+p} w‖₁ ≤ c ‖A_K^i w‖₁.
    let mut power = ak.clone();
    let mut window = 1usize;
    let contraction = loop {
        let c = one_norm(&power);
        if c < 1.0 {
            break c;
        }
        window += 1;
        if window > 1000 {
            return Err(Error::NotSchur(1000));
        }
        power = &power * ak;
    };
    let tail_factor = (gamma_z + gamma_v * one_norm(gain)) / (1.0 - contraction);

    let vertices = w.vertices();
    let mut states: Vec<Vector> = vertices.clone();
    let mut sums = vec![0.0; vertices.len()];
    // Ring buffer of the last `window` state norms per vertex.
    let mut recent: Vec<Vec<f64>> = vec![vec![0.0; window]; vertices.len()];
    let mut terms = 0usize;
    loop {
        for (idx, x) in states.iter_mut().enumerate() {
            let norm_x: f64 = x.iter().map(|v| v.abs()).sum();
            let norm_kx: f64 = (gain * &*x).iter().map(|v| v.abs()).sum();
            sums[idx] += gamma_z * norm_x + gamma_v * norm_kx;
            recent[idx][terms % window] = norm_x;
            *x = ak * &*x;
        }
        terms += 1;
        if terms >= window {
            // Tail from index `terms` on is bounded through the next `window` states,
            // which are in turn bounded by the last `window` ones times `contraction`.
            let worst_tail = recent
                .iter()
                .map(|r| tail_factor * contraction * r.iter().sum::<f64>())
                .fold(0.0, f64::max);
            if worst_tail < tail_tol {
                let (best_idx, sup) = sums
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (i, s + tail_factor * contraction * recent[i].iter().sum::<f64>()))
                    .fold((0, f64::NEG_INFINITY), |acc, (i, s)| if s > acc.1 { (i, s) } else { acc });
                return Ok(LambdaBar {
                    value: 1.0 - sup,
                    truncation: terms,
                    worst_vertex: vertices[best_idx].iter().copied().collect(),
                });
            }
        }
        if terms > MAX_TERMS {
            return Err(Error::NoContraction(MAX_TERMS));
        }
    }
}
