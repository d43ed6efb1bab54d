//! Terminal sets `Q ⊖ S(N)` for the fixed-sequence baseline, with `Q` the
//! outer approximation of the limit tube.
//!
//! `Q = (1 − α)⁻¹ Σ_{r<n*} A_K^r W` has one generator per (block `r`, axis `l`).
//! Every generator of `S(N)` can be written exactly in that basis: with
//! `A_K^{n*} w_j = Σ_l M_lj w_l`, the generator `A_K^{q n* + r} w_j` equals
//! `(1 − α) Σ_l (M^q)_lj Q_{r,l}`. Charging `|coefficient|` to each basis
//! generator gives per-generator budgets `s_{r,l}(N)`, and
//! `{Σ ξ Q : |ξ_{r,l}| ≤ 1 − s_{r,l}(N)}` is an inner approximation of
//! `Q ⊖ S(N)`. Since `‖M‖_∞ ≤ α`, every budget stays below one.

use crate::error::{Error, Result};
use crate::matrix::{Matrix, Vector};
use crate::sets::{BoxSet, Zonotope};
use crate::tube::SinfApprox;

use super::TerminalSpec;

#[derive(Debug, Clone)]
pub struct FtcsTerminal {
    /// Generators of `Q`, index `r * n + l`.
    basis: Vec<Vector>,
    order: usize,
    inflation: f64,
    dim: usize,
    contraction: Matrix,
    /// `rowsum |M^q|` for `q = 0, 1, …`
    row_sums: Vec<Vec<f64>>,
    last_power: Matrix,
}

impl FtcsTerminal {
    pub fn new(ak: &Matrix, w: &BoxSet, sinf: &SinfApprox) -> Result<Self> {
        let n = w.dim();
        if !w.is_symmetric() || w.active_coordinates().len() != n {
            return Err(Error::InvalidInput(
                "fixed terminal sequence needs a symmetric disturbance box with every coordinate active".into(),
            ));
        }
        let half = w.half_widths();
        let scale = 1.0 / (1.0 - sinf.inflation);
        let mut basis = Vec::with_capacity(sinf.order * n);
        let mut block = Matrix::from_diagonal(&Vector::from_column_slice(&half));
        for _ in 0..sinf.order {
            for l in 0..n {
                basis.push(block.column(l) * scale);
            }
            block = ak * &block;
        }
        // block is now A_K^{n*} diag(w̄)
        let contraction = Matrix::from_fn(n, n, |l, j| block[(l, j)] / half[l]);
        let worst_row = contraction
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        if worst_row >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "contraction matrix has row sum {worst_row} >= 1; S(inf) approximation too coarse"
            )));
        }
        Ok(FtcsTerminal {
            basis,
            order: sinf.order,
            inflation: sinf.inflation,
            dim: n,
            row_sums: vec![vec![1.0; n]],
            last_power: Matrix::identity(n, n),
            contraction,
        })
    }

    pub fn q_set(&self) -> Zonotope {
        Zonotope {
            center: Vector::zeros(self.dim),
            generators: self.basis.clone(),
        }
    }

    fn row_sum(&mut self, q: usize) -> &[f64] {
        while self.row_sums.len() <= q {
            self.last_power = &self.last_power * &self.contraction;
            let sums = self
                .last_power
                .row_iter()
                .map(|r| r.iter().map(|v| v.abs()).sum())
                .collect();
            self.row_sums.push(sums);
        }
        &self.row_sums[q]
    }

    /// Budgets `s_{r,l}(N)` in basis order.
    pub fn allocation(&mut self, horizon: usize) -> Vec<f64> {
        let n = self.dim;
        let mut s = vec![0.0; self.order * n];
        for i in 0..horizon {
            let (q, r) = (i / self.order, i % self.order);
            let sums = self.row_sum(q).to_vec();
            for l in 0..n {
                s[r * n + l] += (1.0 - self.inflation) * sums[l];
            }
        }
        s
    }

    /// Terminal set for horizon `N`, or `None` if some budget is exhausted.
    pub fn terminal(&mut self, horizon: usize) -> Option<TerminalSpec> {
        let s = self.allocation(horizon);
        if s.iter().any(|v| *v > 1.0) {
            return None;
        }
        let generators = self
            .basis
            .iter()
            .zip(&s)
            .filter(|(_, s)| **s < 1.0)
            .map(|(g, s)| g * (1.0 - s))
            .collect();
        Some(TerminalSpec::Zonotope(Zonotope {
            center: Vector::zeros(self.dim),
            generators,
        }))
    }
}
