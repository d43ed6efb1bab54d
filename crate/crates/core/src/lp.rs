//! Dense two-phase revised simplex for bounded-variable linear programs.
//!
//! The solver works on `min cᵀx` subject to `a·x ≤ b`, `a·x = b` and per-variable
//! bounds (either side may be infinite). Inequalities receive a slack column and
//! every row lives in one dense explicit basis inverse, updated by a rank-one
//! pivot and refactored from scratch every [`SolverOptions::refactor_interval`]
//! pivots. Pricing is Dantzig's rule; after a run of degenerate pivots the
//! solver falls back to Bland's smallest-index rule until progress resumes.
//!
//! Rows and columns are equilibrated (geometric mean, powers of two) before
//! solving, so badly scaled problems, like normalized orbital dynamics whose
//! entries sit around `1e-6`, get tolerances that mean something.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("simplex stalled after {0} iterations")]
    Stalled(usize),
    #[error("basis became numerically singular")]
    SingularBasis,
}

/// Solver tolerances and limits, in the scaled problem's units.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub max_iterations: usize,
    pub refactor_interval: usize,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub degenerate_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feasibility_tol: 1e-8,
            optimality_tol: 1e-9,
            pivot_tol: 1e-10,
            max_iterations: 50_000,
            refactor_interval: 64,
            degenerate_limit: 50,
        }
    }
}

/// One sparse row `Σ coeffs[k].1 · x[coeffs[k].0]` compared against `rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub inequalities: Vec<Constraint>,
    pub equalities: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// A program over `num_vars` free variables with zero objective.
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; num_vars],
            inequalities: Vec::new(),
            equalities: Vec::new(),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.inequalities.len() + self.equalities.len()
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.bounds[var] = (lower, upper);
    }

    pub fn add_le(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.inequalities.push(Constraint { coeffs, rhs });
    }

    pub fn add_ge(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        let coeffs = coeffs.into_iter().map(|(j, a)| (j, -a)).collect();
        self.inequalities.push(Constraint { coeffs, rhs: -rhs });
    }

    pub fn add_eq(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.equalities.push(Constraint { coeffs, rhs });
    }

    /// Adds `row · x ≤ rhs` from a dense coefficient slice, dropping zeros.
    pub fn add_le_dense(&mut self, row: &[f64], rhs: f64) {
        self.add_le(dense_to_sparse(row), rhs);
    }

    pub fn add_eq_dense(&mut self, row: &[f64], rhs: f64) {
        self.add_eq(dense_to_sparse(row), rhs);
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(LpError::Malformed(format!(
                "{} bounds for {} variables",
                self.bounds.len(),
                n
            )));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("objective must be finite".into()));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::Malformed(format!("variable {j} has bounds [{lo}, {hi}]")));
            }
        }
        for row in self.inequalities.iter().chain(&self.equalities) {
            if !row.rhs.is_finite() {
                return Err(LpError::Malformed("right-hand sides must be finite".into()));
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(LpError::Malformed(format!("row references variable {j} of {n}")));
                }
                if !a.is_finite() {
                    return Err(LpError::Malformed("coefficients must be finite".into()));
                }
            }
        }
        Ok(())
    }

    /// Largest constraint or bound violation of `point`, in the problem's own units.
    pub fn max_violation(&self, point: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            worst = worst.max(lo - point[j]).max(point[j] - hi);
        }
        for row in &self.inequalities {
            worst = worst.max(row_dot(row, point) - row.rhs);
        }
        for row in &self.equalities {
            worst = worst.max((row_dot(row, point) - row.rhs).abs());
        }
        worst
    }

    pub fn objective_at(&self, point: &[f64]) -> f64 {
        self.objective.iter().zip(point).map(|(c, x)| c * x).sum()
    }
}

fn dense_to_sparse(row: &[f64]) -> Vec<(usize, f64)> {
    row.iter()
        .enumerate()
        .filter(|(_, a)| **a != 0.0)
        .map(|(j, a)| (j, *a))
        .collect()
}

fn row_dot(row: &Constraint, point: &[f64]) -> f64 {
    row.coeffs.iter().map(|&(j, a)| a * point[j]).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub point: Vec<f64>,
    pub objective_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn status(&self) -> LpStatus {
        match self {
            LpOutcome::Optimal(_) => LpStatus::Optimal,
            LpOutcome::Infeasible => LpStatus::Infeasible,
            LpOutcome::Unbounded => LpStatus::Unbounded,
        }
    }

    pub fn solution(&self) -> Option<&LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }

    pub fn into_solution(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    solve_with(lp, &SolverOptions::default())
}

/// Solves `lp`. If the basis degenerates numerically, the solve restarts once
/// from the slack basis with a stricter pivot threshold and frequent refactoring.
pub fn solve_with(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpOutcome, LpError> {
    lp.validate()?;
    let mut simplex = Simplex::build(lp, *opts);
    if let Err(err) = simplex.run() {
        if err != LpError::SingularBasis {
            return Err(err);
        }
        let strict = SolverOptions {
            pivot_tol: opts.pivot_tol.max(1e-7),
            refactor_interval: opts.refactor_interval.min(16),
            ..*opts
        };
        simplex = Simplex::build(lp, strict);
        simplex.run()?;
    }
    Ok(match simplex.outcome {
        Phase::Infeasible => LpOutcome::Infeasible,
        Phase::Unbounded => LpOutcome::Unbounded,
        _ => {
            let point = simplex.structural_point(lp);
            let objective_value = lp.objective_at(&point);
            LpOutcome::Optimal(LpSolution {
                point,
                objective_value,
            })
        }
    })
}

/// Convenience: is the feasible region of `lp` empty?
pub fn is_infeasible(lp: &LinearProgram) -> Result<bool, LpError> {
    let mut probe = lp.clone();
    probe.objective.iter_mut().for_each(|c| *c = 0.0);
    Ok(matches!(solve(&probe)?, LpOutcome::Infeasible))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Running,
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

struct Simplex {
    opts: SolverOptions,
    m: usize,
    num_struct: usize,
    /// Sparse scaled columns: structural, then slacks, then artificials.
    cols: Vec<Vec<(usize, f64)>>,
    kind: Vec<ColKind>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    phase2_cost: Vec<f64>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    x: Vec<f64>,
    col_scale: Vec<f64>,
    /// Column basic in each row.
    head: Vec<usize>,
    /// Row of each basic column, `usize::MAX` when nonbasic.
    basic_row: Vec<usize>,
    binv: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
    outcome: Phase,
}

const NONBASIC: usize = usize::MAX;

fn pow2_round(v: f64) -> f64 {
    if !v.is_finite() || v <= 0.0 {
        1.0
    } else {
        2f64.powi(v.log2().round() as i32)
    }
}

impl Simplex {
    fn build(lp: &LinearProgram, opts: SolverOptions) -> Simplex {
        let n = lp.num_vars();
        let rows: Vec<(&Constraint, bool)> = lp
            .inequalities
            .iter()
            .map(|r| (r, true))
            .chain(lp.equalities.iter().map(|r| (r, false)))
            .collect();
        let m = rows.len();

        // Merge duplicate entries per row.
        let mut row_entries: Vec<Vec<(usize, f64)>> = rows
            .iter()
            .map(|(r, _)| {
                let mut e = r.coeffs.clone();
                e.sort_by_key(|&(j, _)| j);
                let mut merged: Vec<(usize, f64)> = Vec::with_capacity(e.len());
                for (j, a) in e {
                    match merged.last_mut() {
                        Some(last) if last.0 == j => last.1 += a,
                        _ => merged.push((j, a)),
                    }
                }
                merged.retain(|&(_, a)| a != 0.0);
                merged
            })
            .collect();

        let (row_scale, col_scale) = equilibrate(&row_entries, n);
        for (i, entries) in row_entries.iter_mut().enumerate() {
            for (j, a) in entries.iter_mut() {
                *a *= row_scale[i] * col_scale[*j];
            }
        }

        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, entries) in row_entries.iter().enumerate() {
            for &(j, a) in entries {
                cols[j].push((i, a));
            }
        }
        let mut kind = vec![ColKind::Structural; n];
        let mut lower: Vec<f64> = (0..n).map(|j| lp.bounds[j].0 / col_scale[j]).collect();
        let mut upper: Vec<f64> = (0..n).map(|j| lp.bounds[j].1 / col_scale[j]).collect();

        let cmax = (0..n)
            .map(|j| (lp.objective[j] * col_scale[j]).abs())
            .fold(0.0, f64::max);
        let cost_scale = if cmax > 0.0 { pow2_round(1.0 / cmax) } else { 1.0 };
        let mut phase2_cost: Vec<f64> = (0..n)
            .map(|j| lp.objective[j] * col_scale[j] * cost_scale)
            .collect();

        let rhs: Vec<f64> = rows
            .iter()
            .enumerate()
            .map(|(i, (r, _))| r.rhs * row_scale[i])
            .collect();

        let mut x = vec![0.0; n];
        for j in 0..n {
            x[j] = if lower[j].is_finite() {
                lower[j]
            } else if upper[j].is_finite() {
                upper[j]
            } else {
                0.0
            };
        }

        // Slack columns for inequality rows.
        let mut slack_of_row = vec![NONBASIC; m];
        for (i, (_, is_ineq)) in rows.iter().enumerate() {
            if *is_ineq {
                slack_of_row[i] = cols.len();
                cols.push(vec![(i, 1.0)]);
                kind.push(ColKind::Slack);
                lower.push(0.0);
                upper.push(f64::INFINITY);
                phase2_cost.push(0.0);
                x.push(0.0);
            }
        }

        let mut residual = rhs.clone();
        for (j, col) in cols.iter().enumerate() {
            if x[j] != 0.0 {
                for &(i, a) in col {
                    residual[i] -= a * x[j];
                }
            }
        }

        let mut head = vec![0usize; m];
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            let s = slack_of_row[i];
            if s != NONBASIC && residual[i] >= 0.0 {
                head[i] = s;
                x[s] = residual[i];
                binv[i * m + i] = 1.0;
            } else {
                let sign = if residual[i] >= 0.0 { 1.0 } else { -1.0 };
                let a = cols.len();
                cols.push(vec![(i, sign)]);
                kind.push(ColKind::Artificial);
                lower.push(0.0);
                upper.push(f64::INFINITY);
                phase2_cost.push(0.0);
                x.push(residual[i].abs());
                head[i] = a;
                binv[i * m + i] = sign;
            }
        }
        let mut basic_row = vec![NONBASIC; cols.len()];
        for (i, &c) in head.iter().enumerate() {
            basic_row[c] = i;
        }
        let cost = kind
            .iter()
            .map(|k| if *k == ColKind::Artificial { 1.0 } else { 0.0 })
            .collect();

        Simplex {
            opts,
            m,
            num_struct: n,
            cols,
            kind,
            lower,
            upper,
            phase2_cost,
            cost,
            rhs,
            x,
            col_scale,
            head,
            basic_row,
            binv,
            iterations: 0,
            since_refactor: 0,
            outcome: Phase::Running,
        }
    }

    fn run(&mut self) -> Result<(), LpError> {
        let has_artificials = self.kind.iter().any(|k| *k == ColKind::Artificial);
        if has_artificials {
            let phase1 = self.iterate()?;
            debug_assert_ne!(phase1, Phase::Unbounded);
            self.refactor()?;
            let infeasibility = (0..self.cols.len())
                .filter(|&j| self.kind[j] == ColKind::Artificial)
                .map(|j| self.x[j])
                .fold(0.0, f64::max);
            if infeasibility > self.opts.feasibility_tol {
                self.outcome = Phase::Infeasible;
                return Ok(());
            }
            for j in 0..self.cols.len() {
                if self.kind[j] == ColKind::Artificial {
                    self.upper[j] = 0.0;
                    if self.basic_row[j] == NONBASIC {
                        self.x[j] = 0.0;
                    }
                }
            }
            self.drive_out_artificials();
        }
        self.cost = self.phase2_cost.clone();
        let phase2 = self.iterate()?;
        self.outcome = phase2;
        if phase2 == Phase::Optimal {
            self.refactor()?;
        }
        Ok(())
    }

    /// Pivots zero-level artificials out of the basis where some structural or
    /// slack column can replace them; rows where none can are redundant.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            let a = self.head[r];
            if self.kind[a] != ColKind::Artificial {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.cols.len() {
                if self.basic_row[j] != NONBASIC || self.kind[j] == ColKind::Artificial {
                    continue;
                }
                if self.lower[j] == self.upper[j] {
                    continue;
                }
                let alpha_r: f64 = self.cols[j]
                    .iter()
                    .map(|&(k, v)| self.binv[r * self.m + k] * v)
                    .sum();
                if alpha_r.abs() > 1e-7 && best.is_none_or(|(_, b)| alpha_r.abs() > b.abs()) {
                    best = Some((j, alpha_r));
                }
            }
            if let Some((q, _)) = best {
                let alpha = self.column(q);
                // The artificial sits at (numerically) zero, so this is a degenerate pivot.
                let t = self.x[a] / alpha[r];
                self.x[q] += t;
                for i in 0..self.m {
                    let c = self.head[i];
                    self.x[c] -= alpha[i] * t;
                }
                self.x[a] = 0.0;
                self.pivot(r, q, &alpha);
            }
        }
    }

    fn column(&self, q: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for &(k, v) in &self.cols[q] {
            for (i, a) in alpha.iter_mut().enumerate() {
                *a += self.binv[i * m + k] * v;
            }
        }
        alpha
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for i in 0..m {
            let cb = self.cost[self.head[i]];
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yk, b) in y.iter_mut().zip(row) {
                    *yk += cb * b;
                }
            }
        }
        y
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= piv;
        }
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (pivot_row, after) = rest.split_at_mut(m);
        for (i, a) in alpha.iter().enumerate() {
            if i == r || *a == 0.0 {
                continue;
            }
            let row = if i < r {
                &mut before[i * m..(i + 1) * m]
            } else {
                let off = (i - r - 1) * m;
                &mut after[off..off + m]
            };
            for (x, p) in row.iter_mut().zip(pivot_row.iter()) {
                *x -= a * p;
            }
        }
        let leaving = self.head[r];
        self.basic_row[leaving] = NONBASIC;
        self.head[r] = q;
        self.basic_row[q] = r;
        self.since_refactor += 1;
    }

    /// Rebuilds the basis inverse by Gauss-Jordan elimination and recomputes
    /// the basic values from the nonbasic ones.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            return Ok(());
        }
        let mut a = vec![0.0; m * m];
        for (c, &col) in self.head.iter().enumerate() {
            for &(i, v) in &self.cols[col] {
                a[i * m + c] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let mut p = c;
            let mut best = a[c * m + c].abs();
            for i in c + 1..m {
                let v = a[i * m + c].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best < 1e-13 {
                return Err(LpError::SingularBasis);
            }
            if p != c {
                for k in 0..m {
                    a.swap(c * m + k, p * m + k);
                    inv.swap(c * m + k, p * m + k);
                }
            }
            let d = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= d;
                inv[c * m + k] /= d;
            }
            for i in 0..m {
                if i == c {
                    continue;
                }
                let f = a[i * m + c];
                if f != 0.0 {
                    for k in 0..m {
                        a[i * m + k] -= f * a[c * m + k];
                        inv[i * m + k] -= f * inv[c * m + k];
                    }
                }
            }
        }
        // inv now maps row space to basis position: B^{-1}.
        self.binv = inv;

        let mut residual = self.rhs.clone();
        for (j, col) in self.cols.iter().enumerate() {
            if self.basic_row[j] == NONBASIC && self.x[j] != 0.0 {
                for &(i, v) in col {
                    residual[i] -= v * self.x[j];
                }
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.x[self.head[i]] = row.iter().zip(&residual).map(|(b, r)| b * r).sum();
        }
        Ok(())
    }

    fn iterate(&mut self) -> Result<Phase, LpError> {
        let opts = self.opts;
        let mut degenerate_run = 0usize;
        loop {
            self.iterations += 1;
            if self.iterations > opts.max_iterations {
                return Err(LpError::Stalled(opts.max_iterations));
            }
            if self.since_refactor >= opts.refactor_interval {
                self.refactor()?;
            }
            let bland = degenerate_run >= opts.degenerate_limit;

            let y = self.duals();
            let mut entering: Option<(usize, f64, f64)> = None; // (col, reduced cost, direction)
            for j in 0..self.cols.len() {
                if self.basic_row[j] != NONBASIC || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = self.cost[j] - self.cols[j].iter().map(|&(i, v)| y[i] * v).sum::<f64>();
                let dir = if d < -opts.optimality_tol && self.x[j] < self.upper[j] {
                    1.0
                } else if d > opts.optimality_tol && self.x[j] > self.lower[j] {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    entering = Some((j, d, dir));
                    break;
                }
                if entering.is_none_or(|(_, best, _)| d.abs() > best.abs()) {
                    entering = Some((j, d, dir));
                }
            }
            let Some((q, _, dir)) = entering else {
                return Ok(Phase::Optimal);
            };

            let alpha = self.column(q);
            let tol = opts.feasibility_tol;

            // Harris pass one: largest step with bounds relaxed by the tolerance.
            let mut relaxed = f64::INFINITY;
            for i in 0..self.m {
                let rate = -dir * alpha[i];
                if rate.abs() <= opts.pivot_tol {
                    continue;
                }
                let c = self.head[i];
                let limit = if rate < 0.0 {
                    (self.x[c] - self.lower[c] + tol) / -rate
                } else {
                    (self.upper[c] - self.x[c] + tol) / rate
                };
                if limit < relaxed {
                    relaxed = limit;
                }
            }
            let flip = self.upper[q] - self.lower[q];

            // Pass two: among rows within the relaxed step, the largest pivot.
            let mut leave: Option<(usize, f64, f64)> = None; // (row, step, |alpha|)
            if relaxed.is_finite() {
                for i in 0..self.m {
                    let rate = -dir * alpha[i];
                    if rate.abs() <= opts.pivot_tol {
                        continue;
                    }
                    let c = self.head[i];
                    let exact = if rate < 0.0 {
                        (self.x[c] - self.lower[c]) / -rate
                    } else {
                        (self.upper[c] - self.x[c]) / rate
                    };
                    if !exact.is_finite() || exact > relaxed {
                        continue;
                    }
                    let exact = exact.max(0.0);
                    let better = match leave {
                        None => true,
                        Some((r, step, mag)) => {
                            if bland {
                                exact < step - 1e-12 || (exact <= step + 1e-12 && c < self.head[r])
                            } else {
                                rate.abs() > mag
                            }
                        }
                    };
                    if better {
                        leave = Some((i, exact, rate.abs()));
                    }
                }
            }

            let step = match leave {
                Some((_, t, _)) => t.min(flip),
                None => flip,
            };
            if !step.is_finite() {
                return Ok(Phase::Unbounded);
            }

            self.x[q] += dir * step;
            for i in 0..self.m {
                let c = self.head[i];
                self.x[c] -= dir * alpha[i] * step;
            }
            if step <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }

            match leave {
                Some((r, t, _)) if t <= flip => {
                    let c = self.head[r];
                    let rate = -dir * alpha[r];
                    self.x[c] = if rate < 0.0 { self.lower[c] } else { self.upper[c] };
                    self.pivot(r, q, &alpha);
                }
                _ => {
                    // Bound flip of the entering column.
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                }
            }
        }
    }

    fn structural_point(&self, lp: &LinearProgram) -> Vec<f64> {
        (0..self.num_struct)
            .map(|j| {
                let v = self.x[j] * self.col_scale[j];
                let (lo, hi) = lp.bounds[j];
                v.max(lo).min(hi)
            })
            .collect()
    }
}

/// Geometric-mean row/column equilibration, rounded to powers of two.
fn equilibrate(rows: &[Vec<(usize, f64)>], n: usize) -> (Vec<f64>, Vec<f64>) {
    let m = rows.len();
    let mut rs = vec![1.0; m];
    let mut cs = vec![1.0; n];
    for _ in 0..4 {
        for (i, entries) in rows.iter().enumerate() {
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for &(j, a) in entries {
                let v = (a * cs[j]).abs();
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi > 0.0 {
                rs[i] = pow2_round(1.0 / (lo * hi).sqrt());
            }
        }
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![0.0f64; n];
        for (i, entries) in rows.iter().enumerate() {
            for &(j, a) in entries {
                let v = (a * rs[i]).abs();
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        for j in 0..n {
            if hi[j] > 0.0 {
                cs[j] = pow2_round(1.0 / (lo[j] * hi[j]).sqrt());
            }
        }
    }
    (rs, cs)
}
