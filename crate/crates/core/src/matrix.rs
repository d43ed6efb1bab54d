//! Dense matrix helpers shared by every other module.
//!
//! Matrices and vectors are plain `nalgebra` dynamic types. This module adds
//! the few operations the controller needs on top of them: integer powers,
//! exact zero-order-hold discretization through the augmented matrix
//! exponential, and a cheap Schur-stability guard based on norm decay.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative truncation tolerance of the exponential's Taylor series.
pub const EXPM_SERIES_TOL: f64 = 1e-12;
/// Deepest scaling-and-squaring level accepted before giving up.
pub const EXPM_MAX_SQUARINGS: u32 = 64;
/// Default number of powers inspected by [`verify_schur`].
pub const SCHUR_MAX_POWER: usize = 64;

/// Builds a matrix from row vectors, rejecting ragged or non-finite input.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::InvalidInput("matrix needs at least one row".into()));
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return Err(Error::InvalidInput("matrix needs at least one column".into()));
    }
    for row in rows {
        if row.len() != ncols {
            return Err(Error::dim("matrix rows", ncols, row.len()));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

pub fn vector(values: &[f64]) -> Vector {
    Vector::from_column_slice(values)
}

/// Induced infinity norm (maximum absolute row sum).
pub fn inf_norm(m: &Matrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Induced 1-norm (maximum absolute column sum).
pub fn one_norm(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn vec_one_norm(v: &Vector) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn vec_inf_norm(v: &Vector) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// `m^i` by repeated squaring; `m^0` is the identity.
pub fn mat_power(m: &Matrix, i: usize) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::NotSquare("mat_power", m.nrows(), m.ncols()));
    }
    let mut result = Matrix::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    let mut e = i;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    Ok(result)
}

/// Exact discretization of `x' = Ac x + Bc u` under a zero-order hold.
///
/// Returns `(e^{Ac h}, (∫_0^h e^{Ac s} ds) Bc)` read off the exponential of the
/// augmented matrix `[[Ac, Bc], [0, 0]] h`, evaluated by scaling and squaring
/// a truncated Taylor series.
pub fn expm_with_integral(ac: &Matrix, bc: &Matrix, step: f64) -> Result<(Matrix, Matrix)> {
    if !ac.is_square() {
        return Err(Error::NotSquare("expm_with_integral", ac.nrows(), ac.ncols()));
    }
    if bc.nrows() != ac.nrows() {
        return Err(Error::dim("expm_with_integral input matrix rows", ac.nrows(), bc.nrows()));
    }
    if !(step >= 0.0) || !step.is_finite() {
        return Err(Error::InvalidInput(format!("step must be finite and non-negative, got {step}")));
    }
    let n = ac.nrows();
    let m = bc.ncols();
    let mut aug = Matrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(ac * step));
    aug.view_mut((0, n), (n, m)).copy_from(&(bc * step));

    let exp = expm(&aug)?;
    let a = exp.view((0, 0), (n, n)).into_owned();
    let b = exp.view((0, n), (n, m)).into_owned();
    Ok((a, b))
}

/// Matrix exponential by scaling and squaring a Taylor series.
pub fn expm(m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::NotSquare("expm", m.nrows(), m.ncols()));
    }
    let dim = m.nrows();
    let norm = inf_norm(m);
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    if squarings > EXPM_MAX_SQUARINGS {
        return Err(Error::SeriesNonConvergence(squarings));
    }
    let scaled = m / 2f64.powi(squarings as i32);

    let mut sum = Matrix::identity(dim, dim);
    let mut term = Matrix::identity(dim, dim);
    for k in 1..200 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if inf_norm(&term) <= EXPM_SERIES_TOL * inf_norm(&sum).max(f64::MIN_POSITIVE) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(sum)
}

/// Sufficient check for spectral radius below one: some power `m^p` with
/// `p <= max_power` has induced infinity norm below 1.
pub fn verify_schur(m: &Matrix, max_power: usize) -> bool {
    if !m.is_square() || m.nrows() == 0 {
        return false;
    }
    let mut power = m.clone();
    for _ in 1..=max_power {
        if inf_norm(&power) < 1.0 {
            return true;
        }
        power = &power * m;
    }
    false
}

/// Upper estimate of the spectral radius from `‖m^p‖^{1/p}` at `p = max_power`.
pub fn decay_rate(m: &Matrix, max_power: usize) -> Result<f64> {
    let p = mat_power(m, max_power.max(1))?;
    Ok(inf_norm(&p).powf(1.0 / max_power.max(1) as f64))
}
