//! Disturbance tubes `S(k) = Σ_{i<k} A_K^i W`, an outer approximation of their
//! limit, and tightened constraint sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{verify_schur, Matrix, Vector, SCHUR_MAX_POWER};
use crate::sets::{linear_map_zonotope, minkowski_sum, pontryagin_diff, BoxSet, HPolytope, Zonotope};

/// Largest `n*` tried by [`approximate_sinf`].
pub const SINF_MAX_ORDER: usize = 10_000;
/// Extra random directions used by the contraction test, on top of the axes.
pub const SINF_RANDOM_DIRECTIONS: usize = 32;
const SINF_DIRECTION_SEED: u64 = 0x5eed_d1ec;

/// Outer approximation `(1 − α)⁻¹ S(n*)` of the limit tube.
#[derive(Debug, Clone)]
pub struct SinfApprox {
    pub set: Zonotope,
    pub order: usize,
    pub inflation: f64,
}

/// Lazily grown tube sequence for one closed-loop matrix and disturbance box.
#[derive(Debug, Clone)]
pub struct TubeCache {
    ak: Matrix,
    w: BoxSet,
    /// `A_K^i W` for `i = 0, 1, …`
    images: Vec<Zonotope>,
    /// `S(0), S(1), …`
    tubes: Vec<Zonotope>,
    sinf: SinfApprox,
}

impl TubeCache {
    pub fn new(ak: Matrix, w: BoxSet, contraction_tol: f64) -> Result<Self> {
        if ak.nrows() != w.dim() {
            return Err(Error::dim("tube disturbance", ak.nrows(), w.dim()));
        }
        let sinf = approximate_sinf(&ak, &w, contraction_tol)?;
        Ok(TubeCache {
            images: vec![w.to_zonotope()],
            tubes: vec![Zonotope::origin(w.dim())],
            ak,
            w,
            sinf,
        })
    }

    pub fn closed_loop(&self) -> &Matrix {
        &self.ak
    }

    pub fn disturbance(&self) -> &BoxSet {
        &self.w
    }

    pub fn sinf(&self) -> &SinfApprox {
        &self.sinf
    }

    /// `A_K^i W`.
    pub fn image(&mut self, i: usize) -> &Zonotope {
        while self.images.len() <= i {
            let last = self.images.last().expect("images start non-empty");
            let next = linear_map_zonotope(&self.ak, last).expect("square closed loop");
            self.images.push(next);
        }
        &self.images[i]
    }

    /// `S(k)`, extending the cache as needed.
    pub fn tube_at(&mut self, k: usize) -> &Zonotope {
        while self.tubes.len() <= k {
            let i = self.tubes.len() - 1;
            let img = self.image(i).clone();
            let next = minkowski_sum(&self.tubes[i], &img).expect("matching dimensions");
            self.tubes.push(next);
        }
        &self.tubes[k]
    }

    pub fn cached_len(&self) -> usize {
        self.tubes.len()
    }
}

/// Smallest `n*` with `A_K^{n*} W ⊆ α W` on the tested support directions
/// (all axes plus a fixed set of random unit directions) and `α ≤ contraction_tol`;
/// returns `S(n*) / (1 − α)`.
pub fn approximate_sinf(ak: &Matrix, w: &BoxSet, contraction_tol: f64) -> Result<SinfApprox> {
    if !(contraction_tol > 0.0 && contraction_tol < 1.0) {
        return Err(Error::InvalidInput(format!(
            "contraction tolerance must lie in (0, 1), got {contraction_tol}"
        )));
    }
    if !ak.is_square() || ak.nrows() != w.dim() {
        return Err(Error::dim("S(inf) closed-loop matrix", w.dim(), ak.nrows()));
    }
    if !verify_schur(ak, SCHUR_MAX_POWER) {
        return Err(Error::NotSchur(SCHUR_MAX_POWER));
    }
    let n = w.dim();
    let mut directions = Vec::with_capacity(2 * n + SINF_RANDOM_DIRECTIONS);
    for i in 0..n {
        let mut e = Vector::zeros(n);
        e[i] = 1.0;
        directions.push(e.clone());
        directions.push(-e);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SINF_DIRECTION_SEED);
    while directions.len() < 2 * n + SINF_RANDOM_DIRECTIONS {
        let d = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let norm = d.norm();
        if norm > 1e-3 {
            directions.push(d / norm);
        }
    }
    let wz = w.to_zonotope();
    let w_support: Vec<f64> = directions.iter().map(|d| wz.support(d)).collect();

    let mut power_w = wz.clone();
    let mut tube = Zonotope::origin(n);
    for order in 1..=SINF_MAX_ORDER {
        tube = minkowski_sum(&tube, &power_w)?;
        power_w = linear_map_zonotope(ak, &power_w)?;
        let mut alpha = 0.0f64;
        let mut ok = true;
        for (d, hw) in directions.iter().zip(&w_support) {
            let h = power_w.support(d);
            if *hw > 0.0 {
                alpha = alpha.max(h / hw);
            } else if h > 1e-15 {
                ok = false;
                break;
            }
        }
        if ok && alpha <= contraction_tol {
            return Ok(SinfApprox {
                set: tube.scaled(1.0 / (1.0 - alpha)),
                order,
                inflation: alpha,
            });
        }
    }
    Err(Error::NoContraction(SINF_MAX_ORDER))
}

/// `(X(k+j) ⊖ S(j), U(k+j) ⊖ K S(j))`, plus whether either set came out empty.
#[derive(Debug, Clone)]
pub struct Tightened {
    pub state: HPolytope,
    pub input: HPolytope,
    pub empty: bool,
}

pub fn tighten(
    state_at: impl Fn(usize) -> HPolytope,
    input_at: impl Fn(usize) -> HPolytope,
    gain: &Matrix,
    cache: &mut TubeCache,
    k: usize,
    j: usize,
) -> Result<Tightened> {
    let s = cache.tube_at(j).clone();
    let state = pontryagin_diff(&state_at(k + j), &s)?;
    let ks = linear_map_zonotope(gain, &s)?;
    let input = pontryagin_diff(&input_at(k + j), &ks)?;
    let empty = state.is_empty()? || input.is_empty()?;
    Ok(Tightened { state, input, empty })
}
