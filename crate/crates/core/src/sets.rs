//! Boxes, zonotopes and H-polytopes, with the Minkowski sum, linear image and
//! support-function Pontryagin difference used to build tubes and tightened
//! constraint sets.
//!
//! Tubes and terminal sets stay zonotopes throughout, so sums and linear maps
//! are exact. The only approximation is pruning of generators whose infinity
//! norm falls below [`PRUNE_TOL`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpOutcome};
use crate::matrix::{vec_inf_norm, Matrix, Vector};

/// Generators smaller than this (infinity norm) are dropped from sums.
pub const PRUNE_TOL: f64 = 1e-14;

/// Axis-aligned box `lower ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::dim("box bounds", lower.len(), upper.len()));
        }
        if lower.is_empty() {
            return Err(Error::InvalidInput("box must have at least one coordinate".into()));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !l.is_finite() || !u.is_finite() || l > u {
                return Err(Error::InvalidInput(format!("invalid box interval [{l}, {u}]")));
            }
        }
        Ok(BoxSet { lower, upper })
    }

    /// The box `[-half_widths, half_widths]`.
    pub fn symmetric(half_widths: &[f64]) -> Result<Self> {
        BoxSet::new(half_widths.iter().map(|h| -h).collect(), half_widths.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn center(&self) -> Vector {
        Vector::from_iterator(
            self.dim(),
            self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)),
        )
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (u - l))
            .collect()
    }

    /// Indices of coordinates with nonzero width.
    pub fn active_coordinates(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.upper[i] > self.lower[i]).collect()
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
    }

    pub fn is_symmetric(&self) -> bool {
        self.lower.iter().zip(&self.upper).all(|(l, u)| *l == -*u)
    }

    /// Every vertex of the box, varying only the nonzero-width coordinates.
    pub fn vertices(&self) -> Vec<Vector> {
        let active = self.active_coordinates();
        let mut out = Vec::with_capacity(1 << active.len());
        for mask in 0u64..(1u64 << active.len()) {
            let mut v = Vector::from_column_slice(&self.lower);
            for (bit, &i) in active.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    v[i] = self.upper[i];
                }
            }
            out.push(v);
        }
        out
    }

    pub fn to_zonotope(&self) -> Zonotope {
        let half = self.half_widths();
        let n = self.dim();
        let generators = (0..n)
            .filter(|&i| half[i] > 0.0)
            .map(|i| {
                let mut g = Vector::zeros(n);
                g[i] = half[i];
                g
            })
            .collect();
        Zonotope {
            center: self.center(),
            generators,
        }
    }

    pub fn to_hpolytope(&self) -> HPolytope {
        let n = self.dim();
        let mut normals = Vec::with_capacity(2 * n);
        let mut offsets = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut e = Vector::zeros(n);
            e[i] = 1.0;
            normals.push(e.clone());
            offsets.push(self.upper[i]);
            normals.push(-e);
            offsets.push(-self.lower[i]);
        }
        HPolytope { normals, offsets }
    }
}

/// `center + Σ ξ_j generators[j]` with every `|ξ_j| ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Zonotope {
    pub center: Vector,
    pub generators: Vec<Vector>,
}

impl Zonotope {
    pub fn singleton(center: Vector) -> Self {
        Zonotope {
            center,
            generators: Vec::new(),
        }
    }

    pub fn origin(dim: usize) -> Self {
        Zonotope::singleton(Vector::zeros(dim))
    }

    pub fn new(center: Vector, generators: Vec<Vector>) -> Result<Self> {
        for g in &generators {
            if g.len() != center.len() {
                return Err(Error::dim("zonotope generator", center.len(), g.len()));
            }
        }
        Ok(Zonotope { center, generators })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn is_singleton(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn support(&self, direction: &Vector) -> f64 {
        direction.dot(&self.center)
            + self
                .generators
                .iter()
                .map(|g| direction.dot(g).abs())
                .sum::<f64>()
    }

    /// Support of the generator part only, i.e. of the set recentred at 0.
    pub fn support_centered(&self, direction: &Vector) -> f64 {
        self.generators.iter().map(|g| direction.dot(g).abs()).sum()
    }

    /// Per-axis half extent of the set around its center.
    pub fn axis_radii(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.dim()];
        for g in &self.generators {
            for (ri, gi) in r.iter_mut().zip(g.iter()) {
                *ri += gi.abs();
            }
        }
        r
    }

    pub fn scaled(&self, factor: f64) -> Zonotope {
        Zonotope {
            center: &self.center * factor,
            generators: self.generators.iter().map(|g| g * factor).collect(),
        }
    }

    pub fn translated(&self, offset: &Vector) -> Zonotope {
        Zonotope {
            center: &self.center + offset,
            generators: self.generators.clone(),
        }
    }

    /// Generators as the columns of an `n × m` matrix.
    pub fn generator_matrix(&self) -> Matrix {
        let n = self.dim();
        Matrix::from_fn(n, self.generators.len(), |i, j| self.generators[j][i])
    }

    pub fn pruned(mut self) -> Zonotope {
        self.generators.retain(|g| vec_inf_norm(g) >= PRUNE_TOL);
        self
    }

    /// Membership by LP over the generator coordinates, allowing each
    /// `|ξ_j| ≤ 1 + tol`.
    pub fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::dim("zonotope membership point", self.dim(), x.len()));
        }
        let diff = x - &self.center;
        if self.generators.is_empty() {
            return Ok(vec_inf_norm(&diff) <= tol);
        }
        let m = self.generators.len();
        let mut prog = LinearProgram::new(m);
        for j in 0..m {
            prog.set_bounds(j, -1.0 - tol, 1.0 + tol);
        }
        for i in 0..self.dim() {
            let coeffs: Vec<(usize, f64)> = self
                .generators
                .iter()
                .enumerate()
                .filter(|(_, g)| g[i] != 0.0)
                .map(|(j, g)| (j, g[i]))
                .collect();
            if coeffs.is_empty() {
                if diff[i].abs() > tol {
                    return Ok(false);
                }
                continue;
            }
            prog.add_eq(coeffs, diff[i]);
        }
        Ok(matches!(lp::solve(&prog)?, LpOutcome::Optimal(_)))
    }
}

pub fn linear_map_zonotope(m: &Matrix, z: &Zonotope) -> Result<Zonotope> {
    if m.ncols() != z.dim() {
        return Err(Error::dim("linear map of zonotope", m.ncols(), z.dim()));
    }
    Ok(Zonotope {
        center: m * &z.center,
        generators: z.generators.iter().map(|g| m * g).collect(),
    })
}

/// Minkowski sum; generators below [`PRUNE_TOL`] are dropped.
pub fn minkowski_sum(a: &Zonotope, b: &Zonotope) -> Result<Zonotope> {
    if a.dim() != b.dim() {
        return Err(Error::dim("Minkowski sum", a.dim(), b.dim()));
    }
    let generators = a
        .generators
        .iter()
        .chain(&b.generators)
        .filter(|g| vec_inf_norm(g) >= PRUNE_TOL)
        .cloned()
        .collect();
    Ok(Zonotope {
        center: &a.center + &b.center,
        generators,
    })
}

/// Image under the coordinate selection `x ↦ (x[i], x[j])`.
pub fn project_2d(z: &Zonotope, i: usize, j: usize) -> Result<Zonotope> {
    let n = z.dim();
    if i >= n || j >= n {
        return Err(Error::InvalidInput(format!(
            "projection coordinates ({i}, {j}) out of range for dimension {n}"
        )));
    }
    let mut selector = Matrix::zeros(2, n);
    selector[(0, i)] = 1.0;
    selector[(1, j)] = 1.0;
    linear_map_zonotope(&selector, z)
}

pub fn support(z: &Zonotope, direction: &Vector) -> Result<f64> {
    if direction.len() != z.dim() {
        return Err(Error::dim("support direction", z.dim(), direction.len()));
    }
    Ok(z.support(direction))
}

/// `{a·x ≤ b}` row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct HPolytope {
    pub normals: Vec<Vector>,
    pub offsets: Vec<f64>,
}

impl HPolytope {
    pub fn new(normals: Vec<Vector>, offsets: Vec<f64>) -> Result<Self> {
        if normals.is_empty() {
            return Err(Error::InvalidInput("polytope needs at least one row".into()));
        }
        if normals.len() != offsets.len() {
            return Err(Error::dim("polytope offsets", normals.len(), offsets.len()));
        }
        let n = normals[0].len();
        for a in &normals {
            if a.len() != n {
                return Err(Error::dim("polytope normal", n, a.len()));
            }
            if a.iter().all(|v| *v == 0.0) {
                return Err(Error::InvalidInput("polytope normals must be nonzero".into()));
            }
        }
        Ok(HPolytope { normals, offsets })
    }

    pub fn dim(&self) -> usize {
        self.normals[0].len()
    }

    pub fn num_rows(&self) -> usize {
        self.normals.len()
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.normals
            .iter()
            .zip(&self.offsets)
            .all(|(a, b)| a.dot(x) <= b + tol)
    }

    /// Largest row residual `a·x − b` (positive means violated).
    pub fn max_residual(&self, x: &Vector) -> f64 {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(a, b)| a.dot(x) - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Drops exact duplicate rows, keeping the tightest offset.
    pub fn dedup(&self) -> HPolytope {
        let mut normals: Vec<Vector> = Vec::new();
        let mut offsets: Vec<f64> = Vec::new();
        for (a, b) in self.normals.iter().zip(&self.offsets) {
            match normals.iter().position(|x| x == a) {
                Some(i) => offsets[i] = offsets[i].min(*b),
                None => {
                    normals.push(a.clone());
                    offsets.push(*b);
                }
            }
        }
        HPolytope { normals, offsets }
    }

    /// Box description if every row is an axis-aligned half-space.
    pub fn as_axis_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.dim();
        let mut lower = vec![f64::NEG_INFINITY; n];
        let mut upper = vec![f64::INFINITY; n];
        for (a, b) in self.normals.iter().zip(&self.offsets) {
            let nz: Vec<usize> = (0..n).filter(|&i| a[i] != 0.0).collect();
            if nz.len() != 1 {
                return None;
            }
            let i = nz[0];
            if a[i] > 0.0 {
                upper[i] = upper[i].min(b / a[i]);
            } else {
                lower[i] = lower[i].max(b / a[i]);
            }
        }
        Some((lower, upper))
    }

    /// Whether no point satisfies every row. Axis boxes are decided directly,
    /// everything else by one LP feasibility solve.
    pub fn is_empty(&self) -> Result<bool> {
        if let Some((lower, upper)) = self.as_axis_box() {
            return Ok(lower.iter().zip(&upper).any(|(l, u)| l > u));
        }
        let n = self.dim();
        let mut prog = LinearProgram::new(n);
        for (a, b) in self.normals.iter().zip(&self.offsets) {
            prog.add_le_dense(a.as_slice(), *b);
        }
        Ok(matches!(lp::solve(&prog)?, LpOutcome::Infeasible))
    }
}

/// `P ⊖ Z`: same normals, offsets reduced by the support of `Z`.
pub fn pontryagin_diff(p: &HPolytope, z: &Zonotope) -> Result<HPolytope> {
    if p.dim() != z.dim() {
        return Err(Error::dim("Pontryagin difference", p.dim(), z.dim()));
    }
    Ok(HPolytope {
        normals: p.normals.clone(),
        offsets: p
            .normals
            .iter()
            .zip(&p.offsets)
            .map(|(a, b)| b - z.support(a))
            .collect(),
    })
}

pub fn is_empty(p: &HPolytope) -> Result<bool> {
    p.is_empty()
}

/// Counterclockwise vertex cycle of a planar zonotope.
///
/// Generators are flipped into the upper half-plane, parallel ones merged, and
/// sorted by angle; the boundary walk starts at the lowest vertex.
pub fn vertices_2d(z: &Zonotope) -> Result<Vec<Vector>> {
    if z.dim() != 2 {
        return Err(Error::dim("vertices_2d", 2, z.dim()));
    }
    let mut gens: Vec<(f64, Vector)> = Vec::new();
    for g in &z.generators {
        if vec_inf_norm(g) < PRUNE_TOL {
            continue;
        }
        let g = if g[1] < 0.0 || (g[1] == 0.0 && g[0] < 0.0) {
            -g
        } else {
            g.clone()
        };
        let angle = g[1].atan2(g[0]);
        match gens.iter_mut().find(|(a, _)| (a - angle).abs() < 1e-12) {
            Some((_, existing)) => *existing += g,
            None => gens.push((angle, g)),
        }
    }
    gens.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut start = z.center.clone();
    for (_, g) in &gens {
        start -= g;
    }
    let mut out = Vec::with_capacity(2 * gens.len());
    let mut current = start;
    out.push(current.clone());
    for (_, g) in gens.iter() {
        current += g * 2.0;
        out.push(current.clone());
    }
    for (_, g) in gens.iter() {
        current -= g * 2.0;
        out.push(current.clone());
    }
    // The walk returns to the start vertex.
    if !gens.is_empty() {
        out.pop();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{from_rows, vector};
    use approx::assert_relative_eq;

    fn di_w() -> BoxSet {
        BoxSet::symmetric(&[0.1, 0.4]).unwrap()
    }

    fn unit_box(n: usize) -> Zonotope {
        BoxSet::symmetric(&vec![1.0; n]).unwrap().to_zonotope()
    }

    #[test]
    fn identity_and_zero_maps() {
        let z = di_w().to_zonotope();
        assert_eq!(linear_map_zonotope(&Matrix::identity(2, 2), &z).unwrap(), z);
        let zero = linear_map_zonotope(&Matrix::zeros(2, 2), &z).unwrap().pruned();
        assert!(zero.is_singleton());
        assert_eq!(zero.center, Vector::zeros(2));
    }

    #[test]
    fn closed_loop_image_of_w() {
        let ak = from_rows(&[vec![1.0, 1.0], vec![-0.06, 0.5]]).unwrap();
        let img = linear_map_zonotope(&ak, &di_w().to_zonotope()).unwrap();
        assert_relative_eq!(img.generators[0], vector(&[0.1, -0.006]), epsilon = 1e-15);
        assert_relative_eq!(img.generators[1], vector(&[0.4, 0.2]), epsilon = 1e-15);
    }

    #[test]
    fn box_doubling() {
        let s = minkowski_sum(&unit_box(3), &unit_box(3)).unwrap();
        for i in 0..3 {
            let mut d = Vector::zeros(3);
            d[i] = 1.0;
            assert_eq!(s.support(&d), 2.0);
            assert_eq!(s.support(&-d), 2.0);
        }
        assert_eq!(minkowski_sum(&s, &Zonotope::origin(3)).unwrap(), s);
    }

    #[test]
    fn support_examples() {
        let c = vector(&[1.0, -2.0]);
        assert_eq!(Zonotope::singleton(c.clone()).support(&vector(&[3.0, 1.0])), 1.0);
        assert_eq!(unit_box(2).support(&vector(&[1.0, 1.0])), 2.0);
        let s2 = Zonotope::new(
            Vector::zeros(2),
            vec![
                vector(&[0.1, 0.0]),
                vector(&[0.0, 0.4]),
                vector(&[0.1, -0.006]),
                vector(&[0.4, 0.2]),
            ],
        )
        .unwrap();
        assert_relative_eq!(s2.support(&vector(&[1.0, 0.0])), 0.6, epsilon = 1e-15);
    }

    #[test]
    fn box_minus_box() {
        let x = BoxSet::symmetric(&[25.0, 2.0]).unwrap().to_hpolytope();
        let t = pontryagin_diff(&x, &di_w().to_zonotope()).unwrap();
        let (lo, hi) = t.as_axis_box().unwrap();
        assert_relative_eq!(hi[0], 24.9, epsilon = 1e-12);
        assert_relative_eq!(lo[0], -24.9, epsilon = 1e-12);
        assert_relative_eq!(hi[1], 1.6, epsilon = 1e-12);
        assert_relative_eq!(lo[1], -1.6, epsilon = 1e-12);
        assert_eq!(pontryagin_diff(&x, &Zonotope::origin(2)).unwrap(), x);
    }

    #[test]
    fn emptiness() {
        let p = HPolytope::new(vec![vector(&[1.0]), vector(&[-1.0])], vec![1.0, -2.0]).unwrap();
        assert!(p.is_empty().unwrap());
        assert!(!BoxSet::symmetric(&[1.0, 1.0]).unwrap().to_hpolytope().is_empty().unwrap());
        // A non-axis triangle goes through the LP path.
        let tri = HPolytope::new(
            vec![vector(&[1.0, 1.0]), vector(&[-1.0, 0.0]), vector(&[0.0, -1.0])],
            vec![1.0, 0.0, 0.0],
        )
        .unwrap();
        assert!(!tri.is_empty().unwrap());
        let shifted = HPolytope::new(tri.normals.clone(), vec![-0.1, 0.0, 0.0]).unwrap();
        assert!(shifted.is_empty().unwrap());
    }

    #[test]
    fn vertices_of_box_and_point() {
        let v = vertices_2d(&unit_box(2)).unwrap();
        let expected = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
        assert_eq!(v.len(), 4);
        for (p, e) in v.iter().zip(expected) {
            assert_eq!(p.as_slice(), &e);
        }
        let single = vertices_2d(&Zonotope::singleton(vector(&[2.0, 3.0]))).unwrap();
        assert_eq!(single, vec![vector(&[2.0, 3.0])]);
        assert!(vertices_2d(&unit_box(3)).is_err());
    }

    #[test]
    fn membership() {
        let z = Zonotope::new(vector(&[1.0, 0.0]), vec![vector(&[1.0, 1.0]), vector(&[1.0, -1.0])]).unwrap();
        assert!(z.contains(&vector(&[1.0, 0.0]), 1e-9).unwrap());
        assert!(z.contains(&vector(&[3.0, 0.0]), 1e-9).unwrap());
        assert!(!z.contains(&vector(&[3.1, 0.0]), 1e-9).unwrap());
        assert!(!z.contains(&vector(&[1.0, 2.5]), 1e-9).unwrap());
    }

    #[test]
    fn dimension_mismatches() {
        assert!(minkowski_sum(&unit_box(2), &unit_box(3)).is_err());
        assert!(linear_map_zonotope(&Matrix::identity(3, 3), &unit_box(2)).is_err());
        assert!(support(&unit_box(2), &Vector::zeros(3)).is_err());
    }
}
