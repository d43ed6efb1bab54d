use nalgebra::{DMatrix, DVector};

/// Dense LP `min c·x` subject to `g x <= h` and `e x = f`.
#[derive(Debug, Clone)]
pub struct DenseLp {
    pub c: Vec<f64>,
    pub g: Vec<Vec<f64>>,
    pub h: Vec<f64>,
    pub e: Vec<Vec<f64>>,
    pub f: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub objective: f64,
    pub point: Vec<f64>,
}

fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 && idx[0] == n - k {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Best basic feasible solution found by trying every choice of active
/// inequality rows. The feasible region must be pointed and bounded; `None`
/// means no vertex exists, i.e. the LP is infeasible.
pub fn enumerate_vertices(lp: &DenseLp, tol: f64) -> Option<Vertex> {
    let n = lp.c.len();
    let me = lp.e.len();
    if me > n {
        return None;
    }
    let k = n - me;
    let mut best: Option<Vertex> = None;
    for_each_subset(lp.g.len(), k, |rows| {
        let mut m = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        for (r, (row, val)) in lp.e.iter().zip(&lp.f).enumerate() {
            for j in 0..n {
                m[(r, j)] = row[j];
            }
            rhs[r] = *val;
        }
        for (r, &i) in rows.iter().enumerate() {
            for j in 0..n {
                m[(me + r, j)] = lp.g[i][j];
            }
            rhs[me + r] = lp.h[i];
        }
        let lu = m.lu();
        let Some(x) = lu.solve(&rhs) else { return };
        if !x.iter().all(|v| v.is_finite()) {
            return;
        }
        let scale = 1.0 + x.amax();
        let feasible = lp
            .g
            .iter()
            .zip(&lp.h)
            .all(|(row, b)| dot(row, x.as_slice()) <= b + tol * scale)
            && lp
                .e
                .iter()
                .zip(&lp.f)
                .all(|(row, b)| (dot(row, x.as_slice()) - b).abs() <= tol * scale);
        if !feasible {
            return;
        }
        let objective = dot(&lp.c, x.as_slice());
        if best.as_ref().map_or(true, |b| objective < b.objective) {
            best = Some(Vertex {
                objective,
                point: x.iter().copied().collect(),
            });
        }
    });
    best
}

/// Largest objective of the dual `max -h·y - f·μ` over `y >= 0` at a given
/// multiplier pair, if it is dual feasible within `tol`; used for weak
/// duality checks.
pub fn dual_objective(lp: &DenseLp, y: &[f64], mu: &[f64], tol: f64) -> Option<f64> {
    let n = lp.c.len();
    if y.iter().any(|v| *v < -tol) {
        return None;
    }
    for j in 0..n {
        let r: f64 = lp.c[j]
            + lp.g.iter().zip(y).map(|(row, yi)| row[j] * yi).sum::<f64>()
            + lp.e.iter().zip(mu).map(|(row, m)| row[j] * m).sum::<f64>();
        if r.abs() > tol {
            return None;
        }
    }
    Some(-dot(&lp.h, y) - dot(&lp.f, mu))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_are_complete() {
        let mut count = 0;
        for_each_subset(6, 3, |s| {
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            count += 1;
        });
        assert_eq!(count, 20);
        let mut empty = 0;
        for_each_subset(4, 0, |s| {
            assert!(s.is_empty());
            empty += 1;
        });
        assert_eq!(empty, 1);
    }

    #[test]
    fn unit_square_corner() {
        // min -x - 2y on the unit square.
        let lp = DenseLp {
            c: vec![-1.0, -2.0],
            g: vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            h: vec![1.0, 1.0, 0.0, 0.0],
            e: vec![],
            f: vec![],
        };
        let v = enumerate_vertices(&lp, 1e-9).unwrap();
        assert_eq!(v.point, vec![1.0, 1.0]);
        assert_eq!(v.objective, -3.0);
    }

    #[test]
    fn empty_region() {
        let lp = DenseLp {
            c: vec![1.0],
            g: vec![vec![1.0], vec![-1.0]],
            h: vec![0.0, -1.0],
            e: vec![],
            f: vec![],
        };
        assert!(enumerate_vertices(&lp, 1e-9).is_none());
    }
}
