//! Planar convex hulls by the monotone chain.

pub type Point = [f64; 2];

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counterclockwise hull without collinear points, starting from the
/// lexicographically smallest point.
pub fn convex_hull(points: &[Point], tol: f64) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol);
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= tol {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= tol {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Every signed sum of the generators, hulled.
pub fn zonotope_vertices(center: Point, generators: &[Point], tol: f64) -> Vec<Point> {
    assert!(generators.len() < 20, "brute force limited to small generator counts");
    let m = generators.len();
    let mut points = Vec::with_capacity(1 << m);
    for mask in 0u32..(1u32 << m) {
        let mut p = center;
        for (i, g) in generators.iter().enumerate() {
            let s = if mask & (1 << i) != 0 { 1.0 } else { -1.0 };
            p[0] += s * g[0];
            p[1] += s * g[1];
        }
        points.push(p);
    }
    convex_hull(&points, tol)
}

/// Closed-polygon membership with a boundary tolerance; `polygon` must be
/// convex and counterclockwise.
pub fn convex_polygon_contains(polygon: &[Point], p: Point, tol: f64) -> bool {
    match polygon.len() {
        0 => false,
        1 => (polygon[0][0] - p[0]).abs() <= tol && (polygon[0][1] - p[1]).abs() <= tol,
        n => (0..n).all(|i| {
            let (a, b) = (polygon[i], polygon[(i + 1) % n]);
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            cross(a, b, p) >= -tol * len.max(1.0)
        }),
    }
}

pub fn polygon_area(polygon: &[Point]) -> f64 {
    let n = polygon.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (polygon[i], polygon[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum();
    0.5 * twice
}
