//! Closed-form relative motion about a circular orbit with unit mean motion.
//! State order: radial, along-track, normal positions, then velocities.

pub type Mat6 = [[f64; 6]; 6];
pub type Mat63 = [[f64; 3]; 6];

/// State transition matrix over normalized time `t`.
pub fn transition(t: f64) -> Mat6 {
    let (s, c) = t.sin_cos();
    [
        [4.0 - 3.0 * c, 0.0, 0.0, s, 2.0 * (1.0 - c), 0.0],
        [6.0 * (s - t), 1.0, 0.0, -2.0 * (1.0 - c), 4.0 * s - 3.0 * t, 0.0],
        [0.0, 0.0, c, 0.0, 0.0, s],
        [3.0 * s, 0.0, 0.0, c, 2.0 * s, 0.0],
        [6.0 * (c - 1.0), 0.0, 0.0, -2.0 * s, 4.0 * c - 3.0, 0.0],
        [0.0, 0.0, -s, 0.0, 0.0, c],
    ]
}

/// Response to a constant unit acceleration held over `[0, t]`.
pub fn input_response(t: f64) -> Mat63 {
    let (s, c) = t.sin_cos();
    [
        [1.0 - c, 2.0 * (t - s), 0.0],
        [-2.0 * (t - s), 4.0 * (1.0 - c) - 1.5 * t * t, 0.0],
        [0.0, 0.0, 1.0 - c],
        [s, 2.0 * (1.0 - c), 0.0],
        [-2.0 * (1.0 - c), 4.0 * s - 3.0 * t, 0.0],
        [0.0, 0.0, s],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_at_zero() {
        let p = transition(0.0);
        for (i, row) in p.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, if i == j { 1.0 } else { 0.0 });
            }
        }
        assert!(input_response(0.0).iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn composes_over_time() {
        let (a, b) = (transition(0.3), transition(0.45));
        let ab = transition(0.75);
        for i in 0..6 {
            for j in 0..6 {
                let v: f64 = (0..6).map(|k| a[i][k] * b[k][j]).sum();
                assert!((v - ab[i][j]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn derivative_of_input_response_is_velocity_columns() {
        // d/dt Γ(t) = Φ(t) B with B selecting the velocity rows.
        let t = 0.7;
        let h = 1e-6;
        let (up, down) = (input_response(t + h), input_response(t - h));
        let phi = transition(t);
        for i in 0..6 {
            for j in 0..3 {
                let d = (up[i][j] - down[i][j]) / (2.0 * h);
                assert!((d - phi[i][3 + j]).abs() < 1e-8, "({i},{j})");
            }
        }
    }
}
