use proptest::prelude::*;
use vhmpc::matrix::{expm, expm_with_integral, mat_power, Matrix};
use vhmpc::scenario::{hcw_continuous, RendezvousParams};
use vhmpc_validation::hcw;

fn max_abs_diff_6(m: &Matrix, oracle: &hcw::Mat6) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..6 {
        for j in 0..6 {
            worst = worst.max((m[(i, j)] - oracle[i][j]).abs());
        }
    }
    worst
}

#[test]
fn discretized_hcw_matches_closed_form() {
    let (ac, bc) = hcw_continuous();
    let step = RendezvousParams::default().theta_s;
    for t in [step, 0.1, 0.5, 1.0, 2.0, std::f64::consts::PI, 6.0] {
        let (a, b) = expm_with_integral(&ac, &bc, t).unwrap();
        let phi = hcw::transition(t);
        let gamma = hcw::input_response(t);
        let scale = phi.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
        let err = max_abs_diff_6(&a, &phi);
        assert!(err <= 1e-9 * scale, "t = {t}: transition error {err:e}");
        for i in 0..6 {
            for j in 0..3 {
                let e = (b[(i, j)] - gamma[i][j]).abs();
                assert!(e <= 1e-9 * scale, "t = {t}: input response ({i},{j}) error {e:e}");
            }
        }
    }
}

#[test]
fn expm_of_rotation_generator() {
    let t = 1.234;
    let m = Matrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
    let e = expm(&m).unwrap();
    let expected = Matrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
    assert!((e - expected).amax() < 1e-13);
}

fn arb_matrix(n: usize, bound: f64) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-bound..bound, n * n).prop_map(move |v| Matrix::from_row_slice(n, n, &v))
}

proptest! {
    #[test]
    fn matrix_powers_add(m in arb_matrix(4, 0.6), i in 0usize..12, j in 0usize..12) {
        let lhs = mat_power(&m, i + j).unwrap();
        let rhs = mat_power(&m, i).unwrap() * mat_power(&m, j).unwrap();
        let scale = 1.0 + lhs.amax();
        prop_assert!((lhs - rhs).amax() <= 1e-12 * scale);
    }

    #[test]
    fn exponential_is_a_semigroup(m in arb_matrix(4, 1.5), s in 0.0..2.0f64, t in 0.0..2.0f64) {
        let lhs = expm(&(&m * (s + t))).unwrap();
        let rhs = expm(&(&m * s)).unwrap() * expm(&(&m * t)).unwrap();
        let scale = 1.0 + lhs.amax();
        prop_assert!((lhs - rhs).amax() <= 1e-10 * scale);
    }

    #[test]
    fn exponential_of_diagonal(d in prop::collection::vec(-4.0..4.0f64, 5)) {
        let e = expm(&Matrix::from_diagonal(&vhmpc::matrix::Vector::from_vec(d.clone()))).unwrap();
        for (i, v) in d.iter().enumerate() {
            prop_assert!((e[(i, i)] - v.exp()).abs() <= 1e-12 * v.exp().max(1.0));
        }
    }
}
