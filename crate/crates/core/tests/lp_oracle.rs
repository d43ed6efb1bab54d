use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vhmpc::lp::{solve, LinearProgram, LpError, LpOutcome};
use vhmpc_validation::lp::{dual_objective, enumerate_vertices, DenseLp};

const REL_TOL: f64 = 1e-7;

struct Instance {
    lp: LinearProgram,
    dense: DenseLp,
}

/// Random bounded LP: every variable is boxed, either through its bounds or
/// through explicit rows, plus general rows and optional equalities.
fn random_instance(rng: &mut ChaCha8Rng, n: usize, rows: usize, equalities: usize) -> Instance {
    let mut lp = LinearProgram::new(n);
    let mut dense = DenseLp {
        c: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        g: Vec::new(),
        h: Vec::new(),
        e: Vec::new(),
        f: Vec::new(),
    };
    lp.objective = dense.c.clone();
    for j in 0..n {
        let lo = rng.gen_range(-3.0..0.0);
        let hi = rng.gen_range(0.5..3.0);
        let mut unit = vec![0.0; n];
        unit[j] = 1.0;
        if rng.gen_bool(0.5) {
            lp.set_bounds(j, lo, hi);
        } else {
            lp.add_le(vec![(j, 1.0)], hi);
            lp.add_ge(vec![(j, 1.0)], lo);
        }
        dense.g.push(unit.clone());
        dense.h.push(hi);
        dense.g.push(unit.iter().map(|v| -v).collect());
        dense.h.push(-lo);
    }
    let infeasible_shift = rng.gen_bool(0.2);
    for _ in 0..rows {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rhs = if infeasible_shift {
            rng.gen_range(-2.0..0.5)
        } else {
            rng.gen_range(0.1..2.0)
        };
        lp.add_le_dense(&row, rhs);
        dense.g.push(row);
        dense.h.push(rhs);
    }
    for _ in 0..equalities {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rhs = rng.gen_range(-0.3..0.3);
        lp.add_eq_dense(&row, rhs);
        dense.e.push(row);
        dense.f.push(rhs);
    }
    if rng.gen_bool(0.1) {
        // Duplicate a row to force degenerate vertices.
        let i = rng.gen_range(0..dense.g.len());
        let (row, rhs) = (dense.g[i].clone(), dense.h[i]);
        lp.add_le_dense(&row, rhs);
        dense.g.push(row);
        dense.h.push(rhs);
    }
    Instance { lp, dense }
}

#[test]
fn simplex_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let (mut optimal, mut infeasible) = (0, 0);
    for case in 0..200 {
        let equalities = case % 3 / 2;
        let inst = random_instance(&mut rng, 6, 6, equalities);
        let oracle = enumerate_vertices(&inst.dense, 1e-9);
        let outcome = solve(&inst.lp).unwrap();
        match (oracle, outcome) {
            (Some(v), LpOutcome::Optimal(sol)) => {
                optimal += 1;
                let err = (sol.objective_value - v.objective).abs();
                assert!(
                    err <= REL_TOL * v.objective.abs().max(1.0),
                    "case {case}: simplex {} vs enumeration {}",
                    sol.objective_value,
                    v.objective
                );
                assert!(inst.lp.max_violation(&sol.point) <= 1e-7, "case {case}: infeasible point");
                let at = inst.lp.objective_at(&sol.point);
                assert!((at - sol.objective_value).abs() <= 1e-9 * at.abs().max(1.0));
            }
            (None, LpOutcome::Infeasible) => infeasible += 1,
            (o, s) => panic!("case {case}: enumeration {o:?} vs simplex {:?}", s.status()),
        }
    }
    assert!(optimal >= 100, "only {optimal} feasible instances");
    assert!(infeasible >= 5, "only {infeasible} infeasible instances");
}

#[test]
fn optimum_respects_weak_duality() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for case in 0..100 {
        let mut inst = random_instance(&mut rng, 5, 5, case % 2);
        // Objective built from a known dual-feasible multiplier.
        let y: Vec<f64> = inst
            .dense
            .g
            .iter()
            .map(|_| if rng.gen_bool(0.4) { rng.gen_range(0.0..1.0) } else { 0.0 })
            .collect();
        let mu: Vec<f64> = inst.dense.e.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = inst.dense.c.len();
        let c: Vec<f64> = (0..n)
            .map(|j| {
                -inst.dense.g.iter().zip(&y).map(|(r, yi)| r[j] * yi).sum::<f64>()
                    - inst.dense.e.iter().zip(&mu).map(|(r, m)| r[j] * m).sum::<f64>()
            })
            .collect();
        inst.dense.c = c.clone();
        inst.lp.objective = c;
        let dual = dual_objective(&inst.dense, &y, &mu, 1e-12).expect("constructed dual is feasible");
        if let LpOutcome::Optimal(sol) = solve(&inst.lp).unwrap() {
            assert!(
                dual <= sol.objective_value + 1e-9 * sol.objective_value.abs().max(1.0),
                "case {case}: dual {dual} above primal {}",
                sol.objective_value
            );
        }
    }
}

#[test]
fn repeated_solves_are_bit_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    for _ in 0..30 {
        let inst = random_instance(&mut rng, 8, 12, 1);
        let a = solve(&inst.lp).unwrap();
        let b = solve(&inst.lp.clone()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn infeasible_corpus() {
    // x >= 1 and x <= 0.
    let mut a = LinearProgram::new(1);
    a.add_ge(vec![(0, 1.0)], 1.0);
    a.add_le(vec![(0, 1.0)], 0.0);
    // Contradictory equalities.
    let mut b = LinearProgram::new(2);
    b.add_eq(vec![(0, 1.0), (1, 1.0)], 1.0);
    b.add_eq(vec![(0, 2.0), (1, 2.0)], 3.0);
    // Box too small for a sum row.
    let mut c = LinearProgram::new(3);
    for j in 0..3 {
        c.set_bounds(j, -1.0, 1.0);
    }
    c.add_ge(vec![(0, 1.0), (1, 1.0), (2, 1.0)], 3.5);
    // Equality outside the bounds.
    let mut e = LinearProgram::new(2);
    e.set_bounds(0, 0.0, 1.0);
    e.set_bounds(1, 0.0, 1.0);
    e.add_eq(vec![(0, 1.0), (1, -1.0)], 1.5);
    for (name, lp) in [("a", a), ("b", b), ("c", c), ("e", e)] {
        assert!(matches!(solve(&lp), Ok(LpOutcome::Infeasible)), "{name}");
    }
}

#[test]
fn inverted_bounds_are_malformed() {
    let mut lp = LinearProgram::new(2);
    lp.set_bounds(1, 2.0, 1.0);
    assert!(matches!(solve(&lp), Err(LpError::Malformed(_))));
}

#[test]
fn unbounded_corpus() {
    let mut a = LinearProgram::new(2);
    a.objective = vec![-1.0, 0.0];
    a.set_bounds(0, 0.0, f64::INFINITY);
    a.add_le(vec![(1, 1.0)], 1.0);
    assert!(matches!(solve(&a).unwrap(), LpOutcome::Unbounded));

    let mut b = LinearProgram::new(2);
    b.objective = vec![1.0, 1.0];
    b.add_le(vec![(0, 1.0), (1, -1.0)], 0.0);
    b.add_le(vec![(0, -1.0), (1, 1.0)], 0.0);
    assert!(matches!(solve(&b).unwrap(), LpOutcome::Unbounded));
}
