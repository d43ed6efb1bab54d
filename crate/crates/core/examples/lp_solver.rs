//! The bundled simplex solver on a small production-planning LP.

use vhmpc::lp::{solve, LinearProgram, LpOutcome};

fn main() -> vhmpc::Result<()> {
    // maximize 3a + 5b  s.t.  a <= 4, 2b <= 12, 3a + 2b <= 18, a, b >= 0
    let mut lp = LinearProgram::new(2);
    lp.objective = vec![-3.0, -5.0];
    lp.set_bounds(0, 0.0, f64::INFINITY);
    lp.set_bounds(1, 0.0, f64::INFINITY);
    lp.add_le(vec![(0, 1.0)], 4.0);
    lp.add_le(vec![(1, 2.0)], 12.0);
    lp.add_le(vec![(0, 3.0), (1, 2.0)], 18.0);
    match solve(&lp)? {
        LpOutcome::Optimal(sol) => {
            println!("optimum {:.6} at {:?}", -sol.objective_value, sol.point);
            println!("max constraint violation {:.2e}", lp.max_violation(&sol.point));
        }
        other => println!("status {:?}", other.status()),
    }

    // Same rows with a contradictory demand.
    lp.add_ge(vec![(0, 1.0), (1, 1.0)], 20.0);
    println!("with a + b >= 20: {:?}", solve(&lp)?.status());
    Ok(())
}
