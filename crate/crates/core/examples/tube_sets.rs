//! Disturbance tubes of the double integrator: S(k) for small k, the
//! invariant outer approximation, and the tightened constraints they induce.

use vhmpc::matrix::vector;
use vhmpc::sets::vertices_2d;
use vhmpc::{make_double_integrator, Controller, Mode};

fn main() -> vhmpc::Result<()> {
    let scenario = make_double_integrator();
    let mut controller = Controller::new(&scenario, Mode::Atcs)?;
    let sinf = controller.tubes().sinf().clone();
    println!(
        "S(inf): {} generators, order {}, inflation {:.3e}, half-widths {:?}",
        sinf.set.num_generators(),
        sinf.order,
        sinf.inflation,
        sinf.set.axis_radii()
    );
    for k in [1, 2, 3, 10] {
        let tube = controller.tubes().tube_at(k).clone();
        let vertices = vertices_2d(&tube)?;
        println!(
            "S({k}): {} vertices, support along position {:.4}, along velocity {:.4}",
            vertices.len(),
            tube.support(&vector(&[1.0, 0.0])),
            tube.support(&vector(&[0.0, 1.0]))
        );
    }
    let x = scenario.state_set(0);
    let (lo, hi) = x.as_axis_box().expect("box constraints");
    let radii = sinf.set.axis_radii();
    println!("state box {lo:?}..{hi:?}");
    println!(
        "tightened by S(inf): position {:.4}, velocity {:.4}",
        hi[0] - radii[0],
        hi[1] - radii[1]
    );
    println!("lambda-bar {:.4}", controller.lambda_bar().value);
    Ok(())
}
