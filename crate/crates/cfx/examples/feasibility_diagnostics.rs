//! Solving a convex feasibility instance with a component-weighted
//! combination of projections, then auditing the trajectory with the Fejer
//! monitor.

use cfx::operators::{RelaxationVector, ValidationMode, WeightMatrix};
use cfx::problems::{CfpInstance, ConvexSet};
use cfx::solvers::{fejer_monitor, picard_with_reference, StopRule};
use cfx::space::ProductVector;

fn main() -> cfx::Result<()> {
    // find a point on the line x + y = 2 inside the centered 2-ball and the
    // unit box; (1, 1) is feasible and serves as the monitor reference
    let instance = CfpInstance {
        dims: vec![1, 1],
        sets: vec![
            ConvexSet::Hyperplane {
                normal: vec![1.0, 1.0],
                offset: 2.0,
            },
            ConvexSet::Ball {
                center: vec![0.0, 0.0],
                radius: 2.0,
            },
            ConvexSet::Box {
                lo: vec![-1.0, -1.0],
                hi: vec![1.0, 1.0],
            },
        ],
        planted: Some(vec![1.0, 1.0]),
    };
    instance.validate()?;
    let structure = instance.structure()?;

    // one projection per set, combined component-wise with uniform weights;
    // lambda = 1.2 relaxes each component within the admissible (0, 2/w_.j)
    let projections = instance.projection_operators()?;
    let m = projections.len();
    let weights = WeightMatrix::new(m, 2, vec![1.0 / m as f64; m * 2])?;
    let lambdas = RelaxationVector::constant(1.2, 2)?;
    let combined = cfx::operators::OperatorSpec::componental_weighted(
        projections,
        weights,
        lambdas,
        ValidationMode::Strict,
    )?;

    let x0 = ProductVector::from_flat(&structure, &[4.0, -3.0])?;
    let reference = instance.planted_vector()?.unwrap();
    let stop = StopRule::new(10_000, 1e-12)?;
    let history = picard_with_reference(&combined, &x0, &stop, &reference)?;
    let solution = history.final_iterate();
    println!(
        "reached {:?} in {} iterations ({:?})",
        solution.flatten(),
        history.steps(),
        history.stop_reason
    );
    for set in &instance.sets {
        println!("  set violation: {:.3e}", set.violation(&solution.flatten()));
    }

    // distances to the feasible reference must never increase; with the
    // relaxation above the decrease is strong with rho = (2 - 1.2)/1.2
    let report = fejer_monitor(&history, &reference, Some((2.0 - 1.2) / 1.2))?;
    println!("monotone toward (1, 1): {:?}", report.monotonicity.verdict);
    if let Some(telescoping) = &report.telescoping {
        println!("telescoping decrease:    {:?}", telescoping.verdict);
    }
    Ok(())
}
