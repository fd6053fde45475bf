//! A componental contraction drives one coordinate of a fixed-point
//! iteration even while the full map diverges: error bounds for the good
//! component, divergence detection for the run as a whole.

use cfx::operators::OperatorSpec;
use cfx::solvers::{contraction_bounds, picard, rate_check, StopRule};
use cfx::space::{BlockStructure, ProductVector};
use cfx::Error;

fn main() -> cfx::Result<()> {
    let structure = BlockStructure::new(vec![1, 1])?;
    // (x1, x2) -> (x1/2 + 3, 8 x2): a 1/2-contraction in component 0,
    // an 8-fold expansion in component 1
    let op = OperatorSpec::ContractionExample;

    // started at (0, 0) the bad component stays put and the iteration
    // converges to the fixed point (6, 0)
    let x0 = ProductVector::zeros(&structure);
    let stop = StopRule::new(60, 1e-14)?;
    let history = picard(&op, &x0, &stop)?;
    println!(
        "converged to {:?} after {} steps ({:?})",
        history.final_iterate().flatten(),
        history.steps(),
        history.stop_reason
    );

    // Banach-style bounds for the contracting component, alpha = 1/2:
    // a priori  alpha^k/(1-alpha) ||x^0_0 - x^1_0||
    // a posteriori alpha/(1-alpha) ||x^{k-1}_0 - x^k_0||
    let bounds = contraction_bounds(&history, 0, 0.5)?;
    println!("  k   error            a priori         a posteriori");
    for k in [1usize, 2, 5, 10, 20] {
        let err = (history.iterates[k].block(0)?[0] - 6.0).abs();
        println!(
            "  {k:<3} {err:<16.3e} {:<16.3e} {:<16.3e}",
            bounds.a_priori[k - 1],
            bounds.a_posteriori[k - 1]
        );
    }
    let rate = rate_check(&history, 0, 0.5, &[6.0])?;
    println!("per-step rate ||x^k_0 - 6|| <= 0.5 ||x^(k-1)_0 - 6||: {:?}", rate.verdict);

    // any other start point excites the expanding component; the driver
    // reports divergence and keeps the history up to the last finite iterate
    let x0 = ProductVector::from_flat(&structure, &[0.0, 1.0])?;
    let stop = StopRule::new(100_000, 1e-14)?;
    match picard(&op, &x0, &stop) {
        Err(Error::Diverged { iterations, history }) => {
            println!(
                "from (0, 1): diverged after {iterations} steps; last finite iterate {:?}",
                history.final_iterate().flatten()
            );
        }
        other => panic!("expected divergence, got {other:?}"),
    }
    Ok(())
}
