//! Building operators from atoms and combinators, validating them against a
//! block structure, and round-tripping the JSON form the CLI consumes.

use cfx::operators::{OperatorSpec, RelaxationVector, ValidationMode, WeightMatrix};
use cfx::space::{BlockStructure, ProductVector};

fn main() -> cfx::Result<()> {
    let structure = BlockStructure::new(vec![1, 1])?;

    // atoms: projections onto the line x + y = 2 and onto the unit ball
    let plane = OperatorSpec::hyperplane(vec![1.0, 1.0], 2.0)?;
    let ball = OperatorSpec::ball(vec![0.0, 0.0], 1.0)?;

    let x = ProductVector::from_flat(&structure, &[3.0, -1.0])?;
    println!("P_plane(3, -1)  = {:?}", plane.apply(&x)?.flatten());
    println!("P_ball(3, -1)   = {:?}", ball.apply(&x)?.flatten());

    // relaxation: Id + lambda (T - Id); lambda = 2 is the reflection
    let reflection = plane.clone().relaxed(2.0)?;
    println!("reflection      = {:?}", reflection.apply(&x)?.flatten());

    // component-wise relaxation applies a separate lambda per block
    let cw = plane
        .clone()
        .cw_relaxed(RelaxationVector::new(vec![0.5, 1.5])?);
    println!("cw-relaxed      = {:?}", cw.apply(&x)?.flatten());

    // convex combination with simplex weights
    let mix = OperatorSpec::convex_combination(vec![plane.clone(), ball.clone()], vec![0.25, 0.75])?;
    println!("0.25 P + 0.75 B = {:?}", mix.apply(&x)?.flatten());

    // component-weighted combination: per-component weights over the atoms,
    // column sums of 1 are required in strict mode
    let weights = WeightMatrix::new(2, 2, vec![0.5, 1.0, 0.5, 0.0])?;
    let lambdas = RelaxationVector::constant(1.0, 2)?;
    let cwc = OperatorSpec::componental_weighted(
        vec![plane.clone(), ball],
        weights,
        lambdas,
        ValidationMode::Strict,
    )?;
    cwc.validate(&structure, ValidationMode::Strict)?;
    println!("cw-combination  = {:?}", cwc.apply(&x)?.flatten());

    // every operator serializes to the JSON the CLI reads from disk
    let json = serde_json::to_string_pretty(&cwc)?;
    println!("--- JSON ---\n{json}");
    let back: OperatorSpec = serde_json::from_str(&json)?;
    assert_eq!(back, cwc);
    Ok(())
}
