//! Tour of the product-space primitives: block structures, vectors, inner
//! products, and the norm decomposition over components.

use cfx::space::{BlockStructure, ProductVector};

fn main() -> cfx::Result<()> {
    // R^2 x R^3: two components of dimensions 2 and 3
    let structure = BlockStructure::new(vec![2, 3])?;
    println!(
        "structure: {} blocks, total dimension {}",
        structure.block_count(),
        structure.total_dim()
    );

    let x = ProductVector::new(structure.clone(), vec![vec![3.0, 4.0], vec![1.0, 2.0, 2.0]])?;
    let y = ProductVector::from_flat(&structure, &[1.0, 0.0, 0.0, 1.0, 1.0])?;

    // the inner product sums over components: <x,y> = <x_1,y_1> + <x_2,y_2>
    println!("<x, y> = {}", x.inner(&y)?);

    // ||x||^2 = sum_j ||x_j||^2: here 25 + 9 = 34
    let total = x.norm();
    let per_block: Vec<f64> = (0..2).map(|j| x.component_norm(j).unwrap()).collect();
    println!("||x|| = {total:.6}, component norms = {per_block:?}");
    let reassembled: f64 = per_block.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((total - reassembled).abs() < 1e-12);

    // block-local update: add 0.5 * (1, 1, 1) to component 1 only
    let z = x.axpy_block(1, 0.5, &[1.0, 1.0, 1.0])?;
    println!("after the block update: {:?}", z.blocks());
    assert_eq!(z.block(0)?, x.block(0)?);

    // text round trip used by the CLI for start vectors
    let text = z.to_text();
    print!("serialized form:\n{text}");
    let back = ProductVector::from_text(&text)?;
    assert_eq!(back.flatten(), z.flatten());
    Ok(())
}
