//! The operator algebra: atomic operators (projections and two small
//! reference operators on `R x R`) plus combinators for relaxation,
//! component-wise relaxation, convex and component-weighted combination,
//! block-diagonal assembly and per-component selection.
//!
//! An [`OperatorSpec`] is an immutable description tree; [`OperatorSpec::apply`]
//! evaluates it on a [`ProductVector`]. Serialization to JSON uses a `kind`
//! tag per node, which is also the format the `cfx` binary consumes.

use serde::{Deserialize, Serialize};

use crate::space::{dot, norm2, BlockStructure, ProductVector};
use crate::{Error, Result};

/// Whether combinator parameters are held to the open intervals of the
/// convergence theorems (`Strict`) or merely to nonnegativity (`Permissive`),
/// which admits e.g. reflections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValidationMode {
    #[default]
    Strict,
    Permissive,
}

/// Per-component relaxation parameters `(lambda_1, ..., lambda_n)`, all >= 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RelaxationVector(Vec<f64>);

impl RelaxationVector {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::Parameter("relaxation vector must be nonempty".into()));
        }
        if lambdas.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
            return Err(Error::Parameter("relaxation parameters must be finite and >= 0".into()));
        }
        Ok(Self(lambdas))
    }

    pub fn constant(lambda: f64, n: usize) -> Result<Self> {
        Self::new(vec![lambda; n])
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for RelaxationVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RelaxationVector> for Vec<f64> {
    fn from(v: RelaxationVector) -> Self {
        v.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WeightMatrixRaw {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

/// Nonnegative weights `w_ij` (one row per operator, one column per
/// component) with positive column sums `w_.j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightMatrixRaw", into = "WeightMatrixRaw")]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>, // row-major
    normalized: bool,
}

impl WeightMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Weight("weight matrix must be at least 1x1".into()));
        }
        if entries.len() != rows * cols {
            return Err(Error::Weight(format!(
                "expected {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if entries.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::Weight("weights must be finite and >= 0".into()));
        }
        let mut m = Self {
            rows,
            cols,
            entries,
            normalized: false,
        };
        let sums = m.column_sums();
        if let Some(j) = sums.iter().position(|&s| s <= 0.0) {
            return Err(Error::Weight(format!("column {j} has sum 0")));
        }
        m.normalized = sums.iter().all(|&s| (s - 1.0).abs() <= 1e-12);
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    /// `w_.j = sum_i w_ij`.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (j, s) in sums.iter_mut().enumerate() {
                *s += self.get(i, j);
            }
        }
        sums
    }

    /// True when every column sums to 1 (within 1e-12), the normalization
    /// required by the simultaneous convergence theorem.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }
}

impl TryFrom<WeightMatrixRaw> for WeightMatrix {
    type Error = Error;
    fn try_from(raw: WeightMatrixRaw) -> Result<Self> {
        Self::new(raw.rows, raw.cols, raw.entries)
    }
}

impl From<WeightMatrix> for WeightMatrixRaw {
    fn from(m: WeightMatrix) -> Self {
        WeightMatrixRaw {
            rows: m.rows,
            cols: m.cols,
            entries: m.entries,
        }
    }
}

/// Composable operator description: atoms at the leaves, combinators inside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorSpec {
    Identity,
    /// Orthogonal projection onto `{x | <a,x> = b}` in the flattened space.
    HyperplaneProjection { normal: Vec<f64>, offset: f64 },
    /// Orthogonal projection onto `{x | <a,x> <= b}`.
    HalfspaceProjection { normal: Vec<f64>, offset: f64 },
    /// Orthogonal projection onto the closed ball around `center`.
    BallProjection { center: Vec<f64>, radius: f64 },
    /// Orthogonal projection onto the box `[lo, hi]`, coordinate-wise.
    BoxProjection { lo: Vec<f64>, hi: Vec<f64> },
    /// `x -> M x + c` on the flattened space; `matrix` is row-major square.
    AffineMap { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    /// Exchanges blocks `first` and `second` (equal dimensions required).
    Swap { first: usize, second: usize },
    /// `(x_1, x_2) -> (x_1/2 + 3, 8 x_2)` on `R x R`: a 1/2-contraction in
    /// component 0 that is globally divergent.
    ContractionExample,
    /// `(x_1, x_2) -> (x_2/2, x_1/2)` on `R x R`: a global 1/2-contraction
    /// that is not a componental contraction.
    ScaledSwapExample,
    /// `Id + lambda (T - Id)`.
    Relax { lambda: f64, child: Box<OperatorSpec> },
    /// Component-wise relaxation with one `lambda_j` per block.
    CwRelax {
        lambdas: RelaxationVector,
        child: Box<OperatorSpec>,
    },
    /// `x -> sum_i w_i T_i(x)` with simplex weights.
    ConvexCombination {
        weights: Vec<f64>,
        children: Vec<OperatorSpec>,
    },
    /// `(T x)_j = x_j + lambda_j sum_i w_ij ((T_i x)_j - x_j)`.
    ComponentalWeighted {
        weights: WeightMatrix,
        relaxations: RelaxationVector,
        children: Vec<OperatorSpec>,
    },
    /// `U(x) = (U^1(x_1), ..., U^n(x_n))`; child `j` acts on block `j` alone.
    BlockDiagonal { blocks: Vec<OperatorSpec> },
    /// `(S x)_j = (S_{assignment[j]}(x))_j`: each component is read off a
    /// selected full-space operator.
    BlockSelect {
        assignment: Vec<usize>,
        children: Vec<OperatorSpec>,
    },
}

/// Orthogonal projection of `z` onto the hyperplane `{x | <a,x> = b}`:
/// `z + ((b - <a,z>)/||a||^2) a`.
pub fn project_hyperplane(a: &[f64], b: f64, z: &[f64]) -> Result<Vec<f64>> {
    if norm2(a) == 0.0 {
        return Err(Error::DegenerateConstraint("hyperplane normal is zero".into()));
    }
    if a.len() != z.len() {
        return Err(Error::ShapeMismatch(format!(
            "normal has length {}, point has length {}",
            a.len(),
            z.len()
        )));
    }
    let scale = (b - dot(a, z)) / dot(a, a);
    Ok(z.iter().zip(a).map(|(zi, ai)| zi + scale * ai).collect())
}

/// Projection onto the half-space `{x | <a,x> <= b}`.
pub fn project_halfspace(a: &[f64], b: f64, z: &[f64]) -> Result<Vec<f64>> {
    if norm2(a) == 0.0 {
        return Err(Error::DegenerateConstraint("half-space normal is zero".into()));
    }
    if dot(a, z) <= b {
        Ok(z.to_vec())
    } else {
        project_hyperplane(a, b, z)
    }
}

/// Projection onto the closed ball `{x | ||x - c|| <= r}`.
pub fn project_ball(center: &[f64], radius: f64, z: &[f64]) -> Result<Vec<f64>> {
    if radius <= 0.0 {
        return Err(Error::Parameter("ball radius must be positive".into()));
    }
    let diff: Vec<f64> = z.iter().zip(center).map(|(zi, ci)| zi - ci).collect();
    let d = norm2(&diff);
    if d <= radius {
        Ok(z.to_vec())
    } else {
        let scale = radius / d;
        Ok(center
            .iter()
            .zip(&diff)
            .map(|(ci, di)| ci + scale * di)
            .collect())
    }
}

/// Coordinate-wise projection onto `[lo, hi]`.
pub fn project_box(lo: &[f64], hi: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return Err(Error::Parameter("box has lo > hi in some coordinate".into()));
    }
    Ok(z.iter()
        .zip(lo.iter().zip(hi))
        .map(|(zi, (l, h))| zi.max(*l).min(*h))
        .collect())
}

impl OperatorSpec {
    pub fn hyperplane(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if norm2(&normal) == 0.0 {
            return Err(Error::DegenerateConstraint("hyperplane normal is zero".into()));
        }
        Ok(Self::HyperplaneProjection { normal, offset })
    }

    pub fn halfspace(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if norm2(&normal) == 0.0 {
            return Err(Error::DegenerateConstraint("half-space normal is zero".into()));
        }
        Ok(Self::HalfspaceProjection { normal, offset })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::Parameter("ball radius must be positive".into()));
        }
        Ok(Self::BallProjection { center, radius })
    }

    pub fn relaxed(self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Parameter(format!("relaxation lambda {lambda} must be >= 0")));
        }
        Ok(Self::Relax {
            lambda,
            child: Box::new(self),
        })
    }

    pub fn cw_relaxed(self, lambdas: RelaxationVector) -> Self {
        Self::CwRelax {
            lambdas,
            child: Box::new(self),
        }
    }

    pub fn convex_combination(children: Vec<OperatorSpec>, weights: Vec<f64>) -> Result<Self> {
        if children.is_empty() || children.len() != weights.len() {
            return Err(Error::Parameter(format!(
                "need matching nonempty children/weights, got {}/{}",
                children.len(),
                weights.len()
            )));
        }
        check_simplex(&weights)?;
        Ok(Self::ConvexCombination { weights, children })
    }

    pub fn componental_weighted(
        children: Vec<OperatorSpec>,
        weights: WeightMatrix,
        relaxations: RelaxationVector,
        mode: ValidationMode,
    ) -> Result<Self> {
        if children.is_empty() || children.len() != weights.rows() {
            return Err(Error::Parameter(format!(
                "weight matrix has {} rows but there are {} children",
                weights.rows(),
                children.len()
            )));
        }
        if relaxations.len() != weights.cols() {
            return Err(Error::Parameter(format!(
                "weight matrix has {} columns but there are {} relaxations",
                weights.cols(),
                relaxations.len()
            )));
        }
        if mode == ValidationMode::Strict {
            let sums = weights.column_sums();
            for (j, (&l, &s)) in relaxations.lambdas().iter().zip(&sums).enumerate() {
                if l <= 0.0 || l > 2.0 / s {
                    return Err(Error::Parameter(format!(
                        "lambda_{j} = {l} outside (0, 2/w_.{j}] = (0, {}]",
                        2.0 / s
                    )));
                }
            }
        }
        Ok(Self::ComponentalWeighted {
            weights,
            relaxations,
            children,
        })
    }

    pub fn block_diagonal(blocks: Vec<OperatorSpec>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Parameter("block-diagonal needs at least one block".into()));
        }
        Ok(Self::BlockDiagonal { blocks })
    }

    pub fn block_select(children: Vec<OperatorSpec>, assignment: Vec<usize>) -> Result<Self> {
        if children.is_empty() || assignment.is_empty() {
            return Err(Error::Parameter("block-select needs children and an assignment".into()));
        }
        if let Some(&bad) = assignment.iter().find(|&&i| i >= children.len()) {
            return Err(Error::Parameter(format!(
                "assignment references child {bad} but there are only {}",
                children.len()
            )));
        }
        Ok(Self::BlockSelect { assignment, children })
    }

    /// Checks that the tree is well-formed over `structure`.
    pub fn validate(&self, structure: &BlockStructure, mode: ValidationMode) -> Result<()> {
        let total = structure.total_dim();
        match self {
            Self::Identity => Ok(()),
            Self::HyperplaneProjection { normal, .. } | Self::HalfspaceProjection { normal, .. } => {
                if norm2(normal) == 0.0 {
                    return Err(Error::DegenerateConstraint("projection normal is zero".into()));
                }
                expect_len("normal", normal.len(), total)
            }
            Self::BallProjection { center, radius } => {
                if *radius <= 0.0 {
                    return Err(Error::Parameter("ball radius must be positive".into()));
                }
                expect_len("center", center.len(), total)
            }
            Self::BoxProjection { lo, hi } => {
                expect_len("lo", lo.len(), total)?;
                expect_len("hi", hi.len(), total)?;
                if lo.iter().zip(hi).any(|(l, h)| l > h) {
                    return Err(Error::Parameter("box has lo > hi in some coordinate".into()));
                }
                Ok(())
            }
            Self::AffineMap { matrix, offset } => {
                expect_len("offset", offset.len(), total)?;
                expect_len("matrix rows", matrix.len(), total)?;
                for row in matrix {
                    expect_len("matrix row", row.len(), total)?;
                }
                Ok(())
            }
            Self::Swap { first, second } => {
                let a = structure.dim(*first)?;
                let b = structure.dim(*second)?;
                if a != b {
                    return Err(Error::ShapeMismatch(format!(
                        "cannot swap blocks of dimensions {a} and {b}"
                    )));
                }
                Ok(())
            }
            Self::ContractionExample | Self::ScaledSwapExample => {
                if structure.dims() != [1, 1] {
                    return Err(Error::ShapeMismatch(
                        "reference example operators live on R x R (dims [1, 1])".into(),
                    ));
                }
                Ok(())
            }
            Self::Relax { lambda, child } => {
                if !(*lambda >= 0.0) || !lambda.is_finite() {
                    return Err(Error::Parameter(format!("relaxation lambda {lambda} must be >= 0")));
                }
                child.validate(structure, mode)
            }
            Self::CwRelax { lambdas, child } => {
                expect_len("lambdas", lambdas.len(), structure.block_count())?;
                child.validate(structure, mode)
            }
            Self::ConvexCombination { weights, children } => {
                expect_len("weights", weights.len(), children.len())?;
                check_simplex(weights)?;
                for c in children {
                    c.validate(structure, mode)?;
                }
                Ok(())
            }
            Self::ComponentalWeighted {
                weights,
                relaxations,
                children,
            } => {
                expect_len("weight rows", weights.rows(), children.len())?;
                expect_len("weight columns", weights.cols(), structure.block_count())?;
                expect_len("relaxations", relaxations.len(), structure.block_count())?;
                if mode == ValidationMode::Strict {
                    let sums = weights.column_sums();
                    for (j, (&l, &s)) in relaxations.lambdas().iter().zip(&sums).enumerate() {
                        if l <= 0.0 || l > 2.0 / s {
                            return Err(Error::Parameter(format!(
                                "lambda_{j} = {l} outside (0, 2/w_.{j}] = (0, {}]",
                                2.0 / s
                            )));
                        }
                    }
                }
                for c in children {
                    c.validate(structure, mode)?;
                }
                Ok(())
            }
            Self::BlockDiagonal { blocks } => {
                expect_len("diagonal blocks", blocks.len(), structure.block_count())?;
                for (j, b) in blocks.iter().enumerate() {
                    let sub = BlockStructure::new(vec![structure.dims()[j]])?;
                    b.validate(&sub, mode)?;
                }
                Ok(())
            }
            Self::BlockSelect { assignment, children } => {
                expect_len("assignment", assignment.len(), structure.block_count())?;
                if let Some(&bad) = assignment.iter().find(|&&i| i >= children.len()) {
                    return Err(Error::Parameter(format!(
                        "assignment references child {bad} but there are only {}",
                        children.len()
                    )));
                }
                for c in children {
                    c.validate(structure, mode)?;
                }
                Ok(())
            }
        }
    }

    /// Evaluates `T(x)`. Deterministic: identical inputs give bit-identical
    /// output.
    pub fn apply(&self, x: &ProductVector) -> Result<ProductVector> {
        let structure = x.structure();
        match self {
            Self::Identity => Ok(x.clone()),
            Self::HyperplaneProjection { normal, offset } => {
                let image = project_hyperplane(normal, *offset, &x.flatten())?;
                ProductVector::from_flat(structure, &image)
            }
            Self::HalfspaceProjection { normal, offset } => {
                let image = project_halfspace(normal, *offset, &x.flatten())?;
                ProductVector::from_flat(structure, &image)
            }
            Self::BallProjection { center, radius } => {
                let flat = x.flatten();
                expect_len("center", center.len(), flat.len())?;
                let image = project_ball(center, *radius, &flat)?;
                ProductVector::from_flat(structure, &image)
            }
            Self::BoxProjection { lo, hi } => {
                let flat = x.flatten();
                expect_len("lo", lo.len(), flat.len())?;
                expect_len("hi", hi.len(), flat.len())?;
                let image = project_box(lo, hi, &flat)?;
                ProductVector::from_flat(structure, &image)
            }
            Self::AffineMap { matrix, offset } => {
                let flat = x.flatten();
                expect_len("matrix rows", matrix.len(), flat.len())?;
                expect_len("offset", offset.len(), flat.len())?;
                let mut image = offset.clone();
                for (yi, row) in image.iter_mut().zip(matrix) {
                    expect_len("matrix row", row.len(), flat.len())?;
                    *yi += dot(row, &flat);
                }
                ProductVector::from_flat(structure, &image)
            }
            Self::Swap { first, second } => {
                self.validate(structure, ValidationMode::Permissive)?;
                let mut blocks: Vec<Vec<f64>> = x.blocks().to_vec();
                blocks.swap(*first, *second);
                ProductVector::new(structure.clone(), blocks)
            }
            Self::ContractionExample => {
                self.validate(structure, ValidationMode::Permissive)?;
                let x1 = x.block(0)?[0];
                let x2 = x.block(1)?[0];
                ProductVector::new(structure.clone(), vec![vec![x1 / 2.0 + 3.0], vec![8.0 * x2]])
            }
            Self::ScaledSwapExample => {
                self.validate(structure, ValidationMode::Permissive)?;
                let x1 = x.block(0)?[0];
                let x2 = x.block(1)?[0];
                ProductVector::new(structure.clone(), vec![vec![x2 / 2.0], vec![x1 / 2.0]])
            }
            Self::Relax { lambda, child } => {
                if !(*lambda >= 0.0) || !lambda.is_finite() {
                    return Err(Error::Parameter(format!("relaxation lambda {lambda} must be >= 0")));
                }
                let image = child.apply(x)?;
                x.lerp(&image, *lambda)
            }
            Self::CwRelax { lambdas, child } => {
                expect_len("lambdas", lambdas.len(), structure.block_count())?;
                let image = child.apply(x)?;
                let blocks = x
                    .blocks()
                    .iter()
                    .zip(image.blocks())
                    .zip(lambdas.lambdas())
                    .map(|((xb, tb), &l)| {
                        xb.iter().zip(tb).map(|(xi, ti)| xi + l * (ti - xi)).collect()
                    })
                    .collect();
                ProductVector::new(structure.clone(), blocks)
            }
            Self::ConvexCombination { weights, children } => {
                expect_len("weights", weights.len(), children.len())?;
                check_simplex(weights)?;
                let mut acc = vec![0.0; structure.total_dim()];
                for (w, child) in weights.iter().zip(children) {
                    let image = child.apply(x)?;
                    for (a, v) in acc.iter_mut().zip(image.flatten()) {
                        *a += w * v;
                    }
                }
                ProductVector::from_flat(structure, &acc)
            }
            Self::ComponentalWeighted {
                weights,
                relaxations,
                children,
            } => {
                expect_len("weight rows", weights.rows(), children.len())?;
                expect_len("weight columns", weights.cols(), structure.block_count())?;
                expect_len("relaxations", relaxations.len(), structure.block_count())?;
                let images = children
                    .iter()
                    .map(|c| c.apply(x))
                    .collect::<Result<Vec<_>>>()?;
                let mut blocks: Vec<Vec<f64>> = x.blocks().to_vec();
                for (j, block) in blocks.iter_mut().enumerate() {
                    let lambda = relaxations.lambdas()[j];
                    let xj = x.block(j)?;
                    for (c, out) in block.iter_mut().enumerate() {
                        // fixed summation order over i keeps results deterministic
                        let mut sum = 0.0;
                        for (i, image) in images.iter().enumerate() {
                            sum += weights.get(i, j) * (image.block(j)?[c] - xj[c]);
                        }
                        *out = xj[c] + lambda * sum;
                    }
                }
                ProductVector::new(structure.clone(), blocks)
            }
            Self::BlockDiagonal { blocks } => {
                expect_len("diagonal blocks", blocks.len(), structure.block_count())?;
                let mut out = Vec::with_capacity(blocks.len());
                for (j, op) in blocks.iter().enumerate() {
                    let sub = BlockStructure::new(vec![structure.dims()[j]])?;
                    let xj = ProductVector::new(sub, vec![x.block(j)?.to_vec()])?;
                    let image = op.apply(&xj)?;
                    out.push(image.block(0)?.to_vec());
                }
                ProductVector::new(structure.clone(), out)
            }
            Self::BlockSelect { assignment, children } => {
                expect_len("assignment", assignment.len(), structure.block_count())?;
                let mut out = Vec::with_capacity(assignment.len());
                for (j, &i) in assignment.iter().enumerate() {
                    let child = children
                        .get(i)
                        .ok_or_else(|| Error::Parameter(format!("assignment references missing child {i}")))?;
                    let image = child.apply(x)?;
                    out.push(image.block(j)?.to_vec());
                }
                ProductVector::new(structure.clone(), out)
            }
        }
    }

    /// Block `j` of `T(x)`.
    pub fn apply_component(&self, x: &ProductVector, j: usize) -> Result<Vec<f64>> {
        x.block(j)?; // index check first
        match self {
            // a block-diagonal operator only needs its own block
            Self::BlockDiagonal { blocks } => {
                expect_len("diagonal blocks", blocks.len(), x.structure().block_count())?;
                let sub = BlockStructure::new(vec![x.structure().dims()[j]])?;
                let xj = ProductVector::new(sub, vec![x.block(j)?.to_vec()])?;
                Ok(blocks[j].apply(&xj)?.block(0)?.to_vec())
            }
            _ => Ok(self.apply(x)?.block(j)?.to_vec()),
        }
    }
}

fn expect_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        Err(Error::ShapeMismatch(format!("{what}: expected {want}, got {got}")))
    } else {
        Ok(())
    }
}

fn check_simplex(w: &[f64]) -> Result<()> {
    if w.iter().any(|&wi| !(wi >= 0.0) || !wi.is_finite()) {
        return Err(Error::Parameter("convex weights must be finite and >= 0".into()));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::Parameter(format!("convex weights sum to {sum}, expected 1")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(dims: &[usize], coords: &[f64]) -> ProductVector {
        let s = BlockStructure::new(dims.to_vec()).unwrap();
        ProductVector::from_flat(&s, coords).unwrap()
    }

    fn swap2() -> OperatorSpec {
        OperatorSpec::Swap { first: 0, second: 1 }
    }

    #[test]
    fn identity_and_swap_atoms() {
        let x = pv(&[1, 1], &[1.0, 5.0]);
        assert_eq!(OperatorSpec::Identity.apply(&x).unwrap(), x);
        assert_eq!(swap2().apply(&x).unwrap(), pv(&[1, 1], &[5.0, 1.0]));
    }

    #[test]
    fn contraction_example_values() {
        let t = OperatorSpec::ContractionExample;
        let x = pv(&[1, 1], &[0.0, 1.0]);
        assert_eq!(t.apply(&x).unwrap(), pv(&[1, 1], &[3.0, 8.0]));
        assert_eq!(t.apply_component(&pv(&[1, 1], &[6.0, 0.0]), 0).unwrap(), vec![6.0]);
    }

    #[test]
    fn apply_component_matches_full_apply() {
        let x = pv(&[1, 1], &[1.0, 5.0]);
        for op in [swap2(), OperatorSpec::ContractionExample, OperatorSpec::ScaledSwapExample] {
            let full = op.apply(&x).unwrap();
            for j in 0..2 {
                assert_eq!(op.apply_component(&x, j).unwrap(), full.block(j).unwrap());
            }
        }
        assert_eq!(swap2().apply_component(&x, 0).unwrap(), vec![5.0]);
    }

    #[test]
    fn hyperplane_projection_formula() {
        assert_eq!(project_hyperplane(&[1.0, 1.0], 2.0, &[0.0, 0.0]).unwrap(), vec![1.0, 1.0]);
        // point already on the hyperplane is fixed
        let z = vec![1.5, 0.5];
        assert_eq!(project_hyperplane(&[1.0, 1.0], 2.0, &z).unwrap(), z);
        assert_eq!(project_hyperplane(&[3.0, 4.0], 0.0, &[3.0, 4.0]).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(
            project_hyperplane(&[0.0, 0.0], 1.0, &[0.0, 0.0]),
            Err(Error::DegenerateConstraint(_))
        ));
    }

    #[test]
    fn hyperplane_projection_is_idempotent() {
        let a = [0.3, -1.2, 2.5];
        let p1 = project_hyperplane(&a, 0.7, &[5.0, -3.0, 1.0]).unwrap();
        let p2 = project_hyperplane(&a, 0.7, &p1).unwrap();
        for (u, v) in p1.iter().zip(&p2) {
            assert!((u - v).abs() <= 1e-12);
        }
    }

    #[test]
    fn relaxation_endpoints() {
        let p = OperatorSpec::hyperplane(vec![1.0, 1.0], 2.0).unwrap();
        let x = pv(&[2], &[0.0, 0.0]);
        let id = p.clone().relaxed(0.0).unwrap();
        assert_eq!(id.apply(&x).unwrap(), x);
        let same = p.clone().relaxed(1.0).unwrap();
        assert_eq!(same.apply(&x).unwrap(), p.apply(&x).unwrap());
        // reflection: z + 2 (P(z) - z)
        let refl = p.clone().relaxed(2.0).unwrap();
        assert_eq!(refl.apply(&x).unwrap(), pv(&[2], &[2.0, 2.0]));
        assert!(OperatorSpec::Identity.relaxed(-0.5).is_err());
    }

    #[test]
    fn relaxation_scales_displacement() {
        let atoms = [
            OperatorSpec::hyperplane(vec![1.0, -2.0, 0.5], 1.0).unwrap(),
            OperatorSpec::ball(vec![0.0, 0.0, 0.0], 1.0).unwrap(),
            OperatorSpec::halfspace(vec![1.0, 1.0, 1.0], -4.0).unwrap(),
        ];
        let x = pv(&[2, 1], &[3.0, -1.0, 2.0]);
        for t in atoms {
            let base = t.apply(&x).unwrap();
            for lambda in [0.25, 1.5, 2.0] {
                let relaxed = t.clone().relaxed(lambda).unwrap().apply(&x).unwrap();
                for ((r, b), xi) in relaxed.flatten().iter().zip(base.flatten()).zip(x.flatten()) {
                    assert!((r - xi - lambda * (b - xi)).abs() <= 1e-14);
                }
            }
        }
    }

    #[test]
    fn cw_relaxation_componentwise() {
        let p = OperatorSpec::hyperplane(vec![1.0, 1.0], 2.0).unwrap();
        let x = pv(&[1, 1], &[0.0, 0.0]);
        let ones = RelaxationVector::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(p.clone().cw_relaxed(ones).apply(&x).unwrap(), p.apply(&x).unwrap());
        let zeros = RelaxationVector::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(p.clone().cw_relaxed(zeros).apply(&x).unwrap(), x);
        // reflect component 0, freeze component 1
        let y = RelaxationVector::new(vec![2.0, 0.0]).unwrap();
        assert_eq!(p.cw_relaxed(y).apply(&x).unwrap(), pv(&[1, 1], &[2.0, 0.0]));
        assert!(RelaxationVector::new(vec![1.0, -0.1]).is_err());
    }

    #[test]
    fn convex_combination_basics() {
        let x = pv(&[1], &[0.0]);
        let p0 = OperatorSpec::hyperplane(vec![1.0], 0.0).unwrap();
        let p2 = OperatorSpec::hyperplane(vec![1.0], 2.0).unwrap();
        let single = OperatorSpec::convex_combination(vec![p2.clone()], vec![1.0]).unwrap();
        assert_eq!(single.apply(&x).unwrap(), p2.apply(&x).unwrap());
        let id2 = OperatorSpec::convex_combination(
            vec![OperatorSpec::Identity, OperatorSpec::Identity],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert_eq!(id2.apply(&x).unwrap(), x);
        let mid = OperatorSpec::convex_combination(vec![p0, p2], vec![0.5, 0.5]).unwrap();
        assert_eq!(mid.apply(&x).unwrap(), pv(&[1], &[1.0]));
        assert!(OperatorSpec::convex_combination(vec![OperatorSpec::Identity], vec![0.9]).is_err());
    }

    #[test]
    fn componental_weighted_degenerate_cases() {
        let t = OperatorSpec::hyperplane(vec![1.0, 1.0], 2.0).unwrap();
        let x = pv(&[1, 1], &[0.0, 3.0]);
        let w = WeightMatrix::new(1, 2, vec![1.0, 1.0]).unwrap();
        let one = RelaxationVector::new(vec![1.0, 1.0]).unwrap();
        let same = OperatorSpec::componental_weighted(
            vec![t.clone()],
            w.clone(),
            one,
            ValidationMode::Strict,
        )
        .unwrap();
        assert_eq!(same.apply(&x).unwrap(), t.apply(&x).unwrap());
        let zero = RelaxationVector::new(vec![0.0, 0.0]).unwrap();
        let id = OperatorSpec::componental_weighted(
            vec![t.clone()],
            w.clone(),
            zero.clone(),
            ValidationMode::Permissive,
        )
        .unwrap();
        assert_eq!(id.apply(&x).unwrap(), x);
        // strict mode rejects lambda_j = 0
        assert!(OperatorSpec::componental_weighted(vec![t], w, zero, ValidationMode::Strict).is_err());
    }

    #[test]
    fn componental_weighted_with_equal_columns_matches_relaxed_convex_combination() {
        let ops = vec![
            OperatorSpec::hyperplane(vec![1.0, 0.0, 1.0], 1.0).unwrap(),
            OperatorSpec::hyperplane(vec![0.0, 2.0, -1.0], 3.0).unwrap(),
            OperatorSpec::ball(vec![1.0, 1.0, 1.0], 2.0).unwrap(),
        ];
        let w = vec![0.2, 0.5, 0.3];
        let lambda = 1.4;
        let entries: Vec<f64> = w.iter().flat_map(|&wi| vec![wi; 3]).collect();
        let wm = WeightMatrix::new(3, 3, entries).unwrap();
        let cw = OperatorSpec::componental_weighted(
            ops.clone(),
            wm,
            RelaxationVector::constant(lambda, 3).unwrap(),
            ValidationMode::Strict,
        )
        .unwrap();
        let relaxed = OperatorSpec::convex_combination(ops, w)
            .unwrap()
            .relaxed(lambda)
            .unwrap();
        let x = pv(&[1, 1, 1], &[4.0, -2.0, 0.5]);
        let a = cw.apply(&x).unwrap();
        let b = relaxed.apply(&x).unwrap();
        for (u, v) in a.flatten().iter().zip(b.flatten()) {
            assert!((u - v).abs() <= 1e-14);
        }
    }

    #[test]
    fn block_diagonal_reproduces_contraction_example() {
        // U^1(t) = t/2 + 3, U^2(t) = 8 t as 1x1 affine maps
        let u1 = OperatorSpec::AffineMap {
            matrix: vec![vec![0.5]],
            offset: vec![3.0],
        };
        let u2 = OperatorSpec::AffineMap {
            matrix: vec![vec![8.0]],
            offset: vec![0.0],
        };
        let u = OperatorSpec::block_diagonal(vec![u1.clone(), u2]).unwrap();
        let t = OperatorSpec::ContractionExample;
        for coords in [[0.0, 1.0], [6.0, -2.0], [-3.5, 0.25]] {
            let x = pv(&[1, 1], &coords);
            assert_eq!(u.apply(&x).unwrap(), t.apply(&x).unwrap());
        }
        // block locality: perturbing the other block leaves block j unchanged
        let x = pv(&[1, 1], &[2.0, 7.0]);
        let x_perturbed = pv(&[1, 1], &[2.0, -100.0]);
        assert_eq!(
            u.apply(&x).unwrap().block(0).unwrap(),
            u.apply(&x_perturbed).unwrap().block(0).unwrap()
        );
        // decomposition: block j of the image equals U^j applied to x_j alone
        assert_eq!(
            u.apply(&x).unwrap().block(0).unwrap(),
            u1.apply(&pv(&[1], &[2.0])).unwrap().block(0).unwrap()
        );
        let all_id = OperatorSpec::block_diagonal(vec![OperatorSpec::Identity; 2]).unwrap();
        assert_eq!(all_id.apply(&x).unwrap(), x);
    }

    #[test]
    fn block_select_reads_selected_components() {
        let t = swap2();
        let x = pv(&[1, 1], &[1.0, 5.0]);
        let same = OperatorSpec::block_select(vec![t.clone()], vec![0, 0]).unwrap();
        assert_eq!(same.apply(&x).unwrap(), t.apply(&x).unwrap());
        let mixed =
            OperatorSpec::block_select(vec![OperatorSpec::Identity, t], vec![0, 1]).unwrap();
        // component 0 from Id, component 1 from swap
        assert_eq!(mixed.apply(&x).unwrap(), pv(&[1, 1], &[1.0, 1.0]));
        let p = OperatorSpec::hyperplane(vec![1.0, 1.0], 2.0).unwrap();
        let sel =
            OperatorSpec::block_select(vec![p, OperatorSpec::Identity], vec![0, 1]).unwrap();
        let zero = pv(&[1, 1], &[0.0, 0.0]);
        assert_eq!(sel.apply(&zero).unwrap(), pv(&[1, 1], &[1.0, 0.0]));
        assert!(OperatorSpec::block_select(vec![OperatorSpec::Identity], vec![0, 1]).is_err());
    }

    #[test]
    fn weight_matrix_validation() {
        assert!(WeightMatrix::new(2, 2, vec![1.0, 0.0, 1.0, 0.0]).is_err()); // zero column
        assert!(WeightMatrix::new(2, 2, vec![1.0, -0.5, 1.0, 1.0]).is_err());
        let w = WeightMatrix::new(2, 2, vec![0.5, 0.0, 0.5, 1.0]).unwrap();
        assert!(w.is_normalized());
        assert_eq!(w.column_sums(), vec![1.0, 1.0]);
        let unnorm = WeightMatrix::new(1, 2, vec![0.25, 1.0]).unwrap();
        assert!(!unnorm.is_normalized());
    }

    #[test]
    fn json_round_trip() {
        let op = OperatorSpec::convex_combination(
            vec![
                OperatorSpec::hyperplane(vec![1.0, 2.0], 3.0).unwrap(),
                OperatorSpec::ball(vec![0.0, 0.0], 1.0)
                    .unwrap()
                    .relaxed(1.5)
                    .unwrap(),
            ],
            vec![0.25, 0.75],
        )
        .unwrap();
        let json = serde_json::to_string(&op).unwrap();
        assert!(json.contains("\"kind\":\"convex-combination\""));
        assert!(json.contains("\"kind\":\"hyperplane-projection\""));
        let back: OperatorSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, op);
        // unknown kinds are rejected
        assert!(serde_json::from_str::<OperatorSpec>(r#"{"kind":"frobnicate"}"#).is_err());
    }

    #[test]
    fn validate_catches_shape_errors() {
        let s = BlockStructure::new(vec![2, 1]).unwrap();
        let p = OperatorSpec::hyperplane(vec![1.0, 1.0], 0.0).unwrap();
        assert!(p.validate(&s, ValidationMode::Strict).is_err()); // normal too short
        let swap = OperatorSpec::Swap { first: 0, second: 1 };
        assert!(swap.validate(&s, ValidationMode::Strict).is_err()); // unequal blocks
        let ex = OperatorSpec::ContractionExample;
        assert!(ex.validate(&s, ValidationMode::Strict).is_err());
        let ok = OperatorSpec::hyperplane(vec![1.0, 1.0, 1.0], 0.0).unwrap();
        assert!(ok.validate(&s, ValidationMode::Strict).is_ok());
    }

    #[test]
    fn halfspace_and_ball_and_box_projections() {
        // interior points are fixed
        assert_eq!(project_halfspace(&[1.0, 0.0], 1.0, &[0.0, 5.0]).unwrap(), vec![0.0, 5.0]);
        assert_eq!(project_halfspace(&[1.0, 0.0], 1.0, &[3.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(project_ball(&[0.0, 0.0], 1.0, &[0.5, 0.0]).unwrap(), vec![0.5, 0.0]);
        assert_eq!(project_ball(&[0.0, 0.0], 1.0, &[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(project_box(&[0.0], &[1.0], &[2.5]).unwrap(), vec![1.0]);
        assert!(project_ball(&[0.0], 0.0, &[1.0]).is_err());
        assert!(project_box(&[1.0], &[0.0], &[0.5]).is_err());
    }
}
