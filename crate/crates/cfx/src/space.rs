//! Block-structured vectors and the product inner product / norm.
//!
//! Each component space is modeled as `R^{n_j}` with the Euclidean inner
//! product; the product space carries `<x,y> = sum_j <x_j,y_j>` and the
//! induced norm. Component indices are 0-based throughout the crate.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The shape of a product space: one positive dimension per component block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockStructure {
    dims: Vec<usize>,
}

impl BlockStructure {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Parameter("block structure needs at least one block".into()));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Parameter("every block dimension must be positive".into()));
        }
        Ok(Self { dims })
    }

    /// `n` scalar blocks, the natural structure for componental views of R^n.
    pub fn scalar(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    /// Number of blocks.
    pub fn block_count(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, j: usize) -> Result<usize> {
        self.dims.get(j).copied().ok_or(Error::IndexOutOfRange {
            index: j,
            count: self.dims.len(),
        })
    }

    /// Total dimension of the flattened space.
    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    /// Offset of block `j` in the flattened coordinate vector.
    pub fn offset(&self, j: usize) -> Result<usize> {
        self.dim(j)?;
        Ok(self.dims[..j].iter().sum())
    }
}

/// An element `x = (x_1, ..., x_n)` of the product space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductVector {
    structure: BlockStructure,
    blocks: Vec<Vec<f64>>,
}

impl ProductVector {
    pub fn new(structure: BlockStructure, blocks: Vec<Vec<f64>>) -> Result<Self> {
        if blocks.len() != structure.block_count() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} blocks, got {}",
                structure.block_count(),
                blocks.len()
            )));
        }
        for (j, block) in blocks.iter().enumerate() {
            if block.len() != structure.dims()[j] {
                return Err(Error::ShapeMismatch(format!(
                    "block {} has length {}, expected {}",
                    j,
                    block.len(),
                    structure.dims()[j]
                )));
            }
            if block.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("block {j} contains a non-finite entry")));
            }
        }
        Ok(Self { structure, blocks })
    }

    pub fn zeros(structure: &BlockStructure) -> Self {
        let blocks = structure.dims().iter().map(|&d| vec![0.0; d]).collect();
        Self {
            structure: structure.clone(),
            blocks,
        }
    }

    /// Builds a vector from flat coordinates, splitting them block by block.
    pub fn from_flat(structure: &BlockStructure, coords: &[f64]) -> Result<Self> {
        if coords.len() != structure.total_dim() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coordinates, got {}",
                structure.total_dim(),
                coords.len()
            )));
        }
        let mut blocks = Vec::with_capacity(structure.block_count());
        let mut at = 0;
        for &d in structure.dims() {
            blocks.push(coords[at..at + d].to_vec());
            at += d;
        }
        Self::new(structure.clone(), blocks)
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn block(&self, j: usize) -> Result<&[f64]> {
        self.blocks
            .get(j)
            .map(|b| b.as_slice())
            .ok_or(Error::IndexOutOfRange {
                index: j,
                count: self.blocks.len(),
            })
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    /// Concatenated coordinates, block order.
    pub fn flatten(&self) -> Vec<f64> {
        self.blocks.iter().flatten().copied().collect()
    }

    fn check_same_structure(&self, other: &Self) -> Result<()> {
        if self.structure != other.structure {
            return Err(Error::ShapeMismatch(format!(
                "structures differ: {:?} vs {:?}",
                self.structure.dims(),
                other.structure.dims()
            )));
        }
        Ok(())
    }

    /// Product inner product `<x,y> = sum_j <x_j,y_j>`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_structure(other)?;
        Ok(self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| dot(a, b))
            .sum())
    }

    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(|b| dot(b, b)).sum::<f64>().sqrt()
    }

    /// Euclidean norm of block `j`.
    pub fn component_norm(&self, j: usize) -> Result<f64> {
        let b = self.block(j)?;
        Ok(dot(b, b).sqrt())
    }

    /// `||x_j - y_j||_j`.
    pub fn component_distance(&self, other: &Self, j: usize) -> Result<f64> {
        self.check_same_structure(other)?;
        let a = self.block(j)?;
        let b = other.block(j)?;
        Ok(a.iter()
            .zip(b)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt())
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_same_structure(other)?;
        let mut acc = 0.0;
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            acc += a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
        }
        Ok(acc.sqrt())
    }

    /// Returns `self` with block `j` replaced by `x_j + scale * direction`;
    /// all other blocks are bit-identical.
    pub fn axpy_block(&self, j: usize, scale: f64, direction: &[f64]) -> Result<Self> {
        let block = self.block(j)?;
        if direction.len() != block.len() {
            return Err(Error::ShapeMismatch(format!(
                "direction length {} does not match block {} length {}",
                direction.len(),
                j,
                block.len()
            )));
        }
        let mut out = self.clone();
        for (v, d) in out.blocks[j].iter_mut().zip(direction) {
            *v += scale * d;
        }
        Ok(out)
    }

    /// `x + scale * (y - x)` over the whole space.
    pub fn lerp(&self, other: &Self, scale: f64) -> Result<Self> {
        self.check_same_structure(other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p + scale * (q - p)).collect())
            .collect();
        Self::new(self.structure.clone(), blocks)
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().flatten().all(|v| v.is_finite())
    }

    /// Plain-text serialization: line 1 holds the block dimensions, line 2 all
    /// coordinates block by block, space-separated.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let dims: Vec<String> = self.structure.dims().iter().map(|d| d.to_string()).collect();
        let _ = writeln!(out, "{}", dims.join(" "));
        let coords: Vec<String> = self.flatten().iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", coords.join(" "));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let dims_line = lines
            .next()
            .ok_or_else(|| Error::Parse("empty vector file".into()))?;
        let coords_line = lines
            .next()
            .ok_or_else(|| Error::Parse("vector file is missing the coordinate line".into()))?;
        let dims = dims_line
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("bad dimension {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let coords = coords_line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad coordinate {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let structure = BlockStructure::new(dims)?;
        Self::from_flat(&structure, &coords)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
