//! Problem construction and ingestion: sparse linear systems, planted
//! consistent instances, column sparsity profiles, DROP weight matrices and
//! convex feasibility instances built from convex-set atoms.
//!
//! Matrices are exchanged in Matrix Market coordinate format, right-hand
//! sides as one decimal per line.

use std::io::{BufRead, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::operators::{OperatorSpec, WeightMatrix};
use crate::space::{norm2, BlockStructure, ProductVector};
use crate::{Error, Result};

/// One sparse row: structurally nonzero entries only, sorted by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseRow {
    entries: Vec<(usize, f64)>,
}

impl SparseRow {
    pub fn new(mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.retain(|&(_, v)| v != 0.0);
        if entries.is_empty() {
            return Err(Error::DegenerateConstraint("row has no nonzero entries".into()));
        }
        entries.sort_by_key(|&(c, _)| c);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Parse("duplicate column index in sparse row".into()));
        }
        if entries.iter().any(|&(_, v)| !v.is_finite()) {
            return Err(Error::Parameter("row contains a non-finite entry".into()));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&(c, v)| v * x[c]).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }

    /// Dense coefficient vector of length `n`.
    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &(c, v) in &self.entries {
            out[c] = v;
        }
        out
    }
}

/// Number of structural nonzeros per column, all positive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsityProfile {
    counts: Vec<usize>,
}

impl SparsityProfile {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if let Some(j) = counts.iter().position(|&s| s == 0) {
            return Err(Error::DegenerateColumn(format!("column {j} has no nonzero entries")));
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn max(&self) -> usize {
        self.counts.iter().copied().max().unwrap_or(0)
    }
}

/// A sparse linear system `Ax = b` with no zero rows; row norms are
/// precomputed at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSystem {
    rows: Vec<SparseRow>,
    rhs: Vec<f64>,
    cols: usize,
    row_norms_sq: Vec<f64>,
}

impl LinearSystem {
    pub fn new(rows: Vec<SparseRow>, cols: usize, rhs: Vec<f64>) -> Result<Self> {
        if rows.is_empty() || cols == 0 {
            return Err(Error::Parameter("system must have at least one row and column".into()));
        }
        if rhs.len() != rows.len() {
            return Err(Error::ShapeMismatch(format!(
                "rhs has length {} for {} rows",
                rhs.len(),
                rows.len()
            )));
        }
        for row in &rows {
            if let Some(&(c, _)) = row.entries().iter().find(|&&(c, _)| c >= cols) {
                return Err(Error::ShapeMismatch(format!(
                    "row references column {c} but the system has {cols} columns"
                )));
            }
        }
        let row_norms_sq = rows.iter().map(SparseRow::norm_sq).collect();
        Ok(Self {
            rows,
            rhs,
            cols,
            row_norms_sq,
        })
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn col_count(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn row_norm_sq(&self, i: usize) -> f64 {
        self.row_norms_sq[i]
    }

    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, &b)| {
                let r = row.dot(x) - b;
                r * r
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `||Ax - b|| / (1 + ||b||)`.
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        self.residual_norm(x) / (1.0 + norm2(&self.rhs))
    }

    /// `s_j` = count of rows with a structural nonzero in column `j`; every
    /// column must be hit.
    pub fn column_sparsity(&self) -> Result<SparsityProfile> {
        let mut counts = vec![0usize; self.cols];
        for row in &self.rows {
            for &(c, _) in row.entries() {
                counts[c] += 1;
            }
        }
        SparsityProfile::new(counts)
    }

    /// One hyperplane projection operator per equation, over `n` scalar
    /// components.
    pub fn hyperplane_operators(&self) -> Result<Vec<OperatorSpec>> {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, &b)| OperatorSpec::hyperplane(row.to_dense(self.cols), b))
            .collect()
    }
}

/// DROP weight scheme selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DropWeightScheme {
    /// `w_ij = 1{a_j^i != 0} / s_j`; every column sums to 1.
    SupportNormalized,
    /// `w_ij = w_i / s_j` with simplex `w`; column sums are `1/s_j` scaled
    /// by the support mass and may be below 1.
    ExampleWOverS { weights: Vec<f64> },
}

/// Builds the `m x n` DROP weight matrix for a system and its sparsity
/// profile.
pub fn drop_weights(
    system: &LinearSystem,
    sparsity: &SparsityProfile,
    scheme: &DropWeightScheme,
) -> Result<WeightMatrix> {
    let m = system.row_count();
    let n = system.col_count();
    if sparsity.counts().len() != n {
        return Err(Error::ShapeMismatch(format!(
            "sparsity profile has {} entries for {} columns",
            sparsity.counts().len(),
            n
        )));
    }
    let mut entries = vec![0.0; m * n];
    match scheme {
        DropWeightScheme::SupportNormalized => {
            for (i, row) in system.rows().iter().enumerate() {
                for &(j, _) in row.entries() {
                    entries[i * n + j] = 1.0 / sparsity.counts()[j] as f64;
                }
            }
        }
        DropWeightScheme::ExampleWOverS { weights } => {
            if weights.len() != m {
                return Err(Error::Parameter(format!("got {} weights for {m} rows", weights.len())));
            }
            if weights.iter().any(|&w| !(w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::Parameter("scheme weights must lie on the simplex".into()));
            }
            for i in 0..m {
                for j in 0..n {
                    entries[i * n + j] = weights[i] / sparsity.counts()[j] as f64;
                }
            }
        }
    }
    WeightMatrix::new(m, n, entries)
}

/// Generates a consistent sparse system with a planted solution,
/// reproducible from the seed. Coefficients are uniform on
/// `[-1, -0.1] u [0.1, 1]`, the solution uniform on `[-1, 1]`.
pub fn plant_consistent_system(
    m: usize,
    n: usize,
    density: f64,
    seed: u64,
) -> Result<(LinearSystem, Vec<f64>)> {
    if m == 0 || n == 0 {
        return Err(Error::Parameter("system must have at least one row and column".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Parameter(format!("density {density} must lie in (0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let mut rows_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut col_hit = vec![false; n];
        for (i, entries) in rows_entries.iter_mut().enumerate() {
            let _ = i;
            for j in 0..n {
                if rng.gen::<f64>() < density {
                    let magnitude = rng.gen_range(0.1..1.0);
                    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    entries.push((j, sign * magnitude));
                    col_hit[j] = true;
                }
            }
        }
        if rows_entries.iter().any(Vec::is_empty) || col_hit.iter().any(|&h| !h) {
            continue; // redraw
        }
        let solution: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rows = rows_entries
            .into_iter()
            .map(SparseRow::new)
            .collect::<Result<Vec<_>>>()?;
        let rhs = rows.iter().map(|row| row.dot(&solution)).collect();
        let system = LinearSystem::new(rows, n, rhs)?;
        return Ok((system, solution));
    }
    Err(Error::Generation(format!(
        "could not draw a {m}x{n} system at density {density} without zero rows or columns in 100 attempts"
    )))
}

/// A convex-set atom of a feasibility instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConvexSet {
    Hyperplane { normal: Vec<f64>, offset: f64 },
    Halfspace { normal: Vec<f64>, offset: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl ConvexSet {
    /// Distance-to-set surrogate: how far a flattened point violates the
    /// constraint (0 inside the set).
    pub fn violation(&self, x: &[f64]) -> f64 {
        match self {
            Self::Hyperplane { normal, offset } => {
                (crate::space::dot(normal, x) - offset).abs() / norm2(normal)
            }
            Self::Halfspace { normal, offset } => {
                ((crate::space::dot(normal, x) - offset) / norm2(normal)).max(0.0)
            }
            Self::Ball { center, radius } => {
                let d: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum::<f64>()
                    .sqrt();
                (d - radius).max(0.0)
            }
            Self::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| (l - v).max(v - h).max(0.0))
                .fold(0.0, f64::max),
        }
    }

    fn projection(&self) -> Result<OperatorSpec> {
        match self {
            Self::Hyperplane { normal, offset } => OperatorSpec::hyperplane(normal.clone(), *offset),
            Self::Halfspace { normal, offset } => OperatorSpec::halfspace(normal.clone(), *offset),
            Self::Ball { center, radius } => OperatorSpec::ball(center.clone(), *radius),
            Self::Box { lo, hi } => {
                if lo.len() != hi.len() || lo.iter().zip(hi).any(|(l, h)| l > h) {
                    return Err(Error::Parameter("degenerate box atom".into()));
                }
                Ok(OperatorSpec::BoxProjection {
                    lo: lo.clone(),
                    hi: hi.clone(),
                })
            }
        }
    }
}

/// A convex feasibility instance: a block structure, convex-set atoms, and
/// optionally a planted feasible point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfpInstance {
    pub dims: Vec<usize>,
    pub sets: Vec<ConvexSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted: Option<Vec<f64>>,
}

impl CfpInstance {
    pub fn structure(&self) -> Result<BlockStructure> {
        BlockStructure::new(self.dims.clone())
    }

    /// Checks internal consistency; the planted point, when present, must
    /// lie in every set to 1e-12.
    pub fn validate(&self) -> Result<()> {
        let structure = self.structure()?;
        let ops = self.projection_operators()?;
        for op in &ops {
            op.validate(&structure, crate::operators::ValidationMode::Strict)?;
        }
        if let Some(p) = &self.planted {
            if p.len() != structure.total_dim() {
                return Err(Error::ShapeMismatch(format!(
                    "planted point has length {}, expected {}",
                    p.len(),
                    structure.total_dim()
                )));
            }
            for (idx, set) in self.sets.iter().enumerate() {
                let v = set.violation(p);
                if v > 1e-12 {
                    return Err(Error::Parameter(format!(
                        "planted point violates set {idx} by {v:e}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// One metric projection operator per set.
    pub fn projection_operators(&self) -> Result<Vec<OperatorSpec>> {
        self.sets.iter().map(ConvexSet::projection).collect()
    }

    pub fn planted_vector(&self) -> Result<Option<ProductVector>> {
        let structure = self.structure()?;
        self.planted
            .as_ref()
            .map(|p| ProductVector::from_flat(&structure, p))
            .transpose()
    }
}

/// Reads a matrix in Matrix Market coordinate format together with a dense
/// right-hand side (one decimal per line).
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<(usize, usize, Vec<(usize, usize, f64)>)> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty Matrix Market file".into()))?
        .map_err(Error::Io)?;
    let lowered = header.to_lowercase();
    if !lowered.starts_with("%%matrixmarket matrix coordinate real") {
        return Err(Error::Parse(format!(
            "unsupported Matrix Market header: {header:?} (need coordinate real)"
        )));
    }
    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries = Vec::new();
    for line in lines {
        let line = line.map_err(Error::Io)?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(Error::Parse(format!("bad size line: {trimmed:?}")));
                }
                let m = parse_usize(fields[0])?;
                let n = parse_usize(fields[1])?;
                let nnz = parse_usize(fields[2])?;
                size = Some((m, n, nnz));
                entries.reserve(nnz);
            }
            Some((m, n, _)) => {
                if fields.len() != 3 {
                    return Err(Error::Parse(format!("bad entry line: {trimmed:?}")));
                }
                let i = parse_usize(fields[0])?;
                let j = parse_usize(fields[1])?;
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad value {:?}: {e}", fields[2])))?;
                if i == 0 || i > m || j == 0 || j > n {
                    return Err(Error::Parse(format!(
                        "entry ({i}, {j}) outside the declared {m}x{n} shape (indices are 1-based)"
                    )));
                }
                // explicit zeros are dropped: sparsity is structural
                if v != 0.0 {
                    entries.push((i - 1, j - 1, v));
                }
            }
        }
    }
    let (m, n, _) = size.ok_or_else(|| Error::Parse("Matrix Market file has no size line".into()))?;
    Ok((m, n, entries))
}

fn parse_usize(token: &str) -> Result<usize> {
    token
        .parse()
        .map_err(|e| Error::Parse(format!("bad integer {token:?}: {e}")))
}

/// Assembles a [`LinearSystem`] from Matrix Market entries and a right-hand
/// side.
pub fn system_from_coordinates(
    m: usize,
    n: usize,
    entries: &[(usize, usize, f64)],
    rhs: Vec<f64>,
) -> Result<LinearSystem> {
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for &(i, j, v) in entries {
        rows[i].push((j, v));
    }
    let rows = rows
        .into_iter()
        .map(SparseRow::new)
        .collect::<Result<Vec<_>>>()?;
    LinearSystem::new(rows, n, rhs)
}

/// Writes a system's matrix in Matrix Market coordinate format (1-based).
pub fn write_matrix_market<W: Write>(system: &LinearSystem, mut out: W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    let nnz: usize = system.rows().iter().map(|r| r.entries().len()).sum();
    writeln!(out, "{} {} {}", system.row_count(), system.col_count(), nnz)?;
    for (i, row) in system.rows().iter().enumerate() {
        for &(j, v) in row.entries() {
            writeln!(out, "{} {} {v:?}", i + 1, j + 1)?;
        }
    }
    Ok(())
}

/// Reads a dense vector, one decimal per line; blank lines are skipped.
pub fn read_dense_vector<R: BufRead>(reader: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(Error::Io)?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        out.push(
            trimmed
                .parse()
                .map_err(|e| Error::Parse(format!("bad decimal {trimmed:?}: {e}")))?,
        );
    }
    Ok(out)
}

/// Writes a dense vector, one decimal per line.
pub fn write_dense_vector<W: Write>(v: &[f64], mut out: W) -> Result<()> {
    for x in v {
        writeln!(out, "{x:?}")?;
    }
    Ok(())
}
