//! Fixed point and simultaneous projection solvers with per-component
//! convergence diagnostics: Picard iteration with componental contraction
//! error bounds, the Cimmino iteration, DROP, and the general
//! component-weighted step, plus a Fejér monotonicity monitor.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::checks::{PropertyReport, Verdict, Witness};
use crate::operators::{OperatorSpec, WeightMatrix};
use crate::problems::LinearSystem;
use crate::space::{BlockStructure, ProductVector};
use crate::{Error, Result};

/// Default iteration cap.
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;
/// Default per-component step tolerance.
pub const DEFAULT_STEP_TOL: f64 = 1e-10;

/// When to stop an iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StopRule {
    pub max_iterations: usize,
    /// Stop when `max_j ||x_j^{k+1} - x_j^k||_j <= step_tol`.
    pub step_tol: f64,
    /// For linear problems: stop when `||Ax - b|| / (1 + ||b||) <= residual_tol`.
    #[serde(default)]
    pub residual_tol: Option<f64>,
}

impl StopRule {
    pub fn new(max_iterations: usize, step_tol: f64) -> Result<Self> {
        if max_iterations == 0 {
            return Err(Error::Parameter("max_iterations must be at least 1".into()));
        }
        if !(step_tol >= 0.0) {
            return Err(Error::Parameter("step tolerance must be >= 0".into()));
        }
        Ok(Self {
            max_iterations,
            step_tol,
            residual_tol: None,
        })
    }

    pub fn with_residual_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol >= 0.0) {
            return Err(Error::Parameter("residual tolerance must be >= 0".into()));
        }
        self.residual_tol = Some(tol);
        Ok(self)
    }
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            step_tol: DEFAULT_STEP_TOL,
            residual_tol: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    StepTolerance,
    ResidualTolerance,
    MaxIterations,
}

/// Trajectory of one solver run.
///
/// With `K` completed steps: `iterates` has `K+1` entries (entry 0 is the
/// supplied start, bit-identical), `per_component_steps` has `K` rows, and
/// `per_component_distances` / `residuals`, when recorded, have `K+1` rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationHistory {
    pub iterates: Vec<ProductVector>,
    pub per_component_steps: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_component_distances: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<Vec<f64>>,
    pub stop_reason: StopReason,
}

impl IterationHistory {
    /// Number of completed iteration steps.
    pub fn steps(&self) -> usize {
        self.per_component_steps.len()
    }

    pub fn final_iterate(&self) -> &ProductVector {
        self.iterates.last().expect("history always holds the start")
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.residuals.as_ref().and_then(|r| r.last().copied())
    }

    /// First iteration index `k` with residual `<= target`, if any.
    pub fn first_residual_below(&self, target: f64) -> Option<usize> {
        self.residuals
            .as_ref()
            .and_then(|r| r.iter().position(|&v| v <= target))
    }

    /// CSV export: columns `k`, `residual` (when recorded), then `step_j`
    /// and `dist_j` per component; 17 significant digits, LF line endings.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.final_iterate().structure().block_count();
        let mut header = vec!["k".to_string()];
        if self.residuals.is_some() {
            header.push("residual".to_string());
        }
        for j in 0..n {
            header.push(format!("step_{j}"));
        }
        if self.per_component_distances.is_some() {
            for j in 0..n {
                header.push(format!("dist_{j}"));
            }
        }
        writeln!(out, "{}", header.join(","))?;
        for k in 0..self.iterates.len() {
            let mut row = vec![k.to_string()];
            if let Some(res) = &self.residuals {
                row.push(format_sig(res[k]));
            }
            for j in 0..n {
                // step k is the move from iterate k-1 to k
                let step = if k == 0 { 0.0 } else { self.per_component_steps[k - 1][j] };
                row.push(format_sig(step));
            }
            if let Some(dists) = &self.per_component_distances {
                for j in 0..n {
                    row.push(format_sig(dists[k][j]));
                }
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn format_sig(v: f64) -> String {
    format!("{v:.16e}")
}

fn component_steps(prev: &ProductVector, next: &ProductVector) -> Result<Vec<f64>> {
    (0..prev.structure().block_count())
        .map(|j| next.component_distance(prev, j))
        .collect()
}

fn component_distances(x: &ProductVector, z: &ProductVector) -> Result<Vec<f64>> {
    (0..x.structure().block_count())
        .map(|j| x.component_distance(z, j))
        .collect()
}

/// Generic sequential iteration driver. A non-finite iterate aborts with a
/// divergence error carrying the history up to the last finite iterate.
fn run_iteration<F>(
    step: F,
    x0: &ProductVector,
    stop: &StopRule,
    reference: Option<&ProductVector>,
    residual: Option<&dyn Fn(&ProductVector) -> f64>,
) -> Result<IterationHistory>
where
    F: Fn(&ProductVector) -> Result<ProductVector>,
{
    let mut iterates = vec![x0.clone()];
    let mut steps: Vec<Vec<f64>> = Vec::new();
    let mut distances = match reference {
        Some(z) => Some(vec![component_distances(x0, z)?]),
        None => None,
    };
    let mut residuals = residual.map(|f| vec![f(x0)]);

    let mut stop_reason = StopReason::MaxIterations;
    for k in 0..stop.max_iterations {
        let current = iterates.last().expect("nonempty");
        if let (Some(tol), Some(res)) = (stop.residual_tol, residuals.as_ref()) {
            if res[k] <= tol {
                stop_reason = StopReason::ResidualTolerance;
                break;
            }
        }
        let next = match step(current) {
            Ok(next) if next.is_finite() => next,
            // overflow inside the step or in the result: report divergence
            // with the history up to the last finite iterate
            Ok(_) | Err(Error::NonFinite(_)) => {
                return Err(Error::Diverged {
                    iterations: k,
                    history: Box::new(IterationHistory {
                        iterates,
                        per_component_steps: steps,
                        per_component_distances: distances,
                        residuals,
                        stop_reason: StopReason::MaxIterations,
                    }),
                })
            }
            Err(e) => return Err(e),
        };
        let step_norms = component_steps(current, &next)?;
        let max_step = step_norms.iter().cloned().fold(0.0f64, f64::max);
        steps.push(step_norms);
        if let (Some(d), Some(z)) = (distances.as_mut(), reference) {
            d.push(component_distances(&next, z)?);
        }
        if let Some(res) = residuals.as_mut() {
            res.push(residual.expect("paired with residuals")(&next));
        }
        iterates.push(next);
        if max_step <= stop.step_tol {
            stop_reason = StopReason::StepTolerance;
            break;
        }
        if let (Some(tol), Some(res)) = (stop.residual_tol, residuals.as_ref()) {
            if res.last().copied().unwrap() <= tol {
                stop_reason = StopReason::ResidualTolerance;
                break;
            }
        }
    }
    Ok(IterationHistory {
        iterates,
        per_component_steps: steps,
        per_component_distances: distances,
        residuals,
        stop_reason,
    })
}

/// Picard iteration `x^{k+1} = T(x^k)`.
pub fn picard(op: &OperatorSpec, x0: &ProductVector, stop: &StopRule) -> Result<IterationHistory> {
    run_iteration(|x| op.apply(x), x0, stop, None, None)
}

/// Picard iteration that also records per-component distances to `reference`.
pub fn picard_with_reference(
    op: &OperatorSpec,
    x0: &ProductVector,
    stop: &StopRule,
    reference: &ProductVector,
) -> Result<IterationHistory> {
    run_iteration(|x| op.apply(x), x0, stop, Some(reference), None)
}

/// A priori and a posteriori contraction error bounds for component `j`.
///
/// Entry `k-1` of each list is the bound at iteration `k`:
/// a priori `alpha^k/(1-alpha) ||x_j^0 - x_j^1||`, a posteriori
/// `alpha/(1-alpha) ||x_j^{k-1} - x_j^k||`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContractionBounds {
    pub component: usize,
    pub alpha: f64,
    pub a_priori: Vec<f64>,
    pub a_posteriori: Vec<f64>,
}

pub fn contraction_bounds(history: &IterationHistory, j: usize, alpha: f64) -> Result<ContractionBounds> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Parameter(format!("contraction modulus {alpha} must lie in [0, 1)")));
    }
    if history.iterates.len() < 2 {
        return Err(Error::Parameter("history needs at least two iterates".into()));
    }
    let first_step = history.per_component_steps[0]
        .get(j)
        .copied()
        .ok_or(Error::IndexOutOfRange {
            index: j,
            count: history.per_component_steps[0].len(),
        })?;
    let steps = history.steps();
    let mut a_priori = Vec::with_capacity(steps);
    let mut a_posteriori = Vec::with_capacity(steps);
    let mut alpha_pow = 1.0;
    for k in 1..=steps {
        alpha_pow *= alpha;
        a_priori.push(alpha_pow / (1.0 - alpha) * first_step);
        a_posteriori.push(alpha / (1.0 - alpha) * history.per_component_steps[k - 1][j]);
    }
    Ok(ContractionBounds {
        component: j,
        alpha,
        a_priori,
        a_posteriori,
    })
}

/// Verifies the componental convergence rate
/// `||x_j^k - z|| <= alpha ||x_j^{k-1} - z|| + 1e-12` against a known limit
/// block `reference`.
pub fn rate_check(
    history: &IterationHistory,
    j: usize,
    alpha: f64,
    reference: &[f64],
) -> Result<PropertyReport> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Parameter(format!("contraction modulus {alpha} must lie in [0, 1)")));
    }
    let dims = history.final_iterate().structure().dims();
    let dim = *dims.get(j).ok_or(Error::IndexOutOfRange {
        index: j,
        count: dims.len(),
    })?;
    if reference.len() != dim {
        return Err(Error::ShapeMismatch(format!(
            "reference block has length {}, expected {dim}",
            reference.len()
        )));
    }
    let err = |x: &ProductVector| -> Result<f64> {
        let b = x.block(j)?;
        Ok(b.iter().zip(reference).map(|(a, r)| (a - r) * (a - r)).sum::<f64>().sqrt())
    };
    let mut max_violation = f64::NEG_INFINITY;
    let mut witness: Option<Witness> = None;
    let mut prev = err(&history.iterates[0])?;
    for x in &history.iterates[1..] {
        let cur = err(x)?;
        let violation = cur - alpha * prev - 1e-12;
        if violation > max_violation {
            max_violation = violation;
            witness = Some(Witness {
                x: x.clone(),
                y: None,
                z: None,
                violation,
            });
        }
        prev = cur;
    }
    let verdict = if max_violation > 0.0 { Verdict::Fail } else { Verdict::Pass };
    Ok(PropertyReport {
        property: "contraction-rate".to_string(),
        component: Some(j),
        parameters: [("alpha".to_string(), alpha)].into_iter().collect(),
        seed: 0,
        samples_tested: history.steps(),
        tolerance: 0.0,
        max_violation,
        witness: if verdict == Verdict::Fail { witness } else { None },
        verdict,
        note: match verdict {
            Verdict::Pass => "rate inequality holds at every recorded iteration".to_string(),
            Verdict::Fail => "rate inequality violated".to_string(),
        },
    })
}

/// One Cimmino step `x + lambda sum_i w_i ((b_i - <a^i,x>)/||a^i||^2) a^i`
/// with simplex weights.
pub fn cimmino_step(system: &LinearSystem, weights: &[f64], lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
    if weights.len() != system.row_count() {
        return Err(Error::Parameter(format!(
            "got {} weights for {} rows",
            weights.len(),
            system.row_count()
        )));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::Parameter("cimmino weights must lie on the simplex".into()));
    }
    check_lambda(lambda)?;
    if x.len() != system.col_count() {
        return Err(Error::ShapeMismatch(format!(
            "point has length {}, system has {} columns",
            x.len(),
            system.col_count()
        )));
    }
    let mut out = x.to_vec();
    for (i, row) in system.rows().iter().enumerate() {
        let scale = lambda * weights[i] * (system.rhs()[i] - row.dot(x)) / system.row_norm_sq(i);
        for &(col, val) in row.entries() {
            out[col] += scale * val;
        }
    }
    Ok(out)
}

/// One DROP step: `x_j += (lambda/s_j) sum_i ((b_i - <a^i,x>)/||a^i||^2) a_j^i`.
pub fn drop_step(
    system: &LinearSystem,
    sparsity: &crate::problems::SparsityProfile,
    lambda: f64,
    x: &[f64],
) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    if sparsity.counts().len() != system.col_count() {
        return Err(Error::ShapeMismatch(format!(
            "sparsity profile has {} entries for {} columns",
            sparsity.counts().len(),
            system.col_count()
        )));
    }
    if x.len() != system.col_count() {
        return Err(Error::ShapeMismatch(format!(
            "point has length {}, system has {} columns",
            x.len(),
            system.col_count()
        )));
    }
    let mut out = x.to_vec();
    for (i, row) in system.rows().iter().enumerate() {
        let scale = (system.rhs()[i] - row.dot(x)) / system.row_norm_sq(i);
        for &(col, val) in row.entries() {
            out[col] += lambda / sparsity.counts()[col] as f64 * scale * val;
        }
    }
    Ok(out)
}

/// One step of the general component-weighted iteration
/// `x_j += lambda sum_i w_ij ((T_i(x))_j - x_j)`, i.e. one application of the
/// component-weighted combination operator.
pub fn general_cw_step(
    ops: &[OperatorSpec],
    weights: &WeightMatrix,
    lambda: f64,
    x: &ProductVector,
    strict: bool,
) -> Result<ProductVector> {
    check_lambda(lambda)?;
    if ops.is_empty() || ops.len() != weights.rows() {
        return Err(Error::Weight(format!(
            "weight matrix has {} rows for {} operators",
            weights.rows(),
            ops.len()
        )));
    }
    if weights.cols() != x.structure().block_count() {
        return Err(Error::Weight(format!(
            "weight matrix has {} columns for {} components",
            weights.cols(),
            x.structure().block_count()
        )));
    }
    if strict && !weights.is_normalized() {
        return Err(Error::Weight("columns must sum to 1 in strict mode".into()));
    }
    let images = ops.iter().map(|t| t.apply(x)).collect::<Result<Vec<_>>>()?;
    let mut blocks: Vec<Vec<f64>> = x.blocks().to_vec();
    for (j, block) in blocks.iter_mut().enumerate() {
        let xj = x.block(j)?;
        for (c, out) in block.iter_mut().enumerate() {
            let mut sum = 0.0;
            for (i, image) in images.iter().enumerate() {
                sum += weights.get(i, j) * (image.block(j)?[c] - xj[c]);
            }
            *out = xj[c] + lambda * sum;
        }
    }
    ProductVector::new(x.structure().clone(), blocks)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 2.0) {
        return Err(Error::Parameter(format!("relaxation lambda {lambda} must lie in (0, 2)")));
    }
    Ok(())
}

/// Which iteration `solve` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Picard,
    Cimmino,
    Drop,
    GeneralCw,
}

/// Weight scheme for linear-system methods.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LinearWeights {
    /// Cimmino simplex weights, `w_i = 1/m` when omitted.
    Simplex {
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    /// DROP weights `w_ij = 1{a_j^i != 0}/s_j`.
    SupportNormalized,
}

/// Runs Cimmino on a linear system, viewing `R^n` as `n` scalar components.
pub fn solve_cimmino(
    system: &LinearSystem,
    weights: Option<&[f64]>,
    lambda: f64,
    x0: &[f64],
    stop: &StopRule,
    reference: Option<&[f64]>,
) -> Result<IterationHistory> {
    let equal = vec![1.0 / system.row_count() as f64; system.row_count()];
    let w = weights.unwrap_or(&equal).to_vec();
    solve_linear(system, x0, stop, reference, move |sys, x| {
        cimmino_step(sys, &w, lambda, x)
    })
}

/// Runs DROP on a linear system.
pub fn solve_drop(
    system: &LinearSystem,
    lambda: f64,
    x0: &[f64],
    stop: &StopRule,
    reference: Option<&[f64]>,
) -> Result<IterationHistory> {
    let sparsity = system.column_sparsity()?;
    solve_linear(system, x0, stop, reference, move |sys, x| {
        drop_step(sys, &sparsity, lambda, x)
    })
}

fn solve_linear<F>(
    system: &LinearSystem,
    x0: &[f64],
    stop: &StopRule,
    reference: Option<&[f64]>,
    step: F,
) -> Result<IterationHistory>
where
    F: Fn(&LinearSystem, &[f64]) -> Result<Vec<f64>>,
{
    let structure = BlockStructure::scalar(system.col_count())?;
    let x0 = ProductVector::from_flat(&structure, x0)?;
    let reference = reference
        .map(|z| ProductVector::from_flat(&structure, z))
        .transpose()?;
    let residual = |x: &ProductVector| system.relative_residual(&x.flatten());
    run_iteration(
        |x| {
            let next = step(system, &x.flatten())?;
            ProductVector::from_flat(&structure, &next)
        },
        &x0,
        stop,
        reference.as_ref(),
        Some(&residual),
    )
}

/// Runs the general component-weighted iteration with operator atoms.
pub fn solve_general_cw(
    ops: &[OperatorSpec],
    weights: &WeightMatrix,
    lambda: f64,
    x0: &ProductVector,
    stop: &StopRule,
    reference: Option<&ProductVector>,
) -> Result<IterationHistory> {
    run_iteration(
        |x| general_cw_step(ops, weights, lambda, x, true),
        x0,
        stop,
        reference,
        None,
    )
}

/// Outcome of the Fejér monitor: monotonicity of the full-space distance to
/// a reference point, plus the strong quasi-nonexpansivity telescoping
/// inequality when a positive `rho` applies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FejerReport {
    pub monotonicity: PropertyReport,
    /// Absent when `rho <= 0` (e.g. a pure reflection run is QNE only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub telescoping: Option<PropertyReport>,
    pub note: String,
}

impl FejerReport {
    pub fn passed(&self) -> bool {
        self.monotonicity.passed() && self.telescoping.as_ref().map_or(true, PropertyReport::passed)
    }
}

/// Verifies `||x^{k+1} - z|| <= ||x^k - z|| + 1e-10` along the trajectory
/// and, when `rho > 0`, the telescoping inequality
/// `||x^{k+1} - z||^2 <= ||x^k - z||^2 - rho ||x^{k+1} - x^k||^2`.
///
/// Note the distance is taken in the full product norm: componental
/// quasi-nonexpansivity of the driving operators guarantees monotone
/// full-space distances, not monotone block distances.
pub fn fejer_monitor(history: &IterationHistory, z: &ProductVector, rho: Option<f64>) -> Result<FejerReport> {
    let mut monotone_max = f64::NEG_INFINITY;
    let mut monotone_witness = None;
    let mut telescope_max = f64::NEG_INFINITY;
    let mut telescope_witness = None;
    let rho = rho.filter(|&r| r > 0.0);
    let mut tested = 0usize;
    for k in 1..history.iterates.len() {
        let prev = &history.iterates[k - 1];
        let cur = &history.iterates[k];
        let d_prev = prev.distance(z)?;
        let d_cur = cur.distance(z)?;
        tested += 1;
        let violation = d_cur - d_prev - 1e-10;
        if violation > monotone_max {
            monotone_max = violation;
            monotone_witness = Some(Witness {
                x: cur.clone(),
                y: None,
                z: Some(z.clone()),
                violation,
            });
        }
        if let Some(r) = rho {
            let step = cur.distance(prev)?;
            let violation = d_cur * d_cur + r * step * step - d_prev * d_prev - 1e-10;
            if violation > telescope_max {
                telescope_max = violation;
                telescope_witness = Some(Witness {
                    x: cur.clone(),
                    y: None,
                    z: Some(z.clone()),
                    violation,
                });
            }
        }
    }
    let build = |name: &str, max: f64, witness: Option<Witness>, parameters: BTreeMap<String, f64>| {
        let max = if tested == 0 { 0.0 } else { max };
        let verdict = if max > 0.0 { Verdict::Fail } else { Verdict::Pass };
        PropertyReport {
            property: name.to_string(),
            component: None,
            parameters,
            seed: 0,
            samples_tested: tested,
            tolerance: 0.0,
            max_violation: max,
            witness: if verdict == Verdict::Fail { witness } else { None },
            verdict,
            note: match verdict {
                Verdict::Pass => "holds at every recorded iteration".to_string(),
                Verdict::Fail => "violated on the recorded trajectory".to_string(),
            },
        }
    };
    let monotonicity = build("fejer-monotonicity", monotone_max, monotone_witness, BTreeMap::new());
    let telescoping = rho.map(|r| {
        build(
            "sqne-telescoping",
            telescope_max,
            telescope_witness,
            [("rho".to_string(), r)].into_iter().collect(),
        )
    });
    let note = if telescoping.is_some() {
        "monotonicity and SQNE telescoping checked".to_string()
    } else {
        "QNE only: rho is not positive, telescoping not asserted".to_string()
    };
    Ok(FejerReport {
        monotonicity,
        telescoping,
        note,
    })
}
