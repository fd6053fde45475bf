//! Sampling-based certification and refutation of componental operator
//! properties.
//!
//! A check draws reproducible samples, evaluates the defining inequality of a
//! property, and reports the worst residual together with a witness when the
//! property is refuted. A `Pass` verdict only means that no counterexample
//! was found under the given sampler; it is not a proof.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::operators::OperatorSpec;
use crate::space::{dot, BlockStructure, ProductVector};
use crate::{Error, Result};

/// Default absolute tolerance on inequality residuals.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Default number of samples.
pub const DEFAULT_SAMPLES: usize = 1000;

/// How sample coordinates are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SampleDistribution {
    UniformBox { lo: f64, hi: f64 },
    Gaussian { sigma: f64 },
}

/// Reproducible sample source: identical seed, identical stream.
///
/// Pinned pairs are yielded before the random stream, so a check can be
/// forced to visit specific points.
#[derive(Debug, Clone)]
pub struct Sampler {
    seed: u64,
    distribution: SampleDistribution,
    count: usize,
    pinned_pairs: Vec<(ProductVector, ProductVector)>,
}

impl Sampler {
    pub fn new(seed: u64, distribution: SampleDistribution, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::Sampling("sample count must be at least 1".into()));
        }
        match distribution {
            SampleDistribution::UniformBox { lo, hi } if !(lo < hi) => {
                return Err(Error::Sampling(format!("uniform box needs lo < hi, got [{lo}, {hi}]")));
            }
            SampleDistribution::Gaussian { sigma } if !(sigma > 0.0) => {
                return Err(Error::Sampling("gaussian sigma must be positive".into()));
            }
            _ => {}
        }
        Ok(Self {
            seed,
            distribution,
            count,
            pinned_pairs: Vec::new(),
        })
    }

    /// Uniform on `[-10, 10]` per coordinate, the default checking box.
    pub fn uniform(seed: u64, count: usize) -> Result<Self> {
        Self::new(seed, SampleDistribution::UniformBox { lo: -10.0, hi: 10.0 }, count)
    }

    pub fn with_pinned_pairs(mut self, pairs: Vec<(ProductVector, ProductVector)>) -> Self {
        self.pinned_pairs = pairs;
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn count(&self) -> usize {
        self.count
    }

    fn draw(&self, rng: &mut ChaCha8Rng, structure: &BlockStructure) -> ProductVector {
        let coords: Vec<f64> = (0..structure.total_dim())
            .map(|_| match self.distribution {
                SampleDistribution::UniformBox { lo, hi } => rng.gen_range(lo..hi),
                SampleDistribution::Gaussian { sigma } => {
                    Normal::new(0.0, sigma).expect("validated sigma").sample(rng)
                }
            })
            .collect();
        ProductVector::from_flat(structure, &coords).expect("matching length by construction")
    }

    /// Pinned pairs first, then `count` random pairs.
    pub fn pairs(&self, structure: &BlockStructure) -> Result<Vec<(ProductVector, ProductVector)>> {
        for (x, y) in &self.pinned_pairs {
            if x.structure() != structure || y.structure() != structure {
                return Err(Error::ShapeMismatch("pinned pair has a foreign structure".into()));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = self.pinned_pairs.clone();
        out.extend((0..self.count).map(|_| (self.draw(&mut rng, structure), self.draw(&mut rng, structure))));
        Ok(out)
    }

    /// Pinned pair members first, then `count` random points.
    pub fn points(&self, structure: &BlockStructure) -> Result<Vec<ProductVector>> {
        let mut out = Vec::new();
        for (x, y) in &self.pinned_pairs {
            if x.structure() != structure || y.structure() != structure {
                return Err(Error::ShapeMismatch("pinned pair has a foreign structure".into()));
            }
            out.push(x.clone());
            out.push(y.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        out.extend((0..self.count).map(|_| self.draw(&mut rng, structure)));
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// The worst sample found by a check. `y` is the second point of a pair
/// check, `z` the certificate point of a fixed-point check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub x: ProductVector,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<ProductVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<ProductVector>,
    pub violation: f64,
}

/// Outcome of one property check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub component: Option<usize>,
    pub parameters: BTreeMap<String, f64>,
    pub seed: u64,
    pub samples_tested: usize,
    pub tolerance: f64,
    pub max_violation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub verdict: Verdict,
    pub note: String,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Aggregates residuals into a report; ties in the max are broken by the
/// lowest sample index, so the witness is deterministic.
struct ViolationTracker {
    max: f64,
    witness: Option<Witness>,
    tested: usize,
}

impl ViolationTracker {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            witness: None,
            tested: 0,
        }
    }

    fn record(&mut self, violation: f64, x: &ProductVector, y: Option<&ProductVector>, z: Option<&ProductVector>) {
        self.tested += 1;
        if violation > self.max {
            self.max = violation;
            self.witness = Some(Witness {
                x: x.clone(),
                y: y.cloned(),
                z: z.cloned(),
                violation,
            });
        }
    }

    fn finish(
        self,
        property: &str,
        component: Option<usize>,
        parameters: BTreeMap<String, f64>,
        sampler: &Sampler,
        tol: f64,
    ) -> PropertyReport {
        let max_violation = if self.tested == 0 { 0.0 } else { self.max };
        let verdict = if max_violation > tol { Verdict::Fail } else { Verdict::Pass };
        PropertyReport {
            property: property.to_string(),
            component,
            parameters,
            seed: sampler.seed(),
            samples_tested: self.tested,
            tolerance: tol,
            max_violation,
            witness: if verdict == Verdict::Fail { self.witness } else { None },
            verdict,
            note: match verdict {
                Verdict::Pass => "no counterexample found under this sampler".to_string(),
                Verdict::Fail => "witness violates the defining inequality".to_string(),
            },
        }
    }
}

/// A finite list of points certified to lie (componentally) in the fixed
/// point set of an operator, up to `tolerance`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedPointCertificate {
    pub points: Vec<ProductVector>,
    pub tolerance: f64,
}

impl FixedPointCertificate {
    pub fn new(points: Vec<ProductVector>, tolerance: f64) -> Self {
        Self { points, tolerance }
    }

    /// Checks every point against `Fix^j T` before use.
    pub fn verify_component<F>(&self, op: F, j: usize) -> Result<()>
    where
        F: Fn(&ProductVector) -> Result<ProductVector>,
    {
        if self.points.is_empty() {
            return Err(Error::Parameter("fixed point certificate is empty".into()));
        }
        for (idx, z) in self.points.iter().enumerate() {
            let r = fix_j_residual(&op, z, j)?;
            if r > self.tolerance {
                return Err(Error::Parameter(format!(
                    "certificate point {idx} has component-{j} fixed point residual {r:e} > {:e}",
                    self.tolerance
                )));
            }
        }
        Ok(())
    }
}

/// `||(T(x))_j - x_j||_j`; zero iff `x` is a component-`j` fixed point (up
/// to floating error).
pub fn fix_j_residual<F>(op: F, x: &ProductVector, j: usize) -> Result<f64>
where
    F: Fn(&ProductVector) -> Result<ProductVector>,
{
    x.block(j)?;
    let image = op(x)?;
    image.component_distance(x, j)
}

fn block_diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn params(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
    entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Definition of `j`-nonexpansivity over sampled pairs.
pub fn check_j_nonexpansive<F>(
    op: F,
    structure: &BlockStructure,
    j: usize,
    sampler: &Sampler,
    tol: f64,
) -> Result<PropertyReport>
where
    F: Fn(&ProductVector) -> Result<ProductVector>,
{
    structure.dim(j)?;
    let mut tracker = ViolationTracker::new();
    for (x, y) in sampler.pairs(structure)? {
        let tx = op(&x)?;
        let ty = op(&y)?;
        let violation = tx.component_distance(&ty, j)? - x.component_distance(&y, j)?;
        tracker.record(violation, &x, Some(&y), None);
    }
    Ok(tracker.finish("j-nonexpansive", Some(j), params(&[]), sampler, tol))
}

/// Full-space nonexpansivity `||Tx - Ty|| <= ||x - y||`.
pub fn check_nonexpansive_global<F>(
    op: F,
    structure: &BlockStructure,
    sampler: &Sampler,
    tol: f64,
) -> Result<PropertyReport>
where
    F: Fn(&ProductVector) -> Result<ProductVector>,
{
    let mut tracker = ViolationTracker::new();
    for (x, y) in sampler.pairs(structure)? {
        let tx = op(&x)?;
        let ty = op(&y)?;
        let violation = tx.distance(&ty)? - x.distance(&y)?;
        tracker.record(violation, &x, Some(&y), None);
    }
    Ok(tracker.finish("nonexpansive", None, params(&[]), sampler, tol))
}

/// Definition of `j`-firm nonexpansivity:
/// `<Tx_j - Ty_j, x_j - y_j> >= ||Tx_j - Ty_j||^2`.
pub fn check_j_fne<F>(
    op: F,
    structure: &BlockStructure,
    j: usize,
    sampler: &Sampler,
    tol: f64,
) -> Result<PropertyReport>
where
    F: Fn(&ProductVector) -> Result<ProductVector>,
{
    structure.dim(j)?;
    let mut tracker = ViolationTracker::new();
    for (x, y) in sampler.pairs(structure)? {
        let tx = op(&x)?;
        let ty = op(&y)?;
        let dt: Vec<f64> = tx.block(j)?.iter().zip(ty.block(j)?).map(|(a, b)| a - b).collect();
        let dx: Vec<f64> = x.block(j)?.iter().zip(y.block(j)?).map(|(a, b)| a - b).collect();
        let violation = dot(&dt, &dt) - dot(&dt, &dx);
        tracker.record(violation, &x, Some(&y), None);
    }
    Ok(tracker.finish("j-firmly-nonexpansive", Some(j), params(&[]), sampler, tol))
}

/// `(lambda, j)`-relaxed firm nonexpansivity, decided constructively: form
/// `U = Id + (1/lambda)(T - Id)` and test `U` for `j`-FNE.
pub fn check_j_rfne<F>(
    op: F,
    structure: &BlockStructure,
    j: usize,
    lambda: f64,
    sampler: &Sampler,
    tol: f64,
) -> Result<PropertyReport>
where
    F: Fn(&ProductVector) -> Result<ProductVector>,
{
    if !(lambda > 0.0 && lambda <= 2.0) {
        return Err(Error::Parameter(format!("rfne lambda {lambda} must lie in (0, 2]")));
    }
    let unrelaxed = |x: &ProductVector| -> Result<ProductVector> {
        let tx = op(x)?;
        x.lerp(&tx, 1.0 / lambda)
    };
    let mut report = check_j_fne(unrelaxed, structure, j, sampler, tol)?;
    report.property = "j-relaxed-firmly-nonexpansive".to_string();
    report.parameters = params(&[("lambda", lambda)]);
    Ok(report)
}

/// `(alpha, j)`-averagedness, decided constructively: form
/// `U = Id + (1/alpha)(T - Id)` and test `U` for `j`-NE.
pub fn check_j_averaged<F>(
    op: F,
    structure: &BlockStructure,
    j: usize,
    alpha: f64,
    sampler: &Sampler,
    tol: f64,
) -> Result<PropertyReport>
where
    F: Fn(&ProductVector) -> Result<ProductVector>,
{
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("averaging alpha {alpha} must lie in (0, 1)")));
    }
    let unaveraged = |x: &ProductVector| -> Result<ProductVector> {
        let tx = op(x)?;
        x.lerp(&tx, 1.0 / alpha)
    };
    let mut report = check_j_nonexpansive(unaveraged, structure, j, sampler, tol)?;
    report.property = "j-averaged".to_string();
    report.parameters = params(&[("alpha", alpha)]);
    Ok(report)
}

/// `j`-cutter: `<x_j - Tx_j, z_j - Tx_j> <= 0` for certified `z`.
pub fn check_j_cutter<F>(
    op: F,
    structure: &BlockStructure,
    j: usize,
    cert: &FixedPointCertificate,
    sampler: &Sampler,
    tol: f64,
) -> Result<PropertyReport>
where
    F: Fn(&ProductVector) -> Result<ProductVector>,
{
    structure.dim(j)?;
    cert.verify_component(&op, j)?;
    let mut tracker = ViolationTracker::new();
    for x in sampler.points(structure)? {
        let tx = op(&x)?;
        for z in &cert.points {
            let left: Vec<f64> = x.block(j)?.iter().zip(tx.block(j)?).map(|(a, b)| a - b).collect();
            let right: Vec<f64> = z.block(j)?.iter().zip(tx.block(j)?).map(|(a, b)| a - b).collect();
            let violation = dot(&left, &right);
            tracker.record(violation, &x, None, Some(z));
        }
    }
    Ok(tracker.finish("j-cutter", Some(j), params(&[]), sampler, tol))
}

/// `j`-quasi-nonexpansivity against certified fixed points.
pub fn check_j_qne<F>(
    op: F,
    structure: &BlockStructure,
    j: usize,
    cert: &FixedPointCertificate,
    sampler: &Sampler,
    tol: f64,
) -> Result<PropertyReport>
where
    F: Fn(&ProductVector) -> Result<ProductVector>,
{
    structure.dim(j)?;
    cert.verify_component(&op, j)?;
    let mut tracker = ViolationTracker::new();
    for x in sampler.points(structure)? {
        let tx = op(&x)?;
        for z in &cert.points {
            let violation = tx.component_distance(z, j)? - x.component_distance(z, j)?;
            tracker.record(violation, &x, None, Some(z));
        }
    }
    Ok(tracker.finish("j-quasi-nonexpansive", Some(j), params(&[]), sampler, tol))
}

/// `(rho_j, j)`-strong quasi-nonexpansivity:
/// `||Tx_j - z_j||^2 + rho_j ||Tx_j - x_j||^2 <= ||x_j - z_j||^2`.
pub fn check_j_sqne<F>(
    op: F,
    structure: &BlockStructure,
    j: usize,
    rho: f64,
    cert: &FixedPointCertificate,
    sampler: &Sampler,
    tol: f64,
) -> Result<PropertyReport>
where
    F: Fn(&ProductVector) -> Result<ProductVector>,
{
    if !(rho > 0.0) {
        return Err(Error::Parameter(format!("sqne rho {rho} must be positive")));
    }
    structure.dim(j)?;
    cert.verify_component(&op, j)?;
    let mut tracker = ViolationTracker::new();
    for x in sampler.points(structure)? {
        let tx = op(&x)?;
        let step = tx.component_distance(&x, j)?;
        for z in &cert.points {
            let violation = tx.component_distance(z, j)?.powi(2) + rho * step * step
                - x.component_distance(z, j)?.powi(2);
            tracker.record(violation, &x, None, Some(z));
        }
    }
    Ok(tracker.finish(
        "j-strongly-quasi-nonexpansive",
        Some(j),
        params(&[("rho", rho)]),
        sampler,
        tol,
    ))
}

/// Strict quasi-nonexpansivity: strict decrease for sampled `x` outside
/// `Fix^j T`. Numerically this demands
/// `||Tx_j - z_j||^2 + 1e-6 ||Tx_j - x_j||^2 <= ||x_j - z_j||^2`: the
/// decrease must be at least a sliver of the displacement, so mere equality
/// (as under a reflection) registers as a violation, while points close to
/// the fixed point set contribute vanishing violations.
pub fn check_j_sqne_strict<F>(
    op: F,
    structure: &BlockStructure,
    j: usize,
    cert: &FixedPointCertificate,
    sampler: &Sampler,
    tol: f64,
) -> Result<PropertyReport>
where
    F: Fn(&ProductVector) -> Result<ProductVector>,
{
    structure.dim(j)?;
    cert.verify_component(&op, j)?;
    let mut tracker = ViolationTracker::new();
    for x in sampler.points(structure)? {
        let resid = fix_j_residual(&op, &x, j)?;
        if resid <= tol {
            continue; // strictness is only required off the fixed point set
        }
        let tx = op(&x)?;
        for z in &cert.points {
            let dist = x.component_distance(z, j)?;
            let violation =
                tx.component_distance(z, j)?.powi(2) + 1e-6 * resid * resid - dist * dist;
            tracker.record(violation, &x, None, Some(z));
        }
    }
    Ok(tracker.finish("j-strictly-quasi-nonexpansive", Some(j), params(&[]), sampler, tol))
}

/// Membership of `z` in `F^j(T)`: `||Tx_j - z_j|| <= ||x_j - z_j||` for all
/// sampled `x` (the sample set always includes `x = z` itself).
pub fn check_fj_membership<F>(
    op: F,
    structure: &BlockStructure,
    z: &ProductVector,
    j: usize,
    sampler: &Sampler,
    tol: f64,
) -> Result<PropertyReport>
where
    F: Fn(&ProductVector) -> Result<ProductVector>,
{
    structure.dim(j)?;
    let mut points = vec![z.clone()];
    points.extend(sampler.points(structure)?);
    let mut tracker = ViolationTracker::new();
    for x in points {
        let tx = op(&x)?;
        let violation = tx.component_distance(z, j)? - x.component_distance(z, j)?;
        tracker.record(violation, &x, None, Some(z));
    }
    Ok(tracker.finish("fj-membership", Some(j), params(&[]), sampler, tol))
}

/// Sampled lower bound on the component-`j` Lipschitz modulus: the largest
/// ratio `||Tx_j - Ty_j|| / ||x_j - y_j||` over non-degenerate pairs.
pub fn estimate_contraction_modulus<F>(
    op: F,
    structure: &BlockStructure,
    j: usize,
    sampler: &Sampler,
) -> Result<f64>
where
    F: Fn(&ProductVector) -> Result<ProductVector>,
{
    structure.dim(j)?;
    let mut best: Option<f64> = None;
    for (x, y) in sampler.pairs(structure)? {
        let denom = x.component_distance(&y, j)?;
        if denom < 1e-12 {
            continue;
        }
        let num = op(&x)?.component_distance(&op(&y)?, j)?;
        let ratio = num / denom;
        best = Some(best.map_or(ratio, |b| b.max(ratio)));
    }
    best.ok_or_else(|| Error::Sampling("all sampled pairs were degenerate in the component".into()))
}

/// Full-space analogue of [`estimate_contraction_modulus`].
pub fn estimate_contraction_modulus_global<F>(
    op: F,
    structure: &BlockStructure,
    sampler: &Sampler,
) -> Result<f64>
where
    F: Fn(&ProductVector) -> Result<ProductVector>,
{
    let mut best: Option<f64> = None;
    for (x, y) in sampler.pairs(structure)? {
        let denom = x.distance(&y)?;
        if denom < 1e-12 {
            continue;
        }
        let ratio = op(&x)?.distance(&op(&y)?)? / denom;
        best = Some(best.map_or(ratio, |b| b.max(ratio)));
    }
    best.ok_or_else(|| Error::Sampling("all sampled pairs were degenerate".into()))
}

/// The five equivalent characterizations of `j`-firm nonexpansivity, checked
/// on common samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FneEquivalenceBattery {
    pub reports: Vec<PropertyReport>,
    /// False when the five verdicts disagree beyond sampling error.
    pub consistent: bool,
}

impl FneEquivalenceBattery {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(PropertyReport::passed)
    }
}

/// Runs the equivalence battery for `j`-FNE:
/// (i) `T` is `j`-FNE; (ii) every relaxation `T_lambda`, `lambda` in
/// `{0, 1/2, 1, 3/2, 2}`, is `j`-NE; (iii) `2T - Id` is `j`-NE;
/// (iv) `Id - T` is `j`-FNE; (v) the squared-norm inequality.
pub fn check_fne_equivalence_battery<F>(
    op: F,
    structure: &BlockStructure,
    j: usize,
    sampler: &Sampler,
    tol: f64,
) -> Result<FneEquivalenceBattery>
where
    F: Fn(&ProductVector) -> Result<ProductVector>,
{
    structure.dim(j)?;
    let mut reports = Vec::with_capacity(5);

    let mut fne = check_j_fne(&op, structure, j, sampler, tol)?;
    fne.property = "fne-equivalence-i-fne".to_string();
    reports.push(fne);

    // (ii): worst violation over the relaxation grid
    let mut tracker = ViolationTracker::new();
    let pairs = sampler.pairs(structure)?;
    for lambda in [0.0, 0.5, 1.0, 1.5, 2.0] {
        for (x, y) in &pairs {
            let tx = x.lerp(&op(x)?, lambda)?;
            let ty = y.lerp(&op(y)?, lambda)?;
            let violation = tx.component_distance(&ty, j)? - x.component_distance(y, j)?;
            tracker.record(violation, x, Some(y), None);
        }
    }
    reports.push(tracker.finish("fne-equivalence-ii-relaxations-ne", Some(j), params(&[]), sampler, tol));

    let reflection = |x: &ProductVector| -> Result<ProductVector> { x.lerp(&op(x)?, 2.0) };
    let mut refl = check_j_nonexpansive(reflection, structure, j, sampler, tol)?;
    refl.property = "fne-equivalence-iii-reflection-ne".to_string();
    reports.push(refl);

    let complement = |x: &ProductVector| -> Result<ProductVector> {
        // Id - T, built blockwise
        let tx = op(x)?;
        let blocks = x
            .blocks()
            .iter()
            .zip(tx.blocks())
            .map(|(xb, tb)| xb.iter().zip(tb).map(|(a, b)| a - b).collect())
            .collect();
        ProductVector::new(x.structure().clone(), blocks)
    };
    let mut comp = check_j_fne(complement, structure, j, sampler, tol)?;
    comp.property = "fne-equivalence-iv-complement-fne".to_string();
    reports.push(comp);

    // (v): ||Tx_j - Ty_j||^2 <= ||x_j - y_j||^2 - ||(x_j - Tx_j) - (y_j - Ty_j)||^2
    let mut tracker = ViolationTracker::new();
    for (x, y) in &pairs {
        let tx = op(x)?;
        let ty = op(y)?;
        let image_gap = tx.component_distance(&ty, j)?;
        let input_gap = x.component_distance(y, j)?;
        let rx: Vec<f64> = x.block(j)?.iter().zip(tx.block(j)?).map(|(a, b)| a - b).collect();
        let ry: Vec<f64> = y.block(j)?.iter().zip(ty.block(j)?).map(|(a, b)| a - b).collect();
        let residual_gap = block_diff_norm(&rx, &ry);
        let violation = image_gap * image_gap - (input_gap * input_gap - residual_gap * residual_gap);
        tracker.record(violation, x, Some(y), None);
    }
    reports.push(tracker.finish("fne-equivalence-v-inequality", Some(j), params(&[]), sampler, tol));

    let first = reports[0].passed();
    let consistent = reports.iter().all(|r| r.passed() == first);
    Ok(FneEquivalenceBattery { reports, consistent })
}

/// Does component `j` of the image depend only on `x_j`? Pairs of samples
/// that agree in block `j` but differ elsewhere must map to the same block
/// `j` image.
pub fn check_component_locality<F>(
    op: F,
    structure: &BlockStructure,
    j: usize,
    sampler: &Sampler,
    tol: f64,
) -> Result<PropertyReport>
where
    F: Fn(&ProductVector) -> Result<ProductVector>,
{
    structure.dim(j)?;
    let mut tracker = ViolationTracker::new();
    for (x, other) in sampler.pairs(structure)? {
        // copy block j of x into the perturbed point
        let mut blocks: Vec<Vec<f64>> = other.blocks().to_vec();
        blocks[j] = x.block(j)?.to_vec();
        let perturbed = ProductVector::new(structure.clone(), blocks)?;
        let violation = op(&x)?.component_distance(&op(&perturbed)?, j)?;
        tracker.record(violation, &x, Some(&perturbed), None);
    }
    Ok(tracker.finish("component-locality", Some(j), params(&[]), sampler, tol))
}

/// Adapter: use an [`OperatorSpec`] wherever the checks expect a closure.
pub fn op_fn(spec: &OperatorSpec) -> impl Fn(&ProductVector) -> Result<ProductVector> + '_ {
    move |x| spec.apply(x)
}
