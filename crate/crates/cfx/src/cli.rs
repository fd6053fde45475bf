//! Batch front-end: certify operator properties, run solvers, compare DROP
//! against Cimmino, and emit CSV/JSON artifacts.
//!
//! Exit codes are a stable contract: 0 pass/converged, 1 property refuted,
//! 2 input error, 3 divergence.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::checks::{self, FixedPointCertificate, PropertyReport, SampleDistribution, Sampler, Verdict};
use crate::operators::{OperatorSpec, ValidationMode, WeightMatrix};
use crate::problems::{self, LinearSystem};
use crate::solvers::{self, IterationHistory, Method, StopRule};
use crate::space::{BlockStructure, ProductVector};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REFUTED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Parser)]
#[command(name = "cfx", about = "Componental operator property checks and projection solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a battery of componental property checks on an operator.
    Check(CommonArgs),
    /// Run a solver and export the iteration history.
    Solve(CommonArgs),
    /// Run DROP and Cimmino side by side on one system.
    Compare(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the iteration cap.
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
}

/// Parses argv and runs; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Check(args) => cmd_check(&args),
        Command::Solve(args) => cmd_solve(&args),
        Command::Compare(args) => cmd_compare(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("cfx: {e}");
            classify_error(&e)
        }
    }
}

fn classify_error(e: &Error) -> i32 {
    match e {
        Error::Diverged { .. } => EXIT_DIVERGED,
        _ => EXIT_INPUT,
    }
}

fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Paths inside a config resolve relative to the config file.
fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(p)
    }
}

/// Writes atomically: temp file in the target directory, then rename.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SamplerConfig {
    seed: u64,
    #[serde(default = "default_count")]
    count: usize,
    #[serde(default = "default_distribution")]
    distribution: SampleDistribution,
}

fn default_count() -> usize {
    checks::DEFAULT_SAMPLES
}

fn default_distribution() -> SampleDistribution {
    SampleDistribution::UniformBox { lo: -10.0, hi: 10.0 }
}

fn default_tolerance() -> f64 {
    checks::DEFAULT_TOLERANCE
}

impl SamplerConfig {
    fn build(&self, seed_override: Option<u64>) -> Result<Sampler> {
        Sampler::new(seed_override.unwrap_or(self.seed), self.distribution, self.count)
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum CheckRequest {
    JNe { j: usize },
    GlobalNe,
    JFne { j: usize },
    JRfne { j: usize, lambda: f64 },
    JAveraged { j: usize, alpha: f64 },
    JCutter { j: usize },
    JQne { j: usize },
    JSqne { j: usize, rho: f64 },
    JSqneStrict { j: usize },
    JContraction { j: usize, alpha: f64 },
    GlobalContraction { alpha: f64 },
    FneEquivalence { j: usize },
    Locality { j: usize },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckConfig {
    operator: PathBuf,
    structure: Vec<usize>,
    checks: Vec<CheckRequest>,
    sampler: SamplerConfig,
    #[serde(default = "default_tolerance")]
    tolerance: f64,
    /// Flat coordinates of certified fixed points, needed by the
    /// cutter/QNE/SQNE family.
    #[serde(default)]
    fixed_points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    permissive: bool,
    #[serde(default)]
    out: Option<PathBuf>,
}

fn cmd_check(args: &CommonArgs) -> Result<i32> {
    let config: CheckConfig = load_config(&args.config)?;
    let out_dir = args
        .out
        .clone()
        .or(config.out.as_ref().map(|p| resolve(&args.config, p)))
        .unwrap_or_else(|| PathBuf::from("."));
    let structure = BlockStructure::new(config.structure.clone())?;
    let op: OperatorSpec = load_config(&resolve(&args.config, &config.operator))?;
    let mode = if config.permissive {
        ValidationMode::Permissive
    } else {
        ValidationMode::Strict
    };
    op.validate(&structure, mode)?;
    let sampler = config.sampler.build(args.seed)?;
    let tol = config.tolerance;
    let cert = config
        .fixed_points
        .as_ref()
        .map(|points| {
            let points = points
                .iter()
                .map(|p| ProductVector::from_flat(&structure, p))
                .collect::<Result<Vec<_>>>()?;
            Ok::<_, Error>(FixedPointCertificate::new(points, tol))
        })
        .transpose()?;
    let need_cert = || {
        cert.clone()
            .ok_or_else(|| Error::Parameter("this check needs fixed_points in the config".into()))
    };

    let apply = checks::op_fn(&op);
    let mut reports = Vec::new();
    for request in &config.checks {
        let report = match request {
            CheckRequest::JNe { j } => checks::check_j_nonexpansive(&apply, &structure, *j, &sampler, tol)?,
            CheckRequest::GlobalNe => checks::check_nonexpansive_global(&apply, &structure, &sampler, tol)?,
            CheckRequest::JFne { j } => checks::check_j_fne(&apply, &structure, *j, &sampler, tol)?,
            CheckRequest::JRfne { j, lambda } => {
                checks::check_j_rfne(&apply, &structure, *j, *lambda, &sampler, tol)?
            }
            CheckRequest::JAveraged { j, alpha } => {
                checks::check_j_averaged(&apply, &structure, *j, *alpha, &sampler, tol)?
            }
            CheckRequest::JCutter { j } => {
                checks::check_j_cutter(&apply, &structure, *j, &need_cert()?, &sampler, tol)?
            }
            CheckRequest::JQne { j } => {
                checks::check_j_qne(&apply, &structure, *j, &need_cert()?, &sampler, tol)?
            }
            CheckRequest::JSqne { j, rho } => {
                checks::check_j_sqne(&apply, &structure, *j, *rho, &need_cert()?, &sampler, tol)?
            }
            CheckRequest::JSqneStrict { j } => {
                checks::check_j_sqne_strict(&apply, &structure, *j, &need_cert()?, &sampler, tol)?
            }
            CheckRequest::JContraction { j, alpha } => {
                let modulus = checks::estimate_contraction_modulus(&apply, &structure, *j, &sampler)?;
                contraction_report(Some(*j), *alpha, modulus, &sampler, tol)
            }
            CheckRequest::GlobalContraction { alpha } => {
                let modulus = checks::estimate_contraction_modulus_global(&apply, &structure, &sampler)?;
                contraction_report(None, *alpha, modulus, &sampler, tol)
            }
            CheckRequest::FneEquivalence { j } => {
                let battery = checks::check_fne_equivalence_battery(&apply, &structure, *j, &sampler, tol)?;
                reports.extend(battery.reports);
                continue;
            }
            CheckRequest::Locality { j } => {
                checks::check_component_locality(&apply, &structure, *j, &sampler, tol)?
            }
        };
        reports.push(report);
    }

    let mut all_pass = true;
    for (idx, report) in reports.iter().enumerate() {
        let name = format!("report_{idx:02}_{}.json", report.property);
        write_json(&out_dir.join(name), report)?;
        if !report.passed() {
            all_pass = false;
            if let Some(witness) = &report.witness {
                write_json(&out_dir.join(format!("witness_{idx:02}.json")), witness)?;
            }
        }
    }
    let summary: Vec<_> = reports
        .iter()
        .map(|r| {
            serde_json::json!({
                "property": r.property,
                "component": r.component,
                "verdict": r.verdict,
                "max_violation": r.max_violation,
            })
        })
        .collect();
    write_json(&out_dir.join("check_summary.json"), &summary)?;
    for r in &reports {
        println!(
            "{}: {} (max violation {:.3e})",
            r.property,
            if r.passed() { "pass" } else { "FAIL" },
            r.max_violation
        );
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_REFUTED })
}

fn contraction_report(
    component: Option<usize>,
    alpha: f64,
    modulus: f64,
    sampler: &Sampler,
    tol: f64,
) -> PropertyReport {
    let verdict = if modulus > alpha + tol { Verdict::Fail } else { Verdict::Pass };
    PropertyReport {
        property: match component {
            Some(_) => "j-contraction".to_string(),
            None => "contraction".to_string(),
        },
        component,
        parameters: [
            ("alpha".to_string(), alpha),
            ("estimated_modulus".to_string(), modulus),
        ]
        .into_iter()
        .collect(),
        seed: sampler.seed(),
        samples_tested: sampler.count(),
        tolerance: tol,
        max_violation: modulus - alpha,
        witness: None,
        verdict,
        note: match verdict {
            Verdict::Pass => "no counterexample found under this sampler".to_string(),
            Verdict::Fail => "sampled modulus exceeds the claimed bound".to_string(),
        },
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemPaths {
    matrix: PathBuf,
    rhs: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateSpec {
    m: usize,
    n: usize,
    density: f64,
    seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StopConfig {
    #[serde(default = "default_max_iterations")]
    max_iterations: usize,
    #[serde(default = "default_step_tol")]
    step_tol: f64,
    #[serde(default)]
    residual_tol: Option<f64>,
}

fn default_max_iterations() -> usize {
    solvers::DEFAULT_MAX_ITERATIONS
}

fn default_step_tol() -> f64 {
    solvers::DEFAULT_STEP_TOL
}

impl StopConfig {
    fn build(&self, max_iter_override: Option<usize>) -> Result<StopRule> {
        let mut rule = StopRule::new(max_iter_override.unwrap_or(self.max_iterations), self.step_tol)?;
        if let Some(tol) = self.residual_tol {
            rule = rule.with_residual_tol(tol)?;
        }
        Ok(rule)
    }
}

impl Default for StopConfig {
    fn default() -> Self {
        Self {
            max_iterations: default_max_iterations(),
            step_tol: default_step_tol(),
            residual_tol: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightMatrixConfig {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveConfig {
    method: Method,
    #[serde(default)]
    system: Option<SystemPaths>,
    #[serde(default)]
    generate: Option<GenerateSpec>,
    /// Picard: path to the operator JSON. General CW: paths to the child
    /// operator JSON files.
    #[serde(default)]
    operator: Option<PathBuf>,
    #[serde(default)]
    operators: Option<Vec<PathBuf>>,
    #[serde(default)]
    structure: Option<Vec<usize>>,
    #[serde(default)]
    lambda: Option<f64>,
    /// Cimmino row weights; equal weights when omitted.
    #[serde(default)]
    weights: Option<Vec<f64>>,
    #[serde(default)]
    weight_matrix: Option<WeightMatrixConfig>,
    /// Start vector: plain text (linear methods: one decimal per line;
    /// operator methods: block text format). Zeros when omitted.
    #[serde(default)]
    x0: Option<PathBuf>,
    #[serde(default)]
    stop: Option<StopConfig>,
    #[serde(default)]
    out: Option<PathBuf>,
}

fn load_system(
    config_path: &Path,
    system: &Option<SystemPaths>,
    generate: &Option<GenerateSpec>,
    seed_override: Option<u64>,
) -> Result<(LinearSystem, Option<Vec<f64>>)> {
    match (system, generate) {
        (Some(paths), _) => {
            let matrix_file = fs::File::open(resolve(config_path, &paths.matrix))?;
            let (m, n, entries) = problems::read_matrix_market(BufReader::new(matrix_file))?;
            let rhs_file = fs::File::open(resolve(config_path, &paths.rhs))?;
            let rhs = problems::read_dense_vector(BufReader::new(rhs_file))?;
            Ok((problems::system_from_coordinates(m, n, &entries, rhs)?, None))
        }
        (None, Some(g)) => {
            let (system, planted) =
                problems::plant_consistent_system(g.m, g.n, g.density, seed_override.unwrap_or(g.seed))?;
            Ok((system, Some(planted)))
        }
        (None, None) => Err(Error::Parameter("config needs either system paths or a generate block".into())),
    }
}

#[derive(Serialize)]
struct SolveSummary {
    method: Method,
    iterations: usize,
    stop_reason: solvers::StopReason,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_residual: Option<f64>,
    final_max_step: f64,
}

fn write_history(out_dir: &Path, history: &IterationHistory, method: Method) -> Result<()> {
    write_atomic(&out_dir.join("history.csv"), history.to_csv_string()?.as_bytes())?;
    let summary = SolveSummary {
        method,
        iterations: history.steps(),
        stop_reason: history.stop_reason,
        final_residual: history.final_residual(),
        final_max_step: history
            .per_component_steps
            .last()
            .map(|s| s.iter().cloned().fold(0.0, f64::max))
            .unwrap_or(0.0),
    };
    write_json(&out_dir.join("solve_summary.json"), &summary)
}

fn cmd_solve(args: &CommonArgs) -> Result<i32> {
    let config: SolveConfig = load_config(&args.config)?;
    let out_dir = args
        .out
        .clone()
        .or(config.out.as_ref().map(|p| resolve(&args.config, p)))
        .unwrap_or_else(|| PathBuf::from("."));
    let stop = config.stop.as_ref().unwrap_or(&StopConfig::default()).build(args.max_iter)?;
    let lambda = config.lambda.unwrap_or(1.0);

    let run = match config.method {
        Method::Picard => {
            let op_path = config
                .operator
                .as_ref()
                .ok_or_else(|| Error::Parameter("picard needs an operator path".into()))?;
            let op: OperatorSpec = load_config(&resolve(&args.config, op_path))?;
            let dims = config
                .structure
                .clone()
                .ok_or_else(|| Error::Parameter("picard needs a structure".into()))?;
            let structure = BlockStructure::new(dims)?;
            op.validate(&structure, ValidationMode::Permissive)?;
            let x0 = match &config.x0 {
                Some(p) => ProductVector::from_text(&fs::read_to_string(resolve(&args.config, p))?)?,
                None => ProductVector::zeros(&structure),
            };
            solvers::picard(&op, &x0, &stop)
        }
        Method::Cimmino | Method::Drop => {
            let (system, planted) = load_system(&args.config, &config.system, &config.generate, args.seed)?;
            let x0 = match &config.x0 {
                Some(p) => {
                    let f = fs::File::open(resolve(&args.config, p))?;
                    problems::read_dense_vector(BufReader::new(f))?
                }
                None => vec![0.0; system.col_count()],
            };
            match config.method {
                Method::Cimmino => solvers::solve_cimmino(
                    &system,
                    config.weights.as_deref(),
                    lambda,
                    &x0,
                    &stop,
                    planted.as_deref(),
                ),
                _ => solvers::solve_drop(&system, lambda, &x0, &stop, planted.as_deref()),
            }
        }
        Method::GeneralCw => {
            let paths = config
                .operators
                .as_ref()
                .ok_or_else(|| Error::Parameter("general-cw needs operator paths".into()))?;
            let ops = paths
                .iter()
                .map(|p| load_config::<OperatorSpec>(&resolve(&args.config, p)))
                .collect::<Result<Vec<_>>>()?;
            let wm = config
                .weight_matrix
                .as_ref()
                .ok_or_else(|| Error::Parameter("general-cw needs a weight_matrix".into()))?;
            let weights = WeightMatrix::new(wm.rows, wm.cols, wm.entries.clone())?;
            let dims = config
                .structure
                .clone()
                .ok_or_else(|| Error::Parameter("general-cw needs a structure".into()))?;
            let structure = BlockStructure::new(dims)?;
            for op in &ops {
                op.validate(&structure, ValidationMode::Permissive)?;
            }
            let x0 = match &config.x0 {
                Some(p) => ProductVector::from_text(&fs::read_to_string(resolve(&args.config, p))?)?,
                None => ProductVector::zeros(&structure),
            };
            solvers::solve_general_cw(&ops, &weights, lambda, &x0, &stop, None)
        }
    };

    match run {
        Ok(history) => {
            write_history(&out_dir, &history, config.method)?;
            println!(
                "{:?}: {} iterations, stop reason {:?}",
                config.method,
                history.steps(),
                history.stop_reason
            );
            Ok(EXIT_OK)
        }
        Err(Error::Diverged { iterations, history }) => {
            write_history(&out_dir, &history, config.method)?;
            eprintln!("cfx: diverged after {iterations} iterations; partial history written");
            Ok(EXIT_DIVERGED)
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareConfig {
    #[serde(default)]
    system: Option<SystemPaths>,
    #[serde(default)]
    generate: Option<GenerateSpec>,
    #[serde(default)]
    lambda: Option<f64>,
    #[serde(default = "default_target_residual")]
    target_residual: f64,
    #[serde(default)]
    stop: Option<StopConfig>,
    #[serde(default)]
    out: Option<PathBuf>,
}

fn default_target_residual() -> f64 {
    1e-3
}

#[derive(Serialize)]
struct CompareSummary {
    target_residual: f64,
    drop_iterations_to_target: Option<usize>,
    cimmino_iterations_to_target: Option<usize>,
    drop_final_residual: Option<f64>,
    cimmino_final_residual: Option<f64>,
}

fn cmd_compare(args: &CommonArgs) -> Result<i32> {
    let config: CompareConfig = load_config(&args.config)?;
    let out_dir = args
        .out
        .clone()
        .or(config.out.as_ref().map(|p| resolve(&args.config, p)))
        .unwrap_or_else(|| PathBuf::from("."));
    let stop = config.stop.as_ref().unwrap_or(&StopConfig::default()).build(args.max_iter)?;
    let lambda = config.lambda.unwrap_or(1.0);
    let (system, planted) = load_system(&args.config, &config.system, &config.generate, args.seed)?;
    let x0 = vec![0.0; system.col_count()];

    let drop = solvers::solve_drop(&system, lambda, &x0, &stop, planted.as_deref())?;
    let cimmino = solvers::solve_cimmino(&system, None, lambda, &x0, &stop, planted.as_deref())?;

    // side-by-side residual curves; exhausted runs leave blanks
    let drop_res = drop.residuals.as_ref().expect("linear run records residuals");
    let cim_res = cimmino.residuals.as_ref().expect("linear run records residuals");
    let mut csv = String::from("k,drop_residual,cimmino_residual\n");
    for k in 0..drop_res.len().max(cim_res.len()) {
        let d = drop_res.get(k).map(|v| format!("{v:.16e}")).unwrap_or_default();
        let c = cim_res.get(k).map(|v| format!("{v:.16e}")).unwrap_or_default();
        csv.push_str(&format!("{k},{d},{c}\n"));
    }
    write_atomic(&out_dir.join("compare.csv"), csv.as_bytes())?;

    let summary = CompareSummary {
        target_residual: config.target_residual,
        drop_iterations_to_target: drop.first_residual_below(config.target_residual),
        cimmino_iterations_to_target: cimmino.first_residual_below(config.target_residual),
        drop_final_residual: drop.final_residual(),
        cimmino_final_residual: cimmino.final_residual(),
    };
    write_json(&out_dir.join("compare_summary.json"), &summary)?;
    println!(
        "drop reaches {:.1e} at k={:?}; cimmino at k={:?}",
        config.target_residual, summary.drop_iterations_to_target, summary.cimmino_iterations_to_target
    );
    Ok(EXIT_OK)
}
