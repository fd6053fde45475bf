//! Acceptance gate: one test per criterion, each printing a single
//! `criterion N: pass|FAIL` line (visible under `--nocapture`).
//!
//! Criterion 7's componental-monotonicity clause is genuinely refuted by the
//! library (see that test's comments); the suite records the refutation as a
//! pinned finding instead of hiding it.

use cfx::checks::{
    check_fne_equivalence_battery, check_j_nonexpansive, check_j_sqne, check_nonexpansive_global,
    estimate_contraction_modulus, estimate_contraction_modulus_global, op_fn,
    FixedPointCertificate, Sampler,
};
use cfx::operators::{project_hyperplane, OperatorSpec};
use cfx::problems::{drop_weights, plant_consistent_system, DropWeightScheme};
use cfx::solvers::{
    contraction_bounds, drop_step, general_cw_step, picard, rate_check, solve_cimmino, solve_drop,
    StopRule,
};
use cfx::space::{BlockStructure, ProductVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seed of the pinned 200x100, density-0.05 planted instance used by
/// criteria 7-9. Chosen so every column support satisfies `s_j <= 20`.
const FIXTURE_SEED: u64 = 1;
/// Regression pins recorded from the fixture (lambda = 1, x0 = 0).
const PINNED_DROP_TO_1E3: usize = 205;
const PINNED_CIMMINO_TO_1E3: usize = 5816;

fn verdict(n: usize, pass: bool, detail: &str) {
    println!("criterion {n}: {} — {detail}", if pass { "pass" } else { "FAIL" });
}

#[test]
fn criterion_1_hyperplane_projection_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..1000 {
        let d = rng.gen_range(1..=20);
        let a: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
        if a.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-6 {
            continue;
        }
        let b: f64 = rng.gen_range(-10.0..10.0);
        let z: Vec<f64> = (0..d).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let p = project_hyperplane(&a, b, &z).unwrap();
        let residual = a.iter().zip(&p).map(|(ai, pi)| ai * pi).sum::<f64>() - b;
        assert!(
            residual.abs() <= 1e-10 * (1.0 + b.abs()),
            "feasibility residual {residual}"
        );
        let pp = project_hyperplane(&a, b, &p).unwrap();
        let drift = p
            .iter()
            .zip(&pp)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        assert!(drift <= 1e-12, "idempotence drift {drift}");
    }
    verdict(1, true, "1000 random hyperplane projections feasible and idempotent");
}

#[test]
fn criterion_2_relaxed_projections_are_sqne_with_matching_rho() {
    let structure = BlockStructure::new(vec![2]).unwrap();
    let plane = OperatorSpec::hyperplane(vec![3.0, 4.0], 5.0).unwrap();
    let z = ProductVector::from_flat(&structure, &[3.0 / 5.0, 4.0 / 5.0]).unwrap();
    let cert = FixedPointCertificate::new(vec![z], 1e-9);
    let mut worst = f64::NEG_INFINITY;
    for (i, lambda) in [0.5, 1.0, 1.5, 1.9].into_iter().enumerate() {
        let relaxed = plane.clone().relaxed(lambda).unwrap();
        let rho = (2.0 - lambda) / lambda;
        let sampler = Sampler::uniform(200 + i as u64, 1000).unwrap();
        let report = check_j_sqne(op_fn(&relaxed), &structure, 0, rho, &cert, &sampler, 1e-9).unwrap();
        assert!(
            report.passed(),
            "lambda {lambda}: max violation {}",
            report.max_violation
        );
        worst = worst.max(report.max_violation);
    }
    verdict(
        2,
        true,
        &format!("relaxations at rho=(2-l)/l pass; worst violation {worst:.2e}"),
    );
}

#[test]
fn criterion_3_fne_equivalence_battery() {
    let structure = BlockStructure::new(vec![3]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for trial in 0..20 {
        let a: Vec<f64> = (0..3).map(|_| rng.gen_range(0.5..3.0)).collect();
        let b: f64 = rng.gen_range(-5.0..5.0);
        let plane = OperatorSpec::hyperplane(a, b).unwrap();
        let sampler = Sampler::uniform(300 + trial, 200).unwrap();
        let battery = check_fne_equivalence_battery(op_fn(&plane), &structure, 0, &sampler, 1e-9).unwrap();
        assert!(battery.all_pass(), "trial {trial}");
        assert!(battery.consistent);
    }

    let plane = OperatorSpec::hyperplane(vec![3.0, 4.0, 0.0], 5.0).unwrap();
    let reflection = plane.clone().relaxed(2.0).unwrap();
    let sampler = Sampler::uniform(399, 200).unwrap();
    let battery = check_fne_equivalence_battery(op_fn(&reflection), &structure, 0, &sampler, 1e-9).unwrap();
    for report in &battery.reports {
        assert!(!report.passed(), "{} unexpectedly passed", report.property);
        let witness = report.witness.as_ref().expect("refutation carries a witness");
        assert!(
            witness.violation > 1e-9,
            "{} witness does not re-verify",
            report.property
        );
        assert_eq!(report.max_violation, witness.violation);
    }
    assert!(battery.consistent);
    verdict(3, true, "20 projections pass all five conditions; reflection fails all five with witnesses");
}

#[test]
fn criterion_4_contraction_error_bounds() {
    let structure = BlockStructure::new(vec![1, 1]).unwrap();
    let x0 = ProductVector::zeros(&structure);
    let stop = StopRule::new(40, 0.0).unwrap();
    let history = picard(&OperatorSpec::ContractionExample, &x0, &stop).unwrap();
    for (k, x) in history.iterates.iter().enumerate() {
        let expected = 6.0 * (1.0 - 0.5f64.powi(k as i32));
        assert!(
            (x.block(0).unwrap()[0] - expected).abs() <= 1e-12,
            "closed form at k={k}"
        );
    }
    let bounds = contraction_bounds(&history, 0, 0.5).unwrap();
    for k in 1..=history.steps() {
        let err = (history.iterates[k].block(0).unwrap()[0] - 6.0).abs();
        let expected_a_priori = 6.0 * 0.5f64.powi(k as i32);
        assert!((bounds.a_priori[k - 1] - expected_a_priori).abs() <= 1e-12);
        assert!(bounds.a_priori[k - 1] >= err - 1e-12);
        assert!(bounds.a_posteriori[k - 1] >= err - 1e-12);
    }
    assert!(rate_check(&history, 0, 0.5, &[6.0]).unwrap().passed());
    verdict(4, true, "closed form, a priori = 6/2^k, a posteriori and rate bounds all hold for k <= 40");
}

#[test]
fn criterion_5_componental_counterexamples() {
    let structure = BlockStructure::new(vec![1, 1]).unwrap();
    let sampler = Sampler::uniform(505, 1000).unwrap();

    let swap = OperatorSpec::Swap { first: 0, second: 1 };
    assert!(check_nonexpansive_global(op_fn(&swap), &structure, &sampler, 1e-9)
        .unwrap()
        .passed());
    let refuted = check_j_nonexpansive(op_fn(&swap), &structure, 1, &sampler, 1e-9).unwrap();
    assert!(!refuted.passed());
    assert!(refuted.witness.is_some());

    let scaled_swap = OperatorSpec::ScaledSwapExample;
    let global = estimate_contraction_modulus_global(op_fn(&scaled_swap), &structure, &sampler).unwrap();
    assert!(global <= 0.5 + 1e-9, "global modulus {global}");
    let pinned = Sampler::uniform(506, 1000).unwrap().with_pinned_pairs(vec![(
        ProductVector::from_flat(&structure, &[0.0, 0.0]).unwrap(),
        ProductVector::from_flat(&structure, &[1.0, 5.0]).unwrap(),
    )]);
    let componental = estimate_contraction_modulus(op_fn(&scaled_swap), &structure, 1, &pinned).unwrap();
    assert!(componental >= 2.5, "componental modulus {componental}");
    verdict(
        5,
        true,
        &format!("swap refuted componentally with witness; moduli {global:.3} global vs {componental:.3} componental"),
    );
}

#[test]
fn criterion_6_drop_step_is_a_weighted_projection_combination() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let structure = BlockStructure::scalar(4).unwrap();
    for trial in 0..50 {
        let (system, _) = plant_consistent_system(5, 4, 0.6, 600 + trial).unwrap();
        let sparsity = system.column_sparsity().unwrap();
        let ops = system.hyperplane_operators().unwrap();
        let weights = drop_weights(&system, &sparsity, &DropWeightScheme::SupportNormalized).unwrap();
        let lambda = rng.gen_range(0.2..1.8);
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let via_drop = drop_step(&system, &sparsity, lambda, &x).unwrap();
        let xv = ProductVector::from_flat(&structure, &x).unwrap();
        let via_cw = general_cw_step(&ops, &weights, lambda, &xv, true).unwrap();
        for (a, b) in via_drop.iter().zip(via_cw.flatten()) {
            assert!((a - b).abs() <= 1e-13, "trial {trial}: {a} vs {b}");
        }
    }
    verdict(6, true, "50 random systems: sparsity-scaled sweep equals the weighted projection step to 1e-13");
}

#[test]
fn criterion_7_drop_convergence_and_monotonicity() {
    let (system, planted) = plant_consistent_system(200, 100, 0.05, FIXTURE_SEED).unwrap();
    let x0 = vec![0.0; system.col_count()];
    let stop = StopRule::new(10_000, 0.0).unwrap().with_residual_tol(1e-6).unwrap();
    let history = solve_drop(&system, 1.0, &x0, &stop, Some(&planted)).unwrap();
    assert!(history.steps() <= 10_000);
    assert!(history.final_residual().unwrap() <= 1e-6, "did not converge");

    // The stated componental clause — per-component distances to the plant
    // nonincreasing within 1e-10 — is refuted on this trajectory, and that is
    // the honest outcome: the componental decrease guarantee needs the atoms
    // to be componental cutters, while a full-space hyperplane projection
    // couples components through the normal and is not one. The refutation is
    // pinned below; what does hold (and is asserted) is Fejér monotonicity of
    // the full product-space distance.
    let d = history.per_component_distances.as_ref().unwrap();
    let mut worst_component = f64::NEG_INFINITY;
    let mut worst_full = f64::NEG_INFINITY;
    for k in 1..d.len() {
        for j in 0..system.col_count() {
            worst_component = worst_component.max(d[k][j] - d[k - 1][j]);
        }
        let full_prev: f64 = d[k - 1].iter().map(|v| v * v).sum::<f64>().sqrt();
        let full_cur: f64 = d[k].iter().map(|v| v * v).sum::<f64>().sqrt();
        worst_full = worst_full.max(full_cur - full_prev);
    }
    assert!(worst_full <= 1e-10, "full-space monotonicity violated: {worst_full}");
    assert!(
        worst_component > 1e-3,
        "componental refutation vanished; revisit the analysis: {worst_component}"
    );
    let componental_clause_pass = worst_component <= 1e-10;
    verdict(
        7,
        componental_clause_pass,
        &format!(
            "residual 1e-6 in {} iterations and full-space monotonicity hold; per-component monotonicity refuted (max increase {worst_component:.2e})",
            history.steps()
        ),
    );
}

#[test]
fn criterion_8_sparsity_scaling_reaches_the_target_first() {
    let (system, planted) = plant_consistent_system(200, 100, 0.05, FIXTURE_SEED).unwrap();
    let x0 = vec![0.0; system.col_count()];
    let stop = StopRule::new(10_000, 0.0).unwrap().with_residual_tol(1e-3).unwrap();
    let drop = solve_drop(&system, 1.0, &x0, &stop, Some(&planted)).unwrap();
    let cimmino = solve_cimmino(&system, None, 1.0, &x0, &stop, Some(&planted)).unwrap();
    let drop_k = drop.first_residual_below(1e-3).expect("drop reaches 1e-3");
    let cimmino_k = cimmino.first_residual_below(1e-3).expect("cimmino reaches 1e-3");
    assert!(drop_k < cimmino_k, "{drop_k} vs {cimmino_k}");
    assert_eq!(drop_k, PINNED_DROP_TO_1E3, "drop regression");
    assert_eq!(cimmino_k, PINNED_CIMMINO_TO_1E3, "cimmino regression");
    verdict(
        8,
        true,
        &format!("first residual <= 1e-3 at k={drop_k} (sparsity-scaled) vs k={cimmino_k} (equal weights)"),
    );
}

#[test]
fn criterion_9_reruns_are_byte_identical() {
    // solver CSV
    let run = || {
        let (system, planted) = plant_consistent_system(200, 100, 0.05, FIXTURE_SEED).unwrap();
        let x0 = vec![0.0; system.col_count()];
        let stop = StopRule::new(1_000, 0.0).unwrap().with_residual_tol(1e-3).unwrap();
        solve_drop(&system, 1.0, &x0, &stop, Some(&planted))
            .unwrap()
            .to_csv_string()
            .unwrap()
    };
    assert_eq!(run(), run());

    // property report JSON
    let report = || {
        let structure = BlockStructure::new(vec![1, 1]).unwrap();
        let sampler = Sampler::uniform(505, 1000).unwrap();
        let swap = OperatorSpec::Swap { first: 0, second: 1 };
        let r = check_j_nonexpansive(op_fn(&swap), &structure, 1, &sampler, 1e-9).unwrap();
        serde_json::to_string_pretty(&r).unwrap()
    };
    assert_eq!(report(), report());
    verdict(9, true, "repeated runs with identical seeds produce byte-identical CSV and JSON");
}
