//! Certifying (or refuting) componental properties of an operator with
//! seeded sampling and machine-checkable witnesses.

use cfx::checks::{
    check_fne_equivalence_battery, check_j_cutter, check_j_nonexpansive, check_j_sqne,
    check_nonexpansive_global, op_fn, FixedPointCertificate, Sampler,
};
use cfx::operators::OperatorSpec;
use cfx::space::{BlockStructure, ProductVector};

fn main() -> cfx::Result<()> {
    // --- a projection has every good property -------------------------------
    let structure = BlockStructure::new(vec![2])?;
    let plane = OperatorSpec::hyperplane(vec![3.0, 4.0], 5.0)?;
    let sampler = Sampler::uniform(42, 500)?;

    let battery = check_fne_equivalence_battery(op_fn(&plane), &structure, 0, &sampler, 1e-9)?;
    println!("equivalence battery for the projection:");
    for report in &battery.reports {
        println!(
            "  {:<28} {:?}  (max violation {:+.2e})",
            report.property, report.verdict, report.max_violation
        );
    }

    // a certified fixed point unlocks the cutter/quasi-nonexpansive family
    let z = ProductVector::from_flat(&structure, &[0.6, 0.8])?;
    let cert = FixedPointCertificate::new(vec![z], 1e-9);
    let cutter = check_j_cutter(op_fn(&plane), &structure, 0, &cert, &sampler, 1e-9)?;
    println!("cutter: {:?}", cutter.verdict);

    // the 1.5-relaxation trades firmness for a strong decrease with
    // rho = (2 - lambda)/lambda = 1/3
    let relaxed = plane.clone().relaxed(1.5)?;
    let sqne = check_j_sqne(op_fn(&relaxed), &structure, 0, 1.0 / 3.0, &cert, &sampler, 1e-8)?;
    println!("1.5-relaxation strongly quasi-nonexpansive at rho=1/3: {:?}", sqne.verdict);

    // --- a refutation comes with a witness ----------------------------------
    // the swap is a global isometry, yet component 0 of its image ignores
    // x_0 entirely, so no componental bound can hold
    let pair = BlockStructure::new(vec![1, 1])?;
    let swap = OperatorSpec::Swap { first: 0, second: 1 };
    let global = check_nonexpansive_global(op_fn(&swap), &pair, &sampler, 1e-9)?;
    let local = check_j_nonexpansive(op_fn(&swap), &pair, 0, &sampler, 1e-9)?;
    println!("swap globally nonexpansive: {:?}", global.verdict);
    println!("swap nonexpansive in component 0: {:?}", local.verdict);
    let w = local.witness.expect("failures carry witnesses");
    println!(
        "  witness: x = {:?}, y = {:?}, violation = {:.3}",
        w.x.flatten(),
        w.y.unwrap().flatten(),
        w.violation
    );

    // reports serialize for archival; reruns with the same seed are identical
    println!("--- full report JSON ---\n{}", serde_json::to_string_pretty(&global)?);
    Ok(())
}
