//! The seeded random battery: every equivalence and identity checked on a
//! few hundred instances across all regimes and complement modes.

use stabgi::oracle::{random_instance, run_battery, BatteryConfig, InstanceSpec, Regime};
use stabgi::perturb::analyze;

pub fn run_example() -> stabgi::Result<()> {
    let report = run_battery(&BatteryConfig::new(300, 6, 2024));
    println!(
        "{} instances, {} excluded by the margin filter",
        report.instances_run, report.instances_excluded
    );
    println!(
        "dl1 agreement {}/{}, dl2 agreement {}/{}",
        report.dl1_agreement_count,
        report.kept(),
        report.dl2_agreement_count,
        report.dl2_applicable
    );
    for (regime, tally) in &report.by_regime {
        println!(
            "  {regime:18} run {:3}  stable {:3}  unstable {:3}",
            tally.run, tally.stable, tally.unstable
        );
    }
    println!("worst construction residual {:.2e}", report.gi_residual_max);
    println!("failures: {}", report.failures.len());

    // a single instance, reproducible from its spec
    let spec = InstanceSpec::new(5, 4, 2, Regime::NullHitting, 17);
    let sys = random_instance(&spec)?;
    let r = analyze(&sys)?;
    println!(
        "null-hitting 5x4 rank 2: rank T̄ = {}, stable = {}",
        r.rank_tbar, r.stable.value
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("random_battery example");
}
