//! The perturbed idempotents `P̄ = W_X⁻¹ P W_X` and `Q̄ = W_Y (T T⁺) W_Y⁻¹`,
//! and how `W_Y T⁺ W_Y⁻¹` compares with `T̄ G` on square instances.

use stabgi::oracle::{random_instance, ComplementMode, InstanceSpec, Regime};
use stabgi::perturb::{perturbed_projectors, qbar_discrepancy};

pub fn run_example() -> stabgi::Result<()> {
    for (seed, (m, n)) in [(1, (4, 4)), (2, (5, 3)), (3, (3, 3))] {
        let spec = InstanceSpec::new(m, n, 2, Regime::StableSmall, seed)
            .with_mode(ComplementMode::RandomOblique);
        let sys = random_instance(&spec)?;
        let p = perturbed_projectors(&sys)?;
        let q = qbar_discrepancy(&sys)?;
        println!("{m}x{n} rank 2, oblique complements");
        println!(
            "  ||P̄ - (I - G T̄)|| = {:.1e}, ||Q̄ - T̄ G|| = {:.1e}",
            p.pbar_identity_residual, p.qbar_identity_residual
        );
        match q.alternative_residual {
            Some(r) => println!("  ||W_Y T⁺ W_Y⁻¹ - T̄ G|| = {r:.3e}"),
            None => println!("  W_Y T⁺ W_Y⁻¹ is undefined for this shape"),
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("projector_formula example");
}
