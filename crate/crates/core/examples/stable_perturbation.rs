//! Perturbation analysis of `T = diag(1, 0)` under three perturbations: zero,
//! one that pushes the range into `N(T⁺)`, and a stable one.

use stabgi::geninv::moore_penrose;
use stabgi::perturb::{analyze, AnalysisReport, PerturbedSystem};
use stabgi::Matrix;

fn summary(label: &str, r: &AnalysisReport) {
    println!("{label}");
    println!(
        "  W_Y bijective {}, W_X bijective {}, stable {}",
        r.bijectivity.bij_y, r.bijectivity.bij_x, r.stable.value
    );
    println!("  dl1 conditions {:?}", r.dl1.values());
    if let Some(dl2) = &r.dl2 {
        println!("  dl2 conditions {:?}", dl2.values());
    }
    if let Some(g) = &r.g {
        println!(
            "  G = {:?}, certified {}, ||T̄GT̄ - T̄|| = {:.3}",
            g.matrix.as_slice(),
            g.certified,
            g.residuals.r1
        );
    }
    if let Some(w) = &r.stable.witness {
        println!("  witness in R(T̄) ∩ N(T⁺): {w:?}");
    }
    if let (Some(p), Some(q)) = (&r.pbar, &r.qbar) {
        println!("  P̄ = {:?}, Q̄ = {:?}", p.as_slice(), q.as_slice());
    }
}

pub fn run_example() -> stabgi::Result<()> {
    let t = Matrix::from_diag(&[1.0, 0.0]);
    for (label, dt) in [
        ("zero perturbation", [0.0, 0.0]),
        ("perturbation into N(T⁺)", [0.0, 0.5]),
        ("stable perturbation", [0.5, 0.0]),
    ] {
        let sys = PerturbedSystem::new(moore_penrose(&t)?, Matrix::from_diag(&dt))?;
        summary(label, &analyze(&sys)?);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("stable_perturbation example");
}
