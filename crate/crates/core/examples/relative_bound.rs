//! Relative bounds `||δT x|| <= a ||x|| + b ||T x||`: the multi-start search
//! for the smallest `a` and the resulting norm condition.

use stabgi::diagmodel::{diag_tbound, embed, DiagonalOperator};
use stabgi::geninv::moore_penrose;
use stabgi::perturb::{minimal_a, norm_condition, PerturbedSystem, MINIMAL_A_DEFAULT_STARTS};
use stabgi::Matrix;

pub fn run_example() -> stabgi::Result<()> {
    let t = DiagonalOperator::new(vec![1.0, 2.0, 4.0, 0.0])?;
    let d = DiagonalOperator::new(vec![0.3, -1.5, 0.5, 0.0])?;
    let sys = PerturbedSystem::new(moore_penrose(&embed(&t))?, embed(&d))?;
    for b in [0.0, 0.5, 1.0] {
        let found = minimal_a(&sys, b, MINIMAL_A_DEFAULT_STARTS, 1)?;
        println!(
            "b = {b}: search {:.6}, closed form {:.6}",
            found.value,
            diag_tbound(&t, &d, b)?
        );
    }

    // a general matrix pair
    let t = Matrix::from_rows(&[&[2.0, 1.0, 0.0], &[0.0, 1.0, 1.0]]);
    let dt = Matrix::from_rows(&[&[0.1, 0.0, -0.2], &[0.05, 0.1, 0.0]]);
    let sys = PerturbedSystem::new(moore_penrose(&t)?, dt)?;
    let b = 0.2;
    let a = minimal_a(&sys, b, MINIMAL_A_DEFAULT_STARTS, 1)?;
    println!("general pair: a(b = {b}) >= {:.6} (heuristic {})", a.value, a.heuristic);
    println!(
        "a ||T⁺|| + b c < 1: {}",
        norm_condition(&sys, a.value, b)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("relative_bound example");
}
