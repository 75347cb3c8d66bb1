//! A truncated diagonal operator `t_k = k` with perturbation `d_k = -k/2`,
//! analyzed in closed form and through the matrix pipeline.

use stabgi::diagmodel::{cross_validate, diag_tbound, DiagSpec, DiagonalOperator};

pub fn run_example() -> stabgi::Result<()> {
    let spec: DiagSpec = serde_json::from_str(
        r#"{
            "truncation": 8,
            "t": {"kind": "formula", "expr": "linear"},
            "d": {"kind": "formula", "expr": "linear", "alpha": -0.5},
            "tail_note": "t_k = k for all k"
        }"#,
    )
    .expect("valid spec");
    let (t, d) = spec.build(None)?;
    let cv = cross_validate(&t, &d)?;
    let a = &cv.diag;
    println!("truncation {}: stable {}, bijective {}", a.truncation, a.stable, a.bijective);
    println!("b_min = {}, c = {}, bc = {}", a.b_min, a.c, a.bc);
    println!("g_k = {:?}", a.g_entries);
    println!(
        "matrix pipeline agrees: {} (max G entry difference {:?})",
        cv.agree, cv.g_max_relative_diff
    );
    for b in [0.0, 0.25, 0.5] {
        println!("smallest a for b = {b}: {}", diag_tbound(&t, &d, b)?);
    }

    // nonzero perturbation on the zero pattern
    let t0 = DiagonalOperator::new(vec![0.0, 1.0, 2.0])?;
    let d0 = DiagonalOperator::new(vec![1.0, 0.0, 0.0])?;
    let cv0 = cross_validate(&t0, &d0)?;
    println!(
        "t = (0, 1, 2), d = (1, 0, 0): stable {}, matrix pipeline stable {}",
        cv0.diag.stable, cv0.matrix_stable
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("diagonal_operator example");
}
