//! Generalized inverses of a rank-deficient matrix for three complement
//! choices: orthogonal (Moore-Penrose), prescribed, and random oblique.
//!
//! ```text
//! cargo run --example generalized_inverse
//! ```

use stabgi::geninv::{build_gi, moore_penrose, norm_c, ComplementChoice, GiBundle};
use stabgi::{Matrix, Subspace, DEFAULT_TOL};

fn show(label: &str, b: &GiBundle) {
    println!("{label}: rank {}, c = ||T S|| = {:.6}", b.rank, norm_c(b));
    for i in 0..b.s.rows() {
        let row: Vec<String> = b.s.row(i).iter().map(|v| format!("{v:9.5}")).collect();
        println!("  [{}]", row.join(" "));
    }
    let r = &b.residuals;
    println!(
        "  ||TST - T|| = {:.1e}, ||STS - S|| = {:.1e}, pass = {}",
        r.r1, r.r2, r.pass
    );
}

pub fn run_example() -> stabgi::Result<()> {
    // rank 2, 3 x 4
    let t = Matrix::from_rows(&[
        &[1.0, 2.0, 0.0, 1.0],
        &[0.0, 1.0, 1.0, 0.0],
        &[1.0, 3.0, 1.0, 1.0],
    ]);

    let mp = moore_penrose(&t)?;
    show("Moore-Penrose", &mp);

    // M complements N(T) in R^4, W complements R(T) in R^3
    let m = Subspace::span(
        &Matrix::from_columns(4, &[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]]),
        DEFAULT_TOL,
    )?;
    let w = Subspace::span(&Matrix::from_columns(3, &[vec![0.0, 0.0, 1.0]]), DEFAULT_TOL)?;
    let prescribed = build_gi(&t, &ComplementChoice::new(m, w))?;
    show("prescribed M, W", &prescribed);

    let oblique = build_gi(&t, &ComplementChoice::random(&t, 7, DEFAULT_TOL)?)?;
    show("random oblique", &oblique);

    // a subspace meeting N(T) is rejected with a witness vector
    let null = Subspace::null_of(&t, DEFAULT_TOL)?;
    let bad = ComplementChoice::new(null.clone(), ComplementChoice::orthogonal(&t, DEFAULT_TOL)?.w);
    match build_gi(&t, &bad) {
        Err(stabgi::Error::Complement { reason, witness, .. }) => {
            println!("rejected: {reason}; witness {witness:?}");
        }
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("generalized_inverse example");
}
