//! Subspace arithmetic: sums, intersections with witnesses, complements and
//! the gap metric.

use stabgi::{Matrix, Subspace, DEFAULT_TOL};

pub fn run_example() -> stabgi::Result<()> {
    let u = Subspace::span(
        &Matrix::from_columns(4, &[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 1.0, 0.0]]),
        DEFAULT_TOL,
    )?;
    let v = Subspace::span(
        &Matrix::from_columns(4, &[vec![0.0, 1.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]]),
        DEFAULT_TOL,
    )?;

    let sum = u.sum(&v)?;
    let inter = u.intersect(&v)?;
    println!("dim U = {}, dim V = {}", u.dim(), v.dim());
    println!("dim(U + V) = {}, dim(U ∩ V) = {}", sum.dim(), inter.subspace.dim());
    println!("witness in U ∩ V: {:?}", inter.witness);

    let check = u.complement_check(&v)?;
    println!(
        "U, V complementary: {} (dimension deficit {}, but they intersect)",
        check.is_complement, check.deficit
    );

    let c = u.random_complement(3)?;
    println!("random complement of U complementary: {}", u.is_complement(&c)?);
    println!(
        "orthogonal complement taken twice equals U: {}",
        u.orthogonal_complement().orthogonal_complement().distance(&u).is_equal()
    );

    // a slightly tilted copy of U
    let eps = 1e-3;
    let tilted = Subspace::span(
        &Matrix::from_columns(4, &[vec![1.0, 0.0, 0.0, eps], vec![0.0, 1.0, 1.0, 0.0]]),
        DEFAULT_TOL,
    )?;
    let d = u.distance(&tilted);
    println!("gap between U and its tilt by {eps}: {:.3e} (equal: {})", d.value, d.is_equal());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("subspaces example");
}
