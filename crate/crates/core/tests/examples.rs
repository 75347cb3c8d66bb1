//! Every example must run to completion.

macro_rules! example {
    ($name:ident, $file:literal) => {
        #[path = $file]
        mod $name;
    };
}

example!(generalized_inverse, "../examples/generalized_inverse.rs");
example!(subspaces, "../examples/subspaces.rs");
example!(stable_perturbation, "../examples/stable_perturbation.rs");
example!(random_battery, "../examples/random_battery.rs");
example!(diagonal_operator, "../examples/diagonal_operator.rs");
example!(relative_bound, "../examples/relative_bound.rs");
example!(projector_formula, "../examples/projector_formula.rs");

#[test]
fn examples_run() {
    generalized_inverse::run_example().unwrap();
    subspaces::run_example().unwrap();
    stable_perturbation::run_example().unwrap();
    random_battery::run_example().unwrap();
    diagonal_operator::run_example().unwrap();
    relative_bound::run_example().unwrap();
    projector_formula::run_example().unwrap();
}
