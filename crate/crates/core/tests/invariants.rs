mod common;

use common::invariants;

#[test]
fn weights_stay_on_the_simplex() {
    invariants::simplex(48).unwrap();
}

#[test]
fn a_matrices_are_psd() {
    invariants::a_psd(256).unwrap();
}

#[test]
fn quadratic_gap_and_poisson_rates_are_nonnegative() {
    invariants::quad_gap_and_rates(512).unwrap();
}

#[test]
fn bases_are_pinned_monotone_and_convex() {
    invariants::basis_shape(128).unwrap();
}

#[test]
fn polygon_bounds_bracket_the_curve() {
    invariants::polygon_bounds(64).unwrap();
}

#[test]
fn ppse_is_at_least_ppv() {
    invariants::ppse_at_least_ppv(256).unwrap();
}

#[test]
fn runs_are_deterministic() {
    invariants::determinism(16).unwrap();
}
