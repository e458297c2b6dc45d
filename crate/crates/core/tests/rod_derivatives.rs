mod common;

#[test]
fn gradient_matches_finite_differences() {
    let e = common::worst_gradient_error(7, 50);
    assert!(e <= 1e-6, "relative error {e:e}");
}

#[test]
fn hessian_matches_differenced_gradient() {
    let e = common::worst_hessian_error(11, 50);
    assert!(e <= 1e-5, "relative error {e:e}");
}
